#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <atomic>
#include <cstdlib>
#include <thread>

#include "xtalgen/backend.hpp"

using namespace xtalgen;

namespace {

struct LocalServer {
  httplib::Server server;
  std::thread thread;
  int port = 0;

  explicit LocalServer(httplib::Server::Handler handler) {
    server.Post("/chat/completions", std::move(handler));
    port = server.bind_to_any_port("127.0.0.1");
    REQUIRE(port > 0);
    thread = std::thread([this] { server.listen_after_bind(); });
    server.wait_until_ready();
  }

  ~LocalServer() {
    server.stop();
    thread.join();
  }

  std::string url() const { return "http://127.0.0.1:" + std::to_string(port); }
};

std::string completion_body(const std::string& content) {
  return nlohmann::json{{"choices", {{{"message", {{"content", content}}}}}}}.dump();
}

BackendConfig fast_config(const std::string& url) {
  BackendConfig c;
  c.base_url = url;
  c.model = "test-model";
  c.timeout_seconds = 5;
  c.max_retries = 2;
  c.backoff_base_seconds = 0.001;
  return c;
}

}  // namespace

TEST_CASE("http backend posts the chat-completions shape and reads the reply") {
  std::atomic<bool> saw_auth{false};
  std::atomic<bool> body_ok{false};
  LocalServer server([&](const httplib::Request& req, httplib::Response& res) {
    auto it = req.headers.find("Authorization");
    if (it != req.headers.end() && it->second == "Bearer sekrit-token")
      saw_auth = true;
    nlohmann::json j = nlohmann::json::parse(req.body);
    body_ok = j.at("model") == "test-model" && j.at("temperature") == 0.0 &&
              j.at("messages").at(0).at("role") == "user" &&
              j.at("messages").at(0).at("content").get<std::string>().find(
                  "composition") != std::string::npos;
    res.set_content(completion_body("space group: 42"), "application/json");
  });

  setenv("XTALGEN_TEST_TOKEN", "sekrit-token", 1);
  BackendConfig config = fast_config(server.url());
  config.auth_env_var = "XTALGEN_TEST_TOKEN";
  HttpBackend backend(config);
  std::string reply = backend.complete("### Input:\ncomposition: NaCl\n");
  CHECK(reply == "space group: 42");
  CHECK(saw_auth.load());
  CHECK(body_ok.load());
}

TEST_CASE("http backend retries transient server errors with backoff") {
  std::atomic<int> calls{0};
  LocalServer server([&](const httplib::Request&, httplib::Response& res) {
    if (++calls <= 2) {
      res.status = 503;
      res.set_content("busy", "text/plain");
    } else {
      res.set_content(completion_body("space group: 7"), "application/json");
    }
  });
  HttpBackend backend(fast_config(server.url()));
  CHECK(backend.complete("composition: X") == "space group: 7");
  CHECK(calls.load() == 3);
}

TEST_CASE("persistent failures surface as transport errors") {
  std::atomic<int> calls{0};
  LocalServer server([&](const httplib::Request&, httplib::Response& res) {
    ++calls;
    res.status = 500;
  });
  HttpBackend backend(fast_config(server.url()));
  CHECK_THROWS_AS(backend.complete("x"), TransportError);
  CHECK(calls.load() == 3);  // max_retries + 1

  // a 4xx is not retried
  std::atomic<int> calls4{0};
  LocalServer bad([&](const httplib::Request&, httplib::Response& res) {
    ++calls4;
    res.status = 401;
  });
  HttpBackend backend4(fast_config(bad.url()));
  CHECK_THROWS_AS(backend4.complete("x"), TransportError);
  CHECK(calls4.load() == 1);
}

TEST_CASE("unreachable backends raise transport errors") {
  BackendConfig config = fast_config("http://127.0.0.1:1");
  config.timeout_seconds = 0.2;
  HttpBackend backend(config);
  CHECK_THROWS_AS(backend.complete("x"), TransportError);
}

TEST_CASE("malformed completion payloads raise transport errors") {
  LocalServer server([&](const httplib::Request&, httplib::Response& res) {
    res.set_content("{\"unexpected\": true}", "application/json");
  });
  HttpBackend backend(fast_config(server.url()));
  CHECK_THROWS_AS(backend.complete("x"), TransportError);
}

TEST_CASE("two-stage generation works over http end to end") {
  WyckoffTable table =
      WyckoffTable::load(std::string(XTALGEN_SOURCE_DATA_DIR) + "/wyckoff_table.v1");
  LocalServer server([&](const httplib::Request& req, httplib::Response& res) {
    nlohmann::json j = nlohmann::json::parse(req.body);
    std::string prompt = j.at("messages").at(0).at("content").get<std::string>();
    if (prompt.find("candidate wyckoff letters:") != std::string::npos)
      res.set_content(completion_body("Na[4a] Cl[4b]"), "application/json");
    else
      res.set_content(completion_body("The most suitable space group is 225."),
                      "application/json");
  });
  HttpBackend backend(fast_config(server.url()));
  ConstraintRequest req;
  req.formula_mode = true;
  req.composition = {{"Na", 1}, {"Cl", 1}};
  req.properties = {{PropertyKind::BandGap, 5.9}};
  BackendConfig config = fast_config(server.url());
  ConstraintResult res = generate_constraints(table, req, backend, config);
  CHECK(res.space_group.index == 225);
  REQUIRE(res.assignments.size() == 2);
  CHECK(res.assignments[0] == std::pair<std::string, char>{"Na", 'a'});
  CHECK(res.assignments[1] == std::pair<std::string, char>{"Cl", 'b'});
  CHECK(res.transcripts.size() == 2);
}
