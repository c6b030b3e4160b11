// Constraint-generation backends: a deterministic offline mock that answers
// from a bundled space-group frequency table, and an HTTP chat-completions
// client with retry/backoff. generate_constraints drives the two-stage
// space-group -> Wyckoff flow against either.

#ifndef XTALGEN_BACKEND_HPP_
#define XTALGEN_BACKEND_HPP_

#include <chrono>
#include <cstdlib>
#include <functional>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include <httplib.h>
#include <json.hpp>

#include "xtalgen/constraints.hpp"

namespace xtalgen {

struct BackendConfig {
  std::string base_url;
  std::string model = "default";
  double timeout_seconds = 30.0;
  int max_retries = 3;
  double temperature = 0.0;
  std::string auth_env_var;            // environment variable holding the token
  double backoff_base_seconds = 1.0;   // exponential backoff: base * 2^attempt

  void validate() const {
    if (!(timeout_seconds > 0))
      throw ConfigError("backend timeout must be positive");
    if (max_retries < 0)
      throw ConfigError("max_retries must be >= 0");
    if (backoff_base_seconds < 0)
      throw ConfigError("backoff base must be >= 0");
  }
};

class Backend {
 public:
  virtual ~Backend() = default;
  virtual std::string complete(const std::string& prompt) = 0;
  virtual std::string name() const = 0;
};

namespace detail {

// Searches per-element letter multisets whose multiplicities sum to
// scale * count_e, sharing fully-fixed letters at most once across the whole
// assignment. First fit in table order keeps the result deterministic.
inline bool assign_letters(const WyckoffTable& table, SpaceGroupId sg,
                           const std::vector<std::pair<std::string, int>>& counts,
                           int scale, Assignments& out) {
  const auto& positions = table.positions(sg);
  std::set<char> used_fixed;
  out.clear();

  std::function<bool(std::size_t, int, std::size_t)> fill =
      [&](std::size_t element, int remaining, std::size_t from) -> bool {
    if (remaining == 0) {
      if (element + 1 == counts.size())
        return true;
      return fill(element + 1, counts[element + 1].second * scale, 0);
    }
    for (std::size_t li = from; li < positions.size(); ++li) {
      const WyckoffPosition& pos = positions[li];
      if (pos.multiplicity > remaining)
        continue;
      bool fixed = pos.fully_fixed();
      if (fixed && used_fixed.count(pos.letter))
        continue;
      if (fixed)
        used_fixed.insert(pos.letter);
      out.push_back({counts[element].first, pos.letter});
      // a free position may repeat (distinct parameters), a fixed one cannot
      if (fill(element, remaining - pos.multiplicity, fixed ? li + 1 : li))
        return true;
      out.pop_back();
      if (fixed)
        used_fixed.erase(pos.letter);
    }
    return false;
  };
  return fill(0, counts.front().second * scale, 0);
}

inline std::optional<Assignments> feasible_assignment(
    const WyckoffTable& table, SpaceGroupId sg,
    const std::vector<std::pair<std::string, int>>& counts, int max_atoms = 64) {
  int per_unit = 0;
  for (const auto& [el, c] : counts)
    per_unit += c;
  for (int scale = 1; scale <= 8; ++scale) {
    if (per_unit * scale > max_atoms)
      break;
    Assignments a;
    if (assign_letters(table, sg, counts, scale, a))
      return a;
  }
  return std::nullopt;
}

// bundled frequency ranking (most common groups first) per element count
inline const std::vector<int>& frequent_groups(std::size_t n_elements) {
  static const std::vector<int> k1{225, 229, 194, 221, 166};
  static const std::vector<int> k2{225, 221, 194, 139, 216, 62};
  static const std::vector<int> k3{221, 62, 225, 139, 194, 12};
  static const std::vector<int> k4{12, 62, 14, 166, 2};
  static const std::vector<int> k5{2, 12, 14, 62, 1};
  switch (n_elements) {
    case 1: return k1;
    case 2: return k2;
    case 3: return k3;
    case 4: return k4;
    default: return k5;
  }
}

struct ParsedPrompt {
  std::vector<std::pair<std::string, int>> composition;
  bool wyckoff_mode = false;
  int space_group = 0;  // set in wyckoff mode
};

inline ParsedPrompt parse_prompt_text(const std::string& prompt) {
  ParsedPrompt out;
  auto line_after = [&](const std::string& key) -> std::string {
    std::size_t pos = prompt.find(key);
    if (pos == std::string::npos)
      return "";
    pos += key.size();
    std::size_t end = prompt.find('\n', pos);
    std::string line = prompt.substr(pos, end == std::string::npos ? end : end - pos);
    while (!line.empty() && line.front() == ' ')
      line.erase(line.begin());
    return line;
  };
  std::string comp = line_after("composition:");
  if (comp.empty())
    throw ParseError("mock backend: prompt lacks a composition line");
  if (comp.find(',') != std::string::npos) {
    std::size_t start = 0;
    while (start < comp.size()) {
      std::size_t comma = comp.find(',', start);
      std::string el = comp.substr(start, comma == std::string::npos ? comma : comma - start);
      while (!el.empty() && el.front() == ' ') el.erase(el.begin());
      while (!el.empty() && el.back() == ' ') el.pop_back();
      if (!el.empty())
        out.composition.push_back({el, 1});
      if (comma == std::string::npos)
        break;
      start = comma + 1;
    }
  } else {
    out.composition = parse_formula(comp);
  }
  if (prompt.find("candidate wyckoff letters:") != std::string::npos) {
    out.wyckoff_mode = true;
    std::string sg_line = line_after("space group:");
    out.space_group = std::stoi(sg_line);
  }
  return out;
}

}  // namespace detail

// Offline backend: a pure function of (prompt text, seed). Space groups come
// from the frequency ranking for the request's element count, restricted to
// groups whose Wyckoff multiplicities can realize the composition; P1 is the
// always-feasible fallback.
class MockBackend : public Backend {
 public:
  MockBackend(const WyckoffTable& table, std::uint64_t seed = 0)
      : table_(table), seed_(seed) {}

  std::string name() const override { return "mock"; }

  std::string complete(const std::string& prompt) override {
    detail::ParsedPrompt parsed = detail::parse_prompt_text(prompt);
    if (!parsed.wyckoff_mode) {
      std::vector<int> feasible;
      for (int sg : detail::frequent_groups(parsed.composition.size()))
        if (detail::feasible_assignment(table_, SpaceGroupId(sg), parsed.composition))
          feasible.push_back(sg);
      if (feasible.empty())
        feasible.push_back(1);  // the general position realizes any composition
      // stay among the top-ranked groups; the seed only adds mild variety
      int pick = feasible[seed_ % std::min<std::size_t>(feasible.size(), 3)];
      return "The most suitable space group is " + std::to_string(pick) + ".";
    }
    SpaceGroupId sg(parsed.space_group);
    auto assignment = detail::feasible_assignment(table_, sg, parsed.composition);
    if (!assignment)
      return "no suitable wyckoff assignment found";
    return format_wyckoff_answer(*assignment, table_, sg);
  }

 private:
  const WyckoffTable& table_;
  std::uint64_t seed_;
};

// POST {base_url}/chat/completions with the OpenAI-style body; bearer token
// read from the configured environment variable. Transport failures retry
// with exponential backoff and finally raise TransportError.
class HttpBackend : public Backend {
 public:
  explicit HttpBackend(BackendConfig config) : config_(std::move(config)) {
    config_.validate();
    if (config_.base_url.empty())
      throw ConfigError("http backend needs a base_url");
  }

  std::string name() const override { return "http"; }

  std::string complete(const std::string& prompt) override {
    nlohmann::json body{
        {"model", config_.model},
        {"messages", {{{"role", "user"}, {"content", prompt}}}},
        {"temperature", config_.temperature},
    };
    httplib::Headers headers;
    if (!config_.auth_env_var.empty()) {
      const char* token = std::getenv(config_.auth_env_var.c_str());
      if (token && *token)
        headers.emplace("Authorization", std::string("Bearer ") + token);
    }
    std::string last_error;
    for (int attempt = 0; attempt <= config_.max_retries; ++attempt) {
      if (attempt > 0) {
        double seconds = config_.backoff_base_seconds * std::pow(2.0, attempt - 1);
        std::this_thread::sleep_for(std::chrono::duration<double>(seconds));
      }
      httplib::Client client(config_.base_url);
      client.set_connection_timeout(std::chrono::duration<double>(config_.timeout_seconds));
      client.set_read_timeout(std::chrono::duration<double>(config_.timeout_seconds));
      auto res = client.Post("/chat/completions", headers, body.dump(), "application/json");
      if (!res) {
        last_error = "connection failed: " + httplib::to_string(res.error());
        continue;
      }
      if (res->status >= 500) {
        last_error = "server status " + std::to_string(res->status);
        continue;
      }
      if (res->status != 200)
        throw TransportError("backend returned status " + std::to_string(res->status));
      try {
        nlohmann::json j = nlohmann::json::parse(res->body);
        return j.at("choices").at(0).at("message").at("content").get<std::string>();
      } catch (const nlohmann::json::exception& e) {
        throw TransportError(std::string("malformed backend response: ") + e.what());
      }
    }
    throw TransportError("backend unreachable after " +
                         std::to_string(config_.max_retries + 1) + " attempts: " + last_error);
  }

 private:
  BackendConfig config_;
};

struct ConstraintResult {
  SpaceGroupId space_group{1};
  Assignments assignments;
  std::map<std::string, int> ratio;  // gcd-reduced, element mode only
  bool has_ratio = false;
  std::vector<std::pair<std::string, std::string>> transcripts;  // (prompt, response)
};

// Two-stage generation: space-group prompt, then Wyckoff prompt with
// candidates. Each stage retries parse failures up to max_retries; transport
// errors propagate as-is.
inline ConstraintResult generate_constraints(const WyckoffTable& table,
                                             const ConstraintRequest& req, Backend& backend,
                                             const BackendConfig& config) {
  req.validate();
  config.validate();
  ConstraintResult result;

  auto run_stage = [&](const std::string& prompt, auto parse) {
    std::string last_error;
    for (int attempt = 0; attempt <= config.max_retries; ++attempt) {
      std::string response = backend.complete(prompt);
      result.transcripts.push_back({prompt, response});
      try {
        parse(response);
        return;
      } catch (const ParseError& e) {
        last_error = e.what();
      }
    }
    throw BackendError("constraint generation failed after " +
                       std::to_string(config.max_retries + 1) + " attempts; last: " +
                       last_error + "; transcript: '" +
                       result.transcripts.back().second + "'");
  };

  std::optional<SpaceGroupId> sg;
  RenderedPrompt sg_prompt = render_space_group_prompt(req);
  run_stage(sg_prompt.text(),
            [&](const std::string& response) { sg = parse_space_group_response(response); });
  result.space_group = *sg;

  std::vector<std::string> elements;
  for (const auto& [el, count] : req.composition)
    elements.push_back(el);

  RenderedPrompt wy_prompt = render_wyckoff_prompt(req, *sg, table);
  run_stage(wy_prompt.text(), [&](const std::string& response) {
    Assignments parsed = parse_wyckoff_response(response, elements, table, *sg);
    // enforce the result invariants: full element coverage and, in formula
    // mode, multiplicity sums proportional to the requested counts
    std::map<std::string, int> sums;
    for (const auto& [el, letter] : parsed)
      sums[el] += table.position(*sg, letter).multiplicity;
    if (int(sums.size()) != int(req.composition.size()))
      throw ParseError("assignment does not cover every requested element");
    if (req.formula_mode) {
      long scale = -1;
      for (const auto& [el, count] : req.composition) {
        auto it = sums.find(el);
        if (it == sums.end() || it->second % count != 0)
          throw ParseError("multiplicities not proportional to the formula");
        long s = it->second / count;
        if (scale < 0)
          scale = s;
        else if (s != scale)
          throw ParseError("multiplicities not proportional to the formula");
      }
    }
    result.assignments = std::move(parsed);
    if (!req.formula_mode) {
      int g = 0;
      for (const auto& [el, sum] : sums)
        g = std::gcd(g, sum);
      for (const auto& [el, sum] : sums)
        result.ratio[el] = sum / g;
      result.has_ratio = true;
    }
  });
  return result;
}

}  // namespace xtalgen

#endif  // XTALGEN_BACKEND_HPP_
