// Model checkpoint container: JSON with a config header (dims, schedule,
// property kind, RBF grid) followed by named weight tensors.

#ifndef XTALGEN_CHECKPOINT_HPP_
#define XTALGEN_CHECKPOINT_HPP_

#include <fstream>
#include <string>

#include <json.hpp>

#include "xtalgen/denoiser.hpp"
#include "xtalgen/schedule.hpp"

namespace xtalgen {

struct Checkpoint {
  DenoiserParams params;
  NoiseSchedule schedule;
};

inline constexpr const char* kCheckpointFormat = "xtalgen.ckpt.v1";

inline void save_checkpoint(const std::string& path, const DenoiserParams& params,
                            const NoiseSchedule& schedule) {
  params.validate();
  schedule.validate();
  const DenoiserConfig& c = params.config;
  nlohmann::json j;
  j["format"] = kCheckpointFormat;
  j["config"] = {
      {"atom_dim", c.atom_dim},       {"prop_dim", c.prop_dim},
      {"time_dim", c.time_dim},       {"hidden", c.hidden},
      {"n_layers", c.n_layers},       {"n_heads", c.n_heads},
      {"fourier_k", c.fourier_k},     {"property_kind", property_kind_name(c.property_kind)},
      {"p_min", c.grid.p_min},        {"p_max", c.grid.p_max},
      {"sigma", c.grid.sigma},
  };
  j["schedule"] = {{"T", schedule.T}, {"beta", schedule.beta}, {"sigma", schedule.sigma}};
  nlohmann::json jt;
  for (const auto& [name, tensor] : params.tensors)
    jt[name] = {{"rows", tensor.rows}, {"cols", tensor.cols}, {"data", tensor.v}};
  j["tensors"] = std::move(jt);
  std::ofstream out(path);
  if (!out)
    throw DataError("cannot write checkpoint: " + path);
  out << j.dump() << '\n';
}

inline Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in)
    throw DataError("cannot open checkpoint: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw DataError("bad checkpoint: " + std::string(e.what()));
  }
  if (!j.contains("format") || j.at("format").get<std::string>() != kCheckpointFormat)
    throw DataError("unsupported checkpoint format");
  Checkpoint ck;
  const auto& jc = j.at("config");
  DenoiserConfig c;
  c.atom_dim = jc.at("atom_dim").get<int>();
  c.prop_dim = jc.at("prop_dim").get<int>();
  c.time_dim = jc.at("time_dim").get<int>();
  c.hidden = jc.at("hidden").get<int>();
  c.n_layers = jc.at("n_layers").get<int>();
  c.n_heads = jc.at("n_heads").get<int>();
  c.fourier_k = jc.at("fourier_k").get<int>();
  c.property_kind = property_kind_from_name(jc.at("property_kind").get<std::string>());
  c.grid = {jc.at("p_min").get<double>(), jc.at("p_max").get<double>(),
            jc.at("sigma").get<double>()};
  ck.params.config = c;
  for (const auto& [name, jt] : j.at("tensors").items()) {
    Tensor t(jt.at("rows").get<int>(), jt.at("cols").get<int>());
    auto data = jt.at("data").get<std::vector<double>>();
    if (data.size() != t.size())
      throw DataError("checkpoint tensor size mismatch: " + name);
    t.v = std::move(data);
    ck.params.tensors.emplace(name, std::move(t));
  }
  try {
    ck.params.validate();
  } catch (const ConfigError& e) {
    throw DataError(std::string("checkpoint rejected: ") + e.what());
  }
  const auto& js = j.at("schedule");
  ck.schedule.T = js.at("T").get<int>();
  ck.schedule.beta = js.at("beta").get<std::vector<double>>();
  ck.schedule.sigma = js.at("sigma").get<std::vector<double>>();
  try {
    ck.schedule.validate();
  } catch (const ConfigError& e) {
    throw DataError(std::string("checkpoint rejected: ") + e.what());
  }
  return ck;
}

}  // namespace xtalgen

#endif  // XTALGEN_CHECKPOINT_HPP_
