// The trainable denoiser: property/time/relative-coordinate embeddings,
// message passing over site pairs with the reduced lattice representation in
// every message, multi-head cross-attention fusion, and the two output
// heads (lattice noise, coordinate score).

#ifndef XTALGEN_DENOISER_HPP_
#define XTALGEN_DENOISER_HPP_

#include <map>
#include <string>
#include <vector>

#include "xtalgen/autograd.hpp"
#include "xtalgen/elements.hpp"
#include "xtalgen/util.hpp"

namespace xtalgen {

enum class PropertyKind { BandGap, FormationEnergy };

inline const char* property_kind_name(PropertyKind k) {
  return k == PropertyKind::BandGap ? "band_gap" : "formation_energy";
}

inline const char* property_unit(PropertyKind k) {
  return k == PropertyKind::BandGap ? "eV" : "eV/atom";
}

inline PropertyKind property_kind_from_name(const std::string& name) {
  if (name == "band_gap") return PropertyKind::BandGap;
  if (name == "formation_energy") return PropertyKind::FormationEnergy;
  throw ConfigError("unknown property kind: " + name);
}

struct PropertyTarget {
  PropertyKind kind;
  double value;
};

// RBF grid between preset property bounds with spacing sigma.
struct PropertyGrid {
  double p_min = 0.0;
  double p_max = 1.0;
  double sigma = 1.0 / 127.0;

  void validate() const {
    if (!(p_min < p_max))
      throw ConfigError("property grid needs p_min < p_max");
    if (!(sigma > 0.0))
      throw ConfigError("property grid needs sigma > 0");
    if (length() < 2)
      throw ConfigError("property grid needs at least 2 centers");
  }

  // guard digit keeps span/sigma ratios that are mathematically integral exact
  int length() const { return int(std::floor((p_max - p_min) / sigma + 1e-9)) + 1; }

  // sigma = span/(centers-1) gives exactly `centers` grid points
  static PropertyGrid from_range(double lo, double hi, int centers = 128) {
    if (!(hi > lo))
      hi = lo + 1.0;  // degenerate corpus: widen to a unit span
    return PropertyGrid{lo, hi, (hi - lo) / (centers - 1)};
  }
};

// Gaussian RBF expansion of a property value over the grid. Values outside
// [p_min, p_max] are allowed; the Gaussians simply decay.
inline std::vector<double> rbf_property_embedding(double p, const PropertyGrid& grid) {
  grid.validate();
  if (!std::isfinite(p))
    throw DataError("property value must be finite");
  int m = grid.length();
  std::vector<double> out(m);
  double inv = 1.0 / (2.0 * grid.sigma * grid.sigma);
  for (int j = 0; j < m; ++j) {
    double d = p - grid.p_min - j * grid.sigma;
    out[j] = std::exp(-d * d * inv);
  }
  return out;
}

// Transformer-style interleaved sin/cos ladder with base 10000.
inline std::vector<double> sinusoidal_time_embedding(int t, int dim) {
  if (dim <= 0 || dim % 2 != 0)
    throw ConfigError("time embedding dimension must be positive and even");
  std::vector<double> out(dim);
  int half = dim / 2;
  for (int i = 0; i < half; ++i) {
    double freq = std::pow(10000.0, -double(i) / half);
    out[2 * i] = std::sin(t * freq);
    out[2 * i + 1] = std::cos(t * freq);
  }
  return out;
}

// Periodic embedding of a relative fractional coordinate: per axis,
// interleaved [sin(2 pi m x), cos(2 pi m x)] for m = 1..K/2; length 3K.
inline std::vector<double> fourier_relative_embedding(const Vec3& delta, int K) {
  if (K <= 0 || K % 2 != 0)
    throw ConfigError("fourier base count K must be positive and even");
  constexpr double kTwoPi = 6.283185307179586476925287;
  std::vector<double> out(3 * K);
  for (int axis = 0; axis < 3; ++axis) {
    double x = wrap01(delta[axis]);  // integer frequencies: wrap keeps periodicity tight
    for (int m = 1; m <= K / 2; ++m) {
      out[axis * K + 2 * (m - 1)] = std::sin(kTwoPi * m * x);
      out[axis * K + 2 * (m - 1) + 1] = std::cos(kTwoPi * m * x);
    }
  }
  return out;
}

struct DenoiserConfig {
  int atom_dim = 512;
  int prop_dim = 128;
  int time_dim = 128;
  int hidden = 512;
  int n_layers = 6;
  int n_heads = 2;
  int fourier_k = 128;
  PropertyKind property_kind = PropertyKind::BandGap;
  PropertyGrid grid;

  void validate() const {
    if (atom_dim < 1 || prop_dim < 1 || time_dim < 1 || hidden < 1 || n_layers < 1)
      throw ConfigError("denoiser dimensions must be positive");
    if (time_dim % 2 != 0)
      throw ConfigError("time embedding dimension must be even");
    if (fourier_k % 2 != 0)
      throw ConfigError("fourier base count must be even");
    if (n_heads < 1 || hidden % n_heads != 0)
      throw ConfigError("hidden width must divide evenly into heads");
    grid.validate();
  }

  // desk-scale profile used by tests
  static DenoiserConfig tiny() {
    DenoiserConfig c;
    c.atom_dim = 32;
    c.prop_dim = 16;
    c.time_dim = 16;
    c.hidden = 64;
    c.n_layers = 2;
    c.n_heads = 2;
    c.fourier_k = 8;
    return c;
  }
};

constexpr int kLatticePad = 6;  // lattice DOF padded to the triclinic maximum

struct DenoiserParams {
  DenoiserConfig config;
  std::map<std::string, Tensor> tensors;

  Tensor& t(const std::string& name) {
    auto it = tensors.find(name);
    if (it == tensors.end())
      throw ConfigError("missing tensor: " + name);
    return it->second;
  }
  const Tensor& t(const std::string& name) const {
    auto it = tensors.find(name);
    if (it == tensors.end())
      throw ConfigError("missing tensor: " + name);
    return it->second;
  }

  static DenoiserParams init(const DenoiserConfig& config, std::uint64_t seed) {
    config.validate();
    DenoiserParams p;
    p.config = config;
    auto shape = expected_shapes(config);
    for (const auto& [name, rc] : shape)
      p.tensors.emplace(name, Tensor(rc.first, rc.second));
    Rng rng(derive_seed(seed, "denoiser-init"));
    for (auto& [name, tensor] : p.tensors) {
      if (name.find(".b") != std::string::npos)
        continue;  // biases start at zero
      if (name.rfind("head_", 0) == 0)
        continue;  // zero-initialized heads keep the untrained reverse chain unbiased
      double bound = std::sqrt(6.0 / (tensor.rows + tensor.cols));
      for (double& v : tensor.v)
        v = rng.uniform(-bound, bound);
    }
    return p;
  }

  static std::map<std::string, std::pair<int, int>> expected_shapes(
      const DenoiserConfig& c) {
    std::map<std::string, std::pair<int, int>> s;
    s["atom_table"] = {int(kElementSymbols.size()), c.atom_dim};
    s["prop_mlp.w1"] = {c.grid.length(), c.prop_dim};
    s["prop_mlp.b1"] = {1, c.prop_dim};
    s["prop_mlp.w2"] = {c.prop_dim, c.prop_dim};
    s["prop_mlp.b2"] = {1, c.prop_dim};
    s["phi_in.w"] = {c.atom_dim + c.prop_dim + c.time_dim, c.hidden};
    s["phi_in.b"] = {1, c.hidden};
    for (int l = 0; l < c.n_layers; ++l) {
      std::string p = "layer" + std::to_string(l) + ".";
      s[p + "msg.w1"] = {2 * c.hidden + kLatticePad + 3 * c.fourier_k, c.hidden};
      s[p + "msg.b1"] = {1, c.hidden};
      s[p + "msg.w2"] = {c.hidden, c.hidden};
      s[p + "msg.b2"] = {1, c.hidden};
      s[p + "attn.wq"] = {c.hidden, c.hidden};
      s[p + "attn.wk"] = {c.hidden, c.hidden};
      s[p + "attn.wv"] = {c.hidden, c.hidden};
      s[p + "attn.wo"] = {c.hidden, c.hidden};
      s[p + "attn.bo"] = {1, c.hidden};
    }
    s["head_k.w"] = {c.hidden, kLatticePad};
    s["head_k.b"] = {1, kLatticePad};
    s["head_f.w"] = {c.hidden, 3};
    s["head_f.b"] = {1, 3};
    return s;
  }

  void validate() const {
    config.validate();
    auto shape = expected_shapes(config);
    if (shape.size() != tensors.size())
      throw ConfigError("unexpected tensor count in denoiser parameters");
    for (const auto& [name, rc] : shape) {
      const Tensor& tensor = t(name);
      if (tensor.rows != rc.first || tensor.cols != rc.second)
        throw ConfigError("tensor shape mismatch: " + name);
      for (double v : tensor.v)
        if (!std::isfinite(v))
          throw ConfigError("non-finite weight in tensor: " + name);
    }
  }
};

struct DenoiserInput {
  std::vector<std::string> species;            // one entry per orbit site
  double property_value = 0.0;
  int t = 1;
  std::vector<double> k_t;                     // reduced lattice state
  std::vector<Vec3> f_t;                       // free parameters, masked slots 0
  std::vector<std::array<bool, 3>> free_mask;  // per site
};

struct DenoiserOutput {
  std::vector<double> eps_k;   // matches k_t length
  std::vector<Vec3> eps_f;     // masked entries exactly 0
};

struct DenoiserNodes {
  int eps_k6 = -1;  // 1 x 6 padded lattice head
  int eps_f = -1;   // n x 3 masked coordinate head
};

namespace detail {

// Builds C = phi_in(f_atom | f_prop | f_time) on the tape; `leaf` resolves a
// named parameter tensor to its tape id.
template <typename LeafFn>
int input_features_tape(Tape& tape, const DenoiserParams& params,
                        const std::vector<std::string>& species, double property_value,
                        int t, LeafFn&& leaf) {
  const DenoiserConfig& c = params.config;
  const int n = int(species.size());
  std::vector<int> zeros(n, 0);
  std::vector<int> atom_idx(n);
  for (int i = 0; i < n; ++i)
    atom_idx[i] = atomic_number(species[i]) - 1;
  int atoms = tape.gather_rows(leaf("atom_table"), atom_idx);

  Tensor rbf_row(1, c.grid.length());
  {
    std::vector<double> r = rbf_property_embedding(property_value, c.grid);
    for (int j = 0; j < c.grid.length(); ++j)
      rbf_row.at(0, j) = r[j];
  }
  int prop = tape.leaf(rbf_row);
  prop = tape.add_row(tape.matmul(prop, leaf("prop_mlp.w1")), leaf("prop_mlp.b1"));
  prop = tape.silu(prop);
  prop = tape.add_row(tape.matmul(prop, leaf("prop_mlp.w2")), leaf("prop_mlp.b2"));
  int prop_sites = tape.gather_rows(prop, zeros);

  Tensor time_row(1, c.time_dim);
  {
    std::vector<double> e = sinusoidal_time_embedding(t, c.time_dim);
    for (int j = 0; j < c.time_dim; ++j)
      time_row.at(0, j) = e[j];
  }
  int time_sites = tape.gather_rows(tape.leaf(time_row), zeros);

  return tape.add_row(
      tape.matmul(tape.concat_cols({atoms, prop_sites, time_sites}), leaf("phi_in.w")),
      leaf("phi_in.b"));
}

}  // namespace detail

// Builds the forward graph on the tape. When leaf_ids is given, parameter
// leaves are recorded there for gradient readback.
inline DenoiserNodes denoiser_forward_tape(Tape& tape, const DenoiserParams& params,
                                           const DenoiserInput& in,
                                           std::map<std::string, int>* leaf_ids = nullptr) {
  const DenoiserConfig& c = params.config;
  const int n = int(in.species.size());
  if (n < 1)
    throw ConfigError("denoiser needs at least one site");
  if (in.f_t.size() != std::size_t(n) || in.free_mask.size() != std::size_t(n))
    throw ConfigError("coordinate state shape mismatch");
  if (int(in.k_t.size()) > kLatticePad)
    throw ConfigError("lattice state longer than the padded width");

  std::map<std::string, int> leaves;
  auto P = [&](const std::string& name) {
    auto it = leaves.find(name);
    if (it != leaves.end())
      return it->second;
    int id = tape.leaf(params.t(name));
    leaves.emplace(name, id);
    return id;
  };

  int C = detail::input_features_tape(tape, params, in.species, in.property_value, in.t, P);

  // constant pair features: padded lattice state and psi_FT(f_j - f_i)
  std::vector<int> pair_i(n * n), pair_j(n * n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      pair_i[i * n + j] = i;
      pair_j[i * n + j] = j;
    }
  Tensor kpad_row(1, kLatticePad);
  for (std::size_t i = 0; i < in.k_t.size(); ++i)
    kpad_row.at(0, int(i)) = in.k_t[i];
  int kpad_pairs = tape.gather_rows(tape.leaf(kpad_row), std::vector<int>(n * n, 0));

  Tensor psi(n * n, 3 * c.fourier_k);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      Vec3 delta = in.f_t[j] - in.f_t[i];
      std::vector<double> e = fourier_relative_embedding(delta, c.fourier_k);
      for (int q = 0; q < 3 * c.fourier_k; ++q)
        psi.at(i * n + j, q) = e[q];
    }
  int psi_id = tape.leaf(psi);

  const int dh = c.hidden / c.n_heads;
  for (int l = 0; l < c.n_layers; ++l) {
    std::string p = "layer" + std::to_string(l) + ".";
    // pairwise messages over (site, site) with the lattice state and the
    // periodic relative-coordinate features in every message
    int Ci = tape.gather_rows(C, pair_i);
    int Cj = tape.gather_rows(C, pair_j);
    int min = tape.concat_cols({Ci, Cj, kpad_pairs, psi_id});
    int m = tape.silu(tape.add_row(tape.matmul(min, P(p + "msg.w1")), P(p + "msg.b1")));
    m = tape.add_row(tape.matmul(m, P(p + "msg.w2")), P(p + "msg.b2"));
    int agg = tape.block_row_sum(m, n);  // sum over j per site i

    // multi-head cross-attention: queries from C, keys/values from messages
    int Q = tape.matmul(C, P(p + "attn.wq"));
    int K = tape.matmul(agg, P(p + "attn.wk"));
    int V = tape.matmul(agg, P(p + "attn.wv"));
    std::vector<int> heads;
    for (int h = 0; h < c.n_heads; ++h) {
      int Qh = tape.slice_cols(Q, h * dh, dh);
      int Kh = tape.slice_cols(K, h * dh, dh);
      int Vh = tape.slice_cols(V, h * dh, dh);
      int S = tape.scale(tape.matmul(Qh, tape.transpose(Kh)), 1.0 / std::sqrt(double(dh)));
      heads.push_back(tape.matmul(tape.softmax_rows(S), Vh));
    }
    int O = tape.add_row(tape.matmul(tape.concat_cols(heads), P(p + "attn.wo")),
                         P(p + "attn.bo"));
    C = tape.add(C, O);  // residual update
  }

  DenoiserNodes out;
  out.eps_k6 = tape.add_row(tape.matmul(tape.mean_rows(C), P("head_k.w")), P("head_k.b"));
  Tensor maskm(n, 3);
  for (int i = 0; i < n; ++i)
    for (int q = 0; q < 3; ++q)
      maskm.at(i, q) = in.free_mask[i][q] ? 1.0 : 0.0;
  out.eps_f = tape.mul_const(
      tape.add_row(tape.matmul(C, P("head_f.w")), P("head_f.b")), maskm);
  if (leaf_ids)
    *leaf_ids = std::move(leaves);
  return out;
}

// Per-site input feature matrix C = phi_in(f_atom | f_prop | f_time).
inline Tensor build_input_features(const DenoiserParams& params,
                                   const std::vector<std::string>& species,
                                   double property_value, int t) {
  Tape tape;
  int C = detail::input_features_tape(
      tape, params, species, property_value, t,
      [&](const std::string& name) { return tape.leaf(params.t(name)); });
  return tape.val(C);
}

inline DenoiserOutput denoiser_forward(const DenoiserParams& params,
                                       const DenoiserInput& in) {
  Tape tape;
  DenoiserNodes nodes = denoiser_forward_tape(tape, params, in);
  DenoiserOutput out;
  out.eps_k.resize(in.k_t.size());
  for (std::size_t i = 0; i < in.k_t.size(); ++i)
    out.eps_k[i] = tape.val(nodes.eps_k6).at(0, int(i));
  out.eps_f.resize(in.species.size());
  for (std::size_t i = 0; i < in.species.size(); ++i)
    for (int q = 0; q < 3; ++q)
      out.eps_f[i][q] = tape.val(nodes.eps_f).at(int(i), q);
  return out;
}

}  // namespace xtalgen

#endif  // XTALGEN_DENOISER_HPP_
