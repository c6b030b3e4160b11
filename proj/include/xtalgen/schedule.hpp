// Diffusion noise schedules and forward processes: DDPM noising for the
// lattice channel, wrapped-normal noising with score targets for the
// periodic coordinate channel.

#ifndef XTALGEN_SCHEDULE_HPP_
#define XTALGEN_SCHEDULE_HPP_

#include <cmath>
#include <vector>

#include "xtalgen/util.hpp"

namespace xtalgen {

struct NoiseSchedule {
  int T = 1000;
  std::vector<double> beta;   // lattice channel, index t-1
  std::vector<double> sigma;  // coordinate channel, strictly increasing

  static NoiseSchedule make(int T = 1000, double beta_start = 1e-4, double beta_end = 0.02,
                            double sigma_start = 0.005, double sigma_end = 0.5) {
    if (T < 1)
      throw ConfigError("schedule needs T >= 1");
    NoiseSchedule s;
    s.T = T;
    s.beta.resize(T);
    s.sigma.resize(T);
    for (int t = 0; t < T; ++t) {
      double frac = T == 1 ? 0.0 : double(t) / (T - 1);
      s.beta[t] = beta_start + (beta_end - beta_start) * frac;   // linear
      s.sigma[t] = sigma_start * std::pow(sigma_end / sigma_start, frac);  // exponential
    }
    s.validate();
    return s;
  }

  void validate() const {
    if (int(beta.size()) != T || int(sigma.size()) != T)
      throw ConfigError("schedule length mismatch");
    for (double b : beta)
      if (!(b > 0.0 && b < 1.0))
        throw ConfigError("beta outside (0,1)");
    for (int t = 0; t < T; ++t) {
      if (!(sigma[t] > 0.0))
        throw ConfigError("sigma must be positive");
      if (t > 0 && !(sigma[t] > sigma[t - 1]))
        throw ConfigError("sigma must be strictly increasing");
    }
  }

  // cumulative product of (1 - beta_s) for s <= t; t in 1..T
  double alpha_bar(int t) const {
    check_t(t);
    double ab = 1.0;
    for (int s = 0; s < t; ++s)
      ab *= 1.0 - beta[s];
    return ab;
  }

  double sigma_at(int t) const {
    check_t(t);
    return sigma[t - 1];
  }

  void check_t(int t) const {
    if (t < 1 || t > T)
      throw ConfigError("diffusion step out of range: " + std::to_string(t));
  }
};

// k_t = sqrt(alpha_bar) k0 + sqrt(1 - alpha_bar) eps, eps ~ N(0,I)
struct NoisedLattice {
  std::vector<double> k_t;
  std::vector<double> eps;
};

inline NoisedLattice forward_noise_lattice(const std::vector<double>& k0, int t,
                                           const NoiseSchedule& schedule, Rng& rng) {
  schedule.check_t(t);
  double ab = schedule.alpha_bar(t);
  double sa = std::sqrt(ab), sb = std::sqrt(1.0 - ab);
  NoisedLattice out;
  out.k_t.resize(k0.size());
  out.eps.resize(k0.size());
  for (std::size_t i = 0; i < k0.size(); ++i) {
    out.eps[i] = rng.normal();
    out.k_t[i] = sa * k0[i] + sb * out.eps[i];
  }
  return out;
}

// Score of the truncated wrapped normal: d log q(d | sigma) / dd with the
// image sum over shifts -3..3. Periodic in d with period 1.
inline double wrapped_normal_score(double d, double sigma) {
  double num = 0.0, den = 0.0;
  double inv2s2 = 1.0 / (2.0 * sigma * sigma);
  for (int k = -3; k <= 3; ++k) {
    double x = d + k;
    double w = std::exp(-x * x * inv2s2);
    den += w;
    num += -x / (sigma * sigma) * w;
  }
  return num / den;
}

struct NoisedCoords {
  std::vector<Vec3> f_t;           // wrapped, masked entries untouched
  std::vector<Vec3> score_target;  // zero on masked entries
};

// Active entries perturbed by a wrapped normal with scale sigma(t); the
// score target is evaluated at the sampled displacement. Masked entries
// stay exactly zero. Draw count is independent of the mask so streams stay
// aligned across constraint types.
inline NoisedCoords forward_noise_coords(const std::vector<Vec3>& f0,
                                         const std::vector<std::array<bool, 3>>& mask,
                                         int t, const NoiseSchedule& schedule, Rng& rng) {
  schedule.check_t(t);
  if (f0.size() != mask.size())
    throw ConfigError("coordinate/mask count mismatch");
  double sigma = schedule.sigma_at(t);
  NoisedCoords out;
  out.f_t.resize(f0.size());
  out.score_target.resize(f0.size());
  for (std::size_t i = 0; i < f0.size(); ++i)
    for (int c = 0; c < 3; ++c) {
      double eps = rng.normal();
      if (!mask[i][c]) {
        out.f_t[i][c] = f0[i][c];       // masked entries are exactly 0 by contract
        out.score_target[i][c] = 0.0;
        continue;
      }
      double moved = f0[i][c] + sigma * eps;
      out.f_t[i][c] = wrap01(moved);
      out.score_target[i][c] = wrapped_normal_score(out.f_t[i][c] - f0[i][c], sigma);
    }
  return out;
}

}  // namespace xtalgen

#endif  // XTALGEN_SCHEDULE_HPP_
