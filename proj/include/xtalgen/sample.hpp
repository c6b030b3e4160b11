// Ancestral sampling in constraint-reduced space. The lattice channel runs
// the DDPM reverse chain on the class DOF vector; the coordinate channel
// runs annealed score steps on the Wyckoff free parameters. Every emitted
// structure satisfies its constraint by construction.

#ifndef XTALGEN_SAMPLE_HPP_
#define XTALGEN_SAMPLE_HPP_

#include <vector>

#include "xtalgen/denoiser.hpp"
#include "xtalgen/schedule.hpp"
#include "xtalgen/structure.hpp"
#include "xtalgen/train.hpp"

namespace xtalgen {

struct SamplingError : Error { using Error::Error; };

inline CrystalStructure sample_structure(const WyckoffTable& table,
                                         const DenoiserParams& params,
                                         const NoiseSchedule& schedule,
                                         const SymmetryConstraint& constraint,
                                         const PropertyTarget& target, Rng& rng,
                                         int retry_budget = 3) {
  params.validate();
  schedule.validate();
  constraint.validate(table);
  if (constraint.assignments.empty())
    throw DataError("constraint has no assignments");
  if (target.kind != params.config.property_kind)
    throw ConfigError(std::string("model predicts ") +
                      property_kind_name(params.config.property_kind) +
                      " but the request targets " + property_kind_name(target.kind));

  const SpaceGroupId sg = constraint.space_group;
  const int dof = lattice_dof(sg);
  const int n = int(constraint.assignments.size());

  std::vector<std::string> species;
  std::vector<std::array<bool, 3>> mask;
  for (const auto& [element, letter] : constraint.assignments) {
    species.push_back(element);
    mask.push_back(table.position(sg, letter).free_mask);
  }

  for (int attempt = 0; attempt <= retry_budget; ++attempt) {
    std::vector<double> k(dof);
    for (double& v : k)
      v = rng.normal();
    std::vector<Vec3> f(n, Vec3{0, 0, 0});
    for (int i = 0; i < n; ++i)
      for (int c = 0; c < 3; ++c) {
        double u = rng.uniform();
        if (mask[i][c]) f[i][c] = u;
      }

    for (int t = schedule.T; t >= 1; --t) {
      DenoiserInput in{species, target.value, t, k, f, mask};
      DenoiserOutput out = denoiser_forward(params, in);

      // lattice: DDPM ancestral step
      double beta = schedule.beta[t - 1];
      double ab_t = schedule.alpha_bar(t);
      double ab_prev = t > 1 ? schedule.alpha_bar(t - 1) : 1.0;
      double inv_sqrt_alpha = 1.0 / std::sqrt(1.0 - beta);
      double eps_scale = beta / std::sqrt(1.0 - ab_t);
      double noise_scale = t > 1 ? std::sqrt(beta * (1.0 - ab_prev) / (1.0 - ab_t)) : 0.0;
      for (int i = 0; i < dof; ++i) {
        double z = rng.normal();
        k[i] = inv_sqrt_alpha * (k[i] - eps_scale * out.eps_k[i]) + noise_scale * z;
      }

      // coordinates: annealed score step on the torus
      double s_t = schedule.sigma_at(t);
      double s_prev = t > 1 ? schedule.sigma_at(t - 1) : 0.0;
      double step = s_t * s_t - s_prev * s_prev;
      double coord_noise = std::sqrt(step * (s_prev * s_prev) / (s_t * s_t));
      for (int i = 0; i < n; ++i)
        for (int c = 0; c < 3; ++c) {
          double z = rng.normal();
          if (!mask[i][c]) continue;
          f[i][c] = wrap01(f[i][c] + step * out.eps_f[i][c] + coord_noise * z);
        }
    }

    try {
      LatticeParameters cell = decode_lattice(LatticeDOF{k}, sg);
      cell.validate();
      CrystalStructure s = realize_structure(table, constraint, cell, f);
      s.properties[property_kind_name(target.kind)] = target.value;
      return s;
    } catch (const DataError&) {
      continue;  // degenerate decode: retry with fresh noise
    }
  }
  throw SamplingError("sampling failed: degenerate lattice after retries (sg " +
                      std::to_string(sg.index) + ")");
}

}  // namespace xtalgen

#endif  // XTALGEN_SAMPLE_HPP_
