// Training loop for the denoiser: reduces structures to constraint space,
// noises both channels at uniformly sampled steps, and minimizes the summed
// MSE of the two heads with Adam plus a plateau learning-rate scheduler.

#ifndef XTALGEN_TRAIN_HPP_
#define XTALGEN_TRAIN_HPP_

#include <string>
#include <vector>

#include "xtalgen/denoiser.hpp"
#include "xtalgen/schedule.hpp"
#include "xtalgen/structure.hpp"
#include "xtalgen/wyckoff.hpp"

namespace xtalgen {

// One structure reduced to the constraint manifold coordinates.
struct TrainingExample {
  std::vector<std::string> species;
  std::vector<double> k0;
  std::vector<Vec3> f0;
  std::vector<std::array<bool, 3>> mask;
  double property_value = 0.0;
};

// Checks that the structure's sites realize the constraint and extracts the
// reduced state. Sites must appear grouped per assignment (orbit blocks).
inline TrainingExample reduce_to_constraint_space(const WyckoffTable& table,
                                                  const CrystalStructure& structure,
                                                  const SymmetryConstraint& constraint,
                                                  double property_value,
                                                  double tol = 1e-6) {
  structure.validate();
  constraint.validate(table);
  if (structure.site_letters.empty())
    throw DataError("structure lacks per-site Wyckoff letters");

  TrainingExample ex;
  ex.property_value = property_value;
  LatticeParameters cell = parameters_from_matrix(structure.lattice);
  if (!satisfies_lattice_class(cell, constraint.space_group, 1e-6))
    throw DataError("lattice does not satisfy the constraint's class");
  ex.k0 = encode_lattice(project_lattice(cell, constraint.space_group),
                         constraint.space_group).values;

  std::size_t cursor = 0;
  for (const auto& [element, letter] : constraint.assignments) {
    const WyckoffPosition& pos = table.position(constraint.space_group, letter);
    if (cursor + pos.multiplicity > structure.size())
      throw DataError("structure has fewer sites than the constraint expands to");
    auto fit = project_fractional(table, constraint.space_group, letter,
                                  structure.frac_coords[cursor]);
    std::vector<Vec3> orbit = wyckoff_orbit(table, constraint.space_group, letter,
                                            fit.free_params);
    for (int m = 0; m < pos.multiplicity; ++m, ++cursor) {
      if (structure.species[cursor] != element ||
          structure.site_letters[cursor] != letter)
        throw DataError("site ordering does not follow the assignment expansion");
      double best = 1e9;
      for (const Vec3& x : orbit) {
        double d = 0;
        for (int c = 0; c < 3; ++c) {
          double delta = std::abs(structure.frac_coords[cursor][c] - x[c]);
          d = std::max(d, std::min(delta, 1.0 - delta));
        }
        best = std::min(best, d);
      }
      if (best > tol)
        throw DataError("site deviates from its Wyckoff orbit beyond tolerance");
    }
    ex.species.push_back(element);
    ex.f0.push_back(fit.free_params);
    ex.mask.push_back(pos.free_mask);
  }
  if (cursor != structure.size())
    throw DataError("structure has more sites than the constraint expands to");
  return ex;
}

struct TrainRecord {
  std::string id;
  CrystalStructure structure;
  SymmetryConstraint constraint;
  double property_value = 0.0;
};

struct TrainConfig {
  int epochs = 500;
  int draws_per_structure = 4;  // noise draws (and Adam steps) per structure per epoch
  double learning_rate = 1e-3;
  double plateau_factor = 0.6;
  int plateau_patience = 30;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  std::uint64_t seed = 0;
};

struct TrainResult {
  DenoiserParams params;
  std::vector<double> loss_trace;     // one entry per epoch
  std::vector<double> lr_trace;
};

// Plateau scheduler: decays the rate by `factor` after `patience` epochs
// without a new best loss.
class PlateauScheduler {
 public:
  PlateauScheduler(double lr, double factor, int patience)
      : lr_(lr), factor_(factor), patience_(patience) {}

  double rate() const { return lr_; }

  void observe(double loss) {
    if (loss < best_) {
      best_ = loss;
      bad_ = 0;
    } else if (++bad_ > patience_) {
      lr_ *= factor_;
      bad_ = 0;
    }
  }

 private:
  double lr_;
  double factor_;
  int patience_;
  double best_ = 1e300;
  int bad_ = 0;
};

class AdamOptimizer {
 public:
  AdamOptimizer(const DenoiserParams& params, const TrainConfig& cfg) : cfg_(cfg) {
    for (const auto& [name, tensor] : params.tensors) {
      m_.emplace(name, Tensor(tensor.rows, tensor.cols));
      v_.emplace(name, Tensor(tensor.rows, tensor.cols));
    }
  }

  void step(DenoiserParams& params, const std::map<std::string, Tensor>& grads,
            double lr) {
    ++steps_;
    double bc1 = 1.0 - std::pow(cfg_.adam_beta1, steps_);
    double bc2 = 1.0 - std::pow(cfg_.adam_beta2, steps_);
    for (auto& [name, tensor] : params.tensors) {
      auto git = grads.find(name);
      if (git == grads.end())
        continue;
      const Tensor& g = git->second;
      Tensor& m = m_.at(name);
      Tensor& v = v_.at(name);
      for (std::size_t i = 0; i < tensor.size(); ++i) {
        m.v[i] = cfg_.adam_beta1 * m.v[i] + (1.0 - cfg_.adam_beta1) * g.v[i];
        v.v[i] = cfg_.adam_beta2 * v.v[i] + (1.0 - cfg_.adam_beta2) * g.v[i] * g.v[i];
        double mh = m.v[i] / bc1;
        double vh = v.v[i] / bc2;
        tensor.v[i] -= lr * mh / (std::sqrt(vh) + cfg_.adam_eps);
      }
    }
  }

 private:
  TrainConfig cfg_;
  std::map<std::string, Tensor> m_, v_;
  long steps_ = 0;
};

// Scalar loss node for one noised example; exposed for the gradient check.
inline int training_loss_tape(Tape& tape, const DenoiserParams& params,
                              const TrainingExample& ex, int t,
                              const NoisedLattice& nk, const NoisedCoords& nf,
                              std::map<std::string, int>* leaf_ids = nullptr) {
  DenoiserInput in;
  in.species = ex.species;
  in.property_value = ex.property_value;
  in.t = t;
  in.k_t = nk.k_t;
  in.f_t = nf.f_t;
  in.free_mask = ex.mask;
  DenoiserNodes nodes = denoiser_forward_tape(tape, params, in, leaf_ids);

  Tensor k_target(1, kLatticePad), k_mask(1, kLatticePad);
  for (std::size_t i = 0; i < nk.eps.size(); ++i) {
    k_target.at(0, int(i)) = nk.eps[i];
    k_mask.at(0, int(i)) = 1.0;
  }
  const int n = int(ex.species.size());
  Tensor f_target(n, 3), f_mask(n, 3);
  for (int i = 0; i < n; ++i)
    for (int c = 0; c < 3; ++c) {
      f_target.at(i, c) = nf.score_target[i][c];
      f_mask.at(i, c) = ex.mask[i][c] ? 1.0 : 0.0;
    }
  int loss_k = tape.mse(nodes.eps_k6, k_target, k_mask);
  int loss_f = tape.mse(nodes.eps_f, f_target, f_mask);
  return tape.add(loss_k, loss_f);
}

inline TrainResult train(const WyckoffTable& table, const std::vector<TrainRecord>& records,
                         const DenoiserConfig& model_config, const NoiseSchedule& schedule,
                         const TrainConfig& cfg) {
  if (records.empty())
    throw DataError("training dataset is empty");
  schedule.validate();

  std::vector<TrainingExample> examples;
  std::string bad;
  for (const auto& r : records) {
    try {
      examples.push_back(
          reduce_to_constraint_space(table, r.structure, r.constraint, r.property_value));
    } catch (const Error& e) {
      bad += bad.empty() ? "" : ", ";
      bad += r.id + " (" + e.what() + ")";
    }
  }
  if (!bad.empty())
    throw DataError("records inconsistent with their constraints: " + bad);

  TrainResult result{DenoiserParams::init(model_config, cfg.seed), {}, {}};
  AdamOptimizer adam(result.params, cfg);
  PlateauScheduler scheduler(cfg.learning_rate, cfg.plateau_factor, cfg.plateau_patience);
  Rng rng(derive_seed(cfg.seed, "train"));

  const int draws = std::max(1, cfg.draws_per_structure);
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    double epoch_loss = 0.0;
    for (const TrainingExample& ex : examples) {
      for (int draw = 0; draw < draws; ++draw) {
        int t = 1 + int(rng.below(std::uint64_t(schedule.T)));
        NoisedLattice nk = forward_noise_lattice(ex.k0, t, schedule, rng);
        NoisedCoords nf = forward_noise_coords(ex.f0, ex.mask, t, schedule, rng);
        Tape tape;
        std::map<std::string, int> leaves;
        int loss = training_loss_tape(tape, result.params, ex, t, nk, nf, &leaves);
        epoch_loss += tape.val(loss).v[0];
        tape.backward(loss);
        std::map<std::string, Tensor> grads;
        for (const auto& [name, id] : leaves)
          if (tape.grad(id).size() > 0)
            grads.emplace(name, tape.grad(id));
        adam.step(result.params, grads, scheduler.rate());
      }
    }
    epoch_loss /= double(examples.size() * draws);
    result.loss_trace.push_back(epoch_loss);
    result.lr_trace.push_back(scheduler.rate());
    scheduler.observe(epoch_loss);
  }
  return result;
}

}  // namespace xtalgen

#endif  // XTALGEN_TRAIN_HPP_
