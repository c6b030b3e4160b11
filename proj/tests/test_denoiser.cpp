#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "xtalgen/denoiser.hpp"
#include "xtalgen/train.hpp"

using namespace xtalgen;

static DenoiserParams tiny_params(std::uint64_t seed = 1) {
  DenoiserConfig c = DenoiserConfig::tiny();
  c.grid = PropertyGrid::from_range(0.0, 4.0, 16);
  return DenoiserParams::init(c, seed);
}

static DenoiserInput two_site_input() {
  DenoiserInput in;
  in.species = {"Na", "Cl"};
  in.property_value = 1.2;
  in.t = 17;
  in.k_t = {0.4, -1.1};
  in.f_t = {{0.31, 0.0, 0.77}, {0.0, 0.12, 0.0}};
  in.free_mask = {{true, false, true}, {false, true, false}};
  return in;
}

TEST_CASE("input features: one row per site, element-wise equality, property sensitivity") {
  DenoiserParams p = tiny_params();
  Tensor c = build_input_features(p, {"Ti", "O", "O"}, 1.5, 3);
  CHECK(c.rows == 3);
  CHECK(c.cols == p.config.hidden);
  for (int j = 0; j < c.cols; ++j)
    CHECK(c.at(1, j) == c.at(2, j));  // same element, same row

  Tensor c2 = build_input_features(p, {"Ti", "O", "O"}, 1.7, 3);
  int changed = 0;
  for (int i = 0; i < c.rows; ++i) {
    double d = 0;
    for (int j = 0; j < c.cols; ++j)
      d = std::max(d, std::abs(c.at(i, j) - c2.at(i, j)));
    if (d > 1e-12) ++changed;
  }
  CHECK(changed == c.rows);  // property perturbation reaches every row

  CHECK_THROWS_AS(build_input_features(p, {"Xx"}, 1.0, 1), DataError);
}

TEST_CASE("forward output contracts") {
  DenoiserParams p = tiny_params();
  // heads start at zero; give them weight so the mask contract is observable
  for (double& v : p.t("head_f.w").v)
    v = 0.05;
  DenoiserInput in = two_site_input();
  DenoiserOutput out = denoiser_forward(p, in);
  REQUIRE(out.eps_k.size() == 2);
  REQUIRE(out.eps_f.size() == 2);
  CHECK(out.eps_f[0][1] == 0.0);  // masked entries exactly zero
  CHECK(out.eps_f[1][0] == 0.0);
  CHECK(out.eps_f[1][2] == 0.0);
  CHECK(out.eps_f[0][0] != 0.0);
  for (double v : out.eps_k)
    CHECK(std::isfinite(v));

  // single site: the message sum runs over one site and stays finite
  DenoiserInput solo;
  solo.species = {"H"};
  solo.property_value = 0.0;
  solo.t = 1;
  solo.k_t = {0.2};
  solo.f_t = {{0.5, 0.5, 0.5}};
  solo.free_mask = {{true, true, true}};
  DenoiserOutput so = denoiser_forward(p, solo);
  for (double v : so.eps_k)
    CHECK(std::isfinite(v));
  for (int c = 0; c < 3; ++c)
    CHECK(std::isfinite(so.eps_f[0][c]));
}

TEST_CASE("permutation equivariance on random weights") {
  DenoiserParams p = tiny_params(9);
  DenoiserInput in;
  in.species = {"Sr", "Ti", "O", "O"};
  in.property_value = 2.0;
  in.t = 9;
  in.k_t = {0.1, 0.2, -0.4};
  in.f_t = {{0.11, 0.21, 0.31}, {0.41, 0.51, 0.61}, {0.71, 0.81, 0.91}, {0.05, 0.15, 0.25}};
  in.free_mask.assign(4, {true, true, true});
  DenoiserOutput base = denoiser_forward(p, in);

  std::vector<int> perm{2, 0, 3, 1};
  DenoiserInput pin = in;
  for (int i = 0; i < 4; ++i) {
    pin.species[i] = in.species[perm[i]];
    pin.f_t[i] = in.f_t[perm[i]];
    pin.free_mask[i] = in.free_mask[perm[i]];
  }
  DenoiserOutput permuted = denoiser_forward(p, pin);
  for (std::size_t i = 0; i < base.eps_k.size(); ++i)
    CHECK(std::abs(base.eps_k[i] - permuted.eps_k[i]) < 1e-6);
  for (int i = 0; i < 4; ++i)
    for (int c = 0; c < 3; ++c)
      CHECK(std::abs(permuted.eps_f[i][c] - base.eps_f[perm[i]][c]) < 1e-6);
}

TEST_CASE("analytic gradients match central finite differences") {
  DenoiserConfig cfg = DenoiserConfig::tiny();
  cfg.grid = PropertyGrid::from_range(0.0, 4.0, 8);
  DenoiserParams params = DenoiserParams::init(cfg, 3);

  TrainingExample ex;
  ex.species = {"Na", "Cl"};
  ex.k0 = {1.2, 0.4};
  ex.f0 = {{0.3, 0.0, 0.7}, {0.0, 0.0, 0.0}};
  ex.mask = {{true, false, true}, {false, false, false}};
  ex.property_value = 1.0;

  NoiseSchedule schedule = NoiseSchedule::make(100);
  const int t = 90;  // large sigma keeps score targets (and the loss) O(1)
  Rng rng(77);
  NoisedLattice nk = forward_noise_lattice(ex.k0, t, schedule, rng);
  NoisedCoords nf = forward_noise_coords(ex.f0, ex.mask, t, schedule, rng);

  Tape tape;
  std::map<std::string, int> leaves;
  int loss = training_loss_tape(tape, params, ex, t, nk, nf, &leaves);
  tape.backward(loss);

  auto loss_value = [&](const DenoiserParams& p) {
    Tape tp;
    int l = training_loss_tape(tp, p, ex, t, nk, nf);
    return tp.val(l).v[0];
  };

  const double h = 1e-5;
  Rng pick(123);
  int checked = 0, failed = 0;
  for (const auto& [name, id] : leaves) {
    const Tensor& g = tape.grad(id);
    if (g.size() == 0)
      continue;  // tensor not on the loss path
    const std::size_t total = params.t(name).size();
    const int samples = int(std::min<std::size_t>(10, total));
    for (int s = 0; s < samples; ++s) {
      std::size_t idx = pick.below(total);
      DenoiserParams pp = params;
      pp.t(name).v[idx] += h;
      double up = loss_value(pp);
      pp.t(name).v[idx] -= 2 * h;
      double down = loss_value(pp);
      double fd = (up - down) / (2 * h);
      double an = g.v[idx];
      ++checked;
      // rtol per the contract plus an atol floor for finite-difference noise
      double allowed = 1e-4 * std::max(std::abs(an), std::abs(fd)) + 1e-8;
      if (std::abs(an - fd) > allowed) {
        ++failed;
        CAPTURE(name);
        CAPTURE(idx);
        CHECK(std::abs(an - fd) <= allowed);
      }
    }
  }
  CHECK(checked > 100);
  CHECK(failed == 0);
}

TEST_CASE("full-size profile instantiates and runs a forward pass") {
  DenoiserConfig c;  // paper-scale defaults
  c.grid = PropertyGrid::from_range(-3.0, 5.0, 128);
  CHECK(c.hidden == 512);
  CHECK(c.n_layers == 6);
  CHECK(c.n_heads == 2);
  CHECK(c.fourier_k == 128);
  CHECK(c.grid.length() == 128);
  DenoiserParams p = DenoiserParams::init(c, 1);
  p.validate();
  DenoiserInput in = two_site_input();
  DenoiserOutput out = denoiser_forward(p, in);
  for (double v : out.eps_k)
    CHECK(std::isfinite(v));
  for (const Vec3& f : out.eps_f)
    for (double v : f)
      CHECK(std::isfinite(v));
}

TEST_CASE("plateau scheduler decays after patience without improvement") {
  PlateauScheduler sched(1.0, 0.6, 3);
  sched.observe(1.0);   // best
  sched.observe(0.9);   // new best resets patience
  for (int i = 0; i < 3; ++i) {
    sched.observe(0.95);
    CHECK(sched.rate() == 1.0);
  }
  sched.observe(0.95);  // fourth bad epoch exceeds patience
  CHECK(sched.rate() == doctest::Approx(0.6));
  for (int i = 0; i < 4; ++i)
    sched.observe(0.95);
  CHECK(sched.rate() == doctest::Approx(0.36));
}
