#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>

#include "xtalgen/denoiser.hpp"
#include "xtalgen/schedule.hpp"

using namespace xtalgen;

TEST_CASE("schedule shape and monotonicity") {
  NoiseSchedule s = NoiseSchedule::make(100);
  s.validate();
  double prev = 1.0 + 1e-12;
  for (int t = 1; t <= s.T; ++t) {
    double ab = s.alpha_bar(t);
    CHECK(ab < prev);  // strictly decreasing
    prev = ab;
  }
  for (int t = 2; t <= s.T; ++t)
    CHECK(s.sigma_at(t) > s.sigma_at(t - 1));
  CHECK_THROWS_AS(s.check_t(0), ConfigError);
  CHECK_THROWS_AS(s.check_t(101), ConfigError);
}

TEST_CASE("rbf property embedding follows the grid") {
  PropertyGrid grid{0.0, 2.0, 2.0 / 127.0};
  auto e = rbf_property_embedding(0.0, grid);
  CHECK(int(e.size()) == 128);
  CHECK(e[0] == 1.0);  // zero exponent at p = p_min
  auto e2 = rbf_property_embedding(grid.p_min + grid.sigma, grid);
  CHECK(e2[0] == doctest::Approx(std::exp(-0.5)).epsilon(1e-12));
  // no clamping outside the range: values decay smoothly
  auto e3 = rbf_property_embedding(grid.p_min - 0.2 * grid.sigma, grid);
  CHECK(e3[0] < 1.0);
  CHECK(e3[0] > 0.0);
  CHECK_THROWS_AS(rbf_property_embedding(std::nan(""), grid), DataError);
  CHECK_THROWS_AS(PropertyGrid({1.0, 0.0, 0.1}).validate(), ConfigError);
}

TEST_CASE("sinusoidal time embedding") {
  auto e0 = sinusoidal_time_embedding(0, 16);
  for (int i = 0; i < 8; ++i) {
    CHECK(e0[2 * i] == 0.0);
    CHECK(e0[2 * i + 1] == 1.0);
  }
  CHECK_THROWS_AS(sinusoidal_time_embedding(1, 15), ConfigError);
  // all components bounded, and embeddings injective over the configured T
  const int T = 1000;
  std::vector<std::vector<double>> embs;
  for (int t = 0; t <= T; ++t) {
    auto e = sinusoidal_time_embedding(t, 8);
    for (double v : e) {
      CHECK(v <= 1.0);
      CHECK(v >= -1.0);
    }
    embs.push_back(std::move(e));
  }
  bool all_distinct = true;
  for (int a = 0; a <= T && all_distinct; ++a)
    for (int b = a + 1; b <= T; ++b) {
      double d = 0;
      for (int i = 0; i < 8; ++i)
        d = std::max(d, std::abs(embs[a][i] - embs[b][i]));
      if (d < 1e-9) {
        all_distinct = false;
        break;
      }
    }
  CHECK(all_distinct);
}

TEST_CASE("fourier relative embedding is periodic and bounded") {
  auto z = fourier_relative_embedding({0, 0, 0}, 8);
  CHECK(int(z.size()) == 24);
  for (int axis = 0; axis < 3; ++axis)
    for (int m = 0; m < 4; ++m) {
      CHECK(z[axis * 8 + 2 * m] == 0.0);   // sin terms
      CHECK(z[axis * 8 + 2 * m + 1] == 1.0);  // cos terms
    }
  Rng rng(7);
  for (int trial = 0; trial < 50; ++trial) {
    Vec3 x{rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)};
    Vec3 xp = {x[0] + 1.0, x[1] + 1.0, x[2] + 1.0};
    auto a = fourier_relative_embedding(x, 128);
    auto b = fourier_relative_embedding(xp, 128);
    for (std::size_t i = 0; i < a.size(); ++i) {
      CHECK(std::abs(a[i] - b[i]) < 1e-12);
      CHECK(std::abs(a[i]) <= 1.0);
    }
  }
  CHECK_THROWS_AS(fourier_relative_embedding({0, 0, 0}, 7), ConfigError);
}

TEST_CASE("lattice forward noising closed form and determinism") {
  NoiseSchedule s = NoiseSchedule::make(50);
  std::vector<double> k0{1.5, -0.3, 4.0};
  Rng r1(11), r2(11);
  auto n1 = forward_noise_lattice(k0, 20, s, r1);
  auto n2 = forward_noise_lattice(k0, 20, s, r2);
  CHECK(n1.k_t == n2.k_t);  // bit-identical under the same seed
  double ab = s.alpha_bar(20);
  for (int i = 0; i < 3; ++i) {
    double recon = (n1.k_t[i] - std::sqrt(1 - ab) * n1.eps[i]) / std::sqrt(ab);
    CHECK(recon == doctest::Approx(k0[i]).epsilon(1e-12));
  }
  Rng r3(1);
  CHECK_THROWS_AS(forward_noise_lattice(k0, 0, s, r3), ConfigError);
  CHECK_THROWS_AS(forward_noise_lattice(k0, 51, s, r3), ConfigError);
}

// one-sample Kolmogorov-Smirnov p-value against the standard normal
static double ks_pvalue_vs_normal(std::vector<double> xs) {
  std::sort(xs.begin(), xs.end());
  const double n = double(xs.size());
  double d = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    double cdf = 0.5 * std::erfc(-xs[i] / std::sqrt(2.0));
    d = std::max(d, std::abs(cdf - double(i + 1) / n));
    d = std::max(d, std::abs(cdf - double(i) / n));
  }
  double lambda = (std::sqrt(n) + 0.12 + 0.11 / std::sqrt(n)) * d;
  double p = 0.0;
  for (int k = 1; k <= 100; ++k)
    p += 2.0 * std::pow(-1.0, k - 1) * std::exp(-2.0 * k * k * lambda * lambda);
  return std::min(1.0, std::max(0.0, p));
}

TEST_CASE("terminal lattice noise is approximately standard normal") {
  NoiseSchedule s = NoiseSchedule::make(1000);
  CHECK(s.alpha_bar(1000) < 1e-4);
  Rng rng(2024);
  std::vector<double> draws;
  std::vector<double> k0{1.0};
  for (int i = 0; i < 10000; ++i)
    draws.push_back(forward_noise_lattice(k0, 1000, s, rng).k_t[0]);
  CHECK(ks_pvalue_vs_normal(draws) > 0.01);
}

TEST_CASE("coordinate forward noising contracts") {
  NoiseSchedule s = NoiseSchedule::make(100);
  std::vector<Vec3> f0{{0.25, 0.0, 0.75}, {0.0, 0.0, 0.0}};
  std::vector<std::array<bool, 3>> mask{{true, false, true}, {false, false, false}};
  Rng rng(5);
  auto nc = forward_noise_coords(f0, mask, 60, s, rng);
  for (int c = 0; c < 3; ++c) {
    CHECK(nc.f_t[1][c] == 0.0);          // masked sites untouched
    CHECK(nc.score_target[1][c] == 0.0);
  }
  CHECK(nc.f_t[0][1] == 0.0);
  for (const Vec3& x : nc.f_t)
    for (double v : x) {
      CHECK(v >= 0.0);
      CHECK(v < 1.0);
    }

  // small-sigma limit: f_t stays within 5 sigma of f0 for 99% of draws
  Rng rng2(6);
  int within = 0;
  const int n_draws = 2000;
  double s1 = s.sigma_at(1);
  for (int i = 0; i < n_draws; ++i) {
    auto nz = forward_noise_coords(f0, mask, 1, s, rng2);
    double d = std::abs(nz.f_t[0][0] - f0[0][0]);
    d = std::min(d, 1.0 - d);
    if (d <= 5.0 * s1) ++within;
  }
  CHECK(double(within) / n_draws >= 0.99);

  Rng rng3(7), rng4(7);
  auto a = forward_noise_coords(f0, mask, 60, s, rng3);
  auto b = forward_noise_coords(f0, mask, 60, s, rng4);
  CHECK(a.f_t == b.f_t);
  CHECK(a.score_target == b.score_target);
}

TEST_CASE("wrapped normal score matches the numeric log-density derivative") {
  auto log_q = [](double d, double sigma) {
    double sum = 0;
    for (int k = -3; k <= 3; ++k)
      sum += std::exp(-(d + k) * (d + k) / (2 * sigma * sigma));
    return std::log(sum);
  };
  Rng rng(13);
  for (double sigma : {0.05, 0.1, 0.3, 0.5}) {
    for (int trial = 0; trial < 200; ++trial) {
      double d = rng.uniform(-0.99, 0.99);
      double h = 1e-4;
      double numeric = (log_q(d + h, sigma) - log_q(d - h, sigma)) / (2 * h);
      double analytic = wrapped_normal_score(d, sigma);
      // 1e-3 absolute, relative where the score itself is large
      REQUIRE(std::abs(numeric - analytic) < 1e-3 * std::max(1.0, std::abs(analytic)));
    }
  }
}
