#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "oracles.hpp"
#include "xtalgen/matcher.hpp"

using namespace xtalgen;

static CrystalStructure simple_cell() {
  CrystalStructure s;
  s.species = {"Na", "Na", "Cl", "Cl"};
  s.frac_coords = {{0.0, 0.0, 0.0}, {0.5, 0.5, 0.0}, {0.5, 0.0, 0.25}, {0.0, 0.5, 0.75}};
  s.lattice = matrix_from_parameters({4.1, 4.3, 5.2, 90, 90, 90});
  return s;
}

static CrystalStructure random_cell(Rng& rng, int max_atoms = 4) {
  const char* pool[3] = {"Na", "Cl", "O"};
  CrystalStructure s;
  int n = 1 + int(rng.below(max_atoms));
  for (int i = 0; i < n; ++i) {
    s.species.push_back(pool[rng.below(3)]);
    s.frac_coords.push_back({rng.uniform(), rng.uniform(), rng.uniform()});
  }
  LatticeParameters p{rng.uniform(3, 7), rng.uniform(3, 7), rng.uniform(3, 7),
                      rng.uniform(75, 105), rng.uniform(75, 105), rng.uniform(75, 105)};
  if (p.volume_factor() <= 1e-3)
    p = {4, 5, 6, 90, 90, 90};
  s.lattice = matrix_from_parameters(p);
  return s;
}

TEST_CASE("hungarian solves small assignment problems exactly") {
  std::vector<std::vector<double>> cost{{4, 1, 3}, {2, 0, 5}, {3, 2, 2}};
  auto a = hungarian_assignment(cost);
  double total = 0;
  for (int i = 0; i < 3; ++i)
    total += cost[i][a[i]];
  CHECK(total == 5.0);  // 1 + 2 + 2
}

TEST_CASE("self match has zero rmse") {
  CrystalStructure s = simple_cell();
  MatchReport r = match_structures(s, s);
  REQUIRE(r.matched);
  CHECK(*r.rmse_normalized == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("global fractional translation is forgiven by the anchor search") {
  CrystalStructure s = simple_cell();
  CrystalStructure t = s;
  for (Vec3& x : t.frac_coords)
    x = wrap01(x + Vec3{0.25, 0.25, 0.25});
  MatchReport r = match_structures(s, t);
  REQUIRE(r.matched);
  CHECK(*r.rmse_normalized < 1e-9);
}

TEST_CASE("site permutation is forgiven by the assignment") {
  CrystalStructure s = simple_cell();
  CrystalStructure t = s;
  std::swap(t.frac_coords[0], t.frac_coords[1]);
  std::swap(t.frac_coords[2], t.frac_coords[3]);
  MatchReport r = match_structures(s, t);
  REQUIRE(r.matched);
  CHECK(*r.rmse_normalized < 1e-9);
}

TEST_CASE("lattice frame rotation leaves parameters and the match unchanged") {
  CrystalStructure s = simple_cell();
  CrystalStructure t = s;
  double th = 0.7;
  Mat3 rot{{{std::cos(th), std::sin(th), 0}, {-std::sin(th), std::cos(th), 0}, {0, 0, 1}}};
  Mat3 rotated{};
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      for (int k = 0; k < 3; ++k)
        rotated[i][j] += s.lattice.rows[i][k] * rot[k][j];
  t.lattice.rows = rotated;
  MatchReport r = match_structures(s, t);
  REQUIRE(r.matched);
  CHECK(*r.rmse_normalized < 1e-9);
}

TEST_CASE("1.5x length scaling fails the ltol gate") {
  CrystalStructure s = simple_cell();
  CrystalStructure t = s;
  for (auto& row : t.lattice.rows)
    for (double& v : row)
      v *= 1.5;
  CHECK_FALSE(match_structures(s, t).matched);
}

TEST_CASE("element multiset mismatch fails fast") {
  CrystalStructure s = simple_cell();
  CrystalStructure t = s;
  t.species[0] = "K";
  CHECK_FALSE(match_structures(s, t).matched);
}

TEST_CASE("matcher agrees with brute force on random small cells") {
  Rng rng(2718);
  int compared = 0;
  for (int trial = 0; trial < 60; ++trial) {
    CrystalStructure a = random_cell(rng);
    CrystalStructure b;
    int mode = int(rng.below(3));
    if (mode == 0) {
      b = a;  // jittered copy
      for (Vec3& x : b.frac_coords)
        for (double& c : x)
          c = wrap01(c + rng.uniform(-0.05, 0.05));
    } else if (mode == 1) {
      b = a;  // translated + permuted copy
      Vec3 shift{rng.uniform(), rng.uniform(), rng.uniform()};
      for (Vec3& x : b.frac_coords)
        x = wrap01(x + shift);
    } else {
      b = random_cell(rng);
      if (a.composition() != b.composition())
        b = a;
    }
    MatchReport fast = match_structures(a, b);
    MatchReport slow = testing::brute_force_match(a, b);
    CAPTURE(trial);
    REQUIRE(fast.matched == slow.matched);
    if (fast.matched)
      REQUIRE(std::abs(*fast.rmse_normalized - *slow.rmse_normalized) < 1e-9);
    ++compared;
  }
  CHECK(compared == 60);
}

TEST_CASE("matcher is symmetric on randomized fixtures") {
  Rng rng(31415);
  for (int trial = 0; trial < 40; ++trial) {
    CrystalStructure a = random_cell(rng);
    CrystalStructure b = a;
    if (rng.below(2)) {
      for (Vec3& x : b.frac_coords)
        for (double& c : x)
          c = wrap01(c + rng.uniform(-0.03, 0.03));
    } else {
      b = random_cell(rng);
      if (a.composition() != b.composition())
        continue;
    }
    CHECK(match_structures(a, b).matched == match_structures(b, a).matched);
  }
}

TEST_CASE("match_rate aggregates percent and mean rmse over matched") {
  std::vector<MatchReport> reports{{true, 0.0}, {true, 0.0}, {false, {}}, {false, {}}};
  auto r = match_rate(reports);
  CHECK(r.rate_percent == 50.0);
  CHECK(*r.mean_rmse == 0.0);

  auto all = match_rate({{true, 0.0}, {true, 0.0}});
  CHECK(all.rate_percent == 100.0);
  CHECK(*all.mean_rmse == 0.0);

  auto none = match_rate({{false, {}}, {false, {}}});
  CHECK(none.rate_percent == 0.0);
  CHECK_FALSE(none.mean_rmse.has_value());

  CHECK_THROWS_AS(match_rate({}), DataError);
}
