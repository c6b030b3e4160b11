#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "xtalgen/lattice.hpp"
#include "xtalgen/util.hpp"

using namespace xtalgen;

TEST_CASE("space group id range") {
  CHECK_THROWS_AS(SpaceGroupId(0), DataError);
  CHECK_THROWS_AS(SpaceGroupId(231), DataError);
  CHECK(SpaceGroupId(1).index == 1);
  CHECK(SpaceGroupId(230).index == 230);
}

TEST_CASE("crystal system ranges") {
  CHECK(crystal_system_of(SpaceGroupId(1)) == CrystalSystem::Triclinic);
  CHECK(crystal_system_of(SpaceGroupId(225)) == CrystalSystem::Cubic);
  CHECK(crystal_system_of(SpaceGroupId(170)) == CrystalSystem::Hexagonal);
  CHECK(crystal_system_of(SpaceGroupId(11)) == CrystalSystem::Monoclinic);
  CHECK(crystal_system_of(SpaceGroupId(74)) == CrystalSystem::Orthorhombic);
  CHECK(crystal_system_of(SpaceGroupId(75)) == CrystalSystem::Tetragonal);
  CHECK(crystal_system_of(SpaceGroupId(143)) == CrystalSystem::TrigonalHexagonalAxes);
  CHECK(crystal_system_of(SpaceGroupId(166)) == CrystalSystem::TrigonalRhombohedral);
  CHECK(crystal_system_of(SpaceGroupId(167)) == CrystalSystem::TrigonalRhombohedral);
  CHECK(crystal_system_of(SpaceGroupId(168)) == CrystalSystem::Hexagonal);
  CHECK(crystal_system_of(SpaceGroupId(195)) == CrystalSystem::Cubic);
}

TEST_CASE("lattice dof counts") {
  CHECK(lattice_dof(SpaceGroupId(225)) == 1);
  CHECK(lattice_dof(SpaceGroupId(2)) == 6);
  CHECK(lattice_dof(SpaceGroupId(100)) == 2);
  CHECK(lattice_dof(SpaceGroupId(11)) == 4);
  CHECK(lattice_dof(SpaceGroupId(20)) == 3);
  CHECK(lattice_dof(SpaceGroupId(166)) == 2);
  CHECK(lattice_dof(SpaceGroupId(194)) == 2);
}

TEST_CASE("project_lattice snaps to the constraint class") {
  LatticeParameters p{3.9, 4.1, 4.0, 90, 90, 90};
  LatticeParameters q = project_lattice(p, SpaceGroupId(225));
  CHECK(q.a == doctest::Approx(4.0).epsilon(1e-12));
  CHECK(q.b == doctest::Approx(4.0).epsilon(1e-12));
  CHECK(q.c == doctest::Approx(4.0).epsilon(1e-12));
  CHECK(q.alpha == 90.0);

  LatticeParameters m{3, 4, 5, 89, 101, 91};
  LatticeParameters mq = project_lattice(m, SpaceGroupId(11));
  CHECK(mq.a == 3.0);
  CHECK(mq.b == 4.0);
  CHECK(mq.c == 5.0);
  CHECK(mq.alpha == 90.0);
  CHECK(mq.beta == 101.0);  // free monoclinic angle passes through
  CHECK(mq.gamma == 90.0);
}

TEST_CASE("project_lattice is idempotent and satisfies its class") {
  Rng rng(17);
  for (int n = 1; n <= 230; ++n) {
    SpaceGroupId sg(n);
    for (int trial = 0; trial < 4; ++trial) {
      LatticeParameters p{rng.uniform(2, 9), rng.uniform(2, 9), rng.uniform(2, 9),
                          rng.uniform(60, 120), rng.uniform(60, 120), rng.uniform(60, 120)};
      if (p.volume_factor() <= 0)
        continue;
      LatticeParameters q = project_lattice(p, sg);
      REQUIRE(satisfies_lattice_class(q, sg, 1e-9));
      LatticeParameters q2 = project_lattice(q, sg);
      REQUIRE(std::abs(q2.a - q.a) < 1e-12);
      REQUIRE(std::abs(q2.b - q.b) < 1e-12);
      REQUIRE(std::abs(q2.c - q.c) < 1e-12);
      REQUIRE(std::abs(q2.alpha - q.alpha) < 1e-12);
      REQUIRE(std::abs(q2.beta - q.beta) < 1e-12);
      REQUIRE(std::abs(q2.gamma - q.gamma) < 1e-12);
    }
  }
}

TEST_CASE("parameter/matrix round trip under the fixed orientation") {
  Rng rng(5);
  for (int trial = 0; trial < 200; ++trial) {
    LatticeParameters p{rng.uniform(2, 9), rng.uniform(2, 9), rng.uniform(2, 9),
                        rng.uniform(60, 120), rng.uniform(60, 120), rng.uniform(60, 120)};
    if (p.volume_factor() <= 1e-3)
      continue;
    LatticeMatrix m = matrix_from_parameters(p);
    CHECK(m.rows[0][1] == 0.0);
    CHECK(m.rows[0][2] == 0.0);
    CHECK(m.rows[1][2] == 0.0);
    CHECK(m.rows[1][1] > 0.0);
    CHECK(det3(m.rows) > 0.0);
    LatticeParameters q = parameters_from_matrix(m);
    CHECK(q.a == doctest::Approx(p.a).epsilon(1e-10));
    CHECK(q.b == doctest::Approx(p.b).epsilon(1e-10));
    CHECK(q.c == doctest::Approx(p.c).epsilon(1e-10));
    CHECK(q.alpha == doctest::Approx(p.alpha).epsilon(1e-10));
    CHECK(q.beta == doctest::Approx(p.beta).epsilon(1e-10));
    CHECK(q.gamma == doctest::Approx(p.gamma).epsilon(1e-10));
    CHECK(m.volume() == doctest::Approx(p.volume()).epsilon(1e-10));
  }
}

TEST_CASE("degenerate lattices are rejected") {
  CHECK_THROWS_AS(LatticeParameters({-1, 4, 4, 90, 90, 90}).validate(), DataError);
  CHECK_THROWS_AS(LatticeParameters({4, 4, 4, 0, 90, 90}).validate(), DataError);
  // angle triple violating the metric inequality (sum > 360)
  CHECK_THROWS_AS(LatticeParameters({4, 4, 4, 155, 155, 60}).validate(), DataError);
}

TEST_CASE("lattice DOF encode/decode round trip") {
  Rng rng(23);
  for (int n : {1, 2, 8, 14, 40, 74, 90, 142, 148, 155, 160, 167, 168, 194, 200, 221, 230}) {
    SpaceGroupId sg(n);
    for (int trial = 0; trial < 20; ++trial) {
      LatticeParameters raw{rng.uniform(2, 9), rng.uniform(2, 9), rng.uniform(2, 9),
                            rng.uniform(60, 120), rng.uniform(60, 120), rng.uniform(60, 120)};
      if (raw.volume_factor() <= 1e-3)
        continue;
      LatticeParameters p = project_lattice(raw, sg);
      LatticeDOF k = encode_lattice(p, sg);
      REQUIRE(int(k.values.size()) == lattice_dof(sg));
      LatticeParameters q = decode_lattice(k, sg);
      REQUIRE(satisfies_lattice_class(q, sg, 0.0));  // exact by construction
      REQUIRE(std::abs(q.a - p.a) < 1e-9);
      REQUIRE(std::abs(q.c - p.c) < 1e-9);
      REQUIRE(std::abs(q.beta - p.beta) < 1e-9);
    }
  }
  // every real vector decodes to a valid cell
  for (int trial = 0; trial < 100; ++trial) {
    LatticeDOF k{{rng.normal(), rng.normal(), rng.normal(),
                  rng.normal(), rng.normal(), rng.normal()}};
    LatticeParameters p = decode_lattice(k, SpaceGroupId(2));
    CHECK(p.a > 0);
    CHECK(p.alpha > 0);
    CHECK(p.alpha < 180);
  }
  CHECK_THROWS_AS(decode_lattice(LatticeDOF{{0.0, 0.0}}, SpaceGroupId(225)), ConfigError);
}
