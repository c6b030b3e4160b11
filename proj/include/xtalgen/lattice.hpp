// Lattice handling: crystal systems, the per-system parameter constraints,
// projections onto a constraint class, parameter/matrix conversions and the
// reduced degree-of-freedom vector used by the diffusion sampler.

#ifndef XTALGEN_LATTICE_HPP_
#define XTALGEN_LATTICE_HPP_

#include <cmath>
#include <string>
#include <vector>

#include "xtalgen/util.hpp"

namespace xtalgen {

struct SpaceGroupId {
  int index;

  explicit SpaceGroupId(int i) : index(i) {
    if (i < 1 || i > 230)
      throw DataError("space group index out of range 1..230: " + std::to_string(i));
  }
  friend bool operator==(SpaceGroupId a, SpaceGroupId b) { return a.index == b.index; }
  friend bool operator!=(SpaceGroupId a, SpaceGroupId b) { return a.index != b.index; }
};

// Trigonal groups split by lattice class; R groups are carried on hexagonal
// axes, so TrigonalRhombohedral marks the Bravais class while sharing the
// hexagonal-axes parameter constraints.
enum class CrystalSystem {
  Triclinic,
  Monoclinic,
  Orthorhombic,
  Tetragonal,
  TrigonalRhombohedral,
  TrigonalHexagonalAxes,
  Hexagonal,
  Cubic,
};

inline bool is_rhombohedral_group(int n) {
  return n == 146 || n == 148 || n == 155 || n == 160 ||
         n == 161 || n == 166 || n == 167;
}

inline CrystalSystem crystal_system_of(SpaceGroupId sg) {
  int n = sg.index;
  if (n <= 2) return CrystalSystem::Triclinic;
  if (n <= 15) return CrystalSystem::Monoclinic;
  if (n <= 74) return CrystalSystem::Orthorhombic;
  if (n <= 142) return CrystalSystem::Tetragonal;
  if (n <= 167)
    return is_rhombohedral_group(n) ? CrystalSystem::TrigonalRhombohedral
                                    : CrystalSystem::TrigonalHexagonalAxes;
  if (n <= 194) return CrystalSystem::Hexagonal;
  return CrystalSystem::Cubic;
}

inline const char* crystal_system_name(CrystalSystem cs) {
  switch (cs) {
    case CrystalSystem::Triclinic: return "triclinic";
    case CrystalSystem::Monoclinic: return "monoclinic";
    case CrystalSystem::Orthorhombic: return "orthorhombic";
    case CrystalSystem::Tetragonal: return "tetragonal";
    case CrystalSystem::TrigonalRhombohedral: return "trigonal_rhombohedral";
    case CrystalSystem::TrigonalHexagonalAxes: return "trigonal_hexagonal_axes";
    case CrystalSystem::Hexagonal: return "hexagonal";
    case CrystalSystem::Cubic: return "cubic";
  }
  return "?";
}

// hexagonal-axes metric (a=b, 90/90/120) applies to all trigonal + hexagonal
inline bool has_hexagonal_metric(CrystalSystem cs) {
  return cs == CrystalSystem::TrigonalRhombohedral ||
         cs == CrystalSystem::TrigonalHexagonalAxes ||
         cs == CrystalSystem::Hexagonal;
}

inline int lattice_dof(SpaceGroupId sg) {
  switch (crystal_system_of(sg)) {
    case CrystalSystem::Triclinic: return 6;
    case CrystalSystem::Monoclinic: return 4;
    case CrystalSystem::Orthorhombic: return 3;
    case CrystalSystem::Tetragonal: return 2;
    case CrystalSystem::TrigonalRhombohedral:
    case CrystalSystem::TrigonalHexagonalAxes:
    case CrystalSystem::Hexagonal: return 2;
    case CrystalSystem::Cubic: return 1;
  }
  return 0;
}

// Cell parameters; lengths in angstroms, angles in degrees.
struct LatticeParameters {
  double a, b, c;
  double alpha, beta, gamma;

  void validate() const {
    auto ok_len = [](double x) { return std::isfinite(x) && x > 0.0; };
    auto ok_ang = [](double x) { return std::isfinite(x) && x > 0.0 && x < 180.0; };
    if (!ok_len(a) || !ok_len(b) || !ok_len(c))
      throw DataError("lattice lengths must be positive");
    if (!ok_ang(alpha) || !ok_ang(beta) || !ok_ang(gamma))
      throw DataError("lattice angles must lie in (0, 180)");
    if (volume_factor() <= 0.0)
      throw DataError("degenerate lattice: metric not positive definite");
  }

  // sqrt term of the triclinic volume formula; positive iff cell is valid
  double volume_factor() const {
    double ca = std::cos(alpha * kDeg), cb = std::cos(beta * kDeg), cg = std::cos(gamma * kDeg);
    return 1.0 - ca * ca - cb * cb - cg * cg + 2.0 * ca * cb * cg;
  }

  double volume() const {
    double f = volume_factor();
    return f > 0.0 ? a * b * c * std::sqrt(f) : 0.0;
  }

  static constexpr double kDeg = 3.14159265358979323846 / 180.0;
};

// Row-vector lattice matrix (rows l1, l2, l3), right handed.
struct LatticeMatrix {
  Mat3 rows;

  double volume() const { return det3(rows); }

  void validate() const {
    if (!(det3(rows) > 0.0))
      throw DataError("lattice matrix must have positive determinant");
  }

  Vec3 cartesian(const Vec3& frac) const { return row_times_mat(frac, rows); }

  // metric G_ij = l_i . l_j
  Mat3 metric() const {
    Mat3 g{};
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        g[i][j] = dot(rows[i], rows[j]);
    return g;
  }
};

// Fixed orientation: l1 along +x, l2 in the xy-plane with positive y,
// l3 completing a right-handed set.
inline LatticeMatrix matrix_from_parameters(const LatticeParameters& p) {
  p.validate();
  const double d = LatticeParameters::kDeg;
  double ca = std::cos(p.alpha * d), cb = std::cos(p.beta * d);
  double cg = std::cos(p.gamma * d), sg = std::sin(p.gamma * d);
  LatticeMatrix m;
  m.rows[0] = {p.a, 0.0, 0.0};
  m.rows[1] = {p.b * cg, p.b * sg, 0.0};
  double cx = p.c * cb;
  double cy = p.c * (ca - cb * cg) / sg;
  double cz2 = p.c * p.c - cx * cx - cy * cy;
  if (cz2 <= 0.0)
    throw DataError("degenerate lattice: cannot orient third vector");
  m.rows[2] = {cx, cy, std::sqrt(cz2)};
  return m;
}

inline LatticeParameters parameters_from_matrix(const LatticeMatrix& m) {
  m.validate();
  const Vec3& l1 = m.rows[0];
  const Vec3& l2 = m.rows[1];
  const Vec3& l3 = m.rows[2];
  LatticeParameters p{};
  p.a = norm(l1);
  p.b = norm(l2);
  p.c = norm(l3);
  auto angle = [](const Vec3& u, const Vec3& v) {
    double c = dot(u, v) / (norm(u) * norm(v));
    c = std::max(-1.0, std::min(1.0, c));
    return std::acos(c) / LatticeParameters::kDeg;
  };
  p.alpha = angle(l2, l3);
  p.beta = angle(l1, l3);
  p.gamma = angle(l1, l2);
  return p;
}

// Nearest parameter vector in the space group's constraint class:
// equal-length groups are replaced by their arithmetic mean, fixed angles
// snapped exactly, free parameters pass through.
inline LatticeParameters project_lattice(const LatticeParameters& in, SpaceGroupId sg) {
  in.validate();
  LatticeParameters p = in;
  switch (crystal_system_of(sg)) {
    case CrystalSystem::Triclinic:
      break;
    case CrystalSystem::Monoclinic:
      p.alpha = 90.0;
      p.gamma = 90.0;
      break;
    case CrystalSystem::Orthorhombic:
      p.alpha = p.beta = p.gamma = 90.0;
      break;
    case CrystalSystem::Tetragonal:
      p.a = p.b = 0.5 * (in.a + in.b);
      p.alpha = p.beta = p.gamma = 90.0;
      break;
    case CrystalSystem::TrigonalRhombohedral:
    case CrystalSystem::TrigonalHexagonalAxes:
    case CrystalSystem::Hexagonal:
      p.a = p.b = 0.5 * (in.a + in.b);
      p.alpha = p.beta = 90.0;
      p.gamma = 120.0;
      break;
    case CrystalSystem::Cubic:
      p.a = p.b = p.c = (in.a + in.b + in.c) / 3.0;
      p.alpha = p.beta = p.gamma = 90.0;
      break;
  }
  if (p.volume_factor() <= 0.0)
    throw DataError("projected lattice is degenerate");
  return p;
}

inline bool satisfies_lattice_class(const LatticeParameters& p, SpaceGroupId sg,
                                    double tol = 1e-9) {
  auto eq = [tol](double x, double y) { return std::abs(x - y) <= tol; };
  switch (crystal_system_of(sg)) {
    case CrystalSystem::Triclinic:
      return true;
    case CrystalSystem::Monoclinic:
      return eq(p.alpha, 90.0) && eq(p.gamma, 90.0);
    case CrystalSystem::Orthorhombic:
      return eq(p.alpha, 90.0) && eq(p.beta, 90.0) && eq(p.gamma, 90.0);
    case CrystalSystem::Tetragonal:
      return eq(p.a, p.b) && eq(p.alpha, 90.0) && eq(p.beta, 90.0) && eq(p.gamma, 90.0);
    case CrystalSystem::TrigonalRhombohedral:
    case CrystalSystem::TrigonalHexagonalAxes:
    case CrystalSystem::Hexagonal:
      return eq(p.a, p.b) && eq(p.alpha, 90.0) && eq(p.beta, 90.0) && eq(p.gamma, 120.0);
    case CrystalSystem::Cubic:
      return eq(p.a, p.b) && eq(p.b, p.c) &&
             eq(p.alpha, 90.0) && eq(p.beta, 90.0) && eq(p.gamma, 90.0);
  }
  return false;
}

// Reduced O(3)-invariant lattice representation diffused by the sampler.
// Lengths enter as log(a) and free angles as logit(theta/180), so every real
// vector decodes to a valid cell of the class.
struct LatticeDOF {
  std::vector<double> values;
};

namespace detail {
inline double angle_to_dof(double deg) { return std::log(deg / (180.0 - deg)); }
inline double dof_to_angle(double v) { return 180.0 / (1.0 + std::exp(-v)); }
}  // namespace detail

inline LatticeDOF encode_lattice(const LatticeParameters& in, SpaceGroupId sg) {
  LatticeParameters p = in;
  p.validate();
  if (!satisfies_lattice_class(p, sg, 1e-6))
    throw DataError("lattice does not satisfy the space group's constraint class");
  using detail::angle_to_dof;
  switch (crystal_system_of(sg)) {
    case CrystalSystem::Cubic:
      return {{std::log(p.a)}};
    case CrystalSystem::Tetragonal:
    case CrystalSystem::TrigonalRhombohedral:
    case CrystalSystem::TrigonalHexagonalAxes:
    case CrystalSystem::Hexagonal:
      return {{std::log(p.a), std::log(p.c)}};
    case CrystalSystem::Orthorhombic:
      return {{std::log(p.a), std::log(p.b), std::log(p.c)}};
    case CrystalSystem::Monoclinic:
      return {{std::log(p.a), std::log(p.b), std::log(p.c), angle_to_dof(p.beta)}};
    case CrystalSystem::Triclinic:
      return {{std::log(p.a), std::log(p.b), std::log(p.c),
               angle_to_dof(p.alpha), angle_to_dof(p.beta), angle_to_dof(p.gamma)}};
  }
  fail("unreachable");
}

inline LatticeParameters decode_lattice(const LatticeDOF& k, SpaceGroupId sg) {
  if (int(k.values.size()) != lattice_dof(sg))
    throw ConfigError("lattice DOF length mismatch for group " + std::to_string(sg.index));
  for (double v : k.values)
    if (!std::isfinite(v))
      throw DataError("non-finite lattice DOF");
  using detail::dof_to_angle;
  const auto& v = k.values;
  LatticeParameters p{};
  switch (crystal_system_of(sg)) {
    case CrystalSystem::Cubic:
      p = {std::exp(v[0]), std::exp(v[0]), std::exp(v[0]), 90, 90, 90};
      break;
    case CrystalSystem::Tetragonal:
      p = {std::exp(v[0]), std::exp(v[0]), std::exp(v[1]), 90, 90, 90};
      break;
    case CrystalSystem::TrigonalRhombohedral:
    case CrystalSystem::TrigonalHexagonalAxes:
    case CrystalSystem::Hexagonal:
      p = {std::exp(v[0]), std::exp(v[0]), std::exp(v[1]), 90, 90, 120};
      break;
    case CrystalSystem::Orthorhombic:
      p = {std::exp(v[0]), std::exp(v[1]), std::exp(v[2]), 90, 90, 90};
      break;
    case CrystalSystem::Monoclinic:
      p = {std::exp(v[0]), std::exp(v[1]), std::exp(v[2]), 90, dof_to_angle(v[3]), 90};
      break;
    case CrystalSystem::Triclinic:
      p = {std::exp(v[0]), std::exp(v[1]), std::exp(v[2]),
           dof_to_angle(v[3]), dof_to_angle(v[4]), dof_to_angle(v[5])};
      break;
  }
  return p;
}

}  // namespace xtalgen

#endif  // XTALGEN_LATTICE_HPP_
