// Derivation of Wyckoff positions from symmetry operations, in exact
// rational arithmetic. Used by the table generator tool and by the table
// integrity cross-check test; the runtime library only loads the bundled
// result.
//
// Method: every special stratum lies in the fixed-point set of a single
// operator, and every lower-dimensional stratum is the intersection of two
// such sets (products of mirrors are rotations, so triple intersections are
// never needed). Candidate subspaces are therefore the per-operator fixed
// sets plus their pairwise intersections, canonicalized modulo lattice
// translations, then classified into orbits under the group.

#ifndef XTALGEN_WYCKOFF_DERIVE_HPP_
#define XTALGEN_WYCKOFF_DERIVE_HPP_

#include <algorithm>
#include <array>
#include <cstdint>
#include <numeric>
#include <set>
#include <vector>

#include "xtalgen/symops.hpp"
#include "xtalgen/wyckoff.hpp"

namespace xtalgen {
namespace derive {

using RVec3 = std::array<Rational, 3>;

inline bool rvec_less(const RVec3& a, const RVec3& b) {
  for (int i = 0; i < 3; ++i)
    if (a[i] != b[i]) return a[i] < b[i];
  return false;
}

// Affine subspace of the torus in a canonical form: basis rows are primitive
// integer vectors in reduced echelon shape (each row owns a pivot column the
// others are zero in), the origin has zero pivot components and lexicograph-
// ically minimal remaining components modulo all lattice identifications.
struct Subspace {
  int dim = 0;
  std::vector<RVec3> basis;      // dim rows
  std::vector<int> pivots;       // pivot column per row
  RVec3 origin{};

  friend bool operator<(const Subspace& a, const Subspace& b) {
    if (a.dim != b.dim) return a.dim < b.dim;
    for (int r = 0; r < a.dim; ++r) {
      if (rvec_less(a.basis[r], b.basis[r])) return true;
      if (rvec_less(b.basis[r], a.basis[r])) return false;
    }
    return rvec_less(a.origin, b.origin);
  }
  friend bool operator==(const Subspace& a, const Subspace& b) {
    return a.dim == b.dim && a.basis == b.basis && a.origin == b.origin;
  }
};

inline std::int64_t llgcd(std::int64_t a, std::int64_t b) {
  return std::gcd(a < 0 ? -a : a, b < 0 ? -b : b);
}

// Reduced echelon form of direction rows; scales to primitive integer rows.
inline void echelon_basis(std::vector<RVec3>& rows, std::vector<int>& pivots) {
  pivots.clear();
  int rank = 0;
  for (int col = 0; col < 3 && rank < int(rows.size()); ++col) {
    int sel = -1;
    for (int r = rank; r < int(rows.size()); ++r)
      if (rows[r][col].num != 0) { sel = r; break; }
    if (sel < 0) continue;
    std::swap(rows[rank], rows[sel]);
    Rational inv = Rational(1) / rows[rank][col];
    for (int j = 0; j < 3; ++j) rows[rank][j] = rows[rank][j] * inv;
    for (int r = 0; r < int(rows.size()); ++r) {
      if (r == rank || rows[r][col].num == 0) continue;
      Rational f = rows[r][col];
      for (int j = 0; j < 3; ++j) rows[r][j] = rows[r][j] - f * rows[rank][j];
    }
    pivots.push_back(col);
    ++rank;
  }
  rows.resize(rank);
  for (int r = 0; r < rank; ++r) {
    std::int64_t l = 1;
    for (int j = 0; j < 3; ++j) l = std::lcm(l, rows[r][j].den);
    std::int64_t g = 0;
    for (int j = 0; j < 3; ++j) {
      rows[r][j] = rows[r][j] * Rational(l);
      if (!rows[r][j].is_integer()) fail("wyckoff derive: non-integer basis row");
      g = llgcd(g, rows[r][j].num);
    }
    if (g > 1)
      for (int j = 0; j < 3; ++j) rows[r][j] = rows[r][j] / Rational(g);
    if (rows[r][pivots[r]].num < 0)
      for (int j = 0; j < 3; ++j) rows[r][j] = -rows[r][j];
  }
}

inline Subspace canonicalize(std::vector<RVec3> rows, RVec3 origin) {
  Subspace s;
  echelon_basis(rows, s.pivots);
  s.basis = std::move(rows);
  s.dim = int(s.basis.size());

  // zero out the pivot components of the origin (free shift along the space)
  for (int r = 0; r < s.dim; ++r) {
    int p = s.pivots[r];
    Rational f = origin[p] / s.basis[r][p];
    for (int j = 0; j < 3; ++j) origin[j] = origin[j] - f * s.basis[r][j];
  }
  for (int j = 0; j < 3; ++j) origin[j] = origin[j].mod1();

  // minimize remaining components over the identifications generated by a
  // unit lattice step along each pivot column followed by re-zeroing
  RVec3 best = origin;
  std::vector<int> kmax(s.dim);
  for (int r = 0; r < s.dim; ++r) {
    std::int64_t v = s.basis[r][s.pivots[r]].num;
    if (v < 1 || v > 6) fail("wyckoff derive: unexpected pivot magnitude");
    kmax[r] = int(v);
  }
  std::vector<int> k(s.dim, 0);
  while (true) {
    RVec3 cand = origin;
    for (int r = 0; r < s.dim; ++r)
      for (int j = 0; j < 3; ++j)
        cand[j] = cand[j] - Rational(k[r]) * s.basis[r][j] / s.basis[r][s.pivots[r]];
    for (int r = 0; r < s.dim; ++r) cand[s.pivots[r]] = Rational(0);
    for (int j = 0; j < 3; ++j) cand[j] = cand[j].mod1();
    if (rvec_less(cand, best)) best = cand;
    int i = 0;
    for (; i < s.dim; ++i) {
      if (++k[i] < kmax[i]) break;
      k[i] = 0;
    }
    if (i == s.dim) break;
  }
  s.origin = best;
  return s;
}

// Rational Gauss on [A | b]; returns false if inconsistent, otherwise a
// particular solution (free unknowns zero) and null-space basis rows.
inline bool solve_affine(std::vector<std::vector<Rational>> a, std::vector<Rational> b,
                         std::vector<Rational>& particular,
                         std::vector<std::vector<Rational>>& null_basis) {
  const int m = int(a.size());
  const int n = m ? int(a[0].size()) : 0;
  std::vector<int> pivot_col;
  int rank = 0;
  for (int col = 0; col < n && rank < m; ++col) {
    int sel = -1;
    for (int r = rank; r < m; ++r)
      if (a[r][col].num != 0) { sel = r; break; }
    if (sel < 0) continue;
    std::swap(a[rank], a[sel]);
    std::swap(b[rank], b[sel]);
    Rational inv = Rational(1) / a[rank][col];
    for (int j = 0; j < n; ++j) a[rank][j] = a[rank][j] * inv;
    b[rank] = b[rank] * inv;
    for (int r = 0; r < m; ++r) {
      if (r == rank || a[r][col].num == 0) continue;
      Rational f = a[r][col];
      for (int j = 0; j < n; ++j) a[r][j] = a[r][j] - f * a[rank][j];
      b[r] = b[r] - f * b[rank];
    }
    pivot_col.push_back(col);
    ++rank;
  }
  for (int r = rank; r < m; ++r)
    if (b[r].num != 0) return false;

  particular.assign(n, Rational(0));
  for (int r = 0; r < rank; ++r) particular[pivot_col[r]] = b[r];
  null_basis.clear();
  std::vector<bool> is_pivot(n, false);
  for (int c : pivot_col) is_pivot[c] = true;
  for (int freec = 0; freec < n; ++freec) {
    if (is_pivot[freec]) continue;
    std::vector<Rational> v(n, Rational(0));
    v[freec] = Rational(1);
    for (int r = 0; r < rank; ++r) v[pivot_col[r]] = -a[r][freec];
    null_basis.push_back(std::move(v));
  }
  return true;
}

// Fixed-point sets of one operator: solve (W - I) x = -(w + t) over all
// integer shifts t compatible with x in the unit cell.
inline void fixed_subspaces(const SymOp& op, std::vector<Subspace>& out) {
  std::array<std::array<std::int64_t, 3>, 3> a{};
  bool any = false;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      a[i][j] = op.rot[i][j] - (i == j ? 1 : 0);
      if (a[i][j] != 0) any = true;
    }
  std::array<std::pair<int, int>, 3> trange;
  for (int i = 0; i < 3; ++i) {
    std::int64_t lo = 0, hi = 0;
    for (int j = 0; j < 3; ++j) {
      if (a[i][j] > 0) hi += a[i][j];
      else lo += a[i][j];
    }
    // need -(w_i + t_i) in [lo, hi]
    double w = op.tran[i].to_double();
    int tlo = int(std::ceil(-double(hi) - w - 1e-9));
    int thi = int(std::floor(-double(lo) - w + 1e-9));
    if (a[i][0] == 0 && a[i][1] == 0 && a[i][2] == 0) {
      if (op.tran[i].num != 0) return;  // screw/glide component: no fixed points
      tlo = thi = 0;
    }
    if (tlo > thi) return;
    trange[i] = {tlo, thi};
  }
  if (!any) return;  // pure translation
  for (int t0 = trange[0].first; t0 <= trange[0].second; ++t0)
    for (int t1 = trange[1].first; t1 <= trange[1].second; ++t1)
      for (int t2 = trange[2].first; t2 <= trange[2].second; ++t2) {
        std::vector<std::vector<Rational>> mat(3, std::vector<Rational>(3));
        std::vector<Rational> rhs(3);
        std::array<int, 3> t{t0, t1, t2};
        for (int i = 0; i < 3; ++i) {
          for (int j = 0; j < 3; ++j) mat[i][j] = Rational(a[i][j]);
          rhs[i] = -(op.tran[i] + Rational(t[i]));
        }
        std::vector<Rational> x0;
        std::vector<std::vector<Rational>> null_rows;
        if (!solve_affine(mat, rhs, x0, null_rows)) continue;
        std::vector<RVec3> rows;
        for (auto& v : null_rows) rows.push_back({v[0], v[1], v[2]});
        out.push_back(canonicalize(std::move(rows), {x0[0], x0[1], x0[2]}));
      }
}

// All intersections of s1 with lattice translates of s2.
inline void intersect_subspaces(const Subspace& s1, const Subspace& s2,
                                std::vector<Subspace>& out) {
  const int d1 = s1.dim, d2 = s2.dim;
  // z range: a point on s2 mod 1 is o2 + z + B2 v with v in [0,1)^d2
  std::array<std::pair<int, int>, 3> zr;
  for (int i = 0; i < 3; ++i) {
    double span = 0;
    for (int r = 0; r < d2; ++r) span += std::abs(s2.basis[r][i].to_double());
    zr[i] = {int(-std::ceil(span + 1.0)), int(std::ceil(span + 1.0))};
  }
  for (int z0 = zr[0].first; z0 <= zr[0].second; ++z0)
    for (int z1 = zr[1].first; z1 <= zr[1].second; ++z1)
      for (int z2 = zr[2].first; z2 <= zr[2].second; ++z2) {
        std::vector<std::vector<Rational>> mat(3, std::vector<Rational>(d1 + d2));
        std::vector<Rational> rhs(3);
        std::array<int, 3> z{z0, z1, z2};
        for (int i = 0; i < 3; ++i) {
          for (int r = 0; r < d1; ++r) mat[i][r] = s1.basis[r][i];
          for (int r = 0; r < d2; ++r) mat[i][d1 + r] = -s2.basis[r][i];
          rhs[i] = s2.origin[i] + Rational(z[i]) - s1.origin[i];
        }
        std::vector<Rational> y0;
        std::vector<std::vector<Rational>> null_rows;
        if (!solve_affine(mat, rhs, y0, null_rows)) continue;
        RVec3 origin = s1.origin;
        for (int i = 0; i < 3; ++i)
          for (int r = 0; r < d1; ++r)
            origin[i] = origin[i] + y0[r] * s1.basis[r][i];
        std::vector<RVec3> rows;
        for (auto& v : null_rows) {
          RVec3 dir{};
          bool nonzero = false;
          for (int i = 0; i < 3; ++i) {
            for (int r = 0; r < d1; ++r) dir[i] = dir[i] + v[r] * s1.basis[r][i];
            if (dir[i].num != 0) nonzero = true;
          }
          if (nonzero) rows.push_back(dir);
        }
        out.push_back(canonicalize(std::move(rows), origin));
      }
}

inline Subspace apply_op(const SymOp& g, const Subspace& s) {
  std::vector<RVec3> rows(s.dim);
  for (int r = 0; r < s.dim; ++r)
    for (int i = 0; i < 3; ++i) {
      rows[r][i] = Rational(0);
      for (int j = 0; j < 3; ++j)
        rows[r][i] = rows[r][i] + Rational(g.rot[i][j]) * s.basis[r][j];
    }
  RVec3 origin{};
  for (int i = 0; i < 3; ++i) {
    origin[i] = g.tran[i];
    for (int j = 0; j < 3; ++j)
      origin[i] = origin[i] + Rational(g.rot[i][j]) * s.origin[j];
  }
  return canonicalize(std::move(rows), origin);
}

// ops fixing the subspace pointwise (same parametrization up to a lattice
// translation); the orbit of a generic point has |G| / stab points
inline int stabilizer_order(const std::vector<SymOp>& ops, const Subspace& s) {
  int count = 0;
  for (const SymOp& g : ops) {
    bool fixes = true;
    for (int r = 0; r < s.dim && fixes; ++r)
      for (int i = 0; i < 3; ++i) {
        Rational wi(0);
        for (int j = 0; j < 3; ++j)
          wi = wi + Rational(g.rot[i][j]) * s.basis[r][j];
        if (wi != s.basis[r][i]) { fixes = false; break; }
      }
    if (!fixes) continue;
    for (int i = 0; i < 3 && fixes; ++i) {
      Rational oi = g.tran[i] - s.origin[i];
      for (int j = 0; j < 3; ++j)
        oi = oi + Rational(g.rot[i][j]) * s.origin[j];
      if (!oi.is_integer()) fixes = false;
    }
    if (fixes) ++count;
  }
  return count;
}

inline AffineMap param_map(const Subspace& s) {
  AffineMap m;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 4; ++j)
      m.m[i][j] = Rational(0);
  for (int r = 0; r < s.dim; ++r)
    for (int i = 0; i < 3; ++i)
      m.m[i][s.pivots[r]] = s.basis[r][i];
  for (int i = 0; i < 3; ++i)
    m.m[i][3] = s.origin[i];
  return m;
}

inline AffineMap compose(const SymOp& g, const AffineMap& m) {
  AffineMap r;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 4; ++j) {
      r.m[i][j] = Rational(0);
      for (int k = 0; k < 3; ++k)
        r.m[i][j] = r.m[i][j] + Rational(g.rot[i][k]) * m.m[k][j];
    }
  for (int i = 0; i < 3; ++i)
    r.m[i][3] = (r.m[i][3] + g.tran[i]).mod1();
  return r;
}

inline bool symop_less(const SymOp& a, const SymOp& b) {
  if (a.rot != b.rot) return a.rot < b.rot;
  for (int i = 0; i < 3; ++i)
    if (a.tran[i] != b.tran[i]) return a.tran[i] < b.tran[i];
  return false;
}

// Derives the full Wyckoff position list for one space group.
inline std::vector<WyckoffPosition> derive_wyckoff_positions(int sg_number) {
  std::vector<SymOp> ops = spacegroup_operations(sg_number);
  std::sort(ops.begin(), ops.end(), symop_less);
  auto it = std::find(ops.begin(), ops.end(), SymOp::identity());
  std::iter_swap(ops.begin(), it);
  const int order = int(ops.size());

  std::set<Subspace> cands;
  {
    std::vector<RVec3> full = {{Rational(1), Rational(0), Rational(0)},
                               {Rational(0), Rational(1), Rational(0)},
                               {Rational(0), Rational(0), Rational(1)}};
    cands.insert(canonicalize(full, {Rational(0), Rational(0), Rational(0)}));
  }
  std::vector<Subspace> fixed;
  for (const SymOp& g : ops)
    fixed_subspaces(g, fixed);
  for (const Subspace& s : fixed)
    cands.insert(s);

  std::vector<Subspace> extended(cands.begin(), cands.end());
  std::vector<Subspace> inter;
  for (std::size_t i = 0; i < extended.size(); ++i) {
    if (extended[i].dim < 1 || extended[i].dim > 2) continue;
    for (std::size_t j = i + 1; j < extended.size(); ++j) {
      if (extended[j].dim < 1 || extended[j].dim > 2) continue;
      intersect_subspaces(extended[i], extended[j], inter);
    }
  }
  for (const Subspace& s : inter)
    cands.insert(s);

  std::vector<Subspace> all(cands.begin(), cands.end());

  // orbit classification; the candidate set must be closed under the group
  std::vector<int> klass(all.size(), -1);
  int nclasses = 0;
  auto find_index = [&](const Subspace& s) {
    auto pos = std::lower_bound(all.begin(), all.end(), s);
    if (pos == all.end() || !(*pos == s))
      fail("wyckoff derive: candidate set not closed under the group (sg " +
           std::to_string(sg_number) + ")");
    return int(pos - all.begin());
  };
  for (std::size_t i = 0; i < all.size(); ++i) {
    if (klass[i] >= 0) continue;
    int c = nclasses++;
    for (const SymOp& g : ops) {
      int idx = find_index(apply_op(g, all[i]));
      if (klass[idx] >= 0 && klass[idx] != c)
        fail("wyckoff derive: inconsistent orbit classification");
      klass[idx] = c;
    }
  }

  struct ClassInfo {
    int rep = -1;
    int mult = 0;
    int dof = 0;
  };
  std::vector<ClassInfo> classes(nclasses);
  for (std::size_t i = 0; i < all.size(); ++i) {
    ClassInfo& ci = classes[klass[i]];
    if (ci.rep < 0) {  // `all` is sorted, first member is the lex-least
      ci.rep = int(i);
      int stab = stabilizer_order(ops, all[i]);
      if (order % stab != 0)
        fail("wyckoff derive: stabilizer does not divide group order");
      ci.mult = order / stab;
      ci.dof = all[i].dim;
    }
  }

  std::vector<int> corder(nclasses);
  for (int c = 0; c < nclasses; ++c) corder[c] = c;
  std::sort(corder.begin(), corder.end(), [&](int x, int y) {
    if (classes[x].mult != classes[y].mult) return classes[x].mult < classes[y].mult;
    if (classes[x].dof != classes[y].dof) return classes[x].dof < classes[y].dof;
    return all[classes[x].rep] < all[classes[y].rep];
  });

  if (nclasses > 27)
    fail("wyckoff derive: more than 27 positions in sg " + std::to_string(sg_number));

  std::vector<WyckoffPosition> result;
  for (int rank = 0; rank < nclasses; ++rank) {
    const ClassInfo& ci = classes[corder[rank]];
    const Subspace& rep = all[ci.rep];
    WyckoffPosition p;
    // ITA letters run a..z; the 27th position (group 47 only) is written 'A'
    p.letter = rank < 26 ? char('a' + rank) : 'A';
    p.multiplicity = ci.mult;
    for (int r = 0; r < rep.dim; ++r)
      p.free_mask[rep.pivots[r]] = true;
    AffineMap base = param_map(rep);
    for (const SymOp& g : ops) {
      AffineMap img = compose(g, base);
      if (std::find(p.orbit_maps.begin(), p.orbit_maps.end(), img) == p.orbit_maps.end())
        p.orbit_maps.push_back(img);
    }
    if (int(p.orbit_maps.size()) != p.multiplicity)
      fail("wyckoff derive: orbit map count != multiplicity in sg " +
           std::to_string(sg_number));
    result.push_back(std::move(p));
  }
  if (result.empty() || result.back().dof() != 3)
    fail("wyckoff derive: general position missing or misplaced in sg " +
         std::to_string(sg_number));
  return result;
}

inline WyckoffTable derive_full_table() {
  WyckoffTable table;
  for (int n = 1; n <= 230; ++n)
    table.set_positions(n, derive_wyckoff_positions(n));
  table.validate();
  return table;
}

}  // namespace derive
}  // namespace xtalgen

#endif  // XTALGEN_WYCKOFF_DERIVE_HPP_
