// Periodic structure matching: tolerance-gated lattice comparison plus a
// species-respecting minimum-cost site assignment under anchor translations,
// with the RMS displacement normalized by the per-atom length scale.
//
// Desk-scale matcher: same-cell comparisons only, no Niggli reduction or
// supercell search. Anchor translations map site 0 of the first structure
// onto every same-species site of the second.

#ifndef XTALGEN_MATCHER_HPP_
#define XTALGEN_MATCHER_HPP_

#include <algorithm>
#include <optional>
#include <vector>

#include "xtalgen/structure.hpp"

namespace xtalgen {

struct MatchSettings {
  double ltol = 0.3;       // relative length tolerance
  double stol = 0.5;       // site tolerance on normalized RMS displacement
  double angle_tol = 10.0; // degrees

  void validate() const {
    if (!(ltol > 0) || !(stol > 0) || !(angle_tol > 0))
      throw ConfigError("match tolerances must be positive");
  }
};

struct MatchReport {
  bool matched = false;
  std::optional<double> rmse_normalized;  // present iff matched
};

// O(n^3) Hungarian algorithm, minimizing total cost over a square matrix.
inline std::vector<int> hungarian_assignment(const std::vector<std::vector<double>>& cost) {
  const int n = int(cost.size());
  std::vector<double> u(n + 1), v(n + 1);
  std::vector<int> p(n + 1), way(n + 1);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::vector<double> minv(n + 1, 1e300);
    std::vector<bool> used(n + 1, false);
    do {
      used[j0] = true;
      int i0 = p[j0], j1 = 0;
      double delta = 1e300;
      for (int j = 1; j <= n; ++j) {
        if (used[j]) continue;
        double cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      int j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0);
  }
  std::vector<int> row_to_col(n, -1);
  for (int j = 1; j <= n; ++j)
    if (p[j] > 0)
      row_to_col[p[j] - 1] = j - 1;
  return row_to_col;
}

namespace detail {

// squared minimum-image Cartesian distance under the given cell
inline double min_image_dist2(const Vec3& fa, const Vec3& fb, const Mat3& rows) {
  Vec3 d{fb[0] - fa[0], fb[1] - fa[1], fb[2] - fa[2]};
  for (int c = 0; c < 3; ++c)
    d[c] -= std::round(d[c]);
  double best = 1e300;
  for (int sx = -1; sx <= 1; ++sx)
    for (int sy = -1; sy <= 1; ++sy)
      for (int sz = -1; sz <= 1; ++sz) {
        Vec3 shifted{d[0] + sx, d[1] + sy, d[2] + sz};
        Vec3 cart = row_times_mat(shifted, rows);
        best = std::min(best, dot(cart, cart));
      }
  return best;
}

constexpr double kInfCost = 1e12;

// minimum mean squared displacement over anchors and assignments
inline double best_assignment_ms(const CrystalStructure& s1, const CrystalStructure& s2,
                                 const Mat3& cell_rows) {
  const int n = int(s1.size());
  double best = 1e300;
  for (int anchor = 0; anchor < n; ++anchor) {
    if (s2.species[anchor] != s1.species[0])
      continue;
    Vec3 tau{s2.frac_coords[anchor][0] - s1.frac_coords[0][0],
             s2.frac_coords[anchor][1] - s1.frac_coords[0][1],
             s2.frac_coords[anchor][2] - s1.frac_coords[0][2]};
    std::vector<std::vector<double>> cost(n, std::vector<double>(n));
    for (int i = 0; i < n; ++i) {
      Vec3 moved = s1.frac_coords[i] + tau;
      for (int k = 0; k < n; ++k)
        cost[i][k] = s1.species[i] == s2.species[k]
                         ? min_image_dist2(moved, s2.frac_coords[k], cell_rows)
                         : kInfCost;
    }
    std::vector<int> assign = hungarian_assignment(cost);
    double total = 0;
    bool valid = true;
    for (int i = 0; i < n; ++i) {
      if (cost[i][assign[i]] >= kInfCost) {
        valid = false;
        break;
      }
      total += cost[i][assign[i]];
    }
    if (valid)
      best = std::min(best, total / n);
  }
  return best;
}

}  // namespace detail

inline MatchReport match_structures(const CrystalStructure& s1, const CrystalStructure& s2,
                                    const MatchSettings& settings = {}) {
  settings.validate();
  s1.validate();
  s2.validate();

  if (s1.composition() != s2.composition())
    return {};

  LatticeParameters p1 = parameters_from_matrix(s1.lattice);
  LatticeParameters p2 = parameters_from_matrix(s2.lattice);
  std::array<double, 3> len1{p1.a, p1.b, p1.c}, len2{p2.a, p2.b, p2.c};
  std::array<double, 3> ang1{p1.alpha, p1.beta, p1.gamma}, ang2{p2.alpha, p2.beta, p2.gamma};
  std::sort(len1.begin(), len1.end());
  std::sort(len2.begin(), len2.end());
  std::sort(ang1.begin(), ang1.end());
  std::sort(ang2.begin(), ang2.end());
  for (int i = 0; i < 3; ++i) {
    double ratio = std::max(len1[i] / len2[i], len2[i] / len1[i]);
    if (ratio > 1.0 + settings.ltol)
      return {};
    if (std::abs(ang1[i] - ang2[i]) > settings.angle_tol)
      return {};
  }

  // symmetric site metric: the average of the two parameter sets
  LatticeParameters avg{0.5 * (p1.a + p2.a),         0.5 * (p1.b + p2.b),
                        0.5 * (p1.c + p2.c),         0.5 * (p1.alpha + p2.alpha),
                        0.5 * (p1.beta + p2.beta),   0.5 * (p1.gamma + p2.gamma)};
  Mat3 rows = matrix_from_parameters(avg).rows;

  double ms = detail::best_assignment_ms(s1, s2, rows);
  if (ms >= 1e299)
    return {};
  double rms = std::sqrt(ms);
  double scale = std::cbrt(avg.volume() / double(s1.size()));
  double normalized = rms / scale;
  if (normalized > settings.stol)
    return {};
  return {true, normalized};
}

struct MatchRateResult {
  double rate_percent = 0.0;
  std::optional<double> mean_rmse;  // over matched pairs only
};

inline MatchRateResult match_rate(const std::vector<MatchReport>& reports) {
  if (reports.empty())
    throw DataError("match_rate needs at least one report");
  int matched = 0;
  double rmse_sum = 0;
  for (const MatchReport& r : reports)
    if (r.matched) {
      ++matched;
      rmse_sum += r.rmse_normalized.value();
    }
  MatchRateResult out;
  out.rate_percent = 100.0 * matched / double(reports.size());
  if (matched > 0)
    out.mean_rmse = rmse_sum / matched;
  return out;
}

}  // namespace xtalgen

#endif  // XTALGEN_MATCHER_HPP_
