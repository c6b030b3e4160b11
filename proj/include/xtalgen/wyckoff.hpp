// Wyckoff-position table: exact orbit generators per space group, the
// bundled-file loader, orbit expansion and the free-parameter projection.
//
// The bundled table (wyckoff_table.v1) stores every orbit map as a 3x4
// array of exact rationals acting on the column (x, y, z, 1). Linear parts
// are integral; only pivot columns (marked by the free mask) are nonzero.

#ifndef XTALGEN_WYCKOFF_HPP_
#define XTALGEN_WYCKOFF_HPP_

#include <array>
#include <cmath>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "xtalgen/lattice.hpp"
#include "xtalgen/util.hpp"

namespace xtalgen {

struct AffineMap {
  std::array<std::array<Rational, 4>, 3> m;

  friend bool operator==(const AffineMap& a, const AffineMap& b) { return a.m == b.m; }
  friend bool operator<(const AffineMap& a, const AffineMap& b) {
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 4; ++j) {
        if (a.m[i][j] != b.m[i][j]) return a.m[i][j] < b.m[i][j];
      }
    return false;
  }

  Vec3 apply(const Vec3& p) const {
    Vec3 r{};
    for (int i = 0; i < 3; ++i)
      r[i] = m[i][0].to_double() * p[0] + m[i][1].to_double() * p[1] +
             m[i][2].to_double() * p[2] + m[i][3].to_double();
    return r;
  }
};

struct WyckoffPosition {
  char letter = '?';
  int multiplicity = 0;
  std::vector<AffineMap> orbit_maps;   // first entry is the representative
  std::array<bool, 3> free_mask{};

  int dof() const { return int(free_mask[0]) + int(free_mask[1]) + int(free_mask[2]); }
  bool fully_fixed() const { return dof() == 0; }
};

class WyckoffTable {
 public:
  static constexpr const char* kFormat = "wyckoff_table.v1";

  const std::vector<WyckoffPosition>& positions(SpaceGroupId sg) const {
    return groups_[sg.index - 1];
  }

  const WyckoffPosition& position(SpaceGroupId sg, char letter) const {
    for (const WyckoffPosition& p : groups_[sg.index - 1])
      if (p.letter == letter)
        return p;
    throw DataError(std::string("unknown Wyckoff letter '") + letter +
                    "' for space group " + std::to_string(sg.index));
  }

  bool has_letter(SpaceGroupId sg, char letter) const {
    for (const WyckoffPosition& p : groups_[sg.index - 1])
      if (p.letter == letter)
        return true;
    return false;
  }

  std::vector<char> letters(SpaceGroupId sg) const {
    std::vector<char> out;
    for (const WyckoffPosition& p : groups_[sg.index - 1])
      out.push_back(p.letter);
    return out;
  }

  // multiplicity of the general position == operator count of the group
  int group_order(SpaceGroupId sg) const {
    return groups_[sg.index - 1].back().multiplicity;
  }

  void set_positions(int sg_number, std::vector<WyckoffPosition> positions) {
    groups_[sg_number - 1] = std::move(positions);
  }

  static WyckoffTable load(const std::string& path);
  void save(const std::string& path) const;
  void validate() const;

 private:
  std::array<std::vector<WyckoffPosition>, 230> groups_;
};

inline void WyckoffTable::validate() const {
  for (int n = 1; n <= 230; ++n) {
    const auto& ps = groups_[n - 1];
    if (ps.empty())
      throw DataError("wyckoff table: space group " + std::to_string(n) + " missing");
    std::string seen;
    for (const auto& p : ps) {
      if (seen.find(p.letter) != std::string::npos)
        throw DataError("wyckoff table: duplicate letter in group " + std::to_string(n));
      seen += p.letter;
      if (int(p.orbit_maps.size()) != p.multiplicity)
        throw DataError("wyckoff table: orbit size != multiplicity in group " +
                        std::to_string(n));
    }
    // ITA convention: general position (all coordinates free) comes last
    if (ps.back().dof() != 3)
      throw DataError("wyckoff table: general position not last in group " +
                      std::to_string(n));
  }
}

inline WyckoffTable WyckoffTable::load(const std::string& path) {
  std::ifstream in(path);
  if (!in)
    throw DataError("cannot open wyckoff table: " + path);
  WyckoffTable table;
  std::string line;
  bool saw_header = false;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw DataError(path + ":" + std::to_string(lineno) + ": " + e.what());
    }
    if (j.contains("format")) {
      if (j.at("format").get<std::string>() != kFormat)
        throw DataError("wyckoff table: unsupported format " +
                        j.at("format").get<std::string>());
      saw_header = true;
      continue;
    }
    if (!saw_header)
      throw DataError("wyckoff table: missing format header line");
    int sg = j.at("sg").get<int>();
    if (sg < 1 || sg > 230)
      throw DataError("wyckoff table: space group out of range");
    std::string expect_class = crystal_system_name(crystal_system_of(SpaceGroupId(sg)));
    if (j.at("lattice_class").get<std::string>() != expect_class)
      throw DataError("wyckoff table: lattice class mismatch for group " +
                      std::to_string(sg));
    WyckoffPosition p;
    std::string letter = j.at("letter").get<std::string>();
    if (letter.size() != 1)
      throw DataError("wyckoff table: letter must be one character");
    p.letter = letter[0];
    p.multiplicity = j.at("mult").get<int>();
    auto free = j.at("free");
    for (int i = 0; i < 3; ++i)
      p.free_mask[i] = free.at(i).get<bool>();
    for (const auto& jm : j.at("maps")) {
      AffineMap am;
      for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 4; ++c)
          am.m[r][c] = parse_rational(jm.at(r).at(c).get<std::string>());
      p.orbit_maps.push_back(am);
    }
    table.groups_[sg - 1].push_back(std::move(p));
  }
  table.validate();
  return table;
}

inline void WyckoffTable::save(const std::string& path) const {
  validate();
  std::ofstream out(path);
  if (!out)
    throw DataError("cannot write wyckoff table: " + path);
  out << nlohmann::json{{"format", kFormat}}.dump() << '\n';
  for (int n = 1; n <= 230; ++n) {
    std::string lattice_class = crystal_system_name(crystal_system_of(SpaceGroupId(n)));
    for (const auto& p : groups_[n - 1]) {
      nlohmann::json jmaps = nlohmann::json::array();
      for (const auto& am : p.orbit_maps) {
        nlohmann::json rows = nlohmann::json::array();
        for (int r = 0; r < 3; ++r) {
          nlohmann::json row = nlohmann::json::array();
          for (int c = 0; c < 4; ++c)
            row.push_back(am.m[r][c].str());
          rows.push_back(row);
        }
        jmaps.push_back(rows);
      }
      nlohmann::json j{{"sg", n},
                       {"letter", std::string(1, p.letter)},
                       {"mult", p.multiplicity},
                       {"maps", jmaps},
                       {"free", {p.free_mask[0], p.free_mask[1], p.free_mask[2]}},
                       {"lattice_class", lattice_class}};
      out << j.dump() << '\n';
    }
  }
}

// Expands a Wyckoff orbit for the given free parameters. Components of
// free_params under false mask bits are ignored (the maps' linear parts do
// not touch them). Duplicate points signal a corrupt table and throw.
inline std::vector<Vec3> wyckoff_orbit(const WyckoffTable& table, SpaceGroupId sg,
                                       char letter, const Vec3& free_params = {0, 0, 0}) {
  const WyckoffPosition& pos = table.position(sg, letter);
  Vec3 params{};
  for (int c = 0; c < 3; ++c) {
    if (!pos.free_mask[c])
      continue;  // masked components are ignored whatever the caller passed
    if (!std::isfinite(free_params[c]))
      throw DataError("non-finite free parameter for wyckoff orbit");
    params[c] = free_params[c];
  }
  std::vector<Vec3> coords;
  coords.reserve(pos.orbit_maps.size());
  for (const AffineMap& m : pos.orbit_maps)
    coords.push_back(wrap01(m.apply(params)));
  for (std::size_t i = 0; i < coords.size(); ++i)
    for (std::size_t j = i + 1; j < coords.size(); ++j) {
      double d = 0;
      for (int k = 0; k < 3; ++k) {
        double c = std::abs(coords[i][k] - coords[j][k]);
        d = std::max(d, std::min(c, 1.0 - c));
      }
      if (d < 1e-9)
        throw DataError(std::string("wyckoff table integrity: duplicate orbit points, group ") +
                        std::to_string(sg.index) + " letter " + letter);
    }
  return coords;
}

struct FractionalFit {
  Vec3 free_params;     // fitted parameters in [0,1), zero on masked-off slots
  Vec3 representative;  // regenerated coordinate of the first orbit map, in [0,1)
};

// Least-squares fit of the representative map's free parameters to a target
// coordinate, searching integer shifts in {-1,0,1}^3 for the periodic best.
inline FractionalFit project_fractional(const WyckoffTable& table, SpaceGroupId sg,
                                        char letter, const Vec3& coords) {
  const WyckoffPosition& pos = table.position(sg, letter);
  const AffineMap& rep = pos.orbit_maps.front();

  // pivot columns of the representative map
  std::vector<int> cols;
  for (int j = 0; j < 3; ++j)
    if (pos.free_mask[j])
      cols.push_back(j);
  const int d = int(cols.size());

  std::array<std::array<double, 3>, 3> a{};  // 3 x d
  Vec3 b{};
  for (int i = 0; i < 3; ++i) {
    for (int k = 0; k < d; ++k)
      a[i][k] = rep.m[i][cols[k]].to_double();
    b[i] = rep.m[i][3].to_double();
  }

  // normal matrix (AtA) and its inverse, d <= 3
  std::array<std::array<double, 3>, 3> ata{};
  for (int r = 0; r < d; ++r)
    for (int c = 0; c < d; ++c)
      for (int i = 0; i < 3; ++i)
        ata[r][c] += a[i][r] * a[i][c];
  std::array<std::array<double, 3>, 3> inv{};
  if (d == 1) {
    inv[0][0] = 1.0 / ata[0][0];
  } else if (d == 2) {
    double det = ata[0][0] * ata[1][1] - ata[0][1] * ata[1][0];
    inv[0][0] = ata[1][1] / det;
    inv[1][1] = ata[0][0] / det;
    inv[0][1] = -ata[0][1] / det;
    inv[1][0] = -ata[1][0] / det;
  } else if (d == 3) {
    Mat3 m{};
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 3; ++c)
        m[r][c] = ata[r][c];
    double det = det3(m);
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 3; ++c) {
        int r1 = (r + 1) % 3, r2 = (r + 2) % 3, c1 = (c + 1) % 3, c2 = (c + 2) % 3;
        inv[c][r] = (m[r1][c1] * m[r2][c2] - m[r1][c2] * m[r2][c1]) / det;
      }
  }

  double best_cost = 1e300;
  std::array<double, 3> best_u{};
  for (int sx = -1; sx <= 1; ++sx)
    for (int sy = -1; sy <= 1; ++sy)
      for (int sz = -1; sz <= 1; ++sz) {
        Vec3 target{coords[0] + sx - b[0], coords[1] + sy - b[1], coords[2] + sz - b[2]};
        std::array<double, 3> atb{};
        for (int r = 0; r < d; ++r)
          for (int i = 0; i < 3; ++i)
            atb[r] += a[i][r] * target[i];
        std::array<double, 3> u{};
        for (int r = 0; r < d; ++r)
          for (int c = 0; c < d; ++c)
            u[r] += inv[r][c] * atb[c];
        double cost = 0;
        for (int i = 0; i < 3; ++i) {
          double res = -target[i];
          for (int r = 0; r < d; ++r)
            res += a[i][r] * u[r];
          cost += res * res;
        }
        if (cost < best_cost - 1e-15) {
          best_cost = cost;
          best_u = u;
        }
      }

  FractionalFit fit{};
  Vec3 params{0, 0, 0};
  for (int r = 0; r < d; ++r)
    params[cols[r]] = wrap01(best_u[r]);
  fit.free_params = params;
  fit.representative = wrap01(rep.apply(params));
  return fit;
}

// Candidate letters for prompting, in bundled (ITA) order.
inline std::vector<char> candidate_wyckoff_letters(const WyckoffTable& table,
                                                   SpaceGroupId sg) {
  return table.letters(sg);
}

}  // namespace xtalgen

#endif  // XTALGEN_WYCKOFF_HPP_
