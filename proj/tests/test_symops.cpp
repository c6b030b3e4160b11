#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <map>
#include <sstream>

#include "xtalgen/lattice.hpp"
#include "xtalgen/symops.hpp"

using namespace xtalgen;

TEST_CASE("operator counts match known general-position multiplicities") {
  const std::map<int, int> expected = {
      {1, 1},   {2, 2},    {5, 4},    {11, 4},  {16, 4},   {47, 8},  {62, 8},
      {70, 32}, {75, 4},   {88, 16},  {123, 16}, {139, 32}, {143, 3}, {148, 18},
      {152, 6}, {166, 36}, {186, 12}, {191, 24}, {194, 24}, {195, 12},
      {216, 96}, {221, 48}, {225, 192}, {227, 192}, {229, 96}, {230, 96}};
  for (const auto& [sg, order] : expected) {
    CAPTURE(sg);
    CHECK(int(spacegroup_operations(sg).size()) == order);
  }
}

TEST_CASE("every group is closed under composition") {
  for (int n = 1; n <= 230; ++n) {
    CAPTURE(n);
    std::vector<SymOp> ops = spacegroup_operations(n);
    bool closed = true;
    for (const SymOp& a : ops) {
      for (const SymOp& b : ops) {
        SymOp p = a * b;
        if (std::find(ops.begin(), ops.end(), p) == ops.end()) {
          closed = false;
          break;
        }
      }
      if (!closed) break;
    }
    REQUIRE(closed);
  }
}

TEST_CASE("inversion present exactly in the 92 centrosymmetric groups") {
  SymOp inv = SymOp::identity();
  for (auto& row : inv.rot)
    for (int& v : row) v = -v;
  int count = 0;
  for (int n = 1; n <= 230; ++n) {
    auto ops = spacegroup_operations(n);
    bool has = std::find(ops.begin(), ops.end(), inv) != ops.end();
    bool hall_centro = spacegroup_entry(n).hall[0] == '-';
    CAPTURE(n);
    CHECK(has == hall_centro);
    if (has) ++count;
  }
  CHECK(count == 92);
}

TEST_CASE("rotations preserve the constraint-class metric") {
  Rng rng(99);
  for (int n = 1; n <= 230; ++n) {
    CAPTURE(n);
    SpaceGroupId sg(n);
    LatticeParameters raw{rng.uniform(3, 8), rng.uniform(3, 8), rng.uniform(3, 8),
                          rng.uniform(70, 110), rng.uniform(70, 110), rng.uniform(70, 110)};
    if (raw.volume_factor() <= 1e-3) { raw = {4, 5, 6, 90, 95, 90}; }
    LatticeParameters p = project_lattice(raw, sg);
    Mat3 g = matrix_from_parameters(p).metric();
    bool invariant = true;
    for (const SymOp& op : spacegroup_operations(n)) {
      // G' = R^T G R must equal G for x -> R x to be an isometry
      for (int i = 0; i < 3 && invariant; ++i)
        for (int j = 0; j < 3; ++j) {
          double s = 0;
          for (int k = 0; k < 3; ++k)
            for (int l = 0; l < 3; ++l)
              s += op.rot[k][i] * g[k][l] * op.rot[l][j];
          if (std::abs(s - g[i][j]) > 1e-9 * (1 + std::abs(g[i][j]))) {
            invariant = false;
            break;
          }
        }
      if (!invariant) break;
    }
    REQUIRE(invariant);
  }
}

TEST_CASE("centring translation counts follow the lattice letter") {
  for (int n = 1; n <= 230; ++n) {
    auto ops = spacegroup_operations(n);
    int pure = 0;
    RotMat id{{{1, 0, 0}, {0, 1, 0}, {0, 0, 1}}};
    for (const SymOp& op : ops)
      if (op.rot == id) ++pure;
    const char* hall = spacegroup_entry(n).hall;
    char lat = hall[0] == '-' ? hall[1] : hall[0];
    int expect = lat == 'P' ? 1 : lat == 'R' ? 3 : lat == 'F' ? 4 : 2;
    CAPTURE(n);
    CHECK(pure == expect);
  }
}

// Reduces a Hermann-Mauguin symbol to its point group: screw subscripts drop
// to the bare rotation, glide letters become mirrors, lone "1" placeholders
// vanish. Cross-checks the Hall-expanded operator counts against an
// independent data column.
TEST_CASE("operator counts match the point-group order derived from the HM symbol") {
  const std::map<std::string, int> point_group_order = {
      {"1", 1},     {"-1", 2},    {"2", 2},     {"m", 2},      {"2/m", 4},
      {"222", 4},   {"mm2", 4},   {"m2m", 4},   {"2mm", 4},    {"mmm", 8},
      {"4", 4},     {"-4", 4},    {"4/m", 8},   {"422", 8},    {"4mm", 8},
      {"-42m", 8},  {"-4m2", 8},  {"4/mmm", 16}, {"3", 3},     {"-3", 6},
      {"32", 6},    {"3m", 6},    {"-3m", 12},  {"6", 6},      {"-6", 6},
      {"6/m", 12},  {"622", 12},  {"6mm", 12},  {"-62m", 12},  {"-6m2", 12},
      {"6/mmm", 24}, {"23", 12},  {"m-3", 24},  {"432", 24},   {"-43m", 24},
      {"m-3m", 48}};
  auto reduce_part = [](const std::string& part) -> std::string {
    // one side of an optional slash: rotation digits keep the leading digit,
    // any glide letter collapses to m
    std::string out;
    std::size_t i = 0;
    if (i < part.size() && part[i] == '-')
      out += part[i++];
    if (i < part.size() && std::isdigit(static_cast<unsigned char>(part[i]))) {
      out += part[i];  // screw subscripts after the first digit drop
      return out;
    }
    return out + "m";
  };
  for (int n = 1; n <= 230; ++n) {
    CAPTURE(n);
    const SpaceGroupEntry& entry = spacegroup_entry(n);
    std::istringstream hm(entry.hm);
    std::string token;
    hm >> token;  // lattice letter
    char lattice = token[0];
    std::string symbol;
    std::vector<std::string> components;
    while (hm >> token) {
      std::string reduced;
      std::size_t slash = token.find('/');
      if (slash == std::string::npos) {
        reduced = reduce_part(token);
      } else {
        reduced = reduce_part(token.substr(0, slash)) + "/" +
                  reduce_part(token.substr(slash + 1));
      }
      components.push_back(reduced);
    }
    for (const std::string& c : components)
      if (c != "1" || components.size() == 1)
        symbol += c;
    REQUIRE(point_group_order.count(symbol) == 1);
    int centring = lattice == 'P' ? 1 : lattice == 'R' ? 3 : lattice == 'F' ? 4 : 2;
    CHECK(int(spacegroup_operations(n).size()) ==
          centring * point_group_order.at(symbol));
  }
}

TEST_CASE("triplet printing") {
  auto ops = spacegroup_operations(11);  // P 2_1/m
  std::vector<std::string> triplets;
  for (const auto& op : ops)
    triplets.push_back(op.triplet());
  std::sort(triplets.begin(), triplets.end());
  CHECK(std::find(triplets.begin(), triplets.end(), "x,y,z") != triplets.end());
  CHECK(std::find(triplets.begin(), triplets.end(), "-x,y+1/2,-z") != triplets.end());
  CHECK(std::find(triplets.begin(), triplets.end(), "-x,-y,-z") != triplets.end());
  CHECK(std::find(triplets.begin(), triplets.end(), "x,-y+1/2,z") != triplets.end());
}
