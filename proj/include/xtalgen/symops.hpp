// Symmetry operations: exact Seitz operators, Hall-symbol interpretation,
// and full group expansion for the conventional cell.
//
// Hall notation follows ITfC vol. B ch. 1.4 and the sginfo notes. Only the
// subset needed by the bundled conventional settings is implemented: default
// axis rules, screw subscripts, alphabetic translations, diagonal ' " * axes
// relative to a principal z axis, and pure-translation change-of-basis.

#ifndef XTALGEN_SYMOPS_HPP_
#define XTALGEN_SYMOPS_HPP_

#include <algorithm>
#include <array>
#include <cctype>
#include <string>
#include <vector>

#include "xtalgen/sgdata.hpp"
#include "xtalgen/util.hpp"

namespace xtalgen {

using RotMat = std::array<std::array<int, 3>, 3>;   // integer rotation part
using TranVec = std::array<Rational, 3>;            // exact translation part

// Seitz operator x' = R x + t, translation kept in [0,1)
struct SymOp {
  RotMat rot;
  TranVec tran;

  static SymOp identity() {
    return SymOp{{{{1,0,0},{0,1,0},{0,0,1}}}, {Rational(0), Rational(0), Rational(0)}};
  }

  SymOp wrapped() const {
    SymOp r = *this;
    for (int i = 0; i < 3; ++i)
      r.tran[i] = r.tran[i].mod1();
    return r;
  }

  // composition: (*this) after other, i.e. x -> R1 (R2 x + t2) + t1
  SymOp operator*(const SymOp& o) const {
    SymOp r;
    for (int i = 0; i < 3; ++i) {
      r.tran[i] = tran[i];
      for (int j = 0; j < 3; ++j) {
        r.rot[i][j] = 0;
        for (int k = 0; k < 3; ++k)
          r.rot[i][j] += rot[i][k] * o.rot[k][j];
        r.tran[i] = r.tran[i] + Rational(rot[i][j]) * o.tran[j];
      }
    }
    return r.wrapped();
  }

  friend bool operator==(const SymOp& a, const SymOp& b) {
    return a.rot == b.rot && a.tran == b.tran;
  }

  Vec3 apply(const Vec3& x) const {
    Vec3 r{};
    for (int i = 0; i < 3; ++i)
      r[i] = rot[i][0]*x[0] + rot[i][1]*x[1] + rot[i][2]*x[2] + tran[i].to_double();
    return r;
  }

  std::string triplet() const {
    static const char* axes = "xyz";
    std::string s;
    for (int i = 0; i < 3; ++i) {
      if (i) s += ',';
      bool any = false;
      for (int j = 0; j < 3; ++j) {
        if (rot[i][j] == 0) continue;
        if (rot[i][j] > 0 && any) s += '+';
        if (rot[i][j] < 0) s += '-';
        if (std::abs(rot[i][j]) != 1) s += std::to_string(std::abs(rot[i][j]));
        s += axes[j];
        any = true;
      }
      if (tran[i].num != 0) {
        if (Rational(0) < tran[i]) s += '+';
        s += tran[i].str();
      }
      if (!any && tran[i].num == 0) s += '0';
    }
    return s;
  }
};

namespace hall {

inline RotMat principal_rotation(char axis_or_order) {
  switch (axis_or_order) {
    case 1: return {{{1,0,0}, {0,1,0}, {0,0,1}}};
    case 2: return {{{-1,0,0}, {0,-1,0}, {0,0,1}}};
    case 3: return {{{0,-1,0}, {1,-1,0}, {0,0,1}}};
    case 4: return {{{0,-1,0}, {1,0,0}, {0,0,1}}};
    case 6: return {{{1,-1,0}, {1,0,0}, {0,0,1}}};
    case '\'': return {{{0,-1,0}, {-1,0,0}, {0,0,-1}}};  // 2-fold about a-b
    case '"':  return {{{0,1,0},  {1,0,0},  {0,0,-1}}};  // 2-fold about a+b
    case '*':  return {{{0,0,1},  {1,0,0},  {0,1,0}}};   // 3-fold about a+b+c
    default: fail("hall: bad rotation selector");
  }
}

inline TranVec translation_symbol(char c) {
  auto h = Rational(1, 2);
  auto q = Rational(1, 4);
  switch (c) {
    case 'a': return {h, Rational(0), Rational(0)};
    case 'b': return {Rational(0), h, Rational(0)};
    case 'c': return {Rational(0), Rational(0), h};
    case 'n': return {h, h, h};
    case 'u': return {q, Rational(0), Rational(0)};
    case 'v': return {Rational(0), q, Rational(0)};
    case 'w': return {Rational(0), Rational(0), q};
    case 'd': return {q, q, q};
    default: fail(std::string("hall: unknown translation symbol '") + c + "'");
  }
}

inline std::vector<TranVec> centring_vectors(char lattice) {
  auto h = Rational(1, 2);
  auto t1 = Rational(1, 3);
  auto t2 = Rational(2, 3);
  std::vector<TranVec> cen{{Rational(0), Rational(0), Rational(0)}};
  switch (lattice) {
    case 'P': break;
    case 'A': cen.push_back({Rational(0), h, h}); break;
    case 'B': cen.push_back({h, Rational(0), h}); break;
    case 'C': cen.push_back({h, h, Rational(0)}); break;
    case 'I': cen.push_back({h, h, h}); break;
    case 'R':
      cen.push_back({t2, t1, t1});
      cen.push_back({t1, t2, t2});
      break;
    case 'F':
      cen.push_back({Rational(0), h, h});
      cen.push_back({h, Rational(0), h});
      cen.push_back({h, h, Rational(0)});
      break;
    default: fail(std::string("hall: unknown lattice letter '") + lattice + "'");
  }
  return cen;
}

// one N^A_T term; pos is 1-based position in the symbol, prev the preceding N
inline SymOp matrix_symbol(const std::string& term, int pos, int& prev) {
  bool improper = term[0] == '-';
  std::size_t p = improper ? 1 : 0;
  if (p >= term.size() || term[p] < '1' || term[p] > '6' || term[p] == '5')
    fail("hall: bad order in term '" + term + "'");
  int order = term[p++] - '0';
  char principal = '\0';
  char diagonal = '\0';
  int screw = 0;
  TranVec tran{Rational(0), Rational(0), Rational(0)};
  for (; p < term.size(); ++p) {
    char c = term[p];
    if (c >= '1' && c <= '5') {
      screw = c - '0';
    } else if (c == '\'' || c == '"' || c == '*') {
      diagonal = c;
    } else if (c == 'x' || c == 'y' || c == 'z') {
      principal = c;
    } else {
      TranVec t = translation_symbol(c);
      for (int i = 0; i < 3; ++i) tran[i] = tran[i] + t[i];
    }
  }
  if (!principal && !diagonal) {
    if (pos == 1) {
      principal = 'z';
    } else if (pos == 2 && order == 2) {
      if (prev == 2 || prev == 4) principal = 'x';
      else if (prev == 3 || prev == 6) diagonal = '\'';
      else fail("hall: cannot infer axis in '" + term + "'");
    } else if (pos == 3 && order == 3) {
      diagonal = '*';
    } else if (order != 1) {
      fail("hall: missing axis in '" + term + "'");
    }
  }
  RotMat rot = principal_rotation(diagonal ? diagonal : char(order));
  if (improper)
    for (auto& row : rot)
      for (int& v : row) v = -v;
  auto permute = [](const RotMat& r, int i, int j, int k) {
    return RotMat{{{r[i][i], r[i][j], r[i][k]},
                   {r[j][i], r[j][j], r[j][k]},
                   {r[k][i], r[k][j], r[k][k]}}};
  };
  if (principal == 'x') rot = permute(rot, 2, 0, 1);
  else if (principal == 'y') rot = permute(rot, 1, 2, 0);
  if (screw) {
    int axis = principal ? principal - 'x' : 2;
    tran[axis] = tran[axis] + Rational(screw, order);
  }
  prev = order;
  return SymOp{rot, tran}.wrapped();
}

}  // namespace hall

// Expands a Hall symbol into the full operator list of the conventional
// cell (point operations x centring translations). Operator count equals
// the multiplicity of the general position.
inline std::vector<SymOp> symops_from_hall(const std::string& hall_symbol) {
  std::vector<std::string> parts;
  std::string cur;
  std::string shift_part;
  bool in_shift = false;
  for (char c : hall_symbol) {
    if (c == '(') { in_shift = true; continue; }
    if (c == ')') { in_shift = false; continue; }
    if (in_shift) { shift_part += c; continue; }
    if (c == ' ' || c == '_' || c == '\t') {
      if (!cur.empty()) { parts.push_back(cur); cur.clear(); }
    } else {
      cur += c;
    }
  }
  if (!cur.empty()) parts.push_back(cur);
  if (parts.empty())
    fail("hall: empty symbol");

  bool centrosymmetric = parts[0][0] == '-';
  char lattice = centrosymmetric ? parts[0][1] : parts[0][0];
  std::vector<SymOp> gens;
  gens.push_back(SymOp::identity());
  int prev = 0;
  for (std::size_t i = 1; i < parts.size(); ++i) {
    if (parts[i] == "1") { prev = 1; continue; }
    gens.push_back(hall::matrix_symbol(parts[i], int(i), prev));
  }
  if (centrosymmetric) {
    SymOp inv = SymOp::identity();
    for (auto& row : inv.rot)
      for (int& v : row) v = -v;
    gens.push_back(inv);
  }
  for (const TranVec& t : hall::centring_vectors(lattice)) {
    SymOp op = SymOp::identity();
    op.tran = t;
    gens.push_back(op.wrapped());
  }

  // origin shift "(u v w)" in 12ths: conjugate every generator
  if (!shift_part.empty()) {
    TranVec v{};
    int idx = 0;
    std::string tok;
    auto flush = [&]() {
      if (tok.empty()) return;
      if (idx > 2) fail("hall: bad change-of-basis");
      int n = std::stoi(tok);
      v[idx++] = Rational(((n % 12) + 12) % 12, 12);
      tok.clear();
    };
    for (char c : shift_part) {
      if (c == ' ') flush();
      else tok += c;
    }
    flush();
    if (idx != 3) fail("hall: bad change-of-basis");
    for (SymOp& g : gens) {
      // t' = v + t - R v
      for (int i = 0; i < 3; ++i) {
        Rational rv(0);
        for (int j = 0; j < 3; ++j)
          rv = rv + Rational(g.rot[i][j]) * v[j];
        g.tran[i] = v[i] + g.tran[i] - rv;
      }
      g = g.wrapped();
    }
  }

  // closure under composition
  std::vector<SymOp> ops{SymOp::identity()};
  auto contains = [&](const SymOp& op) {
    return std::find(ops.begin(), ops.end(), op) != ops.end();
  };
  for (const SymOp& g : gens)
    if (!contains(g)) ops.push_back(g);
  bool grew = true;
  while (grew) {
    grew = false;
    std::size_t n = ops.size();
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) {
        SymOp prod = ops[i] * ops[j];
        if (!contains(prod)) {
          ops.push_back(prod);
          grew = true;
          if (ops.size() > 192)
            fail("hall: group expansion exceeded 192 operators");
        }
      }
  }
  return ops;
}

inline const SpaceGroupEntry& spacegroup_entry(int number) {
  if (number < 1 || number > 230)
    throw DataError("space group number out of range: " + std::to_string(number));
  return kSpaceGroups[number - 1];
}

inline std::vector<SymOp> spacegroup_operations(int number) {
  return symops_from_hall(spacegroup_entry(number).hall);
}

}  // namespace xtalgen

#endif  // XTALGEN_SYMOPS_HPP_
