// Small shared utilities: error types, exact rationals, 3D linear algebra,
// deterministic random numbers.

#ifndef XTALGEN_UTIL_HPP_
#define XTALGEN_UTIL_HPP_

#include <array>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>

namespace xtalgen {

// ERRORS
//
// One exception type per failure family; CLI maps them to exit codes.

struct Error : std::runtime_error {
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};
// bad configuration (dims, odd K, invalid schedule, ...)
struct ConfigError : Error { using Error::Error; };
// malformed or inconsistent data (files, records, tables)
struct DataError : Error { using Error::Error; };
// unparseable backend response text
struct ParseError : Error { using Error::Error; };
// backend produced no usable constraint within the retry budget
struct BackendError : Error { using Error::Error; };
// network-level failure talking to a backend
struct TransportError : Error { using Error::Error; };

[[noreturn]] inline void fail(const std::string& msg) { throw Error(msg); }

// RATIONALS
//
// Exact arithmetic for symmetry operations and Wyckoff orbit maps.
// Denominators stay tiny (divisors of 24), int64 never overflows here.

struct Rational {
  std::int64_t num = 0;
  std::int64_t den = 1;

  constexpr Rational() = default;
  constexpr Rational(std::int64_t n) : num(n), den(1) {}
  Rational(std::int64_t n, std::int64_t d) : num(n), den(d) { normalize(); }

  void normalize() {
    if (den == 0)
      fail("rational with zero denominator");
    if (den < 0) { num = -num; den = -den; }
    std::int64_t g = std::gcd(num < 0 ? -num : num, den);
    if (g > 1) { num /= g; den /= g; }
  }

  friend Rational operator+(Rational a, Rational b) {
    return Rational(a.num * b.den + b.num * a.den, a.den * b.den);
  }
  friend Rational operator-(Rational a, Rational b) {
    return Rational(a.num * b.den - b.num * a.den, a.den * b.den);
  }
  friend Rational operator*(Rational a, Rational b) {
    return Rational(a.num * b.num, a.den * b.den);
  }
  friend Rational operator/(Rational a, Rational b) {
    if (b.num == 0)
      fail("rational division by zero");
    return Rational(a.num * b.den, a.den * b.num);
  }
  Rational operator-() const { Rational r; r.num = -num; r.den = den; return r; }
  friend bool operator==(const Rational& a, const Rational& b) {
    return a.num == b.num && a.den == b.den;
  }
  friend bool operator!=(const Rational& a, const Rational& b) { return !(a == b); }
  friend bool operator<(const Rational& a, const Rational& b) {
    return a.num * b.den < b.num * a.den;
  }

  // wraps into [0, 1)
  Rational mod1() const {
    std::int64_t n = num % den;
    if (n < 0) n += den;
    Rational r; r.num = n; r.den = den; r.normalize();
    return r;
  }
  bool is_integer() const { return den == 1; }
  double to_double() const { return double(num) / double(den); }
  std::string str() const {
    if (den == 1) return std::to_string(num);
    return std::to_string(num) + "/" + std::to_string(den);
  }
};

// parses "p" or "p/q"
inline Rational parse_rational(const std::string& s) {
  std::size_t slash = s.find('/');
  try {
    if (slash == std::string::npos)
      return Rational(std::stoll(s));
    return Rational(std::stoll(s.substr(0, slash)), std::stoll(s.substr(slash + 1)));
  } catch (const std::exception&) {
    throw DataError("bad rational: '" + s + "'");
  }
}

// LINEAR ALGEBRA (3D, doubles)

using Vec3 = std::array<double, 3>;
using Mat3 = std::array<std::array<double, 3>, 3>;

inline Vec3 operator+(const Vec3& a, const Vec3& b) { return {a[0]+b[0], a[1]+b[1], a[2]+b[2]}; }
inline Vec3 operator-(const Vec3& a, const Vec3& b) { return {a[0]-b[0], a[1]-b[1], a[2]-b[2]}; }
inline Vec3 operator*(double s, const Vec3& a) { return {s*a[0], s*a[1], s*a[2]}; }
inline double dot(const Vec3& a, const Vec3& b) { return a[0]*b[0] + a[1]*b[1] + a[2]*b[2]; }
inline double norm(const Vec3& a) { return std::sqrt(dot(a, a)); }

inline double det3(const Mat3& m) {
  return m[0][0] * (m[1][1]*m[2][2] - m[1][2]*m[2][1])
       - m[0][1] * (m[1][0]*m[2][2] - m[1][2]*m[2][0])
       + m[0][2] * (m[1][0]*m[2][1] - m[1][1]*m[2][0]);
}

// row vector times matrix: (xM)_j = sum_i x_i M_ij
inline Vec3 row_times_mat(const Vec3& x, const Mat3& m) {
  Vec3 r{};
  for (int j = 0; j < 3; ++j)
    r[j] = x[0]*m[0][j] + x[1]*m[1][j] + x[2]*m[2][j];
  return r;
}

// wraps a fractional coordinate into [0, 1); exact 1.0 maps to 0.0
inline double wrap01(double x) {
  double w = x - std::floor(x);
  if (w >= 1.0) w = 0.0;
  // guard against -1e-17 -> 0.9999.. style residue
  if (w < 0.0) w = 0.0;
  return w;
}

inline Vec3 wrap01(const Vec3& v) { return {wrap01(v[0]), wrap01(v[1]), wrap01(v[2])}; }

// RANDOM NUMBERS
//
// splitmix64 state advance with explicit uniform/normal converters, so every
// platform and compiler draws the identical stream.

struct Rng {
  std::uint64_t state;

  explicit Rng(std::uint64_t seed) : state(seed) {}

  std::uint64_t next_u64() {
    state += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // uniform on [0, 1)
  double uniform() { return double(next_u64() >> 11) * 0x1.0p-53; }

  // uniform on [lo, hi)
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // standard normal via Box-Muller (no cached spare, keeps the stream simple)
  double normal() {
    double u1 = uniform();
    if (u1 <= 0.0) u1 = 0x1.0p-53;
    double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925287 * u2);
  }

  // uniform integer in [0, n)
  std::uint64_t below(std::uint64_t n) { return next_u64() % n; }
};

// stage-name keyed sub-seed derivation (documented in the README)
inline std::uint64_t derive_seed(std::uint64_t root, const std::string& stage) {
  std::uint64_t h = 1469598103934665603ULL ^ root;
  for (unsigned char c : stage) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

}  // namespace xtalgen

#endif  // XTALGEN_UTIL_HPP_
