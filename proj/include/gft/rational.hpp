#pragma once

#include <boost/multiprecision/cpp_int.hpp>

#include <compare>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <string_view>

namespace gft {

using BigInt = boost::multiprecision::cpp_int;
using BigRational = boost::multiprecision::cpp_rational;

/// Exact agent value: a reduced fraction with 64-bit numerator and positive
/// 64-bit denominator. Every arithmetic operation is exact; results that do not
/// fit throw std::overflow_error instead of rounding.
class Rational {
 public:
  constexpr Rational() = default;
  constexpr Rational(std::int64_t n) : num_(n) {}  // NOLINT(google-explicit-constructor)
  Rational(std::int64_t n, std::int64_t d);

  std::int64_t num() const noexcept { return num_; }
  std::int64_t den() const noexcept { return den_; }

  double to_double() const noexcept { return static_cast<double>(num_) / static_cast<double>(den_); }
  BigRational to_big() const { return BigRational(BigInt(num_), BigInt(den_)); }
  bool is_integer() const noexcept { return den_ == 1; }

  Rational operator-() const;
  Rational& operator+=(const Rational& o);
  Rational& operator-=(const Rational& o);
  Rational& operator*=(const Rational& o);
  Rational& operator/=(const Rational& o);

  friend Rational operator+(Rational a, const Rational& b) { return a += b; }
  friend Rational operator-(Rational a, const Rational& b) { return a -= b; }
  friend Rational operator*(Rational a, const Rational& b) { return a *= b; }
  friend Rational operator/(Rational a, const Rational& b) { return a /= b; }

  friend bool operator==(const Rational& a, const Rational& b) noexcept {
    return a.num_ == b.num_ && a.den_ == b.den_;
  }
  friend std::strong_ordering operator<=>(const Rational& a, const Rational& b) noexcept {
    const __int128 lhs = static_cast<__int128>(a.num_) * b.den_;
    const __int128 rhs = static_cast<__int128>(b.num_) * a.den_;
    return lhs <=> rhs;
  }

  /// "p/q" or "p" when the denominator is 1.
  std::string str() const;

  /// Accepts "p", "p/q", and finite decimals such as "-1.25".
  static Rational parse(std::string_view text);

  /// Narrowing from an arbitrary-precision rational; throws when it does not fit.
  static Rational from_big(const BigRational& r);

 private:
  static Rational from_wide(__int128 n, __int128 d);

  std::int64_t num_ = 0;
  std::int64_t den_ = 1;
};

std::ostream& operator<<(std::ostream& os, const Rational& r);

/// Conversion shims so mechanism templates can be written once for exact and
/// floating-point values.
inline double to_double(const Rational& r) noexcept { return r.to_double(); }
inline double to_double(double d) noexcept { return d; }

template <class V>
V value_from_rational(const Rational& r);
template <>
inline Rational value_from_rational<Rational>(const Rational& r) { return r; }
template <>
inline double value_from_rational<double>(const Rational& r) { return r.to_double(); }

/// "p/q" (or "p") rendering of an arbitrary-precision rational.
std::string to_string(const BigRational& r);

/// Parses "p", "p/q", or a finite decimal into an arbitrary-precision rational.
BigRational parse_big_rational(std::string_view text);

double to_double(const BigRational& r);

}  // namespace gft

template <>
struct std::hash<gft::Rational> {
  std::size_t operator()(const gft::Rational& r) const noexcept {
    return std::hash<std::int64_t>{}(r.num()) * 1000003u ^ std::hash<std::int64_t>{}(r.den());
  }
};
