#include "gft/rational.hpp"

#include <cctype>
#include <limits>
#include <ostream>
#include <stdexcept>

namespace gft {
namespace {

__int128 abs128(__int128 v) { return v < 0 ? -v : v; }

__int128 gcd128(__int128 a, __int128 b) {
  a = abs128(a);
  b = abs128(b);
  while (b != 0) {
    const __int128 t = a % b;
    a = b;
    b = t;
  }
  return a;
}

constexpr __int128 kMax = std::numeric_limits<std::int64_t>::max();
constexpr __int128 kMin = std::numeric_limits<std::int64_t>::min();

// Splits "p/q" or a decimal literal into a numerator/denominator pair of digit strings.
struct ParsedFraction {
  std::string num;
  std::string den;
};

ParsedFraction split_fraction(std::string_view text) {
  auto trim = [](std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
  };
  text = trim(text);
  if (text.empty()) throw std::invalid_argument("empty rational literal");

  auto check_int = [&](std::string_view s, bool allow_sign) {
    std::size_t i = 0;
    if (allow_sign && !s.empty() && (s[0] == '-' || s[0] == '+')) i = 1;
    if (i == s.size()) throw std::invalid_argument("malformed rational literal: " + std::string(text));
    for (; i < s.size(); ++i) {
      if (!std::isdigit(static_cast<unsigned char>(s[i]))) {
        throw std::invalid_argument("malformed rational literal: " + std::string(text));
      }
    }
  };

  if (const auto slash = text.find('/'); slash != std::string_view::npos) {
    const auto n = trim(text.substr(0, slash));
    const auto d = trim(text.substr(slash + 1));
    check_int(n, true);
    check_int(d, false);
    return {std::string(n), std::string(d)};
  }
  if (const auto dot = text.find('.'); dot != std::string_view::npos) {
    std::string_view whole = text.substr(0, dot);
    std::string_view frac = text.substr(dot + 1);
    std::string sign;
    if (!whole.empty() && (whole[0] == '-' || whole[0] == '+')) {
      if (whole[0] == '-') sign = "-";
      whole.remove_prefix(1);
    }
    if (whole.empty() && frac.empty()) throw std::invalid_argument("malformed rational literal: " + std::string(text));
    if (!whole.empty()) check_int(whole, false);
    if (!frac.empty()) check_int(frac, false);
    std::string num = sign + std::string(whole.empty() ? "0" : whole) + std::string(frac);
    std::string den = "1" + std::string(frac.size(), '0');
    return {num, den};
  }
  check_int(text, true);
  return {std::string(text), "1"};
}

}  // namespace

Rational::Rational(std::int64_t n, std::int64_t d) {
  if (d == 0) throw std::domain_error("rational with zero denominator");
  *this = from_wide(n, d);
}

Rational Rational::from_wide(__int128 n, __int128 d) {
  if (d == 0) throw std::domain_error("rational with zero denominator");
  if (d < 0) {
    n = -n;
    d = -d;
  }
  const __int128 g = gcd128(n, d);
  if (g > 1) {
    n /= g;
    d /= g;
  }
  if (n > kMax || n < kMin || d > kMax) throw std::overflow_error("rational value overflow");
  Rational r;
  r.num_ = static_cast<std::int64_t>(n);
  r.den_ = static_cast<std::int64_t>(d);
  return r;
}

Rational Rational::operator-() const { return from_wide(-static_cast<__int128>(num_), den_); }

Rational& Rational::operator+=(const Rational& o) {
  if (den_ == o.den_) {
    *this = from_wide(static_cast<__int128>(num_) + o.num_, den_);
  } else {
    *this = from_wide(static_cast<__int128>(num_) * o.den_ + static_cast<__int128>(o.num_) * den_,
                      static_cast<__int128>(den_) * o.den_);
  }
  return *this;
}

Rational& Rational::operator-=(const Rational& o) { return *this += -o; }

Rational& Rational::operator*=(const Rational& o) {
  *this = from_wide(static_cast<__int128>(num_) * o.num_, static_cast<__int128>(den_) * o.den_);
  return *this;
}

Rational& Rational::operator/=(const Rational& o) {
  if (o.num_ == 0) throw std::domain_error("rational division by zero");
  *this = from_wide(static_cast<__int128>(num_) * o.den_, static_cast<__int128>(den_) * o.num_);
  return *this;
}

std::string Rational::str() const {
  if (den_ == 1) return std::to_string(num_);
  return std::to_string(num_) + "/" + std::to_string(den_);
}

Rational Rational::parse(std::string_view text) { return from_big(parse_big_rational(text)); }

Rational Rational::from_big(const BigRational& r) {
  const BigInt n = boost::multiprecision::numerator(r);
  const BigInt d = boost::multiprecision::denominator(r);
  if (n > BigInt(std::numeric_limits<std::int64_t>::max()) || n < BigInt(std::numeric_limits<std::int64_t>::min()) ||
      d > BigInt(std::numeric_limits<std::int64_t>::max())) {
    throw std::overflow_error("rational " + to_string(r) + " does not fit a 64-bit fraction");
  }
  return Rational(n.convert_to<std::int64_t>(), d.convert_to<std::int64_t>());
}

std::ostream& operator<<(std::ostream& os, const Rational& r) { return os << r.str(); }

std::string to_string(const BigRational& r) {
  const BigInt d = boost::multiprecision::denominator(r);
  if (d == 1) return boost::multiprecision::numerator(r).str();
  return boost::multiprecision::numerator(r).str() + "/" + d.str();
}

BigRational parse_big_rational(std::string_view text) {
  const auto parts = split_fraction(text);
  std::string n = parts.num;
  if (!n.empty() && n[0] == '+') n.erase(0, 1);
  const BigInt num(n);
  const BigInt den(parts.den);
  if (den == 0) throw std::invalid_argument("zero denominator in rational literal: " + std::string(text));
  return BigRational(num, den);
}

double to_double(const BigRational& r) { return r.convert_to<double>(); }

}  // namespace gft
