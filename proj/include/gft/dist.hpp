#pragma once

#include "gft/errors.hpp"
#include "gft/rational.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <vector>

namespace gft {

/// A support point of a discrete distribution.
struct Atom {
  Rational value;
  BigRational probability;
};

/// Maps the quantile interval (q_lo, q_hi] linearly onto [v_lo, v_hi].
/// v_lo == v_hi encodes an atom.
struct QuantilePiece {
  BigRational q_lo;
  BigRational q_hi;
  double v_lo = 0.0;
  double v_hi = 0.0;
};

/// A value distribution stored in quantile-function form. Immutable once built.
class Distribution {
 public:
  enum class Kind { Discrete, PiecewiseUniform };

  /// Throws InvalidInput unless probabilities are positive, sum to exactly 1,
  /// and values are strictly increasing.
  static Distribution discrete(std::vector<Atom> atoms);
  /// Throws InvalidInput unless the pieces partition (0,1] in order and the
  /// induced quantile function is nondecreasing.
  static Distribution piecewise(std::vector<QuantilePiece> pieces);

  static Distribution point_mass(Rational value);
  static Distribution uniform(double lo, double hi);

  Kind kind() const noexcept { return kind_; }
  bool is_discrete() const noexcept { return kind_ == Kind::Discrete; }
  const std::vector<Atom>& atoms() const noexcept { return atoms_; }
  const std::vector<QuantilePiece>& pieces() const noexcept { return pieces_; }

  /// Right endpoints of the constant/linear stretches of the quantile function,
  /// excluding 0 and including 1.
  std::vector<BigRational> breakpoints() const;

  double mean() const;
  /// Discrete only.
  BigRational exact_mean() const;

  /// Cumulative probabilities as doubles, used by the sampler.
  const std::vector<double>& cumulative() const noexcept { return cumulative_; }

  friend bool operator==(const Distribution& a, const Distribution& b);

 private:
  Kind kind_ = Kind::Discrete;
  std::vector<Atom> atoms_;
  std::vector<QuantilePiece> pieces_;
  std::vector<double> cumulative_;
  std::vector<double> piece_bounds_;
};

/// A quantile in the open interval (0,1), optionally carrying an exact value.
class Quantile {
 public:
  explicit Quantile(double q);
  explicit Quantile(BigRational q);

  double value() const noexcept { return approx_; }
  const std::optional<BigRational>& exact() const noexcept { return exact_; }

 private:
  double approx_ = 0.5;
  std::optional<BigRational> exact_;
};

/// v_F(q) = inf { v : Pr[w <= v] >= q }.
double quantile_value(const Distribution& f, const Quantile& q);

/// Exact form of quantile_value for discrete distributions.
Rational exact_quantile_value(const Distribution& f, const BigRational& q);

/// Uniform draw from the open interval (0,1) with 53 bits of resolution.
double uniform_open01(std::mt19937_64& rng);

/// Inverse-transform sample: quantile_value(f, U) for U uniform on (0,1).
double sample(const Distribution& f, std::mt19937_64& rng);

struct FsdResult {
  bool dominates = true;
  /// A quantile where the buyer quantile function is strictly below the
  /// seller one; present iff !dominates.
  std::optional<double> witness;
  std::optional<BigRational> exact_witness;
};

/// Weak first-order stochastic dominance of buyer over seller, decided on the
/// merged quantile breakpoints (exactly when both are discrete).
FsdResult check_fsd(const Distribution& buyer, const Distribution& seller);

/// Lexicographic enumeration of the Cartesian product of discrete supports.
class ProductSupport {
 public:
  static constexpr std::uint64_t kDefaultCap = 100'000'000;

  /// Throws InvalidInput for non-discrete inputs and TooLarge when the product
  /// exceeds cap.
  explicit ProductSupport(std::vector<Distribution> dists, std::uint64_t cap = kDefaultCap);

  std::uint64_t size() const noexcept { return size_; }
  std::size_t arity() const noexcept { return dists_.size(); }

  /// Every state's integer weight is a multiple of 1/common_denominator().
  const BigInt& common_denominator() const noexcept { return denominator_; }

  /// f(std::span<const Rational> values, const BigRational& probability)
  template <class F>
  void for_each(F&& f) const {
    for_each_weighted(
        [&](std::span<const Rational> values, const BigInt& weight) {
          f(values, BigRational(weight, denominator_));
        },
        0, size_);
  }

  /// f(std::span<const Rational> values, const BigInt& weight) over state
  /// indices [begin, end).
  template <class F>
  void for_each_weighted(F&& f, std::uint64_t begin, std::uint64_t end) const;

 private:
  std::vector<Distribution> dists_;
  std::vector<std::vector<BigInt>> numerators_;
  BigInt denominator_;
  std::uint64_t size_ = 1;
};

template <class F>
void ProductSupport::for_each_weighted(F&& f, std::uint64_t begin, std::uint64_t end) const {
  if (begin >= end) return;
  const std::size_t n = dists_.size();
  std::vector<std::size_t> digit(n, 0);
  std::uint64_t rest = begin;
  for (std::size_t i = n; i-- > 0;) {
    const auto radix = dists_[i].atoms().size();
    digit[i] = static_cast<std::size_t>(rest % radix);
    rest /= radix;
  }
  std::vector<Rational> values(n);
  std::vector<BigInt> prefix(n + 1);
  prefix[0] = 1;
  auto refresh = [&](std::size_t from) {
    for (std::size_t i = from; i < n; ++i) {
      values[i] = dists_[i].atoms()[digit[i]].value;
      prefix[i + 1] = prefix[i] * numerators_[i][digit[i]];
    }
  };
  refresh(0);
  for (std::uint64_t index = begin; index < end; ++index) {
    f(std::span<const Rational>(values), prefix[n]);
    std::size_t i = n;
    while (i > 0) {
      --i;
      if (++digit[i] < dists_[i].atoms().size()) break;
      digit[i] = 0;
    }
    if (n > 0) refresh(i);
  }
}

// Distribution literal format:
//   {"atoms": [[value, "p/q"], ...]}
//   {"pieces": [["q_lo", "q_hi", v_lo, v_hi], ...]}
nlohmann::json to_json(const Distribution& f);
Distribution distribution_from_json(const nlohmann::json& j);

}  // namespace gft
