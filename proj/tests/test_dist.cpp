#include "doctest.h"

#include "gft/dist.hpp"

#include <cmath>
#include <limits>

using namespace gft;

namespace {

Distribution two_point(std::int64_t lo, BigRational p_lo, std::int64_t hi) {
  return Distribution::discrete({{Rational(lo), p_lo}, {Rational(hi), 1 - p_lo}});
}

}  // namespace

TEST_CASE("rational arithmetic is exact and reduced") {
  CHECK(Rational(2, 4) == Rational(1, 2));
  CHECK(Rational(1, -3) == Rational(-1, 3));
  CHECK(Rational(1, 3) + Rational(1, 6) == Rational(1, 2));
  CHECK((Rational(3, 2) * Rational(2, 3)).is_integer());
  CHECK(Rational(1, 3) < Rational(1, 2));
  CHECK(Rational::parse("-1.25") == Rational(-5, 4));
  CHECK(Rational::parse("7/21").str() == "1/3");
  CHECK(Rational::parse("4").str() == "4");
  CHECK_THROWS(Rational(1, 0));
  CHECK_THROWS(Rational::parse("1/x"));
  CHECK_THROWS_AS(Rational(std::numeric_limits<std::int64_t>::max()) + Rational(1), std::overflow_error);
  CHECK(to_string(parse_big_rational("10/4")) == "5/2");
  CHECK(Rational::from_big(BigRational(6, 4)) == Rational(3, 2));
}

TEST_CASE("discrete quantiles follow the infimum definition") {
  const auto f = two_point(0, BigRational(1, 2), 2);
  CHECK(quantile_value(Distribution::point_mass(1), Quantile(0.5)) == 1.0);
  CHECK(quantile_value(f, Quantile(BigRational(1, 2))) == 0.0);
  CHECK(quantile_value(f, Quantile(BigRational(501, 1000))) == 2.0);
  CHECK(exact_quantile_value(f, BigRational(1, 2)) == 0);
  CHECK(exact_quantile_value(f, BigRational(1, 2) + BigRational(1, 1000000)) == 2);
  CHECK(quantile_value(Distribution::uniform(0, 1), Quantile(0.25)) == doctest::Approx(0.25));
  CHECK_THROWS_AS(Quantile(0.0), InvalidInput);
  CHECK_THROWS_AS(Quantile(BigRational(1)), InvalidInput);
}

TEST_CASE("quantile functions are monotone") {
  const auto mixed = Distribution::piecewise({QuantilePiece{0, BigRational(1, 4), 0.0, 0.0},
                                              QuantilePiece{BigRational(1, 4), 1, 100.99, 101.01}});
  const auto disc = Distribution::discrete(
      {{Rational(0), BigRational(1, 8)}, {Rational(1), BigRational(1, 2)}, {Rational(3), BigRational(3, 8)}});
  for (const auto* f : {&mixed, &disc}) {
    double prev = -1e300;
    for (int i = 1; i < 10000; ++i) {
      const double v = quantile_value(*f, Quantile(i / 10000.0));
      REQUIRE(v >= prev);
      prev = v;
    }
  }
  CHECK(quantile_value(mixed, Quantile(0.2)) == 0.0);
  CHECK(quantile_value(mixed, Quantile(0.625)) == doctest::Approx(101.0));
}

TEST_CASE("invalid distributions are rejected") {
  CHECK_THROWS_AS(Distribution::discrete({}), InvalidInput);
  CHECK_THROWS_AS(Distribution::discrete({{Rational(0), BigRational(1, 2)}}), InvalidInput);
  CHECK_THROWS_AS(Distribution::discrete({{Rational(1), BigRational(1, 2)}, {Rational(0), BigRational(1, 2)}}),
                  InvalidInput);
  CHECK_THROWS_AS(Distribution::discrete({{Rational(0), BigRational(0)}, {Rational(1), BigRational(1)}}),
                  InvalidInput);
  CHECK_THROWS_AS(Distribution::piecewise({QuantilePiece{0, BigRational(1, 2), 0.0, 1.0}}), InvalidInput);
  CHECK_THROWS_AS(Distribution::piecewise({QuantilePiece{0, BigRational(1, 2), 0.0, 2.0},
                                           QuantilePiece{BigRational(1, 2), 1, 1.0, 3.0}}),
                  InvalidInput);
  CHECK_THROWS_AS(Distribution::uniform(1, 0), InvalidInput);
}

TEST_CASE("sampling matches atom frequencies and means") {
  std::mt19937_64 rng(123);
  CHECK(sample(Distribution::point_mass(3), rng) == 3.0);

  const auto f = two_point(0, BigRational(1, 2), 2);
  const int n = 1000000;
  double sum = 0;
  int zeros = 0;
  for (int i = 0; i < n; ++i) {
    const double x = sample(f, rng);
    sum += x;
    zeros += x == 0.0;
  }
  CHECK(std::abs(sum / n - 1.0) <= 0.01);
  CHECK(std::abs(zeros / double(n) - 0.5) <= 5 * std::sqrt(0.25 / n));

  const auto u = Distribution::uniform(0, 1);
  sum = 0;
  for (int i = 0; i < n; ++i) sum += sample(u, rng);
  CHECK(std::abs(sum / n - 0.5) <= 0.005);

  std::mt19937_64 a(9), b(9);
  for (int i = 0; i < 100; ++i) REQUIRE(sample(u, a) == sample(u, b));
}

TEST_CASE("first-order stochastic dominance") {
  const auto b = two_point(0, BigRational(1, 4), 2);
  const auto s = two_point(0, BigRational(1, 4), 1);
  CHECK(check_fsd(b, b).dominates);
  CHECK(check_fsd(b, s).dominates);
  const auto r = check_fsd(s, b);
  CHECK_FALSE(r.dominates);
  REQUIRE(r.witness);
  CHECK(quantile_value(s, Quantile(*r.witness)) < quantile_value(b, Quantile(*r.witness)));

  const BigRational et(1, 1000);
  const auto nb = two_point(0, 1 - et, 2);
  const auto ns = two_point(1, et, 3);
  const auto no = check_fsd(nb, ns);
  CHECK_FALSE(no.dominates);
  CHECK(quantile_value(nb, Quantile(0.5)) < quantile_value(ns, Quantile(0.5)));

  // Soundness against a dense quantile grid, including continuous pieces.
  const std::vector<Distribution> fam{b, s, nb, ns, Distribution::uniform(0, 1), Distribution::uniform(0.5, 2),
                                      Distribution::point_mass(1)};
  for (const auto& x : fam) {
    for (const auto& y : fam) {
      const auto res = check_fsd(x, y);
      if (res.dominates) {
        for (int i = 1; i < 10000; ++i) {
          const Quantile q(i / 10000.0);
          REQUIRE(quantile_value(x, q) >= quantile_value(y, q));
        }
      } else {
        REQUIRE(res.witness);
        REQUIRE(quantile_value(x, Quantile(*res.witness)) < quantile_value(y, Quantile(*res.witness)));
      }
    }
  }
}

TEST_CASE("product support enumerates every state exactly once") {
  const auto coin = two_point(0, BigRational(1, 2), 1);
  std::vector<std::vector<Rational>> seen;
  ProductSupport one({coin});
  one.for_each([&](std::span<const Rational> v, const BigRational& p) {
    seen.emplace_back(v.begin(), v.end());
    CHECK(p == BigRational(1, 2));
  });
  CHECK(seen == std::vector<std::vector<Rational>>{{0}, {1}});

  const auto third = Distribution::discrete(
      {{Rational(0), BigRational(1, 3)}, {Rational(1), BigRational(1, 3)}, {Rational(2), BigRational(1, 3)}});
  ProductSupport three({third, third, third});
  CHECK(three.size() == 27);
  BigRational total = 0;
  std::size_t count = 0;
  std::vector<Rational> prev;
  three.for_each([&](std::span<const Rational> v, const BigRational& p) {
    std::vector<Rational> cur(v.begin(), v.end());
    if (!prev.empty()) REQUIRE(prev < cur);
    prev = cur;
    total += p;
    ++count;
  });
  CHECK(count == 27);
  CHECK(total == 1);

  // Sub-ranges tile the full range.
  std::size_t pieces = 0;
  for (std::uint64_t lo = 0; lo < 27; lo += 5) {
    three.for_each_weighted([&](std::span<const Rational>, const BigInt&) { ++pieces; }, lo, std::min<std::uint64_t>(lo + 5, 27));
  }
  CHECK(pieces == 27);

  CHECK_THROWS_AS(ProductSupport({Distribution::uniform(0, 1)}), InvalidInput);
  CHECK_THROWS_AS(ProductSupport(std::vector<Distribution>(30, coin), 1000), TooLarge);
}

TEST_CASE("distribution literals round-trip") {
  const auto f = Distribution::discrete({{Rational(0), BigRational(1, 3)}, {Rational(3, 2), BigRational(2, 3)}});
  const auto j = to_json(f);
  CHECK(j.dump() == R"({"atoms":[[0,"1/3"],["3/2","2/3"]]})");
  CHECK(distribution_from_json(j) == f);

  const auto pw = Distribution::piecewise({QuantilePiece{0, BigRational(1, 4), 0.0, 0.0},
                                           QuantilePiece{BigRational(1, 4), 1, 100.99, 101.01}});
  CHECK(distribution_from_json(to_json(pw)) == pw);
  CHECK(distribution_from_json(nlohmann::json::parse(to_json(pw).dump())) == pw);
  CHECK_THROWS_AS(distribution_from_json(nlohmann::json::parse(R"({"atoms":[[0,"1/2"]]})")), InvalidInput);
  CHECK_THROWS_AS(distribution_from_json(nlohmann::json::parse(R"({"bogus":1})")), InvalidInput);
}
