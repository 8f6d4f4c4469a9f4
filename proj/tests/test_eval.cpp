#include "doctest.h"

#include "gft/eval.hpp"
#include "gft/verify.hpp"
#include "oracles.hpp"

#include <cmath>

using namespace gft;

namespace {

Distribution coin(std::int64_t lo, std::int64_t hi) {
  return Distribution::discrete({{Rational(lo), BigRational(1, 2)}, {Rational(hi), BigRational(1, 2)}});
}

Distribution random_discrete(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> atoms(1, 3), weight(1, 5), gap(1, 3);
  const int n = atoms(rng);
  std::vector<int> w(n);
  int total = 0;
  for (auto& x : w) total += (x = weight(rng));
  std::vector<Atom> out;
  std::int64_t v = std::uniform_int_distribution<int>(-1, 2)(rng);
  for (int i = 0; i < n; ++i) {
    out.push_back({Rational(v, 2), BigRational(w[i], total)});
    v += gap(rng);
  }
  return Distribution::discrete(std::move(out));
}

bool within(const Expectation& e, double target, double sigmas = 5.0) {
  return std::abs(e.mean - target) <= sigmas * e.std_error;
}

}  // namespace

TEST_CASE("exact expectations on hand-computed markets") {
  const auto c = coin(0, 1);
  CHECK(expected_opt_exact({c, c, 1, 1}).exact == BigRational(1, 4));
  CHECK(expected_gft_exact(vcg_mechanism(), {c, c, 1, 1}).exact == BigRational(1, 4));

  const auto [s, b] = fsd_11_pair(BigRational(1, 4));
  CHECK(expected_gft_exact(btr_mechanism(), {s, b, 1, 2}).exact == BigRational(57, 64));
  CHECK(expected_opt_exact({s, b, 1, 1}).exact == BigRational(15, 16));

  const auto [fs, fb] = footnote_pair();
  CHECK(expected_sample_pricing_gft(fs, fb, 1, EvalMode::Exact).exact == BigRational(1, 4));
  const auto pm = Distribution::point_mass(Rational(5, 2));
  CHECK(expected_sample_pricing_gft(pm, pm, 3, EvalMode::Exact).exact == 0);
  CHECK_THROWS_AS(expected_sample_pricing_gft(pm, pm, 0, EvalMode::Exact), InvalidInput);
}

TEST_CASE("exact engine agrees with plain recursion") {
  std::mt19937_64 rng(77);
  const std::vector<Mechanism> mechs{btr_mechanism(), str_mechanism(), mcafee92_mechanism(), vcg_mechanism()};
  for (int t = 0; t < 40; ++t) {
    const auto fs = random_discrete(rng);
    const auto fb = random_discrete(rng);
    const std::size_t ms = 1 + t % 3, mb = 1 + (t / 3) % 3;
    const MarketSpec spec{fs, fb, ms, mb};
    const auto coords = market_coordinates(spec);
    for (const auto& m : mechs) {
      const auto want = oracle::brute_expectation(coords, [&](const std::vector<Rational>& v) {
        ValueProfile p{{v.begin(), v.begin() + ms}, {v.begin() + ms, v.end()}};
        return m(p).gft;
      });
      REQUIRE(expected_gft_exact(m, spec).exact == want);
    }
    const auto opt = oracle::brute_expectation(coords, [&](const std::vector<Rational>& v) {
      return oracle::brute_opt(ValueProfile{{v.begin(), v.begin() + ms}, {v.begin() + ms, v.end()}});
    });
    REQUIRE(expected_opt_exact(spec).exact == opt);
  }
}

TEST_CASE("exact results do not depend on the worker count") {
  std::mt19937_64 rng(5);
  const MarketSpec spec{random_discrete(rng), random_discrete(rng), 2, 4};
  const auto one = expected_gft_exact(btr_mechanism(), spec, {ProductSupport::kDefaultCap, 1});
  for (unsigned w : {2u, 3u, 7u}) {
    CHECK(expected_gft_exact(btr_mechanism(), spec, {ProductSupport::kDefaultCap, w}) == one);
  }
}

TEST_CASE("pre-trade welfare is linear") {
  std::mt19937_64 rng(8);
  for (int t = 0; t < 10; ++t) {
    const MarketSpec spec{random_discrete(rng), random_discrete(rng), 3, 2};
    const auto e = exact_expectation(market_coordinates(spec), [&](std::span<const Rational> v) {
      Rational sum = 0;
      for (std::size_t i = 0; i < spec.m_s; ++i) sum += v[i];
      return sum;
    });
    CHECK(e.exact == BigRational(3) * spec.seller.exact_mean());
  }
}

TEST_CASE("enumeration limits") {
  const auto c = coin(0, 1);
  CHECK_THROWS_AS(expected_gft_exact(btr_mechanism(), {c, c, 10, 10}, {1000, 1}), TooLarge);
  CHECK_THROWS_AS(expected_gft_exact(btr_mechanism(), {Distribution::uniform(0, 1), c, 1, 1}), InvalidInput);
}

TEST_CASE("Monte Carlo estimates") {
  const auto u = Distribution::uniform(0, 1);
  const auto opt = expected_opt_mc({u, u, 1, 1}, 1000000, 7);
  CHECK(within(opt, 1.0 / 6));
  CHECK(opt.std_error == doctest::Approx(3e-4).epsilon(0.5));
  CHECK(within(expected_sample_pricing_gft(u, u, 1, EvalMode::MonteCarlo, 1000000, 7), 1.0 / 12));

  const auto btr1 = expected_gft_mc(btr_mechanism(), {u, u, 1, 2}, 200000, 42);
  const auto btr2 = expected_gft_mc(btr_mechanism(), {u, u, 1, 2}, 200000, 42);
  CHECK(btr1 == btr2);

  const auto pm = Distribution::point_mass(2);
  const auto flat = expected_gft_mc(btr_mechanism(), {pm, pm, 1, 2}, 1000, 1);
  CHECK(flat.mean == 0.0);
  CHECK(flat.std_error == 0.0);

  CHECK_THROWS_AS(expected_gft_mc(btr_mechanism(), {u, u, 1, 1}, 1, 1), InvalidInput);
}

TEST_CASE("Monte Carlo is independent of the thread count") {
  auto draw = [](std::mt19937_64& rng) { return uniform_open01(rng) * uniform_open01(rng); };
  const auto a = mc_expectation(100003, 99, draw, 1);
  const auto b = mc_expectation(100003, 99, draw, 4);
  CHECK(a == b);
  CHECK(a.n_samples == 100003);
  CHECK(within(a, 0.25));
}

TEST_CASE("Monte Carlo agrees with exact enumeration") {
  std::mt19937_64 rng(13);
  for (int t = 0; t < 5; ++t) {
    const MarketSpec spec{random_discrete(rng), random_discrete(rng), 2, 3};
    const auto exact = expected_gft_exact(btr_mechanism(), spec);
    const auto mc = expected_gft_mc(btr_mechanism(), spec, 1000000, 100 + t);
    CHECK(std::abs(mc.mean - exact.value()) <= 5 * mc.std_error + 1e-12);
  }
}

TEST_CASE("coupled quantile sampler") {
  const auto pm = Distribution::point_mass(1);
  for (const auto& d : coupled_quantile_profiles({pm, pm, 2, 3}, 20, 1)) {
    CHECK(d.profile.sellers == std::vector<double>{1, 1});
    CHECK(d.profile.buyers == std::vector<double>{1, 1, 1});
  }

  const auto [s, b] = fsd_11_pair(BigRational(1, 4));
  for (const auto& d : coupled_quantile_profiles({s, b, 1, 2}, 5000, 2)) {
    for (double q : d.seller_quantiles) REQUIRE(quantile_value(b, Quantile(q)) >= quantile_value(s, Quantile(q)));
    for (double q : d.buyer_quantiles) REQUIRE(quantile_value(b, Quantile(q)) >= quantile_value(s, Quantile(q)));
  }

  // Identical distributions: coupled draws are iid draws, so OPT estimates agree.
  const auto u = Distribution::uniform(0, 1);
  CoupledQuantileSampler sampler({u, u, 2, 2}, 3);
  double sum = 0, sq = 0;
  const int n = 400000;
  for (int i = 0; i < n; ++i) {
    const double g = opt_gft(sampler.next().profile);
    sum += g;
    sq += g * g;
  }
  const double mean = sum / n;
  const double se = std::sqrt((sq / n - mean * mean) / n);
  const auto plain = expected_opt_mc({u, u, 2, 2}, n, 4);
  CHECK(std::abs(mean - plain.mean) <= 5 * std::hypot(se, plain.std_error));
}

TEST_CASE("expectation serialization") {
  const auto e = Expectation::exact_value(BigRational(-3, 7), 12);
  CHECK(e.str() == "-3/7");
  CHECK(expectation_from_json(to_json(e)) == e);
  const auto m = Expectation::monte_carlo(0.1234567891234, 0.000123, 1000, 5);
  CHECK(expectation_from_json(nlohmann::json::parse(to_json(m).dump())) == m);
  CHECK(m.str() == "0.123457 ± 0.000123");
}
