#include "doctest.h"

#include "gft/audit.hpp"
#include "gft/market.hpp"
#include "oracles.hpp"

#include <random>

using namespace gft;

namespace {

ValueProfile P(std::vector<Rational> s, std::vector<Rational> b) { return {std::move(s), std::move(b)}; }

std::vector<std::string> ranked_names(const ValueProfile& p) {
  std::vector<std::string> out;
  for (const auto& a : order_statistics(p).ranked) out.push_back(to_string(a));
  return out;
}

}  // namespace

TEST_CASE("tie order puts buyers above sellers and smaller ids first") {
  CHECK(ranked_names(P({1}, {3, 2})) == std::vector<std::string>{"B0", "B1", "S0"});
  CHECK(ranked_names(P({2}, {2})) == std::vector<std::string>{"B0", "S0"});

  const auto p = P({0, 5}, {4, 4});
  const auto st = order_statistics(p);
  CHECK(st.buyers_desc == std::vector<std::size_t>{0, 1});
  CHECK(st.sellers_asc == std::vector<std::size_t>{0, 1});
  CHECK(to_string(st.ranked[2]) == "B1");

  const auto eq = P({3, 3}, {});
  CHECK(order_statistics(eq).sellers_asc == std::vector<std::size_t>{0, 1});
}

TEST_CASE("trade size and optimal gains on hand examples") {
  CHECK(optimal_trade_size(P({1}, {3, 2})) == 1);
  CHECK(optimal_trade_size(P({1, 1}, {0, 0})) == 0);
  CHECK(optimal_trade_size(P({0, 2, 5}, {4, 3, 1})) == 2);
  CHECK(opt_gft(P({2}, {3})) == 1);
  CHECK(opt_gft(P({1, 1}, {0, 0})) == 0);
  CHECK(opt_gft(P({0, 2, 5}, {4, 3, 1})) == 5);
  CHECK(opt_gft(P({}, {1, 2})) == 0);
  CHECK(opt_gft(P({1}, {})) == 0);
}

TEST_CASE("opt_gft agrees with subset enumeration") {
  std::mt19937_64 rng(11);
  for (int t = 0; t < 20000; ++t) {
    const auto p = oracle::random_profile(rng, 5, 5, 6, 0);
    REQUIRE(opt_gft(p) == oracle::brute_opt(p));
    REQUIRE(optimal_trade_size(p) == oracle::sorted(p).q);
  }
}

TEST_CASE("btr hand examples") {
  SUBCASE("next buyer sets the price") {
    const auto o = btr(P({1}, {3, 2}));
    REQUIRE(o.trading_pairs.size() == 1);
    CHECK(o.trading_pairs[0] == TradingPair{0, 0});
    CHECK(o.buyer_payments == std::vector<Rational>{2, 0});
    CHECK(o.seller_payments == std::vector<Rational>{-2});
    CHECK(o.gft == 2);
    CHECK(o.budget_surplus == 0);
  }
  SUBCASE("bilateral trade never trades") {
    const auto o = btr(P({1}, {3}));
    CHECK(o.trading_pairs.empty());
    CHECK(o.gft == 0);
  }
  SUBCASE("reduction") {
    const auto o = btr(P({0, 2, 5}, {4, 3, 1}));
    REQUIRE(o.trading_pairs.size() == 1);
    CHECK(o.trading_pairs[0] == TradingPair{0, 0});
    CHECK(o.buyer_payments[0] == 3);
    CHECK(o.seller_payments[0] == -2);
    CHECK(o.gft == 4);
    CHECK(o.budget_surplus == 1);
  }
  SUBCASE("tie between next buyer and marginal seller keeps the trade") {
    const auto p = P({0}, {1, 0});
    CHECK(btr(p).gft == 1);
    CHECK(btr(p, PriceComparison::Strict).gft == 0);
  }
}

TEST_CASE("str, mcafee92, fixed price and median hand examples") {
  CHECK(str(P({1, 2}, {3})).gft == 2);
  CHECK(str(P({1, 2}, {3})).buyer_payments[0] == 2);
  CHECK(str(P({1}, {3})).gft == 0);

  const auto mc = mcafee92(P({0, 10}, {8, 1}));
  CHECK(mc.gft == 8);
  CHECK(mc.buyer_payments[0] == Rational(11, 2));
  CHECK(mcafee92(P({1}, {3})).gft == 0);
  const auto mc2 = mcafee92(P({0, 2, 5}, {4, 3, 1}));
  CHECK(mc2.trading_pairs.size() == 2);
  CHECK(mc2.gft == 5);
  CHECK(mc2.budget_surplus == 0);

  CHECK(fixed_price(P({1}, {2}), Rational(3, 2)).gft == 1);
  CHECK(fixed_price(P({1}, {2}), Rational(2)).gft == 1);
  CHECK(fixed_price(P({1, 1}, {2, 0}), Rational(3, 2)).trading_pairs.size() == 1);

  const Rational d2(1, 100);
  const auto med = median_mechanism(P({0}, {2, 1 + d2}), Rational(1));
  REQUIRE(med.trading_pairs.size() == 1);
  CHECK(med.trading_pairs[0].buyer == 0);
  CHECK(med.gft == 2);
  CHECK(median_mechanism(P({1 + d2}, {1 - d2, 0}), Rational(1)).gft == 0);
  CHECK(median_mechanism(P({1}, {1}), Rational(1)).trading_pairs.size() == 1);
  CHECK_THROWS_AS(median_mechanism(P({1, 2}, {1}), Rational(1)), InvalidInput);
}

TEST_CASE("sample pricing uses the maximum sample with weak acceptance") {
  const std::vector<Rational> mid{Rational(3, 2)}, wide{Rational(1, 2), Rational(5, 2)}, at_b{Rational(2)};
  CHECK(sample_pricing_gft<Rational>(1, 2, mid) == 1);
  CHECK(sample_pricing_gft<Rational>(1, 2, wide) == 0);
  CHECK(sample_pricing_gft<Rational>(1, 2, at_b) == 1);
}

TEST_CASE("mechanisms match value-based reference rules on fuzzed profiles") {
  std::mt19937_64 rng(5);
  for (int t = 0; t < 20000; ++t) {
    const auto p = oracle::random_profile(rng, 4, 4, 5, 0);
    REQUIRE(btr(p).gft == oracle::btr_gft(p));
    REQUIRE(btr(p, PriceComparison::Strict).gft == oracle::btr_gft(p, true));
    REQUIRE(str(p).gft == oracle::str_gft(p));
    REQUIRE(mcafee92(p).gft == oracle::mcafee_gft(p));
    REQUIRE(vcg(p).gft == opt_gft(p));
  }
}

TEST_CASE("dual transform") {
  const auto d = dual_transform(P({2}, {3}));
  CHECK(d.sellers == std::vector<Rational>{-3});
  CHECK(d.buyers == std::vector<Rational>{-2});
  CHECK(opt_gft(d) == 1);
  CHECK(dual_transform(ValueProfile{}) == ValueProfile{});

  std::mt19937_64 rng(3);
  for (int t = 0; t < 20000; ++t) {
    const auto p = oracle::random_profile(rng, 4, 4, 3, 0);
    REQUIRE(dual_transform(dual_transform(p)) == p);
    REQUIRE(opt_gft(dual_transform(p)) == opt_gft(p));
    REQUIRE(str(p).gft == btr(dual_transform(p)).gft);
  }
}

TEST_CASE("vcg charges critical values") {
  const auto o = vcg(P({2}, {3}));
  CHECK(o.buyer_payments[0] == 2);
  CHECK(o.seller_payments[0] == -3);
  CHECK(o.budget_surplus == -1);

  const auto none = vcg(P({1}, {0}));
  CHECK(none.trading_pairs.empty());
  CHECK(none.budget_surplus == 0);

  const auto two = vcg(P({0, 2}, {4, 3}));
  CHECK(two.buyer_payments == std::vector<Rational>{2, 2});
  CHECK(two.seller_payments == std::vector<Rational>{-3, -3});
  CHECK(two.budget_surplus == -2);

  std::mt19937_64 rng(17);
  for (int t = 0; t < 3000; ++t) {
    const auto p = oracle::random_profile(rng, 3, 3, 4);
    const auto out = vcg(p);
    if (out.trading_pairs.empty()) continue;
    const auto th = oracle::vcg_thresholds(p);
    for (const auto& pair : out.trading_pairs) {
      REQUIRE(out.buyer_payments[pair.buyer] == th.buyer);
      REQUIRE(out.seller_payments[pair.seller] == -th.seller);
    }
  }
}

TEST_CASE("outcome invariants hold for every named mechanism") {
  std::mt19937_64 rng(23);
  const std::vector<Mechanism> mechs{btr_mechanism(), str_mechanism(), vcg_mechanism(), mcafee92_mechanism(),
                                     fixed_price_mechanism(Rational(3, 2))};
  for (int t = 0; t < 3000; ++t) {
    const auto p = oracle::random_profile(rng, 4, 4, 4, 0);
    for (const auto& m : mechs) {
      const auto o = m(p);
      std::vector<int> seen_s(p.m_s()), seen_b(p.m_b());
      Rational g = 0, surplus = 0;
      for (const auto& pair : o.trading_pairs) {
        REQUIRE(++seen_s[pair.seller] == 1);
        REQUIRE(++seen_b[pair.buyer] == 1);
        g += p.buyers[pair.buyer] - p.sellers[pair.seller];
        if (m.name() != "vcg") REQUIRE(p.buyers[pair.buyer] >= p.sellers[pair.seller]);
      }
      for (const auto& x : o.seller_payments) surplus += x;
      for (const auto& x : o.buyer_payments) surplus += x;
      REQUIRE(o.gft == g);
      REQUIRE(o.budget_surplus == surplus);
      REQUIRE(o.gft <= opt_gft(p));
      REQUIRE(m(p) == o);
    }
  }
}

TEST_CASE("btr is monotone in a trading agent's bid") {
  const std::vector<Rational> grid{0, 1, 2, 3};
  std::mt19937_64 rng(29);
  for (int t = 0; t < 3000; ++t) {
    const auto p = oracle::random_profile(rng, 3, 3, 3);
    const auto o = btr(p);
    for (const auto& pair : o.trading_pairs) {
      for (const auto& v : grid) {
        if (v > p.buyers[pair.buyer]) {
          auto up = p;
          up.buyers[pair.buyer] = v;
          REQUIRE(btr(up).trades({Role::Buyer, pair.buyer}));
        }
        if (v < p.sellers[pair.seller]) {
          auto down = p;
          down.sellers[pair.seller] = v;
          REQUIRE(btr(down).trades({Role::Seller, pair.seller}));
        }
      }
    }
  }
}

TEST_CASE("degenerate markets are empty") {
  for (const auto& m : {btr_mechanism(), str_mechanism(), vcg_mechanism(), mcafee92_mechanism()}) {
    CHECK(m(P({}, {1, 2})).trading_pairs.empty());
    CHECK(m(P({1, 2}, {})).trading_pairs.empty());
    CHECK(m(ValueProfile{}).gft == 0);
  }
}

TEST_CASE("real-valued mechanisms agree with exact ones") {
  std::mt19937_64 rng(31);
  const auto m = btr_mechanism();
  for (int t = 0; t < 2000; ++t) {
    const auto p = oracle::random_profile(rng, 3, 3, 5, 0);
    RealProfile r;
    for (const auto& s : p.sellers) r.sellers.push_back(s.to_double());
    for (const auto& b : p.buyers) r.buyers.push_back(b.to_double());
    REQUIRE(m(r).gft == doctest::Approx(m(p).gft.to_double()));
  }
}

TEST_CASE("mechanism names and serialization") {
  CHECK(make_mechanism("btr").name() == "btr");
  CHECK(make_mechanism("fixed-price:3/2")(P({1}, {2})).gft == 1);
  CHECK(make_mechanism("median:1")(P({0}, {2})).gft == 2);
  CHECK_THROWS_WITH_AS(make_mechanism("nosuch"), doctest::Contains("nosuch"), InvalidInput);
  CHECK_THROWS_AS(make_mechanism("fixed-price:x"), InvalidInput);

  const auto p = parse_profile("s=0,2;b=4,3");
  CHECK(p == P({0, 2}, {4, 3}));
  CHECK(profile_from_json(to_json(p)) == p);

  const auto j = to_json(btr(P({1}, {3, 2})));
  CHECK(j["trading_pairs"] == nlohmann::json::parse(R"([[["S",0],["B",0]]])"));
  CHECK(j["payments"]["B0"] == "2");
  CHECK(j["payments"]["S0"] == "-2");
}

TEST_CASE("feasibility audits") {
  std::mt19937_64 rng(37);
  std::vector<ValueProfile> profiles;
  for (int t = 0; t < 5000; ++t) profiles.push_back(oracle::random_profile(rng, 4, 4, 3, 0));
  for (const auto& m : {btr_mechanism(), str_mechanism(), mcafee92_mechanism(), fixed_price_mechanism(Rational(3, 2))}) {
    CHECK(audit_feasibility(m, profiles).empty());
  }
  const std::vector<ValueProfile> deficit{P({2}, {3})};
  const auto v = audit_feasibility(vcg_mechanism(), deficit);
  REQUIRE(v.size() == 1);
  CHECK(v[0].kind == FeasibilityKind::BudgetBalance);
  CHECK(v[0].amount == -1);
}

TEST_CASE("dsic audit") {
  const std::vector<Rational> grid{0, 1, 2, 3};
  const auto report = audit_dsic(btr_mechanism(), grid, 1, 2, 1000);
  CHECK(report.profiles_checked == 64);
  CHECK(report.deviations_checked == 64 * 3 * 3);
  CHECK(report.violations.empty());

  const std::vector<Rational> grid5{0, 1, 2, 3, 4};
  CHECK(audit_dsic(mcafee92_mechanism(), grid5, 2, 2, 1000).violations.empty());

  // Posting the seller's own report as the price rewards overstatement.
  const Mechanism reserve = Mechanism::from_rule("seller-reserve", [](const auto& p) {
    return fixed_price(p, p.sellers.at(0));
  });
  const auto bad = audit_dsic(reserve, grid, 1, 1, 1000);
  REQUIRE_FALSE(bad.violations.empty());
  CHECK(bad.violations[0].agent.role == Role::Seller);
  CHECK(bad.violations[0].reported > bad.violations[0].truthful_profile.sellers[0]);
}

TEST_CASE("anonymity audit") {
  std::mt19937_64 rng(41);
  for (int t = 0; t < 300; ++t) {
    const auto p = oracle::random_profile(rng, 4, 4, 3, 0);
    REQUIRE(audit_anonymity(btr_mechanism(), p, 10, rng).empty());
  }
  const Mechanism first_buyer = Mechanism::from_rule("first-buyer", [](const auto& p) {
    using V = std::decay_t<decltype(p.sellers[0])>;
    if (p.m_s() == 0 || p.m_b() == 0) return empty_outcome(p);
    return settle(p, {TradingPair{0, 0}}, V(0), V(0));
  });
  const auto v = audit_anonymity(first_buyer, P({0}, {1, 2}), 50, rng);
  CHECK_FALSE(v.empty());
  CHECK(audit_anonymity(btr_mechanism(), ValueProfile{}, 5, rng).empty());
}
