#include "gft/audit.hpp"

#include <algorithm>
#include <numeric>

namespace gft {

std::string to_string(FeasibilityKind k) {
  switch (k) {
    case FeasibilityKind::IndividualRationality:
      return "IR";
    case FeasibilityKind::BudgetBalance:
      return "BB";
    case FeasibilityKind::NonTraderPays:
      return "non-trader-pays";
  }
  return "?";
}

Rational truthful_utility(const ValueProfile& truth, const MarketOutcome& outcome, const AgentRef& agent) {
  const bool traded = outcome.trades(agent);
  const Rational pay = outcome.payment(agent);
  const Rational value = truth.value(agent);
  if (agent.role == Role::Buyer) return (traded ? value : Rational(0)) - pay;
  return -pay - (traded ? value : Rational(0));
}

std::vector<FeasibilityViolation> audit_feasibility(const Mechanism& m, std::span<const ValueProfile> profiles) {
  std::vector<FeasibilityViolation> out;
  for (std::size_t idx = 0; idx < profiles.size(); ++idx) {
    const auto& p = profiles[idx];
    const auto o = m(p);
    auto check_agent = [&](const AgentRef& a) {
      if (!o.trades(a)) {
        if (o.payment(a) != 0) out.push_back({idx, p, a, FeasibilityKind::NonTraderPays, o.payment(a)});
        return;
      }
      const Rational u = truthful_utility(p, o, a);
      if (u < 0) out.push_back({idx, p, a, FeasibilityKind::IndividualRationality, -u});
    };
    for (std::size_t i = 0; i < p.m_s(); ++i) check_agent({Role::Seller, i});
    for (std::size_t i = 0; i < p.m_b(); ++i) check_agent({Role::Buyer, i});
    if (o.budget_surplus < 0) out.push_back({idx, p, std::nullopt, FeasibilityKind::BudgetBalance, o.budget_surplus});
  }
  return out;
}

DsicReport audit_dsic(const Mechanism& m, std::span<const Rational> value_grid, std::size_t m_s, std::size_t m_b,
                      std::uint64_t profile_budget) {
  if (value_grid.empty()) throw InvalidInput("DSIC audit needs a nonempty value grid");
  DsicReport report;
  const std::size_t n = m_s + m_b;
  std::vector<std::size_t> digit(n, 0);
  auto agent_at = [&](std::size_t k) {
    return k < m_s ? AgentRef{Role::Seller, k} : AgentRef{Role::Buyer, k - m_s};
  };
  bool done = false;
  while (!done && report.profiles_checked < profile_budget) {
    ValueProfile truth;
    truth.sellers.resize(m_s);
    truth.buyers.resize(m_b);
    for (std::size_t k = 0; k < n; ++k) truth.value(agent_at(k)) = value_grid[digit[k]];
    const auto honest = m(truth);
    for (std::size_t k = 0; k < n; ++k) {
      const AgentRef agent = agent_at(k);
      const Rational u_truth = truthful_utility(truth, honest, agent);
      for (const auto& report_value : value_grid) {
        if (report_value == truth.value(agent)) continue;
        ValueProfile reported = truth;
        reported.value(agent) = report_value;
        const Rational u_dev = truthful_utility(truth, m(reported), agent);
        ++report.deviations_checked;
        if (u_dev > u_truth) report.violations.push_back({truth, agent, report_value, u_truth, u_dev});
      }
    }
    ++report.profiles_checked;
    std::size_t k = n;
    done = true;
    while (k > 0) {
      --k;
      if (++digit[k] < value_grid.size()) {
        done = false;
        break;
      }
      digit[k] = 0;
    }
  }
  return report;
}

namespace {

std::vector<Rational> traded_values(const ValueProfile& p, const MarketOutcome& o, Role role) {
  std::vector<Rational> out;
  const std::size_t count = role == Role::Seller ? p.m_s() : p.m_b();
  for (std::size_t i = 0; i < count; ++i) {
    if (o.trades({role, i})) out.push_back(p.value({role, i}));
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

std::vector<AnonymityViolation> audit_anonymity(const Mechanism& m, const ValueProfile& p, std::size_t trials,
                                                std::mt19937_64& rng) {
  std::vector<AnonymityViolation> out;
  if (p.m_s() + p.m_b() == 0) return out;
  const auto base = m(p);
  const auto base_sellers = traded_values(p, base, Role::Seller);
  const auto base_buyers = traded_values(p, base, Role::Buyer);
  for (std::size_t t = 0; t < trials; ++t) {
    std::vector<std::size_t> sp(p.m_s());
    std::vector<std::size_t> bp(p.m_b());
    std::iota(sp.begin(), sp.end(), std::size_t{0});
    std::iota(bp.begin(), bp.end(), std::size_t{0});
    std::shuffle(sp.begin(), sp.end(), rng);
    std::shuffle(bp.begin(), bp.end(), rng);
    ValueProfile permuted;
    for (auto i : sp) permuted.sellers.push_back(p.sellers[i]);
    for (auto i : bp) permuted.buyers.push_back(p.buyers[i]);
    const auto o = m(permuted);
    if (traded_values(permuted, o, Role::Seller) != base_sellers ||
        traded_values(permuted, o, Role::Buyer) != base_buyers) {
      out.push_back({p, permuted, sp, bp});
    }
  }
  return out;
}

}  // namespace gft
