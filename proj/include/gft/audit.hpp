#pragma once

#include "gft/market.hpp"

#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace gft {

enum class FeasibilityKind {
  IndividualRationality,
  BudgetBalance,
  NonTraderPays,
};

std::string to_string(FeasibilityKind k);

struct FeasibilityViolation {
  std::size_t profile_index = 0;
  ValueProfile profile;
  /// Absent for budget-balance violations, which concern the whole market.
  std::optional<AgentRef> agent;
  FeasibilityKind kind = FeasibilityKind::IndividualRationality;
  /// Utility shortfall for IR, the surplus for BB, the payment otherwise.
  Rational amount;
};

/// Checks ex-post individual rationality and weak budget balance on every
/// profile. An empty result means the mechanism passed.
std::vector<FeasibilityViolation> audit_feasibility(const Mechanism& m, std::span<const ValueProfile> profiles);

/// Quasi-linear utility relative to the no-trade endowment: a buyer gets
/// value-if-traded minus payment, a seller gets payment received minus
/// value-if-traded.
Rational truthful_utility(const ValueProfile& truth, const MarketOutcome& outcome, const AgentRef& agent);

struct ProfitableDeviation {
  ValueProfile truthful_profile;
  AgentRef agent;
  Rational reported;
  Rational truthful_utility;
  Rational deviating_utility;
};

struct DsicReport {
  std::uint64_t profiles_checked = 0;
  std::uint64_t deviations_checked = 0;
  std::vector<ProfitableDeviation> violations;
};

/// Exhaustive unilateral-deviation check over value_grid^(m_S + m_B), in
/// lexicographic order, truncated to profile_budget profiles.
DsicReport audit_dsic(const Mechanism& m, std::span<const Rational> value_grid, std::size_t m_s, std::size_t m_b,
                      std::uint64_t profile_budget);

struct AnonymityViolation {
  ValueProfile original;
  ValueProfile permuted;
  std::vector<std::size_t> seller_permutation;
  std::vector<std::size_t> buyer_permutation;
};

/// Applies random within-role permutations and checks that the trade status
/// follows the values: per role, the number of traders and the multiset of
/// traded values are unchanged. Equal-valued agents are interchangeable, so
/// id-based tie-breaking is not a violation.
std::vector<AnonymityViolation> audit_anonymity(const Mechanism& m, const ValueProfile& p, std::size_t trials,
                                                std::mt19937_64& rng);

}  // namespace gft
