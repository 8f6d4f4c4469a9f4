#pragma once

#include "gft/errors.hpp"
#include "gft/rational.hpp"

#include <nlohmann/json.hpp>

#include <compare>
#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace gft {

enum class Role { Seller, Buyer };

struct AgentRef {
  Role role = Role::Seller;
  std::size_t id = 0;

  friend auto operator<=>(const AgentRef&, const AgentRef&) = default;
};

/// "S<i>" / "B<j>"
std::string to_string(const AgentRef& a);

/// Realized seller and buyer values; the index is the agent id.
template <class V>
struct BasicProfile {
  std::vector<V> sellers;
  std::vector<V> buyers;

  std::size_t m_s() const noexcept { return sellers.size(); }
  std::size_t m_b() const noexcept { return buyers.size(); }
  const V& value(const AgentRef& a) const { return a.role == Role::Seller ? sellers.at(a.id) : buyers.at(a.id); }
  V& value(const AgentRef& a) { return a.role == Role::Seller ? sellers.at(a.id) : buyers.at(a.id); }

  friend bool operator==(const BasicProfile&, const BasicProfile&) = default;
};

using ValueProfile = BasicProfile<Rational>;
using RealProfile = BasicProfile<double>;

/// Total order on the agents of a profile: higher value first; on equal
/// values buyers rank above sellers; then smaller id first.
template <class V>
bool ranks_above(const BasicProfile<V>& p, const AgentRef& a, const AgentRef& b) {
  const V& va = p.value(a);
  const V& vb = p.value(b);
  if (va != vb) return va > vb;
  if (a.role != b.role) return a.role == Role::Buyer;
  return a.id < b.id;
}

struct OrderStatistics {
  /// x^{(1)}, x^{(2)}, ...: every agent, highest first.
  std::vector<AgentRef> ranked;
  /// Buyer ids, b^{(1)} first.
  std::vector<std::size_t> buyers_desc;
  /// Seller ids, s^{(1)} (lowest) first; equal values by smaller id.
  std::vector<std::size_t> sellers_asc;
};

template <class V>
OrderStatistics order_statistics(const BasicProfile<V>& p);

/// Number of buyers among the m_S highest-ranked agents.
template <class V>
std::size_t optimal_trade_size(const BasicProfile<V>& p);

/// Sum of the m_S highest values minus the sum of seller values.
template <class V>
V opt_gft(const BasicProfile<V>& p);

struct TradingPair {
  std::size_t seller = 0;
  std::size_t buyer = 0;

  friend bool operator==(const TradingPair&, const TradingPair&) = default;
};

/// Allocation and payments. Payments are positive when the agent pays and
/// negative when the agent is paid; agents outside trading_pairs pay 0.
template <class V>
struct BasicOutcome {
  std::vector<TradingPair> trading_pairs;
  std::vector<V> seller_payments;
  std::vector<V> buyer_payments;
  V gft{};
  V budget_surplus{};

  V payment(const AgentRef& a) const {
    return a.role == Role::Seller ? seller_payments.at(a.id) : buyer_payments.at(a.id);
  }
  bool trades(const AgentRef& a) const;

  friend bool operator==(const BasicOutcome&, const BasicOutcome&) = default;
};

using MarketOutcome = BasicOutcome<Rational>;
using RealOutcome = BasicOutcome<double>;

/// Builds an outcome in which every seller in `pairs` receives seller_price
/// and every buyer pays buyer_price. gft and budget_surplus are recomputed.
template <class V>
BasicOutcome<V> settle(const BasicProfile<V>& p, std::vector<TradingPair> pairs, const V& buyer_price,
                       const V& seller_price);

template <class V>
BasicOutcome<V> empty_outcome(const BasicProfile<V>& p);

/// How BTR compares the next buyer's value against the marginal seller.
/// Weak is the mechanism; Strict exists for mutation testing.
enum class PriceComparison { Weak, Strict };

/// Buyer trade reduction.
template <class V>
BasicOutcome<V> btr(const BasicProfile<V>& p, PriceComparison cmp = PriceComparison::Weak);

/// Seller trade reduction (prices at the next seller in line).
template <class V>
BasicOutcome<V> str(const BasicProfile<V>& p);

/// Efficient allocation with critical-value payments (may run a deficit).
template <class V>
BasicOutcome<V> vcg(const BasicProfile<V>& p);

/// McAfee's 1992 double auction: price at the average of the next buyer and
/// next seller, reducing when that price falls outside [s^{(q)}, b^{(q)}].
template <class V>
BasicOutcome<V> mcafee92(const BasicProfile<V>& p);

/// Posted price with weak acceptance on both sides.
template <class V>
BasicOutcome<V> fixed_price(const BasicProfile<V>& p, const V& price);

/// Single seller; posts `posted_median` and trades with the top buyer when
/// both sides accept. Throws InvalidInput unless m_S == 1.
template <class V>
BasicOutcome<V> median_mechanism(const BasicProfile<V>& p, const V& posted_median);

/// Negate and swap roles: sellers' = -buyers, buyers' = -sellers.
template <class V>
BasicProfile<V> dual_transform(const BasicProfile<V>& p);

/// Bilateral trade at the maximum of the sample prices (weak acceptance).
template <class V>
V sample_pricing_gft(const V& seller, const V& buyer, std::span<const V> samples);

/// Critical bid for `agent` to be part of the efficient trade, searched by
/// bisection over the other agents' values. nullopt when no finite bid
/// changes the agent's status.
template <class V>
std::optional<V> efficient_trade_critical_value(const BasicProfile<V>& p, const AgentRef& agent);

/// A named deterministic direct-revelation mechanism, runnable on exact and
/// floating-point profiles.
class Mechanism {
 public:
  using ExactRule = std::function<MarketOutcome(const ValueProfile&)>;
  using RealRule = std::function<RealOutcome(const RealProfile&)>;

  Mechanism(std::string name, ExactRule exact, RealRule real)
      : name_(std::move(name)), exact_(std::move(exact)), real_(std::move(real)) {}

  /// Wraps a generic callable usable with both profile types.
  template <class Rule>
  static Mechanism from_rule(std::string name, Rule rule) {
    return Mechanism(std::move(name), ExactRule(rule), RealRule(rule));
  }

  const std::string& name() const noexcept { return name_; }
  MarketOutcome operator()(const ValueProfile& p) const { return exact_(p); }
  RealOutcome operator()(const RealProfile& p) const { return real_(p); }

 private:
  std::string name_;
  ExactRule exact_;
  RealRule real_;
};

Mechanism btr_mechanism(PriceComparison cmp = PriceComparison::Weak);
Mechanism str_mechanism();
Mechanism vcg_mechanism();
Mechanism mcafee92_mechanism();
Mechanism fixed_price_mechanism(Rational price);
Mechanism median_mechanism(Rational posted_median);

/// Parses "btr", "str", "vcg" (alias "opt"), "mcafee92", "fixed-price:<r>",
/// "median:<r>". Throws InvalidInput naming the offending token.
Mechanism make_mechanism(std::string_view name);

/// Stable mechanism names for listings.
std::vector<std::string> mechanism_names();

nlohmann::json to_json(const MarketOutcome& o);
nlohmann::json to_json(const ValueProfile& p);
ValueProfile profile_from_json(const nlohmann::json& j);

/// "s=2,3;b=1" style one-shot profile literal.
ValueProfile parse_profile(std::string_view text);

}  // namespace gft
