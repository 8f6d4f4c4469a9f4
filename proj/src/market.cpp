#include "gft/market.hpp"

#include <algorithm>
#include <numeric>

namespace gft {

std::string to_string(const AgentRef& a) { return (a.role == Role::Seller ? "S" : "B") + std::to_string(a.id); }

template <class V>
OrderStatistics order_statistics(const BasicProfile<V>& p) {
  OrderStatistics out;
  out.ranked.reserve(p.m_s() + p.m_b());
  for (std::size_t i = 0; i < p.m_b(); ++i) out.ranked.push_back({Role::Buyer, i});
  for (std::size_t i = 0; i < p.m_s(); ++i) out.ranked.push_back({Role::Seller, i});
  std::sort(out.ranked.begin(), out.ranked.end(),
            [&](const AgentRef& a, const AgentRef& b) { return ranks_above(p, a, b); });

  out.buyers_desc.resize(p.m_b());
  std::iota(out.buyers_desc.begin(), out.buyers_desc.end(), std::size_t{0});
  std::sort(out.buyers_desc.begin(), out.buyers_desc.end(), [&](std::size_t a, std::size_t b) {
    return p.buyers[a] != p.buyers[b] ? p.buyers[a] > p.buyers[b] : a < b;
  });
  out.sellers_asc.resize(p.m_s());
  std::iota(out.sellers_asc.begin(), out.sellers_asc.end(), std::size_t{0});
  std::sort(out.sellers_asc.begin(), out.sellers_asc.end(), [&](std::size_t a, std::size_t b) {
    return p.sellers[a] != p.sellers[b] ? p.sellers[a] < p.sellers[b] : a < b;
  });
  return out;
}

namespace {

// Buyers sorted descending and sellers ascending; cheaper than the full ranking.
template <class V>
struct Sides {
  std::vector<std::size_t> buyers;
  std::vector<std::size_t> sellers;
  std::size_t q = 0;

  const V& b(const BasicProfile<V>& p, std::size_t i) const { return p.buyers[buyers[i]]; }
  const V& s(const BasicProfile<V>& p, std::size_t i) const { return p.sellers[sellers[i]]; }
};

template <class V>
Sides<V> sides_of(const BasicProfile<V>& p) {
  Sides<V> out;
  out.buyers.resize(p.m_b());
  std::iota(out.buyers.begin(), out.buyers.end(), std::size_t{0});
  std::sort(out.buyers.begin(), out.buyers.end(), [&](std::size_t a, std::size_t b) {
    return p.buyers[a] != p.buyers[b] ? p.buyers[a] > p.buyers[b] : a < b;
  });
  out.sellers.resize(p.m_s());
  std::iota(out.sellers.begin(), out.sellers.end(), std::size_t{0});
  std::sort(out.sellers.begin(), out.sellers.end(), [&](std::size_t a, std::size_t b) {
    return p.sellers[a] != p.sellers[b] ? p.sellers[a] < p.sellers[b] : a < b;
  });
  // b^{(i)} ranks above s^{(i)} exactly when b^{(i)} >= s^{(i)} (buyers win ties);
  // the condition holds on a prefix because buyers descend and sellers ascend.
  const std::size_t limit = std::min(p.m_s(), p.m_b());
  while (out.q < limit && out.b(p, out.q) >= out.s(p, out.q)) ++out.q;
  return out;
}

template <class V>
std::vector<TradingPair> top_pairs(const Sides<V>& sd, std::size_t count) {
  std::vector<TradingPair> pairs;
  pairs.reserve(count);
  for (std::size_t i = 0; i < count; ++i) pairs.push_back({sd.sellers[i], sd.buyers[i]});
  return pairs;
}

template <class V>
BasicOutcome<V> finish(const BasicProfile<V>& p, BasicOutcome<V> o) {
  o.gft = V{};
  for (const auto& tp : o.trading_pairs) o.gft += p.buyers[tp.buyer] - p.sellers[tp.seller];
  o.budget_surplus = V{};
  for (const auto& v : o.seller_payments) o.budget_surplus += v;
  for (const auto& v : o.buyer_payments) o.budget_surplus += v;
  return o;
}

// Reduced outcome shared by BTR, STR, and McAfee: the first q-1 pairs trade,
// buyers pay b^{(q)}, sellers receive s^{(q)}.
template <class V>
BasicOutcome<V> reduce(const BasicProfile<V>& p, const Sides<V>& sd) {
  return settle(p, top_pairs(sd, sd.q - 1), sd.b(p, sd.q - 1), sd.s(p, sd.q - 1));
}

template <class V>
bool in_efficient_trade(const BasicProfile<V>& p, const AgentRef& agent) {
  std::size_t above = 0;
  const std::size_t m_s = p.m_s();
  for (std::size_t i = 0; i < p.m_b(); ++i) {
    const AgentRef other{Role::Buyer, i};
    if (other != agent && ranks_above(p, other, agent)) ++above;
  }
  for (std::size_t i = 0; i < p.m_s(); ++i) {
    const AgentRef other{Role::Seller, i};
    if (other != agent && ranks_above(p, other, agent)) ++above;
  }
  const bool holds_item = above < m_s;
  return agent.role == Role::Buyer ? holds_item : !holds_item;
}

template <class V>
V midpoint(const V& a, const V& b) {
  return (a + b) / V(2);
}

}  // namespace

template <class V>
std::size_t optimal_trade_size(const BasicProfile<V>& p) {
  return sides_of(p).q;
}

template <class V>
V opt_gft(const BasicProfile<V>& p) {
  const auto sd = sides_of(p);
  V total{};
  for (std::size_t i = 0; i < sd.q; ++i) total += sd.b(p, i) - sd.s(p, i);
  return total;
}

template <class V>
bool BasicOutcome<V>::trades(const AgentRef& a) const {
  return std::any_of(trading_pairs.begin(), trading_pairs.end(), [&](const TradingPair& tp) {
    return a.role == Role::Seller ? tp.seller == a.id : tp.buyer == a.id;
  });
}

template <class V>
BasicOutcome<V> empty_outcome(const BasicProfile<V>& p) {
  BasicOutcome<V> o;
  o.seller_payments.assign(p.m_s(), V{});
  o.buyer_payments.assign(p.m_b(), V{});
  return o;
}

template <class V>
BasicOutcome<V> settle(const BasicProfile<V>& p, std::vector<TradingPair> pairs, const V& buyer_price,
                       const V& seller_price) {
  auto o = empty_outcome(p);
  for (const auto& tp : pairs) {
    o.seller_payments.at(tp.seller) = -seller_price;
    o.buyer_payments.at(tp.buyer) = buyer_price;
  }
  o.trading_pairs = std::move(pairs);
  return finish(p, std::move(o));
}

template <class V>
BasicOutcome<V> btr(const BasicProfile<V>& p, PriceComparison cmp) {
  const auto sd = sides_of(p);
  if (sd.q == 0) return empty_outcome(p);
  if (sd.q < p.m_b()) {
    const V& next_buyer = sd.b(p, sd.q);
    const V& marginal_seller = sd.s(p, sd.q - 1);
    const bool accept = cmp == PriceComparison::Weak ? next_buyer >= marginal_seller : next_buyer > marginal_seller;
    if (accept) return settle(p, top_pairs(sd, sd.q), next_buyer, next_buyer);
  }
  return reduce(p, sd);
}

template <class V>
BasicOutcome<V> str(const BasicProfile<V>& p) {
  const auto sd = sides_of(p);
  if (sd.q == 0) return empty_outcome(p);
  if (sd.q < p.m_s()) {
    const V& next_seller = sd.s(p, sd.q);
    if (next_seller <= sd.b(p, sd.q - 1)) return settle(p, top_pairs(sd, sd.q), next_seller, next_seller);
  }
  return reduce(p, sd);
}

template <class V>
BasicOutcome<V> mcafee92(const BasicProfile<V>& p) {
  const auto sd = sides_of(p);
  if (sd.q == 0) return empty_outcome(p);
  if (sd.q < p.m_b() && sd.q < p.m_s()) {
    const V price = midpoint(sd.b(p, sd.q), sd.s(p, sd.q));
    if (sd.s(p, sd.q - 1) <= price && price <= sd.b(p, sd.q - 1)) {
      return settle(p, top_pairs(sd, sd.q), price, price);
    }
  }
  return reduce(p, sd);
}

template <class V>
BasicOutcome<V> fixed_price(const BasicProfile<V>& p, const V& price) {
  const auto sd = sides_of(p);
  std::size_t sellers = 0;
  while (sellers < p.m_s() && sd.s(p, sellers) <= price) ++sellers;
  std::size_t buyers = 0;
  while (buyers < p.m_b() && sd.b(p, buyers) >= price) ++buyers;
  return settle(p, top_pairs(sd, std::min(sellers, buyers)), price, price);
}

template <class V>
BasicOutcome<V> median_mechanism(const BasicProfile<V>& p, const V& posted_median) {
  if (p.m_s() != 1) throw InvalidInput("median mechanism requires exactly one seller");
  if (p.m_b() == 0) return empty_outcome(p);
  const auto sd = sides_of(p);
  if (p.sellers[0] <= posted_median && sd.b(p, 0) >= posted_median) {
    return settle(p, {TradingPair{0, sd.buyers[0]}}, posted_median, posted_median);
  }
  return empty_outcome(p);
}

template <class V>
BasicProfile<V> dual_transform(const BasicProfile<V>& p) {
  BasicProfile<V> d;
  d.sellers.reserve(p.m_b());
  d.buyers.reserve(p.m_s());
  for (const auto& b : p.buyers) d.sellers.push_back(-b);
  for (const auto& s : p.sellers) d.buyers.push_back(-s);
  return d;
}

template <class V>
V sample_pricing_gft(const V& seller, const V& buyer, std::span<const V> samples) {
  if (samples.empty()) throw InvalidInput("sample pricing needs at least one sample");
  const V& price = *std::max_element(samples.begin(), samples.end());
  return (buyer >= price && price >= seller) ? buyer - seller : V{};
}

template <class V>
std::optional<V> efficient_trade_critical_value(const BasicProfile<V>& p, const AgentRef& agent) {
  std::vector<V> grid;
  for (std::size_t i = 0; i < p.m_s(); ++i) {
    if (AgentRef{Role::Seller, i} != agent) grid.push_back(p.sellers[i]);
  }
  for (std::size_t i = 0; i < p.m_b(); ++i) {
    if (AgentRef{Role::Buyer, i} != agent) grid.push_back(p.buyers[i]);
  }
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  if (grid.empty()) return std::nullopt;

  BasicProfile<V> probe = p;
  auto member_at = [&](const V& bid) {
    probe.value(agent) = bid;
    return in_efficient_trade(probe, agent);
  };
  const std::size_t n = grid.size();
  auto above = [&](std::size_t j) { return j + 1 < n ? midpoint(grid[j], grid[j + 1]) : grid[j] + V(1); };
  auto below = [&](std::size_t j) { return j > 0 ? midpoint(grid[j - 1], grid[j]) : grid[j] - V(1); };

  if (agent.role == Role::Buyer) {
    // Membership is nondecreasing in the bid: find the first grid point above
    // which the buyer is in the efficient trade.
    if (member_at(below(0)) || !member_at(above(n - 1))) return std::nullopt;
    std::size_t lo = 0;
    std::size_t hi = n - 1;
    while (lo < hi) {
      const std::size_t mid = lo + (hi - lo) / 2;
      if (member_at(above(mid))) {
        hi = mid;
      } else {
        lo = mid + 1;
      }
    }
    return grid[lo];
  }
  // Sellers: membership is nonincreasing; find the last grid point below which
  // the seller still trades.
  if (!member_at(below(0)) || member_at(above(n - 1))) return std::nullopt;
  std::size_t lo = 0;
  std::size_t hi = n - 1;
  while (lo < hi) {
    const std::size_t mid = lo + (hi - lo + 1) / 2;
    if (member_at(below(mid))) {
      lo = mid;
    } else {
      hi = mid - 1;
    }
  }
  return grid[lo];
}

template <class V>
BasicOutcome<V> vcg(const BasicProfile<V>& p) {
  const auto sd = sides_of(p);
  auto o = empty_outcome(p);
  o.trading_pairs = top_pairs(sd, sd.q);
  for (const auto& tp : o.trading_pairs) {
    const auto buyer_critical = efficient_trade_critical_value(p, AgentRef{Role::Buyer, tp.buyer});
    const auto seller_critical = efficient_trade_critical_value(p, AgentRef{Role::Seller, tp.seller});
    // A trading agent always has a finite critical value: some other agent's value bounds it.
    o.buyer_payments[tp.buyer] = buyer_critical.value_or(p.buyers[tp.buyer]);
    o.seller_payments[tp.seller] = -seller_critical.value_or(p.sellers[tp.seller]);
  }
  return finish(p, std::move(o));
}

#define GFT_INSTANTIATE_MARKET(V)                                                                          \
  template OrderStatistics order_statistics(const BasicProfile<V>&);                                       \
  template std::size_t optimal_trade_size(const BasicProfile<V>&);                                         \
  template V opt_gft(const BasicProfile<V>&);                                                              \
  template struct BasicOutcome<V>;                                                                         \
  template BasicOutcome<V> empty_outcome(const BasicProfile<V>&);                                          \
  template BasicOutcome<V> settle(const BasicProfile<V>&, std::vector<TradingPair>, const V&, const V&);   \
  template BasicOutcome<V> btr(const BasicProfile<V>&, PriceComparison);                                   \
  template BasicOutcome<V> str(const BasicProfile<V>&);                                                    \
  template BasicOutcome<V> vcg(const BasicProfile<V>&);                                                    \
  template BasicOutcome<V> mcafee92(const BasicProfile<V>&);                                               \
  template BasicOutcome<V> fixed_price(const BasicProfile<V>&, const V&);                                  \
  template BasicOutcome<V> median_mechanism(const BasicProfile<V>&, const V&);                             \
  template BasicProfile<V> dual_transform(const BasicProfile<V>&);                                         \
  template V sample_pricing_gft(const V&, const V&, std::span<const V>);                                   \
  template std::optional<V> efficient_trade_critical_value(const BasicProfile<V>&, const AgentRef&);

GFT_INSTANTIATE_MARKET(Rational)
GFT_INSTANTIATE_MARKET(double)

#undef GFT_INSTANTIATE_MARKET

namespace {

template <class P>
using value_of = typename std::decay_t<decltype(std::declval<P>().sellers)>::value_type;

}  // namespace

Mechanism btr_mechanism(PriceComparison cmp) {
  return Mechanism::from_rule(cmp == PriceComparison::Weak ? "btr" : "btr-strict",
                              [cmp](const auto& p) { return btr(p, cmp); });
}

Mechanism str_mechanism() {
  return Mechanism::from_rule("str", [](const auto& p) { return str(p); });
}

Mechanism vcg_mechanism() {
  return Mechanism::from_rule("vcg", [](const auto& p) { return vcg(p); });
}

Mechanism mcafee92_mechanism() {
  return Mechanism::from_rule("mcafee92", [](const auto& p) { return mcafee92(p); });
}

Mechanism fixed_price_mechanism(Rational price) {
  return Mechanism::from_rule("fixed-price:" + price.str(), [price](const auto& p) {
    using V = value_of<decltype(p)>;
    return fixed_price(p, value_from_rational<V>(price));
  });
}

Mechanism median_mechanism(Rational posted_median) {
  return Mechanism::from_rule("median:" + posted_median.str(), [posted_median](const auto& p) {
    using V = value_of<decltype(p)>;
    return median_mechanism(p, value_from_rational<V>(posted_median));
  });
}

Mechanism make_mechanism(std::string_view name) {
  if (name == "btr") return btr_mechanism();
  if (name == "str") return str_mechanism();
  if (name == "vcg" || name == "opt") return vcg_mechanism();
  if (name == "mcafee92") return mcafee92_mechanism();
  auto parameter = [&](std::string_view prefix) -> std::optional<Rational> {
    if (!name.starts_with(prefix)) return std::nullopt;
    try {
      return Rational::parse(name.substr(prefix.size()));
    } catch (const std::exception&) {
      throw InvalidInput("bad mechanism parameter in '" + std::string(name) + "'");
    }
  };
  if (auto price = parameter("fixed-price:")) return fixed_price_mechanism(*price);
  if (auto median = parameter("median:")) return median_mechanism(*median);
  throw InvalidInput("unknown mechanism '" + std::string(name) + "'");
}

std::vector<std::string> mechanism_names() {
  return {"btr", "str", "vcg", "opt", "mcafee92", "fixed-price:<rational>", "median:<rational>"};
}

namespace {

nlohmann::json value_json(const Rational& v) {
  return v.is_integer() ? nlohmann::json(v.num()) : nlohmann::json(v.str());
}

Rational value_from_json(const nlohmann::json& v) {
  if (v.is_number_integer()) return Rational(v.get<std::int64_t>());
  if (v.is_string()) return Rational::parse(v.get<std::string>());
  throw InvalidInput("profile values must be integers or \"p/q\" strings, got " + v.dump());
}

}  // namespace

nlohmann::json to_json(const MarketOutcome& o) {
  nlohmann::json j;
  auto pairs = nlohmann::json::array();
  for (const auto& tp : o.trading_pairs) {
    pairs.push_back(nlohmann::json::array({nlohmann::json::array({"S", tp.seller}), nlohmann::json::array({"B", tp.buyer})}));
  }
  j["trading_pairs"] = std::move(pairs);
  nlohmann::json payments = nlohmann::json::object();
  for (std::size_t i = 0; i < o.seller_payments.size(); ++i) payments["S" + std::to_string(i)] = o.seller_payments[i].str();
  for (std::size_t i = 0; i < o.buyer_payments.size(); ++i) payments["B" + std::to_string(i)] = o.buyer_payments[i].str();
  j["payments"] = std::move(payments);
  j["gft"] = o.gft.str();
  j["budget_surplus"] = o.budget_surplus.str();
  return j;
}

nlohmann::json to_json(const ValueProfile& p) {
  nlohmann::json j;
  j["sellers"] = nlohmann::json::array();
  j["buyers"] = nlohmann::json::array();
  for (const auto& v : p.sellers) j["sellers"].push_back(value_json(v));
  for (const auto& v : p.buyers) j["buyers"].push_back(value_json(v));
  return j;
}

ValueProfile profile_from_json(const nlohmann::json& j) {
  ValueProfile p;
  try {
    for (const auto& v : j.at("sellers")) p.sellers.push_back(value_from_json(v));
    for (const auto& v : j.at("buyers")) p.buyers.push_back(value_from_json(v));
  } catch (const nlohmann::json::exception& e) {
    throw InvalidInput(std::string("malformed profile: ") + e.what());
  }
  return p;
}

ValueProfile parse_profile(std::string_view text) {
  ValueProfile p;
  bool saw_s = false;
  bool saw_b = false;
  auto parse_list = [&](std::string_view body, std::vector<Rational>& out) {
    while (!body.empty()) {
      const auto comma = body.find(',');
      const auto item = body.substr(0, comma);
      if (!item.empty()) {
        try {
          out.push_back(Rational::parse(item));
        } catch (const std::exception&) {
          throw InvalidInput("bad value '" + std::string(item) + "' in profile literal");
        }
      }
      if (comma == std::string_view::npos) break;
      body.remove_prefix(comma + 1);
    }
  };
  while (!text.empty()) {
    const auto semi = text.find(';');
    auto part = text.substr(0, semi);
    while (!part.empty() && part.front() == ' ') part.remove_prefix(1);
    if (part.starts_with("s=")) {
      parse_list(part.substr(2), p.sellers);
      saw_s = true;
    } else if (part.starts_with("b=")) {
      parse_list(part.substr(2), p.buyers);
      saw_b = true;
    } else if (!part.empty()) {
      throw InvalidInput("profile literal parts must start with s= or b=: '" + std::string(part) + "'");
    }
    if (semi == std::string_view::npos) break;
    text.remove_prefix(semi + 1);
  }
  if (!saw_s && !saw_b) throw InvalidInput("empty profile literal");
  return p;
}

}  // namespace gft
