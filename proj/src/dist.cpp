#include "gft/dist.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace gft {
namespace {

BigInt lcm(const BigInt& a, const BigInt& b) { return a / boost::multiprecision::gcd(a, b) * b; }

// Exact rational image of a finite double (dyadic fraction).
Rational rational_from_double(double d) {
  if (!std::isfinite(d)) throw InvalidInput("non-finite value in distribution literal");
  if (d == std::floor(d) && std::fabs(d) < 9.0e18) return Rational(static_cast<std::int64_t>(d));
  int exp = 0;
  const double mant = std::frexp(d, &exp);
  // d = mant * 2^exp with 0.5 <= |mant| < 1; scale mantissa to a 53-bit integer.
  const auto m = static_cast<std::int64_t>(std::ldexp(mant, 53));
  const int shift = 53 - exp;
  if (shift <= 0 || shift > 62) throw InvalidInput("value not representable as an exact 64-bit fraction");
  return Rational(m, std::int64_t{1} << shift);
}

}  // namespace

Distribution Distribution::discrete(std::vector<Atom> atoms) {
  if (atoms.empty()) throw InvalidInput("discrete distribution needs at least one atom");
  BigRational total = 0;
  for (std::size_t i = 0; i < atoms.size(); ++i) {
    if (atoms[i].probability <= 0) throw InvalidInput("atom probabilities must be positive");
    if (i > 0 && !(atoms[i - 1].value < atoms[i].value)) {
      throw InvalidInput("atom values must be strictly increasing");
    }
    total += atoms[i].probability;
  }
  if (total != 1) throw InvalidInput("atom probabilities sum to " + to_string(total) + ", not 1");

  Distribution f;
  f.kind_ = Kind::Discrete;
  f.atoms_ = std::move(atoms);
  BigRational running = 0;
  for (const auto& a : f.atoms_) {
    running += a.probability;
    f.cumulative_.push_back(to_double(running));
  }
  f.cumulative_.back() = 1.0;
  return f;
}

Distribution Distribution::piecewise(std::vector<QuantilePiece> pieces) {
  if (pieces.empty()) throw InvalidInput("piecewise distribution needs at least one piece");
  if (pieces.front().q_lo != 0) throw InvalidInput("first piece must start at quantile 0");
  if (pieces.back().q_hi != 1) throw InvalidInput("last piece must end at quantile 1");
  for (std::size_t i = 0; i < pieces.size(); ++i) {
    const auto& p = pieces[i];
    if (!(p.q_lo < p.q_hi)) throw InvalidInput("piece quantile interval must be nonempty");
    if (!std::isfinite(p.v_lo) || !std::isfinite(p.v_hi) || p.v_lo > p.v_hi) {
      throw InvalidInput("piece values must be finite with v_lo <= v_hi");
    }
    if (i > 0) {
      if (pieces[i - 1].q_hi != p.q_lo) throw InvalidInput("pieces must be contiguous in quantile");
      if (pieces[i - 1].v_hi > p.v_lo) throw InvalidInput("quantile function must be nondecreasing");
    }
  }
  Distribution f;
  f.kind_ = Kind::PiecewiseUniform;
  f.pieces_ = std::move(pieces);
  for (const auto& p : f.pieces_) f.piece_bounds_.push_back(to_double(p.q_hi));
  f.piece_bounds_.back() = 1.0;
  f.cumulative_ = f.piece_bounds_;
  return f;
}

Distribution Distribution::point_mass(Rational value) { return discrete({Atom{value, BigRational(1)}}); }

Distribution Distribution::uniform(double lo, double hi) {
  return piecewise({QuantilePiece{BigRational(0), BigRational(1), lo, hi}});
}

std::vector<BigRational> Distribution::breakpoints() const {
  std::vector<BigRational> out;
  if (is_discrete()) {
    BigRational running = 0;
    for (const auto& a : atoms_) {
      running += a.probability;
      out.push_back(running);
    }
  } else {
    for (const auto& p : pieces_) out.push_back(p.q_hi);
  }
  return out;
}

double Distribution::mean() const {
  if (is_discrete()) return to_double(exact_mean());
  double m = 0.0;
  for (const auto& p : pieces_) m += to_double(p.q_hi - p.q_lo) * 0.5 * (p.v_lo + p.v_hi);
  return m;
}

BigRational Distribution::exact_mean() const {
  if (!is_discrete()) throw InvalidInput("exact mean requires a discrete distribution");
  BigRational m = 0;
  for (const auto& a : atoms_) m += a.value.to_big() * a.probability;
  return m;
}

bool operator==(const Distribution& a, const Distribution& b) {
  if (a.kind_ != b.kind_) return false;
  if (a.is_discrete()) {
    return std::equal(a.atoms_.begin(), a.atoms_.end(), b.atoms_.begin(), b.atoms_.end(),
                      [](const Atom& x, const Atom& y) { return x.value == y.value && x.probability == y.probability; });
  }
  return std::equal(a.pieces_.begin(), a.pieces_.end(), b.pieces_.begin(), b.pieces_.end(),
                    [](const QuantilePiece& x, const QuantilePiece& y) {
                      return x.q_lo == y.q_lo && x.q_hi == y.q_hi && x.v_lo == y.v_lo && x.v_hi == y.v_hi;
                    });
}

Quantile::Quantile(double q) : approx_(q) {
  if (!(q > 0.0 && q < 1.0)) throw InvalidInput("quantile must lie strictly between 0 and 1");
}

Quantile::Quantile(BigRational q) : approx_(to_double(q)), exact_(std::move(q)) {
  if (!(*exact_ > 0 && *exact_ < 1)) throw InvalidInput("quantile must lie strictly between 0 and 1");
}

Rational exact_quantile_value(const Distribution& f, const BigRational& q) {
  if (!f.is_discrete()) throw InvalidInput("exact quantile requires a discrete distribution");
  if (!(q > 0 && q < 1)) throw InvalidInput("quantile must lie strictly between 0 and 1");
  BigRational running = 0;
  for (const auto& a : f.atoms()) {
    running += a.probability;
    if (running >= q) return a.value;
  }
  return f.atoms().back().value;
}

double quantile_value(const Distribution& f, const Quantile& q) {
  if (f.is_discrete()) {
    if (q.exact()) return exact_quantile_value(f, *q.exact()).to_double();
    const auto& cum = f.cumulative();
    const auto it = std::lower_bound(cum.begin(), cum.end(), q.value());
    const auto idx = std::min<std::size_t>(static_cast<std::size_t>(it - cum.begin()), cum.size() - 1);
    return f.atoms()[idx].value.to_double();
  }
  const auto& pieces = f.pieces();
  const double qv = q.value();
  // Left-continuous: a quantile equal to a piece's upper bound belongs to that piece.
  std::size_t idx = 0;
  if (q.exact()) {
    while (idx + 1 < pieces.size() && pieces[idx].q_hi < *q.exact()) ++idx;
  } else {
    const auto& bounds = f.cumulative();
    idx = std::min<std::size_t>(
        static_cast<std::size_t>(std::lower_bound(bounds.begin(), bounds.end(), qv) - bounds.begin()), pieces.size() - 1);
  }
  const auto& p = pieces[idx];
  if (p.v_lo == p.v_hi) return p.v_lo;
  const double lo = to_double(p.q_lo);
  const double hi = to_double(p.q_hi);
  const double t = std::clamp((qv - lo) / (hi - lo), 0.0, 1.0);
  return p.v_lo + t * (p.v_hi - p.v_lo);
}

double uniform_open01(std::mt19937_64& rng) {
  return (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53;
}

double sample(const Distribution& f, std::mt19937_64& rng) {
  const double u = uniform_open01(rng);
  if (f.is_discrete()) {
    const auto& cum = f.cumulative();
    const auto it = std::lower_bound(cum.begin(), cum.end(), u);
    const auto idx = std::min<std::size_t>(static_cast<std::size_t>(it - cum.begin()), cum.size() - 1);
    return f.atoms()[idx].value.to_double();
  }
  return quantile_value(f, Quantile(u));
}

namespace {

// Affine form of a quantile function on an open sub-interval (a, b) between
// merged breakpoints: value(q) = at_a + (at_b - at_a) * (q - a) / (b - a).
struct Segment {
  double at_a;
  double at_b;
};

Segment segment_on(const Distribution& f, double a, double b) {
  const double mid = 0.5 * (a + b);
  if (f.is_discrete()) {
    const double v = quantile_value(f, Quantile(mid));
    return {v, v};
  }
  const auto& pieces = f.pieces();
  const auto& bounds = f.cumulative();
  const auto idx = std::min<std::size_t>(
      static_cast<std::size_t>(std::lower_bound(bounds.begin(), bounds.end(), mid) - bounds.begin()), pieces.size() - 1);
  const auto& p = pieces[idx];
  const double lo = to_double(p.q_lo);
  const double hi = to_double(p.q_hi);
  auto at = [&](double q) { return p.v_lo + (q - lo) / (hi - lo) * (p.v_hi - p.v_lo); };
  return {at(a), at(b)};
}

}  // namespace

FsdResult check_fsd(const Distribution& buyer, const Distribution& seller) {
  std::vector<BigRational> cuts{BigRational(0)};
  for (const auto* f : {&buyer, &seller}) {
    const auto bp = f->breakpoints();
    cuts.insert(cuts.end(), bp.begin(), bp.end());
  }
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());

  FsdResult result;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    const BigRational& a = cuts[i];
    const BigRational& b = cuts[i + 1];
    if (buyer.is_discrete() && seller.is_discrete()) {
      // Both quantile functions are constant on (a, b].
      const BigRational mid = (a + b) / 2;
      if (exact_quantile_value(buyer, mid) < exact_quantile_value(seller, mid)) {
        result.dominates = false;
        result.exact_witness = mid;
        result.witness = to_double(mid);
        return result;
      }
      continue;
    }
    const double ad = to_double(a);
    const double bd = to_double(b);
    const Segment sb = segment_on(buyer, ad, bd);
    const Segment ss = segment_on(seller, ad, bd);
    const double diff_a = sb.at_a - ss.at_a;
    const double diff_b = sb.at_b - ss.at_b;
    if (diff_a >= 0.0 && diff_b >= 0.0) continue;
    result.dominates = false;
    double t = 0.5;
    if (diff_b >= 0.0) {
      t = 0.5 * diff_a / (diff_a - diff_b);
    } else if (diff_a >= 0.0) {
      t = 0.5 + 0.5 * diff_a / (diff_a - diff_b);
    }
    result.witness = ad + t * (bd - ad);
    return result;
  }
  return result;
}

ProductSupport::ProductSupport(std::vector<Distribution> dists, std::uint64_t cap) : dists_(std::move(dists)) {
  denominator_ = 1;
  for (const auto& f : dists_) {
    if (!f.is_discrete()) throw InvalidInput("product support requires discrete distributions");
    const auto radix = static_cast<std::uint64_t>(f.atoms().size());
    if (size_ > cap / radix) {
      throw TooLarge("product support exceeds the enumeration cap of " + std::to_string(cap) + " states");
    }
    size_ *= radix;
    BigInt d = 1;
    for (const auto& a : f.atoms()) d = lcm(d, boost::multiprecision::denominator(a.probability));
    std::vector<BigInt> nums;
    nums.reserve(f.atoms().size());
    for (const auto& a : f.atoms()) {
      nums.push_back(boost::multiprecision::numerator(a.probability) * (d / boost::multiprecision::denominator(a.probability)));
    }
    numerators_.push_back(std::move(nums));
    denominator_ *= d;
  }
  if (size_ > cap) throw TooLarge("product support exceeds the enumeration cap of " + std::to_string(cap) + " states");
}

nlohmann::json to_json(const Distribution& f) {
  nlohmann::json j;
  if (f.is_discrete()) {
    auto atoms = nlohmann::json::array();
    for (const auto& a : f.atoms()) {
      nlohmann::json v = a.value.is_integer() ? nlohmann::json(a.value.num()) : nlohmann::json(a.value.str());
      atoms.push_back(nlohmann::json::array({v, to_string(a.probability)}));
    }
    j["atoms"] = std::move(atoms);
  } else {
    auto pieces = nlohmann::json::array();
    for (const auto& p : f.pieces()) {
      pieces.push_back(nlohmann::json::array({to_string(p.q_lo), to_string(p.q_hi), p.v_lo, p.v_hi}));
    }
    j["pieces"] = std::move(pieces);
  }
  return j;
}

namespace {

BigRational rational_field(const nlohmann::json& v) {
  if (v.is_string()) return parse_big_rational(v.get<std::string>());
  if (v.is_number_integer()) return BigRational(v.get<std::int64_t>());
  if (v.is_number()) return rational_from_double(v.get<double>()).to_big();
  throw InvalidInput("expected a rational (\"p/q\" string or number), got " + v.dump());
}

Rational value_field(const nlohmann::json& v) {
  if (v.is_number_integer()) return Rational(v.get<std::int64_t>());
  if (v.is_number()) return rational_from_double(v.get<double>());
  if (v.is_string()) return Rational::parse(v.get<std::string>());
  throw InvalidInput("expected a value (number or \"p/q\" string), got " + v.dump());
}

double real_field(const nlohmann::json& v) {
  if (v.is_number()) return v.get<double>();
  if (v.is_string()) return to_double(parse_big_rational(v.get<std::string>()));
  throw InvalidInput("expected a real value, got " + v.dump());
}

}  // namespace

Distribution distribution_from_json(const nlohmann::json& j) {
  try {
    if (j.is_object() && j.contains("atoms")) {
      std::vector<Atom> atoms;
      for (const auto& a : j.at("atoms")) {
        if (!a.is_array() || a.size() != 2) throw InvalidInput("atom must be [value, \"p/q\"]");
        atoms.push_back(Atom{value_field(a[0]), rational_field(a[1])});
      }
      return Distribution::discrete(std::move(atoms));
    }
    if (j.is_object() && j.contains("pieces")) {
      std::vector<QuantilePiece> pieces;
      for (const auto& p : j.at("pieces")) {
        if (!p.is_array() || p.size() != 4) throw InvalidInput("piece must be [\"q_lo\", \"q_hi\", v_lo, v_hi]");
        pieces.push_back(QuantilePiece{rational_field(p[0]), rational_field(p[1]), real_field(p[2]), real_field(p[3])});
      }
      return Distribution::piecewise(std::move(pieces));
    }
  } catch (const nlohmann::json::exception& e) {
    throw InvalidInput(std::string("malformed distribution literal: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw InvalidInput(e.what());
  } catch (const std::overflow_error& e) {
    throw InvalidInput(e.what());
  }
  throw InvalidInput("distribution literal needs an \"atoms\" or \"pieces\" field: " + j.dump());
}

}  // namespace gft
