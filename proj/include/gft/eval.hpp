#pragma once

#include "gft/dist.hpp"
#include "gft/market.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace gft {

/// m_S sellers iid from `seller`, m_B buyers iid from `buyer`.
struct MarketSpec {
  Distribution seller;
  Distribution buyer;
  std::size_t m_s = 1;
  std::size_t m_b = 1;
};

enum class EvalMode { Exact, MonteCarlo };

/// An expected value, either an exact reduced fraction or a Monte Carlo
/// estimate with its standard error (sample stdev / sqrt(n)).
struct Expectation {
  EvalMode mode = EvalMode::Exact;
  BigRational exact{0};
  double mean = 0.0;
  double std_error = 0.0;
  std::uint64_t n_samples = 0;
  std::uint64_t seed = 0;

  static Expectation exact_value(BigRational v, std::uint64_t states = 0);
  static Expectation monte_carlo(double mean, double std_error, std::uint64_t n, std::uint64_t seed);

  bool is_exact() const noexcept { return mode == EvalMode::Exact; }
  double value() const { return is_exact() ? to_double(exact) : mean; }
  double error() const noexcept { return is_exact() ? 0.0 : std_error; }

  /// "p/q" for exact values, "mean ± stderr" (6 significant digits) otherwise.
  std::string str() const;

  friend bool operator==(const Expectation&, const Expectation&) = default;
};

nlohmann::json to_json(const Expectation& e);
Expectation expectation_from_json(const nlohmann::json& j);

struct ExactOptions {
  std::uint64_t cap = ProductSupport::kDefaultCap;
  /// 0 = std::thread::hardware_concurrency().
  unsigned workers = 0;
};

/// Exact E[f(values)] over independent discrete coordinates. The state range
/// is sharded across workers and the rational partial sums merged exactly.
Expectation exact_expectation(const std::vector<Distribution>& dists,
                              const std::function<Rational(std::span<const Rational>)>& f,
                              const ExactOptions& opts = {});

/// Monte Carlo mean of draw(rng) over n draws. Draws are split across 16
/// fixed shards seeded with seed ^ shard; the result does not depend on the
/// number of threads.
Expectation mc_expectation(std::uint64_t n, std::uint64_t seed, const std::function<double(std::mt19937_64&)>& draw,
                           unsigned workers = 0);

inline constexpr unsigned kMcShards = 16;

/// The seller/buyer coordinate list of a market: m_S copies of the seller
/// distribution followed by m_B copies of the buyer distribution.
std::vector<Distribution> market_coordinates(const MarketSpec& spec);

RealProfile sample_profile(const MarketSpec& spec, std::mt19937_64& rng);

Expectation expected_gft_exact(const Mechanism& m, const MarketSpec& spec, const ExactOptions& opts = {});
Expectation expected_gft_mc(const Mechanism& m, const MarketSpec& spec, std::uint64_t n, std::uint64_t seed);

/// Bilateral trade priced at the maximum of k fresh buyer-distribution samples.
Expectation expected_sample_pricing_gft(const Distribution& seller, const Distribution& buyer, std::size_t k,
                                        EvalMode mode, std::uint64_t n = 0, std::uint64_t seed = 0,
                                        const ExactOptions& opts = {});

struct CoupledDraw {
  RealProfile profile;
  std::vector<double> seller_quantiles;
  std::vector<double> buyer_quantiles;
};

/// Draws m_S + m_B uniform quantiles, assigns them to roles by a uniformly
/// random permutation, and maps each through its role's quantile function.
class CoupledQuantileSampler {
 public:
  CoupledQuantileSampler(MarketSpec spec, std::uint64_t seed) : spec_(std::move(spec)), rng_(seed) {}

  CoupledDraw next();

 private:
  MarketSpec spec_;
  std::mt19937_64 rng_;
};

std::vector<CoupledDraw> coupled_quantile_profiles(const MarketSpec& spec, std::size_t n, std::uint64_t seed);

}  // namespace gft
