#pragma once

#include "gft/dist.hpp"
#include "gft/eval.hpp"
#include "gft/market.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace gft {

using Params = std::map<std::string, BigRational>;

enum class CheckStatus { Pass, Fail, Inconclusive, Skipped };

std::string to_string(CheckStatus s);
CheckStatus check_status_from_string(std::string_view s);

/// Outcome of one check. lhs/rhs are the two sides of the asserted relation at
/// the tightest family member; slack is the margin by which the relation holds
/// (negative when violated).
struct CheckResult {
  std::string id;
  CheckStatus status = CheckStatus::Pass;
  Expectation lhs;
  Expectation rhs;
  Expectation slack;
  /// null when there is nothing to replay.
  nlohmann::json witness;
  std::string notes;
  std::uint64_t seed = 0;
  Params params;

  bool passed() const noexcept { return status == CheckStatus::Pass; }
  bool failed() const noexcept { return status == CheckStatus::Fail; }

  friend bool operator==(const CheckResult&, const CheckResult&) = default;
};

nlohmann::json to_json(const CheckResult& r);
CheckResult check_result_from_json(const nlohmann::json& j);

/// check_id,passed,lhs,rhs,slack,seed,notes
std::string csv_header();
std::string to_csv_row(const CheckResult& r);

/// Exact lhs - rhs when both are exact; otherwise a Monte Carlo difference with
/// independent standard errors added in quadrature.
Expectation difference(const Expectation& lhs, const Expectation& rhs);

struct CheckContext {
  /// The BTR implementation under test; swapped out for mutation testing.
  Mechanism btr = btr_mechanism();
  std::uint64_t seed = 20240601;
  ExactOptions exact{};
};

struct Check {
  std::string id;
  std::string summary;
  Params defaults;
  std::function<CheckResult(const Params&, const CheckContext&)> run;
};

/// Registered checks in stable order.
const std::vector<Check>& check_registry();
const Check& find_check(std::string_view id);
std::vector<std::string> check_ids();

/// Defaults overlaid with overrides; throws InvalidInput on unknown keys.
Params resolve_params(const Check& check, const Params& overrides);

/// Per-check seed derived from the base seed and the check id.
std::uint64_t derive_seed(std::uint64_t base, std::string_view id);

CheckResult run_check(std::string_view id, const Params& overrides = {}, const CheckContext& ctx = {});

struct CheckRequest {
  std::string id;
  Params overrides;
};

/// Runs the requests concurrently and returns results in request order.
std::vector<CheckResult> run_checks(const std::vector<CheckRequest>& requests, const CheckContext& ctx = {},
                                    unsigned workers = 0);

/// Every registered check with its default parameters.
std::vector<CheckResult> run_all(const CheckContext& ctx = {}, unsigned workers = 0);

// ---------------------------------------------------------------------------
// Distribution families

using DistributionPair = std::pair<Distribution, Distribution>;  // (F_S, F_B)

/// Discrete distributions with support in {0..max_value} and probabilities
/// that are multiples of 1/quanta, with at most max_support atoms.
std::vector<Distribution> quantized_distributions(int max_value = 3, int quanta = 4, int max_support = 4);

/// The default desk-scale universe: support in {0,1,2,3}, quarter probabilities.
std::vector<Distribution> default_family();

/// Members of the default universe with at most two support points.
std::vector<Distribution> two_point_family();

std::vector<DistributionPair> iid_pairs(const std::vector<Distribution>& family);

/// All (F_S, F_B) with F_B weakly first-order dominating F_S.
std::vector<DistributionPair> fsd_pairs(const std::vector<Distribution>& family);

nlohmann::json to_json(const DistributionPair& pair);

// ---------------------------------------------------------------------------
// Building blocks shared by checks, tests and the command line

/// Exact E[opt_gft] for the market.
Expectation expected_opt_exact(const MarketSpec& spec, const ExactOptions& opts = {});
Expectation expected_opt_mc(const MarketSpec& spec, std::uint64_t n, std::uint64_t seed);

/// Two-point buyer {0: eps, 2: 1-eps} over seller {0: eps, 1: 1-eps}.
DistributionPair fsd_11_pair(const BigRational& eps);

/// Buyer {2: 1/2, 0: 1/2} over seller {1: 1/2, 0: 1/2}.
DistributionPair log_lower_bound_pair();

/// Buyer {2: eps_t, 0: else} against seller {1: eps_t, 3: else}.
DistributionPair no_fsd_pair(const BigRational& eps_tilde);

/// Five-point iid distribution for the posted-median comparison.
Distribution median_counterexample(const BigRational& delta);

/// Seller point mass 1, buyer {0: 1/2, 2: 1/2}.
DistributionPair footnote_pair();

/// Buyer 0 w.p. eps else uniform on [1+gamma-delta, 1+gamma+delta]; seller 0
/// w.p. eps else 1.
DistributionPair sample_nohalf_pair(const BigRational& eps, double gamma, double delta);

/// Smallest k >= 1 with k(k-1) >= 2(m_B + k).
std::size_t smallest_lemma_k(std::size_t m_b);

/// ceil(4 sqrt(m_B)).
std::size_t four_sqrt_k(std::size_t m_b);

struct BkGapEntry {
  DistributionPair pair;
  /// Smallest k <= k_max with BTR(m_S, m_B + k) >= OPT(m_S, m_B); nullopt when
  /// no k in range suffices.
  std::optional<std::size_t> k;
};

struct BkGapReport {
  std::vector<BkGapEntry> entries;
  /// Largest k over the family; nullopt when some pair needs more than k_max.
  std::optional<std::size_t> family_max;
};

BkGapReport bk_gap_sweep(const std::vector<DistributionPair>& pairs, std::size_t m_s, std::size_t m_b,
                         std::size_t k_max, const CheckContext& ctx = {});

}  // namespace gft
