#include "gft/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <numeric>
#include <thread>

namespace gft {

Expectation Expectation::exact_value(BigRational v, std::uint64_t states) {
  Expectation e;
  e.mode = EvalMode::Exact;
  e.exact = std::move(v);
  e.n_samples = states;
  return e;
}

Expectation Expectation::monte_carlo(double mean, double std_error, std::uint64_t n, std::uint64_t seed) {
  Expectation e;
  e.mode = EvalMode::MonteCarlo;
  e.mean = mean;
  e.std_error = std_error;
  e.n_samples = n;
  e.seed = seed;
  return e;
}

std::string Expectation::str() const {
  if (is_exact()) return to_string(exact);
  char buf[96];
  std::snprintf(buf, sizeof buf, "%.6g ± %.6g", mean, std_error);
  return buf;
}

nlohmann::json to_json(const Expectation& e) {
  nlohmann::json j;
  if (e.is_exact()) {
    j["mode"] = "exact";
    j["value"] = to_string(e.exact);
    j["states"] = e.n_samples;
  } else {
    j["mode"] = "mc";
    j["value"] = e.mean;
    j["std_error"] = e.std_error;
    j["n"] = e.n_samples;
    j["seed"] = e.seed;
  }
  return j;
}

Expectation expectation_from_json(const nlohmann::json& j) {
  try {
    if (j.at("mode") == "exact") {
      return Expectation::exact_value(parse_big_rational(j.at("value").get<std::string>()),
                                      j.value("states", std::uint64_t{0}));
    }
    return Expectation::monte_carlo(j.at("value").get<double>(), j.at("std_error").get<double>(),
                                    j.at("n").get<std::uint64_t>(), j.at("seed").get<std::uint64_t>());
  } catch (const nlohmann::json::exception& e) {
    throw InvalidInput(std::string("malformed expectation: ") + e.what());
  }
}

namespace {

unsigned resolve_workers(unsigned requested) {
  if (requested != 0) return requested;
  return std::max(1u, std::thread::hardware_concurrency());
}

template <class Task>
void run_sharded(unsigned workers, std::size_t shards, Task&& task) {
  workers = static_cast<unsigned>(std::min<std::size_t>(workers, shards));
  if (workers <= 1) {
    for (std::size_t s = 0; s < shards; ++s) task(s);
    return;
  }
  std::vector<std::jthread> pool;
  pool.reserve(workers);
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      for (std::size_t s = w; s < shards; s += workers) task(s);
    });
  }
}

// Partial sum of weight * f grouped by the denominator of f, so every state
// costs one big-integer multiply-add.
using PartialSum = std::map<std::int64_t, BigInt>;

struct Moments {
  std::uint64_t n = 0;
  double mean = 0.0;
  double m2 = 0.0;

  void add(double x) {
    ++n;
    const double d = x - mean;
    mean += d / static_cast<double>(n);
    m2 += d * (x - mean);
  }

  void merge(const Moments& o) {
    if (o.n == 0) return;
    if (n == 0) {
      *this = o;
      return;
    }
    const double total = static_cast<double>(n + o.n);
    const double d = o.mean - mean;
    mean += d * static_cast<double>(o.n) / total;
    m2 += o.m2 + d * d * static_cast<double>(n) * static_cast<double>(o.n) / total;
    n += o.n;
  }
};

}  // namespace

Expectation exact_expectation(const std::vector<Distribution>& dists,
                              const std::function<Rational(std::span<const Rational>)>& f, const ExactOptions& opts) {
  const ProductSupport support(dists, opts.cap);
  const std::uint64_t size = support.size();
  const unsigned workers = resolve_workers(opts.workers);
  const std::size_t shards = std::min<std::uint64_t>(size, workers);
  std::vector<PartialSum> partial(std::max<std::size_t>(shards, 1));
  run_sharded(workers, shards, [&](std::size_t shard) {
    const std::uint64_t begin = size * shard / shards;
    const std::uint64_t end = size * (shard + 1) / shards;
    auto& acc = partial[shard];
    support.for_each_weighted(
        [&](std::span<const Rational> values, const BigInt& weight) {
          const Rational v = f(values);
          if (v.num() != 0) acc[v.den()] += weight * v.num();
        },
        begin, end);
  });
  BigRational total = 0;
  for (const auto& acc : partial) {
    for (const auto& [den, num] : acc) total += BigRational(num, BigInt(den));
  }
  total /= BigRational(support.common_denominator());
  return Expectation::exact_value(total, size);
}

Expectation mc_expectation(std::uint64_t n, std::uint64_t seed, const std::function<double(std::mt19937_64&)>& draw,
                           unsigned workers) {
  if (n < 2) throw InvalidInput("Monte Carlo needs at least 2 samples");
  std::vector<Moments> shard_moments(kMcShards);
  run_sharded(resolve_workers(workers), kMcShards, [&](std::size_t shard) {
    std::mt19937_64 rng(seed ^ static_cast<std::uint64_t>(shard));
    const std::uint64_t count = n / kMcShards + (shard < n % kMcShards ? 1 : 0);
    auto& mom = shard_moments[shard];
    for (std::uint64_t i = 0; i < count; ++i) mom.add(draw(rng));
  });
  // Pairwise merge in a fixed tree order.
  std::size_t width = shard_moments.size();
  while (width > 1) {
    const std::size_t half = (width + 1) / 2;
    for (std::size_t i = 0; i + half < width; ++i) shard_moments[i].merge(shard_moments[i + half]);
    width = half;
  }
  const Moments& all = shard_moments.front();
  const double variance = all.n > 1 ? all.m2 / static_cast<double>(all.n - 1) : 0.0;
  return Expectation::monte_carlo(all.mean, std::sqrt(std::max(variance, 0.0) / static_cast<double>(all.n)), n, seed);
}

std::vector<Distribution> market_coordinates(const MarketSpec& spec) {
  std::vector<Distribution> coords;
  coords.reserve(spec.m_s + spec.m_b);
  for (std::size_t i = 0; i < spec.m_s; ++i) coords.push_back(spec.seller);
  for (std::size_t i = 0; i < spec.m_b; ++i) coords.push_back(spec.buyer);
  return coords;
}

RealProfile sample_profile(const MarketSpec& spec, std::mt19937_64& rng) {
  RealProfile p;
  p.sellers.reserve(spec.m_s);
  p.buyers.reserve(spec.m_b);
  for (std::size_t i = 0; i < spec.m_s; ++i) p.sellers.push_back(sample(spec.seller, rng));
  for (std::size_t i = 0; i < spec.m_b; ++i) p.buyers.push_back(sample(spec.buyer, rng));
  return p;
}

Expectation expected_gft_exact(const Mechanism& m, const MarketSpec& spec, const ExactOptions& opts) {
  const std::size_t m_s = spec.m_s;
  return exact_expectation(
      market_coordinates(spec),
      [&](std::span<const Rational> values) {
        ValueProfile p;
        p.sellers.assign(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(m_s));
        p.buyers.assign(values.begin() + static_cast<std::ptrdiff_t>(m_s), values.end());
        return m(p).gft;
      },
      opts);
}

Expectation expected_gft_mc(const Mechanism& m, const MarketSpec& spec, std::uint64_t n, std::uint64_t seed) {
  return mc_expectation(n, seed, [&](std::mt19937_64& rng) { return m(sample_profile(spec, rng)).gft; });
}

Expectation expected_sample_pricing_gft(const Distribution& seller, const Distribution& buyer, std::size_t k,
                                        EvalMode mode, std::uint64_t n, std::uint64_t seed, const ExactOptions& opts) {
  if (k == 0) throw InvalidInput("sample pricing needs k >= 1 samples");
  if (mode == EvalMode::Exact) {
    std::vector<Distribution> coords{seller, buyer};
    for (std::size_t i = 0; i < k; ++i) coords.push_back(buyer);
    return exact_expectation(
        coords,
        [](std::span<const Rational> v) { return sample_pricing_gft(v[0], v[1], v.subspan(2)); },
        opts);
  }
  return mc_expectation(n, seed, [&, k](std::mt19937_64& rng) {
    const double s = sample(seller, rng);
    const double b = sample(buyer, rng);
    double price = sample(buyer, rng);
    for (std::size_t i = 1; i < k; ++i) price = std::max(price, sample(buyer, rng));
    return (b >= price && price >= s) ? b - s : 0.0;
  });
}

CoupledDraw CoupledQuantileSampler::next() {
  const std::size_t n = spec_.m_s + spec_.m_b;
  std::vector<double> quantiles(n);
  for (auto& q : quantiles) q = uniform_open01(rng_);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::shuffle(order.begin(), order.end(), rng_);
  CoupledDraw d;
  for (std::size_t i = 0; i < n; ++i) {
    const double q = quantiles[order[i]];
    if (i < spec_.m_s) {
      d.seller_quantiles.push_back(q);
      d.profile.sellers.push_back(quantile_value(spec_.seller, Quantile(q)));
    } else {
      d.buyer_quantiles.push_back(q);
      d.profile.buyers.push_back(quantile_value(spec_.buyer, Quantile(q)));
    }
  }
  return d;
}

std::vector<CoupledDraw> coupled_quantile_profiles(const MarketSpec& spec, std::size_t n, std::uint64_t seed) {
  CoupledQuantileSampler sampler(spec, seed);
  std::vector<CoupledDraw> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back(sampler.next());
  return out;
}

}  // namespace gft
