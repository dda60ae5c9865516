#include "recipe/evaluation.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <mutex>
#include <ostream>
#include <thread>
#include <unordered_set>

namespace recipe {

namespace {

// Uniform integer in [0, n) from one 64-bit draw (multiply-shift).
std::uint64_t bounded(std::mt19937_64 &rng, std::uint64_t n) {
  return static_cast<std::uint64_t>((static_cast<unsigned __int128>(rng()) * n) >> 64);
}

std::vector<SwitchId> draw_ids(std::size_t k, std::mt19937_64 &rng) {
  std::vector<SwitchId> ids;
  ids.reserve(k);
  std::unordered_set<Word> seen;
  while (ids.size() < k) {
    const Word v = rng() & 0xFFFFFFFFULL;
    if (v == 0 || !seen.insert(v).second)
      continue;
    ids.emplace_back(v);
  }
  return ids;
}

} // namespace

GlobalHash instance_hash(std::uint64_t seed) { return {mix64(seed ^ 0xA0761D6478BD642FULL)}; }

std::uint64_t trial_seed(std::uint64_t seed, std::size_t k, std::size_t trial) {
  return mix64(mix64(seed ^ 0x6A09E667F3BCC909ULL) ^ mix64(k * 0x9E3779B97F4A7C15ULL + trial));
}

TrialResult run_instance(std::size_t k, const Scheme &scheme, std::uint64_t seed,
                         InstanceTrace *trace) {
  TrialResult result;
  result.k = k;
  if (k == 0) {
    result.completed = result.correct = true;
    return result;
  }
  if (k > scheme_diameter(scheme))
    throw RangeError("path length " + std::to_string(k) + " exceeds the scheme's diameter");

  std::mt19937_64 rng(seed);
  const GlobalHash gh = instance_hash(seed);
  const auto ids = draw_ids(k, rng);
  if (trace) {
    trace->ids = ids;
    trace->packets.clear();
  }

  const auto *pint = std::get_if<PintScheme>(&scheme);
  const bool drop_empty = pint && pint->zero_policy == PintZeroPolicy::Condition;
  const std::size_t cap = kPacketCapPerHop * k;

  PeelingState state(k);
  std::vector<std::uint32_t> xor_set;
  std::size_t sent = 0;
  while (!state.complete() && sent < cap) {
    ++sent;
    const std::uint64_t packet_id = rng();
    const Packet pkt = encode_path(packet_id, ids, scheme, gh);
    replay_xor_set(packet_id, k, scheme, gh, xor_set);
    if (xor_set.empty() && drop_empty)
      continue;
    ++result.used;
    auto newly = state.insert(xor_set, pkt.codeword);
    if (trace)
      trace->packets.push_back({packet_id, pkt.codeword, xor_set, std::move(newly)});
  }

  result.completed = state.complete();
  if (!result.completed) {
    result.used = cap;
    return result;
  }
  result.correct = true;
  for (std::uint32_t h = 1; h <= k; ++h)
    if (*state.resolved(h) != ids[h - 1].value())
      result.correct = false;
  return result;
}

TrialResult lt_trial(const Xdd &mu, std::mt19937_64 &rng) {
  const std::size_t k = mu.k();
  TrialResult result;
  result.k = k;
  std::vector<double> cdf(k);
  double acc = 0.0;
  for (std::size_t d = 1; d <= k; ++d)
    cdf[d - 1] = (acc += mu(d));

  PeelingState state(k);
  std::vector<std::uint32_t> xor_set;
  std::vector<char> member(k + 1, 0);
  const std::size_t cap = kPacketCapPerHop * k;
  while (!state.complete() && result.used < cap) {
    ++result.used;
    const double u = to_unit(rng()) * acc;
    const auto d = std::min<std::size_t>(
        static_cast<std::size_t>(std::upper_bound(cdf.begin(), cdf.end(), u) - cdf.begin()) + 1,
        k);
    // Floyd's sampling of a uniform d-subset of 1..k.
    xor_set.clear();
    Word value = 0;
    for (std::size_t j = k - d + 1; j <= k; ++j) {
      auto t = static_cast<std::uint32_t>(bounded(rng, j) + 1);
      if (member[t])
        t = static_cast<std::uint32_t>(j);
      member[t] = 1;
      xor_set.push_back(t);
      value ^= t;
    }
    for (auto h : xor_set)
      member[h] = 0;
    state.insert(xor_set, value);
  }
  result.completed = state.complete();
  result.correct = result.completed;
  return result;
}

double lt_mean_efficiency(const Xdd &mu, std::size_t trials, std::uint64_t seed) {
  double total = 0.0;
  for (std::size_t t = 0; t < trials; ++t) {
    std::mt19937_64 rng(trial_seed(seed, mu.k(), t));
    total += static_cast<double>(lt_trial(mu, rng).used);
  }
  return total / static_cast<double>(trials);
}

const CurvePoint &EfficiencyCurve::at(std::size_t k) const {
  for (const auto &p : points)
    if (p.k == k)
      return p;
  throw RangeError("curve has no point at k=" + std::to_string(k));
}

CurvePoint summarize(std::size_t k, const std::vector<TrialResult> &trials) {
  CurvePoint p;
  p.k = k;
  p.trials = trials.size();
  if (trials.empty())
    return p;
  std::vector<double> used;
  used.reserve(trials.size());
  double sum = 0.0;
  std::size_t incomplete = 0, correct = 0;
  for (const auto &t : trials) {
    used.push_back(static_cast<double>(t.used));
    sum += static_cast<double>(t.used);
    incomplete += t.completed ? 0 : 1;
    correct += t.correct ? 1 : 0;
  }
  const double n = static_cast<double>(trials.size());
  p.mean = sum / n;
  double ss = 0.0;
  for (double u : used)
    ss += (u - p.mean) * (u - p.mean);
  p.std_error = trials.size() > 1 ? std::sqrt(ss / (n - 1.0) / n) : 0.0;
  std::sort(used.begin(), used.end());
  const auto rank = static_cast<std::size_t>(std::ceil(0.99 * n));
  p.q99 = used[std::clamp<std::size_t>(rank, 1, used.size()) - 1];
  p.incomplete_rate = static_cast<double>(incomplete) / n;
  p.correct_rate = static_cast<double>(correct) / n;
  return p;
}

void parallel_for(std::size_t n, unsigned threads,
                  const std::function<void(std::size_t)> &body) {
  if (threads == 0)
    threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, n));
  if (threads <= 1) {
    for (std::size_t i = 0; i < n; ++i)
      body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (unsigned w = 0; w < threads; ++w)
    pool.emplace_back([&] {
      for (std::size_t i; (i = next.fetch_add(1)) < n;) {
        try {
          body(i);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure)
            failure = std::current_exception();
          next = n;
        }
      }
    });
  for (auto &t : pool)
    t.join();
  if (failure)
    std::rethrow_exception(failure);
}

EfficiencyCurve efficiency_curve(const Scheme &scheme, std::size_t K, std::string label,
                                 const CurveOptions &options) {
  if (options.trials < 100)
    throw RangeError("efficiency_curve needs at least 100 trials per k");
  std::vector<std::size_t> ks = options.ks;
  if (ks.empty())
    for (std::size_t k = 1; k <= K; ++k)
      ks.push_back(k);

  EfficiencyCurve curve{std::move(label), K, {}};
  // Chunk trials so workers stay busy without per-trial dispatch cost.
  constexpr std::size_t kChunk = 64;
  for (std::size_t k : ks) {
    std::vector<TrialResult> results(options.trials);
    const std::size_t chunks = (options.trials + kChunk - 1) / kChunk;
    parallel_for(chunks, options.threads, [&](std::size_t c) {
      const std::size_t end = std::min(options.trials, (c + 1) * kChunk);
      for (std::size_t t = c * kChunk; t < end; ++t)
        results[t] = run_instance(k, scheme, trial_seed(options.seed, k, t));
    });
    curve.points.push_back(summarize(k, results));
  }
  return curve;
}

TvsDComparison compare_t_vs_d(const XddSequence &seq, const std::vector<std::size_t> &Ls,
                              const CurveOptions &options, std::uint64_t avst_seed) {
  auto apa = std::make_shared<const Apa>(derive_apa(seq));
  TvsDComparison out;
  out.recipe_d = efficiency_curve(RecipeDScheme{apa}, seq.K(), "recipe-d", options);
  for (std::size_t L : Ls) {
    auto avst = std::make_shared<const Avst>(generate_avst(*apa, L, avst_seed));
    out.table_sizes.push_back(L);
    out.recipe_t.push_back(efficiency_curve(RecipeTScheme{avst, apa->digest()}, seq.K(),
                                            "recipe-t-L" + std::to_string(L), options));
  }
  return out;
}

double mean_relative_gap(const EfficiencyCurve &a, const EfficiencyCurve &reference) {
  double total = 0.0;
  std::size_t n = 0;
  for (const auto &p : reference.points) {
    total += std::abs(a.at(p.k).mean - p.mean) / p.mean;
    ++n;
  }
  return n ? total / static_cast<double>(n) : 0.0;
}

PintTuning tune_pint(std::size_t K, std::size_t trials, std::uint64_t seed, unsigned threads) {
  std::vector<PintParams> grid;
  for (int a = 0; a <= 20; ++a)
    for (int m = 1; m <= 10; ++m) {
      const double p = static_cast<double>(m) / static_cast<double>(K);
      if (p < 1.0)
        grid.push_back({a * 0.05, p});
    }
  if (grid.empty())
    grid.push_back({1.0, 0.5});

  std::vector<double> means(grid.size());
  parallel_for(grid.size(), threads, [&](std::size_t g) {
    const Scheme scheme = PintScheme{grid[g]};
    double total = 0.0;
    for (std::size_t t = 0; t < trials; ++t)
      total += static_cast<double>(run_instance(K, scheme, trial_seed(seed, K, t)).used);
    means[g] = total / static_cast<double>(trials);
  });
  const auto best = static_cast<std::size_t>(
      std::min_element(means.begin(), means.end()) - means.begin());
  return {grid[best], means[best]};
}

void write_curve_csv(std::ostream &out, const std::vector<EfficiencyCurve> &curves,
                     bool header) {
  if (header)
    out << "scheme,K,k,trials,mean,stderr,q99,incomplete_rate\n";
  char buf[256];
  for (const auto &c : curves)
    for (const auto &p : c.points) {
      std::snprintf(buf, sizeof buf, "%s,%zu,%zu,%zu,%.17g,%.17g,%.17g,%.17g\n",
                    c.scheme.c_str(), c.K, p.k, p.trials, p.mean, p.std_error, p.q99,
                    p.incomplete_rate);
      out << buf;
    }
}

std::vector<std::size_t> degree_histogram(const Scheme &scheme, std::size_t k,
                                          std::size_t packets, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const GlobalHash gh = instance_hash(seed);
  std::vector<std::size_t> hist(k + 1, 0);
  std::vector<std::uint32_t> xor_set;
  for (std::size_t n = 0; n < packets; ++n) {
    replay_xor_set(rng(), k, scheme, gh, xor_set);
    ++hist[xor_set.size()];
  }
  return hist;
}

} // namespace recipe
