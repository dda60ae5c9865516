#pragma once

#include "recipe/decoder.hpp"

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace recipe {

// Packets allowed per instance before it is declared incomplete: cap * k.
inline constexpr std::size_t kPacketCapPerHop = 200;

struct TrialResult {
  std::size_t k = 0;
  std::size_t used = 0;    // codewords consumed (cap value when incomplete)
  bool completed = false;
  bool correct = false;    // completed and every ID equals the ground truth
};

// One delivered packet, as seen by both ends (for traces and tests).
struct DeliveredPacket {
  std::uint64_t packet_id;
  Word codeword;
  std::vector<std::uint32_t> xor_set;   // replayed by the decoder
  std::vector<std::uint32_t> resolved;  // hops this packet resolved
};

struct InstanceTrace {
  std::vector<SwitchId> ids;
  std::vector<DeliveredPacket> packets;
};

/// Simulates one path of length k: draws distinct nonzero 32-bit switch
/// IDs, streams fresh packets through every hop, replays each XOR-set on
/// the destination side and peels until all k IDs are known.
TrialResult run_instance(std::size_t k, const Scheme &scheme, std::uint64_t seed,
                         InstanceTrace *trace = nullptr);

// Derives the per-trial seed used by curves.
// Network-wide hash key of the instance seeded by seed; the decoder must
// use the same one to replay.
GlobalHash instance_hash(std::uint64_t seed);

std::uint64_t trial_seed(std::uint64_t seed, std::size_t k, std::size_t trial);

// Centralized LT trial: degrees drawn from mu, uniform XOR-sets. Returns
// codewords consumed by the peeling decoder (cap counted as incomplete).
TrialResult lt_trial(const Xdd &mu, std::mt19937_64 &rng);

// Mean codewords over `trials` centralized LT trials; trial t uses seed
// trial_seed(seed, k, t), so candidates scored with one seed share
// random numbers.
double lt_mean_efficiency(const Xdd &mu, std::size_t trials, std::uint64_t seed);

struct CurvePoint {
  std::size_t k = 0;
  std::size_t trials = 0;
  double mean = 0.0;
  double std_error = 0.0;
  double q99 = 0.0;
  double incomplete_rate = 0.0;
  double correct_rate = 0.0;
};

struct EfficiencyCurve {
  std::string scheme;
  std::size_t K = 0;
  std::vector<CurvePoint> points;

  const CurvePoint &at(std::size_t k) const;
};

struct CurveOptions {
  std::size_t trials = 10000;
  std::uint64_t seed = 1;
  unsigned threads = 0; // 0 = hardware concurrency
  // Path lengths to evaluate; empty means 1..K.
  std::vector<std::size_t> ks;
};

// Summary statistics of per-trial `used` counts. q99 is the order
// statistic at ceil(0.99 n).
CurvePoint summarize(std::size_t k, const std::vector<TrialResult> &trials);

EfficiencyCurve efficiency_curve(const Scheme &scheme, std::size_t K, std::string label,
                                 const CurveOptions &options);

struct TvsDComparison {
  EfficiencyCurve recipe_d;
  std::vector<std::size_t> table_sizes;
  std::vector<EfficiencyCurve> recipe_t; // one per table size
};

TvsDComparison compare_t_vs_d(const XddSequence &seq, const std::vector<std::size_t> &Ls,
                              const CurveOptions &options, std::uint64_t avst_seed);

// Mean |mean_t(k) - mean_d(k)| / mean_d(k) over the curve's points.
double mean_relative_gap(const EfficiencyCurve &a, const EfficiencyCurve &reference);

struct PintTuning {
  PintParams params;
  double mean_at_K = 0.0;
};

// Grid search over alpha in {0, 0.05, ..., 1} and p in {1/K, ..., 10/K}
// minimizing the mean codewords at k = K.
PintTuning tune_pint(std::size_t K, std::size_t trials, std::uint64_t seed,
                     unsigned threads = 0);

void write_curve_csv(std::ostream &out, const std::vector<EfficiencyCurve> &curves,
                     bool header = true);

// Empirical XOR-degree histogram of delivered codewords at path length k.
std::vector<std::size_t> degree_histogram(const Scheme &scheme, std::size_t k,
                                          std::size_t packets, std::uint64_t seed);

// Runs body(index) for index in [0, n) on a small worker pool.
void parallel_for(std::size_t n, unsigned threads,
                  const std::function<void(std::size_t)> &body);

} // namespace recipe
