#include "recipe/feasibility.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <sstream>

namespace recipe {

std::string FeasibilityReport::describe() const {
  std::ostringstream os;
  os.precision(17);
  os << (feasible ? "feasible" : "infeasible");
  for (const auto &v : violations)
    os << "\n  violation i=" << v.i << " d=" << v.d << " lhs=" << v.lhs
       << " rhs=" << v.rhs << " gap=" << v.mu_gap;
  return os.str();
}

FeasibilityError::FeasibilityError(FeasibilityReport report)
    : ValidationError("sequence is not RECIPE-feasible (" +
                      std::to_string(report.violations.size()) + " violations)"),
      report_(std::move(report)) {}

FeasibilityReport check_feasible(const XddSequence &seq) {
  FeasibilityReport report;
  for (std::size_t i = 2; i <= seq.K(); ++i) {
    const Xdd &prev = seq[i - 1];
    const Xdd &cur = seq[i];
    for (std::size_t d = 1; d <= i - 1; ++d) {
      const double lhs = prev(d);
      const double rhs =
          cur(d) * skip_binomial_factor(i, d) + cur(d + 1) * add_binomial_factor(i, d);
      const double gap = lhs - rhs;
      if (gap < -kFeasibilitySlack) {
        report.violations.push_back(
            {i, d, mu_to_q(prev, d), mu_to_q(cur, d) + mu_to_q(cur, d + 1), gap});
      }
    }
  }
  report.feasible = report.violations.empty();
  return report;
}

FeasibilityReport check_invariant_feasible(const Xdd &mu_K) {
  // Violations here carry mu-space values: lhs = mu(d), rhs = (d+1)/d mu(d+1).
  FeasibilityReport report;
  const std::size_t K = mu_K.k();
  for (std::size_t d = 1; d + 2 <= K; ++d) {
    const double lhs = mu_K(d);
    const double rhs = static_cast<double>(d + 1) / static_cast<double>(d) * mu_K(d + 1);
    if (lhs - rhs < -kFeasibilitySlack)
      report.violations.push_back({K, d, lhs, rhs, lhs - rhs});
  }
  report.feasible = report.violations.empty();
  return report;
}

namespace {

void check_triple(const ActionProbs &p, std::size_t i, std::size_t d) {
  const bool ok = p.add >= 0.0 && p.skip >= 0.0 && p.replace >= 0.0 &&
                  std::abs(p.add + p.skip + p.replace - 1.0) <= kConstructedTolerance;
  if (!ok)
    throw ValidationError("APA entry (" + std::to_string(i) + "," + std::to_string(d) +
                          ") is not a distribution");
}

} // namespace

Apa::Apa(std::vector<std::vector<Entry>> rows) : rows_(std::move(rows)) {
  if (rows_.empty())
    throw ValidationError("APA must have K >= 1");
  if (rows_[0].size() != 1 || !rows_[0][0] || rows_[0][0]->replace != 1.0 ||
      rows_[0][0]->add != 0.0 || rows_[0][0]->skip != 0.0)
    throw ValidationError("APA hop 1 must be exactly (0, 0, 1)");
  for (std::size_t i = 2; i <= rows_.size(); ++i) {
    const auto &row = rows_[i - 1];
    if (row.size() != i - 1)
      throw ValidationError("APA hop " + std::to_string(i) + " has " +
                            std::to_string(row.size()) + " entries");
    for (std::size_t d = 1; d <= row.size(); ++d)
      if (row[d - 1])
        check_triple(*row[d - 1], i, d);
  }
}

const Apa::Entry &Apa::entry(std::size_t i, std::size_t d) const {
  if (i < 1 || i > rows_.size())
    throw RangeError("APA hop " + std::to_string(i) + " outside 1.." +
                     std::to_string(rows_.size()));
  if (i == 1)
    return rows_[0][0];
  if (d < 1 || d > i - 1)
    throw RangeError("APA degree " + std::to_string(d) + " invalid at hop " +
                     std::to_string(i));
  return rows_[i - 1][d - 1];
}

const ActionProbs &Apa::at(std::size_t i, std::size_t d) const {
  const Entry &e = entry(i, d);
  if (!e)
    throw ProtocolError("unreachable APA entry (" + std::to_string(i) + "," +
                        std::to_string(d) + ") consulted");
  return *e;
}

std::uint64_t Apa::digest() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto feed = [&h](std::uint64_t word) {
    for (int b = 0; b < 8; ++b) {
      h ^= (word >> (8 * b)) & 0xFF;
      h *= 0x100000001b3ULL;
    }
  };
  feed(rows_.size());
  for (const auto &row : rows_)
    for (const auto &e : row) {
      feed(e ? 1 : 0);
      if (e) {
        feed(std::bit_cast<std::uint64_t>(e->add));
        feed(std::bit_cast<std::uint64_t>(e->skip));
        feed(std::bit_cast<std::uint64_t>(e->replace));
      }
    }
  return h;
}

Apa derive_apa(const XddSequence &seq) {
  auto report = check_feasible(seq);
  if (!report.feasible)
    throw FeasibilityError(std::move(report));

  std::vector<std::vector<Apa::Entry>> rows;
  rows.reserve(seq.K());
  rows.push_back({ActionProbs{0.0, 0.0, 1.0}});
  for (std::size_t i = 2; i <= seq.K(); ++i) {
    const Xdd &prev = seq[i - 1];
    const Xdd &cur = seq[i];
    std::vector<Apa::Entry> row(i - 1);
    for (std::size_t d = 1; d <= i - 1; ++d) {
      const double den = prev(d);
      if (den == 0.0)
        continue;
      // p_A = q_i(d+1)/q_{i-1}(d), p_S = q_i(d)/q_{i-1}(d), via mu ratios.
      double add = cur(d + 1) / den * add_binomial_factor(i, d);
      double skip = cur(d) / den * skip_binomial_factor(i, d);
      if (!std::isfinite(add) || !std::isfinite(skip))
        throw InternalError("non-finite APA entry at (" + std::to_string(i) + "," +
                            std::to_string(d) + ")");
      double replace = 1.0 - add - skip;
      if (replace < 0.0) {
        // On a facet: p_R is zero up to rounding.
        const double s = add + skip;
        add /= s;
        skip /= s;
        replace = 0.0;
      }
      row[d - 1] = ActionProbs{add, skip, replace};
    }
    rows.push_back(std::move(row));
  }
  return Apa(std::move(rows));
}

namespace {

struct Enumerator {
  const Apa &apa;
  std::size_t K;
  std::vector<std::vector<double>> &set_prob;

  // State after hop `hop` has acted: XOR-set `mask` of size `degree`.
  void walk(std::size_t hop, std::uint32_t mask, std::size_t degree, double prob) {
    set_prob[hop - 1][mask] += prob;
    if (hop == K)
      return;
    const std::size_t next = hop + 1;
    const Apa::Entry &e = apa.entry(next, degree);
    if (!e)
      throw ProtocolError("reachable state (" + std::to_string(next) + "," +
                          std::to_string(degree) + ") has no APA entry");
    const std::uint32_t bit = 1u << (next - 1);
    if (e->add > 0.0)
      walk(next, mask | bit, degree + 1, prob * e->add);
    if (e->skip > 0.0)
      walk(next, mask, degree, prob * e->skip);
    if (e->replace > 0.0)
      walk(next, bit, 1, prob * e->replace);
  }
};

} // namespace

InducedDistribution exact_induced_distribution(const Apa &apa, std::size_t K) {
  if (K < 1 || K > kMaxEnumerationK)
    throw RangeError("exact enumeration supports 1 <= K <= " +
                     std::to_string(kMaxEnumerationK));
  if (K > apa.K())
    throw RangeError("K exceeds the APA's diameter");

  std::vector<std::vector<double>> set_prob(K);
  for (std::size_t i = 1; i <= K; ++i)
    set_prob[i - 1].assign(std::size_t{1} << i, 0.0);

  const ActionProbs &first = apa.at(1, 0);
  if (first.replace != 1.0)
    throw InternalError("hop 1 must always replace");
  Enumerator{apa, K, set_prob}.walk(1, 1u, 1, 1.0);

  std::vector<Xdd> xdds;
  double worst = 0.0;
  for (std::size_t i = 1; i <= K; ++i) {
    const auto &probs = set_prob[i - 1];
    std::vector<double> mass(i, 0.0);
    std::vector<double> lo(i + 1, 2.0), hi(i + 1, -1.0);
    for (std::uint32_t mask = 1; mask < probs.size(); ++mask) {
      const auto d = static_cast<std::size_t>(std::popcount(mask));
      mass[d - 1] += probs[mask];
      lo[d] = std::min(lo[d], probs[mask]);
      hi[d] = std::max(hi[d], probs[mask]);
    }
    if (probs[0] != 0.0)
      throw InternalError("empty XOR-set reached");
    for (std::size_t d = 1; d <= i; ++d) {
      const double spread = hi[d] - lo[d];
      worst = std::max(worst, spread);
      if (spread > 1e-10)
        throw UniformityError("hop " + std::to_string(i) + " degree " +
                              std::to_string(d) + ": set probabilities spread " +
                              std::to_string(spread));
    }
    xdds.emplace_back(std::move(mass), 1e-10);
  }
  return {XddSequence(std::move(xdds)), std::move(set_prob), worst};
}

XddSequence exact_induced_sequence(const Apa &apa, std::size_t K) {
  return exact_induced_distribution(apa, K).sequence;
}

} // namespace recipe
