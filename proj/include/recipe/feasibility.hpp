#pragma once

#include "recipe/code_model.hpp"
#include "recipe/errors.hpp"

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace recipe {

// Violations smaller than this are treated as rounding on a facet.
inline constexpr double kFeasibilitySlack = 1e-12;

struct FeasibilityViolation {
  std::size_t i;
  std::size_t d;
  double lhs;     // q_{i-1}(d)
  double rhs;     // q_i(d) + q_i(d+1)
  double mu_gap;  // mu-space lhs - rhs, negative when violated
};

struct FeasibilityReport {
  bool feasible = true;
  std::vector<FeasibilityViolation> violations;

  std::string describe() const;
};

// Checks q_{i-1}(d) >= q_i(d) + q_i(d+1) for 2 <= i <= K, 1 <= d <= i-1,
// in the equivalent mu-space form.
FeasibilityReport check_feasible(const XddSequence &seq);

// Invariant-sequence form: mu(d) >= (d+1)/d * mu(d+1) for d = 1..K-2.
FeasibilityReport check_invariant_feasible(const Xdd &mu_K);

class FeasibilityError : public ValidationError {
public:
  explicit FeasibilityError(FeasibilityReport report);
  const FeasibilityReport &report() const { return report_; }

private:
  FeasibilityReport report_;
};

struct ActionProbs {
  double add = 0.0;
  double skip = 0.0;
  double replace = 0.0;

  bool operator==(const ActionProbs &) const = default;
};

/// Action probability array. Entry (i, d) exists for 2 <= i <= K and
/// 1 <= d <= i-1; hop 1 is always (0, 0, 1). States that the source
/// sequence can never reach (mu_{i-1}(d) = 0) hold no value.
class Apa {
public:
  using Entry = std::optional<ActionProbs>;

  // rows[i-1] holds the entries of hop i; rows[0] = {hop-1 triple}.
  explicit Apa(std::vector<std::vector<Entry>> rows);

  std::size_t K() const { return rows_.size(); }

  // Hop 1 ignores d. Throws RangeError outside the table.
  const Entry &entry(std::size_t i, std::size_t d) const;
  // Throws ProtocolError when the entry is unreachable.
  const ActionProbs &at(std::size_t i, std::size_t d) const;

  const std::vector<std::vector<Entry>> &rows() const { return rows_; }

  // FNV-1a over the canonical little-endian bit patterns of every entry.
  std::uint64_t digest() const;

  bool operator==(const Apa &) const = default;

private:
  std::vector<std::vector<Entry>> rows_;
};

Apa derive_apa(const XddSequence &seq);

// Largest K accepted by exact_induced_sequence (3^(K-1) action vectors).
inline constexpr std::size_t kMaxEnumerationK = 12;

struct InducedDistribution {
  XddSequence sequence;
  // set_probability[i-1][mask] = Pr(X_i = mask), bit h-1 set for hop h.
  std::vector<std::vector<double>> set_probability;
  // Largest within-degree spread of set probabilities seen at any hop.
  double max_uniformity_spread = 0.0;
};

/// Brute force: walks every action vector (a_1..a_K) with its exact
/// probability under the APA and accumulates the XOR-set law per hop.
/// Throws UniformityError when same-size sets differ by more than 1e-10.
InducedDistribution exact_induced_distribution(const Apa &apa, std::size_t K);
XddSequence exact_induced_sequence(const Apa &apa, std::size_t K);

} // namespace recipe
