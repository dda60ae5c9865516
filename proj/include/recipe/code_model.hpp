#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace recipe {

// Sum tolerance for distributions built in memory.
inline constexpr double kConstructedTolerance = 1e-12;
// Sum tolerance for distributions parsed from decimal text.
inline constexpr double kFileTolerance = 1e-9;

struct XddViolation {
  enum class Kind { Negative, AboveOne, NotFinite, Sum, Empty };
  Kind kind;
  std::size_t degree; // 1-based; 0 for whole-distribution violations
  double value;

  std::string describe() const;
};

using ValidationReport = std::vector<XddViolation>;

// Checks the mass vector of a candidate XDD (mass[0] is degree 1).
ValidationReport validate_xdd(std::span<const double> mass,
                              double tolerance = kConstructedTolerance);

/// XOR degree distribution over degrees 1..k for one block size k.
///
/// Immutable once built; the constructor rejects anything that fails
/// validate_xdd at the given tolerance.
class Xdd {
public:
  explicit Xdd(std::vector<double> mass,
               double tolerance = kConstructedTolerance);

  std::size_t k() const { return mass_.size(); }
  // mu(d), 1-based degree.
  double operator()(std::size_t d) const;
  std::span<const double> mass() const { return mass_; }

  bool operator==(const Xdd &) const = default;

private:
  std::vector<double> mass_;
};

ValidationReport validate_xdd(const Xdd &xdd);

/// XDDs mu_1..mu_K, one per path length; mu_1 is always (1).
class XddSequence {
public:
  explicit XddSequence(std::vector<Xdd> xdds);

  std::size_t K() const { return xdds_.size(); }
  // 1-based hop / path length.
  const Xdd &operator[](std::size_t i) const;
  const Xdd &last() const { return xdds_.back(); }
  const std::vector<Xdd> &xdds() const { return xdds_; }

  // Builds from per-hop q-tables (q[i-1][d-1] = q_i(d)).
  static XddSequence from_q(const std::vector<std::vector<double>> &q);
  std::vector<std::vector<double>> to_q() const;

  bool operator==(const XddSequence &) const = default;

private:
  std::vector<Xdd> xdds_;
};

// Probability of one specific size-d XOR-set at block size i.
struct QValue {
  std::size_t i;
  std::size_t d;
  double value;
};

// ln C(n, r) via log-gamma. Exact small values are returned for n <= 66.
double binomial_log(std::size_t n, std::size_t r);

// q(d) = mu(d) / C(k, d), evaluated in log space.
double mu_to_q(const Xdd &xdd, std::size_t d);
QValue q_value(const Xdd &xdd, std::size_t d);

// Exact cancellations used everywhere instead of forming q directly:
//   q_i(d+1) / q_{i-1}(d) = mu_i(d+1) / mu_{i-1}(d) * (d+1)/i
//   q_i(d)   / q_{i-1}(d) = mu_i(d)   / mu_{i-1}(d) * (i-d)/i
// These return the binomial factors (d+1)/i and (i-d)/i.
inline double add_binomial_factor(std::size_t i, std::size_t d) {
  return static_cast<double>(d + 1) / static_cast<double>(i);
}
inline double skip_binomial_factor(std::size_t i, std::size_t d) {
  return static_cast<double>(i - d) / static_cast<double>(i);
}

} // namespace recipe
