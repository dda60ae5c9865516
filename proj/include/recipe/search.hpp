#pragma once

#include "recipe/code_model.hpp"

#include <boost/multiprecision/cpp_int.hpp>

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace recipe {

struct MeanFieldTerms {
  std::size_t K = 0;
  // Indexed by decode rank j - 1.
  std::vector<double> p_rel;
  std::vector<double> p_suc;
  std::vector<double> t;
  std::vector<double> s; // S_j = t_1 + ... + t_{j-1}
};

struct MeanFieldResult {
  double total = 0.0;
  MeanFieldTerms terms;
};

/// Mean-field estimate of the codewords a peeling decoder needs for an
/// LT code with XDD mu over K messages:
///   t_j = max(0, 1 - f_j) / P^suc_j,  f_j = S_j P^rel_j
/// (second order: f_j - (f_j)^2 / (2 (K - j + 1))). The release and
/// success probabilities are linear in mu; their coefficients are
/// precomputed once per K in log space.
class MeanFieldModel {
public:
  explicit MeanFieldModel(std::size_t K);

  std::size_t K() const { return K_; }

  MeanFieldResult evaluate(std::span<const double> mu, bool second_order) const;
  // Objective and its gradient with respect to mu (t_j clamping included).
  // smoothing > 0 replaces max(0, x) by a softplus of that width.
  double value_and_gradient(std::span<const double> mu, bool second_order,
                            std::vector<double> &grad, double smoothing = 0.0) const;

  // Coefficients: P^rel_j = sum_d rel(j, d) mu(d), P^suc_j likewise.
  double rel(std::size_t j, std::size_t d) const { return rel_[(j - 1) * K_ + (d - 1)]; }
  double suc(std::size_t j, std::size_t d) const { return suc_[(j - 1) * K_ + (d - 1)]; }

private:
  std::size_t K_;
  std::vector<double> rel_; // row-major (j, d)
  std::vector<double> suc_;
};

// Throws ValidationError when mu(1) == 0 (P^suc_1 would vanish).
MeanFieldResult mean_field_objective(const Xdd &mu, bool second_order = false);

struct SearchConfig {
  std::size_t candidates_per_hop = 1000;
  std::size_t trials_per_candidate = 2000;
  std::size_t restarts = 8;
  std::uint64_t seed = 1;
  bool second_order = false;
  unsigned threads = 0;
  std::size_t max_iterations = 3000;

  void validate() const;
};

struct TraceRow {
  std::size_t stage;     // QPS: restart index; HRS: hop i being solved
  std::size_t step;      // QPS: iteration; HRS: candidate index
  double objective;
};

struct SearchResult {
  XddSequence sequence;
  // QPS: mean-field total of mu_K. HRS: Monte-Carlo mean codewords of mu_K.
  double objective = 0.0;
  std::vector<TraceRow> trace;
};

void write_trace_csv(std::ostream &out, const std::vector<TraceRow> &trace);

// The invariant-feasible polytope is a simplex: mu = sum_j w_j v_j where
// v_j (j < K) puts mass 1/(d H_j) on d = 1..j and v_K is the point mass at
// K. These map between mu and the barycentric weights w.
std::vector<double> invariant_vertex(std::size_t K, std::size_t j);
std::vector<double> invariant_weights_to_mu(std::span<const double> w);
std::vector<double> mu_to_invariant_weights(std::span<const double> mu);

// Euclidean projection onto the probability simplex.
std::vector<double> project_to_simplex(std::span<const double> v);

SearchResult qps_search(std::size_t K, const SearchConfig &config);

SearchResult hrs_search(std::size_t K, const SearchConfig &config,
                        const std::optional<Xdd> &mu_K = std::nullopt);

struct RobustSolitonTuning {
  double c = 0.1;
  double delta = 0.5;
  double mean = 0.0; // Monte-Carlo mean codewords at k = K
};

// Grid search over Robust Soliton (c, delta) minimizing the centralized LT
// mean efficiency at k = K, all points scored with common random numbers.
RobustSolitonTuning tune_robust_soliton(std::size_t K, std::size_t trials, std::uint64_t seed,
                                        unsigned threads = 0);

// Candidate predecessor mu_{i-1} of mu_i for scaled slacks gamma (summing
// to mu_i(1)/i): mu_{i-1}(d) = C(i-1,d)(q_i(d) + q_i(d+1)) + gamma_d.
std::vector<double> hrs_predecessor(const Xdd &mu_i, std::span<const double> gamma);

using Rational = boost::multiprecision::cpp_rational;

// 1 - sum_d C(i-1,d)(q_i(d) + q_i(d+1)), in exact rational arithmetic.
Rational verify_slack_budget(const std::vector<Rational> &mu_i);
// Same, from doubles converted exactly.
double verify_slack_budget(const Xdd &mu_i);

} // namespace recipe
