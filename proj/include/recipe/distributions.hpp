#pragma once

#include "recipe/code_model.hpp"

#include <cstddef>

namespace recipe {

// Mixture of the reservoir-sampling code (weight alpha) and the
// Binomial(k, p) XOR code.
struct PintParams {
  double alpha = 0.0;
  double p = 0.5;

  void validate() const;
};

// mu_k(d) = 1/(d(d+1)) for d < k, mu_k(k) = 1/k.
XddSequence shifted_soliton_sequence(std::size_t K);

Xdd ideal_soliton(std::size_t k);

// Luby's Robust Soliton, normalized rho + tau with the spike at k/R.
Xdd robust_soliton(std::size_t k, double c = 0.1, double delta = 0.5);

// Truncated Ideal Solitons at k = 1..K, concatenated. Not RECIPE-feasible
// for K >= 3; kept as a negative reference.
XddSequence ideal_soliton_sequence(std::size_t K);

// The PINT mixture, degree-0 binomial mass conditioned away.
Xdd pint_xdd(std::size_t k, const PintParams &params);
XddSequence pint_sequence(std::size_t K, const PintParams &params);

// Unconditioned Binomial(k, p) pmf over degrees 0..k.
std::vector<double> binomial_pmf(std::size_t k, double p);

/// Expands mu_K into the invariant sequence it determines:
/// mu_i(d) = mu_K(d) for d < i and mu_i(i) is the tail mass.
XddSequence expand_invariant(const Xdd &mu_K);

} // namespace recipe
