#include "recipe/distributions.hpp"
#include "recipe/errors.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace recipe {

void PintParams::validate() const {
  if (!(alpha >= 0.0 && alpha <= 1.0))
    throw RangeError("PINT alpha must lie in [0,1], got " + std::to_string(alpha));
  if (!(p > 0.0 && p < 1.0))
    throw RangeError("PINT p must lie in (0,1), got " + std::to_string(p));
}

XddSequence shifted_soliton_sequence(std::size_t K) {
  if (K == 0)
    throw RangeError("shifted_soliton_sequence: K must be >= 1");
  std::vector<Xdd> xdds;
  xdds.reserve(K);
  for (std::size_t k = 1; k <= K; ++k) {
    std::vector<double> mass(k);
    for (std::size_t d = 1; d < k; ++d)
      mass[d - 1] = 1.0 / (static_cast<double>(d) * static_cast<double>(d + 1));
    mass[k - 1] = 1.0 / static_cast<double>(k);
    xdds.emplace_back(std::move(mass));
  }
  return XddSequence(std::move(xdds));
}

Xdd ideal_soliton(std::size_t k) {
  if (k == 0)
    throw RangeError("ideal_soliton: k must be >= 1");
  std::vector<double> mass(k);
  mass[0] = 1.0 / static_cast<double>(k);
  for (std::size_t d = 2; d <= k; ++d)
    mass[d - 1] = 1.0 / (static_cast<double>(d) * static_cast<double>(d - 1));
  return Xdd(std::move(mass));
}

Xdd robust_soliton(std::size_t k, double c, double delta) {
  if (k == 0)
    throw RangeError("robust_soliton: k must be >= 1");
  if (!(c > 0.0))
    throw RangeError("robust_soliton: c must be > 0");
  if (!(delta > 0.0 && delta < 1.0))
    throw RangeError("robust_soliton: delta must lie in (0,1)");
  if (k == 1)
    return Xdd({1.0});

  const double kd = static_cast<double>(k);
  const double R = c * std::log(kd / delta) * std::sqrt(kd);
  const auto spike = static_cast<std::size_t>(
      std::clamp(std::floor(kd / R), 1.0, kd));

  std::vector<double> mass(k);
  mass[0] = 1.0 / kd;
  for (std::size_t d = 2; d <= k; ++d)
    mass[d - 1] = 1.0 / (static_cast<double>(d) * static_cast<double>(d - 1));
  for (std::size_t d = 1; d < spike; ++d)
    mass[d - 1] += R / (static_cast<double>(d) * kd);
  mass[spike - 1] += std::max(0.0, R * std::log(R / delta) / kd);

  double total = 0.0;
  for (double m : mass)
    total += m;
  for (double &m : mass)
    m /= total;
  return Xdd(std::move(mass));
}

XddSequence ideal_soliton_sequence(std::size_t K) {
  if (K == 0)
    throw RangeError("ideal_soliton_sequence: K must be >= 1");
  std::vector<Xdd> xdds;
  for (std::size_t k = 1; k <= K; ++k)
    xdds.push_back(ideal_soliton(k));
  return XddSequence(std::move(xdds));
}

std::vector<double> binomial_pmf(std::size_t k, double p) {
  std::vector<double> pmf(k + 1);
  const double lp = std::log(p);
  const double lq = std::log1p(-p);
  for (std::size_t d = 0; d <= k; ++d)
    pmf[d] = std::exp(binomial_log(k, d) + static_cast<double>(d) * lp +
                      static_cast<double>(k - d) * lq);
  return pmf;
}

Xdd pint_xdd(std::size_t k, const PintParams &params) {
  params.validate();
  if (k == 0)
    throw RangeError("pint_xdd: k must be >= 1");
  const auto pmf = binomial_pmf(k, params.p);
  // 1 - (1-p)^k without cancellation
  const double nonzero = -std::expm1(static_cast<double>(k) * std::log1p(-params.p));
  std::vector<double> mass(k);
  for (std::size_t d = 1; d <= k; ++d)
    mass[d - 1] = (1.0 - params.alpha) * pmf[d] / nonzero;
  mass[0] += params.alpha;
  return Xdd(std::move(mass));
}

XddSequence pint_sequence(std::size_t K, const PintParams &params) {
  if (K == 0)
    throw RangeError("pint_sequence: K must be >= 1");
  std::vector<Xdd> xdds;
  xdds.reserve(K);
  xdds.emplace_back(std::vector<double>{1.0});
  for (std::size_t k = 2; k <= K; ++k)
    xdds.push_back(pint_xdd(k, params));
  return XddSequence(std::move(xdds));
}

XddSequence expand_invariant(const Xdd &mu_K) {
  const std::size_t K = mu_K.k();
  std::vector<Xdd> xdds;
  xdds.reserve(K);
  double head = 0.0; // sum of mu_K(d) for d < i
  for (std::size_t i = 1; i <= K; ++i) {
    if (i == K) {
      xdds.push_back(mu_K);
      break;
    }
    double tail = 1.0 - head;
    if (tail < -kConstructedTolerance)
      throw InvariantExpansionError("negative tail mass " + std::to_string(tail) +
                                    " at i=" + std::to_string(i));
    tail = std::max(tail, 0.0);
    std::vector<double> mass(mu_K.mass().begin(), mu_K.mass().begin() + (i - 1));
    mass.push_back(tail);
    xdds.emplace_back(std::move(mass));
    head += mu_K(i);
  }
  return XddSequence(std::move(xdds));
}

} // namespace recipe
