#include "recipe/code_model.hpp"
#include "recipe/errors.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <sstream>

namespace recipe {

std::string XddViolation::describe() const {
  std::ostringstream os;
  os.precision(17);
  switch (kind) {
  case Kind::Negative:
    os << "negative mass at d=" << degree << ": " << value;
    break;
  case Kind::AboveOne:
    os << "mass above 1 at d=" << degree << ": " << value;
    break;
  case Kind::NotFinite:
    os << "non-finite mass at d=" << degree;
    break;
  case Kind::Sum:
    os << "mass sums to " << value << ", not 1";
    break;
  case Kind::Empty:
    os << "empty distribution";
    break;
  }
  return os.str();
}

ValidationReport validate_xdd(std::span<const double> mass, double tolerance) {
  ValidationReport report;
  if (mass.empty()) {
    report.push_back({XddViolation::Kind::Empty, 0, 0.0});
    return report;
  }
  double sum = 0.0;
  bool finite = true;
  for (std::size_t j = 0; j < mass.size(); ++j) {
    const double m = mass[j];
    if (!std::isfinite(m)) {
      report.push_back({XddViolation::Kind::NotFinite, j + 1, m});
      finite = false;
      continue;
    }
    if (m < 0.0)
      report.push_back({XddViolation::Kind::Negative, j + 1, m});
    else if (m > 1.0 + tolerance)
      report.push_back({XddViolation::Kind::AboveOne, j + 1, m});
    sum += m;
  }
  if (finite && std::abs(sum - 1.0) > tolerance)
    report.push_back({XddViolation::Kind::Sum, 0, sum});
  return report;
}

ValidationReport validate_xdd(const Xdd &xdd) { return validate_xdd(xdd.mass()); }

Xdd::Xdd(std::vector<double> mass, double tolerance) : mass_(std::move(mass)) {
  const auto report = validate_xdd(mass_, tolerance);
  if (!report.empty())
    throw ValidationError("invalid XDD (k=" + std::to_string(mass_.size()) +
                          "): " + report.front().describe());
}

double Xdd::operator()(std::size_t d) const {
  if (d < 1 || d > mass_.size())
    throw RangeError("degree " + std::to_string(d) + " outside 1.." +
                     std::to_string(mass_.size()));
  return mass_[d - 1];
}

XddSequence::XddSequence(std::vector<Xdd> xdds) : xdds_(std::move(xdds)) {
  if (xdds_.empty())
    throw ValidationError("XDD sequence must have K >= 1");
  for (std::size_t i = 0; i < xdds_.size(); ++i) {
    if (xdds_[i].k() != i + 1)
      throw ValidationError("mu_" + std::to_string(i + 1) + " has block size " +
                            std::to_string(xdds_[i].k()));
  }
  if (xdds_[0](1) != 1.0)
    throw ValidationError("mu_1 must be (1)");
}

const Xdd &XddSequence::operator[](std::size_t i) const {
  if (i < 1 || i > xdds_.size())
    throw RangeError("hop " + std::to_string(i) + " outside 1.." +
                     std::to_string(xdds_.size()));
  return xdds_[i - 1];
}

XddSequence XddSequence::from_q(const std::vector<std::vector<double>> &q) {
  std::vector<Xdd> xdds;
  xdds.reserve(q.size());
  for (std::size_t i = 1; i <= q.size(); ++i) {
    const auto &row = q[i - 1];
    if (row.size() != i)
      throw ValidationError("q-table row " + std::to_string(i) + " has length " +
                            std::to_string(row.size()));
    std::vector<double> mass(i);
    for (std::size_t d = 1; d <= i; ++d) {
      const double qd = row[d - 1];
      mass[d - 1] = qd == 0.0 ? 0.0 : std::exp(std::log(qd) + binomial_log(i, d));
    }
    xdds.emplace_back(std::move(mass));
  }
  return XddSequence(std::move(xdds));
}

std::vector<std::vector<double>> XddSequence::to_q() const {
  std::vector<std::vector<double>> q;
  q.reserve(xdds_.size());
  for (const auto &x : xdds_) {
    std::vector<double> row(x.k());
    for (std::size_t d = 1; d <= x.k(); ++d)
      row[d - 1] = mu_to_q(x, d);
    q.push_back(std::move(row));
  }
  return q;
}

namespace {

// Pascal's triangle up to n = 66 fits in uint64 (C(66,33) < 2^63).
constexpr std::size_t kExactRows = 67;

const std::array<std::array<std::uint64_t, kExactRows>, kExactRows> &pascal() {
  static const auto table = [] {
    std::array<std::array<std::uint64_t, kExactRows>, kExactRows> t{};
    for (std::size_t n = 0; n < kExactRows; ++n) {
      t[n][0] = 1;
      for (std::size_t r = 1; r <= n; ++r)
        t[n][r] = t[n - 1][r - 1] + (r < n ? t[n - 1][r] : 0);
    }
    return t;
  }();
  return table;
}

} // namespace

double binomial_log(std::size_t n, std::size_t r) {
  if (r > n)
    throw RangeError("binomial_log: r=" + std::to_string(r) + " > n=" +
                     std::to_string(n));
  if (n < kExactRows)
    return std::log(static_cast<double>(pascal()[n][r]));
  r = std::min(r, n - r);
  // C(n, r) < 2^n stays inside long double range well past n = 10000.
  if (n <= 10000) {
    long double c = 1.0L;
    for (std::size_t j = 1; j <= r; ++j)
      c = c * static_cast<long double>(n - r + j) / static_cast<long double>(j);
    return static_cast<double>(std::log(c));
  }
  const auto nd = static_cast<double>(n);
  const auto rd = static_cast<double>(r);
  return std::lgamma(nd + 1.0) - std::lgamma(rd + 1.0) - std::lgamma(nd - rd + 1.0);
}

double mu_to_q(const Xdd &xdd, std::size_t d) {
  const double mu = xdd(d);
  if (mu == 0.0)
    return 0.0;
  return std::exp(std::log(mu) - binomial_log(xdd.k(), d));
}

QValue q_value(const Xdd &xdd, std::size_t d) {
  return {xdd.k(), d, mu_to_q(xdd, d)};
}

} // namespace recipe
