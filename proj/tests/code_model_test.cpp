#include "oracles.hpp"
#include <boost/multiprecision/cpp_bin_float.hpp>
#include "recipe/code_model.hpp"
#include "recipe/errors.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace recipe;

TEST_CASE("mu_to_q examples") {
  CHECK(mu_to_q(Xdd({1.0 / 2, 1.0 / 6, 1.0 / 3}), 2) == doctest::Approx(1.0 / 18).epsilon(1e-14));
  CHECK(mu_to_q(Xdd({1.0}), 1) == 1.0);
  CHECK(mu_to_q(Xdd({0.5, 0.5}), 1) == doctest::Approx(0.25).epsilon(1e-14));
  CHECK_THROWS_AS(mu_to_q(Xdd({0.5, 0.5}), 3), RangeError);
  CHECK_THROWS_AS(mu_to_q(Xdd({0.5, 0.5}), 0), RangeError);
}

TEST_CASE("q times binomial recovers mu") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  for (std::size_t k : {1u, 2u, 7u, 40u, 120u, 236u}) {
    std::vector<double> m(k);
    double s = 0;
    for (auto &x : m)
      s += (x = U(rng));
    for (auto &x : m)
      x /= s;
    const Xdd xdd(m);
    for (std::size_t d = 1; d <= k; ++d) {
      const double back = mu_to_q(xdd, d) * std::exp(binomial_log(k, d));
      CHECK(std::abs(back - m[d - 1]) <= 1e-12);
    }
  }
}

TEST_CASE("binomial_log examples") {
  CHECK(binomial_log(2, 1) == doctest::Approx(std::log(2.0)).epsilon(1e-15));
  CHECK(binomial_log(5, 2) == doctest::Approx(std::log(10.0)).epsilon(1e-15));
  CHECK(binomial_log(7, 0) == 0.0);
  CHECK_THROWS_AS(binomial_log(3, 4), RangeError);

  // Big-integer oracle at n = 236, r = 118: compare 12 significant digits.
  const oracle::cpp_int exact = oracle::choose(236, 118);
  const boost::multiprecision::cpp_bin_float_50 big(exact);
  const double ln_exact = static_cast<double>(log(big));
  CHECK(std::abs(std::expm1(binomial_log(236, 118) - ln_exact)) < 1e-12);
}

TEST_CASE("binomial_log is exact for small n") {
  for (unsigned n = 0; n <= 66; ++n)
    for (unsigned r = 0; r <= n; ++r) {
      const long double exact = oracle::choose(n, r).convert_to<long double>();
      CHECK(std::abs(std::exp(binomial_log(n, r)) / static_cast<double>(exact) - 1.0) < 1e-14);
    }
}

TEST_CASE("binomial_log satisfies Pascal's rule in log space") {
  for (std::size_t n = 2; n <= 512; ++n)
    for (std::size_t r = 1; r < n; ++r) {
      const double a = binomial_log(n - 1, r - 1), b = binomial_log(n - 1, r);
      const double hi = std::max(a, b), lo = std::min(a, b);
      const double rhs = hi + std::log1p(std::exp(lo - hi));
      const double lhs = binomial_log(n, r);
      REQUIRE(std::abs(lhs - rhs) <= 1e-10 * std::max(1.0, std::abs(lhs)));
    }
}

TEST_CASE("ratio identities against big-integer binomials") {
  // C(i-1,d)/C(i,d) = (i-d)/i and C(i-1,d)/C(i,d+1) = (d+1)/i.
  for (unsigned i = 2; i <= 20; ++i)
    for (unsigned d = 1; d <= i - 1; ++d) {
      const oracle::cpp_rational skip(oracle::choose(i - 1, d), oracle::choose(i, d));
      const oracle::cpp_rational add(oracle::choose(i - 1, d), oracle::choose(i, d + 1));
      CHECK(skip == oracle::cpp_rational(i - d, i));
      CHECK(add == oracle::cpp_rational(d + 1, i));
      CHECK(skip_binomial_factor(i, d) == static_cast<double>(skip));
      CHECK(add_binomial_factor(i, d) == static_cast<double>(add));
    }
}

TEST_CASE("validate_xdd reports") {
  CHECK(validate_xdd(std::vector<double>{1.0}).empty());

  auto sum = validate_xdd(std::vector<double>{0.5, 0.6});
  REQUIRE(sum.size() == 1);
  CHECK(sum[0].kind == XddViolation::Kind::Sum);
  CHECK(sum[0].value == doctest::Approx(1.1));

  auto neg = validate_xdd(std::vector<double>{1.2, -0.2});
  bool found = false;
  for (const auto &v : neg)
    if (v.kind == XddViolation::Kind::Negative) {
      CHECK(v.degree == 2);
      found = true;
    }
  CHECK(found);

  CHECK(!validate_xdd(std::vector<double>{}).empty());
  CHECK(!validate_xdd(std::vector<double>{NAN}).empty());
  CHECK_THROWS_AS(Xdd({0.5, 0.6}), ValidationError);
}

TEST_CASE("file tolerance is looser than construction tolerance") {
  std::vector<double> m{0.5, 0.5 + 1e-10};
  CHECK_THROWS_AS(Xdd{m}, ValidationError);
  CHECK_NOTHROW(Xdd{m, kFileTolerance});
}

TEST_CASE("sequence shape") {
  CHECK_THROWS_AS(XddSequence(std::vector<Xdd>{}), ValidationError);
  CHECK_THROWS_AS(XddSequence({Xdd({0.5, 0.5})}), ValidationError);
  XddSequence s({Xdd({1.0}), Xdd({0.5, 0.5})});
  CHECK(s.K() == 2);
  CHECK(s[2](2) == 0.5);
  CHECK_THROWS_AS(s[3], RangeError);
}

TEST_CASE("q-table round trip") {
  std::mt19937_64 rng(11);
  for (std::size_t K : {1u, 2u, 5u, 12u, 30u}) {
    const auto mu = oracle::random_feasible(K, rng);
    std::vector<Xdd> xdds;
    for (const auto &m : mu)
      xdds.emplace_back(m);
    const XddSequence seq(xdds);
    const auto back = XddSequence::from_q(seq.to_q());
    for (std::size_t i = 1; i <= K; ++i)
      for (std::size_t d = 1; d <= i; ++d)
        CHECK(std::abs(back[i](d) - seq[i](d)) <= 1e-12);
  }
}
