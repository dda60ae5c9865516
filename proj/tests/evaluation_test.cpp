#include "oracles.hpp"
#include "recipe/distributions.hpp"
#include "recipe/errors.hpp"
#include "recipe/evaluation.hpp"

#include <doctest.h>

#include <cmath>
#include <sstream>

using namespace recipe;

namespace {

Scheme recipe_d(const XddSequence &seq) {
  return RecipeDScheme{std::make_shared<const Apa>(derive_apa(seq))};
}

CurvePoint run(const Scheme &s, std::size_t k, std::size_t trials, std::uint64_t seed) {
  std::vector<TrialResult> r(trials);
  for (std::size_t t = 0; t < trials; ++t)
    r[t] = run_instance(k, s, trial_seed(seed, k, t));
  return summarize(k, r);
}

double as_double(const oracle::cpp_rational &r) { return static_cast<double>(r); }

} // namespace

TEST_CASE("single-hop instances need one codeword") {
  const std::vector<Scheme> schemes{recipe_d(shifted_soliton_sequence(4)), PintScheme{{0.0, 0.5}},
                                    PintScheme{{1.0, 0.5}}};
  for (const auto &s : schemes)
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
      const auto r = run_instance(1, s, seed);
      if (std::holds_alternative<PintScheme>(s) && std::get<PintScheme>(s).params.alpha == 0.0) {
        // Binomial branch may deliver empty codewords first; they still count.
        CHECK(r.completed);
        continue;
      }
      CHECK(r.used == 1);
      CHECK(r.correct);
    }
  CHECK_THROWS_AS(run_instance(5, recipe_d(shifted_soliton_sequence(4)), 1), RangeError);
}

TEST_CASE("coupon collector at k = 3") {
  const auto p = run(PintScheme{{1.0, 0.5}}, 3, 100000, 21);
  CHECK(std::abs(p.mean - 5.5) <= 3 * p.std_error);
  CHECK(p.correct_rate == 1.0);
}

TEST_CASE("shifted soliton at k = 2 and 3 matches the exact chain") {
  using R = oracle::cpp_rational;
  const double e2 = as_double(oracle::PeelingChain(2, {R(1, 2), R(1, 2)}).expected_used());
  const double e3 =
      as_double(oracle::PeelingChain(3, {R(1, 2), R(1, 6), R(1, 3)}).expected_used());
  const Scheme ss = recipe_d(shifted_soliton_sequence(3));
  const auto p2 = run(ss, 2, 50000, 4);
  const auto p3 = run(ss, 3, 50000, 5);
  CHECK(std::abs(p2.mean - e2) <= 3 * p2.std_error);
  CHECK(std::abs(p3.mean - e3) <= 3 * p3.std_error);
}

TEST_CASE("centralized LT trials match the exact chain") {
  using R = oracle::cpp_rational;
  const double e3 =
      as_double(oracle::PeelingChain(3, {R(1, 5), R(3, 5), R(1, 5)}).expected_used());
  const double mean = lt_mean_efficiency(Xdd({0.2, 0.6, 0.2}), 50000, 9);
  // Var(T) here is well below 10, so this bound is loose but meaningful.
  CHECK(std::abs(mean - e3) < 3 * std::sqrt(10.0 / 50000));
}

TEST_CASE("every completed trial decodes the true IDs and uses at least k codewords") {
  auto apa = std::make_shared<const Apa>(derive_apa(shifted_soliton_sequence(10)));
  auto avst = std::make_shared<const Avst>(generate_avst(*apa, 2000, 7));
  const std::vector<Scheme> schemes{RecipeDScheme{apa}, RecipeTScheme{avst, apa->digest()},
                                    PintScheme{{0.4, 0.15}},
                                    PintScheme{{0.0, 0.3}, PintZeroPolicy::Condition}};
  for (const auto &s : schemes)
    for (std::size_t k = 1; k <= 10; ++k)
      for (std::uint64_t t = 0; t < 100; ++t) {
        const auto r = run_instance(k, s, trial_seed(3, k, t));
        CHECK(r.completed == r.correct);
        if (r.completed)
          CHECK(r.used >= k);
      }
}

TEST_CASE("trace records the delivered stream") {
  const Scheme ss = recipe_d(shifted_soliton_sequence(6));
  InstanceTrace trace;
  const auto r = run_instance(6, ss, 77, &trace);
  CHECK(trace.ids.size() == 6);
  CHECK(trace.packets.size() == r.used);
  std::size_t resolved = 0;
  for (const auto &p : trace.packets) {
    Word v = 0;
    for (auto h : p.xor_set)
      v ^= trace.ids[h - 1].value();
    CHECK(v == p.codeword);
    resolved += p.resolved.size();
  }
  CHECK(resolved == 6);
}

TEST_CASE("switch IDs are distinct, nonzero and 32-bit") {
  InstanceTrace trace;
  run_instance(10, PintScheme{{1.0, 0.5}}, 5, &trace);
  for (std::size_t a = 0; a < trace.ids.size(); ++a) {
    CHECK(trace.ids[a].value() != 0);
    CHECK(trace.ids[a].value() <= 0xFFFFFFFFULL);
    for (std::size_t b = a + 1; b < trace.ids.size(); ++b)
      CHECK(trace.ids[a].value() != trace.ids[b].value());
  }
}

TEST_CASE("incomplete trials count the cap") {
  // Single row that always ends in the same XOR-set: k >= 2 never decodes.
  std::vector<Action> row{Action::Replace, Action::Add, Action::Add};
  auto avst = std::make_shared<const Avst>(3, 1, 0, 0, row);
  const auto r = run_instance(2, RecipeTScheme{avst, {}}, 1);
  CHECK(!r.completed);
  CHECK(r.used == 400);
  CHECK(run_instance(1, RecipeTScheme{avst, {}}, 1).used == 1);
}

TEST_CASE("summarize") {
  std::vector<TrialResult> trials;
  for (std::size_t u = 1; u <= 200; ++u)
    trials.push_back({1, u, u != 200, u != 200});
  const auto p = summarize(1, trials);
  CHECK(p.mean == doctest::Approx(100.5));
  CHECK(p.q99 == 198.0); // order statistic at ceil(0.99 * 200) = 198
  CHECK(p.incomplete_rate == doctest::Approx(0.005));
  CHECK(p.std_error == doctest::Approx(std::sqrt((200.0 * 201 / 12) / 200)).epsilon(1e-9));
}

TEST_CASE("efficiency curves") {
  const Scheme ss = recipe_d(shifted_soliton_sequence(8));
  CurveOptions o;
  o.trials = 400;
  o.seed = 3;
  o.threads = 2;
  const auto a = efficiency_curve(ss, 8, "ss", o);
  o.threads = 1;
  const auto b = efficiency_curve(ss, 8, "ss", o);
  REQUIRE(a.points.size() == 8);
  for (std::size_t k = 1; k <= 8; ++k) {
    CHECK(a.at(k).mean == b.at(k).mean);
    CHECK(a.at(k).q99 == b.at(k).q99);
    CHECK(a.at(k).q99 >= a.at(k).mean);
  }
  o.trials = 99;
  CHECK_THROWS_AS(efficiency_curve(ss, 8, "ss", o), RangeError);

  std::ostringstream csv;
  write_curve_csv(csv, {a});
  std::string header;
  std::istringstream in(csv.str());
  std::getline(in, header);
  CHECK(header == "scheme,K,k,trials,mean,stderr,q99,incomplete_rate");
  std::string line;
  std::getline(in, line);
  CHECK(line.rfind("ss,8,1,400,1,0,1,0", 0) == 0);
}

TEST_CASE("stderr shrinks like one over root n") {
  const Scheme ss = recipe_d(shifted_soliton_sequence(12));
  CurveOptions o;
  o.ks = {12};
  o.trials = 8000;
  const double s1 = efficiency_curve(ss, 12, "a", o).at(12).std_error;
  o.trials = 16000;
  o.seed = 2;
  const double s2 = efficiency_curve(ss, 12, "b", o).at(12).std_error;
  CHECK(s1 / s2 == doctest::Approx(std::sqrt(2.0)).epsilon(0.1));
}

TEST_CASE("degree histogram follows the delivered law") {
  // Per packet: degree 1 w.p. alpha, else Binomial(k, p) including d = 0.
  const double alpha = 0.3, p = 0.25, n = 200000;
  const auto h = degree_histogram(PintScheme{{alpha, p}}, 8, 200000, 4);
  for (std::size_t d = 0; d <= 8; ++d) {
    double m = (1 - alpha) * static_cast<double>(oracle::choose(8, d)) * std::pow(p, d) *
               std::pow(1 - p, 8 - d);
    if (d == 1)
      m += alpha;
    CHECK(std::abs(h[d] / n - m) <= 4 * std::sqrt(m * (1 - m) / n) + 1e-12);
  }

  // Pure binomial: delivered nonempty codewords follow pint_sequence.
  const auto seq = pint_sequence(8, {0.0, p});
  const auto hb = degree_histogram(PintScheme{{0.0, p}}, 8, 200000, 5);
  const double nz = n - static_cast<double>(hb[0]);
  for (std::size_t d = 1; d <= 8; ++d) {
    const double m = seq[8](d);
    CHECK(std::abs(hb[d] / nz - m) <= 4 * std::sqrt(m * (1 - m) / nz) + 1e-12);
  }

  // RECIPE-d: exactly mu_k.
  const auto ss = shifted_soliton_sequence(8);
  const auto hd = degree_histogram(recipe_d(ss), 7, 200000, 6);
  CHECK(hd[0] == 0);
  for (std::size_t d = 1; d <= 7; ++d) {
    const double m = ss[7](d);
    CHECK(std::abs(hd[d] / n - m) <= 4 * std::sqrt(m * (1 - m) / n) + 1e-12);
  }
}

TEST_CASE("table size 1 degenerates") {
  CurveOptions o;
  o.trials = 100;
  o.ks = {1, 2};
  const auto c = compare_t_vs_d(shifted_soliton_sequence(4), {1}, o, 5);
  REQUIRE(c.recipe_t.size() == 1);
  CHECK(c.recipe_t[0].at(1).incomplete_rate == 0.0);
  CHECK(c.recipe_t[0].at(2).incomplete_rate == 1.0);
  CHECK(c.recipe_d.at(2).incomplete_rate == 0.0);
}

TEST_CASE("trial seeds separate k and trial") {
  CHECK(trial_seed(1, 2, 3) != trial_seed(1, 3, 2));
  CHECK(trial_seed(1, 2, 3) != trial_seed(2, 2, 3));
  CHECK(trial_seed(1, 2, 3) == trial_seed(1, 2, 3));
}
