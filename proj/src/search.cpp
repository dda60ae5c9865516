#include "recipe/search.hpp"
#include "recipe/distributions.hpp"
#include "recipe/errors.hpp"
#include "recipe/evaluation.hpp"
#include "recipe/feasibility.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <ostream>
#include <random>

namespace recipe {

MeanFieldModel::MeanFieldModel(std::size_t K)
    : K_(K), rel_(K * K, 0.0), suc_(K * K, 0.0) {
  if (K == 0)
    throw RangeError("mean-field model needs K >= 1");
  for (std::size_t j = 1; j <= K; ++j) {
    const double log_front = std::log(static_cast<double>(K - j + 1));
    for (std::size_t d = 1; d <= j; ++d) {
      const double log_tail = log_front - binomial_log(K, d);
      suc_[(j - 1) * K + (d - 1)] = std::exp(log_tail + binomial_log(j - 1, d - 1));
      if (d >= 2)
        rel_[(j - 1) * K + (d - 1)] = std::exp(log_tail + binomial_log(j - 2, d - 2));
    }
  }
}

namespace {

struct Forward {
  std::vector<double> p_rel, p_suc, t, s, x, num;
};

// Smoothed clamp: tau * log(1 + exp(x / tau)), the hard max at tau = 0.
double soft_clamp(double x, double tau) {
  if (tau <= 0.0)
    return std::max(x, 0.0);
  const double z = x / tau;
  return z > 0.0 ? x + tau * std::log1p(std::exp(-z)) : tau * std::log1p(std::exp(z));
}

double soft_clamp_slope(double x, double tau) {
  if (tau <= 0.0)
    return x > 0.0 ? 1.0 : 0.0;
  return 1.0 / (1.0 + std::exp(-x / tau));
}

Forward run_forward(const MeanFieldModel &m, std::span<const double> mu, bool second_order,
                    double smoothing = 0.0) {
  const std::size_t K = m.K();
  if (mu.size() != K)
    throw RangeError("mean-field input has the wrong block size");
  Forward f;
  f.p_rel.assign(K, 0.0);
  f.p_suc.assign(K, 0.0);
  f.t.assign(K, 0.0);
  f.s.assign(K, 0.0);
  f.x.assign(K, 0.0);
  f.num.assign(K, 0.0);
  double running = 0.0;
  for (std::size_t j = 1; j <= K; ++j) {
    double pr = 0.0, ps = 0.0;
    for (std::size_t d = 1; d <= j; ++d) {
      pr += m.rel(j, d) * mu[d - 1];
      ps += m.suc(j, d) * mu[d - 1];
    }
    if (!(ps > 0.0))
      throw ValidationError("mean-field objective: P^suc_" + std::to_string(j) +
                            " is zero (mu(1) must be positive)");
    const double x = running * pr;
    double released = x;
    if (second_order)
      released -= 0.5 * x * x / static_cast<double>(K - j + 1);
    const double num = 1.0 - released;
    const double t = soft_clamp(num, smoothing) / ps;
    f.p_rel[j - 1] = pr;
    f.p_suc[j - 1] = ps;
    f.s[j - 1] = running;
    f.x[j - 1] = x;
    f.num[j - 1] = num;
    f.t[j - 1] = t;
    running += t;
  }
  return f;
}

} // namespace

MeanFieldResult MeanFieldModel::evaluate(std::span<const double> mu, bool second_order) const {
  Forward f = run_forward(*this, mu, second_order);
  MeanFieldResult r;
  r.total = std::accumulate(f.t.begin(), f.t.end(), 0.0);
  r.terms = {K_, std::move(f.p_rel), std::move(f.p_suc), std::move(f.t), std::move(f.s)};
  return r;
}

double MeanFieldModel::value_and_gradient(std::span<const double> mu, bool second_order,
                                          std::vector<double> &grad, double smoothing) const {
  const Forward f = run_forward(*this, mu, second_order, smoothing);
  const std::size_t K = K_;
  std::vector<double> g_rel(K, 0.0), g_suc(K, 0.0);
  // later = sum over m > j of dL/dS_m; every t_j feeds all later S_m.
  double later = 0.0;
  for (std::size_t j = K; j >= 1; --j) {
    const double gt = 1.0 + later;
    const double ps = f.p_suc[j - 1];
    const double clamp = soft_clamp_slope(f.num[j - 1], smoothing);
    const double slope =
        clamp * (second_order ? 1.0 - f.x[j - 1] / static_cast<double>(K - j + 1) : 1.0);
    const double g_s = -gt * slope * f.p_rel[j - 1] / ps;
    g_rel[j - 1] = -gt * slope * f.s[j - 1] / ps;
    g_suc[j - 1] = -gt * f.t[j - 1] / ps;
    later += g_s;
  }
  grad.assign(K, 0.0);
  for (std::size_t j = 1; j <= K; ++j)
    for (std::size_t d = 1; d <= j; ++d)
      grad[d - 1] += g_rel[j - 1] * rel(j, d) + g_suc[j - 1] * suc(j, d);
  return std::accumulate(f.t.begin(), f.t.end(), 0.0);
}

MeanFieldResult mean_field_objective(const Xdd &mu, bool second_order) {
  if (mu(1) == 0.0)
    throw ValidationError("mean-field objective needs mu(1) > 0");
  return MeanFieldModel(mu.k()).evaluate(mu.mass(), second_order);
}

void SearchConfig::validate() const {
  if (candidates_per_hop < 1 || trials_per_candidate < 1 || restarts < 1 ||
      max_iterations < 1)
    throw RangeError("search counts must all be >= 1");
}

void write_trace_csv(std::ostream &out, const std::vector<TraceRow> &trace) {
  out << "stage,step,objective\n";
  char buf[96];
  for (const auto &r : trace) {
    std::snprintf(buf, sizeof buf, "%zu,%zu,%.17g\n", r.stage, r.step, r.objective);
    out << buf;
  }
}

namespace {

double harmonic(std::size_t j) {
  double h = 0.0;
  for (std::size_t d = j; d >= 1; --d)
    h += 1.0 / static_cast<double>(d);
  return h;
}

} // namespace

std::vector<double> invariant_vertex(std::size_t K, std::size_t j) {
  if (j < 1 || j > K)
    throw RangeError("invariant vertex index out of range");
  std::vector<double> v(K, 0.0);
  if (j == K) {
    v[K - 1] = 1.0;
    return v;
  }
  const double h = harmonic(j);
  for (std::size_t d = 1; d <= j; ++d)
    v[d - 1] = 1.0 / (static_cast<double>(d) * h);
  return v;
}

std::vector<double> invariant_weights_to_mu(std::span<const double> w) {
  const std::size_t K = w.size();
  std::vector<double> mu(K, 0.0);
  if (K == 0)
    return mu;
  mu[K - 1] = w[K - 1];
  // d * mu(d) = sum_{j >= d, j < K} w_j / H_j
  double level = 0.0;
  std::vector<double> h(K, 0.0);
  double acc = 0.0;
  for (std::size_t j = 1; j < K; ++j)
    h[j - 1] = (acc += 1.0 / static_cast<double>(j));
  for (std::size_t d = K - 1; d >= 1; --d) {
    level += w[d - 1] / h[d - 1];
    mu[d - 1] += level / static_cast<double>(d);
  }
  return mu;
}

std::vector<double> mu_to_invariant_weights(std::span<const double> mu) {
  const std::size_t K = mu.size();
  std::vector<double> w(K, 0.0);
  if (K == 0)
    return w;
  w[K - 1] = mu[K - 1];
  double acc = 0.0;
  for (std::size_t j = 1; j < K; ++j) {
    acc += 1.0 / static_cast<double>(j);
    const double vj = static_cast<double>(j) * mu[j - 1];
    const double vnext = j + 1 < K ? static_cast<double>(j + 1) * mu[j] : 0.0;
    w[j - 1] = (vj - vnext) * acc;
  }
  return w;
}

std::vector<double> project_to_simplex(std::span<const double> v) {
  std::vector<double> sorted(v.begin(), v.end());
  std::sort(sorted.begin(), sorted.end(), std::greater<>());
  double cumulative = 0.0, theta = 0.0;
  for (std::size_t r = 0; r < sorted.size(); ++r) {
    cumulative += sorted[r];
    const double candidate = (cumulative - 1.0) / static_cast<double>(r + 1);
    if (sorted[r] - candidate > 0.0)
      theta = candidate;
  }
  std::vector<double> out(v.size());
  for (std::size_t n = 0; n < v.size(); ++n)
    out[n] = std::max(v[n] - theta, 0.0);
  return out;
}

namespace {

constexpr double kMuOneFloor = 1e-6;

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t n = 0; n < a.size(); ++n)
    s += a[n] * b[n];
  return s;
}

// Chain rule through mu = B w.
std::vector<double> weights_gradient(std::span<const double> grad_mu) {
  const std::size_t K = grad_mu.size();
  std::vector<double> g(K, 0.0);
  g[K - 1] = grad_mu[K - 1];
  double acc = 0.0, h = 0.0;
  for (std::size_t j = 1; j < K; ++j) {
    acc += grad_mu[j - 1] / static_cast<double>(j);
    h += 1.0 / static_cast<double>(j);
    g[j - 1] = acc / h;
  }
  return g;
}

struct LocalOptimum {
  std::vector<double> w;
  double value;
};

// P^rel_j and P^suc_j are linear in mu and mu is linear in the vertex
// weights, so per-vertex columns let a pairwise transfer be scored in O(K).
struct VertexModel {
  std::size_t K;
  std::vector<double> rel, suc; // [v * K + (j - 1)]
  std::vector<double> mu1;      // mu(1) of vertex v

  explicit VertexModel(const MeanFieldModel &m)
      : K(m.K()), rel(K * K, 0.0), suc(K * K, 0.0), mu1(K, 0.0) {
    for (std::size_t v = 0; v < K; ++v) {
      const auto mu = invariant_vertex(K, v + 1);
      mu1[v] = mu[0];
      for (std::size_t j = 1; j <= K; ++j) {
        double pr = 0.0, ps = 0.0;
        for (std::size_t d = 1; d <= j; ++d) {
          pr += m.rel(j, d) * mu[d - 1];
          ps += m.suc(j, d) * mu[d - 1];
        }
        rel[v * K + j - 1] = pr;
        suc[v * K + j - 1] = ps;
      }
    }
  }

  void aggregate(std::span<const double> w, std::vector<double> &pr,
                 std::vector<double> &ps) const {
    pr.assign(K, 0.0);
    ps.assign(K, 0.0);
    for (std::size_t v = 0; v < K; ++v)
      if (w[v] != 0.0)
        for (std::size_t j = 0; j < K; ++j) {
          pr[j] += w[v] * rel[v * K + j];
          ps[j] += w[v] * suc[v * K + j];
        }
  }

  double value(std::span<const double> pr, std::span<const double> ps, bool second_order) const {
    double running = 0.0;
    for (std::size_t j = 1; j <= K; ++j) {
      if (!(ps[j - 1] > 0.0))
        return std::numeric_limits<double>::infinity();
      const double x = running * pr[j - 1];
      double released = x;
      if (second_order)
        released -= 0.5 * x * x / static_cast<double>(K - j + 1);
      running += std::max(1.0 - released, 0.0) / ps[j - 1];
    }
    return running;
  }
};

double objective_at(const MeanFieldModel &model, std::span<const double> w, bool second_order) {
  const auto mu = invariant_weights_to_mu(w);
  if (mu[0] < kMuOneFloor)
    return std::numeric_limits<double>::infinity();
  return model.evaluate(mu, second_order).total;
}

// Projected gradient with Armijo backtracking. Stops when no step along
// the projected gradient improves, which happens both at stationary
// points and at kinks of the clamped objective.
void gradient_phase(const MeanFieldModel &model, LocalOptimum &x, const SearchConfig &config,
                    double smoothing, std::size_t restart, std::size_t &step_no,
                    std::vector<TraceRow> &trace) {
  std::vector<double> grad_mu;
  auto mu = invariant_weights_to_mu(x.w);
  x.value = model.value_and_gradient(mu, config.second_order, grad_mu, smoothing);
  double step = 1e-3;
  for (std::size_t iter = 1; iter <= config.max_iterations; ++iter) {
    const auto g = weights_gradient(grad_mu);
    bool moved = false;
    for (int attempt = 0; attempt < 60; ++attempt) {
      std::vector<double> trial(x.w.size());
      for (std::size_t n = 0; n < x.w.size(); ++n)
        trial[n] = x.w[n] - step * g[n];
      trial = project_to_simplex(trial);
      auto trial_mu = invariant_weights_to_mu(trial);
      if (trial_mu[0] >= kMuOneFloor) {
        std::vector<double> trial_grad;
        const double trial_value =
            model.value_and_gradient(trial_mu, config.second_order, trial_grad, smoothing);
        std::vector<double> delta(x.w.size());
        for (std::size_t n = 0; n < x.w.size(); ++n)
          delta[n] = x.w[n] - trial[n];
        if (trial_value <= x.value - 1e-4 * dot(g, delta) && trial_value < x.value) {
          const double improvement = x.value - trial_value;
          x.w = std::move(trial);
          grad_mu = std::move(trial_grad);
          x.value = trial_value;
          moved = improvement > 1e-13 * std::max(1.0, std::abs(x.value));
          step *= 2.0;
          break;
        }
      }
      step *= 0.5;
    }
    trace.push_back({restart, ++step_no, x.value});
    if (!moved)
      break;
  }
}

// Derivative-free polish: move mass between pairs of simplex vertices,
// shrinking the transfer size when a full sweep finds no improvement.
// Returns true if anything improved.
bool transfer_phase(const VertexModel &vm, LocalOptimum &x, const SearchConfig &config,
                    std::size_t restart, std::size_t &step_no, std::vector<TraceRow> &trace) {
  const std::size_t K = x.w.size();
  bool any = false;
  std::vector<double> pr, ps, tpr(K), tps(K);
  vm.aggregate(x.w, pr, ps);
  double m1 = 0.0;
  for (std::size_t v = 0; v < K; ++v)
    m1 += x.w[v] * vm.mu1[v];
  x.value = vm.value(pr, ps, config.second_order);
  for (double eps = 0.05; eps > 1e-10; eps *= 0.25) {
    for (bool improved = true; improved;) {
      improved = false;
      for (std::size_t a = 0; a < K; ++a) {
        for (std::size_t b = 0; b < K; ++b) {
          if (b == a || x.w[a] <= 0.0)
            continue;
          const double amount = std::min(eps, x.w[a]);
          if (m1 + amount * (vm.mu1[b] - vm.mu1[a]) < kMuOneFloor)
            continue;
          const double *ra = &vm.rel[a * K], *rb = &vm.rel[b * K];
          const double *sa = &vm.suc[a * K], *sb = &vm.suc[b * K];
          for (std::size_t j = 0; j < K; ++j) {
            tpr[j] = pr[j] + amount * (rb[j] - ra[j]);
            tps[j] = ps[j] + amount * (sb[j] - sa[j]);
          }
          const double v = vm.value(tpr, tps, config.second_order);
          if (v < x.value - 1e-13 * std::max(1.0, std::abs(x.value))) {
            x.w[a] -= amount;
            x.w[b] += amount;
            if (x.w[a] < 1e-15)
              x.w[a] = 0.0;
            m1 += amount * (vm.mu1[b] - vm.mu1[a]);
            pr.swap(tpr);
            ps.swap(tps);
            x.value = v;
            improved = any = true;
          }
        }
      }
      if (improved) {
        // Re-aggregate to keep incremental updates from drifting.
        vm.aggregate(x.w, pr, ps);
        x.value = vm.value(pr, ps, config.second_order);
        trace.push_back({restart, ++step_no, x.value});
      }
    }
  }
  return any;
}

LocalOptimum local_search(const MeanFieldModel &model, std::vector<double> w,
                          const SearchConfig &config, std::size_t restart,
                          std::vector<TraceRow> &trace) {
  const VertexModel vm(model);
  LocalOptimum x{std::move(w), 0.0};
  x.value = objective_at(model, x.w, config.second_order);
  std::size_t step_no = 0;
  trace.push_back({restart, 0, x.value});
  // Continuation on the clamp: the optimum typically sits where some t_j
  // just reaches zero, and a smoothed clamp lets descent follow that
  // curved valley instead of stalling on the kink.
  for (double tau : {1e-1, 3e-2, 1e-2, 3e-3, 1e-3, 3e-4, 1e-4, 1e-5})
    gradient_phase(model, x, config, tau, restart, step_no, trace);
  x.value = objective_at(model, x.w, config.second_order);
  for (int round = 0; round < 20; ++round) {
    gradient_phase(model, x, config, 0.0, restart, step_no, trace);
    if (!transfer_phase(vm, x, config, restart, step_no, trace))
      break;
  }
  return x;
}

} // namespace

SearchResult qps_search(std::size_t K, const SearchConfig &config) {
  config.validate();
  if (K == 0)
    throw RangeError("qps_search: K must be >= 1");
  if (K == 1)
    return {shifted_soliton_sequence(1), 1.0, {}};

  const MeanFieldModel model(K);
  std::mt19937_64 rng(config.seed);
  const auto ss_mu = shifted_soliton_sequence(K).last();
  const auto ss_w = project_to_simplex(mu_to_invariant_weights(ss_mu.mass()));

  std::vector<std::vector<double>> starts;
  starts.push_back(ss_w);
  starts.push_back(std::vector<double>(K, 1.0 / static_cast<double>(K)));
  while (starts.size() < config.restarts + 1) {
    // Geometric weights across the vertices, random ratio.
    const double ratio = 0.5 + 0.49 * to_unit(rng());
    std::vector<double> w(K);
    double total = 0.0;
    for (std::size_t j = 1; j <= K; ++j)
      total += (w[j - 1] = std::pow(ratio, static_cast<double>(j - 1)));
    for (double &x : w)
      x /= total;
    starts.push_back(std::move(w));
  }
  starts.resize(std::max<std::size_t>(config.restarts, 1));

  std::vector<LocalOptimum> optima(starts.size());
  std::vector<std::vector<TraceRow>> traces(starts.size());
  parallel_for(starts.size(), config.threads, [&](std::size_t r) {
    optima[r] = local_search(model, starts[r], config, r, traces[r]);
  });

  const double ss_value = model.evaluate(ss_mu.mass(), config.second_order).total;
  std::size_t best = 0;
  for (std::size_t r = 1; r < optima.size(); ++r)
    if (optima[r].value < optima[best].value)
      best = r;

  SearchResult result{shifted_soliton_sequence(1), 0.0, {}};
  for (auto &t : traces)
    result.trace.insert(result.trace.end(), t.begin(), t.end());

  std::vector<double> mu = invariant_weights_to_mu(optima[best].w);
  double value = optima[best].value;
  if (!(value <= ss_value)) {
    mu.assign(ss_mu.mass().begin(), ss_mu.mass().end());
    value = ss_value;
  }
  const double total = std::accumulate(mu.begin(), mu.end(), 0.0);
  for (double &m : mu)
    m /= total;
  result.sequence = expand_invariant(Xdd(std::move(mu)));
  result.objective = value;
  if (!check_feasible(result.sequence).feasible)
    throw InternalError("QPS produced an infeasible sequence");
  return result;
}

RobustSolitonTuning tune_robust_soliton(std::size_t K, std::size_t trials, std::uint64_t seed,
                                        unsigned threads) {
  if (K == 0 || trials == 0)
    throw RangeError("tune_robust_soliton: K and trials must be >= 1");
  std::vector<RobustSolitonTuning> grid;
  for (int c = 1; c <= 20; ++c)
    for (double delta : {0.1, 0.3, 0.5, 0.7, 0.9, 0.95, 0.99})
      grid.push_back({0.02 * c, delta, 0.0});
  parallel_for(grid.size(), threads, [&](std::size_t g) {
    grid[g].mean = lt_mean_efficiency(robust_soliton(K, grid[g].c, grid[g].delta), trials, seed);
  });
  return *std::min_element(grid.begin(), grid.end(),
                           [](const auto &a, const auto &b) { return a.mean < b.mean; });
}

std::vector<double> hrs_predecessor(const Xdd &mu_i, std::span<const double> gamma) {
  const std::size_t i = mu_i.k();
  if (gamma.size() != i - 1)
    throw RangeError("HRS slack vector has the wrong length");
  std::vector<double> prev(i - 1);
  for (std::size_t d = 1; d <= i - 1; ++d)
    prev[d - 1] = mu_i(d) * skip_binomial_factor(i, d) +
                  mu_i(d + 1) * add_binomial_factor(i, d) + gamma[d - 1];
  return prev;
}

SearchResult hrs_search(std::size_t K, const SearchConfig &config,
                        const std::optional<Xdd> &mu_K) {
  config.validate();
  if (K == 0)
    throw RangeError("hrs_search: K must be >= 1");
  Xdd last = mu_K ? *mu_K : robust_soliton(K);
  if (last.k() != K)
    throw RangeError("hrs_search: mu_K has the wrong block size");
  if (K == 1)
    return {XddSequence({last}), 1.0, {}};

  std::vector<Xdd> reversed{last};
  std::vector<TraceRow> trace;
  std::mt19937_64 rng(config.seed);
  for (std::size_t i = K; i >= 2; --i) {
    const Xdd &cur = reversed.back();
    const double budget = cur(1) / static_cast<double>(i);
    if (i == 2) {
      reversed.emplace_back(std::vector<double>{1.0});
      break;
    }
    // Dirichlet(1,...,1) draws scaled to the slack budget.
    std::vector<Xdd> candidates;
    candidates.reserve(config.candidates_per_hop);
    for (std::size_t c = 0; c < config.candidates_per_hop; ++c) {
      std::vector<double> gamma(i - 1);
      double total = 0.0;
      for (double &g : gamma)
        total += (g = -std::log1p(-to_unit(rng())));
      for (double &g : gamma)
        g *= budget / total;
      auto prev = hrs_predecessor(cur, gamma);
      const double s = std::accumulate(prev.begin(), prev.end(), 0.0);
      for (double &m : prev)
        m /= s;
      candidates.emplace_back(std::move(prev));
    }
    std::vector<double> scores(candidates.size());
    const std::uint64_t crn_seed = mix64(config.seed ^ (i * 0x9E3779B97F4A7C15ULL));
    parallel_for(candidates.size(), config.threads, [&](std::size_t c) {
      scores[c] = lt_mean_efficiency(candidates[c], config.trials_per_candidate, crn_seed);
    });
    std::size_t best = 0;
    for (std::size_t c = 0; c < scores.size(); ++c) {
      trace.push_back({i, c, scores[c]});
      if (scores[c] < scores[best])
        best = c;
    }
    reversed.push_back(std::move(candidates[best]));
  }
  std::reverse(reversed.begin(), reversed.end());
  SearchResult result{XddSequence(std::move(reversed)), 0.0, std::move(trace)};
  result.objective = lt_mean_efficiency(result.sequence.last(), config.trials_per_candidate,
                                        mix64(config.seed ^ 0x51ED270B27A4C5F1ULL));
  const auto report = check_feasible(result.sequence);
  if (!report.feasible)
    throw InternalError("HRS produced an infeasible sequence:\n" + report.describe());
  return result;
}

namespace {

using boost::multiprecision::cpp_int;

cpp_int binomial_exact(std::size_t n, std::size_t r) {
  cpp_int c = 1;
  for (std::size_t j = 1; j <= r; ++j)
    c = c * (n - r + j) / j;
  return c;
}

} // namespace

Rational verify_slack_budget(const std::vector<Rational> &mu_i) {
  const std::size_t i = mu_i.size();
  if (i < 2)
    return Rational(0);
  auto q = [&](std::size_t d) -> Rational {
    return mu_i[d - 1] / Rational(binomial_exact(i, d));
  };
  Rational used = 0;
  for (std::size_t d = 1; d <= i - 1; ++d)
    used += Rational(binomial_exact(i - 1, d)) * (q(d) + q(d + 1));
  return Rational(1) - used;
}

double verify_slack_budget(const Xdd &mu_i) {
  std::vector<Rational> exact;
  exact.reserve(mu_i.k());
  for (double m : mu_i.mass())
    exact.emplace_back(m);
  return static_cast<double>(verify_slack_budget(exact));
}

} // namespace recipe
