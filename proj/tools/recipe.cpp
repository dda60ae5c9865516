// recipe: command-line front end for the RECIPE code library.
//
// Exit codes: 0 ok, 1 usage, 2 validation/feasibility, 3 runtime.

#include "recipe/decoder.hpp"
#include "recipe/distributions.hpp"
#include "recipe/errors.hpp"
#include "recipe/evaluation.hpp"
#include "recipe/feasibility.hpp"
#include "recipe/io.hpp"
#include "recipe/search.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <iostream>
#include <map>
#include <sstream>

using namespace recipe;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

constexpr const char *kToolVersion = "0.1.0";

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Common {
  std::optional<std::uint64_t> seed;
  unsigned threads = 0;
  std::string out;
  std::vector<std::string> argv;

  std::uint64_t resolved_seed() const {
    if (seed)
      return *seed;
    if (const char *env = std::getenv("RECIPE_SEED")) {
      char *end = nullptr;
      const unsigned long long v = std::strtoull(env, &end, 0);
      if (!*env || *end)
        throw UsageError(std::string("RECIPE_SEED is not an integer: ") + env);
      return v;
    }
    return 1;
  }
};

std::string utc_now() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

// Writes content to path (atomically) plus a manifest beside it, or to
// stdout when no path is given.
void emit(const Common &common, const std::string &path, const std::string &content,
          const std::vector<std::string> &inputs, bool binary = false) {
  if (path.empty()) {
    if (binary)
      throw UsageError("binary output needs -o");
    std::cout << content;
    return;
  }
  io::write_atomic(path, content);
  json manifest;
  manifest["command"] = common.argv;
  manifest["seed"] = common.resolved_seed();
  manifest["threads"] = common.threads;
  manifest["tool_version"] = kToolVersion;
  manifest["timestamp"] = utc_now();
  manifest["output"] = {{"path", path}, {"digest", io::file_digest(path)}};
  json in = json::object();
  for (const auto &p : inputs)
    in[p] = io::file_digest(p);
  manifest["inputs"] = in;
  io::write_atomic(path + ".manifest.json", manifest.dump(2) + "\n");
}

void add_common(CLI::App *app, Common &c, bool with_out = true) {
  app->add_option("--seed", c.seed, "Seed (falls back to $RECIPE_SEED, then 1)");
  app->add_option("--threads", c.threads, "Worker threads (0 = all cores)");
  if (with_out)
    app->add_option("-o,--out", c.out, "Output file (default: stdout)");
}

// Scheme selection shared by simulate, decode and evaluate.
struct SchemeArgs {
  std::string mode = "d";
  std::string seq, apa, avst;
  std::size_t L = 30000;
  std::optional<std::uint64_t> avst_seed;
  double alpha = 0.0, p = 0.0;
  std::string zero_policy = "emit";

  void add(CLI::App *app) {
    app->add_option("--mode", mode, "Coding scheme: d (RECIPE-d), t (RECIPE-t) or pint")
        ->check(CLI::IsMember({"d", "t", "pint"}));
    app->add_option("--seq", seq, "XDD-sequence JSON (d/t modes)");
    app->add_option("--apa", apa, "APA JSON (d mode; t mode digest check)");
    app->add_option("--avst", avst, "AVST table (t mode)");
    app->add_option("--L", L, "AVST rows when generating from --seq/--apa in t mode");
    app->add_option("--avst-seed", avst_seed, "AVST generation seed (default: --seed)");
    app->add_option("--alpha", alpha, "PINT reservoir weight");
    app->add_option("--p", p, "PINT per-hop XOR probability");
    app->add_option("--zero-policy", zero_policy, "PINT empty codewords: emit or condition")
        ->check(CLI::IsMember({"emit", "condition"}));
  }

  std::vector<std::string> inputs() const {
    std::vector<std::string> v;
    for (const auto *s : {&seq, &apa, &avst})
      if (!s->empty())
        v.push_back(*s);
    return v;
  }

  std::shared_ptr<const Apa> load_apa() const {
    if (!apa.empty())
      return std::make_shared<const Apa>(io::read_apa(apa));
    if (!seq.empty())
      return std::make_shared<const Apa>(derive_apa(io::read_sequence(seq)));
    throw UsageError("mode " + mode + " needs --seq or --apa");
  }

  Scheme build(std::uint64_t seed) const {
    if (mode == "d")
      return RecipeDScheme{load_apa()};
    if (mode == "t") {
      if (!avst.empty()) {
        auto table = std::make_shared<const Avst>(io::read_avst(avst));
        std::optional<std::uint64_t> digest;
        if (!apa.empty() || !seq.empty())
          digest = load_apa()->digest();
        return RecipeTScheme{table, digest};
      }
      auto a = load_apa();
      auto table = std::make_shared<const Avst>(generate_avst(*a, L, avst_seed.value_or(seed)));
      return RecipeTScheme{table, a->digest()};
    }
    PintParams params{alpha, p};
    params.validate();
    return PintScheme{params, zero_policy == "condition" ? PintZeroPolicy::Condition
                                                         : PintZeroPolicy::EmitAndDiscard};
  }
};

std::string hex(Word w) {
  char buf[24];
  std::snprintf(buf, sizeof buf, "0x%08llx", static_cast<unsigned long long>(w));
  return buf;
}

std::string join(const std::vector<std::uint32_t> &v) {
  std::string s = "{";
  for (std::size_t n = 0; n < v.size(); ++n)
    s += (n ? "," : "") + std::to_string(v[n]);
  return s + "}";
}

void print_report(const FeasibilityReport &report) {
  std::string text = report.describe();
  if (text.empty() || text.back() != '\n')
    text += '\n';
  std::cout << text;
}

// ---- subcommands ---------------------------------------------------------

struct DistArgs {
  std::string name;
  std::size_t K = 0;
  double alpha = 0.0, p = 0.5, c = 0.1, delta = 0.5;
};

int run_dist(const Common &common, const DistArgs &a) {
  XddSequence seq = [&] {
    if (a.name == "shifted-soliton")
      return shifted_soliton_sequence(a.K);
    if (a.name == "ideal-soliton")
      return ideal_soliton_sequence(a.K);
    if (a.name == "robust-soliton") {
      std::vector<Xdd> x;
      for (std::size_t k = 1; k <= a.K; ++k)
        x.push_back(robust_soliton(k, a.c, a.delta));
      return XddSequence(std::move(x));
    }
    if (a.name == "robust-soliton-invariant")
      return expand_invariant(robust_soliton(a.K, a.c, a.delta));
    PintParams params{a.alpha, a.p};
    params.validate();
    return pint_sequence(a.K, params);
  }();
  emit(common, common.out, io::sequence_to_json(seq), {});
  return 0;
}

int run_check(const std::string &path) {
  const auto seq = io::read_sequence(path);
  const auto report = check_feasible(seq);
  print_report(report);
  if (!report.feasible)
    return 2;
  if (seq.K() >= 3 && check_invariant_feasible(seq.last()).feasible) {
    bool invariant = true;
    for (std::size_t i = 2; i < seq.K() && invariant; ++i)
      for (std::size_t d = 1; d < i; ++d)
        if (std::abs(seq[i](d) - seq.last()(d)) > 1e-12)
          invariant = false;
    if (invariant)
      std::cout << "sequence is invariant\n";
  }
  return 0;
}

int run_derive_apa(const Common &common, const std::string &path) {
  const Apa apa = derive_apa(io::read_sequence(path));
  emit(common, common.out, io::apa_to_json(apa), {path});
  return 0;
}

int run_gen_avst(const Common &common, const std::string &apa_path, std::size_t L) {
  const Apa apa = io::read_apa(apa_path);
  const Avst avst = generate_avst(apa, L, common.resolved_seed());
  std::ostringstream buf(std::ios::binary);
  avst.write(buf);
  emit(common, common.out, buf.str(), {apa_path}, true);
  return 0;
}

int run_simulate(const Common &common, const SchemeArgs &s, std::size_t k,
                 const std::string &codewords_path) {
  const std::uint64_t seed = common.resolved_seed();
  const Scheme scheme = s.build(seed);
  InstanceTrace trace;
  const TrialResult r = run_instance(k, scheme, seed, &trace);

  std::ostringstream out;
  out << "# k=" << k << " seed=" << seed << "\n";
  for (std::size_t h = 0; h < trace.ids.size(); ++h)
    out << "switch " << h + 1 << " id " << hex(trace.ids[h].value()) << "\n";
  std::string jsonl;
  for (std::size_t n = 0; n < trace.packets.size(); ++n) {
    const auto &p = trace.packets[n];
    out << "packet " << n + 1 << " id " << p.packet_id << " codeword " << hex(p.codeword)
        << " xor_set " << join(p.xor_set);
    if (!p.resolved.empty())
      out << " resolves " << join(p.resolved);
    out << "\n";
    jsonl += json{{"packet_id", p.packet_id}, {"codeword", p.codeword}}.dump() + "\n";
  }
  out << "used " << r.used << "\ncompleted " << (r.completed ? "true" : "false")
      << "\ncorrect " << (r.correct ? "true" : "false") << "\n";
  emit(common, common.out, out.str(), s.inputs());
  if (!codewords_path.empty())
    emit(common, codewords_path, jsonl, s.inputs());
  return 0;
}

int run_decode(const Common &common, const SchemeArgs &s, std::size_t k,
               const std::string &in_path) {
  const std::uint64_t seed = common.resolved_seed();
  const Scheme scheme = s.build(seed);
  const GlobalHash gh = instance_hash(seed);
  std::istringstream in(io::read_text(in_path));
  std::vector<ReceivedCodeword> stream;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos)
      continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception &e) {
      throw ValidationError("line " + std::to_string(line_no) + ": " + e.what());
    }
    if (!j.contains("packet_id") || !j.contains("codeword") ||
        !j["packet_id"].is_number_unsigned() || !j["codeword"].is_number_unsigned())
      throw ValidationError("line " + std::to_string(line_no) +
                            ": expected {\"packet_id\": uint, \"codeword\": uint}");
    ReceivedCodeword cw;
    cw.packet_id = j["packet_id"].get<std::uint64_t>();
    cw.codeword = j["codeword"].get<Word>();
    cw.path_length = k;
    cw.xor_set = replay_xor_set(cw.packet_id, k, scheme, gh);
    stream.push_back(std::move(cw));
  }
  const DecodeResult r = decode_stream(stream, k);
  std::ostringstream out;
  for (const auto &[hop, id] : r.ids)
    out << "hop " << hop << " id " << hex(id.value()) << "\n";
  out << "used " << r.used << "\ncomplete " << (r.complete ? "true" : "false") << "\n";
  emit(common, common.out, out.str(), {in_path});
  return 0;
}

struct SearchArgs {
  std::size_t K = 0;
  SearchConfig config;
  std::string trace, mu_file;
  double c = 0.1, delta = 0.5;
  std::size_t tune_trials = 0;
};

int run_search(const Common &common, const SearchArgs &a, bool hrs) {
  SearchConfig config = a.config;
  config.seed = common.resolved_seed();
  config.threads = common.threads;
  SearchResult r = [&] {
    if (!hrs)
      return qps_search(a.K, config);
    std::optional<Xdd> start;
    if (!a.mu_file.empty()) {
      start = io::read_sequence(a.mu_file).last();
    } else if (a.tune_trials) {
      const auto t = tune_robust_soliton(a.K, a.tune_trials, config.seed, config.threads);
      std::fprintf(stderr, "robust soliton c=%.2f delta=%.2f mean %.4f\n", t.c, t.delta, t.mean);
      start = robust_soliton(a.K, t.c, t.delta);
    } else {
      start = robust_soliton(a.K, a.c, a.delta);
    }
    return hrs_search(a.K, config, start);
  }();
  std::vector<std::string> inputs;
  if (!a.mu_file.empty())
    inputs.push_back(a.mu_file);
  emit(common, common.out, io::sequence_to_json(r.sequence), inputs);
  std::string trace_path = a.trace;
  if (trace_path.empty() && !common.out.empty())
    trace_path = common.out + ".trace.csv";
  if (!trace_path.empty()) {
    std::ostringstream csv;
    write_trace_csv(csv, r.trace);
    emit(common, trace_path, csv.str(), inputs);
  }
  std::fprintf(stderr, "objective %.17g\n", r.objective);
  return 0;
}

struct EvaluateArgs {
  std::size_t K = 0;
  std::size_t trials = 10000;
  std::vector<std::size_t> ks;
  std::string label;
};

int run_evaluate(const Common &common, const SchemeArgs &s, const EvaluateArgs &a) {
  const std::uint64_t seed = common.resolved_seed();
  const Scheme scheme = s.build(seed);
  const std::size_t K = a.K ? a.K : scheme_diameter(scheme);
  if (K > scheme_diameter(scheme))
    throw RangeError("--K exceeds the scheme's diameter");
  CurveOptions o;
  o.trials = a.trials;
  o.seed = seed;
  o.threads = common.threads;
  o.ks = a.ks;
  std::string label = a.label;
  if (label.empty())
    label = s.mode == "d" ? "recipe-d" : s.mode == "t" ? "recipe-t" : "pint";
  const auto curve = efficiency_curve(scheme, K, label, o);
  std::ostringstream csv;
  write_curve_csv(csv, {curve});
  emit(common, common.out, csv.str(), s.inputs());
  return 0;
}

// Joins long-format curve CSVs into one wide table keyed by k.
int run_compare(const Common &common, const std::vector<std::string> &paths) {
  struct Cell {
    std::string mean, stderr_, q99, incomplete;
  };
  std::vector<std::string> labels;
  std::map<std::size_t, std::map<std::string, Cell>> rows;
  for (const auto &path : paths) {
    std::istringstream in(io::read_text(path));
    std::string line;
    if (!std::getline(in, line) || line != "scheme,K,k,trials,mean,stderr,q99,incomplete_rate")
      throw ValidationError(path + ": not a curve CSV");
    while (std::getline(in, line)) {
      if (line.empty())
        continue;
      std::vector<std::string> f;
      std::istringstream ls(line);
      for (std::string x; std::getline(ls, x, ',');)
        f.push_back(x);
      if (f.size() != 8)
        throw ValidationError(path + ": malformed row: " + line);
      const std::string label = f[0] + "@K" + f[1];
      if (std::find(labels.begin(), labels.end(), label) == labels.end())
        labels.push_back(label);
      rows[std::stoul(f[2])][label] = {f[4], f[5], f[6], f[7]};
    }
  }
  std::ostringstream out;
  out << "k";
  for (const auto &l : labels)
    out << "," << l << ":mean," << l << ":stderr," << l << ":q99," << l << ":incomplete_rate";
  out << "\n";
  for (const auto &[k, cells] : rows) {
    out << k;
    for (const auto &l : labels) {
      auto it = cells.find(l);
      if (it == cells.end())
        out << ",,,,";
      else
        out << "," << it->second.mean << "," << it->second.stderr_ << "," << it->second.q99
            << "," << it->second.incomplete;
    }
    out << "\n";
  }
  emit(common, common.out, out.str(), paths);
  return 0;
}

} // namespace

int main(int argc, char **argv) {
  CLI::App app{"RECIPE distributed rateless erasure codes"};
  app.require_subcommand(1);
  Common common;
  common.argv.assign(argv, argv + argc);

  DistArgs dist;
  auto *dist_cmd = app.add_subcommand("dist", "Write a named XDD sequence");
  dist_cmd->add_option("name", dist.name)
      ->required()
      ->check(CLI::IsMember({"shifted-soliton", "ideal-soliton", "robust-soliton",
                             "robust-soliton-invariant", "pint"}));
  dist_cmd->add_option("--K", dist.K, "Diameter")->required();
  dist_cmd->add_option("--alpha", dist.alpha, "PINT reservoir weight");
  dist_cmd->add_option("--p", dist.p, "PINT per-hop XOR probability");
  dist_cmd->add_option("--c", dist.c, "Robust Soliton c");
  dist_cmd->add_option("--delta", dist.delta, "Robust Soliton delta");
  add_common(dist_cmd, common);

  std::string seq_path;
  auto *check_cmd = app.add_subcommand("check", "Check RECIPE feasibility of a sequence");
  check_cmd->add_option("seq", seq_path)->required();

  auto *apa_cmd = app.add_subcommand("derive-apa", "Derive the action probability array");
  apa_cmd->add_option("seq", seq_path)->required();
  add_common(apa_cmd, common);

  std::string apa_path;
  std::size_t L = 30000;
  auto *avst_cmd = app.add_subcommand("gen-avst", "Generate an action vector sample table");
  avst_cmd->add_option("--apa", apa_path)->required();
  avst_cmd->add_option("--L", L, "Rows");
  add_common(avst_cmd, common);

  SchemeArgs scheme;
  std::size_t k = 0;
  std::string codewords_path;
  auto *sim_cmd = app.add_subcommand("simulate", "Run one coding instance with a verbose trace");
  scheme.add(sim_cmd);
  sim_cmd->add_option("--k", k, "Path length")->required();
  sim_cmd->add_option("--codewords", codewords_path, "Also write delivered codewords (JSONL)");
  add_common(sim_cmd, common);

  std::string in_path;
  auto *dec_cmd = app.add_subcommand("decode", "Decode a JSONL codeword stream");
  scheme.add(dec_cmd);
  dec_cmd->add_option("--k", k, "Path length")->required();
  dec_cmd->add_option("--in", in_path, "Codewords, one {packet_id, codeword} per line")
      ->required();
  add_common(dec_cmd, common);

  SearchArgs search;
  auto *search_cmd = app.add_subcommand("search", "Search for efficient codes");
  search_cmd->require_subcommand(1);
  auto *qps_cmd = search_cmd->add_subcommand("qps", "Mean-field search over invariant codes");
  qps_cmd->add_option("--K", search.K)->required();
  qps_cmd->add_option("--restarts", search.config.restarts);
  qps_cmd->add_option("--max-iterations", search.config.max_iterations);
  qps_cmd->add_flag("--second-order", search.config.second_order);
  qps_cmd->add_option("--trace", search.trace, "Objective trace CSV (default: <out>.trace.csv)");
  add_common(qps_cmd, common);
  auto *hrs_cmd = search_cmd->add_subcommand("hrs", "Greedy reversed search");
  hrs_cmd->add_option("--K", search.K)->required();
  hrs_cmd->add_option("--candidates", search.config.candidates_per_hop);
  hrs_cmd->add_option("--trials", search.config.trials_per_candidate);
  hrs_cmd->add_option("--mu", search.mu_file, "Start from the last XDD of this sequence file");
  hrs_cmd->add_option("--c", search.c, "Robust Soliton c for the default start");
  hrs_cmd->add_option("--delta", search.delta, "Robust Soliton delta for the default start");
  hrs_cmd->add_option("--tune-rs", search.tune_trials,
                      "Grid-tune the Robust Soliton start with this many trials per point");
  hrs_cmd->add_option("--trace", search.trace, "Objective trace CSV (default: <out>.trace.csv)");
  add_common(hrs_cmd, common);

  EvaluateArgs eval;
  auto *eval_cmd = app.add_subcommand("evaluate", "Monte-Carlo coding-efficiency curve");
  scheme.add(eval_cmd);
  eval_cmd->add_option("--K", eval.K, "Evaluate k = 1..K (default: scheme diameter)");
  eval_cmd->add_option("--trials", eval.trials);
  eval_cmd->add_option("--ks", eval.ks, "Only these path lengths")->delimiter(',');
  eval_cmd->add_option("--label", eval.label, "Scheme label in the CSV");
  add_common(eval_cmd, common);

  std::vector<std::string> curves;
  auto *cmp_cmd = app.add_subcommand("compare", "Join curve CSVs into one wide table");
  cmp_cmd->add_option("curves", curves)->required();
  add_common(cmp_cmd, common);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }

  try {
    if (*dist_cmd)
      return run_dist(common, dist);
    if (*check_cmd)
      return run_check(seq_path);
    if (*apa_cmd)
      return run_derive_apa(common, seq_path);
    if (*avst_cmd)
      return run_gen_avst(common, apa_path, L);
    if (*sim_cmd)
      return run_simulate(common, scheme, k, codewords_path);
    if (*dec_cmd)
      return run_decode(common, scheme, k, in_path);
    if (*qps_cmd)
      return run_search(common, search, false);
    if (*hrs_cmd)
      return run_search(common, search, true);
    if (*eval_cmd)
      return run_evaluate(common, scheme, eval);
    if (*cmp_cmd)
      return run_compare(common, curves);
  } catch (const UsageError &e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 1;
  } catch (const FeasibilityError &e) {
    print_report(e.report());
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const ValidationError &e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const RangeError &e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const ConfigurationError &e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception &e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 1;
}
