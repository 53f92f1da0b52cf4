#include "harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <set>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "aim/bounds.hpp"
#include "aim/graph.hpp"
#include "aim/mintss.hpp"
#include "aim/parallel.hpp"
#include "aim/policy.hpp"
#include "aim/random.hpp"
#include "aim/rrset.hpp"
#include "aim/smbo.hpp"
#include "aim/world.hpp"

namespace aim::cli {

namespace {

using nlohmann::json;

constexpr const char* kToolVersion = "0.1.0";
constexpr int kSchemaRevision = 1;

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Options {
  std::uint64_t seed = 1;
  std::size_t workers = 0;
  std::string config;

  struct {
    std::string input;
    std::string synthetic;
    std::size_t n = 1000;
    double density = 0.005;
    double p = 0.1;
    std::size_t layers = 3;
    std::size_t width = 2;
    std::size_t neighbors = 4;
    double rewire = 0.1;
    bool weighted_cascade = false;
    bool labels = false;
    std::string out;
  } prepare;

  struct {
    std::string graph;
    std::string k_list = "1,10,20,50,100";
    std::size_t batch = 1;
    std::string regen = "full";
    std::size_t lazy_threshold = 10;
    double epsilon = 0.1;
    std::size_t worlds = 100;
    std::size_t rr_count = 0;
    Step horizon = 0;
    std::string out;
  } im;

  struct {
    std::string graph;
    std::string q_fractions = "0.05,0.1,0.2,0.3";
    std::string batch_list = "1,10,50,100";
    double beta = 0.5;
    std::string regen = "full";
    std::size_t lazy_threshold = 10;
    double epsilon = 0.2;
    std::size_t worlds = 100;
    std::size_t rr_count = 0;
    Step horizon = 0;
    std::string out;
  } mintss;

  struct {
    std::string q_range = "10:1000:10";
    double alpha = 1.0;
    double epsilon = 0.0;
    double beta_ga = 2.0;
    double beta_ona = 1.0;
    double beta_gna = 2.0;
    std::string out;
  } bounds;

  struct {
    double p = 0.5;
    std::string out;
  } counterexample;

  struct {
    std::string graph;
    std::string problem = "mintss";
    std::size_t k = 10;
    double q_fraction = 0.1;
    std::size_t q = 0;
    std::size_t complexity = 1;
    std::string horizons = "10";
    std::string strategy = "smbo";
    std::size_t evaluations = 500;
    std::size_t train = 1000;
    std::size_t test = 50;
    double surrogate_cap = 100.0;
    std::string penalty = "hinge";
    double lambda1 = 10.0;
    double lambda2 = 1.0;
    std::size_t s_max = 0;
    double epsilon = 0.1;
    std::size_t rr_count = 0;
    std::string log;
    std::string out;
  } tune;

  struct {
    std::string graph;
  } selftest;
};

void build_app(CLI::App& app, Options& o) {
  app.require_subcommand(1);
  app.fallthrough();
  app.add_option("--seed", o.seed, "master seed");
  app.add_option("--workers", o.workers, "worker threads (0 = hardware concurrency)")
      ->envname("AIM_WORKERS");
  app.add_option("--config", o.config, "flat key=value file; flags win");

  auto* prep = app.add_subcommand("prepare", "ingest or generate a graph and assign probabilities");
  prep->add_option("input", o.prepare.input, "edge list \"src dst [p]\"");
  prep->add_option("--synthetic", o.prepare.synthetic, "er | dag | small-world");
  prep->add_option("--n", o.prepare.n);
  prep->add_option("--density", o.prepare.density);
  prep->add_option("--p", o.prepare.p, "probability on generated edges");
  prep->add_option("--layers", o.prepare.layers);
  prep->add_option("--width", o.prepare.width);
  prep->add_option("--neighbors", o.prepare.neighbors);
  prep->add_option("--rewire", o.prepare.rewire);
  prep->add_flag("--weighted-cascade", o.prepare.weighted_cascade, "p(u,v) = 1 / in-degree(v)");
  prep->add_flag("--labels", o.prepare.labels, "input ids are arbitrary labels");
  prep->add_option("--out", o.prepare.out)->required();

  auto* im = app.add_subcommand("run-im", "adaptive vs non-adaptive influence maximization sweep");
  im->add_option("graph", o.im.graph)->required();
  im->add_option("--k-list", o.im.k_list);
  im->add_option("--batch", o.im.batch);
  im->add_option("--regen", o.im.regen, "full | lazy");
  im->add_option("--lazy-threshold", o.im.lazy_threshold);
  im->add_option("--epsilon", o.im.epsilon);
  im->add_option("--worlds", o.im.worlds);
  im->add_option("--rr-count", o.im.rr_count, "pin the RR index size (0 = sized)");
  im->add_option("--horizon", o.im.horizon, "0 = unbounded");
  im->add_option("--out", o.im.out);

  auto* ms = app.add_subcommand("run-mintss", "MINTSS sweep over target fractions and batch sizes");
  ms->add_option("graph", o.mintss.graph)->required();
  ms->add_option("--q-fractions", o.mintss.q_fractions);
  ms->add_option("--batch-list", o.mintss.batch_list);
  ms->add_option("--beta", o.mintss.beta, "non-adaptive shortfall");
  ms->add_option("--regen", o.mintss.regen);
  ms->add_option("--lazy-threshold", o.mintss.lazy_threshold);
  ms->add_option("--epsilon", o.mintss.epsilon);
  ms->add_option("--worlds", o.mintss.worlds);
  ms->add_option("--rr-count", o.mintss.rr_count);
  ms->add_option("--horizon", o.mintss.horizon);
  ms->add_option("--out", o.mintss.out);

  auto* bp = app.add_subcommand("bounds-plot", "tabulate the MINTSS seed bounds over Q");
  bp->add_option("--q-range", o.bounds.q_range, "lo:hi:step");
  bp->add_option("--alpha", o.bounds.alpha);
  bp->add_option("--epsilon", o.bounds.epsilon);
  bp->add_option("--beta-ga", o.bounds.beta_ga);
  bp->add_option("--beta-ona", o.bounds.beta_ona);
  bp->add_option("--beta-gna", o.bounds.beta_gna);
  bp->add_option("--out", o.bounds.out);

  auto* ce = app.add_subcommand("counterexample", "non-submodularity witness under incomplete diffusion");
  ce->add_option("--p", o.counterexample.p);
  ce->add_option("--out", o.counterexample.out);

  auto* tu = app.add_subcommand("tune", "search bounded-horizon policy schedules");
  tu->add_option("graph", o.tune.graph)->required();
  tu->add_option("--problem", o.tune.problem, "im | mintss");
  tu->add_option("--k", o.tune.k);
  tu->add_option("--q-fraction", o.tune.q_fraction);
  tu->add_option("--q", o.tune.q, "absolute target (overrides --q-fraction)");
  tu->add_option("--complexity", o.tune.complexity, "number of (seeds, wait) pairs");
  tu->add_option("--horizons", o.tune.horizons, "comma-separated T values");
  tu->add_option("--strategy", o.tune.strategy, "smbo | random");
  tu->add_option("--evaluations", o.tune.evaluations);
  tu->add_option("--train", o.tune.train);
  tu->add_option("--test", o.tune.test);
  tu->add_option("--surrogate-cap", o.tune.surrogate_cap, "seconds");
  tu->add_option("--penalty", o.tune.penalty, "hinge | linear");
  tu->add_option("--lambda1", o.tune.lambda1);
  tu->add_option("--lambda2", o.tune.lambda2);
  tu->add_option("--s-max", o.tune.s_max, "0 = min(100, n)");
  tu->add_option("--epsilon", o.tune.epsilon);
  tu->add_option("--rr-count", o.tune.rr_count);
  tu->add_option("--log", o.tune.log, "history JSONL");
  tu->add_option("--out", o.tune.out);

  auto* st = app.add_subcommand("selftest", "small-instance oracle checks");
  st->add_option("--graph", o.selftest.graph, "also ingest this file");
}

std::vector<std::string> split(const std::string& text, char sep) {
  std::vector<std::string> parts;
  std::string item;
  std::istringstream in(text);
  while (std::getline(in, item, sep)) {
    if (!item.empty()) parts.push_back(item);
  }
  return parts;
}

template <typename T>
std::vector<T> parse_list(const std::string& text, const char* what) {
  std::vector<T> values;
  for (const std::string& item : split(text, ',')) {
    std::istringstream in(item);
    T v{};
    if (!(in >> v) || !in.eof()) throw UsageError(std::string("bad value in ") + what + ": " + item);
    values.push_back(v);
  }
  if (values.empty()) throw UsageError(std::string(what) + " is empty");
  return values;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::map<std::string, std::string> read_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open config file " + path);
  std::map<std::string, std::string> kv;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    line = trim(line.substr(0, line.find('#')));
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw UsageError(path + ":" + std::to_string(lineno) + ": expected key=value");
    }
    std::string key = trim(line.substr(0, eq));
    std::replace(key.begin(), key.end(), '_', '-');
    kv[key] = trim(line.substr(eq + 1));
  }
  return kv;
}

bool option_given(CLI::App* app, const std::string& name) {
  CLI::Option* opt = app->get_option_no_throw("--" + name);
  return opt != nullptr && opt->count() > 0;
}

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex(std::uint64_t v) {
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << v;
  return os.str();
}

std::string utc_now() {
  const std::time_t t = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::ostringstream os;
  os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return os.str();
}

struct RunManifest {
  std::string command;
  std::string graph_path;
  std::uint64_t graph_hash = 0;
  std::uint64_t master_seed = 0;
  json params = json::object();
  double wall_seconds = 0.0;

  /// Identity of the run: everything except paths and timings.
  std::string hash() const {
    const json id = {{"command", command},
                     {"graph_hash", hex(graph_hash)},
                     {"master_seed", master_seed},
                     {"params", params},
                     {"schema_revision", kSchemaRevision},
                     {"tool_version", kToolVersion}};
    return hex(fnv1a(id.dump()));
  }

  json to_json() const {
    return {{"command", command},
            {"graph_path", graph_path},
            {"graph_hash", hex(graph_hash)},
            {"master_seed", master_seed},
            {"params", params},
            {"schema_revision", kSchemaRevision},
            {"tool_version", kToolVersion},
            {"manifest_hash", hash()},
            {"finished_utc", utc_now()},
            {"wall_seconds", wall_seconds}};
  }
};

void write_atomic(const std::string& path, const std::string& text) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << text;
    if (!out.flush()) throw std::runtime_error("write failed for " + path);
  }
  std::filesystem::rename(tmp, path);
}

/// Writes the finished output (or prints it for "-"/empty) plus its manifest.
void emit(const std::string& path, const std::string& text, const RunManifest& manifest,
          std::ostream& out) {
  if (path.empty() || path == "-") {
    out << text;
    return;
  }
  write_atomic(path, text);
  write_atomic(path + ".manifest.json", manifest.to_json().dump(2) + "\n");
}

std::string with_manifest_column(const std::string& csv, const std::string& hash) {
  std::istringstream in(csv);
  std::ostringstream out;
  std::string line;
  bool header = true;
  while (std::getline(in, line)) {
    out << line << ',' << (header ? std::string("manifest") : hash) << '\n';
    header = false;
  }
  return out.str();
}

std::string fmt(double x) {
  std::ostringstream os;
  os.precision(10);
  os << x;
  return os.str();
}

ProbGraph load_probabilistic(const std::string& path) {
  LoadedGraph lg = load_edge_list_file(path);
  if (lg.graph.unassigned_count() != 0) {
    throw GraphError(path + ": " + std::to_string(lg.graph.unassigned_count()) +
                     " edges have no probability; run prepare --weighted-cascade first");
  }
  return std::move(lg.graph);
}

RegenPolicy parse_regen(const std::string& name, std::size_t threshold) {
  if (name == "full") return RegenPolicy::full();
  if (name == "lazy") return RegenPolicy::lazy(threshold);
  throw UsageError("regen must be full or lazy");
}

Horizon horizon_of(Step t) { return t == 0 ? Horizon::unbounded() : Horizon::bounded(t); }

IndexOptions index_options(double epsilon, std::size_t rr_count) {
  IndexOptions o;
  o.epsilon = epsilon;
  if (rr_count > 0) o.rr_count = rr_count;
  return o;
}

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

int cmd_prepare(const Options& o, std::ostream& out) {
  const auto start = Clock::now();
  const auto& p = o.prepare;
  if (p.input.empty() == p.synthetic.empty()) {
    throw UsageError("prepare needs exactly one of an input file or --synthetic");
  }
  RunManifest m;
  m.command = "prepare";
  m.master_seed = o.seed;
  ProbGraph g;
  std::vector<std::string> labels;
  if (!p.input.empty()) {
    LoadedGraph lg = load_edge_list_file(p.input, p.labels ? IdMode::Labels : IdMode::Dense);
    g = std::move(lg.graph);
    labels = std::move(lg.labels);
    m.graph_path = p.input;
    m.params = {{"weighted_cascade", p.weighted_cascade}, {"labels", p.labels}};
  } else {
    SyntheticParams sp;
    sp.n = p.n;
    sp.density = p.density;
    sp.p = p.p;
    sp.layers = p.layers;
    sp.width = p.width;
    sp.neighbors = p.neighbors;
    sp.rewire = p.rewire;
    g = generate_synthetic(parse_synthetic_model(p.synthetic), sp, o.seed);
    m.params = {{"synthetic", p.synthetic}, {"n", p.n},           {"density", p.density},
                {"p", p.p},                 {"layers", p.layers}, {"width", p.width},
                {"neighbors", p.neighbors}, {"rewire", p.rewire}, {"weighted_cascade", p.weighted_cascade}};
  }
  if (p.weighted_cascade) g = assign_weighted_cascade(g);
  if (g.unassigned_count() != 0) {
    throw GraphError(std::to_string(g.unassigned_count()) +
                     " edges have no probability; pass --weighted-cascade or give p per edge");
  }
  m.graph_hash = g.hash();

  std::ostringstream text;
  write_edge_list(text, g);
  m.wall_seconds = seconds_since(start);
  write_atomic(p.out, text.str());
  if (!labels.empty()) {
    std::ostringstream lm;
    write_label_map(lm, labels);
    write_atomic(p.out + ".labels", lm.str());
  }
  write_atomic(p.out + ".manifest.json", m.to_json().dump(2) + "\n");

  const GraphStats s = depth_bound(g);
  out << "n=" << s.n << " m=" << s.m << " hash=" << hex(g.hash())
      << " max_in_degree=" << s.max_in_degree << " depth_bound=" << s.diffusion_depth_bound
      << (s.exact ? " (dag)" : "") << '\n';
  return 0;
}

int cmd_run_im(const Options& o, std::ostream& out) {
  const auto start = Clock::now();
  const auto& p = o.im;
  const ProbGraph g = load_probabilistic(p.graph);
  const auto ks = parse_list<std::size_t>(p.k_list, "k-list");
  const RegenPolicy regen = parse_regen(p.regen, p.lazy_threshold);

  std::vector<std::pair<PolicySpec, PolicySpec>> plan;
  for (std::size_t k : ks) {
    PolicySpec na;
    na.kind = PolicyKind::NonAdaptive;
    na.budget = k;
    na.batch = k;
    na.horizon = horizon_of(p.horizon);
    na.index = index_options(p.epsilon, p.rr_count);
    PolicySpec ga = na;
    ga.kind = PolicyKind::Adaptive;
    ga.batch = std::min(p.batch, k);
    ga.regen = regen;
    na.validate(g.n());
    ga.validate(g.n());
    plan.emplace_back(na, ga);
  }

  RunManifest m;
  m.command = "run-im";
  m.graph_path = p.graph;
  m.graph_hash = g.hash();
  m.master_seed = o.seed;
  m.params = {{"k_list", ks},         {"batch", p.batch},   {"regen", regen.name()},
              {"lazy_threshold", p.lazy_threshold},         {"epsilon", p.epsilon},
              {"worlds", p.worlds},   {"rr_count", p.rr_count}, {"horizon", p.horizon}};
  const std::string hash = m.hash();
  const std::string label = std::filesystem::path(p.graph).stem().string();

  std::ostringstream csv;
  csv << eval_csv_header() << ",policy,adaptivity_gain,gain_stderr,manifest\n";
  for (const auto& [na, ga] : plan) {
    const EvalReport base = evaluate(g, na, p.worlds, o.seed);
    const EvalReport adaptive = evaluate(g, ga, p.worlds, o.seed);
    const GainEstimate gain = adaptivity_gain(adaptive, base);
    csv << eval_csv_row(label, na, base) << ",GNA,1,0," << hash << '\n';
    csv << eval_csv_row(label, ga, adaptive) << ",GA," << fmt(gain.gain) << ','
        << fmt(gain.std_error) << ',' << hash << '\n';
  }
  m.wall_seconds = seconds_since(start);
  emit(p.out, csv.str(), m, out);
  return 0;
}

int cmd_run_mintss(const Options& o, std::ostream& out) {
  const auto start = Clock::now();
  const auto& p = o.mintss;
  const ProbGraph g = load_probabilistic(p.graph);
  const auto fractions = parse_list<double>(p.q_fractions, "q-fractions");
  const auto batches = parse_list<std::size_t>(p.batch_list, "batch-list");
  const RegenPolicy regen = parse_regen(p.regen, p.lazy_threshold);

  auto spec_for = [&](double fraction, std::size_t batch) {
    MintssSpec s;
    s.target = static_cast<std::size_t>(
        std::max<long long>(1, std::llround(fraction * static_cast<double>(g.n()))));
    s.beta = p.beta;
    s.batch = batch;
    s.horizon = horizon_of(p.horizon);
    s.regen = regen;
    s.index = index_options(p.epsilon, p.rr_count);
    s.validate(g.n());
    return s;
  };
  for (double f : fractions) {
    if (!(f > 0.0 && f <= 1.0)) throw UsageError("q-fractions must be in (0, 1]");
    for (std::size_t b : batches) spec_for(f, b);
  }

  RunManifest m;
  m.command = "run-mintss";
  m.graph_path = p.graph;
  m.graph_hash = g.hash();
  m.master_seed = o.seed;
  m.params = {{"q_fractions", fractions}, {"batch_list", batches}, {"beta", p.beta},
              {"regen", regen.name()},    {"lazy_threshold", p.lazy_threshold},
              {"epsilon", p.epsilon},     {"worlds", p.worlds},
              {"rr_count", p.rr_count},   {"horizon", p.horizon}};
  const std::string hash = m.hash();

  std::ostringstream csv;
  csv << mintss_csv_header() << ",policy,q_fraction,manifest\n";
  for (double f : fractions) {
    const MintssSpec base = spec_for(f, 1);
    const MintssReport na = evaluate_mintss(g, base, PolicyKind::NonAdaptive, p.worlds, o.seed);
    csv << mintss_csv_row(base, na) << ",GNA," << fmt(f) << ',' << hash << '\n';
    for (std::size_t b : batches) {
      const MintssSpec s = spec_for(f, b);
      const MintssReport r = evaluate_mintss(g, s, PolicyKind::Adaptive, p.worlds, o.seed);
      csv << mintss_csv_row(s, r) << ",GA," << fmt(f) << ',' << hash << '\n';
    }
  }
  m.wall_seconds = seconds_since(start);
  emit(p.out, csv.str(), m, out);
  return 0;
}

int cmd_bounds(const Options& o, std::ostream& out) {
  const auto start = Clock::now();
  const auto& p = o.bounds;
  bounds::BoundParams params = bounds::comparison_curve_params();
  params.alpha = p.alpha;
  params.epsilon = p.epsilon;
  params.beta_ga = p.beta_ga;
  params.beta_ona = p.beta_ona;
  params.beta_gna = p.beta_gna;
  const bounds::QRange range = bounds::parse_q_range(p.q_range);

  RunManifest m;
  m.command = "bounds-plot";
  m.master_seed = o.seed;
  m.params = {{"q_range", p.q_range}, {"alpha", p.alpha},       {"epsilon", p.epsilon},
              {"beta_ga", p.beta_ga}, {"beta_ona", p.beta_ona}, {"beta_gna", p.beta_gna},
              {"gamma", params.gamma}};
  std::ostringstream csv;
  bounds::emit_bound_curves(csv, range, params);
  m.wall_seconds = seconds_since(start);
  emit(p.out, with_manifest_column(csv.str(), m.hash()), m, out);
  return 0;
}

int cmd_counterexample(const Options& o, std::ostream& out) {
  const auto start = Clock::now();
  const bounds::CounterexampleWitness w = bounds::theorem3_counterexample(o.counterexample.p);
  RunManifest m;
  m.command = "counterexample";
  m.master_seed = o.seed;
  m.params = {{"p", o.counterexample.p}};
  std::ostringstream csv;
  csv << "p,sigma_s,sigma_s_w,sigma_s_prime,sigma_s_prime_w,gain_s,gain_s_prime,"
         "violates_submodularity,matches_closed_form,manifest\n";
  csv << fmt(w.p) << ',' << fmt(w.sigma_s) << ',' << fmt(w.sigma_s_w) << ','
      << fmt(w.sigma_s_prime) << ',' << fmt(w.sigma_s_prime_w) << ',' << fmt(w.gain_s) << ','
      << fmt(w.gain_s_prime) << ',' << (w.violates_submodularity ? 1 : 0) << ','
      << (w.matches_closed_form ? 1 : 0) << ',' << m.hash() << '\n';
  m.wall_seconds = seconds_since(start);
  emit(o.counterexample.out, csv.str(), m, out);
  if (!w.matches_closed_form) throw std::runtime_error("enumerated spreads disagree with the closed forms");
  return 0;
}

int cmd_tune(const Options& o, std::ostream& out) {
  const auto start = Clock::now();
  const auto& p = o.tune;
  const ProbGraph g = load_probabilistic(p.graph);
  const auto horizons = parse_list<Step>(p.horizons, "horizons");
  smbo::Strategy strategy;
  if (p.strategy == "smbo") {
    strategy = smbo::Strategy::Smbo;
  } else if (p.strategy == "random") {
    strategy = smbo::Strategy::RandomSearch;
  } else {
    throw UsageError("strategy must be smbo or random");
  }
  if (p.problem != "im" && p.problem != "mintss") throw UsageError("problem must be im or mintss");
  if (p.penalty != "hinge" && p.penalty != "linear") throw UsageError("penalty must be hinge or linear");
  const std::size_t q =
      p.q > 0 ? p.q
              : static_cast<std::size_t>(
                    std::max<long long>(1, std::llround(p.q_fraction * static_cast<double>(g.n()))));
  if (p.problem == "mintss" && q > g.n()) throw UsageError("target exceeds the node count");
  if (p.problem == "im" && (p.k < 1 || p.k > g.n())) throw UsageError("k must be in [1, n]");

  smbo::SearchSpace space = smbo::SearchSpace::for_graph(g, p.complexity);
  if (p.s_max > 0) space.s_max = p.s_max;
  smbo::TunerBudget budget;
  budget.max_evaluations = p.evaluations;
  budget.train_instances = p.train;
  budget.test_instances = p.test;
  budget.surrogate_time_cap = p.surrogate_cap;

  RunManifest m;
  m.command = "tune";
  m.graph_path = p.graph;
  m.graph_hash = g.hash();
  m.master_seed = o.seed;
  m.params = {{"problem", p.problem},      {"k", p.k},
              {"q", q},                    {"complexity", p.complexity},
              {"horizons", horizons},      {"strategy", p.strategy},
              {"evaluations", p.evaluations}, {"train", p.train},
              {"test", p.test},            {"penalty", p.penalty},
              {"lambda1", p.lambda1},      {"lambda2", p.lambda2},
              {"s_max", space.s_max},      {"epsilon", p.epsilon},
              {"rr_count", p.rr_count}};
  // The surrogate time cap can change which configs are proposed, so it is
  // part of the run identity only when it can bind.
  if (p.surrogate_cap < 1e6) m.params["surrogate_cap"] = p.surrogate_cap;
  const std::string hash = m.hash();

  const auto train = smbo::training_instances(o.seed, p.train);
  const auto test = smbo::test_instances(o.seed, p.test);
  std::ostringstream csv;
  csv << smbo::report_csv_header() << ",strategy,manifest\n";
  std::ostringstream log;
  for (Step horizon : horizons) {
    smbo::Objective objective = p.problem == "im" ? smbo::Objective::influence(p.k, horizon)
                                                  : smbo::Objective::mintss(q, horizon);
    objective.lambda1 = p.lambda1;
    objective.lambda2 = p.lambda2;
    objective.penalty = p.penalty == "hinge" ? smbo::Penalty::Hinge : smbo::Penalty::Linear;
    objective.index = index_options(p.epsilon, p.rr_count);
    smbo::SearchSpace s = space;
    s.t_max = std::min<Step>(s.t_max, horizon);
    const smbo::CostFn cost = [&](const smbo::PolicyConfig& c, std::size_t i) {
      return smbo::evaluate_instance(g, c, objective, train[i], o.seed).cost;
    };
    const smbo::TuneResult r =
        smbo::tune(s, cost, train.size(), budget, strategy, derive_seed(o.seed, Stream::Tuner, horizon));
    std::ostringstream history;
    smbo::write_history_jsonl(history, r);
    std::istringstream lines(history.str());
    std::string line;
    while (std::getline(lines, line)) {
      json j = json::parse(line);
      j["horizon"] = horizon;
      log << j.dump() << '\n';
    }
    const smbo::PolicyReport rep = smbo::report_policy(g, r.best, objective, test, o.seed);
    csv << smbo::report_csv_row(rep) << ',' << p.strategy << ',' << hash << '\n';
  }
  m.wall_seconds = seconds_since(start);
  if (!p.log.empty()) write_atomic(p.log, log.str());
  emit(p.out, csv.str(), m, out);
  return 0;
}

// Exact expected spread by enumerating every world of a small graph.
double enumerate_spread(const ProbGraph& g, const std::vector<NodeId>& seeds) {
  double total = 0.0;
  for (std::uint64_t bits = 0; bits < (std::uint64_t{1} << g.m()); ++bits) {
    PossibleWorld w(g.hash(), bits, g.m());
    double weight = 1.0;
    for (EdgeId e = 0; e < g.m(); ++e) {
      const bool live = (bits >> e) & 1U;
      w.set_live(e, live);
      weight *= live ? g.prob(e) : 1.0 - g.prob(e);
    }
    total += weight * static_cast<double>(spread(g, w, seeds, Horizon::unbounded()));
  }
  return total;
}

int cmd_selftest(const Options& o, std::ostream& out) {
  std::size_t failed = 0;
  auto check = [&](const std::string& name, bool ok, const std::string& detail = "") {
    out << (ok ? "ok   " : "FAIL ") << name << (detail.empty() ? "" : "  " + detail) << '\n';
    if (!ok) ++failed;
  };

  if (!o.selftest.graph.empty()) {
    const LoadedGraph lg = load_edge_list_file(o.selftest.graph);
    check("ingest " + o.selftest.graph, lg.graph.check_integrity(),
          "n=" + std::to_string(lg.graph.n()) + " m=" + std::to_string(lg.graph.m()));
  }

  for (std::uint64_t s = 0; s < 5; ++s) {
    SyntheticParams sp;
    sp.n = 7;
    sp.density = 0.25;
    sp.p = 0.4;
    const ProbGraph g = generate_synthetic(SyntheticModel::ErdosRenyi, sp, derive_seed(o.seed, s));
    if (g.m() > 14) continue;
    const std::vector<NodeId> seeds{0, 3};
    const double exact = enumerate_spread(g, seeds);
    const SpreadEstimate mc = expected_spread_mc(g, seeds, Horizon::unbounded(), 20000, o.seed + s);
    const RRIndex idx = build_index(g, 20000, derive_seed(o.seed, Stream::RRIndex, s));
    const double rr = estimate_spread(idx, seeds);
    check("spread oracle graph " + std::to_string(s),
          std::abs(mc.mean - exact) <= 4 * mc.std_error + 1e-9 && std::abs(rr - exact) <= 0.1 * 7,
          "exact=" + fmt(exact) + " mc=" + fmt(mc.mean) + " rr=" + fmt(rr));
  }

  const bounds::CounterexampleWitness w = bounds::theorem3_counterexample(0.5);
  check("non-submodularity witness", w.violates_submodularity && w.matches_closed_form &&
                                         w.gain_s == 0.5 && w.gain_s_prime == 1.0);

  const double ga = 1.0 - std::exp(-1.0 / bounds::default_gamma());
  check("closed-form ordering", ga < bounds::gna_factor(0.0),
        fmt(ga) + " < " + fmt(bounds::gna_factor(0.0)));

  const std::vector<RRSet> sets{{4, {4}, 0}, {2, {2}, 0}, {5, {5}, 0}};
  RRIndex ties = RRIndex::from_sets(6, sets);
  check("greedy tie-breaking", greedy_cover(ties, 2).seeds == std::vector<NodeId>{2, 4});

  SyntheticParams sp;
  sp.n = 60;
  sp.density = 0.05;
  const ProbGraph g = assign_weighted_cascade(generate_synthetic(SyntheticModel::ErdosRenyi, sp, o.seed));
  PolicySpec spec;
  spec.budget = 3;
  spec.index.rr_count = 500;
  const EvalReport a = evaluate(g, spec, 5, o.seed);
  const EvalReport b = evaluate(g, spec, 5, o.seed);
  check("adaptive run determinism", a.per_world == b.per_world);

  out << (failed == 0 ? "selftest passed" : "selftest FAILED: " + std::to_string(failed) + " check(s)")
      << '\n';
  return failed == 0 ? 0 : 1;
}

int dispatch(const CLI::App& app, const Options& o, std::ostream& out) {
  set_worker_count(o.workers);
  const std::string name = app.get_subcommands().front()->get_name();
  if (name == "prepare") return cmd_prepare(o, out);
  if (name == "run-im") return cmd_run_im(o, out);
  if (name == "run-mintss") return cmd_run_mintss(o, out);
  if (name == "bounds-plot") return cmd_bounds(o, out);
  if (name == "counterexample") return cmd_counterexample(o, out);
  if (name == "tune") return cmd_tune(o, out);
  return cmd_selftest(o, out);
}

}  // namespace

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::string drop_columns(const std::string& csv, const std::vector<std::string>& names) {
  std::istringstream in(csv);
  std::ostringstream out;
  std::string line;
  std::set<std::size_t> skip;
  bool header = true;
  while (std::getline(in, line)) {
    const std::vector<std::string> cells = [&] {
      std::vector<std::string> c;
      std::string cell;
      bool quoted = false;
      for (char ch : line) {
        if (ch == '"') quoted = !quoted;
        if (ch == ',' && !quoted) {
          c.push_back(cell);
          cell.clear();
        } else {
          cell += ch;
        }
      }
      c.push_back(cell);
      return c;
    }();
    if (header) {
      for (std::size_t i = 0; i < cells.size(); ++i) {
        if (std::find(names.begin(), names.end(), cells[i]) != names.end()) skip.insert(i);
      }
      header = false;
    }
    bool first = true;
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (skip.count(i)) continue;
      if (!first) out << ',';
      out << cells[i];
      first = false;
    }
    out << '\n';
  }
  return out.str();
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  // First pass finds the subcommand, the config file and which flags were given.
  Options first;
  CLI::App probe{"aimctl"};
  build_app(probe, first);
  std::vector<std::string> argv(args.rbegin(), args.rend());
  try {
    probe.parse(argv);
  } catch (const CLI::ParseError& e) {
    return probe.exit(e, out, err);
  }

  std::vector<std::string> merged = args;
  if (!first.config.empty()) {
    try {
      CLI::App* sub = probe.get_subcommands().front();
      for (const auto& [key, value] : read_config(first.config)) {
        if (key == "config") continue;
        const bool in_sub = sub->get_option_no_throw("--" + key) != nullptr;
        const bool in_root = probe.get_option_no_throw("--" + key) != nullptr;
        if (!in_sub && !in_root) {
          err << "error: unknown config key '" << key << "' for " << sub->get_name() << '\n';
          return 2;
        }
        if (option_given(in_sub ? sub : &probe, key)) continue;
        merged.push_back("--" + key + "=" + value);
      }
    } catch (const UsageError& e) {
      err << "error: " << e.what() << '\n';
      return 2;
    }
  }

  Options o;
  CLI::App app{"Adaptive influence maximization experiments"};
  build_app(app, o);
  try {
    std::vector<std::string> reversed(merged.rbegin(), merged.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err);
  }

  try {
    return dispatch(app, o, out);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  } catch (const GraphError& e) {
    err << "ingestion error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace aim::cli
