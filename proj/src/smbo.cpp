#include "aim/smbo.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>
#include <numeric>
#include <ostream>
#include <set>
#include <sstream>
#include <stdexcept>

#include "aim/parallel.hpp"
#include "aim/random.hpp"
#include "json.hpp"

namespace aim::smbo {

bool operator<(const PolicyConfig& a, const PolicyConfig& b) {
  return std::lexicographical_compare(
      a.pairs.begin(), a.pairs.end(), b.pairs.begin(), b.pairs.end(),
      [](const SchedulePair& x, const SchedulePair& y) {
        return std::tie(x.seeds, x.wait) < std::tie(y.seeds, y.wait);
      });
}

std::size_t SearchSpace::size() const noexcept {
  const std::size_t per_pair = s_max * static_cast<std::size_t>(t_max);
  std::size_t total = 1;
  for (std::size_t i = 0; i < p; ++i) {
    if (per_pair != 0 && total > std::numeric_limits<std::size_t>::max() / per_pair) {
      return std::numeric_limits<std::size_t>::max();
    }
    total *= per_pair;
  }
  return total;
}

bool SearchSpace::contains(const PolicyConfig& c) const noexcept {
  if (c.pairs.size() != p) return false;
  return std::all_of(c.pairs.begin(), c.pairs.end(), [&](const SchedulePair& q) {
    return q.seeds >= 1 && q.seeds <= s_max && q.wait >= 1 && q.wait <= t_max;
  });
}

SearchSpace SearchSpace::for_graph(const ProbGraph& g, std::size_t p) {
  if (p < 1) throw std::invalid_argument("policy complexity must be >= 1");
  SearchSpace s;
  s.p = p;
  s.s_max = std::max<std::size_t>(1, std::min<std::size_t>(100, g.n()));
  const std::size_t depth = depth_bound(g).diffusion_depth_bound;
  s.t_max = static_cast<Step>(std::clamp<std::size_t>(depth, 1, std::numeric_limits<Step>::max()));
  return s;
}

std::array<std::uint64_t, Instance::kWorlds> Instance::world_seeds() const noexcept {
  std::array<std::uint64_t, kWorlds> out{};
  for (std::size_t j = 0; j < kWorlds; ++j) out[j] = world_seed(bundle_seed, j);
  return out;
}

namespace {

constexpr std::uint64_t kTestOffset = std::uint64_t{1} << 40;

std::vector<Instance> instance_range(std::uint64_t master, std::uint64_t first, std::size_t count) {
  std::vector<Instance> out(count);
  for (std::size_t i = 0; i < count; ++i) {
    out[i].bundle_seed = derive_seed(master, Stream::Instance, first + i);
  }
  return out;
}

}  // namespace

std::vector<Instance> training_instances(std::uint64_t master_seed, std::size_t count) {
  return instance_range(master_seed, 0, count);
}

std::vector<Instance> test_instances(std::uint64_t master_seed, std::size_t count) {
  return instance_range(master_seed, kTestOffset, count);
}

Objective Objective::influence(std::size_t k, Step horizon) {
  Objective o;
  o.problem = Problem::InfluenceMax;
  o.budget = k;
  o.horizon = horizon;
  return o;
}

Objective Objective::mintss(std::size_t q, Step horizon) {
  Objective o;
  o.problem = Problem::Mintss;
  o.target = q;
  o.horizon = horizon;
  o.index.epsilon = 0.2;
  return o;
}

double Objective::mintss_cost(double seeds, double spread) const {
  const double q = static_cast<double>(target);
  if (penalty == Penalty::Linear) return seeds + lambda1 * (q - spread) + lambda2 * (spread - q);
  return seeds + lambda1 * std::max(0.0, q - spread) + lambda2 * std::max(0.0, spread - q);
}

std::vector<PlannedIntervention> unroll(const PolicyConfig& config,
                                        std::optional<std::size_t> budget, Step horizon) {
  std::vector<PlannedIntervention> out;
  if (budget && *budget == 0) return out;
  ScheduleCursor cursor(config.pairs, horizon, budget);
  std::size_t used = 0;
  while (const auto next = cursor.next(used)) {
    out.push_back({next->time, next->seeds});
    used += next->seeds;
  }
  return out;
}

namespace {

struct WorldRun {
  double seeds = 0.0;
  double spread = 0.0;
};

WorldRun run_in_world(const ProbGraph& g, const PolicyConfig& config, const Objective& objective,
                      std::uint64_t seed, std::uint64_t master_seed) {
  PossibleWorld w = sample_world(g, seed);
  w.set_graph_hash(g.hash());
  detail::AdaptiveLoop cfg;
  cfg.batch = config.pairs.front().seeds;
  cfg.horizon = Horizon::bounded(objective.horizon);
  cfg.regen = objective.regen;
  cfg.index = objective.index;
  cfg.schedule = config.pairs;
  if (objective.problem == Objective::Problem::InfluenceMax) {
    cfg.budget = objective.budget;
  } else {
    cfg.target = objective.target;
  }
  const PolicyTrace t = detail::run_adaptive_loop(g, cfg, w, derive_seed(master_seed, Stream::Tuner, seed));
  return {static_cast<double>(t.seeds_used), static_cast<double>(t.final_active)};
}

struct InstanceSummary {
  RunOutcome mean;
  double shortfall = 0.0;
};

InstanceSummary summarize_instance(const ProbGraph& g, const PolicyConfig& config,
                                   const Objective& objective, const Instance& instance,
                                   std::uint64_t master_seed) {
  if (config.pairs.empty()) throw std::invalid_argument("config has no pairs");
  if (objective.horizon < 1) throw std::invalid_argument("horizon must be >= 1");
  const auto seeds = instance.world_seeds();
  std::array<WorldRun, Instance::kWorlds> runs{};
  parallel_for(seeds.size(), [&](std::size_t j) {
    runs[j] = run_in_world(g, config, objective, seeds[j], master_seed);
  });
  InstanceSummary s;
  const double q = static_cast<double>(objective.target);
  for (const WorldRun& r : runs) {
    s.mean.seeds += r.seeds;
    s.mean.spread += r.spread;
    if (objective.problem == Objective::Problem::InfluenceMax) {
      s.mean.cost += -r.spread;
    } else {
      s.mean.cost += objective.mintss_cost(r.seeds, r.spread);
      s.shortfall += std::max(0.0, q - r.spread);
    }
  }
  const auto k = static_cast<double>(runs.size());
  s.mean.seeds /= k;
  s.mean.spread /= k;
  s.mean.cost /= k;
  s.shortfall /= k;
  return s;
}

}  // namespace

RunOutcome evaluate_instance(const ProbGraph& g, const PolicyConfig& config,
                             const Objective& objective, const Instance& instance,
                             std::uint64_t master_seed) {
  return summarize_instance(g, config, objective, instance, master_seed).mean;
}

double evaluate_config(const PolicyConfig& config, const Objective& objective,
                       const std::vector<Instance>& instances, const ProbGraph& g,
                       std::uint64_t master_seed) {
  if (instances.empty()) throw std::invalid_argument("need at least one instance");
  std::vector<double> costs(instances.size());
  parallel_for(instances.size(), [&](std::size_t i) {
    costs[i] = evaluate_instance(g, config, objective, instances[i], master_seed).cost;
  });
  return std::accumulate(costs.begin(), costs.end(), 0.0) / static_cast<double>(costs.size());
}

// ---------------------------------------------------------------------------
// Forest

void Forest::fit(const std::vector<std::vector<double>>& x, const std::vector<double>& y,
                 std::uint64_t seed) {
  if (x.empty() || x.size() != y.size()) throw std::invalid_argument("forest needs matching data");
  const std::size_t n = x.size();
  const std::size_t dims = x.front().size();
  trees_.assign(opts_.trees, {});

  for (std::size_t t = 0; t < opts_.trees; ++t) {
    Rng rng(derive_seed(seed, t));
    std::vector<std::uint32_t> sample(n);
    for (auto& s : sample) s = static_cast<std::uint32_t>(rng.below(n));
    Tree& tree = trees_[t];

    struct Work {
      std::uint32_t node;
      std::size_t begin;
      std::size_t end;
      std::size_t depth;
    };
    tree.push_back({});
    std::vector<Work> stack{{0, 0, n, 0}};
    while (!stack.empty()) {
      const Work job = stack.back();
      stack.pop_back();
      double sum = 0.0;
      double sq = 0.0;
      for (std::size_t i = job.begin; i < job.end; ++i) {
        sum += y[sample[i]];
        sq += y[sample[i]] * y[sample[i]];
      }
      const auto count = static_cast<double>(job.end - job.begin);
      const double mean = sum / count;
      tree[job.node].value = mean;
      tree[job.node].variance = std::max(0.0, sq / count - mean * mean);
      if (job.end - job.begin < opts_.min_split || job.depth >= opts_.max_depth ||
          tree[job.node].variance <= 0.0) {
        continue;
      }

      int best_feature = -1;
      double best_threshold = 0.0;
      double best_sse = std::numeric_limits<double>::infinity();
      for (std::size_t f = 0; f < dims; ++f) {
        double lo = std::numeric_limits<double>::infinity();
        double hi = -lo;
        for (std::size_t i = job.begin; i < job.end; ++i) {
          lo = std::min(lo, x[sample[i]][f]);
          hi = std::max(hi, x[sample[i]][f]);
        }
        if (!(hi > lo)) continue;
        for (std::size_t r = 0; r < opts_.thresholds; ++r) {
          const double thr = lo + rng.uniform() * (hi - lo);
          double ls = 0, lq = 0, rs = 0, rq = 0;
          std::size_t lc = 0;
          for (std::size_t i = job.begin; i < job.end; ++i) {
            const double v = y[sample[i]];
            if (x[sample[i]][f] <= thr) {
              ls += v;
              lq += v * v;
              ++lc;
            } else {
              rs += v;
              rq += v * v;
            }
          }
          const std::size_t rc = job.end - job.begin - lc;
          if (lc == 0 || rc == 0) continue;
          const double sse = (lq - ls * ls / static_cast<double>(lc)) +
                             (rq - rs * rs / static_cast<double>(rc));
          if (sse < best_sse) {
            best_sse = sse;
            best_feature = static_cast<int>(f);
            best_threshold = thr;
          }
        }
      }
      if (best_feature < 0) continue;

      const auto mid_it = std::partition(
          sample.begin() + static_cast<std::ptrdiff_t>(job.begin),
          sample.begin() + static_cast<std::ptrdiff_t>(job.end),
          [&](std::uint32_t i) { return x[i][static_cast<std::size_t>(best_feature)] <= best_threshold; });
      const auto mid = static_cast<std::size_t>(mid_it - sample.begin());
      const auto left = static_cast<std::uint32_t>(tree.size());
      tree.push_back({});
      tree.push_back({});
      tree[job.node].feature = best_feature;
      tree[job.node].threshold = best_threshold;
      tree[job.node].left = left;
      tree[job.node].right = left + 1;
      stack.push_back({left, job.begin, mid, job.depth + 1});
      stack.push_back({left + 1, mid, job.end, job.depth + 1});
    }
  }
}

Forest::Prediction Forest::predict(const std::vector<double>& x) const {
  if (trees_.empty()) throw std::logic_error("forest is not fitted");
  double sum = 0.0;
  double second = 0.0;
  for (const Tree& tree : trees_) {
    std::uint32_t at = 0;
    while (tree[at].feature >= 0) {
      at = x[static_cast<std::size_t>(tree[at].feature)] <= tree[at].threshold ? tree[at].left
                                                                                : tree[at].right;
    }
    sum += tree[at].value;
    second += tree[at].value * tree[at].value + tree[at].variance;
  }
  const auto k = static_cast<double>(trees_.size());
  const double mean = sum / k;
  return {mean, std::sqrt(std::max(0.0, second / k - mean * mean))};
}

double expected_improvement(double best, double mean, double sd) {
  const double diff = best - mean;
  if (!(sd > 1e-12)) return std::max(0.0, diff);
  const double z = diff / sd;
  const double cdf = 0.5 * std::erfc(-z / std::numbers::sqrt2);
  const double pdf = std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi);
  return diff * cdf + sd * pdf;
}

const char* to_string(Strategy s) { return s == Strategy::Smbo ? "smbo" : "random"; }

// ---------------------------------------------------------------------------
// Tuner

namespace {

using Clock = std::chrono::steady_clock;

std::vector<double> encode(const PolicyConfig& c) {
  std::vector<double> x;
  x.reserve(2 * c.pairs.size());
  for (const SchedulePair& q : c.pairs) {
    x.push_back(static_cast<double>(q.seeds));
    x.push_back(static_cast<double>(q.wait));
  }
  return x;
}

PolicyConfig random_config(const SearchSpace& space, Rng& rng) {
  PolicyConfig c;
  c.pairs.resize(space.p);
  for (SchedulePair& q : c.pairs) {
    q.seeds = static_cast<std::size_t>(rng.between(1, static_cast<std::int64_t>(space.s_max)));
    q.wait = static_cast<Step>(rng.between(1, static_cast<std::int64_t>(space.t_max)));
  }
  return c;
}

/// Configs reached by moving one coordinate by +-1, 2, 4, ... within the box.
std::vector<PolicyConfig> neighbours(const SearchSpace& space, const PolicyConfig& c) {
  std::vector<PolicyConfig> out;
  for (std::size_t i = 0; i < c.pairs.size(); ++i) {
    for (int coord = 0; coord < 2; ++coord) {
      const std::int64_t hi = coord == 0 ? static_cast<std::int64_t>(space.s_max)
                                         : static_cast<std::int64_t>(space.t_max);
      const std::int64_t cur = coord == 0 ? static_cast<std::int64_t>(c.pairs[i].seeds)
                                          : static_cast<std::int64_t>(c.pairs[i].wait);
      for (std::int64_t step = 1; step < hi; step *= 2) {
        for (const std::int64_t v : {cur - step, cur + step}) {
          if (v < 1 || v > hi) continue;
          PolicyConfig n = c;
          if (coord == 0) {
            n.pairs[i].seeds = static_cast<std::size_t>(v);
          } else {
            n.pairs[i].wait = static_cast<Step>(v);
          }
          out.push_back(std::move(n));
        }
      }
    }
  }
  return out;
}

class Tuner {
 public:
  Tuner(const SearchSpace& space, const CostFn& cost, std::size_t num_instances,
        const TunerBudget& budget, Strategy strategy, std::uint64_t seed)
      : space_(space),
        cost_(cost),
        budget_(budget),
        strategy_(strategy),
        seed_(seed),
        rng_(derive_seed(seed, Stream::Tuner, 0)),
        order_(num_instances) {
    std::iota(order_.begin(), order_.end(), std::size_t{0});
    for (std::size_t i = order_.size(); i > 1; --i) std::swap(order_[i - 1], order_[rng_.below(i)]);
  }

  TuneResult run() {
    const std::size_t initial =
        std::min<std::size_t>(std::max<std::size_t>(10, 2 * space_.dimensions()), space_.size());
    if (budget_.max_evaluations < initial) {
      throw std::invalid_argument("evaluation budget is smaller than the initial design (" +
                                  std::to_string(initial) + ")");
    }

    std::vector<PolicyConfig> design;
    while (design.size() < initial) {
      auto c = random_unseen(design);
      if (!c) break;
      design.push_back(*c);
    }
    incumbent_ = design.front();
    run_on(incumbent_, 0);
    incumbent_n_ = 1;
    for (std::size_t i = 1; i < design.size() && budget_left(); ++i) race(design[i]);

    while (budget_left()) {
      intensify_incumbent();
      if (!budget_left()) break;
      auto challenger = propose();
      if (!challenger) break;
      race(*challenger);
      ++proposals_;
    }

    result_.best = incumbent_;
    result_.best_cost = incumbent_mean();
    result_.best_instances = incumbent_n_;
    return std::move(result_);
  }

 private:
  bool budget_left() const { return result_.history.size() < budget_.max_evaluations; }
  bool seen(const PolicyConfig& c) const { return runs_.count(c) != 0; }

  double mean_over(const PolicyConfig& c, std::size_t count) const {
    const auto& r = runs_.at(c);
    double sum = 0.0;
    for (std::size_t i = 0; i < count; ++i) sum += r.at(i);
    return sum / static_cast<double>(count);
  }
  double incumbent_mean() const { return mean_over(incumbent_, incumbent_n_); }

  /// Runs c on the instance at position `pos` of the shuffled order unless cached.
  bool run_on(const PolicyConfig& c, std::size_t pos) {
    auto& r = runs_[c];
    if (r.count(pos) != 0) return true;
    if (!budget_left()) return false;
    const double v = cost_(c, order_[pos]);
    r[pos] = v;
    Evaluation e;
    e.iteration = result_.history.size();
    e.config = c;
    e.instance = order_[pos];
    e.cost = v;
    e.incumbent = incumbent_;
    e.incumbent_cost = runs_.count(incumbent_) && incumbent_n_ > 0 ? incumbent_mean() : v;
    result_.history.push_back(std::move(e));
    return true;
  }

  void intensify_incumbent() {
    if (incumbent_n_ >= order_.size()) return;
    if (run_on(incumbent_, incumbent_n_)) {
      ++incumbent_n_;
      result_.history.back().incumbent_cost = incumbent_mean();
    }
  }

  void race(const PolicyConfig& challenger) {
    std::size_t n = 1;
    while (true) {
      const std::size_t upto = std::min(n, incumbent_n_);
      for (std::size_t pos = 0; pos < upto; ++pos) {
        if (!run_on(challenger, pos)) return;
      }
      if (mean_over(challenger, upto) > mean_over(incumbent_, upto)) return;
      if (upto >= incumbent_n_) {
        incumbent_ = challenger;
        result_.history.back().incumbent = incumbent_;
        result_.history.back().incumbent_cost = incumbent_mean();
        return;
      }
      n *= 2;
    }
  }

  std::optional<PolicyConfig> random_unseen(const std::vector<PolicyConfig>& also_skip) {
    auto skip = [&](const PolicyConfig& c) {
      return seen(c) || std::find(also_skip.begin(), also_skip.end(), c) != also_skip.end();
    };
    for (int attempt = 0; attempt < 1000; ++attempt) {
      PolicyConfig c = random_config(space_, rng_);
      if (!skip(c)) return c;
    }
    // Nearly exhausted space: enumerate what is left.
    if (space_.size() > 200000) return std::nullopt;
    std::vector<PolicyConfig> left;
    PolicyConfig c;
    c.pairs.assign(space_.p, {1, 1});
    while (true) {
      if (!skip(c)) left.push_back(c);
      std::size_t i = 0;
      for (; i < 2 * space_.p; ++i) {
        SchedulePair& q = c.pairs[i / 2];
        if (i % 2 == 0) {
          if (q.seeds < space_.s_max) { ++q.seeds; break; }
          q.seeds = 1;
        } else {
          if (q.wait < space_.t_max) { ++q.wait; break; }
          q.wait = 1;
        }
      }
      if (i == 2 * space_.p) break;
    }
    if (left.empty()) return std::nullopt;
    return left[rng_.below(left.size())];
  }

  std::optional<PolicyConfig> propose() {
    const bool interleave = proposals_ % 3 == 2;
    if (strategy_ == Strategy::RandomSearch || interleave ||
        surrogate_seconds_ >= budget_.surrogate_time_cap) {
      return random_unseen({});
    }
    const auto start = Clock::now();
    auto pick = model_proposal();
    surrogate_seconds_ += std::chrono::duration<double>(Clock::now() - start).count();
    if (pick) return pick;
    return random_unseen({});
  }

  std::optional<PolicyConfig> model_proposal() {
    std::vector<std::vector<double>> x;
    std::vector<double> y;
    std::vector<std::pair<double, PolicyConfig>> ranked;
    for (const auto& [config, costs] : runs_) {
      if (costs.empty()) continue;
      double sum = 0.0;
      for (const auto& [pos, v] : costs) sum += v;
      const double mean = sum / static_cast<double>(costs.size());
      x.push_back(encode(config));
      y.push_back(mean);
      ranked.emplace_back(mean, config);
    }
    if (x.size() < 2) return std::nullopt;
    // Fit on log-scaled costs so differences near the incumbent stay visible.
    const double floor = *std::min_element(y.begin(), y.end());
    for (double& v : y) v = std::log1p(v - floor);
    Forest forest;
    forest.fit(x, y, derive_seed(seed_, Stream::Tuner, 1 + proposals_));
    const double best = *std::min_element(y.begin(), y.end());
    std::sort(ranked.begin(), ranked.end());

    std::optional<PolicyConfig> choice;
    double choice_ei = -1.0;
    std::set<PolicyConfig> scored;
    auto consider = [&](const PolicyConfig& c) -> double {
      const auto pred = forest.predict(encode(c));
      const double ei = expected_improvement(best, pred.mean, pred.sd);
      if (!seen(c) && scored.insert(c).second && ei > choice_ei) {
        choice_ei = ei;
        choice = c;
      }
      return ei;
    };

    // Local search on EI from the best few configs.
    const std::size_t starts = std::min<std::size_t>(5, ranked.size());
    for (std::size_t s = 0; s < starts; ++s) {
      PolicyConfig at = ranked[s].second;
      double at_ei = expected_improvement(best, forest.predict(encode(at)).mean,
                                          forest.predict(encode(at)).sd);
      for (int step = 0; step < 30; ++step) {
        PolicyConfig next = at;
        double next_ei = at_ei;
        for (const PolicyConfig& nb : neighbours(space_, at)) {
          const double ei = consider(nb);
          if (ei > next_ei) {
            next_ei = ei;
            next = nb;
          }
        }
        if (next == at) break;
        at = std::move(next);
        at_ei = next_ei;
      }
    }
    for (int r = 0; r < 500; ++r) consider(random_config(space_, rng_));
    return choice;
  }

  const SearchSpace& space_;
  const CostFn& cost_;
  TunerBudget budget_;
  Strategy strategy_;
  std::uint64_t seed_;
  Rng rng_;
  std::vector<std::size_t> order_;
  std::map<PolicyConfig, std::map<std::size_t, double>> runs_;
  PolicyConfig incumbent_;
  std::size_t incumbent_n_ = 0;
  std::size_t proposals_ = 0;
  double surrogate_seconds_ = 0.0;
  TuneResult result_;
};

nlohmann::json config_json(const PolicyConfig& c) {
  nlohmann::json j = nlohmann::json::array();
  for (const SchedulePair& q : c.pairs) j.push_back({q.seeds, q.wait});
  return j;
}

}  // namespace

TuneResult tune(const SearchSpace& space, const CostFn& cost, std::size_t num_instances,
                const TunerBudget& budget, Strategy strategy, std::uint64_t seed) {
  if (space.p < 1 || space.s_max < 1 || space.t_max < 1) {
    throw std::invalid_argument("search space is empty");
  }
  if (num_instances == 0) throw std::invalid_argument("need at least one training instance");
  Tuner tuner(space, cost, num_instances, budget, strategy, seed);
  return tuner.run();
}

void write_history_jsonl(std::ostream& out, const TuneResult& result) {
  for (const Evaluation& e : result.history) {
    nlohmann::json j;
    j["iteration"] = e.iteration;
    j["config"] = config_json(e.config);
    j["instance"] = e.instance;
    j["objective"] = e.cost;
    j["incumbent"] = config_json(e.incumbent);
    j["incumbent_objective"] = e.incumbent_cost;
    out << j.dump() << '\n';
  }
}

PolicyReport report_policy(const ProbGraph& g, const PolicyConfig& best, const Objective& objective,
                           const std::vector<Instance>& instances, std::uint64_t master_seed) {
  if (instances.empty()) throw std::invalid_argument("need at least one test instance");
  std::vector<InstanceSummary> parts(instances.size());
  parallel_for(instances.size(), [&](std::size_t i) {
    parts[i] = summarize_instance(g, best, objective, instances[i], master_seed);
  });
  PolicyReport r;
  r.horizon = objective.horizon;
  r.policy = best;
  for (const InstanceSummary& s : parts) {
    r.seeds += s.mean.seeds;
    r.spread += s.mean.spread;
    r.objective += s.mean.cost;
    r.shortfall += s.shortfall;
  }
  const auto k = static_cast<double>(parts.size());
  r.seeds /= k;
  r.spread /= k;
  r.objective /= k;
  r.shortfall /= k;
  return r;
}

std::string report_csv_header() { return "T,shortfall,seeds,objective,pairs"; }

std::string report_csv_row(const PolicyReport& r) {
  std::ostringstream os;
  os.precision(10);
  os << r.horizon << ',' << r.shortfall << ',' << r.seeds << ',' << r.objective << ",\""
     << format_schedule(r.policy.pairs) << '"';
  return os.str();
}

}  // namespace aim::smbo
