#include "aim/policy.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "aim/feedback.hpp"
#include "aim/parallel.hpp"
#include "aim/random.hpp"
#include "aim/rrset.hpp"
#include "json.hpp"

namespace aim {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string format_double(double x) {
  std::ostringstream os;
  os.precision(10);
  os << x;
  return os.str();
}

// Fills `picked` up to `size` with the smallest ids that are neither active
// nor already picked. Used when no remaining node covers an alive RR set.
void pad_smallest_ids(std::vector<NodeId>& picked, std::size_t size,
                      const std::vector<std::uint8_t>& active) {
  if (picked.size() >= size) return;
  std::vector<std::uint8_t> taken(active.size(), 0);
  for (NodeId v : picked) taken[v] = 1;
  for (NodeId v = 0; v < active.size() && picked.size() < size; ++v) {
    if (!active[v] && !taken[v]) picked.push_back(v);
  }
}

std::size_t theta_for(const GraphView& view, std::size_t k, const IndexOptions& opts,
                      std::uint64_t seed) {
  if (opts.rr_count) return *opts.rr_count;
  return size_index(view, k, opts.epsilon, opts.ell, seed).theta;
}

/// Owns the RR index of one adaptive run and applies the regeneration policy.
class SeedSelector {
 public:
  SeedSelector(const ProbGraph& g, RegenPolicy regen, IndexOptions opts, std::uint64_t seed)
      : g_(g), regen_(regen), opts_(std::move(opts)), seed_(seed), synced_(g.n(), 0) {}

  std::vector<NodeId> select(const std::vector<std::uint8_t>& active, std::size_t active_count,
                             std::size_t size) {
    const bool stale = !idx_ || regen_.kind == RegenPolicy::Kind::Full ||
                       active_count - active_at_build_ > regen_.threshold ||
                       idx_->alive_count() == 0;
    if (stale) {
      const GraphView view = mask_active(g_, active);
      const std::size_t theta =
          theta_for(view, size, opts_, derive_seed(seed_, Stream::Pilot, regens_));
      idx_ = build_index(view, theta, derive_seed(seed_, regens_));
      ++regens_;
      active_at_build_ = active_count;
      synced_ = active;
    } else {
      std::vector<NodeId> fresh;
      for (NodeId v = 0; v < g_.n(); ++v) {
        if (active[v] && !synced_[v]) {
          fresh.push_back(v);
          synced_[v] = 1;
        }
      }
      idx_->retire_containing(fresh);
    }

    std::vector<NodeId> picked;
    if (!idx_->empty()) picked = greedy_cover(*idx_, size, {}, &active).seeds;
    pad_smallest_ids(picked, size, active);
    for (NodeId v : picked) synced_[v] = 1;
    return picked;
  }

  std::size_t regens() const noexcept { return regens_; }

 private:
  const ProbGraph& g_;
  RegenPolicy regen_;
  IndexOptions opts_;
  std::uint64_t seed_;
  std::optional<RRIndex> idx_;
  std::size_t regens_ = 0;
  std::size_t active_at_build_ = 0;
  std::vector<std::uint8_t> synced_;
};

}  // namespace

std::string format_schedule(const InterventionSchedule& schedule) {
  std::string out;
  for (const SchedulePair& p : schedule) {
    if (!out.empty()) out += ';';
    out += "(" + std::to_string(p.seeds) + "," + std::to_string(p.wait) + ")";
  }
  return out;
}

ScheduleCursor::ScheduleCursor(InterventionSchedule schedule, Step horizon,
                               std::optional<std::size_t> budget)
    : schedule_(std::move(schedule)), horizon_(horizon), budget_(budget) {
  if (schedule_.empty()) throw std::invalid_argument("schedule must have at least one pair");
  for (const SchedulePair& p : schedule_) {
    if (p.seeds < 1 || p.wait < 1) throw std::invalid_argument("schedule pairs must be >= 1");
  }
}

std::optional<ScheduleCursor::Next> ScheduleCursor::next(std::size_t used) {
  if (done_ || time_ >= horizon_) return std::nullopt;
  std::size_t seeds = schedule_[pair_].seeds;
  if (budget_) {
    if (used >= *budget_) return std::nullopt;
    const std::size_t remaining = *budget_ - used;
    if (remaining <= seeds) {
      seeds = remaining;
      done_ = true;
    }
  }
  const Next out{static_cast<Step>(time_), seeds};
  time_ += schedule_[pair_].wait;
  pair_ = (pair_ + 1) % schedule_.size();
  return out;
}

std::string RegenPolicy::name() const {
  return kind == Kind::Full ? "full" : "lazy" + std::to_string(threshold);
}

void PolicySpec::validate(std::size_t n) const {
  if (budget < 1) throw std::invalid_argument("budget must be >= 1");
  if (budget > n) throw std::invalid_argument("budget k exceeds the number of nodes");
  if (batch < 1) throw std::invalid_argument("batch size must be >= 1");
  if (batch > budget) throw std::invalid_argument("batch size exceeds the budget");
  if (horizon.is_bounded() && *horizon.steps < 1) throw std::invalid_argument("horizon must be >= 1");
  if (!(index.epsilon > 0.0 && index.epsilon < 1.0)) {
    throw std::invalid_argument("epsilon must be in (0,1)");
  }
}

const char* to_string(StopReason r) {
  switch (r) {
    case StopReason::Budget: return "budget";
    case StopReason::Horizon: return "horizon";
    case StopReason::Target: return "target";
    case StopReason::SeedCap: return "seed_cap";
    case StopReason::NoEligible: return "no_eligible";
  }
  return "?";
}

void write_trace_jsonl(std::ostream& out, const PolicyTrace& trace, std::size_t world) {
  nlohmann::json j;
  j["world"] = world;
  j["interventions"] = nlohmann::json::array();
  for (const InterventionRecord& iv : trace.interventions) {
    j["interventions"].push_back(
        {{"t", iv.time}, {"nodes", iv.nodes}, {"active_before", iv.active_before}});
  }
  j["final_active"] = trace.final_active;
  j["seeds_used"] = trace.seeds_used;
  j["rr_regens"] = trace.rr_regens;
  j["stop"] = to_string(trace.stop);
  j["wall_time"] = trace.wall_time;
  out << j.dump() << '\n';
}

std::vector<NodeId> greedy_non_adaptive(const ProbGraph& g, std::size_t k,
                                        const IndexOptions& opts, std::uint64_t seed) {
  if (k > g.n()) throw std::invalid_argument("budget k exceeds the number of nodes");
  if (k == 0) return {};
  const GraphView view(g);
  const std::size_t theta = theta_for(view, k, opts, derive_seed(seed, Stream::Pilot, 0));
  RRIndex idx = build_index(view, theta, derive_seed(seed, 0));
  std::vector<NodeId> seeds;
  if (!idx.empty()) seeds = greedy_cover(idx, k).seeds;
  pad_smallest_ids(seeds, k, std::vector<std::uint8_t>(g.n(), 0));
  return seeds;
}

InterventionSchedule default_im_schedule(std::size_t budget, std::size_t batch, Step horizon) {
  const std::size_t rounds = (budget + batch - 1) / batch;
  const Step wait = std::max<Step>(1, static_cast<Step>(horizon / std::max<std::size_t>(1, rounds)));
  return {{batch, wait}};
}

namespace detail {

PolicyTrace run_adaptive_loop(const ProbGraph& g, const AdaptiveLoop& cfg,
                              const PossibleWorld& world, std::uint64_t seed) {
  const auto start = Clock::now();
  const std::size_t n = g.n();
  const std::size_t cap = cfg.seed_cap == 0 ? n : std::min(cfg.seed_cap, n);
  const std::size_t limit = cfg.budget ? std::min(*cfg.budget, cap) : cap;

  PolicyTrace trace;
  Diffusion d(g, world);
  SeedSelector selector(g, cfg.regen, cfg.index, seed);

  auto target_met = [&] { return cfg.target && d.active_count() >= *cfg.target; };

  // Places one intervention at the current time. Returns false (with
  // trace.stop set) when the run has to end instead.
  auto intervene = [&](std::size_t planned) -> bool {
    if (target_met()) {
      trace.stop = StopReason::Target;
      return false;
    }
    if (trace.seeds_used >= limit) {
      trace.stop = cfg.budget && trace.seeds_used >= *cfg.budget ? StopReason::Budget
                                                                 : StopReason::SeedCap;
      return false;
    }
    const std::size_t eligible = n - d.active_count();
    if (eligible == 0) {
      trace.stop = StopReason::NoEligible;
      return false;
    }
    const std::size_t size = std::min({planned, eligible, limit - trace.seeds_used});
    std::vector<NodeId> nodes = selector.select(d.active_mask(), d.active_count(), size);
    trace.interventions.push_back({d.time(), nodes, d.active_count()});
    d.seed(nodes);
    trace.seeds_used += nodes.size();
    return true;
  };

  if (!cfg.horizon.is_bounded()) {
    while (intervene(cfg.batch)) d.run_to_quiescence();
  } else {
    const Step horizon = *cfg.horizon.steps;
    InterventionSchedule schedule;
    if (cfg.schedule) {
      schedule = *cfg.schedule;
    } else if (cfg.budget) {
      schedule = default_im_schedule(*cfg.budget, cfg.batch, horizon);
    } else {
      const GraphStats stats = depth_bound(g);
      const auto wait = static_cast<Step>(std::clamp<std::size_t>(
          stats.diffusion_depth_bound, 1, std::max<Step>(1, horizon)));
      schedule = {{cfg.batch, wait}};
    }
    ScheduleCursor cursor(schedule, horizon, cfg.budget ? std::optional(limit) : std::nullopt);

    // Advances to `t`, checking the target after every step.
    auto advance = [&](Step t) {
      if (!cfg.target) {
        d.advance_to(t);
        return;
      }
      while (d.time() < t && !target_met()) {
        if (d.quiescent()) {
          d.advance_to(t);
        } else {
          d.step();
        }
      }
    };

    trace.stop = StopReason::Horizon;
    bool running = true;
    while (running) {
      const auto next = cursor.next(trace.seeds_used);
      if (!next) {
        if (cfg.budget && trace.seeds_used >= *cfg.budget) trace.stop = StopReason::Budget;
        break;
      }
      advance(next->time);
      if (target_met()) {
        trace.stop = StopReason::Target;
        break;
      }
      running = intervene(next->seeds);
    }
    d.advance_to(horizon);
  }

  if (target_met()) trace.stop = StopReason::Target;
  trace.final_active = d.active_count();
  trace.rr_regens = selector.regens();
  trace.wall_time = seconds_since(start);
  return trace;
}

}  // namespace detail

PolicyTrace run_adaptive(const ProbGraph& g, const PolicySpec& spec, const PossibleWorld& world,
                         std::uint64_t seed) {
  if (spec.kind != PolicyKind::Adaptive) throw std::invalid_argument("run_adaptive needs an adaptive spec");
  spec.validate(g.n());
  detail::AdaptiveLoop cfg;
  cfg.batch = spec.batch;
  cfg.horizon = spec.horizon;
  cfg.regen = spec.regen;
  cfg.index = spec.index;
  cfg.schedule = spec.schedule;
  cfg.budget = spec.budget;
  return detail::run_adaptive_loop(g, cfg, world, seed);
}

EvalReport evaluate(const ProbGraph& g, const PolicySpec& spec, std::size_t num_worlds,
                    std::uint64_t master_seed) {
  if (num_worlds == 0) throw std::invalid_argument("num_worlds must be >= 1");
  spec.validate(g.n());
  const auto start = Clock::now();
  EvalReport r;
  r.per_world.resize(num_worlds);

  if (spec.kind == PolicyKind::NonAdaptive) {
    r.fixed_seeds = greedy_non_adaptive(g, spec.budget, spec.index,
                                        derive_seed(master_seed, Stream::RRIndex, ~std::uint64_t{0}));
    parallel_for(num_worlds, [&](std::size_t i) {
      const PossibleWorld w = sample_world(g, world_seed(master_seed, i));
      r.per_world[i] = static_cast<double>(spread(g, w, r.fixed_seeds, spec.horizon));
    });
    r.seeds_used_avg = static_cast<double>(r.fixed_seeds.size());
    r.rr_regens_avg = 1.0;
  } else {
    r.traces.resize(num_worlds);
    parallel_for(num_worlds, [&](std::size_t i) {
      const PossibleWorld w = sample_world(g, world_seed(master_seed, i));
      r.traces[i] = run_adaptive(g, spec, w, derive_seed(master_seed, Stream::RRIndex, i));
      r.per_world[i] = static_cast<double>(r.traces[i].final_active);
    });
    double seeds = 0.0;
    double regens = 0.0;
    for (const PolicyTrace& t : r.traces) {
      seeds += static_cast<double>(t.seeds_used);
      regens += static_cast<double>(t.rr_regens);
    }
    r.seeds_used_avg = seeds / static_cast<double>(num_worlds);
    r.rr_regens_avg = regens / static_cast<double>(num_worlds);
  }
  std::tie(r.f_avg, r.std_error) = mean_stderr(r.per_world);
  r.wall_time = seconds_since(start);
  return r;
}

GainEstimate adaptivity_gain(const EvalReport& adaptive, const EvalReport& baseline) {
  if (adaptive.per_world.size() != baseline.per_world.size() || adaptive.per_world.empty()) {
    throw std::invalid_argument("adaptivity gain needs reports over the same worlds");
  }
  if (baseline.f_avg <= 0.0) throw std::invalid_argument("baseline f_avg must be positive");
  GainEstimate est;
  est.gain = adaptive.f_avg / baseline.f_avg;
  const std::size_t n = adaptive.per_world.size();
  if (n > 1) {
    double ss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double resid = adaptive.per_world[i] - est.gain * baseline.per_world[i];
      ss += resid * resid;
    }
    const double sd = std::sqrt(ss / static_cast<double>(n - 1));
    est.std_error = sd / (std::sqrt(static_cast<double>(n)) * baseline.f_avg);
  }
  return est;
}

std::string eval_csv_header() {
  return "graph,k,b,regen,epsilon,f_avg,stderr,seeds_used_avg,rr_regens_avg,wall_time";
}

std::string eval_csv_row(const std::string& graph, const PolicySpec& spec, const EvalReport& r) {
  std::ostringstream os;
  os << graph << ',' << spec.budget << ',' << spec.batch << ','
     << (spec.kind == PolicyKind::NonAdaptive ? std::string("none") : spec.regen.name()) << ','
     << format_double(spec.index.epsilon) << ',' << format_double(r.f_avg) << ','
     << format_double(r.std_error) << ',' << format_double(r.seeds_used_avg) << ','
     << format_double(r.rr_regens_avg) << ',' << format_double(r.wall_time);
  return os.str();
}

}  // namespace aim
