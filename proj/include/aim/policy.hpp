#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "aim/graph.hpp"
#include "aim/world.hpp"

namespace aim {

/// One (seeds-per-intervention, wait-steps) pair of a cyclic schedule.
struct SchedulePair {
  std::size_t seeds = 1;
  Step wait = 1;

  friend bool operator==(const SchedulePair&, const SchedulePair&) = default;
};

/// The p pairs repeated cyclically by a bounded-horizon policy.
using InterventionSchedule = std::vector<SchedulePair>;

std::string format_schedule(const InterventionSchedule& schedule);

/*
 * Walks a cyclic schedule: interventions at t = 0, t1, t1 + t2, ... while
 * t < horizon. With a budget, an intervention that would overshoot it seeds
 * only the remaining budget and is the last one.
 */
class ScheduleCursor {
 public:
  ScheduleCursor(InterventionSchedule schedule, Step horizon,
                 std::optional<std::size_t> budget);

  struct Next {
    Step time;
    std::size_t seeds;
  };
  /// Next planned intervention, or nullopt once time or budget run out.
  /// `used` is the number of seeds actually placed so far.
  std::optional<Next> next(std::size_t used);

 private:
  InterventionSchedule schedule_;
  Step horizon_;
  std::optional<std::size_t> budget_;
  std::size_t pair_ = 0;
  std::uint64_t time_ = 0;
  bool done_ = false;
};

enum class PolicyKind { NonAdaptive, Adaptive };

struct RegenPolicy {
  enum class Kind { Full, Lazy } kind = Kind::Full;
  std::size_t threshold = 10;  ///< lazy: rebuild once this many nodes activated since the last build

  static RegenPolicy full() { return {Kind::Full, 0}; }
  static RegenPolicy lazy(std::size_t threshold) { return {Kind::Lazy, threshold}; }
  std::string name() const;
};

/// Parameters shared by every RR-index build a policy performs.
struct IndexOptions {
  double epsilon = 0.1;
  double ell = 1.0;
  std::optional<std::size_t> rr_count;  ///< pins theta, bypassing size_index
};

struct PolicySpec {
  PolicyKind kind = PolicyKind::Adaptive;
  std::size_t budget = 1;
  std::size_t batch = 1;
  Horizon horizon = Horizon::unbounded();
  RegenPolicy regen = RegenPolicy::full();
  IndexOptions index;
  std::optional<InterventionSchedule> schedule;  ///< bounded horizon only

  /// Throws std::invalid_argument on b > k, b = 0, bounded T = 0, k > n.
  void validate(std::size_t n) const;
};

struct InterventionRecord {
  Step time = 0;
  std::vector<NodeId> nodes;
  std::size_t active_before = 0;
};

enum class StopReason { Budget, Horizon, Target, SeedCap, NoEligible };
const char* to_string(StopReason r);

struct PolicyTrace {
  std::vector<InterventionRecord> interventions;
  std::size_t final_active = 0;
  std::size_t seeds_used = 0;
  std::size_t rr_regens = 0;
  double wall_time = 0.0;
  StopReason stop = StopReason::Budget;
};

/// One JSON object per line.
void write_trace_jsonl(std::ostream& out, const PolicyTrace& trace, std::size_t world);

/// Greedy max-coverage over one fresh index on g; the result does not depend
/// on any world. Pads with the smallest unused ids if coverage runs out
/// before k. Throws when k > n.
std::vector<NodeId> greedy_non_adaptive(const ProbGraph& g, std::size_t k,
                                        const IndexOptions& opts, std::uint64_t seed);

/// Drives one adaptive policy inside a world. `seed` feeds every RR index the
/// run builds. Spec kind must be Adaptive.
PolicyTrace run_adaptive(const ProbGraph& g, const PolicySpec& spec, const PossibleWorld& world,
                         std::uint64_t seed);

/// Default schedule for a bounded adaptive IM run with no explicit one:
/// batches of b spread evenly, wait = max(1, T / ceil(k / b)).
InterventionSchedule default_im_schedule(std::size_t budget, std::size_t batch, Step horizon);

struct EvalReport {
  double f_avg = 0.0;
  double std_error = 0.0;
  std::vector<double> per_world;
  double seeds_used_avg = 0.0;
  double rr_regens_avg = 0.0;
  double wall_time = 0.0;
  std::vector<PolicyTrace> traces;       ///< adaptive only
  std::vector<NodeId> fixed_seeds;       ///< non-adaptive only
};

/// Runs the policy in worlds world_seed(master_seed, i), i < num_worlds.
EvalReport evaluate(const ProbGraph& g, const PolicySpec& spec, std::size_t num_worlds,
                    std::uint64_t master_seed);

struct GainEstimate {
  double gain = 0.0;
  double std_error = 0.0;  ///< delta method over paired worlds
};

/// f_avg(adaptive) / f_avg(baseline) for reports over the same worlds.
GainEstimate adaptivity_gain(const EvalReport& adaptive, const EvalReport& baseline);

/// graph,k,b,regen,epsilon,f_avg,stderr,seeds_used_avg,rr_regens_avg,wall_time
std::string eval_csv_header();
std::string eval_csv_row(const std::string& graph, const PolicySpec& spec, const EvalReport& r);

// Shared by MINTSS: the adaptive loop with an optional spread target.
namespace detail {

struct AdaptiveLoop {
  std::size_t batch = 1;
  Horizon horizon = Horizon::unbounded();
  RegenPolicy regen = RegenPolicy::full();
  IndexOptions index;
  std::optional<InterventionSchedule> schedule;
  std::optional<std::size_t> budget;  ///< IM
  std::optional<std::size_t> target;  ///< MINTSS
  std::size_t seed_cap = 0;           ///< 0 = n
};

PolicyTrace run_adaptive_loop(const ProbGraph& g, const AdaptiveLoop& cfg,
                              const PossibleWorld& world, std::uint64_t seed);

}  // namespace detail

}  // namespace aim
