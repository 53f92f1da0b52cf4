#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "aim/graph.hpp"
#include "aim/policy.hpp"
#include "aim/world.hpp"

namespace aim::smbo {

/// p (seeds, wait) pairs, repeated cyclically; p = pairs.size().
struct PolicyConfig {
  InterventionSchedule pairs;

  std::size_t complexity() const noexcept { return pairs.size(); }
  friend bool operator==(const PolicyConfig&, const PolicyConfig&) = default;
  friend bool operator<(const PolicyConfig& a, const PolicyConfig& b);
};

/// Integer box the tuner searches: s in [1, s_max], t in [1, t_max].
struct SearchSpace {
  std::size_t p = 1;
  std::size_t s_max = 100;
  Step t_max = 1;

  std::size_t dimensions() const noexcept { return 2 * p; }
  /// Number of distinct configs, saturating at SIZE_MAX.
  std::size_t size() const noexcept;
  bool contains(const PolicyConfig& c) const noexcept;

  /// s_max = min(100, n), t_max = max(1, depth bound of g).
  static SearchSpace for_graph(const ProbGraph& g, std::size_t p);
};

/// A bundle seed that expands deterministically into ten world seeds.
struct Instance {
  static constexpr std::size_t kWorlds = 10;
  std::uint64_t bundle_seed = 0;

  std::array<std::uint64_t, kWorlds> world_seeds() const noexcept;
};

/// Training instances are indexed from 0; test instances from a disjoint range.
std::vector<Instance> training_instances(std::uint64_t master_seed, std::size_t count);
std::vector<Instance> test_instances(std::uint64_t master_seed, std::size_t count);

struct TunerBudget {
  std::size_t max_evaluations = 500;
  std::size_t train_instances = 1000;
  std::size_t test_instances = 50;
  double surrogate_time_cap = 100.0;  ///< seconds spent fitting and optimizing the surrogate
};

enum class Penalty { Hinge, Linear };

struct Objective {
  enum class Problem { InfluenceMax, Mintss } problem = Problem::InfluenceMax;
  std::size_t budget = 1;   ///< k, influence maximization
  std::size_t target = 1;   ///< Q, MINTSS
  double lambda1 = 10.0;    ///< weight on falling short of Q
  double lambda2 = 1.0;     ///< weight on overshooting Q
  Penalty penalty = Penalty::Hinge;
  Step horizon = 1;
  RegenPolicy regen = RegenPolicy::full();
  IndexOptions index;

  static Objective influence(std::size_t k, Step horizon);
  static Objective mintss(std::size_t q, Step horizon);

  /// MINTSS cost of one run: seeds + lambda1 (Q - f)+ + lambda2 (f - Q)+ with
  /// hinge penalties, or seeds + lambda1 (Q - f) + lambda2 (f - Q) in linear mode.
  double mintss_cost(double seeds, double spread) const;
};

struct PlannedIntervention {
  Step time = 0;
  std::size_t seeds = 0;
  friend bool operator==(const PlannedIntervention&, const PlannedIntervention&) = default;
};

/// Interventions the config would place before T. With a budget, the last one
/// takes whatever remains; without one (MINTSS) the caller stops on the target.
std::vector<PlannedIntervention> unroll(const PolicyConfig& config,
                                        std::optional<std::size_t> budget, Step horizon);

struct RunOutcome {
  double seeds = 0.0;
  double spread = 0.0;
  double cost = 0.0;
};

/// Runs the bounded-horizon adaptive policy in every world of one instance
/// and averages. IM cost is -spread; MINTSS cost is mintss_cost per run.
RunOutcome evaluate_instance(const ProbGraph& g, const PolicyConfig& config,
                             const Objective& objective, const Instance& instance,
                             std::uint64_t master_seed);

/// Mean cost over instances. Pure in (config, objective, instances, master_seed).
double evaluate_config(const PolicyConfig& config, const Objective& objective,
                       const std::vector<Instance>& instances, const ProbGraph& g,
                       std::uint64_t master_seed);

/// Random forest of regression trees with mean and spread predictions.
class Forest {
 public:
  struct Options {
    std::size_t trees = 32;
    std::size_t min_split = 2;
    std::size_t max_depth = 24;
    std::size_t thresholds = 4;  ///< random split points tried per feature
  };

  Forest() = default;
  explicit Forest(Options opts) : opts_(opts) {}

  void fit(const std::vector<std::vector<double>>& x, const std::vector<double>& y,
           std::uint64_t seed);

  struct Prediction {
    double mean = 0.0;
    double sd = 0.0;
  };
  Prediction predict(const std::vector<double>& x) const;
  bool fitted() const noexcept { return !trees_.empty(); }

 private:
  struct Node {
    int feature = -1;  ///< -1 marks a leaf
    double threshold = 0.0;
    std::uint32_t left = 0;
    std::uint32_t right = 0;
    double value = 0.0;
    double variance = 0.0;
  };
  using Tree = std::vector<Node>;

  Options opts_;
  std::vector<Tree> trees_;
};

/// Expected improvement below `best` for a minimization objective.
double expected_improvement(double best, double mean, double sd);

enum class Strategy { Smbo, RandomSearch };
const char* to_string(Strategy s);

/// Cost of one config on one training instance (index into the instance list).
using CostFn = std::function<double(const PolicyConfig&, std::size_t instance)>;

struct Evaluation {
  std::size_t iteration = 0;
  PolicyConfig config;
  std::size_t instance = 0;
  double cost = 0.0;
  PolicyConfig incumbent;
  double incumbent_cost = 0.0;  ///< incumbent's mean over its evaluated instances
};

struct TuneResult {
  PolicyConfig best;
  double best_cost = 0.0;
  std::size_t best_instances = 0;
  std::vector<Evaluation> history;
};

/*
 * Sequential model-based search over `space`. Every history entry is one
 * (config, instance) run. The incumbent is only replaced by a challenger that
 * has been run on all of the incumbent's instances and whose mean over them
 * is not larger. Random search shares the same racing, drawing proposals
 * uniformly instead of from the surrogate.
 */
TuneResult tune(const SearchSpace& space, const CostFn& cost, std::size_t num_instances,
                const TunerBudget& budget, Strategy strategy, std::uint64_t seed);

/// One JSON object per history entry: iteration, config, instance, cost, incumbent.
void write_history_jsonl(std::ostream& out, const TuneResult& result);

struct PolicyReport {
  Step horizon = 0;
  double shortfall = 0.0;  ///< MINTSS mean (Q - f)+; 0 for IM
  double seeds = 0.0;
  double spread = 0.0;
  double objective = 0.0;
  PolicyConfig policy;
};

/// Evaluates a tuned config on held-out instances.
PolicyReport report_policy(const ProbGraph& g, const PolicyConfig& best, const Objective& objective,
                           const std::vector<Instance>& instances, std::uint64_t master_seed);

/// T,shortfall,seeds,objective,pairs
std::string report_csv_header();
std::string report_csv_row(const PolicyReport& r);

}  // namespace aim::smbo
