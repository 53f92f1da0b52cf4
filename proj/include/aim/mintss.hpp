#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "aim/graph.hpp"
#include "aim/policy.hpp"
#include "aim/world.hpp"

namespace aim {

struct MintssSpec {
  std::size_t target = 1;  ///< Q
  double beta = 0.5;       ///< shortfall allowed to the non-adaptive estimate
  std::size_t batch = 1;
  Horizon horizon = Horizon::unbounded();
  RegenPolicy regen = RegenPolicy::full();
  IndexOptions index{0.2, 1.0, std::nullopt};
  std::size_t seed_cap = 0;  ///< 0 = n
  std::optional<InterventionSchedule> schedule;

  /// Throws std::invalid_argument unless 0 < Q <= n and 0 <= beta < Q.
  void validate(std::size_t n) const;
};

/// The greedy seed set reached seed_cap before its estimate met Q - beta.
class TargetUnreachable : public std::runtime_error {
 public:
  TargetUnreachable(std::vector<NodeId> seeds, double estimate);
  const std::vector<NodeId>& seeds() const noexcept { return seeds_; }
  double estimate() const noexcept { return estimate_; }

 private:
  std::vector<NodeId> seeds_;
  double estimate_;
};

struct NonAdaptiveMintss {
  std::vector<NodeId> seeds;
  double estimate = 0.0;  ///< RR estimate of the seed set's expected spread
};

/// Grows a greedy seed set one node at a time until the RR estimate reaches
/// Q - beta. Requires beta > 0.
NonAdaptiveMintss mintss_non_adaptive(const ProbGraph& g, const MintssSpec& spec,
                                      std::uint64_t seed);

/// Adaptive greedy that stops seeding once the observed active count reaches
/// Q. Under a bounded horizon the target is checked after every step; the
/// trace's stop reason records whether Q, T or the seed cap ended the run.
PolicyTrace mintss_adaptive(const ProbGraph& g, const MintssSpec& spec, const PossibleWorld& world,
                            std::uint64_t seed);

struct MintssReport {
  std::vector<double> seeds_used;
  std::vector<double> spread;
  std::vector<double> shortfall;  ///< max(0, Q - spread)
  double c_avg = 0.0;
  double c_stderr = 0.0;
  double hit_rate = 0.0;
  double mean_shortfall = 0.0;
  double wall_time = 0.0;
};

MintssReport evaluate_mintss(const ProbGraph& g, const MintssSpec& spec, PolicyKind kind,
                             std::size_t num_worlds, std::uint64_t master_seed);

/// Q,b,c_avg,stderr,hit_rate,mean_shortfall,wall_time
std::string mintss_csv_header();
std::string mintss_csv_row(const MintssSpec& spec, const MintssReport& r);

}  // namespace aim
