#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "aim/graph.hpp"

namespace aim {

/// One live/dead realization of every edge of a graph.
class PossibleWorld {
 public:
  PossibleWorld() = default;
  PossibleWorld(std::uint64_t graph_hash, std::uint64_t seed, std::size_t m);

  std::uint64_t graph_hash() const noexcept { return graph_hash_; }
  std::uint64_t seed() const noexcept { return seed_; }
  std::size_t m() const noexcept { return m_; }

  bool live(EdgeId e) const { return (words_[e >> 6] >> (e & 63)) & 1U; }
  void set_live(EdgeId e, bool value);
  void set_graph_hash(std::uint64_t h) noexcept { graph_hash_ = h; }
  std::size_t live_count() const;

  std::span<const std::uint64_t> words() const noexcept { return words_; }

  friend bool operator==(const PossibleWorld&, const PossibleWorld&) = default;

 private:
  std::uint64_t graph_hash_ = 0;
  std::uint64_t seed_ = 0;
  std::size_t m_ = 0;
  std::vector<std::uint64_t> words_;
};

/// Edge e is live with probability p_e, independently, drawn in edge order.
PossibleWorld sample_world(const ProbGraph& g, std::uint64_t seed);

/// Binary persistence: "AIMW" magic, version, graph hash, seed, m, bit words.
void save_world(std::ostream& out, const PossibleWorld& w);
PossibleWorld load_world(std::istream& in);

using Step = std::uint32_t;

struct Horizon {
  std::optional<Step> steps;  ///< nullopt = run to quiescence

  static Horizon bounded(Step t) { return Horizon{t}; }
  static Horizon unbounded() { return Horizon{}; }
  bool is_bounded() const noexcept { return steps.has_value(); }
};

struct Intervention {
  Step time = 0;
  std::vector<NodeId> nodes;
};

/// Interventions ordered by strictly increasing time with disjoint node sets.
using SeedingSchedule = std::vector<Intervention>;

/// Throws std::invalid_argument when times are not strictly increasing or a
/// node appears in two interventions.
void validate_schedule(const SeedingSchedule& schedule, std::size_t n);

inline constexpr std::int32_t kNever = -1;

struct DiffusionResult {
  std::vector<NodeId> active;                ///< ascending ids
  std::vector<std::int32_t> activation_time; ///< per node, kNever if inactive
  Step steps_run = 0;
};

/*
 * Incremental synchronous independent-cascade process inside one world.
 *
 * Nodes activated at step t attempt their live out-edges at step t + 1 and
 * never again. Seeding an already-active node is a no-op. Policies drive it
 * by alternating seed() with advance()/run_to_quiescence() and read the
 * active set in between.
 */
class Diffusion {
 public:
  Diffusion(const ProbGraph& g, const PossibleWorld& w);

  Step time() const noexcept { return time_; }

  /// Activates nodes at the current step. Returns how many were newly activated.
  std::size_t seed(std::span<const NodeId> nodes);

  /// One synchronous transmission round. Returns the number of new activations.
  std::size_t step();

  /// Steps until `target` (no-op if already there). Idle steps are skipped.
  void advance_to(Step target);

  /// Steps until no node is left to transmit.
  void run_to_quiescence();

  bool quiescent() const noexcept { return frontier_.empty(); }
  std::size_t active_count() const noexcept { return active_count_; }
  bool is_active(NodeId v) const { return activation_time_[v] != kNever; }
  std::int32_t activation_time(NodeId v) const { return activation_time_[v]; }
  std::optional<Step> last_activation() const { return last_activation_; }

  std::vector<NodeId> active_nodes() const;
  const std::vector<std::uint8_t>& active_mask() const noexcept { return active_mask_; }
  DiffusionResult result() const;

 private:
  const ProbGraph* g_;
  const PossibleWorld* w_;
  Step time_ = 0;
  std::size_t active_count_ = 0;
  std::optional<Step> last_activation_;
  std::vector<std::int32_t> activation_time_;
  std::vector<std::uint8_t> active_mask_;
  std::vector<NodeId> frontier_;
  std::vector<NodeId> next_;
};

/// Runs a schedule. With a bounded horizon T, activations happen at steps
/// 0..T and every intervention time must be < T.
DiffusionResult diffuse(const ProbGraph& g, const PossibleWorld& w,
                        const SeedingSchedule& schedule, Horizon horizon);

/// |diffuse(w, {(0, seeds)}, horizon).active|
std::size_t spread(const ProbGraph& g, const PossibleWorld& w, std::span<const NodeId> seeds,
                   Horizon horizon);

struct SpreadEstimate {
  double mean = 0.0;
  double std_error = 0.0;
  std::vector<double> per_world;
};

/// Mean spread over worlds seeded world_seed(master_seed, i), i < num_worlds.
SpreadEstimate expected_spread_mc(const ProbGraph& g, std::span<const NodeId> seeds,
                                  Horizon horizon, std::size_t num_worlds,
                                  std::uint64_t master_seed);

/// Sample mean and standard error of the mean.
std::pair<double, double> mean_stderr(std::span<const double> xs);

}  // namespace aim
