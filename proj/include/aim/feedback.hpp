#pragma once

#include <cstdint>
#include <vector>

#include "aim/graph.hpp"
#include "aim/world.hpp"

namespace aim {

/// Node-level observation: which nodes are active at step t.
struct NetworkState {
  Step t = 0;
  std::vector<std::uint8_t> active;  ///< per-node 0/1
  std::vector<std::uint8_t> seeded;  ///< per-node 0/1: seeded by the schedule at or before t
  bool quiescent = false;            ///< no transmission pending after t

  std::size_t active_count() const;
  std::vector<NodeId> active_nodes() const;
};

/// Active set after running `schedule_so_far` up to and including step t.
/// Interventions after t are ignored.
NetworkState observe(const ProbGraph& g, const PossibleWorld& w,
                     const SeedingSchedule& schedule_so_far, Step t);

enum class EdgeStatus : std::uint8_t {
  Unknown,        ///< source inactive
  Dead,           ///< rule 1: active source, inactive target
  Live,           ///< rule 2: target's only active in-neighbor, target not a seed
  ArbitraryLive,  ///< rule 3
  ArbitraryDead,  ///< rule 3
};

const char* to_string(EdgeStatus s);

/// Which way rule-3 edges are set.
enum class TieRule {
  EvenIndexLive,  ///< live iff edge index is even (default)
  AllLive,
  AllDead,
};

struct EdgeStatusMap {
  std::vector<EdgeStatus> status;
  /// False when the state was observed before diffusion completed. The rules
  /// are still applied but rule 1 may mislabel edges that have yet to fire.
  bool sound = false;
};

EdgeStatusMap infer_edges(const ProbGraph& g, const NetworkState& s,
                          TieRule tie = TieRule::EvenIndexLive);

/// View where every edge touching an active node has probability 0.
GraphView mask_active(const ProbGraph& g, const NetworkState& s);
GraphView mask_active(const ProbGraph& g, const std::vector<std::uint8_t>& active);

}  // namespace aim
