#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "aim/graph.hpp"
#include "aim/random.hpp"

namespace aim {

/// Nodes that reach `root` over edges flipped live during one reverse
/// exploration. A root that is masked in the sampled view yields an empty set:
/// it is already active and can never be newly influenced.
struct RRSet {
  NodeId root = 0;
  std::vector<NodeId> members;  ///< root first, then discovery order
  std::size_t width = 0;        ///< in-edges of members with nonzero probability
};

/// Reusable scratch space for reverse breadth-first sampling.
class RRSampler {
 public:
  explicit RRSampler(std::size_t n) : stamp_(n, 0) {}

  /// Root drawn uniformly over all nodes, in-edges flipped lazily.
  RRSet sample(const GraphView& view, Rng& rng);
  RRSet sample_from(const GraphView& view, NodeId root, Rng& rng);

 private:
  std::vector<std::uint32_t> stamp_;
  std::uint32_t epoch_ = 0;
};

RRSet sample_rr(const GraphView& view, Rng& rng);

struct IndexSizing {
  std::size_t theta = 0;
  double lambda = 0.0;         ///< (8 + 2 eps) n (ell ln n + ln C(n,k) + ln 2) / eps^2
  double lower_bound = 0.0;    ///< LB on the optimum expected spread
  std::size_t pilot_sets = 0;  ///< RR sets drawn to estimate LB
};

/*
 * Number of RR sets for a (1 - 1/e - eps) guarantee with probability
 * 1 - n^-ell: theta = lambda / LB.
 *
 * LB is a single-pass estimate of KPT: over min(n ln n, 1e6) pilot RR sets,
 * LB = n * mean(1 - (1 - width(R)/m)^k), floored at min(k, unmasked nodes).
 * This skips the iterative refinement of the full two-phase method, so it is
 * an approximation of the published bound, not a certified one.
 */
IndexSizing size_index(const GraphView& view, std::size_t k, double epsilon, double ell,
                       std::uint64_t seed);

/// Sets, their transpose, and the alive flags used by greedy elimination.
class RRIndex {
 public:
  RRIndex() = default;
  explicit RRIndex(std::size_t n) : n_(n), inv_offsets_(n + 1, 0) {}

  static RRIndex from_sets(std::size_t n, std::span<const RRSet> sets);

  std::size_t n() const noexcept { return n_; }
  std::size_t size() const noexcept { return roots_.size(); }
  bool empty() const noexcept { return roots_.empty(); }

  NodeId root(std::size_t set) const { return roots_[set]; }
  std::span<const NodeId> members(std::size_t set) const {
    return {members_.data() + offsets_[set], members_.data() + offsets_[set + 1]};
  }
  /// All sets containing v, alive or not.
  std::span<const std::uint32_t> sets_of(NodeId v) const {
    return {inverted_.data() + inv_offsets_[v], inverted_.data() + inv_offsets_[v + 1]};
  }

  bool alive(std::size_t set) const { return alive_[set] != 0; }
  std::size_t alive_count() const noexcept { return alive_count_; }
  void retire(std::size_t set);
  /// Retires every alive set containing one of `nodes`; returns how many.
  std::size_t retire_containing(std::span<const NodeId> nodes);

  std::uint64_t graph_hash = 0;
  std::uint64_t seed = 0;

 private:
  std::size_t n_ = 0;
  std::vector<NodeId> roots_;
  std::vector<std::size_t> offsets_{0};
  std::vector<NodeId> members_;
  std::vector<std::size_t> inv_offsets_{0};
  std::vector<std::uint32_t> inverted_;
  std::vector<std::uint8_t> alive_;
  std::size_t alive_count_ = 0;
};

/// theta samples. Set i comes from chunk i / kChunk with its own derived rng,
/// so contents do not depend on the number of workers.
RRIndex build_index(const GraphView& view, std::size_t theta, std::uint64_t seed);

inline constexpr std::size_t kRRChunk = 512;

struct GreedyResult {
  std::vector<NodeId> seeds;
  std::vector<double> covered_fraction;  ///< after each seed, over sets alive at start
  std::vector<std::size_t> gains;        ///< sets newly covered by each seed
  std::size_t covered = 0;
};

/*
 * Lazy-greedy maximum coverage over the alive sets. Picks up to k nodes,
 * ties broken by the smallest id, and retires the sets each pick covers.
 * Stops early when no node covers an alive set, or when `stop(covered)`
 * returns true after a pick. Nodes with a nonzero entry in `excluded` are
 * never picked. Throws std::invalid_argument on an empty index.
 */
GreedyResult greedy_cover(RRIndex& idx, std::size_t k,
                          const std::function<bool(std::size_t covered)>& stop = {},
                          const std::vector<std::uint8_t>* excluded = nullptr);

/// n * (alive sets hit by seeds) / size(). Throws on an empty index.
double estimate_spread(const RRIndex& idx, std::span<const NodeId> seeds);

/// Dump: "AIMR" magic, graph hash, theta, seed, then per set: root, length, members.
void save_index(std::ostream& out, const RRIndex& idx);
RRIndex load_index(std::istream& in, std::size_t n);

}  // namespace aim
