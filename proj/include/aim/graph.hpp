#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace aim {

using NodeId = std::uint32_t;
using EdgeId = std::uint32_t;

/// Raised for every ingestion failure. Carries the 1-based line number when
/// the error comes from a text source (0 otherwise).
class GraphError : public std::runtime_error {
 public:
  GraphError(const std::string& what, std::size_t line = 0);
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

struct Edge {
  NodeId src;
  NodeId dst;
  double p;

  friend bool operator==(const Edge&, const Edge&) = default;
};

/*
 * Immutable directed graph with per-edge influence probabilities.
 *
 * Edges are stored in canonical (src, dst) order, so the out-edges of node u
 * are the contiguous edge ids [out_begin(u), out_end(u)). The reverse index
 * lists, for each node, the ids of its in-edges ordered by source.
 */
class ProbGraph {
 public:
  ProbGraph() = default;

  /// Validates and canonicalizes. Rejects self-loops, parallel edges,
  /// out-of-range ids and probabilities outside [0, 1].
  static ProbGraph from_edges(std::size_t n, std::vector<Edge> edges,
                              std::vector<bool> unassigned = {});

  std::size_t n() const noexcept { return n_; }
  std::size_t m() const noexcept { return src_.size(); }

  NodeId src(EdgeId e) const { return src_[e]; }
  NodeId dst(EdgeId e) const { return dst_[e]; }
  double prob(EdgeId e) const { return prob_[e]; }
  std::span<const double> probs() const noexcept { return prob_; }

  EdgeId out_begin(NodeId u) const { return out_offsets_[u]; }
  EdgeId out_end(NodeId u) const { return out_offsets_[u + 1]; }
  std::size_t out_degree(NodeId u) const { return out_end(u) - out_begin(u); }

  std::span<const EdgeId> in_edges(NodeId v) const {
    return {in_edges_.data() + in_offsets_[v], in_edges_.data() + in_offsets_[v + 1]};
  }
  std::size_t in_degree(NodeId v) const { return in_offsets_[v + 1] - in_offsets_[v]; }

  /// Edge id of (u, v), or m() if absent.
  EdgeId find_edge(NodeId u, NodeId v) const;

  /// Edges whose probability was missing in the source text.
  std::size_t unassigned_count() const noexcept;
  bool unassigned(EdgeId e) const { return !unassigned_.empty() && unassigned_[e]; }

  std::vector<Edge> edges() const;

  /// Copy with new probabilities (same topology); clears unassigned flags.
  ProbGraph with_probabilities(std::vector<double> probs) const;

  /// Re-derives both adjacency indexes from scratch and compares them with the
  /// stored ones. Returns false on any mismatch.
  bool check_integrity() const;

  /// FNV-1a over the canonical edge list (ids and probability bit patterns).
  std::uint64_t hash() const;

 private:
  std::size_t n_ = 0;
  std::vector<NodeId> src_;
  std::vector<NodeId> dst_;
  std::vector<double> prob_;
  std::vector<bool> unassigned_;
  std::vector<EdgeId> out_offsets_{0};
  std::vector<EdgeId> in_offsets_{0};
  std::vector<EdgeId> in_edges_;
};

/// Read-only probability view of a graph. With a node mask, every edge
/// incident to a masked node reads as probability 0; the graph is untouched.
class GraphView {
 public:
  GraphView(const ProbGraph& g) : g_(&g) {}  // NOLINT(google-explicit-constructor)
  GraphView(const ProbGraph& g, std::vector<std::uint8_t> node_mask);

  const ProbGraph& graph() const noexcept { return *g_; }
  std::size_t n() const noexcept { return g_->n(); }
  std::size_t m() const noexcept { return g_->m(); }

  bool masked(NodeId v) const { return !mask_.empty() && mask_[v] != 0; }
  bool has_mask() const noexcept { return !mask_.empty(); }
  std::size_t masked_count() const noexcept;

  double prob(EdgeId e) const {
    if (!mask_.empty() && (mask_[g_->src(e)] || mask_[g_->dst(e)])) return 0.0;
    return g_->prob(e);
  }

  /// Number of edges with nonzero probability in the view.
  std::size_t effective_m() const;

 private:
  const ProbGraph* g_;
  std::vector<std::uint8_t> mask_;
};

enum class IdMode {
  Dense,   ///< tokens are 0-based integer ids; n = max id + 1
  Labels,  ///< tokens are arbitrary labels remapped in first-appearance order
};

struct LoadedGraph {
  ProbGraph graph;
  std::vector<std::string> labels;  ///< id -> label (Labels mode only)
};

/// Parses "src dst [p]" lines; '#' starts a comment.
LoadedGraph load_edge_list(std::istream& in, IdMode mode = IdMode::Dense);
LoadedGraph load_edge_list_file(const std::string& path, IdMode mode = IdMode::Dense);

/// Writes the canonical edge list with round-trip exact probabilities.
void write_edge_list(std::ostream& out, const ProbGraph& g);
void write_edge_list_file(const std::string& path, const ProbGraph& g);

/// "label<TAB>id" lines.
void write_label_map(std::ostream& out, std::span<const std::string> labels);

/// p(u, v) = 1 / in_degree(v).
ProbGraph assign_weighted_cascade(const ProbGraph& g);

enum class SyntheticModel { ErdosRenyi, LayeredDag, SmallWorld };

struct SyntheticParams {
  std::size_t n = 100;        ///< ER, small-world
  double density = 0.01;      ///< ER: arc probability
  std::size_t layers = 3;     ///< layered DAG
  std::size_t width = 2;      ///< layered DAG
  double layer_density = 1.0; ///< layered DAG: arc probability between adjacent layers
  std::size_t neighbors = 4;  ///< small-world: ring lattice out-degree (even)
  double rewire = 0.1;        ///< small-world: rewiring probability
  double p = 0.1;             ///< probability assigned to every generated edge
};

/// Deterministic for fixed (model, params, seed).
ProbGraph generate_synthetic(SyntheticModel model, const SyntheticParams& params,
                             std::uint64_t seed);

SyntheticModel parse_synthetic_model(const std::string& name);

struct GraphStats {
  std::size_t n = 0;
  std::size_t m = 0;
  std::size_t max_in_degree = 0;
  std::size_t max_out_degree = 0;
  std::size_t diffusion_depth_bound = 0;
  bool exact = false;  ///< true when the graph is a DAG and the bound is its longest path
};

/// Longest path length for DAGs, n - 1 otherwise.
GraphStats depth_bound(const ProbGraph& g);

}  // namespace aim
