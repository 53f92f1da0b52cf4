#include "aim/graph.hpp"

#include <algorithm>
#include <bit>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "aim/random.hpp"

namespace aim {

GraphError::GraphError(const std::string& what, std::size_t line)
    : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ": " + what : what),
      line_(line) {}

ProbGraph ProbGraph::from_edges(std::size_t n, std::vector<Edge> edges,
                                std::vector<bool> unassigned) {
  if (n > std::numeric_limits<NodeId>::max()) throw GraphError("too many nodes");
  if (edges.size() >= std::numeric_limits<EdgeId>::max()) throw GraphError("too many edges");
  if (!unassigned.empty() && unassigned.size() != edges.size()) {
    throw GraphError("unassigned flags do not match edge count");
  }
  for (const Edge& e : edges) {
    if (e.src >= n || e.dst >= n) throw GraphError("node id out of range");
    if (e.src == e.dst) throw GraphError("self-loop on node " + std::to_string(e.src));
    if (!(e.p >= 0.0 && e.p <= 1.0)) throw GraphError("probability outside [0,1]");
  }

  std::vector<std::size_t> order(edges.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return std::tie(edges[a].src, edges[a].dst) < std::tie(edges[b].src, edges[b].dst);
  });

  ProbGraph g;
  g.n_ = n;
  const std::size_t m = edges.size();
  g.src_.resize(m);
  g.dst_.resize(m);
  g.prob_.resize(m);
  if (!unassigned.empty()) g.unassigned_.resize(m);
  for (std::size_t i = 0; i < m; ++i) {
    const Edge& e = edges[order[i]];
    if (i > 0 && g.src_[i - 1] == e.src && g.dst_[i - 1] == e.dst) {
      throw GraphError("duplicate edge " + std::to_string(e.src) + " -> " +
                       std::to_string(e.dst));
    }
    g.src_[i] = e.src;
    g.dst_[i] = e.dst;
    g.prob_[i] = e.p;
    if (!unassigned.empty()) g.unassigned_[i] = unassigned[order[i]];
  }

  g.out_offsets_.assign(n + 1, 0);
  g.in_offsets_.assign(n + 1, 0);
  for (std::size_t i = 0; i < m; ++i) {
    ++g.out_offsets_[g.src_[i] + 1];
    ++g.in_offsets_[g.dst_[i] + 1];
  }
  std::partial_sum(g.out_offsets_.begin(), g.out_offsets_.end(), g.out_offsets_.begin());
  std::partial_sum(g.in_offsets_.begin(), g.in_offsets_.end(), g.in_offsets_.begin());

  g.in_edges_.resize(m);
  std::vector<EdgeId> cursor(g.in_offsets_.begin(), g.in_offsets_.end() - 1);
  for (std::size_t i = 0; i < m; ++i) g.in_edges_[cursor[g.dst_[i]]++] = static_cast<EdgeId>(i);
  return g;
}

EdgeId ProbGraph::find_edge(NodeId u, NodeId v) const {
  const auto first = dst_.begin() + out_begin(u);
  const auto last = dst_.begin() + out_end(u);
  const auto it = std::lower_bound(first, last, v);
  if (it != last && *it == v) return static_cast<EdgeId>(it - dst_.begin());
  return static_cast<EdgeId>(m());
}

std::size_t ProbGraph::unassigned_count() const noexcept {
  return static_cast<std::size_t>(std::count(unassigned_.begin(), unassigned_.end(), true));
}

std::vector<Edge> ProbGraph::edges() const {
  std::vector<Edge> out;
  out.reserve(m());
  for (std::size_t e = 0; e < m(); ++e) out.push_back({src_[e], dst_[e], prob_[e]});
  return out;
}

ProbGraph ProbGraph::with_probabilities(std::vector<double> probs) const {
  if (probs.size() != m()) throw GraphError("probability vector size mismatch");
  for (double p : probs) {
    if (!(p >= 0.0 && p <= 1.0)) throw GraphError("probability outside [0,1]");
  }
  ProbGraph g = *this;
  g.prob_ = std::move(probs);
  g.unassigned_.clear();
  return g;
}

bool ProbGraph::check_integrity() const {
  const std::size_t m_ = m();
  if (out_offsets_.size() != n_ + 1 || in_offsets_.size() != n_ + 1) return false;
  if (out_offsets_.back() != m_ || in_offsets_.back() != m_ || in_edges_.size() != m_) return false;

  // Forward: every edge in u's out-range has src u.
  for (NodeId u = 0; u < n_; ++u) {
    for (EdgeId e = out_begin(u); e < out_end(u); ++e) {
      if (src_[e] != u) return false;
    }
  }
  // Reverse: the multiset of (src, dst) pairs seen through in-lists equals the edge list.
  std::vector<std::uint8_t> seen(m_, 0);
  for (NodeId v = 0; v < n_; ++v) {
    for (EdgeId e : in_edges(v)) {
      if (e >= m_ || dst_[e] != v || seen[e]) return false;
      seen[e] = 1;
    }
  }
  return std::all_of(seen.begin(), seen.end(), [](std::uint8_t s) { return s == 1; });
}

std::uint64_t ProbGraph::hash() const {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  auto feed = [&h](std::uint64_t x) {
    for (int i = 0; i < 8; ++i) {
      h ^= (x >> (8 * i)) & 0xFF;
      h *= 0x100000001B3ULL;
    }
  };
  feed(n_);
  feed(m());
  for (std::size_t e = 0; e < m(); ++e) {
    feed(src_[e]);
    feed(dst_[e]);
    feed(std::bit_cast<std::uint64_t>(prob_[e]));
  }
  return h;
}

GraphView::GraphView(const ProbGraph& g, std::vector<std::uint8_t> node_mask)
    : g_(&g), mask_(std::move(node_mask)) {
  if (mask_.size() != g.n()) throw std::invalid_argument("mask size does not match graph");
}

std::size_t GraphView::masked_count() const noexcept {
  return static_cast<std::size_t>(std::count_if(mask_.begin(), mask_.end(),
                                                [](std::uint8_t b) { return b != 0; }));
}

std::size_t GraphView::effective_m() const {
  std::size_t c = 0;
  for (EdgeId e = 0; e < g_->m(); ++e) c += prob(e) > 0.0 ? 1 : 0;
  return c;
}

// ---------------------------------------------------------------------------
// Text I/O
// ---------------------------------------------------------------------------

namespace {

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    std::size_t j = i;
    while (j < line.size() && !std::isspace(static_cast<unsigned char>(line[j]))) ++j;
    if (j > i) fields.push_back(line.substr(i, j - i));
    i = j;
  }
  return fields;
}

NodeId parse_id(std::string_view tok, std::size_t line) {
  std::uint64_t v = 0;
  const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc() || ptr != tok.data() + tok.size()) {
    throw GraphError("malformed node id '" + std::string(tok) + "'", line);
  }
  if (v >= std::numeric_limits<NodeId>::max()) throw GraphError("node id too large", line);
  return static_cast<NodeId>(v);
}

double parse_prob(std::string_view tok, std::size_t line) {
  double p = 0.0;
  const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), p);
  if (ec != std::errc() || ptr != tok.data() + tok.size()) {
    throw GraphError("malformed probability '" + std::string(tok) + "'", line);
  }
  if (!(p >= 0.0 && p <= 1.0)) throw GraphError("probability outside [0,1]", line);
  return p;
}

}  // namespace

LoadedGraph load_edge_list(std::istream& in, IdMode mode) {
  LoadedGraph out;
  std::vector<Edge> edges;
  std::vector<bool> unassigned;
  std::vector<std::size_t> line_of;
  std::unordered_map<std::string, NodeId> label_ids;
  std::size_t n = 0;

  auto node_for = [&](std::string_view tok, std::size_t line) -> NodeId {
    if (mode == IdMode::Dense) {
      const NodeId id = parse_id(tok, line);
      n = std::max<std::size_t>(n, std::size_t{id} + 1);
      return id;
    }
    auto [it, inserted] = label_ids.try_emplace(std::string(tok), static_cast<NodeId>(out.labels.size()));
    if (inserted) out.labels.emplace_back(tok);
    n = out.labels.size();
    return it->second;
  };

  std::string raw;
  std::size_t line_no = 0;
  bool any_unassigned = false;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string_view line(raw);
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    const auto fields = split_fields(line);
    if (fields.empty()) continue;
    if (fields.size() < 2 || fields.size() > 3) {
      throw GraphError("expected 'src dst [p]', got " + std::to_string(fields.size()) + " fields",
                       line_no);
    }
    const NodeId u = node_for(fields[0], line_no);
    const NodeId v = node_for(fields[1], line_no);
    if (u == v) throw GraphError("self-loop on node '" + std::string(fields[0]) + "'", line_no);
    const bool has_p = fields.size() == 3;
    const double p = has_p ? parse_prob(fields[2], line_no) : 0.0;
    any_unassigned |= !has_p;
    edges.push_back({u, v, p});
    unassigned.push_back(!has_p);
    line_of.push_back(line_no);
  }

  // Report duplicates against the line that repeats an earlier edge.
  {
    std::unordered_set<std::uint64_t> seen;
    seen.reserve(edges.size() * 2);
    for (std::size_t i = 0; i < edges.size(); ++i) {
      const std::uint64_t key = (std::uint64_t{edges[i].src} << 32) | edges[i].dst;
      if (!seen.insert(key).second) throw GraphError("duplicate edge", line_of[i]);
    }
  }

  if (!any_unassigned) unassigned.clear();
  out.graph = ProbGraph::from_edges(n, std::move(edges), std::move(unassigned));
  return out;
}

LoadedGraph load_edge_list_file(const std::string& path, IdMode mode) {
  std::ifstream in(path);
  if (!in) throw GraphError("cannot open graph file '" + path + "'");
  return load_edge_list(in, mode);
}

void write_edge_list(std::ostream& out, const ProbGraph& g) {
  out << "# n=" << g.n() << " m=" << g.m() << "\n";
  char buf[64];
  for (std::size_t e = 0; e < g.m(); ++e) {
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, g.prob(static_cast<EdgeId>(e)));
    out << g.src(static_cast<EdgeId>(e)) << ' ' << g.dst(static_cast<EdgeId>(e)) << ' '
        << std::string_view(buf, static_cast<std::size_t>(ptr - buf)) << '\n';
  }
}

void write_edge_list_file(const std::string& path, const ProbGraph& g) {
  std::ofstream out(path);
  if (!out) throw GraphError("cannot write graph file '" + path + "'");
  write_edge_list(out, g);
}

void write_label_map(std::ostream& out, std::span<const std::string> labels) {
  for (std::size_t id = 0; id < labels.size(); ++id) out << labels[id] << '\t' << id << '\n';
}

// ---------------------------------------------------------------------------
// Probability assignment and generators
// ---------------------------------------------------------------------------

ProbGraph assign_weighted_cascade(const ProbGraph& g) {
  std::vector<double> probs(g.m());
  for (std::size_t e = 0; e < g.m(); ++e) {
    probs[e] = 1.0 / static_cast<double>(g.in_degree(g.dst(static_cast<EdgeId>(e))));
  }
  return g.with_probabilities(std::move(probs));
}

SyntheticModel parse_synthetic_model(const std::string& name) {
  if (name == "erdos-renyi" || name == "er") return SyntheticModel::ErdosRenyi;
  if (name == "layered-dag" || name == "dag") return SyntheticModel::LayeredDag;
  if (name == "small-world" || name == "ws") return SyntheticModel::SmallWorld;
  throw std::invalid_argument("unknown synthetic model '" + name + "'");
}

ProbGraph generate_synthetic(SyntheticModel model, const SyntheticParams& params,
                             std::uint64_t seed) {
  if (!(params.p >= 0.0 && params.p <= 1.0)) throw std::invalid_argument("p must be in [0,1]");
  Rng rng(seed);
  std::vector<Edge> edges;

  switch (model) {
    case SyntheticModel::ErdosRenyi: {
      if (params.n < 1) throw std::invalid_argument("n must be >= 1");
      if (!(params.density >= 0.0 && params.density <= 1.0)) {
        throw std::invalid_argument("density must be in [0,1]");
      }
      for (NodeId u = 0; u < params.n; ++u) {
        for (NodeId v = 0; v < params.n; ++v) {
          if (u != v && rng.bernoulli(params.density)) edges.push_back({u, v, params.p});
        }
      }
      return ProbGraph::from_edges(params.n, std::move(edges));
    }
    case SyntheticModel::LayeredDag: {
      if (params.layers < 1 || params.width < 1) {
        throw std::invalid_argument("layers and width must be >= 1");
      }
      if (!(params.layer_density >= 0.0 && params.layer_density <= 1.0)) {
        throw std::invalid_argument("layer density must be in [0,1]");
      }
      const std::size_t w = params.width;
      for (std::size_t layer = 0; layer + 1 < params.layers; ++layer) {
        for (std::size_t i = 0; i < w; ++i) {
          for (std::size_t j = 0; j < w; ++j) {
            if (rng.bernoulli(params.layer_density)) {
              edges.push_back({static_cast<NodeId>(layer * w + i),
                               static_cast<NodeId>((layer + 1) * w + j), params.p});
            }
          }
        }
      }
      return ProbGraph::from_edges(params.layers * w, std::move(edges));
    }
    case SyntheticModel::SmallWorld: {
      const std::size_t n = params.n;
      const std::size_t k = params.neighbors;
      if (n < 1) throw std::invalid_argument("n must be >= 1");
      if (k % 2 != 0 || k >= n) throw std::invalid_argument("neighbors must be even and < n");
      if (!(params.rewire >= 0.0 && params.rewire <= 1.0)) {
        throw std::invalid_argument("rewire must be in [0,1]");
      }
      std::vector<std::unordered_set<NodeId>> out(n);
      for (std::size_t u = 0; u < n; ++u) {
        for (std::size_t d = 1; d <= k / 2; ++d) {
          out[u].insert(static_cast<NodeId>((u + d) % n));
          out[u].insert(static_cast<NodeId>((u + n - d) % n));
        }
      }
      for (std::size_t u = 0; u < n; ++u) {
        std::vector<NodeId> targets(out[u].begin(), out[u].end());
        std::sort(targets.begin(), targets.end());
        for (NodeId v : targets) {
          if (!rng.bernoulli(params.rewire) || out[u].size() + 1 >= n) continue;
          NodeId w;
          do {
            w = static_cast<NodeId>(rng.below(n));
          } while (w == u || out[u].count(w) > 0);
          out[u].erase(v);
          out[u].insert(w);
        }
      }
      for (std::size_t u = 0; u < n; ++u) {
        std::vector<NodeId> targets(out[u].begin(), out[u].end());
        std::sort(targets.begin(), targets.end());
        for (NodeId v : targets) edges.push_back({static_cast<NodeId>(u), v, params.p});
      }
      return ProbGraph::from_edges(n, std::move(edges));
    }
  }
  throw std::invalid_argument("unknown synthetic model");
}

GraphStats depth_bound(const ProbGraph& g) {
  GraphStats s;
  s.n = g.n();
  s.m = g.m();
  for (NodeId u = 0; u < g.n(); ++u) {
    s.max_in_degree = std::max(s.max_in_degree, g.in_degree(u));
    s.max_out_degree = std::max(s.max_out_degree, g.out_degree(u));
  }

  // Kahn's algorithm; longest[v] = longest path (in edges) ending at v.
  std::vector<std::size_t> indeg(g.n());
  for (NodeId v = 0; v < g.n(); ++v) indeg[v] = g.in_degree(v);
  std::vector<NodeId> queue;
  for (NodeId v = 0; v < g.n(); ++v) {
    if (indeg[v] == 0) queue.push_back(v);
  }
  std::vector<std::size_t> longest(g.n(), 0);
  std::size_t processed = 0;
  while (processed < queue.size()) {
    const NodeId u = queue[processed++];
    for (EdgeId e = g.out_begin(u); e < g.out_end(u); ++e) {
      const NodeId v = g.dst(e);
      longest[v] = std::max(longest[v], longest[u] + 1);
      if (--indeg[v] == 0) queue.push_back(v);
    }
  }

  if (processed == g.n()) {
    s.exact = true;
    s.diffusion_depth_bound = g.n() == 0 ? 0 : *std::max_element(longest.begin(), longest.end());
  } else {
    s.exact = false;
    s.diffusion_depth_bound = g.n() - 1;
  }
  return s;
}

}  // namespace aim
