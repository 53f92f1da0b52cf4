#include "aim/rrset.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <queue>
#include <stdexcept>

#include "aim/parallel.hpp"

namespace aim {

RRSet RRSampler::sample(const GraphView& view, Rng& rng) {
  if (view.n() == 0) throw std::invalid_argument("cannot sample an RR set from an empty graph");
  const auto root = static_cast<NodeId>(rng.below(view.n()));
  return sample_from(view, root, rng);
}

RRSet RRSampler::sample_from(const GraphView& view, NodeId root, Rng& rng) {
  RRSet rr;
  rr.root = root;
  if (view.masked(root)) return rr;

  if (++epoch_ == 0) {
    std::fill(stamp_.begin(), stamp_.end(), 0);
    epoch_ = 1;
  }
  const ProbGraph& g = view.graph();
  rr.members.push_back(root);
  stamp_[root] = epoch_;
  for (std::size_t head = 0; head < rr.members.size(); ++head) {
    const NodeId v = rr.members[head];
    for (EdgeId e : g.in_edges(v)) {
      const double p = view.prob(e);
      if (p <= 0.0) continue;
      ++rr.width;
      const NodeId u = g.src(e);
      if (stamp_[u] == epoch_) continue;
      if (rng.bernoulli(p)) {
        stamp_[u] = epoch_;
        rr.members.push_back(u);
      }
    }
  }
  return rr;
}

RRSet sample_rr(const GraphView& view, Rng& rng) {
  RRSampler sampler(view.n());
  return sampler.sample(view, rng);
}

// ---------------------------------------------------------------------------
// Sizing
// ---------------------------------------------------------------------------

IndexSizing size_index(const GraphView& view, std::size_t k, double epsilon, double ell,
                       std::uint64_t seed) {
  if (!(epsilon > 0.0 && epsilon < 1.0)) throw std::invalid_argument("epsilon must be in (0,1)");
  if (k < 1) throw std::invalid_argument("k must be >= 1");
  const std::size_t n = view.n();
  if (n == 0) throw std::invalid_argument("graph has no nodes");
  k = std::min(k, n);

  const double nd = static_cast<double>(n);
  const double log_binom = std::lgamma(nd + 1.0) - std::lgamma(static_cast<double>(k) + 1.0) -
                           std::lgamma(nd - static_cast<double>(k) + 1.0);
  IndexSizing s;
  s.lambda = (8.0 + 2.0 * epsilon) * nd * (ell * std::log(nd) + log_binom + std::log(2.0)) /
             (epsilon * epsilon);

  const std::size_t m_eff = view.effective_m();
  const std::size_t unmasked = n - view.masked_count();
  const double floor_lb = static_cast<double>(std::max<std::size_t>(1, std::min(k, unmasked)));
  double kpt = 0.0;
  if (m_eff > 0) {
    s.pilot_sets = static_cast<std::size_t>(
        std::min(1e6, std::max(1.0, std::ceil(nd * std::log(nd)))));
    Rng rng(derive_seed(seed, Stream::Pilot, 0));
    RRSampler sampler(n);
    double sum = 0.0;
    const double md = static_cast<double>(m_eff);
    for (std::size_t i = 0; i < s.pilot_sets; ++i) {
      const RRSet rr = sampler.sample(view, rng);
      const double frac = std::min(1.0, static_cast<double>(rr.width) / md);
      sum += 1.0 - std::pow(1.0 - frac, static_cast<double>(k));
    }
    kpt = nd * sum / static_cast<double>(s.pilot_sets);
  }
  s.lower_bound = std::max(kpt, floor_lb);
  s.theta = static_cast<std::size_t>(std::ceil(s.lambda / s.lower_bound));
  return s;
}

// ---------------------------------------------------------------------------
// Index
// ---------------------------------------------------------------------------

RRIndex RRIndex::from_sets(std::size_t n, std::span<const RRSet> sets) {
  RRIndex idx(n);
  idx.roots_.reserve(sets.size());
  idx.offsets_.reserve(sets.size() + 1);
  std::size_t total = 0;
  for (const RRSet& s : sets) total += s.members.size();
  idx.members_.reserve(total);

  for (const RRSet& s : sets) {
    idx.roots_.push_back(s.root);
    for (NodeId v : s.members) {
      if (v >= n) throw std::invalid_argument("RR member out of range");
      idx.members_.push_back(v);
      ++idx.inv_offsets_[v + 1];
    }
    idx.offsets_.push_back(idx.members_.size());
  }
  for (std::size_t v = 0; v < n; ++v) idx.inv_offsets_[v + 1] += idx.inv_offsets_[v];
  idx.inverted_.resize(total);
  std::vector<std::size_t> cursor(idx.inv_offsets_.begin(), idx.inv_offsets_.end() - 1);
  for (std::size_t s = 0; s < idx.roots_.size(); ++s) {
    for (NodeId v : idx.members(s)) idx.inverted_[cursor[v]++] = static_cast<std::uint32_t>(s);
  }
  idx.alive_.assign(idx.roots_.size(), 1);
  idx.alive_count_ = idx.roots_.size();
  return idx;
}

void RRIndex::retire(std::size_t set) {
  if (alive_[set]) {
    alive_[set] = 0;
    --alive_count_;
  }
}

std::size_t RRIndex::retire_containing(std::span<const NodeId> nodes) {
  std::size_t retired = 0;
  for (NodeId v : nodes) {
    for (std::uint32_t s : sets_of(v)) {
      if (alive_[s]) {
        retire(s);
        ++retired;
      }
    }
  }
  return retired;
}

RRIndex build_index(const GraphView& view, std::size_t theta, std::uint64_t seed) {
  const std::size_t chunks = (theta + kRRChunk - 1) / kRRChunk;
  std::vector<std::vector<RRSet>> parts(chunks);
  parallel_for(chunks, [&](std::size_t c) {
    Rng rng(derive_seed(seed, Stream::RRIndex, c));
    RRSampler sampler(view.n());
    const std::size_t count = std::min(kRRChunk, theta - c * kRRChunk);
    parts[c].reserve(count);
    for (std::size_t i = 0; i < count; ++i) parts[c].push_back(sampler.sample(view, rng));
  });
  std::vector<RRSet> sets;
  sets.reserve(theta);
  for (auto& part : parts) {
    for (auto& s : part) sets.push_back(std::move(s));
  }
  RRIndex idx = RRIndex::from_sets(view.n(), sets);
  idx.graph_hash = 0;
  idx.seed = seed;
  return idx;
}

GreedyResult greedy_cover(RRIndex& idx, std::size_t k,
                          const std::function<bool(std::size_t)>& stop,
                          const std::vector<std::uint8_t>* excluded) {
  if (idx.empty()) throw std::invalid_argument("greedy_cover on an empty RR index");
  const std::size_t n = idx.n();
  const std::size_t alive_at_start = idx.alive_count();

  std::vector<std::size_t> count(n, 0);
  for (NodeId v = 0; v < n; ++v) {
    for (std::uint32_t s : idx.sets_of(v)) count[v] += idx.alive(s) ? 1 : 0;
  }

  // Max-heap on (count, -id): equal counts pop the smallest id first.
  using Entry = std::pair<std::size_t, std::int64_t>;
  std::priority_queue<Entry> heap;
  for (NodeId v = 0; v < n; ++v) {
    if (count[v] > 0 && !(excluded && (*excluded)[v])) heap.emplace(count[v], -std::int64_t{v});
  }

  GreedyResult r;
  while (r.seeds.size() < k && !heap.empty()) {
    const auto [stored, neg_id] = heap.top();
    heap.pop();
    const auto v = static_cast<NodeId>(-neg_id);
    if (stored != count[v]) {
      if (count[v] > 0) heap.emplace(count[v], neg_id);
      continue;
    }
    const std::size_t gain = count[v];
    for (std::uint32_t s : idx.sets_of(v)) {
      if (!idx.alive(s)) continue;
      idx.retire(s);
      for (NodeId u : idx.members(s)) --count[u];
    }
    r.covered += gain;
    r.seeds.push_back(v);
    r.gains.push_back(gain);
    r.covered_fraction.push_back(alive_at_start == 0 ? 0.0
                                                     : static_cast<double>(r.covered) /
                                                           static_cast<double>(alive_at_start));
    if (stop && stop(r.covered)) break;
  }
  return r;
}

double estimate_spread(const RRIndex& idx, std::span<const NodeId> seeds) {
  if (idx.empty()) throw std::invalid_argument("estimate_spread on an empty RR index");
  std::vector<std::uint8_t> hit(idx.size(), 0);
  std::size_t hits = 0;
  for (NodeId v : seeds) {
    for (std::uint32_t s : idx.sets_of(v)) {
      if (idx.alive(s) && !hit[s]) {
        hit[s] = 1;
        ++hits;
      }
    }
  }
  return static_cast<double>(idx.n()) * static_cast<double>(hits) /
         static_cast<double>(idx.size());
}

namespace {

constexpr char kIndexMagic[4] = {'A', 'I', 'M', 'R'};

template <typename T>
void put(std::ostream& out, T value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof value);
}

template <typename T>
T get(std::istream& in) {
  T value{};
  if (!in.read(reinterpret_cast<char*>(&value), sizeof value)) {
    throw std::runtime_error("truncated RR index file");
  }
  return value;
}

}  // namespace

void save_index(std::ostream& out, const RRIndex& idx) {
  out.write(kIndexMagic, 4);
  put<std::uint64_t>(out, idx.graph_hash);
  put<std::uint64_t>(out, idx.size());
  put<std::uint64_t>(out, idx.seed);
  for (std::size_t s = 0; s < idx.size(); ++s) {
    const auto members = idx.members(s);
    put<std::uint32_t>(out, idx.root(s));
    put<std::uint32_t>(out, static_cast<std::uint32_t>(members.size()));
    for (NodeId v : members) put<std::uint32_t>(out, v);
  }
}

RRIndex load_index(std::istream& in, std::size_t n) {
  char magic[4];
  if (!in.read(magic, 4) || !std::equal(magic, magic + 4, kIndexMagic)) {
    throw std::runtime_error("not an RR index file");
  }
  const auto hash = get<std::uint64_t>(in);
  const auto theta = get<std::uint64_t>(in);
  const auto seed = get<std::uint64_t>(in);
  std::vector<RRSet> sets(theta);
  for (auto& s : sets) {
    s.root = get<std::uint32_t>(in);
    s.members.resize(get<std::uint32_t>(in));
    for (auto& v : s.members) v = get<std::uint32_t>(in);
  }
  RRIndex idx = RRIndex::from_sets(n, sets);
  idx.graph_hash = hash;
  idx.seed = seed;
  return idx;
}

}  // namespace aim
