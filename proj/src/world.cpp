#include "aim/world.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>

#include "aim/parallel.hpp"
#include "aim/random.hpp"

namespace aim {

PossibleWorld::PossibleWorld(std::uint64_t graph_hash, std::uint64_t seed, std::size_t m)
    : graph_hash_(graph_hash), seed_(seed), m_(m), words_((m + 63) / 64, 0) {}

void PossibleWorld::set_live(EdgeId e, bool value) {
  const std::uint64_t bit = std::uint64_t{1} << (e & 63);
  if (value) {
    words_[e >> 6] |= bit;
  } else {
    words_[e >> 6] &= ~bit;
  }
}

std::size_t PossibleWorld::live_count() const {
  std::size_t c = 0;
  for (std::uint64_t w : words_) c += static_cast<std::size_t>(std::popcount(w));
  return c;
}

PossibleWorld sample_world(const ProbGraph& g, std::uint64_t seed) {
  // Hashing the graph costs as much as sampling; callers that persist worlds
  // stamp it with set_graph_hash.
  PossibleWorld w(0, seed, g.m());
  Rng rng(seed);
  for (EdgeId e = 0; e < g.m(); ++e) {
    if (rng.bernoulli(g.prob(e))) w.set_live(e, true);
  }
  return w;
}

namespace {

constexpr char kWorldMagic[4] = {'A', 'I', 'M', 'W'};
constexpr std::uint32_t kWorldVersion = 1;

template <typename T>
void put(std::ostream& out, T value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof value);
}

template <typename T>
T get(std::istream& in) {
  T value{};
  if (!in.read(reinterpret_cast<char*>(&value), sizeof value)) {
    throw std::runtime_error("truncated world file");
  }
  return value;
}

}  // namespace

void save_world(std::ostream& out, const PossibleWorld& w) {
  out.write(kWorldMagic, 4);
  put(out, kWorldVersion);
  put(out, w.graph_hash());
  put(out, w.seed());
  put(out, static_cast<std::uint64_t>(w.m()));
  for (std::uint64_t word : w.words()) put(out, word);
}

PossibleWorld load_world(std::istream& in) {
  char magic[4];
  if (!in.read(magic, 4) || !std::equal(magic, magic + 4, kWorldMagic)) {
    throw std::runtime_error("not a world file");
  }
  if (get<std::uint32_t>(in) != kWorldVersion) throw std::runtime_error("unsupported world version");
  const auto hash = get<std::uint64_t>(in);
  const auto seed = get<std::uint64_t>(in);
  const auto m = get<std::uint64_t>(in);
  PossibleWorld w(hash, seed, m);
  for (std::size_t i = 0; i < (m + 63) / 64; ++i) {
    const auto word = get<std::uint64_t>(in);
    for (std::size_t b = 0; b < 64 && i * 64 + b < m; ++b) {
      if ((word >> b) & 1U) w.set_live(static_cast<EdgeId>(i * 64 + b), true);
    }
  }
  return w;
}

void validate_schedule(const SeedingSchedule& schedule, std::size_t n) {
  std::vector<std::uint8_t> used(n, 0);
  for (std::size_t i = 0; i < schedule.size(); ++i) {
    if (i > 0 && schedule[i].time <= schedule[i - 1].time) {
      throw std::invalid_argument("schedule times must be strictly increasing");
    }
    for (NodeId v : schedule[i].nodes) {
      if (v >= n) throw std::invalid_argument("scheduled node out of range");
      if (used[v]) throw std::invalid_argument("node " + std::to_string(v) + " scheduled twice");
      used[v] = 1;
    }
  }
}

// ---------------------------------------------------------------------------
// Diffusion
// ---------------------------------------------------------------------------

Diffusion::Diffusion(const ProbGraph& g, const PossibleWorld& w)
    : g_(&g), w_(&w), activation_time_(g.n(), kNever), active_mask_(g.n(), 0) {
  if (w.m() != g.m()) throw std::invalid_argument("world does not match graph");
}

std::size_t Diffusion::seed(std::span<const NodeId> nodes) {
  std::size_t fresh = 0;
  for (NodeId v : nodes) {
    if (v >= g_->n()) throw std::invalid_argument("seed node out of range");
    if (active_mask_[v]) continue;
    active_mask_[v] = 1;
    activation_time_[v] = static_cast<std::int32_t>(time_);
    frontier_.push_back(v);
    ++fresh;
  }
  if (fresh > 0) {
    active_count_ += fresh;
    last_activation_ = time_;
  }
  return fresh;
}

std::size_t Diffusion::step() {
  ++time_;
  next_.clear();
  for (NodeId u : frontier_) {
    for (EdgeId e = g_->out_begin(u); e < g_->out_end(u); ++e) {
      const NodeId v = g_->dst(e);
      if (active_mask_[v] || !w_->live(e)) continue;
      active_mask_[v] = 1;
      activation_time_[v] = static_cast<std::int32_t>(time_);
      next_.push_back(v);
    }
  }
  frontier_.swap(next_);
  if (!frontier_.empty()) {
    active_count_ += frontier_.size();
    last_activation_ = time_;
  }
  return frontier_.size();
}

void Diffusion::advance_to(Step target) {
  while (time_ < target) {
    if (frontier_.empty()) {
      time_ = target;
      return;
    }
    step();
  }
}

void Diffusion::run_to_quiescence() {
  while (!frontier_.empty()) step();
}

std::vector<NodeId> Diffusion::active_nodes() const {
  std::vector<NodeId> out;
  out.reserve(active_count_);
  for (NodeId v = 0; v < g_->n(); ++v) {
    if (active_mask_[v]) out.push_back(v);
  }
  return out;
}

DiffusionResult Diffusion::result() const {
  DiffusionResult r;
  r.active = active_nodes();
  r.activation_time = activation_time_;
  r.steps_run = time_;
  return r;
}

DiffusionResult diffuse(const ProbGraph& g, const PossibleWorld& w,
                        const SeedingSchedule& schedule, Horizon horizon) {
  validate_schedule(schedule, g.n());
  if (horizon.is_bounded()) {
    for (const Intervention& iv : schedule) {
      if (iv.time >= *horizon.steps) {
        throw std::invalid_argument("intervention at t=" + std::to_string(iv.time) +
                                    " is not before the horizon " +
                                    std::to_string(*horizon.steps));
      }
    }
  }

  Diffusion d(g, w);
  for (const Intervention& iv : schedule) {
    d.advance_to(iv.time);
    d.seed(iv.nodes);
  }
  DiffusionResult r;
  if (horizon.is_bounded()) {
    d.advance_to(*horizon.steps);
    r = d.result();
    r.steps_run = *horizon.steps;
  } else {
    d.run_to_quiescence();
    r = d.result();
    r.steps_run = d.last_activation().value_or(0);
  }
  return r;
}

std::size_t spread(const ProbGraph& g, const PossibleWorld& w, std::span<const NodeId> seeds,
                   Horizon horizon) {
  if (horizon.is_bounded() && *horizon.steps == 0) {
    throw std::invalid_argument("horizon must be >= 1");
  }
  Diffusion d(g, w);
  d.seed(seeds);
  if (horizon.is_bounded()) {
    d.advance_to(*horizon.steps);
  } else {
    d.run_to_quiescence();
  }
  return d.active_count();
}

std::pair<double, double> mean_stderr(std::span<const double> xs) {
  if (xs.empty()) return {0.0, 0.0};
  double sum = 0.0;
  for (double x : xs) sum += x;
  const double mean = sum / static_cast<double>(xs.size());
  if (xs.size() < 2) return {mean, 0.0};
  double ss = 0.0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  const double var = ss / static_cast<double>(xs.size() - 1);
  return {mean, std::sqrt(var / static_cast<double>(xs.size()))};
}

SpreadEstimate expected_spread_mc(const ProbGraph& g, std::span<const NodeId> seeds,
                                  Horizon horizon, std::size_t num_worlds,
                                  std::uint64_t master_seed) {
  if (num_worlds == 0) throw std::invalid_argument("num_worlds must be >= 1");
  SpreadEstimate est;
  est.per_world.resize(num_worlds);
  parallel_for(num_worlds, [&](std::size_t i) {
    const PossibleWorld w = sample_world(g, world_seed(master_seed, i));
    est.per_world[i] = static_cast<double>(spread(g, w, seeds, horizon));
  });
  std::tie(est.mean, est.std_error) = mean_stderr(est.per_world);
  return est;
}

}  // namespace aim
