#include "aim/mintss.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <sstream>

#include "aim/parallel.hpp"
#include "aim/random.hpp"
#include "aim/rrset.hpp"

namespace aim {

void MintssSpec::validate(std::size_t n) const {
  if (target < 1 || target > n) throw std::invalid_argument("target Q must be in [1, n]");
  if (!(beta >= 0.0 && beta < static_cast<double>(target))) {
    throw std::invalid_argument("beta must be in [0, Q)");
  }
  if (batch < 1) throw std::invalid_argument("batch size must be >= 1");
  if (horizon.is_bounded() && *horizon.steps < 1) throw std::invalid_argument("horizon must be >= 1");
  if (!(index.epsilon > 0.0 && index.epsilon < 1.0)) {
    throw std::invalid_argument("epsilon must be in (0,1)");
  }
}

TargetUnreachable::TargetUnreachable(std::vector<NodeId> seeds, double estimate)
    : std::runtime_error("target unreachable within the seed cap (estimate " +
                         std::to_string(estimate) + " after " + std::to_string(seeds.size()) +
                         " seeds)"),
      seeds_(std::move(seeds)),
      estimate_(estimate) {}

NonAdaptiveMintss mintss_non_adaptive(const ProbGraph& g, const MintssSpec& spec,
                                      std::uint64_t seed) {
  spec.validate(g.n());
  if (!(spec.beta > 0.0)) throw std::invalid_argument("non-adaptive MINTSS needs beta > 0");
  const std::size_t cap = spec.seed_cap == 0 ? g.n() : std::min(spec.seed_cap, g.n());

  const GraphView view(g);
  const std::size_t theta =
      spec.index.rr_count
          ? *spec.index.rr_count
          : size_index(view, 1, spec.index.epsilon, spec.index.ell,
                       derive_seed(seed, Stream::Pilot, 0))
                .theta;
  RRIndex idx = build_index(view, theta, derive_seed(seed, 0));
  const double n = static_cast<double>(g.n());
  const double goal = static_cast<double>(spec.target) - spec.beta;
  auto estimate_of = [&](std::size_t covered) {
    return n * static_cast<double>(covered) / static_cast<double>(idx.size());
  };

  NonAdaptiveMintss out;
  const GreedyResult greedy =
      greedy_cover(idx, cap, [&](std::size_t covered) { return estimate_of(covered) >= goal; });
  out.seeds = greedy.seeds;
  out.estimate = estimate_of(greedy.covered);
  if (out.estimate < goal) throw TargetUnreachable(out.seeds, out.estimate);
  return out;
}

PolicyTrace mintss_adaptive(const ProbGraph& g, const MintssSpec& spec, const PossibleWorld& world,
                            std::uint64_t seed) {
  spec.validate(g.n());
  detail::AdaptiveLoop cfg;
  cfg.batch = spec.batch;
  cfg.horizon = spec.horizon;
  cfg.regen = spec.regen;
  cfg.index = spec.index;
  cfg.schedule = spec.schedule;
  cfg.target = spec.target;
  cfg.seed_cap = spec.seed_cap;
  return detail::run_adaptive_loop(g, cfg, world, seed);
}

MintssReport evaluate_mintss(const ProbGraph& g, const MintssSpec& spec, PolicyKind kind,
                             std::size_t num_worlds, std::uint64_t master_seed) {
  if (num_worlds == 0) throw std::invalid_argument("num_worlds must be >= 1");
  spec.validate(g.n());
  const auto start = std::chrono::steady_clock::now();
  MintssReport r;
  r.seeds_used.resize(num_worlds);
  r.spread.resize(num_worlds);

  if (kind == PolicyKind::NonAdaptive) {
    const NonAdaptiveMintss fixed =
        mintss_non_adaptive(g, spec, derive_seed(master_seed, Stream::RRIndex, ~std::uint64_t{0}));
    parallel_for(num_worlds, [&](std::size_t i) {
      const PossibleWorld w = sample_world(g, world_seed(master_seed, i));
      r.spread[i] = static_cast<double>(spread(g, w, fixed.seeds, spec.horizon));
      r.seeds_used[i] = static_cast<double>(fixed.seeds.size());
    });
  } else {
    parallel_for(num_worlds, [&](std::size_t i) {
      const PossibleWorld w = sample_world(g, world_seed(master_seed, i));
      const PolicyTrace t =
          mintss_adaptive(g, spec, w, derive_seed(master_seed, Stream::RRIndex, i));
      r.spread[i] = static_cast<double>(t.final_active);
      r.seeds_used[i] = static_cast<double>(t.seeds_used);
    });
  }

  const double q = static_cast<double>(spec.target);
  r.shortfall.resize(num_worlds);
  std::size_t hits = 0;
  double shortfall_sum = 0.0;
  for (std::size_t i = 0; i < num_worlds; ++i) {
    r.shortfall[i] = std::max(0.0, q - r.spread[i]);
    shortfall_sum += r.shortfall[i];
    hits += r.spread[i] >= q ? 1 : 0;
  }
  std::tie(r.c_avg, r.c_stderr) = mean_stderr(r.seeds_used);
  r.hit_rate = static_cast<double>(hits) / static_cast<double>(num_worlds);
  r.mean_shortfall = shortfall_sum / static_cast<double>(num_worlds);
  r.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return r;
}

std::string mintss_csv_header() { return "Q,b,c_avg,stderr,hit_rate,mean_shortfall,wall_time"; }

std::string mintss_csv_row(const MintssSpec& spec, const MintssReport& r) {
  std::ostringstream os;
  os.precision(10);
  os << spec.target << ',' << spec.batch << ',' << r.c_avg << ',' << r.c_stderr << ','
     << r.hit_rate << ',' << r.mean_shortfall << ',' << r.wall_time;
  return os.str();
}

}  // namespace aim
