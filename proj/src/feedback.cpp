#include "aim/feedback.hpp"

#include <algorithm>

namespace aim {

std::size_t NetworkState::active_count() const {
  return static_cast<std::size_t>(
      std::count_if(active.begin(), active.end(), [](std::uint8_t a) { return a != 0; }));
}

std::vector<NodeId> NetworkState::active_nodes() const {
  std::vector<NodeId> out;
  for (NodeId v = 0; v < active.size(); ++v) {
    if (active[v]) out.push_back(v);
  }
  return out;
}

NetworkState observe(const ProbGraph& g, const PossibleWorld& w,
                     const SeedingSchedule& schedule_so_far, Step t) {
  validate_schedule(schedule_so_far, g.n());
  NetworkState s;
  s.t = t;
  s.seeded.assign(g.n(), 0);

  Diffusion d(g, w);
  bool pending = false;
  for (const Intervention& iv : schedule_so_far) {
    if (iv.time > t) {
      pending = true;
      break;
    }
    d.advance_to(iv.time);
    d.seed(iv.nodes);
    for (NodeId v : iv.nodes) s.seeded[v] = 1;
  }
  d.advance_to(t);
  s.active = d.active_mask();
  s.quiescent = d.quiescent() && !pending;
  return s;
}

const char* to_string(EdgeStatus s) {
  switch (s) {
    case EdgeStatus::Unknown: return "unknown";
    case EdgeStatus::Dead: return "dead";
    case EdgeStatus::Live: return "live";
    case EdgeStatus::ArbitraryLive: return "arbitrary-live";
    case EdgeStatus::ArbitraryDead: return "arbitrary-dead";
  }
  return "?";
}

EdgeStatusMap infer_edges(const ProbGraph& g, const NetworkState& s, TieRule tie) {
  EdgeStatusMap out;
  out.status.assign(g.m(), EdgeStatus::Unknown);
  out.sound = s.quiescent;

  auto is_active = [&](NodeId v) { return s.active[v] != 0; };
  auto is_seed = [&](NodeId v) { return !s.seeded.empty() && s.seeded[v] != 0; };

  for (EdgeId e = 0; e < g.m(); ++e) {
    const NodeId u = g.src(e);
    const NodeId v = g.dst(e);
    if (!is_active(u)) continue;
    if (!is_active(v)) {
      out.status[e] = EdgeStatus::Dead;
      continue;
    }
    std::size_t active_in = 0;
    for (EdgeId in : g.in_edges(v)) active_in += is_active(g.src(in)) ? 1 : 0;
    // A non-seed active node was reached through some live in-edge; when the
    // source is its only active in-neighbor that edge must be this one.
    if (active_in == 1 && !is_seed(v)) {
      out.status[e] = EdgeStatus::Live;
      continue;
    }
    bool live = false;
    switch (tie) {
      case TieRule::EvenIndexLive: live = e % 2 == 0; break;
      case TieRule::AllLive: live = true; break;
      case TieRule::AllDead: live = false; break;
    }
    out.status[e] = live ? EdgeStatus::ArbitraryLive : EdgeStatus::ArbitraryDead;
  }
  return out;
}

GraphView mask_active(const ProbGraph& g, const std::vector<std::uint8_t>& active) {
  if (std::none_of(active.begin(), active.end(), [](std::uint8_t a) { return a != 0; })) {
    return GraphView(g);
  }
  return GraphView(g, active);
}

GraphView mask_active(const ProbGraph& g, const NetworkState& s) {
  return mask_active(g, s.active);
}

}  // namespace aim
