#include "aim/bounds.hpp"

#include <array>
#include <cmath>
#include <numbers>
#include <ostream>
#include <sstream>
#include <vector>

#include "aim/graph.hpp"
#include "aim/world.hpp"

namespace aim::bounds {

namespace {

double checked_log(double arg, const char* what) {
  if (!(arg >= 1.0) || !std::isfinite(arg)) {
    throw BoundUndefined(std::string("bound undefined for these shortfalls: ") + what +
                         " has an argument below 1");
  }
  return std::log(arg);
}

}  // namespace

double default_gamma() {
  const double e = std::numbers::e;
  return (e / (e - 1.0)) * (e / (e - 1.0));
}

double batch_greedy_factor(double l, double m, double alpha, double gamma) {
  if (!(m > 0.0) || !(alpha > 0.0) || !(gamma > 0.0)) {
    throw std::invalid_argument("batch counts, alpha and gamma must be positive");
  }
  return 1.0 - std::exp(-l / (alpha * gamma * m));
}

double prop1_ratio(const BoundParams& p) {
  if (!(p.b_ga > 0.0) || !(p.b_oa > 0.0)) throw std::invalid_argument("batch sizes must be positive");
  const double l = std::ceil(p.n_ga / p.b_ga);
  const double m = std::ceil(p.n_oa / p.b_oa);
  return batch_greedy_factor(l, m, p.alpha, p.gamma);
}

double gna_factor(double epsilon) {
  const double base = 1.0 - 1.0 / std::numbers::e - epsilon;
  if (epsilon < 0.0 || base < 0.0) throw std::invalid_argument("epsilon must be in [0, 1 - 1/e]");
  return base * base;
}

double gna_vs_oa_factor(double n_gna, double n_ona, double n_oa, double epsilon) {
  if (!(n_ona > 0.0) || !(n_oa > 0.0)) throw std::invalid_argument("seed counts must be positive");
  const double gap = 1.0 - std::exp(-n_ona / n_oa) - epsilon;
  const double greedy = 1.0 - std::exp(-n_gna / n_ona) - epsilon;
  return gap * greedy;
}

double intermediate_ona_bound(double q, double beta_ona) {
  return checked_log(q / (q - beta_ona), "ln(Q / (Q - beta_ona))");
}

double intermediate_gna_bound(double q, double beta_ona, double beta_gna, double epsilon) {
  return checked_log((q - beta_ona) / (beta_gna - epsilon * (q - beta_ona)),
                     "ln((Q - beta_ona) / (beta_gna - eps (Q - beta_ona)))");
}

SeedBounds mintss_seed_bounds(const BoundParams& p) {
  SeedBounds b;
  b.n_ga_over_oa = p.alpha * p.gamma * checked_log(p.q / p.beta_ga, "ln(Q / beta_ga)");
  b.beta_ona = p.beta_ona.value_or(p.beta_ga - p.beta_gna);
  const double first = checked_log(p.q / (b.beta_ona - p.q * p.epsilon), "ln(Q / (beta_ona - Q eps))");
  const double second = intermediate_gna_bound(p.q, b.beta_ona, p.beta_gna, p.epsilon);
  b.n_gna_over_oa = first * second;
  b.degenerate = b.n_ga_over_oa == 0.0 || b.n_gna_over_oa == 0.0;
  return b;
}

CounterexampleWitness theorem3_counterexample(double p) {
  if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument("p must be in (0, 1)");

  const ProbGraph g = ProbGraph::from_edges(3, {{0, 1, p}, {1, 2, p}});
  constexpr NodeId u = 0;
  constexpr NodeId v = 1;
  constexpr NodeId w = 2;
  constexpr Step horizon = 2;
  constexpr Step observe_at = 1;
  const EdgeId uv = g.find_edge(u, v);
  const EdgeId vw = g.find_edge(v, w);

  PossibleWorld truth(g.hash(), 0, g.m());
  truth.set_live(uv, true);
  truth.set_live(vw, false);

  // E[spread at T | active set at t = 1 equals the true world's], with an
  // optional extra seed placed at t = 1.
  auto conditional_spread = [&](const std::vector<NodeId>& initial,
                                const std::vector<NodeId>& extra) {
    Diffusion real(g, truth);
    real.seed(initial);
    real.advance_to(observe_at);
    const auto observed = real.active_mask();
    double mass = 0.0;
    double total = 0.0;
    for (unsigned bits = 0; bits < (1U << g.m()); ++bits) {
      PossibleWorld world(g.hash(), bits, g.m());
      double weight = 1.0;
      for (EdgeId e = 0; e < g.m(); ++e) {
        const bool live = (bits >> e) & 1U;
        world.set_live(e, live);
        weight *= live ? g.prob(e) : 1.0 - g.prob(e);
      }
      Diffusion d(g, world);
      d.seed(initial);
      d.advance_to(observe_at);
      if (d.active_mask() != observed) continue;
      d.seed(extra);
      d.advance_to(horizon);
      mass += weight;
      total += weight * static_cast<double>(d.active_count());
    }
    return total / mass;
  };

  CounterexampleWitness out;
  out.p = p;
  out.sigma_s = conditional_spread({u}, {});
  out.sigma_s_w = conditional_spread({u}, {w});
  out.sigma_s_prime = conditional_spread({u, v}, {});
  out.sigma_s_prime_w = conditional_spread({u, v}, {w});
  out.gain_s = out.sigma_s_w - out.sigma_s;
  out.gain_s_prime = out.sigma_s_prime_w - out.sigma_s_prime;
  out.violates_submodularity = out.gain_s < out.gain_s_prime;

  constexpr double tol = 1e-12;
  out.matches_closed_form = std::abs(out.sigma_s - (2.0 + p)) < tol &&
                            std::abs(out.sigma_s_w - 3.0) < tol &&
                            std::abs(out.sigma_s_prime - 2.0) < tol &&
                            std::abs(out.sigma_s_prime_w - 3.0) < tol;
  return out;
}

QRange parse_q_range(const std::string& text) {
  QRange r;
  char c1 = 0;
  char c2 = 0;
  std::istringstream in(text);
  if (!(in >> r.lo >> c1 >> r.hi >> c2 >> r.step) || c1 != ':' || c2 != ':') {
    throw std::invalid_argument("Q range must be lo:hi:step");
  }
  if (!(r.step > 0.0) || r.hi < r.lo) throw std::invalid_argument("invalid Q range");
  return r;
}

void emit_bound_curves(std::ostream& out, const QRange& range, BoundParams params) {
  if (!(range.step > 0.0) || range.hi < range.lo) throw std::invalid_argument("invalid Q range");
  out << "Q,n_ga_over_oa,n_gna_over_oa\n";
  out.precision(12);
  const auto points = static_cast<std::size_t>(std::floor((range.hi - range.lo) / range.step + 1e-9));
  for (std::size_t i = 0; i <= points; ++i) {
    params.q = range.lo + static_cast<double>(i) * range.step;
    const SeedBounds b = mintss_seed_bounds(params);
    out << params.q << ',' << b.n_ga_over_oa << ',' << b.n_gna_over_oa << '\n';
  }
}

BoundParams comparison_curve_params() {
  BoundParams p;
  p.alpha = 1.0;
  p.epsilon = 0.0;
  p.beta_ga = 2.0;
  p.beta_ona = 1.0;
  p.beta_gna = 2.0;
  return p;
}

}  // namespace aim::bounds
