#pragma once

#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace aim::bounds {

/// (e / (e - 1))^2, the batch-greedy constant.
double default_gamma();

struct BoundParams {
  double alpha = 1.0;  ///< multiplicative marginal-gain error, >= 1
  double gamma = default_gamma();
  double epsilon = 0.0;  ///< additive marginal-gain error
  double q = 0.0;
  double beta_ga = 1.0;
  double beta_gna = 1.0;
  /// When unset, the non-adaptive bound substitutes beta_ona = beta_ga - beta_gna.
  std::optional<double> beta_ona;
  double b_ga = 1.0;
  double b_oa = 1.0;
  double n_ga = 1.0;
  double n_oa = 1.0;
};

/// Raised when a logarithm in a bound has an argument below 1, which would
/// make the seed bound negative or undefined.
class BoundUndefined : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// 1 - exp(-l / (alpha gamma m)) for l greedy batches against m optimal ones.
double batch_greedy_factor(double l, double m, double alpha, double gamma);

/// Batch-greedy adaptive vs optimal adaptive with (possibly different) batch
/// sizes: 1 - exp(-ceil(n_ga / b_ga) / (alpha gamma ceil(n_oa / b_oa))).
double prop1_ratio(const BoundParams& p);

/// (1 - 1/e - eps)^2: greedy non-adaptive vs optimal adaptive, equal budgets.
double gna_factor(double epsilon);

/// Greedy non-adaptive with n_gna seeds vs optimal adaptive with n_oa, as the
/// product of the adaptivity-gap factor (1 - e^{-n_ona/n_oa} - eps) and the
/// greedy factor (1 - e^{-n_gna/n_ona} - eps).
double gna_vs_oa_factor(double n_gna, double n_ona, double n_oa, double epsilon);

struct SeedBounds {
  double n_ga_over_oa = 0.0;   ///< alpha gamma ln(Q / beta_ga)
  double n_gna_over_oa = 0.0;  ///< ln(Q / (beta_ona - Q eps)) ln((Q - beta_ona) / (beta_gna - eps (Q - beta_ona)))
  double beta_ona = 0.0;
  bool degenerate = false;     ///< some bound evaluated to exactly 0 (log of one)
};

/// Both MINTSS seed-count bounds relative to n_oa. Throws BoundUndefined when
/// a log argument is below 1.
SeedBounds mintss_seed_bounds(const BoundParams& p);

/// n_ona / n_oa <= ln(Q / (Q - beta_ona)).
double intermediate_ona_bound(double q, double beta_ona);

/// n_gna / n_ona <= ln((Q - beta_ona) / (beta_gna - eps (Q - beta_ona))).
double intermediate_gna_bound(double q, double beta_ona, double beta_gna, double epsilon);

/*
 * Executable witness that spread is not adaptive submodular under incomplete
 * diffusion. Three nodes u -> v -> w, both edges with probability p, horizon
 * T = 2, next intervention at t = 1, true world: (u,v) live, (v,w) dead.
 *
 * S = {u}: at t = 1 the observation is {u, v}; (v,w) has not fired yet.
 * S' = {u, v}: at t = 1 the observation is {u, v} and w inactive, so (v,w)
 * is revealed dead.
 *
 * Every expected spread is computed by enumerating the four worlds and
 * conditioning on the observation; closed forms are kept alongside.
 */
struct CounterexampleWitness {
  double p = 0.0;
  double sigma_s = 0.0;         ///< 2 + p
  double sigma_s_w = 0.0;       ///< 3
  double sigma_s_prime = 0.0;   ///< 2
  double sigma_s_prime_w = 0.0; ///< 3
  double gain_s = 0.0;          ///< sigma(S + w) - sigma(S) = 1 - p
  double gain_s_prime = 0.0;    ///< sigma(S' + w) - sigma(S') = 1
  bool violates_submodularity = false;  ///< gain_s < gain_s_prime
  bool matches_closed_form = false;
};

CounterexampleWitness theorem3_counterexample(double p);

struct QRange {
  double lo = 10;
  double hi = 1000;
  double step = 10;
};

/// "lo:hi:step".
QRange parse_q_range(const std::string& text);

/// CSV with header "Q,n_ga_over_oa,n_gna_over_oa", one row per grid point.
void emit_bound_curves(std::ostream& out, const QRange& range, BoundParams params);

/// Parameters behind the theoretical MINTSS comparison curves:
/// alpha = 1, eps = 0, beta_ga = 2, beta_ona = 1, beta_gna = 2, giving
/// n_ga <= gamma ln(Q/2) and n_gna <= ln(Q) ln((Q - 1)/2).
BoundParams comparison_curve_params();

}  // namespace aim::bounds
