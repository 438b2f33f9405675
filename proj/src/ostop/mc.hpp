#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "ostop/levy.hpp"
#include "ostop/model.hpp"
#include "ostop/ssmp.hpp"

namespace ostop {

struct SimConfig {
  std::int64_t n_paths = 100000;
  double dt = 1e-3;
  double horizon = 100.0;
  std::uint64_t seed = 12345;
  bool antithetic = false;
  // Detect barrier crossings inside a step with the Brownian-bridge
  // probability (otherwise linear interpolation of skeleton crossings only).
  bool bridge = false;
  // Censor a path once its accumulated discount falls below this level; the
  // dropped continuation is worth at most discount * payoff scale.
  double discount_floor = 1e-10;
  // Optional early kill for threshold rules on Levy paths when a closed-form
  // bound shows the remaining contribution is below this absolute tolerance
  // (0 disables).
  double prune_tol = 0.0;
  int threads = 0;  // 0 = hardware concurrency
};

struct Estimate {
  double mean = 0.0;
  double std_error = 0.0;
  std::int64_t n_effective = 0;
  double truncated_fraction = 0.0;
  std::uint64_t seed = 0;
};

struct StoppingRule {
  enum class Kind { threshold, interval, fixed_time };
  Kind kind = Kind::threshold;
  double lower = kNegInf;
  double upper = kInf;
  double time = 0.0;

  static StoppingRule threshold(double u) { return {Kind::threshold, kNegInf, u, 0.0}; }
  static StoppingRule threshold_down(double l) { return {Kind::interval, l, kInf, 0.0}; }
  static StoppingRule interval(double lo, double hi) { return {Kind::interval, lo, hi, 0.0}; }
  static StoppingRule fixed_time(double t) { return {Kind::fixed_time, kNegInf, kInf, t}; }
};

// Euler-Maruyama estimate of E_x[e^{-A_T} g(X_T) - C_T] for a diffusion
// problem under the given stopping rule.
Estimate simulate_payoff(const ProblemSpec& problem, const StoppingRule& rule,
                         const SimConfig& cfg);

// One payoff estimate per upward threshold, all evaluated on the same paths
// (skeleton crossing detection; used for dominance comparisons).
std::vector<Estimate> simulate_threshold_family(const ProblemSpec& problem,
                                                const std::vector<double>& levels,
                                                const SimConfig& cfg);

// Spectrally negative Levy payoff E_x[e^{-qT} g(Z_T) - int c(Z_s) e^{-qs} ds].
Estimate simulate_levy_payoff(const LevySpec& spec, double x, const Reward& g, const Coef& cost,
                              double q, const StoppingRule& rule, const SimConfig& cfg);

// Terminal functional E[f(Z_t)] of a Levy path.
Estimate estimate_levy_terminal(const LevySpec& spec, double x, double t,
                                const std::function<double(double)>& f, const SimConfig& cfg);

// E_x[e^{-q T_a}] for the radial part of a planar Brownian motion (the
// index-0 case of the self-similar family), x <= a.
Estimate estimate_bessel2d_hitting(double x, double a, double q, const SimConfig& cfg);

// E_x[e^{-q T_a}] for the self-similar process built from the Levy spec via
// the exponential space change and integrated-exponential clock.
Estimate estimate_ssmp_hitting(const SsmpSpec& spec, double x, double a, double q,
                               const SimConfig& cfg);

// E_x[e^{-r T^U_a}] for the associated OU-type process (moving-boundary
// representation on the Levy path).
Estimate estimate_ou_hitting(const SsmpSpec& spec, double x, double a, double r,
                             const SimConfig& cfg);

// E[f(X_t)] for the self-similar process at a fixed clock time t.
Estimate estimate_ssmp_terminal(const SsmpSpec& spec, double x, double t,
                                const std::function<double(double)>& f, const SimConfig& cfg);

// Small path ensembles for pathwise checks (test-scale n only).
struct LevyPathSet {
  double dt = 0.0;
  std::vector<std::vector<double>> z;  // z[path][step], step 0 = start
};
LevyPathSet sample_levy_paths(const LevySpec& spec, double x, int n_paths, double dt,
                              double horizon, std::uint64_t seed);

}  // namespace ostop
