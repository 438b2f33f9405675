#pragma once

#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "ostop/potential.hpp"

namespace ostop {

// A positive q-excessive candidate denominator, carried in log form together
// with its local exponential rate (log h)'.
struct ExcessiveHandle {
  std::function<double(double)> log_h;
  std::function<double(double)> weight;
};

ExcessiveHandle hplus_handle(const FundamentalPair& pair);
ExcessiveHandle hminus_handle(const FundamentalPair& pair);

// Numerator n = g + delta with an optional derivative for first-order-
// condition polishing.
struct PayoffHandle {
  std::function<double(double)> f;
  std::function<double(double)> df;            // empty when unavailable
  std::function<bool(double)> smooth_at;       // df valid at u
};

PayoffHandle payoff_handle(const Reward& g, const CostPotential* dl);

struct SearchOptions {
  double golden_rel_tol = 1e-12;
  double tail_fraction = 0.05;   // trailing scan share inspected for growth
  int bisect_max_iter = 200;
  double p_clip = 1e-6;
};

struct RatioMaxResult {
  double u = kNaN;        // argmax when attained
  double ratio = 0.0;     // sup value (extrapolated limit when !attained)
  bool attained = true;
};

// Retained scan data: lets solutions evaluate sup_{u beyond y} n/h later,
// which is what the value function needs inside the stopping region.
struct RatioScan {
  std::vector<double> scan;    // ordered from the anchor outward
  std::vector<double> rvals;   // ratio at the scan nodes
};

// Maximize n(u)/h(u) over scan nodes ordered from the anchor outward, with
// golden-section refinement and a derivative polish where n is smooth.
// `open_tail` marks the far end as a truncation of an unbounded domain, in
// which case growth over the trailing nodes triggers either the
// sup-at-infinity outcome (finite geometric extrapolation) or UnboundedValue.
RatioMaxResult maximize_ratio(const PayoffHandle& n, const ExcessiveHandle& h,
                              std::span<const double> scan, bool open_tail,
                              const SearchOptions& opts = {}, RatioScan* keep = nullptr);

// (g(u) + delta(u)) / h_q^+(u) under the pair normalization.
double ratio(const FundamentalPair& pair, const CostPotential& dl, const Reward& g, double u);

struct OneSidedSolution {
  double D_star = 0.0;
  double u_star = kInf;
  bool attained = false;
  std::function<double(double)> value;  // D* h(y) - delta(y)
};

// One-sided (upward threshold) problem: D* = sup_{u >= x} (g+delta)/h.
// Unattained finite sup returns attained=false with u_star = +inf.
OneSidedSolution solve_one_sided(const ExcessiveHandle& h, const PayoffHandle& n,
                                 std::span<const double> scan, double x,
                                 const std::function<double(double)>& delta_fn,
                                 const SearchOptions& opts = {});
OneSidedSolution solve_one_sided(const FundamentalPair& pair, const CostPotential& dl,
                                 const Reward& g, double x, const SearchOptions& opts = {});
// Mirror problem (downward threshold) using the decreasing solution.
OneSidedSolution solve_one_sided_down(const FundamentalPair& pair, const CostPotential& dl,
                                      const Reward& g, double x, const SearchOptions& opts = {});

struct TwoSidedSolution {
  double u1_star = kNaN;  // lower threshold
  double u2_star = kNaN;  // upper threshold
  double p_star = kNaN;
  double M_star = kNaN;
  std::function<double(double)> value;
  // 3-equation system residuals: ratio equality and the two log-derivative
  // (smooth fit) mismatches; NaN where the payoff is not smooth.
  double residual_ratio = kNaN;
  double residual_fit_lower = kNaN;
  double residual_fit_upper = kNaN;
  bool smooth_fit_checked = false;
};

// Two-sided problem via the mixture denominator p h+ + (1-p) h-, both
// normalized at x; p* balances the one-sided suprema.
TwoSidedSolution solve_two_sided(const FundamentalPair& pair, const CostPotential& dl,
                                 const Reward& g, double x, const SearchOptions& opts = {});

struct ValueRow {
  double x, value, reward, delta;
  bool stop;
};

std::vector<ValueRow> value_table(const std::function<double(double)>& value, const Reward& g,
                                  const std::function<double(double)>& delta_fn,
                                  std::span<const double> grid);
std::string value_table_csv(const std::vector<ValueRow>& rows);

}  // namespace ostop
