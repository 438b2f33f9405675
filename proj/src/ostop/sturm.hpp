#pragma once

#include <memory>
#include <string>
#include <vector>

#include "ostop/model.hpp"

namespace ostop {

struct SturmOptions {
  int grid_n = 4096;
  double ode_rtol = 1e-12;
  double ode_atol = 1e-14;
  // Truncation of the (possibly infinite) state interval.  NaN means auto:
  // finite endpoints are inset slightly, infinite ones are cut at
  // x0 +/- span_units * sigma(x0).
  double trunc_lo = kNaN;
  double trunc_hi = kNaN;
  double span_units = 40.0;
  enum class Boundary { minimal_growth, reflecting };
  // Boundary condition used to seed the local exponential rate at each
  // truncation point.  Only minimal_growth is validated.
  Boundary bc_lo = Boundary::minimal_growth;
  Boundary bc_hi = Boundary::minimal_growth;
};

// Scale function and speed density, tabulated on the sturm grid.
// s'(x) = exp(-2 int_{x0}^x b/sigma^2), s(x0) = 0, m = 2/(sigma^2 s').
class ScaleSpeed {
 public:
  ScaleSpeed(const DiffusionSpec& d, double x0, std::vector<double> grid);

  double s(double x) const;
  double s_prime(double x) const;
  double m_density(double x) const;
  double x0() const { return x0_; }
  const std::vector<double>& grid() const { return x_; }

 private:
  friend class FundamentalPair;
  double log_s_prime(double x) const;  // -2(J(x) - J(x0))
  DiffusionSpec diff_;
  double x0_;
  std::vector<double> x_;
  std::vector<double> J_;      // int b/sigma^2, anchored J(x0)=0
  std::vector<double> dJ_;     // b/sigma^2 at nodes
  std::vector<double> s_;      // scale values, s(x0)=0
};

ScaleSpeed scale(const DiffusionSpec& d, double x0, const SturmOptions& opts = {});

// Fundamental solutions of (1/2) sigma^2 h'' + b h' = q h on the truncated
// interval: h_plus increasing, h_minus decreasing, both normalized to 1 at
// x0.  Tabulated in log domain; w(x) = (log h)'(x) is carried alongside so
// ratios, derivatives and the Wronskian never leave log space.
class FundamentalPair {
 public:
  double q() const { return q_; }
  double x0() const { return x0_; }
  double wronskian() const { return wq_; }
  const std::vector<double>& grid() const { return x_; }
  const ScaleSpeed& scale_speed() const { return *scale_; }

  double log_hplus(double x) const;
  double log_hminus(double x) const;
  double hplus(double x) const { return std::exp(log_hplus(x)); }
  double hminus(double x) const { return std::exp(log_hminus(x)); }
  // Local exponential rates (log h)'.
  double weight_plus(double x) const;
  double weight_minus(double x) const;

  double grid_lo() const { return x_.front(); }
  double grid_hi() const { return x_.back(); }
  void require_in_grid(double x, const char* who) const;

  // Wronskian recomputed locally at x from the tabulated logs and rates.
  double wronskian_at(double x) const;

  // Tabulated node data (shared with the potential quadratures).
  const std::vector<double>& node_log_hplus() const { return lp_; }
  const std::vector<double>& node_log_hminus() const { return lm_; }
  const std::vector<double>& node_weight_plus() const { return wp_; }
  const std::vector<double>& node_weight_minus() const { return wm_; }

 private:
  friend FundamentalPair fundamental_solutions(const DiffusionSpec&, double, const SturmOptions&);
  double q_ = 0, x0_ = 0, wq_ = 0;
  std::vector<double> x_;
  std::vector<double> lp_, wp_;  // log h+, (log h+)'
  std::vector<double> lm_, wm_;  // log h-, (log h-)'
  std::shared_ptr<ScaleSpeed> scale_;
};

FundamentalPair fundamental_solutions(const DiffusionSpec& d, double q,
                                      const SturmOptions& opts = {});

// E_x[exp(-q T_y)] via the ratio of fundamental solutions.
double hitting_laplace(const FundamentalPair& pair, double x, double y);

// q-potential density u^q(x,y) with respect to the speed measure.
double green(const FundamentalPair& pair, double x, double y);

// CSV export: x,h_plus,h_minus,s,m_density[,delta].
std::string sturm_csv(const FundamentalPair& pair, const std::vector<double>* delta = nullptr);

}  // namespace ostop
