#pragma once

#include <vector>

#include "ostop/sturm.hpp"

namespace ostop {

struct IntegrabilityReport {
  bool ok = false;
  double bulk = 0.0;        // truncated-domain integral at x0
  double tail_lo = 0.0;     // extrapolated tail mass beyond each cutoff,
  double tail_hi = 0.0;     // relative to bulk
  bool decays_lo = false;
  bool decays_hi = false;
};

// Convergence check for int h-(x v y) h+(x ^ y) c(y) m(dy): the truncated
// quadrature must be finite and the extrapolated tails negligible.
IntegrabilityReport check_integrability(const FundamentalPair& pair, const Coef& c,
                                        double tail_tol = 1e-9);

// Expected total discounted observation cost delta(x) = E_x[C_inf], realized
// as prefix/suffix Green quadratures reused across all x.
class CostPotential {
 public:
  double operator()(double x) const { return value(x); }
  double value(double x) const;
  double derivative(double x) const;
  bool is_zero() const { return zero_; }
  const IntegrabilityReport& report() const { return report_; }
  std::vector<double> table() const;  // delta at the sturm grid nodes

  const FundamentalPair& pair() const { return *pair_; }

 private:
  friend CostPotential delta(const FundamentalPair&, const Coef&, double);
  // log integrals over single panels and cumulative prefix/suffix
  double log_prefix_at(double x) const;  // log int_lo^x h+ c m
  double log_suffix_at(double x) const;  // log int_x^hi h- c m
  double panel_log(std::size_t k, double a, double b, bool plus) const;

  const FundamentalPair* pair_ = nullptr;
  Coef c_;
  bool zero_ = true;
  double log_wq_ = 0.0;
  std::vector<double> log_prefix_, log_suffix_;  // at grid nodes
  IntegrabilityReport report_;
};

// Throws NotIntegrable when the integrability check fails.
CostPotential delta(const FundamentalPair& pair, const Coef& c, double tail_tol = 1e-9);

// Pair + potential with adaptive truncation: when the automatic cutoff
// leaves a decaying-but-visible tail, the span grows until the projected
// truncation error drops below 1e-12 of the bulk (bounded retries).
struct PotentialBuild {
  std::shared_ptr<FundamentalPair> pair;
  std::shared_ptr<CostPotential> dl;
};
PotentialBuild build_cost_potential(const DiffusionSpec& d, double q, const Coef& c,
                                    SturmOptions opts = {}, double tail_tol = 1e-9);

}  // namespace ostop
