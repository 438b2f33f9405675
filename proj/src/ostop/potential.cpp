#include "ostop/potential.hpp"

#include <cmath>

#include "ostop/errors.hpp"

namespace ostop {

namespace {

// log of a 7-point Gauss panel integral of f = h c m, where log h is Hermite
// interpolated between nodes and c, m are evaluated directly.  Returns -inf
// for an identically-zero integrand.
double gauss_panel_log(const FundamentalPair& pair, const Coef& c, double a, double b, bool plus) {
  const auto& g = gauss7();
  double mid = 0.5 * (a + b), half = 0.5 * (b - a);
  if (half <= 0.0) return kNegInf;
  const auto& ss = pair.scale_speed();
  double tmax = kNegInf;
  std::array<double, 7> t;
  for (int i = 0; i < 7; ++i) {
    double y = mid + half * g.node[i];
    double cy = c(y);
    if (cy <= 0.0) {
      t[i] = kNegInf;
      continue;
    }
    double lh = plus ? pair.log_hplus(y) : pair.log_hminus(y);
    t[i] = lh + std::log(cy) + std::log(ss.m_density(y)) + std::log(g.weight[i] * half);
    tmax = std::max(tmax, t[i]);
  }
  if (tmax == kNegInf) return kNegInf;
  double s = 0.0;
  for (int i = 0; i < 7; ++i)
    if (t[i] != kNegInf) s += std::exp(t[i] - tmax);
  return tmax + std::log(s);
}

// Geometric tail extrapolation from per-panel log masses moving outward.
// Returns {decays, tail_mass_log}.
std::pair<bool, double> tail_estimate(const std::vector<double>& panel_logs, bool from_right) {
  const std::size_t n = panel_logs.size();
  if (n < 8) return {true, kNegInf};
  std::size_t m = std::max<std::size_t>(4, n / 10);
  // average outward log-slope over the last m panels
  double acc = 0.0;
  int cnt = 0;
  double last = kNegInf;
  for (std::size_t j = 0; j < m; ++j) {
    std::size_t i1 = from_right ? n - m + j : m - 1 - j;
    std::size_t i0 = from_right ? i1 - 1 : i1 + 1;  // i0 is the inner neighbor
    double a = panel_logs[i0], b = panel_logs[i1];
    if (a == kNegInf || b == kNegInf) continue;
    acc += b - a;
    ++cnt;
    last = b;
  }
  if (cnt == 0 || last == kNegInf) return {true, kNegInf};  // zero tail
  double slope = acc / cnt;  // log ratio per panel, outward
  if (slope >= -1e-12) return {false, kInf};
  double ratio = std::exp(slope);
  // geometric series beyond the cutoff: last * r/(1-r)
  return {true, last + std::log(ratio / (1.0 - ratio))};
}

}  // namespace

IntegrabilityReport check_integrability(const FundamentalPair& pair, const Coef& c,
                                        double tail_tol) {
  IntegrabilityReport rep;
  const auto& x = pair.grid();
  const std::size_t n = x.size();

  // Panels of h+ c m below x0 and h- c m above x0 dominate the two halves of
  // the criterion integral at x = x0; panels of the opposite kind are needed
  // for the full prefix/suffix anyway, so build both.
  std::vector<double> plus_panels(n - 1), minus_panels(n - 1);
  for (std::size_t i = 0; i + 1 < n; ++i) {
    plus_panels[i] = gauss_panel_log(pair, c, x[i], x[i + 1], true);
    minus_panels[i] = gauss_panel_log(pair, c, x[i], x[i + 1], false);
  }

  double lo_sum = kNegInf, hi_sum = kNegInf;
  double x0 = pair.x0();
  for (std::size_t i = 0; i + 1 < n; ++i) {
    if (x[i + 1] <= x0)
      lo_sum = log_add_exp(lo_sum, plus_panels[i]);
    else if (x[i] >= x0)
      hi_sum = log_add_exp(hi_sum, minus_panels[i]);
    else {
      lo_sum = log_add_exp(lo_sum, gauss_panel_log(pair, c, x[i], x0, true));
      hi_sum = log_add_exp(hi_sum, gauss_panel_log(pair, c, x0, x[i + 1], false));
    }
  }
  // bulk = h-(x0) * int_lo^{x0} h+ c m + h+(x0) * int_{x0}^{hi} h- c m,
  // with h(x0) = 1 under the pair normalization.
  double log_bulk = log_add_exp(lo_sum, hi_sum);
  rep.bulk = (log_bulk == kNegInf) ? 0.0 : std::exp(log_bulk);

  auto [dec_lo, tail_lo_log] = tail_estimate(plus_panels, false);
  auto [dec_hi, tail_hi_log] = tail_estimate(minus_panels, true);
  rep.decays_lo = dec_lo;
  rep.decays_hi = dec_hi;
  if (log_bulk == kNegInf) {
    // zero cost: trivially integrable
    rep.tail_lo = rep.tail_hi = 0.0;
    rep.ok = true;
    return rep;
  }
  rep.tail_lo = dec_lo ? std::exp(tail_lo_log - log_bulk) : kInf;
  rep.tail_hi = dec_hi ? std::exp(tail_hi_log - log_bulk) : kInf;
  rep.ok = dec_lo && dec_hi && rep.tail_lo < tail_tol && rep.tail_hi < tail_tol &&
           std::isfinite(rep.bulk);
  return rep;
}

CostPotential delta(const FundamentalPair& pair, const Coef& c, double tail_tol) {
  CostPotential out;
  out.pair_ = &pair;
  out.c_ = c;
  out.log_wq_ = std::log(pair.wronskian());
  out.report_ = check_integrability(pair, c, tail_tol);
  if (!out.report_.ok)
    fail(errc::not_integrable,
         "cost potential integral does not converge (tails " +
             std::to_string(out.report_.tail_lo) + ", " + std::to_string(out.report_.tail_hi) +
             " of bulk)");

  const auto& x = pair.grid();
  const std::size_t n = x.size();
  out.log_prefix_.assign(n, kNegInf);
  out.log_suffix_.assign(n, kNegInf);
  bool any = false;
  for (std::size_t i = 0; i + 1 < n; ++i) {
    double pl = gauss_panel_log(pair, c, x[i], x[i + 1], true);
    out.log_prefix_[i + 1] = log_add_exp(out.log_prefix_[i], pl);
    if (pl != kNegInf) any = true;
  }
  for (std::size_t i = n - 1; i > 0; --i) {
    double pl = gauss_panel_log(pair, c, x[i - 1], x[i], false);
    out.log_suffix_[i - 1] = log_add_exp(out.log_suffix_[i], pl);
  }
  out.zero_ = !any;
  return out;
}

PotentialBuild build_cost_potential(const DiffusionSpec& d, double q, const Coef& c,
                                    SturmOptions opts, double tail_tol) {
  const bool auto_trunc = std::isnan(opts.trunc_lo) && std::isnan(opts.trunc_hi);
  PotentialBuild out;
  for (int tries = 0;; ++tries) {
    out.pair = std::make_shared<FundamentalPair>(fundamental_solutions(d, q, opts));
    if (c.is_zero()) break;
    auto rep = check_integrability(*out.pair, c, 1e-12);
    if (rep.ok || tries >= 4 || !auto_trunc) break;
    if (!rep.decays_lo || !rep.decays_hi) break;  // genuinely divergent: let delta throw
    opts.span_units *= 1.5;
  }
  out.dl = std::make_shared<CostPotential>(delta(*out.pair, c, tail_tol));
  return out;
}

double CostPotential::panel_log(std::size_t k, double a, double b, bool plus) const {
  return gauss_panel_log(*pair_, c_, a, b, plus);
}

double CostPotential::log_prefix_at(double x) const {
  const auto& g = pair_->grid();
  std::size_t k = panel_index(g, x);
  if (x <= g[k]) return log_prefix_[k];
  return log_add_exp(log_prefix_[k], panel_log(k, g[k], x, true));
}

double CostPotential::log_suffix_at(double x) const {
  const auto& g = pair_->grid();
  std::size_t k = panel_index(g, x);
  if (x >= g[k + 1]) return log_suffix_[k + 1];
  return log_add_exp(log_suffix_[k + 1], panel_log(k, x, g[k + 1], false));
}

double CostPotential::value(double x) const {
  if (zero_) return 0.0;
  pair_->require_in_grid(x, "CostPotential::value");
  double t1 = pair_->log_hminus(x) + log_prefix_at(x);
  double t2 = pair_->log_hplus(x) + log_suffix_at(x);
  double l = log_add_exp(t1, t2) - log_wq_;
  return std::exp(l);
}

double CostPotential::derivative(double x) const {
  if (zero_) return 0.0;
  pair_->require_in_grid(x, "CostPotential::derivative");
  // The boundary terms of differentiating the two integrals cancel, leaving
  // d/dx = w_q^{-1} (h-' P + h+' S).
  double t1 = pair_->log_hminus(x) + log_prefix_at(x);
  double t2 = pair_->log_hplus(x) + log_suffix_at(x);
  double m = std::max(t1, t2);
  if (m == kNegInf) return 0.0;
  double d = pair_->weight_minus(x) * std::exp(t1 - m) + pair_->weight_plus(x) * std::exp(t2 - m);
  return d * std::exp(m - log_wq_);
}

std::vector<double> CostPotential::table() const {
  const auto& g = pair_->grid();
  std::vector<double> t(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) t[i] = value(g[i]);
  return t;
}

}  // namespace ostop
