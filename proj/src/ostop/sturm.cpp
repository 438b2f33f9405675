#include "ostop/sturm.hpp"

#include <sstream>

#include "ostop/errors.hpp"

namespace ostop {

namespace {

std::vector<double> make_grid(const DiffusionSpec& d, double x0, const SturmOptions& opts,
                              double* out_lo, double* out_hi) {
  const auto& iv = d.interval;
  if (!iv.contains(x0)) fail(errc::invalid_argument, "reference point outside state interval");
  double lo = opts.trunc_lo, hi = opts.trunc_hi;
  if (std::isnan(lo)) {
    if (std::isfinite(iv.lower))
      lo = iv.lower + 1e-6 * (std::isfinite(iv.upper) ? iv.upper - iv.lower : 1.0);
    else
      lo = x0 - opts.span_units * std::max(d.sigma(x0), 1e-8);
  }
  if (std::isnan(hi)) {
    if (std::isfinite(iv.upper))
      hi = iv.upper - 1e-6 * (std::isfinite(iv.lower) ? iv.upper - iv.lower : 1.0);
    else
      hi = x0 + opts.span_units * std::max(d.sigma(x0), 1e-8);
  }
  if (!(lo < x0 && x0 < hi)) fail(errc::invalid_argument, "truncation does not enclose x0");

  int n = std::max(opts.grid_n, 16);
  std::vector<double> x(n);
  // Build the grid through x0 exactly so the normalization point is a node.
  int k = static_cast<int>(std::round((x0 - lo) / (hi - lo) * (n - 1)));
  k = std::clamp(k, 1, n - 2);
  for (int i = 0; i <= k; ++i) x[i] = lo + (x0 - lo) * i / k;
  for (int i = k; i < n; ++i) x[i] = x0 + (hi - x0) * (i - k) / (n - 1 - k);
  x[k] = x0;
  if (out_lo) *out_lo = lo;
  if (out_hi) *out_hi = hi;
  return x;
}

// Characteristic rates of (1/2)s^2 mu^2 + b mu = q at a point: the local
// growth rate of the increasing (plus) / decreasing (minus) solution.
double char_rate_plus(double b, double s2, double q) {
  return (-b + std::sqrt(b * b + 2.0 * q * s2)) / s2;
}
double char_rate_minus(double b, double s2, double q) {
  return (-b - std::sqrt(b * b + 2.0 * q * s2)) / s2;
}

}  // namespace

// ---------------------------------------------------------------------------
// ScaleSpeed
// ---------------------------------------------------------------------------

ScaleSpeed::ScaleSpeed(const DiffusionSpec& d, double x0, std::vector<double> grid)
    : diff_(d), x0_(x0), x_(std::move(grid)) {
  const std::size_t n = x_.size();
  J_.resize(n);
  dJ_.resize(n);
  s_.resize(n);

  auto rhs = [&](double t, const std::array<double, 1>& y, std::array<double, 1>& dy) {
    (void)y;
    double s = diff_.sigma(t);
    dy[0] = diff_.drift(t) / (s * s);
  };

  // J = int b/sigma^2, integrated node to node, later re-anchored at x0.
  std::array<double, 1> y{0.0};
  J_[0] = 0.0;
  for (std::size_t i = 0; i + 1 < n; ++i) {
    integrate_dopri5<1>(rhs, y, x_[i], x_[i + 1], 1e-12, 1e-14);
    J_[i + 1] = y[0];
  }
  for (std::size_t i = 0; i < n; ++i) {
    double s = diff_.sigma(x_[i]);
    dJ_[i] = diff_.drift(x_[i]) / (s * s);
  }
  std::size_t k0 = panel_index(x_, x0_);
  double J0 = hermite_value(x_[k0], x_[k0 + 1], J_[k0], J_[k0 + 1], dJ_[k0], dJ_[k0 + 1], x0_);
  for (auto& j : J_) j -= J0;

  // s(x) = int_{x0}^x exp(-2J): per-panel Gauss with Hermite-interpolated J.
  auto sprime = [&](double v) { return std::exp(log_s_prime(v)); };
  const auto& g = gauss7();
  std::vector<double> panel(n - 1);
  for (std::size_t i = 0; i + 1 < n; ++i) {
    double mid = 0.5 * (x_[i] + x_[i + 1]), half = 0.5 * (x_[i + 1] - x_[i]);
    double acc = 0.0;
    for (int j = 0; j < 7; ++j) acc += g.weight[j] * sprime(mid + half * g.node[j]);
    panel[i] = acc * half;
    if (!std::isfinite(panel[i])) fail(errc::quadrature_failure, "scale integral blew up");
  }
  s_[0] = 0.0;
  for (std::size_t i = 0; i + 1 < n; ++i) s_[i + 1] = s_[i] + panel[i];
  double s0 = s_[k0];
  {
    // partial panel from x_[k0] to x0
    double mid = 0.5 * (x_[k0] + x0_), half = 0.5 * (x0_ - x_[k0]);
    double acc = 0.0;
    for (int j = 0; j < 7; ++j) acc += g.weight[j] * sprime(mid + half * g.node[j]);
    s0 += acc * half;
  }
  for (auto& v : s_) v -= s0;
}

double ScaleSpeed::log_s_prime(double x) const {
  std::size_t k = panel_index(x_, x);
  double J = hermite_value(x_[k], x_[k + 1], J_[k], J_[k + 1], dJ_[k], dJ_[k + 1], x);
  return -2.0 * J;
}

double ScaleSpeed::s_prime(double x) const { return std::exp(log_s_prime(x)); }

double ScaleSpeed::s(double x) const {
  std::size_t k = panel_index(x_, x);
  if (x == x_[k]) return s_[k];
  const auto& g = gauss7();
  double mid = 0.5 * (x_[k] + x), half = 0.5 * (x - x_[k]);
  double acc = 0.0;
  for (int j = 0; j < 7; ++j) acc += g.weight[j] * s_prime(mid + half * g.node[j]);
  return s_[k] + acc * half;
}

double ScaleSpeed::m_density(double x) const {
  double s = diff_.sigma(x);
  return 2.0 / (s * s * s_prime(x));
}

ScaleSpeed scale(const DiffusionSpec& d, double x0, const SturmOptions& opts) {
  auto grid = make_grid(d, x0, opts, nullptr, nullptr);
  return ScaleSpeed(d, x0, std::move(grid));
}

// ---------------------------------------------------------------------------
// FundamentalPair
// ---------------------------------------------------------------------------

FundamentalPair fundamental_solutions(const DiffusionSpec& d, double q, const SturmOptions& opts) {
  if (!(q > 0.0)) fail(errc::invalid_argument, "fundamental_solutions requires q > 0");
  FundamentalPair out;
  out.q_ = q;

  // Truncation, then anchor: x0 = 0 when the truncated interval contains it
  // (the natural anchor for problems on R), otherwise the midpoint.
  const auto& iv = d.interval;
  double center = iv.contains(0.0) ? 0.0
                  : std::isfinite(iv.lower) && std::isfinite(iv.upper)
                      ? 0.5 * (iv.lower + iv.upper)
                      : (std::isfinite(iv.lower) ? iv.lower + 1.0 : iv.upper - 1.0);
  double lo = opts.trunc_lo, hi = opts.trunc_hi;
  double unit = opts.span_units * std::max(d.sigma(center), 1e-8);
  if (std::isnan(lo))
    lo = std::isfinite(iv.lower)
             ? iv.lower + 1e-6 * (std::isfinite(iv.upper) ? iv.upper - iv.lower : 1.0)
             : center - unit;
  if (std::isnan(hi))
    hi = std::isfinite(iv.upper)
             ? iv.upper - 1e-6 * (std::isfinite(iv.lower) ? iv.upper - iv.lower : 1.0)
             : center + unit;
  if (!(lo < hi)) fail(errc::invalid_argument, "empty truncated interval");
  out.x0_ = (lo < 0.0 && 0.0 < hi) ? 0.0 : 0.5 * (lo + hi);
  SturmOptions o2 = opts;
  o2.trunc_lo = lo;
  o2.trunc_hi = hi;
  out.x_ = make_grid(d, out.x0_, o2, nullptr, nullptr);
  const std::size_t n = out.x_.size();

  // Riccati form: w = (log h)', w' = 2(q - b w)/sigma^2 - w^2, plus the
  // running integral I = log h.  Integrating toward the growth direction
  // keeps the wanted root attracting, so the minimal solution at the far
  // boundary is selected automatically.
  auto rhs = [&](double t, const std::array<double, 2>& y, std::array<double, 2>& dy) {
    double s = d.sigma(t);
    double s2 = s * s;
    dy[0] = 2.0 * (q - d.drift(t) * y[0]) / s2 - y[0] * y[0];
    dy[1] = y[0];
  };

  out.lp_.resize(n);
  out.wp_.resize(n);
  out.lm_.resize(n);
  out.wm_.resize(n);

  {
    double b = d.drift(out.x_.front());
    double s = d.sigma(out.x_.front());
    double w0 = opts.bc_lo == SturmOptions::Boundary::minimal_growth
                    ? char_rate_plus(b, s * s, q)
                    : 0.0;
    std::array<double, 2> y{w0, 0.0};
    out.wp_[0] = y[0];
    out.lp_[0] = 0.0;
    for (std::size_t i = 0; i + 1 < n; ++i) {
      integrate_dopri5<2>(rhs, y, out.x_[i], out.x_[i + 1], opts.ode_rtol, opts.ode_atol);
      out.wp_[i + 1] = y[0];
      out.lp_[i + 1] = y[1];
      if (!std::isfinite(y[0]) || !std::isfinite(y[1]))
        fail(errc::integration_blowup, "increasing solution lost at x=" +
                                           std::to_string(out.x_[i + 1]));
      if (y[0] <= 0.0)
        fail(errc::non_monotone, "increasing solution lost monotonicity at x=" +
                                     std::to_string(out.x_[i + 1]));
    }
  }
  {
    double b = d.drift(out.x_.back());
    double s = d.sigma(out.x_.back());
    double w0 = opts.bc_hi == SturmOptions::Boundary::minimal_growth
                    ? char_rate_minus(b, s * s, q)
                    : 0.0;
    std::array<double, 2> y{w0, 0.0};
    out.wm_[n - 1] = y[0];
    out.lm_[n - 1] = 0.0;
    for (std::size_t i = n - 1; i > 0; --i) {
      integrate_dopri5<2>(rhs, y, out.x_[i], out.x_[i - 1], opts.ode_rtol, opts.ode_atol);
      out.wm_[i - 1] = y[0];
      out.lm_[i - 1] = y[1];
      if (!std::isfinite(y[0]) || !std::isfinite(y[1]))
        fail(errc::integration_blowup, "decreasing solution lost at x=" +
                                           std::to_string(out.x_[i - 1]));
      if (y[0] >= 0.0)
        fail(errc::non_monotone, "decreasing solution lost monotonicity at x=" +
                                     std::to_string(out.x_[i - 1]));
    }
  }

  // Normalize h(x0) = 1 (x0 is a node by construction).
  std::size_t k0 = panel_index(out.x_, out.x0_);
  if (out.x_[k0] != out.x0_) k0 += (out.x_[k0 + 1] == out.x0_) ? 1 : 0;
  double lp0 = out.lp_[k0], lm0 = out.lm_[k0];
  for (auto& v : out.lp_) v -= lp0;
  for (auto& v : out.lm_) v -= lm0;

  out.scale_ = std::make_shared<ScaleSpeed>(d, out.x0_, out.x_);
  out.wq_ = out.wronskian_at(out.x0_);
  if (!(out.wq_ > 0.0)) fail(errc::internal, "nonpositive Wronskian");
  return out;
}

void FundamentalPair::require_in_grid(double x, const char* who) const {
  if (x < x_.front() || x > x_.back())
    fail(errc::out_of_grid, std::string(who) + ": x=" + std::to_string(x) +
                                " outside tabulated range [" + std::to_string(x_.front()) + ", " +
                                std::to_string(x_.back()) + "]");
}

double FundamentalPair::log_hplus(double x) const {
  require_in_grid(x, "log_hplus");
  std::size_t k = panel_index(x_, x);
  return hermite_value(x_[k], x_[k + 1], lp_[k], lp_[k + 1], wp_[k], wp_[k + 1], x);
}

double FundamentalPair::log_hminus(double x) const {
  require_in_grid(x, "log_hminus");
  std::size_t k = panel_index(x_, x);
  return hermite_value(x_[k], x_[k + 1], lm_[k], lm_[k + 1], wm_[k], wm_[k + 1], x);
}

double FundamentalPair::weight_plus(double x) const {
  require_in_grid(x, "weight_plus");
  std::size_t k = panel_index(x_, x);
  return hermite_deriv(x_[k], x_[k + 1], lp_[k], lp_[k + 1], wp_[k], wp_[k + 1], x);
}

double FundamentalPair::weight_minus(double x) const {
  require_in_grid(x, "weight_minus");
  std::size_t k = panel_index(x_, x);
  return hermite_deriv(x_[k], x_[k + 1], lm_[k], lm_[k + 1], wm_[k], wm_[k + 1], x);
}

double FundamentalPair::wronskian_at(double x) const {
  // (h- h+' - h+ h-') / s' = h+ h- (w+ - w-) / s'
  double lsum = log_hplus(x) + log_hminus(x) - scale_->log_s_prime(x);
  return std::exp(lsum) * (weight_plus(x) - weight_minus(x));
}

double hitting_laplace(const FundamentalPair& pair, double x, double y) {
  pair.require_in_grid(x, "hitting_laplace");
  pair.require_in_grid(y, "hitting_laplace");
  if (x == y) return 1.0;
  double l = (x < y) ? pair.log_hplus(x) - pair.log_hplus(y)
                     : pair.log_hminus(x) - pair.log_hminus(y);
  return std::exp(std::min(l, 0.0));
}

double green(const FundamentalPair& pair, double x, double y) {
  pair.require_in_grid(x, "green");
  pair.require_in_grid(y, "green");
  double a = std::min(x, y), b = std::max(x, y);
  double l = pair.log_hplus(a) + pair.log_hminus(b) - std::log(pair.wronskian());
  return std::exp(l);
}

std::string sturm_csv(const FundamentalPair& pair, const std::vector<double>* delta) {
  const auto& x = pair.grid();
  if (delta && delta->size() != x.size())
    fail(errc::invalid_argument, "delta column size mismatch");
  std::ostringstream os;
  os.precision(17);
  os << "x,h_plus,h_minus,s,m_density";
  if (delta) os << ",delta";
  os << "\n";
  const auto& ss = pair.scale_speed();
  for (std::size_t i = 0; i < x.size(); ++i) {
    os << x[i] << ',' << std::exp(pair.node_log_hplus()[i]) << ','
       << std::exp(pair.node_log_hminus()[i]) << ',' << ss.s(x[i]) << ',' << ss.m_density(x[i]);
    if (delta) os << ',' << (*delta)[i];
    os << "\n";
  }
  return os.str();
}

}  // namespace ostop
