#include "ostop/levy.hpp"

#include <cmath>
#include <sstream>

#include "ostop/errors.hpp"
#include "ostop/specfun.hpp"

namespace ostop {

namespace {

// Truncation compensator of the exponential jump density: int_{-1}^0 y nu(dy)
// with nu(dy) = rate * mu * exp(mu*y) dy on y < 0, mu = 1/mean_size.
double cpexp_compensator(const CompoundPoissonExp& j) {
  double mu = 1.0 / j.mean_size;
  return j.rate * (std::exp(-mu) * (1.0 + 1.0 / mu) - 1.0 / mu);
}

}  // namespace

LaplaceExponent::LaplaceExponent(const LevySpec& spec) : spec_(spec) {
  if (spec_.sigma2 < 0.0) fail(errc::invalid_argument, "sigma2 must be nonnegative");
  if (const auto* cp = std::get_if<CompoundPoissonExp>(&spec_.jumps)) {
    if (!(cp->rate > 0.0) || !(cp->mean_size > 0.0))
      fail(errc::invalid_argument, "compound Poisson family requires rate, mean_size > 0");
  }
  if (const auto* pf = std::get_if<PochhammerFamily>(&spec_.jumps)) {
    if (!(pf->alpha > 1.0 && pf->alpha < 2.0))
      fail(errc::invalid_argument, "Pochhammer family requires alpha in (1,2)");
    if (!(pf->gamma > 1.0 - pf->alpha))
      fail(errc::invalid_argument, "Pochhammer family requires gamma > 1 - alpha");
  }

  // theta: largest root of psi on [0, inf).  psi is convex with psi(0) = 0,
  // so theta = 0 iff psi is increasing at 0+.
  double umax = 1.0;
  int guard = 0;
  while (psi(umax) <= 0.0) {
    umax *= 2.0;
    if (++guard > 200) fail(errc::invalid_argument, "Laplace exponent never becomes positive");
  }
  double eps = 1e-9 * umax;
  if (psi(eps) > 0.0) {
    theta_ = 0.0;
  } else {
    theta_ = brent_root([this](double u) { return psi(u); }, eps, umax, 1e-15);
  }
}

double LaplaceExponent::psi(double u) const {
  if (u < 0.0) fail(errc::invalid_argument, "psi defined on u >= 0");
  double v = 0.5 * spec_.sigma2 * u * u + spec_.b * u;
  if (const auto* cp = std::get_if<CompoundPoissonExp>(&spec_.jumps)) {
    double mu = 1.0 / cp->mean_size;
    v += cp->rate * (mu / (mu + u) - 1.0) - u * cpexp_compensator(*cp);
  } else if (const auto* pf = std::get_if<PochhammerFamily>(&spec_.jumps)) {
    v += specfun::pochhammer_real(u + pf->gamma - 1.0, pf->alpha) -
         specfun::pochhammer_real(pf->gamma - 1.0, pf->alpha);
  }
  return v;
}

double LaplaceExponent::psi_prime(double u) const {
  double h = 1e-6 * (1.0 + u);
  double lo = std::max(0.0, u - h);
  return (psi(u + h) - psi(lo)) / (u + h - lo);
}

double LaplaceExponent::phi(double r) const {
  if (r < 0.0) fail(errc::invalid_argument, "phi defined on r >= 0");
  if (r == 0.0) return theta_;
  // bracket [theta, hi] with psi(hi) > r
  double lo = theta_, hi = std::max(theta_ + 1.0, 1.0);
  int guard = 0;
  while (psi(hi) < r) {
    hi *= 2.0;
    if (++guard > 200) fail(errc::internal, "phi bracket expansion failed");
  }
  // safeguarded Newton with bisection fallback
  double u = 0.5 * (lo + hi);
  for (int it = 0; it < 100; ++it) {
    double f = psi(u) - r;
    if (f > 0.0)
      hi = u;
    else
      lo = u;
    double d = psi_prime(u);
    double un = (d > 0.0) ? u - f / d : kNaN;
    if (!(un > lo && un < hi)) un = 0.5 * (lo + hi);
    if (std::abs(un - u) <= 1e-15 * (1.0 + std::abs(u))) return un;
    u = un;
  }
  return u;
}

double martingale_rate(const LaplaceExponent& le) {
  double q = le.psi(1.0);
  if (!(q > 0.0))
    fail(errc::nonpositive_rate,
         "psi(1) = " + std::to_string(q) + " is not a valid discount rate");
  return q;
}

double hitting_laplace_up(const LaplaceExponent& le, double x, double y, double r) {
  if (y < x) fail(errc::bad_ordering, "hitting_laplace_up requires y >= x");
  return std::exp(-le.phi(r) * (y - x));
}

CallWithCost call_with_cost(const LaplaceExponent& le, double strike, double alpha_cost,
                            double gamma, double x) {
  if (!(strike > 0.0)) fail(errc::invalid_argument, "strike must be positive");
  if (!(alpha_cost > 0.0)) fail(errc::invalid_argument, "cost coefficient must be positive");
  if (!(gamma > 0.0 && gamma < 1.0))
    fail(errc::invalid_argument, "cost exponent gamma must lie in (0,1)");
  CallWithCost out;
  out.q = martingale_rate(le);
  out.p_gamma = out.q - le.psi(gamma);
  if (!(out.p_gamma > 0.0))
    fail(errc::p_gamma_nonpositive,
         "psi(1) - psi(gamma) = " + std::to_string(out.p_gamma) + " must be positive");

  out.x_star = std::log(out.p_gamma * strike / ((1.0 - gamma) * alpha_cost)) / gamma;
  out.start_below = x < out.x_star;
  if (!out.start_below) {
    std::ostringstream os;
    os << "start x=" << x << " is at or above the threshold x*=" << out.x_star
       << "; closed form does not apply";
    // Flagged, not fatal: caller sees start_below=false and no claimed value.
    out.value = kNaN;
    return out;
  }
  double ex = std::exp(out.x_star);
  double plus = std::max(ex - strike, 0.0);
  out.value = std::exp(x - out.x_star) * (plus + alpha_cost * std::exp(gamma * out.x_star) /
                                                     out.p_gamma) -
              alpha_cost * std::exp(gamma * x) / out.p_gamma;
  return out;
}

}  // namespace ostop
