#include "ostop/specfun.hpp"

#include <cmath>
#include <cstdlib>

#include "ostop/errors.hpp"
#include "ostop/numeric.hpp"

namespace ostop::specfun {

namespace {

constexpr int kMaxTerms = 10000;
constexpr double kTermTol = 1e-16;

// Sum terms produced by `term(n)` until 10 consecutive terms are each below
// kTermTol times the running sum (in magnitude), or the cap is hit.
template <typename TermFn>
double sum_series(TermFn&& term, const char* what) {
  KahanSum acc;
  int quiet = 0;
  for (int n = 0; n < kMaxTerms; ++n) {
    double t = term(n);
    acc.add(t);
    double ref = std::max(std::abs(acc.value()), 1e-300);
    if (std::abs(t) < kTermTol * ref) {
      if (++quiet >= 10) return acc.value();
    } else {
      quiet = 0;
    }
    if (!std::isfinite(acc.value()))
      fail(errc::series_divergence, std::string(what) + ": non-finite partial sum");
  }
  fail(errc::series_divergence, std::string(what) + ": no convergence within term cap");
}

}  // namespace

double log_gamma(double x) {
  if (!(x > 0.0)) fail(errc::invalid_argument, "log_gamma requires x > 0");
  return std::lgamma(x);
}

double pochhammer(double q, int n) {
  if (!(q > 0.0)) fail(errc::invalid_argument, "pochhammer requires q > 0");
  if (n < 0) fail(errc::invalid_argument, "pochhammer requires n >= 0");
  if (n == 0) return 1.0;
  return std::exp(std::lgamma(q + n) - std::lgamma(q));
}

double pochhammer_real(double z, double a) {
  // Gamma(z+a)/Gamma(z).  For z <= 0 use the reflection formula on whichever
  // of the two Gamma arguments is nonpositive.
  auto lgamma_signed = [](double v, int& sign) {
    int s;
    double lg = ::lgamma_r(v, &s);
    sign = s;
    return lg;
  };
  if (z > 0.0 && z + a > 0.0) return std::exp(std::lgamma(z + a) - std::lgamma(z));
  // z at a pole of Gamma: (z)_a = Gamma(z+a)/Gamma(z) = 0 unless z+a also poles.
  if (z <= 0.0 && z == std::floor(z)) {
    if (z + a <= 0.0 && z + a == std::floor(z + a))
      fail(errc::invalid_argument, "pochhammer_real: 0/0 pole");
    return 0.0;
  }
  int s1, s2;
  double l1 = lgamma_signed(z + a, s1);
  double l2 = lgamma_signed(z, s2);
  return s1 * s2 * std::exp(l1 - l2);
}

double bessel_i(double nu, double x) {
  if (!(nu > -1.0)) fail(errc::invalid_argument, "bessel_i requires nu > -1");
  if (x < 0.0) fail(errc::invalid_argument, "bessel_i requires x >= 0");
  if (x == 0.0) {
    if (nu == 0.0) return 1.0;
    if (nu > 0.0) return 0.0;
    fail(errc::invalid_argument, "bessel_i: x=0 pole for nu < 0");
  }
  double lhalf = std::log(0.5 * x);
  return sum_series(
      [&](int n) {
        double lt = (nu + 2.0 * n) * lhalf - std::lgamma(n + 1.0) - std::lgamma(nu + n + 1.0);
        return std::exp(lt);
      },
      "bessel_i");
}

double confluent_phi(double q, double nu, double x) {
  if (nu <= 0.0 && nu == std::floor(nu))
    fail(errc::pole_in_denominator, "confluent_phi: nu is a nonpositive integer");
  // Term recurrence t_{n+1} = t_n * (q+n)/((nu+n)(n+1)) * x.
  double t = 1.0;
  int n = 0;
  return sum_series(
      [&](int k) {
        if (k == 0) return 1.0;
        t *= (q + n) / ((nu + n) * (n + 1.0)) * x;
        ++n;
        return t;
      },
      "confluent_phi");
}

double mittag_leffler(double alpha, double beta, double x) {
  if (!(alpha > 0.0) || !(beta > 0.0))
    fail(errc::invalid_argument, "mittag_leffler requires alpha, beta > 0");
  double lx = (x == 0.0) ? kNegInf : std::log(std::abs(x));
  double sgn = (x < 0.0) ? -1.0 : 1.0;
  if (x == 0.0) return 1.0 / std::tgamma(beta);
  double s = 1.0;
  return sum_series(
      [&](int n) {
        double t = std::exp(n * lx - std::lgamma(alpha * n + beta)) * s;
        s *= sgn;
        return t;
      },
      "mittag_leffler");
}

double mittag_leffler_q(double q, double alpha, double beta, double x) {
  if (!(q > 0.0) || !(alpha > 0.0) || !(beta > 0.0))
    fail(errc::invalid_argument, "mittag_leffler_q requires q, alpha, beta > 0");
  if (x == 0.0) return 1.0 / std::tgamma(beta);
  double lx = std::log(std::abs(x));
  double sgn = (x < 0.0) ? -1.0 : 1.0;
  double lgq = std::lgamma(q);
  double s = 1.0;
  return sum_series(
      [&](int n) {
        double t =
            std::exp(std::lgamma(q + n) - lgq + n * lx - std::lgamma(alpha * n + beta)) * s;
        s *= sgn;
        return t;
      },
      "mittag_leffler_q");
}

}  // namespace ostop::specfun
