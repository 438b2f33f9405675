#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <span>
#include <vector>

#include "ostop/errors.hpp"

namespace ostop {

inline constexpr double kInf = std::numeric_limits<double>::infinity();
inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();
inline constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
inline constexpr double kPi = 3.14159265358979323846;

// Neumaier compensated accumulator.
class KahanSum {
 public:
  void add(double v) {
    double t = sum_ + v;
    if (std::abs(sum_) >= std::abs(v))
      comp_ += (sum_ - t) + v;
    else
      comp_ += (v - t) + sum_;
    sum_ = t;
  }
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0, comp_ = 0.0;
};

inline double log_add_exp(double a, double b) {
  if (a == kNegInf) return b;
  if (b == kNegInf) return a;
  double m = std::max(a, b);
  return m + std::log1p(std::exp(std::min(a, b) - m));
}

// ---------------------------------------------------------------------------
// Cubic Hermite interpolation on one panel: values and first derivatives at
// the endpoints.  Used for log h tabulations where the derivative (the local
// exponential rate) is known exactly from the ODE state.
// ---------------------------------------------------------------------------
inline double hermite_value(double x0, double x1, double f0, double f1, double d0, double d1,
                            double x) {
  double h = x1 - x0;
  double t = (x - x0) / h;
  double t2 = t * t, t3 = t2 * t;
  return (2 * t3 - 3 * t2 + 1) * f0 + (t3 - 2 * t2 + t) * h * d0 + (-2 * t3 + 3 * t2) * f1 +
         (t3 - t2) * h * d1;
}

inline double hermite_deriv(double x0, double x1, double f0, double f1, double d0, double d1,
                            double x) {
  double h = x1 - x0;
  double t = (x - x0) / h;
  double t2 = t * t;
  return ((6 * t2 - 6 * t) * f0 + (3 * t2 - 4 * t + 1) * h * d0 + (-6 * t2 + 6 * t) * f1 +
          (3 * t2 - 2 * t) * h * d1) /
         h;
}

// Locate the panel index i with x[i] <= v <= x[i+1] (clamped at the ends).
inline std::size_t panel_index(std::span<const double> x, double v) {
  if (v <= x.front()) return 0;
  if (v >= x.back()) return x.size() - 2;
  auto it = std::upper_bound(x.begin(), x.end(), v);
  return static_cast<std::size_t>(it - x.begin()) - 1;
}

// ---------------------------------------------------------------------------
// Adaptive Dormand-Prince 5(4) integrator for small fixed-size systems.
// Integrates from t0 to t1 (either direction), calling the RHS as
// f(t, y, dydt).  Throws quadrature_failure if the step size collapses.
// ---------------------------------------------------------------------------
template <std::size_t N, typename Rhs>
void integrate_dopri5(Rhs&& f, std::array<double, N>& y, double t0, double t1, double rtol,
                      double atol) {
  if (t0 == t1) return;
  const double dir = (t1 > t0) ? 1.0 : -1.0;
  double t = t0;
  double h = dir * std::min(std::abs(t1 - t0), 0.1 * (1.0 + std::abs(t0)));
  const double hmin = std::abs(t1 - t0) * 1e-14;

  std::array<double, N> k1, k2, k3, k4, k5, k6, k7, ytmp, y5, y4;
  f(t, y, k1);
  int steps = 0;
  while (dir * (t1 - t) > 0) {
    if (++steps > 2000000) fail(errc::quadrature_failure, "ODE step budget exhausted");
    if (dir * (t + h - t1) > 0) h = t1 - t;

    auto stage = [&](const std::array<double, N>& base, double frac,
                     std::initializer_list<std::pair<const std::array<double, N>*, double>> terms,
                     std::array<double, N>& out) {
      for (std::size_t i = 0; i < N; ++i) {
        double acc = base[i];
        for (auto& [kp, c] : terms) acc += h * c * (*kp)[i];
        ytmp[i] = acc;
      }
      f(t + frac * h, ytmp, out);
    };

    stage(y, 1.0 / 5, {{&k1, 1.0 / 5}}, k2);
    stage(y, 3.0 / 10, {{&k1, 3.0 / 40}, {&k2, 9.0 / 40}}, k3);
    stage(y, 4.0 / 5, {{&k1, 44.0 / 45}, {&k2, -56.0 / 15}, {&k3, 32.0 / 9}}, k4);
    stage(y, 8.0 / 9,
          {{&k1, 19372.0 / 6561}, {&k2, -25360.0 / 2187}, {&k3, 64448.0 / 6561},
           {&k4, -212.0 / 729}},
          k5);
    stage(y, 1.0,
          {{&k1, 9017.0 / 3168}, {&k2, -355.0 / 33}, {&k3, 46732.0 / 5247}, {&k4, 49.0 / 176},
           {&k5, -5103.0 / 18656}},
          k6);
    for (std::size_t i = 0; i < N; ++i)
      y5[i] = y[i] + h * (35.0 / 384 * k1[i] + 500.0 / 1113 * k3[i] + 125.0 / 192 * k4[i] -
                          2187.0 / 6784 * k5[i] + 11.0 / 84 * k6[i]);
    f(t + h, y5, k7);
    for (std::size_t i = 0; i < N; ++i)
      y4[i] = y[i] + h * (5179.0 / 57600 * k1[i] + 7571.0 / 16695 * k3[i] + 393.0 / 640 * k4[i] -
                          92097.0 / 339200 * k5[i] + 187.0 / 2100 * k6[i] + 1.0 / 40 * k7[i]);

    double err = 0.0;
    for (std::size_t i = 0; i < N; ++i) {
      double sc = atol + rtol * std::max(std::abs(y[i]), std::abs(y5[i]));
      double e = (y5[i] - y4[i]) / sc;
      err += e * e;
    }
    err = std::sqrt(err / N);

    if (!std::isfinite(err)) {
      h *= 0.25;
      if (std::abs(h) < hmin) fail(errc::integration_blowup, "non-finite ODE state");
      continue;
    }
    if (err <= 1.0) {
      t += h;
      y = y5;
      k1 = k7;  // FSAL
      double fac = (err == 0.0) ? 5.0 : std::clamp(0.9 * std::pow(err, -0.2), 0.2, 5.0);
      h *= fac;
    } else {
      h *= std::clamp(0.9 * std::pow(err, -0.2), 0.1, 0.9);
      if (std::abs(h) < hmin) fail(errc::quadrature_failure, "ODE step size collapsed");
    }
  }
}

// ---------------------------------------------------------------------------
// Gauss-Legendre nodes on [-1,1].
// ---------------------------------------------------------------------------
struct GaussRule {
  std::array<double, 7> node;
  std::array<double, 7> weight;
};

inline const GaussRule& gauss7() {
  static const GaussRule r = {
      {-0.9491079123427585, -0.7415311855993945, -0.4058451513773972, 0.0, 0.4058451513773972,
       0.7415311855993945, 0.9491079123427585},
      {0.1294849661688697, 0.2797053914892766, 0.3818300505051189, 0.4179591836734694,
       0.3818300505051189, 0.2797053914892766, 0.1294849661688697}};
  return r;
}

// Adaptive Gauss quadrature (7-point panels, bisection refinement) for smooth
// integrands on a finite interval.
double adaptive_quadrature(const std::function<double(double)>& f, double a, double b, double rtol,
                           double atol = 0.0, int max_depth = 30);

// ---------------------------------------------------------------------------
// Scalar optimization / root finding.
// ---------------------------------------------------------------------------

// Golden-section maximization on [a,b]; returns argmax to tolerance tol.
double golden_max(const std::function<double(double)>& f, double a, double b, double tol);

// Brent root finder on a bracketing interval [a,b] with f(a)*f(b) <= 0.
double brent_root(const std::function<double(double)>& f, double a, double b, double tol,
                  int max_iter = 200);

}  // namespace ostop
