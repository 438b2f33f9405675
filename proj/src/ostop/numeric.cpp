#include "ostop/numeric.hpp"

namespace ostop {

namespace {

double gauss_panel(const std::function<double(double)>& f, double a, double b) {
  const auto& r = gauss7();
  double mid = 0.5 * (a + b), half = 0.5 * (b - a);
  double s = 0.0;
  for (int i = 0; i < 7; ++i) s += r.weight[i] * f(mid + half * r.node[i]);
  return s * half;
}

double adapt(const std::function<double(double)>& f, double a, double b, double whole, double rtol,
             double atol, int depth) {
  double m = 0.5 * (a + b);
  double left = gauss_panel(f, a, m), right = gauss_panel(f, m, b);
  double sum = left + right;
  if (depth <= 0) return sum;
  if (std::abs(sum - whole) <= atol + rtol * std::abs(sum)) return sum;
  return adapt(f, a, m, left, rtol, atol * 0.5, depth - 1) +
         adapt(f, m, b, right, rtol, atol * 0.5, depth - 1);
}

}  // namespace

double adaptive_quadrature(const std::function<double(double)>& f, double a, double b, double rtol,
                           double atol, int max_depth) {
  if (a == b) return 0.0;
  double whole = gauss_panel(f, a, b);
  double v = adapt(f, a, b, whole, rtol, atol, max_depth);
  if (!std::isfinite(v)) fail(errc::quadrature_failure, "non-finite quadrature result");
  return v;
}

double golden_max(const std::function<double(double)>& f, double a, double b, double tol) {
  const double invphi = 0.6180339887498949;
  double x1 = b - invphi * (b - a);
  double x2 = a + invphi * (b - a);
  double f1 = f(x1), f2 = f(x2);
  while (b - a > tol) {
    if (f1 < f2) {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + invphi * (b - a);
      f2 = f(x2);
    } else {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - invphi * (b - a);
      f1 = f(x1);
    }
  }
  return 0.5 * (a + b);
}

double brent_root(const std::function<double(double)>& f, double a, double b, double tol,
                  int max_iter) {
  double fa = f(a), fb = f(b);
  if (fa == 0.0) return a;
  if (fb == 0.0) return b;
  if (fa * fb > 0.0) fail(errc::internal, "brent_root: interval does not bracket a root");
  if (std::abs(fa) < std::abs(fb)) {
    std::swap(a, b);
    std::swap(fa, fb);
  }
  double c = a, fc = fa, s = b, fs = fb, d = 0.0;
  bool mflag = true;
  for (int it = 0; it < max_iter && std::abs(b - a) > tol && fb != 0.0; ++it) {
    if (fa != fc && fb != fc) {
      s = a * fb * fc / ((fa - fb) * (fa - fc)) + b * fa * fc / ((fb - fa) * (fb - fc)) +
          c * fa * fb / ((fc - fa) * (fc - fb));
    } else {
      s = b - fb * (b - a) / (fb - fa);
    }
    double lo = (3 * a + b) / 4, hi = b;
    if (lo > hi) std::swap(lo, hi);
    bool cond = (s < lo || s > hi) || (mflag && std::abs(s - b) >= std::abs(b - c) / 2) ||
                (!mflag && std::abs(s - b) >= std::abs(c - d) / 2) ||
                (mflag && std::abs(b - c) < tol) || (!mflag && std::abs(c - d) < tol);
    if (cond) {
      s = 0.5 * (a + b);
      mflag = true;
    } else {
      mflag = false;
    }
    fs = f(s);
    d = c;
    c = b;
    fc = fb;
    if (fa * fs < 0) {
      b = s;
      fb = fs;
    } else {
      a = s;
      fa = fs;
    }
    if (std::abs(fa) < std::abs(fb)) {
      std::swap(a, b);
      std::swap(fa, fb);
    }
  }
  return b;
}

const char* errc_name(errc c) {
  switch (c) {
    case errc::config_error: return "ConfigError";
    case errc::non_positive_volatility: return "NonPositiveVolatility";
    case errc::negative_reward: return "NegativeReward";
    case errc::negative_cost: return "NegativeCost";
    case errc::non_positive_discount: return "NonPositiveDiscount";
    case errc::invalid_argument: return "InvalidArgument";
    case errc::out_of_grid: return "OutOfGrid";
    case errc::bad_ordering: return "BadOrdering";
    case errc::unsupported_family: return "UnsupportedFamily";
    case errc::pole_in_denominator: return "PoleInDenominator";
    case errc::quadrature_failure: return "QuadratureFailure";
    case errc::integration_blowup: return "IntegrationBlowup";
    case errc::non_monotone: return "NonMonotone";
    case errc::series_divergence: return "SeriesDivergence";
    case errc::not_integrable: return "NotIntegrable";
    case errc::unbounded_value: return "UnboundedValue";
    case errc::no_interior_solution: return "NoInteriorSolution";
    case errc::nonpositive_rate: return "NonPositiveRate";
    case errc::p_gamma_nonpositive: return "PGammaNonPositive";
    case errc::start_above_threshold: return "StartAboveThreshold";
    case errc::horizon_too_short: return "HorizonTooShort";
    case errc::verification_failed: return "VerificationFailed";
    case errc::internal: return "InternalError";
  }
  return "UnknownError";
}

}  // namespace ostop
