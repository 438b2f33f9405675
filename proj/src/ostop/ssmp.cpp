#include "ostop/ssmp.hpp"

#include <cmath>

#include "ostop/errors.hpp"
#include "ostop/specfun.hpp"

namespace ostop {

PowerSeriesEigenfunction::PowerSeriesEigenfunction(const SsmpSpec& spec)
    : spec_(spec), psi_(spec.levy) {
  if (!(spec_.alpha > 0.0)) fail(errc::invalid_argument, "alpha must be positive");
  if (!(spec_.lambda > 0.0)) fail(errc::invalid_argument, "lambda must be positive");
  if (!(psi_.theta() < spec_.alpha))
    fail(errc::invalid_argument, "need theta(psi) < alpha for positive coefficients");
  log_a_.push_back(0.0);  // a_0 = 1
}

namespace {

// Path regularity (unbounded variation): psi must grow superlinearly.  The
// series itself only needs theta < alpha, so this is checked by the hitting
// and stopping operations, not at construction.
void require_regular(const PowerSeriesEigenfunction& pse) {
  const auto& psi = pse.exponent();
  double u = 1e6;
  if (!(psi.psi(u) / u > 100.0 * std::max(1.0, std::abs(psi.psi(1.0)))))
    fail(errc::invalid_argument, "psi(u)/u must diverge for a regular process");
}

}  // namespace

void PowerSeriesEigenfunction::extend(int n) const {
  while (static_cast<int>(log_a_.size()) <= n) {
    int k = static_cast<int>(log_a_.size());
    double pk = psi_.psi(spec_.alpha * k);
    if (!(pk > 0.0))
      fail(errc::series_divergence, "psi(alpha k) not positive at k=" + std::to_string(k));
    log_a_.push_back(log_a_.back() - std::log(pk));
  }
}

double PowerSeriesEigenfunction::log_coeff(int n) const {
  if (n < 0) fail(errc::invalid_argument, "coefficient index must be nonnegative");
  extend(n);
  return log_a_[static_cast<std::size_t>(n)];
}

namespace {

constexpr int kMaxTerms = 10000;

// Shared scaled summation of sum exp(t_n) and sum n exp(t_n): tracks the
// running max exponent to stay in range for entire-function growth.
struct ScaledSums {
  double m = kNegInf;  // scale exponent
  double s0 = 0.0, s1 = 0.0;
  void add(double t, double n) {
    if (t == kNegInf) return;
    if (t > m) {
      double r = std::exp(m - t);
      s0 *= r;
      s1 *= r;
      m = t;
    }
    double e = std::exp(t - m);
    s0 += e;
    s1 += n * e;
  }
  double log_sum() const { return m + std::log(s0); }
  double mean_index() const { return s1 / s0; }
};

}  // namespace

double PowerSeriesEigenfunction::log_I(double z) const {
  if (z < 0.0) fail(errc::invalid_argument, "eval_I requires z >= 0");
  if (z == 0.0) return 0.0;
  double lz = std::log(z);
  ScaledSums acc;
  int quiet = 0;
  for (int n = 0; n < kMaxTerms; ++n) {
    double t = log_coeff(n) + n * lz;
    acc.add(t, n);
    if (t < acc.m + std::log(1e-16)) {
      if (++quiet >= 10) return acc.log_sum();
    } else {
      quiet = 0;
    }
  }
  fail(errc::series_divergence, "eigenfunction series did not converge");
}

double PowerSeriesEigenfunction::eval_I(double z) const { return std::exp(log_I(z)); }

double PowerSeriesEigenfunction::dlog_I(double z) const {
  if (z < 0.0) fail(errc::invalid_argument, "dlog_I requires z >= 0");
  if (z == 0.0) return std::exp(log_coeff(1));  // I'(0)/I(0) = a_1
  double lz = std::log(z);
  ScaledSums acc;
  int quiet = 0;
  for (int n = 0; n < kMaxTerms; ++n) {
    double t = log_coeff(n) + n * lz;
    acc.add(t, n);
    if (t < acc.m + std::log(1e-16)) {
      if (++quiet >= 10) return acc.mean_index() / z;
    } else {
      quiet = 0;
    }
  }
  fail(errc::series_divergence, "eigenfunction series did not converge");
}

double PowerSeriesEigenfunction::log_Iq(double q, double x) const {
  if (!(q > 0.0)) fail(errc::invalid_argument, "eval_Iq requires q > 0");
  if (x < 0.0) fail(errc::invalid_argument, "eval_Iq requires x >= 0");
  if (x == 0.0) return 0.0;
  double lx = std::log(x);
  double lgq = specfun::log_gamma(q);
  ScaledSums acc;
  int quiet = 0;
  for (int n = 0; n < kMaxTerms; ++n) {
    double t = specfun::log_gamma(q + n) - lgq + log_coeff(n) + n * lx;
    acc.add(t, n);
    if (t < acc.m + std::log(1e-16)) {
      if (++quiet >= 10) return acc.log_sum();
    } else {
      quiet = 0;
    }
  }
  fail(errc::series_divergence, "weighted eigenfunction series did not converge");
}

double PowerSeriesEigenfunction::eval_Iq(double q, double x) const {
  return std::exp(log_Iq(q, x));
}

double PowerSeriesEigenfunction::dlog_Iq(double q, double x) const {
  if (x == 0.0) return std::exp(specfun::log_gamma(q + 1) - specfun::log_gamma(q) + log_coeff(1));
  double lx = std::log(x);
  double lgq = specfun::log_gamma(q);
  ScaledSums acc;
  int quiet = 0;
  for (int n = 0; n < kMaxTerms; ++n) {
    double t = specfun::log_gamma(q + n) - lgq + log_coeff(n) + n * lx;
    acc.add(t, n);
    if (t < acc.m + std::log(1e-16)) {
      if (++quiet >= 10) return acc.mean_index() / x;
    } else {
      quiet = 0;
    }
  }
  fail(errc::series_divergence, "weighted eigenfunction series did not converge");
}

double hitting_laplace_X(const PowerSeriesEigenfunction& pse, double x, double a, double q) {
  require_regular(pse);
  if (!(0.0 <= x && x <= a)) fail(errc::bad_ordering, "need 0 <= x <= a");
  if (q < 0.0) fail(errc::invalid_argument, "q must be nonnegative");
  if (q == 0.0 || x == a) return 1.0;
  double al = pse.spec().alpha;
  double l = pse.log_I(q * std::pow(x, al)) - pse.log_I(q * std::pow(a, al));
  return std::exp(std::min(l, 0.0));
}

double hitting_laplace_U(const PowerSeriesEigenfunction& pse, double x, double a, double r) {
  require_regular(pse);
  if (!(0.0 <= x && x <= a)) fail(errc::bad_ordering, "need 0 <= x <= a");
  if (r < 0.0) fail(errc::invalid_argument, "r must be nonnegative");
  if (r == 0.0 || x == a) return 1.0;
  double al = pse.spec().alpha, chi = pse.spec().chi();
  double l = pse.log_Iq(r / chi, chi * std::pow(x, al)) -
             pse.log_Iq(r / chi, chi * std::pow(a, al));
  return std::exp(std::min(l, 0.0));
}

namespace {

// One-sided argmax of g(u)/den(u) on u >= x with an adaptively extended scan.
SsmpProblemSolution power_ratio_solve(const Reward& g, double x,
                                      const std::function<double(double)>& log_den,
                                      const std::function<double(double)>& weight_den,
                                      const std::function<double(double)>& log_num_scale) {
  PayoffHandle n;
  n.f = [g](double u) { return g(u); };
  if (g.has_derivative()) n.df = [g](double u) { return g.df(u); };
  n.smooth_at = [g](double u) { return g.smooth_at(u); };
  ExcessiveHandle h{log_den, weight_den};

  // extend the scan until the ratio at the far end is a small fraction of
  // the best seen (the denominators are entire with superlinear log growth,
  // so the ratio eventually decays for polynomially bounded rewards)
  double hi = std::max(x * 2.0, x + 1.0);
  auto ratio_at = [&](double u) {
    double gv = g(u);
    return gv <= 0.0 ? 0.0 : std::exp(std::log(gv) - log_den(u));
  };
  double best = ratio_at(x);
  for (int it = 0; it < 60; ++it) {
    double r_hi = ratio_at(hi);
    best = std::max(best, r_hi);
    if (r_hi < 1e-8 * best && it > 2) break;
    hi *= 1.6;
    if (hi > 1e12) break;
  }
  const int N = 2049;
  std::vector<double> scan(N);
  for (int i = 0; i < N; ++i) scan[i] = x + (hi - x) * i / (N - 1);
  auto res = maximize_ratio(n, h, scan, /*open_tail=*/true);

  SsmpProblemSolution sol;
  sol.attained = res.attained;
  if (!res.attained) {
    sol.a_star = kInf;
    sol.value = kNaN;
    return sol;
  }
  sol.a_star = res.u;
  // value at x: ratio times the (possibly rescaled) numerator eigenfunction
  sol.value = res.ratio * std::exp(log_num_scale(x));
  return sol;
}

}  // namespace

SsmpSolutions solve_ssmp_problems(const PowerSeriesEigenfunction& pse, const Reward& g, double q,
                                  double beta, double gamma_ud, double x) {
  require_regular(pse);
  if (!(q > 0.0)) fail(errc::invalid_argument, "q must be positive");
  if (!(x > 0.0)) fail(errc::invalid_argument, "x must be positive");
  const double al = pse.spec().alpha;
  const double chi = pse.spec().chi();

  SsmpSolutions out;

  // (1) plain discounting of the self-similar process
  {
    auto ld = [&pse, q, al](double u) { return pse.log_I(q * std::pow(u, al)); };
    auto wd = [&pse, q, al](double u) {
      double z = q * std::pow(u, al);
      return pse.dlog_I(z) * q * al * std::pow(u, al - 1.0);
    };
    out.v_x = power_ratio_solve(g, x, ld, wd, ld);
  }
  // (2) the OU transform with exponential discounting
  {
    double qc = q / chi;
    auto ld = [&pse, qc, chi, al](double u) { return pse.log_Iq(qc, chi * std::pow(u, al)); };
    auto wd = [&pse, qc, chi, al](double u) {
      double z = chi * std::pow(u, al);
      return pse.dlog_Iq(qc, z) * chi * al * std::pow(u, al - 1.0);
    };
    out.v_u = power_ratio_solve(g, x, ld, wd, ld);
  }
  // (3) the additive-clock discounting; exponent gamma_ud supplied by the
  // caller, denominator for the argmax as in (2)
  {
    double qc = q / chi, gc = gamma_ud / al;
    auto ld = [&pse, qc, chi, al](double u) { return pse.log_Iq(qc, chi * std::pow(u, al)); };
    auto wd = [&pse, qc, chi, al](double u) {
      double z = chi * std::pow(u, al);
      return pse.dlog_Iq(qc, z) * chi * al * std::pow(u, al - 1.0);
    };
    auto sol = power_ratio_solve(g, x, ld, wd, ld);
    if (sol.attained) {
      double a = sol.a_star;
      double lr = pse.log_Iq(gc, chi * std::pow(x, al)) - pse.log_Iq(gc, chi * std::pow(a, al));
      sol.value = std::pow(x / a, gamma_ud) * std::exp(lr) * g(a);
    }
    out.v_ud = sol;
  }
  // (4) integral-clock payoff: reward applied to the alpha-power coordinate,
  // OU speed implied by beta (chi = beta)
  {
    if (!(beta > 0.0)) fail(errc::invalid_argument, "beta must be positive");
    double qc = q / beta;
    Reward ga;
    auto base = g;
    ga.f = [base, al](double u) { return base(std::pow(u, al)); };
    if (base.has_derivative())
      ga.df = [base, al](double u) {
        double ua = std::pow(u, al);
        return base.df(ua) * al * std::pow(u, al - 1.0);
      };
    for (double kx : base.kinks)
      if (kx > 0.0) ga.kinks.push_back(std::pow(kx, 1.0 / al));
    auto ld = [&pse, qc, beta, al](double u) { return pse.log_Iq(qc, beta * std::pow(u, al)); };
    auto wd = [&pse, qc, beta, al](double u) {
      double z = beta * std::pow(u, al);
      return pse.dlog_Iq(qc, z) * beta * al * std::pow(u, al - 1.0);
    };
    out.v_sq = power_ratio_solve(ga, x, ld, wd, ld);
  }
  // Nonhomogeneous variant: same eigenfunction ratio as (2) under the
  // algebraic-discount normalization.
  {
    double qc = q / chi;
    auto ld = [&pse, qc, chi, al](double u) { return pse.log_Iq(qc, chi * std::pow(u, al)); };
    auto wd = [&pse, qc, chi, al](double u) {
      double z = chi * std::pow(u, al);
      return pse.dlog_Iq(qc, z) * chi * al * std::pow(u, al - 1.0);
    };
    out.v_x_nonhom = power_ratio_solve(g, x, ld, wd, ld);
  }
  return out;
}

}  // namespace ostop
