#include <doctest.h>

#include <cmath>
#include <random>

#include "ostop/errors.hpp"
#include "ostop/mc.hpp"
#include "ostop/sturm.hpp"

using namespace ostop;

namespace {

DiffusionSpec bm(double b = 0.0, double sigma = 1.0) {
  DiffusionSpec d;
  d.drift = Coef::constant(b);
  d.sigma = Coef::constant(sigma);
  return d;
}

}  // namespace

TEST_CASE("scale of driftless BM is the identity") {
  auto ss = scale(bm(), 0.0);
  for (double x : {-3.0, -1.0, 0.0, 0.5, 2.0}) {
    CHECK(ss.s(x) == doctest::Approx(x).epsilon(1e-10));
    CHECK(ss.s_prime(x) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(ss.m_density(x) == doctest::Approx(2.0).epsilon(1e-12));
  }
}

TEST_CASE("scale derivative for b = 0.5") {
  auto ss = scale(bm(0.5), 0.0);
  // s'(x) = exp(-2*0.5*x)
  CHECK(ss.s_prime(1.0) == doctest::Approx(std::exp(-1.0)).epsilon(1e-10));
  CHECK(ss.s_prime(1.0) == doctest::Approx(0.3678794).epsilon(1e-6));
}

TEST_CASE("exit probabilities from the scale function") {
  auto ss = scale(bm(), 0.0);
  // P_0(T_{-1} < T_2) = (s(2)-s(0))/(s(2)-s(-1)) = 2/3
  double p = (ss.s(2.0) - ss.s(0.0)) / (ss.s(2.0) - ss.s(-1.0));
  CHECK(p == doctest::Approx(2.0 / 3.0).epsilon(1e-10));
}

TEST_CASE("fundamental solutions of BM at q = 1/2") {
  auto pair = fundamental_solutions(bm(), 0.5);
  for (double x : {-8.0, -2.0, -0.3, 0.0, 1.7, 9.0}) {
    CHECK(pair.log_hplus(x) == doctest::Approx(x).epsilon(1e-8));
    CHECK(pair.log_hminus(x) == doctest::Approx(-x).epsilon(1e-8));
  }
  CHECK(pair.wronskian() == doctest::Approx(2.0).epsilon(1e-9));
  CHECK(pair.hplus(pair.x0()) == doctest::Approx(1.0));
  CHECK(pair.hminus(pair.x0()) == doctest::Approx(1.0));
}

TEST_CASE("drifted BM increasing solution has the closed-form rate") {
  double b = 0.7, q = 1.3;
  auto pair = fundamental_solutions(bm(b), q);
  double a1 = -b + std::sqrt(2.0 * q + b * b);
  double a2 = -b - std::sqrt(2.0 * q + b * b);
  for (double x : {-5.0, -1.0, 2.0, 6.0}) {
    CHECK(pair.log_hplus(x) == doctest::Approx(a1 * x).epsilon(1e-8));
    CHECK(pair.log_hminus(x) == doctest::Approx(a2 * x).epsilon(1e-8));
  }
}

TEST_CASE("hitting Laplace transforms") {
  auto pair = fundamental_solutions(bm(), 0.5);
  CHECK(hitting_laplace(pair, 0.3, 0.3) == 1.0);
  CHECK(hitting_laplace(pair, 0.0, 1.0) == doctest::Approx(std::exp(-1.0)).epsilon(1e-9));
  CHECK(hitting_laplace(pair, 0.0, -1.0) == doctest::Approx(std::exp(-1.0)).epsilon(1e-9));
  // monotone decay in distance, both directions
  double prev = 1.0;
  for (double y = 0.5; y < 4.0; y += 0.5) {
    double v = hitting_laplace(pair, 0.0, y);
    CHECK(v < prev);
    prev = v;
  }
  CHECK_THROWS_AS(hitting_laplace(pair, 0.0, 1e9), Error);
}

TEST_CASE("green function values and symmetry") {
  auto pair = fundamental_solutions(bm(), 0.5);
  CHECK(green(pair, 0.0, 0.0) == doctest::Approx(0.5).epsilon(1e-9));
  std::mt19937 gen(7);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  for (int i = 0; i < 25; ++i) {
    double x = u(gen), y = u(gen);
    CHECK(std::abs(green(pair, x, y) - green(pair, y, x)) < 1e-12);
  }
}

TEST_CASE("resolvent total mass equals 1/q for BM") {
  double q = 0.5;
  auto pair = fundamental_solutions(bm(), q);
  const auto& ss = pair.scale_speed();
  auto f = [&](double y) { return green(pair, 0.0, y) * ss.m_density(y); };
  double total = adaptive_quadrature(f, pair.grid_lo(), pair.grid_hi(), 1e-10);
  CHECK(total == doctest::Approx(1.0 / q).epsilon(1e-8));
}

TEST_CASE("Wronskian is constant across the grid") {
  double b = -0.4, q = 0.8;
  auto pair = fundamental_solutions(bm(b), q);
  std::mt19937 gen(11);
  std::uniform_real_distribution<double> u(pair.grid_lo() * 0.9, pair.grid_hi() * 0.9);
  double w0 = pair.wronskian();
  double lo = w0, hi = w0;
  for (int i = 0; i < 20; ++i) {
    double w = pair.wronskian_at(u(gen));
    lo = std::min(lo, w);
    hi = std::max(hi, w);
  }
  CHECK((hi - lo) / w0 < 1e-6);
}

TEST_CASE("ODE residual of the tabulated solutions") {
  // nonconstant coefficients: Ornstein-Uhlenbeck-type drift
  DiffusionSpec d;
  d.drift = Coef::affine(0.1, -0.5);
  d.sigma = Coef::constant(1.0);
  SturmOptions opts;
  opts.span_units = 8.0;
  double q = 0.7;
  auto pair = fundamental_solutions(d, q, opts);
  const auto& x = pair.grid();
  // fourth-order central stencils keep the finite-difference truncation far
  // below the solution error being measured; probe the interior, where the
  // local exponential rate keeps the stencil in its accurate regime
  double worst = 0.0;
  std::size_t lo = x.size() / 5, hi = x.size() - x.size() / 5;
  for (std::size_t i = lo; i < hi; i += 17) {
    double h = x[i + 1] - x[i];
    double fm2 = pair.hplus(x[i] - 2 * h), fm1 = pair.hplus(x[i] - h);
    double f0 = pair.hplus(x[i]);
    double fp1 = pair.hplus(x[i] + h), fp2 = pair.hplus(x[i] + 2 * h);
    double d2 = (-fp2 + 16 * fp1 - 30 * f0 + 16 * fm1 - fm2) / (12 * h * h);
    double d1 = (-fp2 + 8 * fp1 - 8 * fm1 + fm2) / (12 * h);
    double res = 0.5 * d2 + d.drift(x[i]) * d1 - q * f0;
    worst = std::max(worst, std::abs(res) / (q * f0));
  }
  CHECK(worst < 1e-6);
}

TEST_CASE("q-excessive martingale proxy via exact Gaussian sampling") {
  double b = 0.2, q = 0.6;
  auto pair = fundamental_solutions(bm(b), q);
  double t = 0.5, x = 0.1;
  // E[e^{-qt} h+(X_t)] should equal h+(x) (true martingale for drifted BM)
  std::mt19937 gen(123);
  std::normal_distribution<double> nd(0.0, 1.0);
  int n = 200000;
  double s = 0.0, s2 = 0.0;
  for (int i = 0; i < n; ++i) {
    double xt = x + b * t + std::sqrt(t) * nd(gen);
    double v = std::exp(-q * t) * pair.hplus(xt);
    s += v;
    s2 += v * v;
  }
  double mean = s / n;
  double se = std::sqrt((s2 / n - mean * mean) / n);
  CHECK(std::abs(mean - pair.hplus(x)) <= 3.0 * se);
}

TEST_CASE("fundamental solutions reject exploding setups") {
  CHECK_THROWS_AS(fundamental_solutions(bm(), -1.0), Error);
}

TEST_CASE("csv export carries the expected columns") {
  auto pair = fundamental_solutions(bm(), 0.5, SturmOptions{.grid_n = 64, .span_units = 5.0});
  auto csv = sturm_csv(pair);
  CHECK(csv.rfind("x,h_plus,h_minus,s,m_density\n", 0) == 0);
  auto lines = std::count(csv.begin(), csv.end(), '\n');
  CHECK(lines == 65);
}
