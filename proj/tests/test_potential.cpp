#include <doctest.h>

#include <cmath>

#include "ostop/errors.hpp"
#include "ostop/mc.hpp"
#include "ostop/potential.hpp"

using namespace ostop;

namespace {

DiffusionSpec bm(double b = 0.0) {
  DiffusionSpec d;
  d.drift = Coef::constant(b);
  d.sigma = Coef::constant(1.0);
  return d;
}

}  // namespace

TEST_CASE("zero cost gives a zero potential") {
  auto pair = fundamental_solutions(bm(), 0.5);
  auto rep = check_integrability(pair, Coef::constant(0.0));
  CHECK(rep.ok);
  CHECK(rep.bulk == 0.0);
  auto dl = delta(pair, Coef::constant(0.0));
  CHECK(dl.is_zero());
  CHECK(dl.value(0.7) == 0.0);
  CHECK(dl.derivative(0.7) == 0.0);
}

TEST_CASE("integrability of exponential costs at q = 1/2") {
  auto pair = fundamental_solutions(bm(), 0.5);
  // gamma = 0.5: q > gamma^2/2 = 0.125, integrable (wider span for the
  // slowly decaying product tail)
  SturmOptions wide;
  wide.span_units = 60.0;
  auto pair_wide = fundamental_solutions(bm(), 0.5, wide);
  CHECK(check_integrability(pair_wide, Coef::exponential(1.0, 0.5)).ok);
  // gamma = 1.2: gamma^2/2 = 0.72 > q, tails explode
  auto rep = check_integrability(pair, Coef::exponential(1.0, 1.2));
  CHECK(!rep.ok);
  CHECK(!rep.decays_hi);
  CHECK_THROWS_AS(delta(pair, Coef::exponential(1.0, 1.2)), Error);
}

TEST_CASE("exponential cost closed form at q = 1/2") {
  auto built = build_cost_potential(bm(), 0.5, Coef::exponential(1.0, 0.5));
  const auto& dl = *built.dl;
  // delta(x) = e^{0.5x} / (q - gamma^2/2) = e^{0.5x} / 0.375
  CHECK(dl.value(0.0) == doctest::Approx(1.0 / 0.375).epsilon(1e-8));
  CHECK(dl.value(0.0) == doctest::Approx(2.6666667).epsilon(1e-6));
  for (double x : {-4.0, -1.3, 0.4, 2.0, 4.8}) {
    double expect = std::exp(0.5 * x) / 0.375;
    CHECK(dl.value(x) == doctest::Approx(expect).epsilon(1e-8));
    CHECK(dl.derivative(x) == doctest::Approx(0.5 * expect).epsilon(1e-7));
  }
}

TEST_CASE("constant cost gives the discounted perpetuity") {
  for (double q : {0.5, 1.0, 2.0}) {
    auto pair = fundamental_solutions(bm(0.3), q);
    auto dl = delta(pair, Coef::constant(1.0));
    for (double x : {-2.0, 0.0, 3.0}) {
      CHECK(dl.value(x) == doctest::Approx(1.0 / q).epsilon(1e-7));
    }
  }
}

TEST_CASE("ODE residual of the cost potential") {
  auto built = build_cost_potential(bm(), 0.5, Coef::exponential(1.0, 0.5));
  const auto& pair = *built.pair;
  const auto& dl = *built.dl;
  // (1/2) delta'' - q delta + c = 0; fourth-order stencil at interior points
  const auto& x = pair.grid();
  double worst = 0.0;
  std::size_t lo = x.size() / 5, hi = x.size() - x.size() / 5;
  for (std::size_t i = lo; i < hi; i += 29) {
    double h = x[i + 1] - x[i];
    double fm2 = dl.value(x[i] - 2 * h), fm1 = dl.value(x[i] - h);
    double f0 = dl.value(x[i]);
    double fp1 = dl.value(x[i] + h), fp2 = dl.value(x[i] + 2 * h);
    double d2 = (-fp2 + 16 * fp1 - 30 * f0 + 16 * fm1 - fm2) / (12 * h * h);
    double res = 0.5 * d2 - 0.5 * f0 + std::exp(0.5 * x[i]);
    worst = std::max(worst, std::abs(res) / (1.0 + 0.5 * f0));
  }
  CHECK(worst < 1e-5);
}

TEST_CASE("both quadrature routes agree") {
  // prefix/suffix construction vs direct Green-kernel integration
  auto pair = fundamental_solutions(bm(), 0.5);
  Coef c = Coef::exponential(0.7, 0.4);
  auto dl = delta(pair, c);
  const auto& ss = pair.scale_speed();
  for (double x : {-1.0, 0.0, 1.5}) {
    auto f = [&](double y) { return green(pair, x, y) * c(y) * ss.m_density(y); };
    double direct = adaptive_quadrature(f, pair.grid_lo(), pair.grid_hi(), 1e-11);
    CHECK(dl.value(x) == doctest::Approx(direct).epsilon(1e-8));
  }
}

TEST_CASE("strong Markov decomposition against Monte Carlo") {
  // E[int_0^T c e^{-qs} ds + e^{-qT} delta(X_T)] = delta(x) at T = T_y
  double q = 0.5;
  Coef c = Coef::exponential(1.0, 0.5);
  auto built = build_cost_potential(bm(), q, c);
  const auto& dl = *built.dl;

  double x = 0.0, y = 1.0;
  ProblemSpec p;
  p.diffusion = bm();
  // reward delta(y) paid at the hitting time reproduces e^{-qT} delta(X_T)
  double dy = dl.value(y);
  p.reward = Reward{[dy](double) { return dy; }, {}, {}};
  p.cost = Coef::exponential(-1.0, 0.5);  // negative cost == collected integral
  p.discount = ConstantRate{q};
  p.x0 = x;
  // simulate E[e^{-qT} delta(y) + int c e^{-qs}]: flip the cost sign so the
  // estimator returns reward + integral
  SimConfig cfg;
  cfg.n_paths = 60000;
  cfg.dt = 5e-4;
  cfg.horizon = 60.0;
  cfg.seed = 99;
  cfg.bridge = true;
  auto est = simulate_payoff(p, StoppingRule::threshold(y), cfg);
  CHECK(std::abs(est.mean - dl.value(x)) <= 3.0 * est.std_error + 2e-3);
}
