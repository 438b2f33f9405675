#include <doctest.h>

#include <cmath>

#include "ostop/errors.hpp"
#include "ostop/levy.hpp"
#include "ostop/mc.hpp"
#include "ostop/solver.hpp"
#include "ostop/specfun.hpp"

using namespace ostop;

namespace {

LevySpec bm(double sigma2 = 1.0, double b = 0.0) { return LevySpec{sigma2, b, NoJumps{}}; }

Reward exp_call(double K) {
  Reward g;
  double lk = std::log(K);
  g.f = [K](double x) { return std::max(std::exp(x) - K, 0.0); };
  g.df = [lk](double x) { return x > lk ? std::exp(x) : 0.0; };
  g.kinks = {lk};
  return g;
}

}  // namespace

TEST_CASE("Laplace exponent of Brownian families") {
  LaplaceExponent le(bm());
  CHECK(le.psi(0.0) == 0.0);
  CHECK(le.psi(1.0) == doctest::Approx(0.5).epsilon(1e-14));
  LaplaceExponent le2(bm(1.0, 0.25));
  CHECK(le2.psi(0.0) == 0.0);
  CHECK(le2.psi(1.0) == doctest::Approx(0.75).epsilon(1e-14));
}

TEST_CASE("Laplace exponent of the compound Poisson family vanishes at zero") {
  LevySpec spec{0.5, 0.8, CompoundPoissonExp{2.0, 0.3}};
  LaplaceExponent le(spec);
  CHECK(le.psi(0.0) == 0.0);
  // convexity on a probe grid
  for (double u = 0.0; u < 6.0; u += 0.4) {
    double mid = le.psi(u + 0.2);
    CHECK(mid <= 0.5 * (le.psi(u) + le.psi(u + 0.4)) + 1e-12);
  }
}

TEST_CASE("Pochhammer family Laplace exponent") {
  LevySpec spec{0.0, 0.0, PochhammerFamily{1.5, 1.0}};
  LaplaceExponent le(spec);
  CHECK(le.psi(0.0) == doctest::Approx(0.0).epsilon(1e-12));
  // psi(1) = (1)_{1.5} = Gamma(2.5)/Gamma(1)
  CHECK(le.psi(1.0) == doctest::Approx(std::tgamma(2.5)).epsilon(1e-12));
  CHECK(le.psi(1.0) == doctest::Approx(1.3293404).epsilon(1e-7));
}

TEST_CASE("martingale rate") {
  CHECK(martingale_rate(LaplaceExponent(bm())) == doctest::Approx(0.5));
  CHECK(martingale_rate(LaplaceExponent(bm(1.0, 0.25))) == doctest::Approx(0.75));
  try {
    martingale_rate(LaplaceExponent(bm(1.0, -0.5)));
    CHECK(false);
  } catch (const Error& e) {
    CHECK(e.code() == errc::nonpositive_rate);
  }
}

TEST_CASE("inverse of the Laplace exponent") {
  LaplaceExponent le(bm(1.0, 0.3));
  CHECK(le.phi(0.0) == doctest::Approx(le.theta()).epsilon(1e-12));
  for (double r = 0.05; r < 8.0; r += 0.37) {
    double u = le.phi(r);
    CHECK(le.psi(u) == doctest::Approx(r).epsilon(1e-12));
    CHECK(u >= le.theta());
  }
  // phi increasing
  CHECK(le.phi(2.0) > le.phi(1.0));
  // theta of a negative-drift spec is positive
  LaplaceExponent led(bm(1.0, -0.7));
  CHECK(led.theta() == doctest::Approx(1.4).epsilon(1e-10));  // u^2/2 - 0.7u = 0
}

TEST_CASE("upward hitting Laplace transform") {
  LaplaceExponent le(bm());
  CHECK(hitting_laplace_up(le, 0.3, 0.3, 1.7) == 1.0);
  // phi(1/2) = 1 for driftless unit BM
  CHECK(hitting_laplace_up(le, 0.0, 1.0, 0.5) == doctest::Approx(std::exp(-1.0)).epsilon(1e-12));
  CHECK(hitting_laplace_up(le, 0.0, 1.0, 0.0) == 1.0);  // theta = 0, recurrent up-crossing
  CHECK_THROWS_AS(hitting_laplace_up(le, 1.0, 0.0, 0.5), Error);
}

TEST_CASE("call with exponential observation cost: closed form") {
  LaplaceExponent le(bm());
  auto res = call_with_cost(le, 1.0, 0.1, 0.5, 0.0);
  CHECK(res.q == doctest::Approx(0.5));
  CHECK(res.p_gamma == doctest::Approx(0.375).epsilon(1e-13));
  CHECK(res.x_star == doctest::Approx(2.0 * std::log(7.5)).epsilon(1e-13));
  CHECK(res.x_star == doctest::Approx(4.0297859).epsilon(1e-7));
  CHECK(std::exp(res.x_star) == doctest::Approx(56.25).epsilon(1e-10));
  double expect = 57.25 / 56.25 - 4.0 / 15.0;
  CHECK(res.value == doctest::Approx(expect).epsilon(1e-12));
  CHECK(expect == doctest::Approx(0.7511111).epsilon(1e-6));
  CHECK(res.start_below);

  // threshold decreasing in the cost coefficient
  auto res2 = call_with_cost(le, 1.0, 0.2, 0.5, 0.0);
  CHECK(res2.x_star < res.x_star);

  // starting above the threshold is flagged, no value claimed
  auto res3 = call_with_cost(le, 1.0, 0.1, 0.5, 5.0);
  CHECK(!res3.start_below);
  CHECK(std::isnan(res3.value));
}

TEST_CASE("p_gamma must be positive") {
  // psi(gamma) >= psi(1) makes the cost non-integrable at q = psi(1)
  LaplaceExponent le(bm(1.0, 2.0));  // psi(u) = u^2/2 + 2u, q = 2.5
  CHECK_THROWS_AS(call_with_cost(le, 1.0, 0.1, 0.99, 0.0), Error);
}

TEST_CASE("closed form agrees with the generic ratio solver") {
  LaplaceExponent le(bm());
  double q = martingale_rate(le);
  double gamma = 0.5, coeff = 0.1, K = 1.0, x = 0.0;
  auto cf = call_with_cost(le, K, coeff, gamma, x);

  double pg = q - le.psi(gamma);
  double phiq = le.phi(q);
  ExcessiveHandle h{[phiq](double u) { return phiq * u; }, [phiq](double) { return phiq; }};
  auto g = exp_call(K);
  auto dfn = [coeff, gamma, pg](double z) { return coeff * std::exp(gamma * z) / pg; };
  PayoffHandle n;
  n.f = [g, dfn](double u) { return g(u) + dfn(u); };
  n.df = [g, dfn, gamma](double u) { return g.df(u) + gamma * dfn(u); };
  n.smooth_at = [g](double u) { return g.smooth_at(u); };
  std::vector<double> scan(4096);
  for (int i = 0; i < 4096; ++i) scan[i] = x + 60.0 * i / 4095.0;
  auto sol = solve_one_sided(h, n, scan, x, dfn);
  REQUIRE(sol.attained);
  CHECK(sol.u_star == doctest::Approx(cf.x_star).epsilon(1e-10));
  CHECK(sol.value(x) == doctest::Approx(cf.value).epsilon(1e-10));
}

TEST_CASE("exponential cost potential matches Monte Carlo") {
  // delta(x) = alpha e^{gamma x}/p_gamma as a discounted perpetual integral
  LevySpec spec = bm();
  LaplaceExponent le(spec);
  double q = 0.5, gamma = 0.5, coeff = 0.3, x = 0.2;
  double pg = q - le.psi(gamma);
  double expect = coeff * std::exp(gamma * x) / pg;

  SimConfig cfg;
  cfg.n_paths = 40000;
  cfg.dt = 1e-3;
  cfg.horizon = 80.0;
  cfg.seed = 2024;
  // fixed-time rule far beyond the discount floor: payoff = -C_T -> -delta
  Reward zero;
  zero.f = [](double) { return 0.0; };
  auto est = simulate_levy_payoff(spec, x, zero, Coef::exponential(coeff, gamma), q,
                                  StoppingRule::fixed_time(60.0), cfg);
  CHECK(std::abs(-est.mean - expect) <= 3.0 * est.std_error + 1e-3);
}

TEST_CASE("call-with-cost value matches Monte Carlo at the threshold rule") {
  LevySpec spec = bm();
  LaplaceExponent le(spec);
  auto cf = call_with_cost(le, 1.0, 0.1, 0.5, 0.0);
  SimConfig cfg;
  cfg.n_paths = 60000;
  cfg.dt = 1e-3;
  cfg.horizon = 200.0;
  cfg.seed = 5150;
  cfg.bridge = true;
  cfg.discount_floor = 1e-9;
  cfg.prune_tol = 1e-9;
  auto g = exp_call(1.0);
  auto est = simulate_levy_payoff(spec, 0.0, g, Coef::exponential(0.1, 0.5), cf.q,
                                  StoppingRule::threshold(cf.x_star), cfg);
  CHECK(std::abs(est.mean - cf.value) <= 3.0 * est.std_error);
}

TEST_CASE("compound Poisson spec solves through the generic path") {
  LevySpec spec{1.0, 0.1, CompoundPoissonExp{0.5, 0.4}};
  LaplaceExponent le(spec);
  double q = martingale_rate(le);
  CHECK(q > 0.0);
  double phiq = le.phi(q);
  // upward hitting ratio via phi: exact for spectrally negative paths
  double lap = hitting_laplace_up(le, 0.0, 0.8, q);
  CHECK(lap == doctest::Approx(std::exp(-phiq * 0.8)).epsilon(1e-12));

  SimConfig cfg;
  cfg.n_paths = 60000;
  cfg.dt = 5e-4;
  cfg.horizon = 120.0;
  cfg.seed = 77;
  cfg.bridge = true;
  Reward one;
  one.f = [](double) { return 1.0; };
  auto est = simulate_levy_payoff(spec, 0.0, one, Coef::constant(0.0), q,
                                  StoppingRule::threshold(0.8), cfg);
  CHECK(std::abs(est.mean - lap) <= 3.0 * est.std_error + 2e-3);
}
