#include <doctest.h>

#include <cmath>

#include "ostop/errors.hpp"
#include "ostop/mc.hpp"
#include "ostop/potential.hpp"
#include "ostop/solver.hpp"

using namespace ostop;

namespace {

DiffusionSpec bm(double b = 0.0) {
  DiffusionSpec d;
  d.drift = Coef::constant(b);
  d.sigma = Coef::constant(1.0);
  return d;
}

Reward exp_call(double K) {
  Reward g;
  double lk = std::log(K);
  g.f = [K](double x) { return std::max(std::exp(x) - K, 0.0); };
  g.df = [lk](double x) { return x > lk ? std::exp(x) : 0.0; };
  g.kinks = {lk};
  return g;
}

Reward exp_strangle(double L, double K) {
  Reward g;
  double ll = std::log(L), lk = std::log(K);
  g.f = [L, K](double x) {
    double e = std::exp(x);
    return std::max(L - e, 0.0) + std::max(e - K, 0.0);
  };
  g.df = [ll, lk](double x) {
    if (x < ll) return -std::exp(x);
    if (x > lk) return std::exp(x);
    return 0.0;
  };
  g.kinks = {ll, lk};
  return g;
}

// strangle on the state itself (log-moneyness payoff legs)
Reward state_strangle(double lo, double hi) {
  Reward g;
  g.f = [lo, hi](double x) { return std::max(lo - x, 0.0) + std::max(x - hi, 0.0); };
  g.df = [lo, hi](double x) {
    if (x < lo) return -1.0;
    if (x > hi) return 1.0;
    return 0.0;
  };
  g.kinks = {lo, hi};
  return g;
}

Reward constant_reward(double v) {
  return Reward{[v](double) { return v; }, [](double) { return 0.0; }, {}};
}

Reward zero_reward() { return constant_reward(0.0); }

}  // namespace

TEST_CASE("ratio values") {
  auto pair = fundamental_solutions(bm(), 1.0);
  auto dl = delta(pair, Coef::constant(0.0));
  CHECK(ratio(pair, dl, zero_reward(), 0.7) == 0.0);
  auto g = exp_call(1.0);
  for (double u : {0.5, 1.0, 2.0}) {
    double expect = (std::exp(u) - 1.0) * std::exp(-std::sqrt(2.0) * u);
    CHECK(ratio(pair, dl, g, u) == doctest::Approx(expect).epsilon(1e-8));
  }
  CHECK(ratio(pair, dl, g, -1.0) == 0.0);  // payoff vanishes there
}

TEST_CASE("one-sided call at q = 1: threshold and value from the first-order condition") {
  auto pair = fundamental_solutions(bm(), 1.0);
  auto dl = delta(pair, Coef::constant(0.0));
  auto sol = solve_one_sided(pair, dl, exp_call(1.0), 0.0);
  REQUIRE(sol.attained);
  // oracle: d/du (e^u - 1) e^{-sqrt2 u} = 0  =>  e^{u*} = 2 + sqrt(2)
  double u_star = std::log(2.0 + std::sqrt(2.0));
  double d_star = (std::exp(u_star) - 1.0) * std::exp(-std::sqrt(2.0) * u_star);
  CHECK(sol.u_star == doctest::Approx(u_star).epsilon(1e-9));
  CHECK(sol.D_star == doctest::Approx(d_star).epsilon(1e-9));
  CHECK(sol.value(0.0) == doctest::Approx(d_star).epsilon(1e-9));
  // majorant dominance on a grid
  for (double x = -3.0; x <= 3.0; x += 0.125) {
    CHECK(sol.value(x) >= std::max(std::exp(x) - 1.0, 0.0) - 1e-10);
  }
  // equality at the boundary of the stopping region
  double gu = std::exp(sol.u_star) - 1.0;
  CHECK(sol.value(sol.u_star) == doctest::Approx(gu).epsilon(1e-8));
}

TEST_CASE("supremum at infinity is flagged, not thrown") {
  auto pair = fundamental_solutions(bm(), 0.5);
  auto dl = delta(pair, Coef::constant(0.0));
  auto sol = solve_one_sided(pair, dl, exp_call(1.0), 0.0);
  CHECK(!sol.attained);
  CHECK(std::isinf(sol.u_star));
  CHECK(sol.D_star == doctest::Approx(1.0).epsilon(1e-6));
  for (double x : {-1.0, 0.0, 1.0}) {
    CHECK(sol.value(x) == doctest::Approx(std::exp(x)).epsilon(1e-6));
  }
}

TEST_CASE("diverging ratio raises UnboundedValue") {
  auto pair = fundamental_solutions(bm(), 0.5);
  auto dl = delta(pair, Coef::constant(0.0));
  Reward g;
  g.f = [](double x) { return std::exp(2.0 * x); };
  g.df = [](double x) { return 2.0 * std::exp(2.0 * x); };
  try {
    solve_one_sided(pair, dl, g, 0.0);
    CHECK(false);
  } catch (const Error& e) {
    CHECK(e.code() == errc::unbounded_value);
  }
}

TEST_CASE("constant reward stops immediately") {
  auto pair = fundamental_solutions(bm(), 1.0);
  auto dl = delta(pair, Coef::constant(0.0));
  auto sol = solve_one_sided(pair, dl, constant_reward(3.0), 0.25);
  CHECK(sol.attained);
  CHECK(sol.u_star == doctest::Approx(0.25));
  CHECK(sol.value(0.25) == doctest::Approx(3.0).epsilon(1e-10));
}

TEST_CASE("normalization invariance of the argmax and value") {
  auto pair = fundamental_solutions(bm(), 1.0);
  auto dl = delta(pair, Coef::constant(0.0));
  auto g = exp_call(1.0);
  auto base = solve_one_sided(pair, dl, g, 0.0);

  // rescale h+ by 2: D* halves, u* and value(.) unchanged
  ExcessiveHandle h2{[&pair](double u) { return pair.log_hplus(u) + std::log(2.0); },
                     [&pair](double u) { return pair.weight_plus(u); }};
  auto n = payoff_handle(g, &dl);
  std::vector<double> scan;
  scan.push_back(0.0);
  for (double v : pair.grid())
    if (v > 0.0) scan.push_back(v);
  auto scaled = solve_one_sided(h2, n, scan, 0.0, [](double) { return 0.0; });
  CHECK(scaled.attained);
  CHECK(scaled.u_star == doctest::Approx(base.u_star).epsilon(1e-10));
  CHECK(scaled.D_star == doctest::Approx(0.5 * base.D_star).epsilon(1e-10));
  for (double x : {-1.0, 0.0, 0.8}) {
    CHECK(scaled.value(x) == doctest::Approx(base.value(x)).epsilon(1e-10));
  }
}

TEST_CASE("two-sided symmetric strangle balances at p = 1/2") {
  auto pair = fundamental_solutions(bm(), 0.5);
  auto dl = delta(pair, Coef::constant(0.0));
  // payoff legs at log K = 1, log L = -1: symmetric under x -> -x
  auto g = state_strangle(-1.0, 1.0);
  auto sol = solve_two_sided(pair, dl, g, 0.0);
  CHECK(sol.p_star == doctest::Approx(0.5).epsilon(1e-8));
  CHECK(sol.u2_star == doctest::Approx(-sol.u1_star).epsilon(1e-8));
  CHECK(sol.u2_star > 1.0);
  CHECK(std::abs(sol.residual_ratio) < 1e-8);
  CHECK(sol.smooth_fit_checked);
  CHECK(std::abs(sol.residual_fit_lower) < 1e-8);
  CHECK(std::abs(sol.residual_fit_upper) < 1e-8);
  // value majorizes the payoff and matches it at the thresholds
  for (double x = -2.5; x <= 2.5; x += 0.1) {
    CHECK(sol.value(x) >= g(x) - 1e-9);
  }
  CHECK(sol.value(sol.u2_star) == doctest::Approx(g(sol.u2_star)).epsilon(1e-8));
  CHECK(sol.value(sol.u1_star) == doctest::Approx(g(sol.u1_star)).epsilon(1e-8));
}

TEST_CASE("two-sided strangle with observation costs solves the threshold system") {
  double q = 0.5;
  auto pair = fundamental_solutions(bm(), q);
  auto dl = delta(pair, Coef::constant(1.0));   // delta = 1/q = 2
  auto g = exp_strangle(0.8, 1.2);
  auto sol = solve_two_sided(pair, dl, g, 0.0);
  CHECK(sol.p_star > 0.0);
  CHECK(sol.p_star < 1.0);
  CHECK(sol.u1_star < std::log(0.8));
  CHECK(sol.u2_star > std::log(1.2));

  // independent residuals of the threshold system with alpha_{1,2} = +/-1:
  // ratio equality plus the two smooth-fit conditions on g + delta
  double p = sol.p_star, x1 = sol.u2_star, x2 = sol.u1_star;
  auto mix = [&](double x) { return p * std::exp(x) + (1.0 - p) * std::exp(-x); };
  auto dmix = [&](double x) { return p * std::exp(x) - (1.0 - p) * std::exp(-x); };
  double n1 = std::exp(x1) - 1.2 + 2.0;
  double n2 = 0.8 - std::exp(x2) + 2.0;
  double r_ratio = n1 / mix(x1) - n2 / mix(x2);
  double r_hi = std::exp(x1) / n1 - dmix(x1) / mix(x1);
  double r_lo = -std::exp(x2) / n2 - dmix(x2) / mix(x2);
  CHECK(std::abs(r_ratio) < 1e-8);
  CHECK(std::abs(r_hi) < 1e-8);
  CHECK(std::abs(r_lo) < 1e-8);

  // value at the start: M* - delta(0)
  CHECK(sol.value(0.0) == doctest::Approx(sol.M_star - 2.0).epsilon(1e-8));

  // Monte Carlo agreement at the exit rule
  ProblemSpec prob;
  prob.diffusion = bm();
  prob.reward = g;
  prob.cost = Coef::constant(1.0);
  prob.discount = ConstantRate{q};
  prob.x0 = 0.0;
  SimConfig cfg;
  cfg.n_paths = 40000;
  cfg.dt = 1e-3;
  cfg.horizon = 80.0;
  cfg.seed = 321;
  cfg.bridge = true;
  auto est = simulate_payoff(prob, StoppingRule::interval(x2, x1), cfg);
  CHECK(std::abs(est.mean - sol.value(0.0)) <= 3.0 * est.std_error + 2e-3);
}

TEST_CASE("degenerate zero problem reports NoInteriorSolution") {
  auto pair = fundamental_solutions(bm(), 0.5);
  auto dl = delta(pair, Coef::constant(0.0));
  try {
    solve_two_sided(pair, dl, zero_reward(), 0.0);
    CHECK(false);
  } catch (const Error& e) {
    CHECK(e.code() == errc::no_interior_solution);
  }
}

TEST_CASE("cost problem equals cost-free problem with shifted reward") {
  double q = 1.0;
  auto pair = fundamental_solutions(bm(), q);
  Coef c = Coef::exponential(0.5, 0.3);
  auto dl = delta(pair, c);
  auto g = exp_call(1.0);

  auto direct = solve_one_sided(pair, dl, g, 0.0);

  // independent second path: never hands the cost to the solver
  auto dl0 = delta(pair, Coef::constant(0.0));
  Reward shifted;
  const CostPotential* dp = &dl;
  shifted.f = [g, dp](double x) { return g(x) + dp->value(x); };
  shifted.df = [g, dp](double x) { return g.df(x) + dp->derivative(x); };
  shifted.kinks = g.kinks;
  auto indirect = solve_one_sided(pair, dl0, shifted, 0.0);

  REQUIRE(direct.attained);
  REQUIRE(indirect.attained);
  CHECK(direct.u_star == doctest::Approx(indirect.u_star).epsilon(1e-10));
  for (double x : {-1.0, 0.0, 0.5}) {
    double v2 = indirect.value(x) - dl.value(x);
    CHECK(direct.value(x) == doctest::Approx(v2).epsilon(1e-10));
  }
}

TEST_CASE("suboptimal thresholds are dominated in Monte Carlo") {
  auto pair = fundamental_solutions(bm(), 1.0);
  auto dl = delta(pair, Coef::constant(0.0));
  auto sol = solve_one_sided(pair, dl, exp_call(1.0), 0.0);

  ProblemSpec prob;
  prob.diffusion = bm();
  prob.reward = exp_call(1.0);
  prob.cost = Coef::constant(0.0);
  prob.discount = ConstantRate{1.0};
  prob.x0 = 0.0;
  SimConfig cfg;
  cfg.n_paths = 30000;
  cfg.dt = 1e-3;
  cfg.horizon = 40.0;
  cfg.seed = 777;
  std::vector<double> levels = {sol.u_star - 0.5, sol.u_star - 0.2, sol.u_star,
                                sol.u_star + 0.2, sol.u_star + 0.5};
  auto ests = simulate_threshold_family(prob, levels, cfg);
  auto at_star = ests[2];
  for (std::size_t i = 0; i < levels.size(); ++i) {
    CHECK(ests[i].mean <=
          at_star.mean + 3.0 * (ests[i].std_error + at_star.std_error) + 1e-3);
  }
}

TEST_CASE("value table marks the stopping region") {
  auto pair = fundamental_solutions(bm(), 1.0);
  auto dl = delta(pair, Coef::constant(0.0));
  auto sol = solve_one_sided(pair, dl, exp_call(1.0), 0.0);
  std::vector<double> grid;
  for (double x = -1.0; x <= 3.0; x += 0.05) grid.push_back(x);
  std::function<double(double)> dfn = [&](double y) { return dl.value(y); };
  auto rows = value_table(sol.value, exp_call(1.0), dfn, grid);
  for (const auto& r : rows) {
    if (r.x < sol.u_star - 0.02) CHECK(!r.stop);
    if (r.x > sol.u_star + 0.02) CHECK(r.stop);
  }
  auto csv = value_table_csv(rows);
  CHECK(csv.rfind("x,value,reward,delta,stop\n", 0) == 0);

  // constant reward: the whole grid is a stopping region
  auto solc = solve_one_sided(pair, dl, constant_reward(2.0), 0.0);
  auto rows2 = value_table(solc.value, constant_reward(2.0), dfn, grid);
  for (const auto& r : rows2) CHECK(r.stop);
}
