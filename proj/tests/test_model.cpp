#include <doctest.h>

#include <cmath>

#include "ostop/errors.hpp"
#include "ostop/model.hpp"
#include "ostop/potential.hpp"
#include "ostop/solver.hpp"
#include "ostop/sturm.hpp"

using namespace ostop;

namespace {

Reward exp_call(double K) {
  Reward g;
  double lk = std::log(K);
  g.f = [K](double x) { return std::max(std::exp(x) - K, 0.0); };
  g.df = [lk](double x) { return x > lk ? std::exp(x) : 0.0; };
  g.kinks = {lk};
  return g;
}

ProblemSpec bm_problem() {
  ProblemSpec p;
  p.diffusion.drift = Coef::constant(0.0);
  p.diffusion.sigma = Coef::constant(1.0);
  p.reward = exp_call(1.0);
  p.cost = Coef::constant(0.0);
  p.discount = ConstantRate{1.0};
  p.x0 = 0.0;
  return p;
}

}  // namespace

TEST_CASE("validate accepts the plain BM call problem") {
  auto v = validate(bm_problem());
  CHECK(v.checked_points >= 1001);
}

TEST_CASE("validate flags sigma vanishing inside E") {
  ProblemSpec p = bm_problem();
  p.diffusion.sigma = Coef::custom([](double x) { return x; });  // sigma(0) = 0 inside E
  CHECK_THROWS_WITH_AS(validate(p), doctest::Contains("sigma"), Error);
  try {
    validate(p);
  } catch (const Error& e) {
    CHECK(e.code() == errc::non_positive_volatility);
  }
}

TEST_CASE("validate flags nonpositive constant rate") {
  ProblemSpec p = bm_problem();
  p.discount = ConstantRate{0.0};
  try {
    validate(p);
    CHECK(false);
  } catch (const Error& e) {
    CHECK(e.code() == errc::non_positive_discount);
  }
}

TEST_CASE("validate flags negative reward and cost") {
  ProblemSpec p = bm_problem();
  p.reward.f = [](double x) { return x; };  // negative on x < 0
  try {
    validate(p);
    CHECK(false);
  } catch (const Error& e) {
    CHECK(e.code() == errc::negative_reward);
  }
  p = bm_problem();
  p.cost = Coef::affine(0.0, 1.0);
  try {
    validate(p);
    CHECK(false);
  } catch (const Error& e) {
    CHECK(e.code() == errc::negative_cost);
  }
}

TEST_CASE("time change with constant a scales coefficients") {
  ProblemSpec p = bm_problem();
  p.cost = Coef::constant(0.3);
  p.discount = RandomDiscount{Coef::constant(4.0)};
  auto r = time_change_reduce(p);
  CHECK(r.has_constant_rate());
  CHECK(r.rate() == 1.0);
  CHECK(r.diffusion.drift(0.7) == 0.0);
  CHECK(r.diffusion.sigma(0.7) == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(r.cost(0.7) == doctest::Approx(0.3 / 4.0).epsilon(1e-14));
}

TEST_CASE("time change with a(x) = e^{2x} produces the stated coefficients") {
  ProblemSpec p = bm_problem();
  p.cost = Coef::constant(1.0);
  p.discount = RandomDiscount{Coef::exponential(1.0, 2.0)};
  auto r = time_change_reduce(p);
  CHECK(r.rate() == 1.0);
  for (double x : {-0.5, 0.0, 1.2}) {
    CHECK(r.diffusion.drift(x) == doctest::Approx(0.0));
    CHECK(r.diffusion.sigma(x) == doctest::Approx(std::exp(-x)).epsilon(1e-13));
    CHECK(r.cost(x) == doctest::Approx(std::exp(-2.0 * x)).epsilon(1e-13));
  }
}

TEST_CASE("time change is a no-op on constant-rate problems") {
  ProblemSpec p = bm_problem();
  p.discount = ConstantRate{2.0};
  auto r = time_change_reduce(p);
  CHECK(r.rate() == 2.0);
  auto r2 = time_change_reduce(r);
  CHECK(r2.rate() == 2.0);
  CHECK(r2.diffusion.sigma(0.3) == p.diffusion.sigma(0.3));
}

TEST_CASE("value agreement: direct rate-q solve vs constant time change") {
  // direct: q = 2
  ProblemSpec direct = bm_problem();
  direct.discount = ConstantRate{2.0};
  auto pair_d = fundamental_solutions(direct.diffusion, 2.0);
  auto dl_d = delta(pair_d, direct.cost);
  auto sol_d = solve_one_sided(pair_d, dl_d, direct.reward, 0.0);

  // reduced: a = 2 constant -> rate 1 on the slowed diffusion
  ProblemSpec rnd = bm_problem();
  rnd.discount = RandomDiscount{Coef::constant(2.0)};
  auto reduced = time_change_reduce(rnd);
  auto pair_r = fundamental_solutions(reduced.diffusion, reduced.rate());
  auto dl_r = delta(pair_r, reduced.cost);
  auto sol_r = solve_one_sided(pair_r, dl_r, reduced.reward, 0.0);

  CHECK(sol_d.attained);
  CHECK(sol_r.attained);
  CHECK(sol_d.u_star == doctest::Approx(sol_r.u_star).epsilon(1e-9));
  for (double x : {-1.0, -0.5, 0.0, 0.5, 1.0}) {
    CHECK(sol_d.value(x) == doctest::Approx(sol_r.value(x)).epsilon(1e-8));
  }
}
