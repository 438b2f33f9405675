#include <doctest.h>

#include <cmath>
#include <random>

#include "ostop/specfun.hpp"

using namespace ostop;

namespace {

// brute-force oracles, independent of the kernel implementations
double bessel_i_oracle(double nu, double x, int terms) {
  double s = 0.0;
  for (int n = 0; n < terms; ++n)
    s += std::exp((nu + 2 * n) * std::log(0.5 * x) - std::lgamma(n + 1.0) -
                  std::lgamma(nu + n + 1.0));
  return s;
}

double phi_oracle(double q, double nu, double x, int terms) {
  double s = 0.0;
  for (int n = 0; n < terms; ++n) {
    double lt = std::lgamma(q + n) - std::lgamma(q) - (std::lgamma(nu + n) - std::lgamma(nu)) -
                std::lgamma(n + 1.0) + n * std::log(x);
    s += std::exp(lt);
  }
  return s;
}

double ml_oracle(double alpha, double beta, double x, int terms) {
  double s = 0.0;
  for (int n = 0; n < terms; ++n)
    s += std::pow(x, n) / std::tgamma(alpha * n + beta);
  return s;
}

}  // namespace

TEST_CASE("log_gamma basics") {
  CHECK(std::exp(specfun::log_gamma(0.5)) == doctest::Approx(std::sqrt(M_PI)).epsilon(1e-12));
  CHECK(specfun::log_gamma(1.0) == doctest::Approx(0.0));
  CHECK_THROWS(specfun::log_gamma(0.0));
}

TEST_CASE("pochhammer") {
  CHECK(specfun::pochhammer(2.0, 0) == 1.0);
  CHECK(specfun::pochhammer(2.0, 3) == doctest::Approx(2.0 * 3.0 * 4.0).epsilon(1e-13));
  CHECK(specfun::pochhammer(0.7, 1) == doctest::Approx(0.7).epsilon(1e-13));
}

TEST_CASE("pochhammer_real handles nonpositive bases") {
  // (z)_a at z = 0 vanishes
  CHECK(specfun::pochhammer_real(0.0, 1.5) == 0.0);
  // positive case agrees with the integer version
  CHECK(specfun::pochhammer_real(2.0, 3.0) == doctest::Approx(24.0).epsilon(1e-12));
  // negative non-integer base: compare against Gamma reflection computed here
  double z = -0.4, a = 1.5;
  double direct = std::tgamma(z + a) / std::tgamma(z);
  CHECK(specfun::pochhammer_real(z, a) == doctest::Approx(direct).epsilon(1e-10));
}

TEST_CASE("modified Bessel I") {
  CHECK(specfun::bessel_i(0.0, 0.0) == 1.0);
  CHECK(specfun::bessel_i(0.0, 2.0) ==
        doctest::Approx(bessel_i_oracle(0.0, 2.0, 50)).epsilon(1e-13));
  CHECK(specfun::bessel_i(0.0, 2.0) == doctest::Approx(2.2795853).epsilon(1e-7));
  // half-integer closed form I_{1/2}(x) = sqrt(2/(pi x)) sinh(x)
  double x = 1.0;
  double expect = std::sqrt(2.0 / (M_PI * x)) * std::sinh(x);
  CHECK(specfun::bessel_i(0.5, x) == doctest::Approx(expect).epsilon(1e-12));
  CHECK(expect == doctest::Approx(0.9376748).epsilon(1e-7));
}

TEST_CASE("bessel_i recurrence on a grid") {
  for (double x = 0.5; x <= 10.0; x += 0.5) {
    double nu = 1.0;
    double lhs = specfun::bessel_i(nu - 1.0, x) - specfun::bessel_i(nu + 1.0, x);
    double rhs = (2.0 * nu / x) * specfun::bessel_i(nu, x);
    CHECK(lhs == doctest::Approx(rhs).epsilon(1e-9));
  }
}

TEST_CASE("confluent hypergeometric") {
  CHECK(specfun::confluent_phi(0.7, 1.3, 0.0) == 1.0);
  CHECK(specfun::confluent_phi(1.0, 1.0, 1.0) == doctest::Approx(std::exp(1.0)).epsilon(1e-13));
  CHECK(specfun::confluent_phi(0.7, 1.0, 0.5) ==
        doctest::Approx(phi_oracle(0.7, 1.0, 0.5, 100)).epsilon(1e-13));
  CHECK_THROWS(specfun::confluent_phi(0.7, -2.0, 0.5));
}

TEST_CASE("Mittag-Leffler") {
  CHECK(specfun::mittag_leffler(1.0, 1.0, 1.0) == doctest::Approx(std::exp(1.0)).epsilon(1e-13));
  CHECK(specfun::mittag_leffler(1.5, 0.8, 0.0) ==
        doctest::Approx(1.0 / std::tgamma(0.8)).epsilon(1e-13));
  CHECK(specfun::mittag_leffler(1.5, 1.5, 2.0) ==
        doctest::Approx(ml_oracle(1.5, 1.5, 2.0, 128)).epsilon(1e-13));
  // q = 1 collapses the weight to n!
  double direct = 0.0;
  for (int n = 0; n < 64; ++n)
    direct += std::exp(std::lgamma(n + 1.0) + n * std::log(0.7) - std::lgamma(1.2 * n + 0.9));
  CHECK(specfun::mittag_leffler_q(1.0, 1.2, 0.9, 0.7) == doctest::Approx(direct).epsilon(1e-12));
}

TEST_CASE("series evaluators agree with 128-term brute force on probe grids") {
  std::mt19937 gen(42);
  std::uniform_real_distribution<double> ux(0.1, 6.0), unu(0.2, 2.5);
  for (int trial = 0; trial < 50; ++trial) {
    double x = ux(gen), nu = unu(gen);
    CHECK(specfun::bessel_i(nu, x) ==
          doctest::Approx(bessel_i_oracle(nu, x, 128)).epsilon(1e-12));
    CHECK(specfun::mittag_leffler(1.0 + nu / 3.0, nu, x) ==
          doctest::Approx(ml_oracle(1.0 + nu / 3.0, nu, x, 128)).epsilon(1e-12));
  }
}
