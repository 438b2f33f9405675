#pragma once

namespace ostop::specfun {

// Special-function kernels used by the self-similar process machinery.
// Everything is a direct power series with compensated summation; arguments
// are desk-scale (|x| up to a few tens), where the series are well behaved.
// No asymptotic branches.

double log_gamma(double x);

// (q)_n = Gamma(q+n)/Gamma(q), q > 0, n >= 0.
double pochhammer(double q, int n);

// Real Pochhammer (z)_a = Gamma(z+a)/Gamma(z) for real z (handles z <= 0 via
// reflection; zero at nonpositive-integer z where 1/Gamma vanishes).
double pochhammer_real(double z, double a);

// Modified Bessel function of the first kind, series form; nu > -1.
double bessel_i(double nu, double x);

// Confluent hypergeometric Phi(q, nu, x) = sum (q)_n / ((nu)_n n!) x^n.
double confluent_phi(double q, double nu, double x);

// Mittag-Leffler M_{alpha,beta}(x) = sum x^n / Gamma(alpha n + beta).
double mittag_leffler(double alpha, double beta, double x);

// Generalized form with Pochhammer weights: sum (q)_n x^n / Gamma(alpha n + beta).
double mittag_leffler_q(double q, double alpha, double beta, double x);

}  // namespace ostop::specfun
