#pragma once

#include <memory>
#include <vector>

#include "ostop/levy.hpp"
#include "ostop/solver.hpp"

namespace ostop {

// Self-similar positive Markov process of the spectrally negative type,
// described through the underlying Levy process and the similarity index.
struct SsmpSpec {
  LevySpec levy;
  double alpha = 2.0;   // self-similarity index
  double lambda = 1.0;  // Ornstein-Uhlenbeck speed (for the U transform)
  double chi() const { return alpha * lambda; }
};

// Entire eigenfunction with coefficients a_n^{-1} = prod_{k<=n} psi(alpha k),
// plus the Pochhammer-weighted variant used for the OU-type transforms.
class PowerSeriesEigenfunction {
 public:
  explicit PowerSeriesEigenfunction(const SsmpSpec& spec);

  double log_coeff(int n) const;    // log a_n
  double eval_I(double z) const;    // sum a_n z^n, z >= 0
  double log_I(double z) const;
  double dlog_I(double z) const;    // I'(z)/I(z)

  double eval_Iq(double q, double x) const;  // sum (q)_n a_n x^n
  double log_Iq(double q, double x) const;
  double dlog_Iq(double q, double x) const;  // d/dx log

  const SsmpSpec& spec() const { return spec_; }
  const LaplaceExponent& exponent() const { return psi_; }

 private:
  void extend(int n) const;
  SsmpSpec spec_;
  LaplaceExponent psi_;
  mutable std::vector<double> log_a_;
};

// E_x[e^{-q T_a}] for the self-similar process, 0 <= x <= a.
double hitting_laplace_X(const PowerSeriesEigenfunction& pse, double x, double a, double q);

// E_x[e^{-r T^U_a}] for the associated OU-type process, 0 <= x <= a.
double hitting_laplace_U(const PowerSeriesEigenfunction& pse, double x, double a, double r);

struct SsmpProblemSolution {
  double a_star = kNaN;
  double value = kNaN;
  bool attained = false;
};

struct SsmpSolutions {
  SsmpProblemSolution v_x;        // e^{-qT} g(X_T)
  SsmpProblemSolution v_u;        // e^{-qT} g(U_T)
  SsmpProblemSolution v_ud;       // e^{-q Delta_T} g(U_T), explicit exponent gamma
  SsmpProblemSolution v_sq;       // integral-clock payoff, chi = beta
  SsmpProblemSolution v_x_nonhom; // (1 + chi T)^{-q} scaled-argument payoff
};

// The family of one-sided problems solved by maximizing g over the matching
// eigenfunction denominator; gamma_ud parameterizes the Delta-clock problem.
SsmpSolutions solve_ssmp_problems(const PowerSeriesEigenfunction& pse, const Reward& g, double q,
                                  double beta, double gamma_ud, double x);

}  // namespace ostop
