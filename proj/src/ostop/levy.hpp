#pragma once

#include <variant>

#include "ostop/model.hpp"

namespace ostop {

// Spectrally negative Levy process, parametric families with an analytic
// Laplace exponent.
struct NoJumps {};
struct CompoundPoissonExp {
  double rate;       // jump intensity
  double mean_size;  // mean magnitude of the (negative) exponential jumps
};
struct PochhammerFamily {
  double alpha;  // in (1,2)
  double gamma;  // > 1 - alpha
};
using JumpFamily = std::variant<NoJumps, CompoundPoissonExp, PochhammerFamily>;

struct LevySpec {
  double sigma2 = 1.0;  // Gaussian coefficient
  double b = 0.0;       // drift
  JumpFamily jumps = NoJumps{};
};

class LaplaceExponent {
 public:
  explicit LaplaceExponent(const LevySpec& spec);

  double psi(double u) const;
  double psi_prime(double u) const;
  double theta() const { return theta_; }    // largest root of psi = 0
  double phi(double r) const;                // inverse of psi on [theta, inf)
  const LevySpec& spec() const { return spec_; }

 private:
  LevySpec spec_;
  double theta_ = 0.0;
};

// Risk-neutral rate convention q = psi(1); throws NonPositiveRate otherwise.
double martingale_rate(const LaplaceExponent& le);

// E_x[e^{-r T_y}] = exp(-phi(r)(y-x)) for the upward hitting time, y >= x.
double hitting_laplace_up(const LaplaceExponent& le, double x, double y, double r);

struct CallWithCost {
  double x_star;      // optimal threshold
  double value;       // value at the starting point (valid when start_below)
  double q;           // psi(1)
  double p_gamma;     // psi(1) - psi(gamma)
  bool start_below;   // x < x_star; when false no value is claimed
};

// Perpetual call (e^Z - K)^+ with running cost alpha_cost * e^{gamma Z} under
// the q = psi(1) convention: threshold and closed-form value.
CallWithCost call_with_cost(const LaplaceExponent& le, double strike, double alpha_cost,
                            double gamma, double x);

}  // namespace ostop
