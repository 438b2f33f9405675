#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "ostop/numeric.hpp"

namespace ostop {

// ---------------------------------------------------------------------------
// Coefficient functions.  A small closed catalog keeps the Monte Carlo inner
// loops branch-cheap; `custom` falls back to std::function for anything else
// (e.g. compositions produced by the time change).
// ---------------------------------------------------------------------------
class Coef {
 public:
  enum class Kind { constant, affine, quadratic, exponential, custom };

  Coef() : kind_(Kind::constant), c0_(0) {}

  static Coef constant(double v) { return Coef(Kind::constant, v, 0, 0); }
  static Coef affine(double c0, double c1) { return Coef(Kind::affine, c0, c1, 0); }
  static Coef quadratic(double c0, double c1, double c2) {
    return Coef(Kind::quadratic, c0, c1, c2);
  }
  // a * exp(k x)
  static Coef exponential(double a, double k) { return Coef(Kind::exponential, a, k, 0); }
  static Coef custom(std::function<double(double)> f) {
    Coef c(Kind::custom, 0, 0, 0);
    c.fn_ = std::move(f);
    return c;
  }

  double operator()(double x) const {
    switch (kind_) {
      case Kind::constant: return c0_;
      case Kind::affine: return c0_ + c1_ * x;
      case Kind::quadratic: return c0_ + x * (c1_ + x * c2_);
      case Kind::exponential: return c0_ * std::exp(c1_ * x);
      case Kind::custom: return fn_(x);
    }
    return 0.0;
  }

  Kind kind() const { return kind_; }
  double p0() const { return c0_; }
  double p1() const { return c1_; }
  double p2() const { return c2_; }
  bool is_constant(double v) const { return kind_ == Kind::constant && c0_ == v; }
  bool is_zero() const { return is_constant(0.0); }

 private:
  Coef(Kind k, double c0, double c1, double c2) : kind_(k), c0_(c0), c1_(c1), c2_(c2) {}
  Kind kind_;
  double c0_, c1_, c2_;
  std::function<double(double)> fn_;
};

// Open interval state space; infinite endpoints permitted.
struct StateInterval {
  double lower = kNegInf;
  double upper = kInf;
  bool contains(double x) const { return x > lower && x < upper; }
};

struct DiffusionSpec {
  Coef drift;                      // b
  Coef sigma;                      // volatility, > 0 on E
  StateInterval interval;
};

// Piecewise-smooth payoff with an optional derivative and the list of kink
// abscissae where the derivative is invalid.
struct Reward {
  std::function<double(double)> f;
  std::function<double(double)> df;   // may be empty
  std::vector<double> kinks;

  double operator()(double x) const { return f(x); }
  bool has_derivative() const { return static_cast<bool>(df); }
  bool smooth_at(double x, double tol = 1e-9) const {
    if (!df) return false;
    for (double k : kinks)
      if (std::abs(x - k) <= tol * (1.0 + std::abs(k))) return false;
    return true;
  }
  static Reward zero() {
    return Reward{[](double) { return 0.0; }, [](double) { return 0.0; }, {}};
  }
};

struct ConstantRate {
  double q;
};
struct RandomDiscount {
  Coef a;  // state-dependent discount rate, > 0 on E
};
using Discount = std::variant<ConstantRate, RandomDiscount>;

struct ProblemSpec {
  DiffusionSpec diffusion;
  Reward reward;                   // g >= 0
  Coef cost;                       // c >= 0
  Discount discount;
  double x0 = 0.0;                 // starting/evaluation point

  bool has_constant_rate() const { return std::holds_alternative<ConstantRate>(discount); }
  double rate() const { return std::get<ConstantRate>(discount).q; }
};

struct ValidationOptions {
  int grid_n = 1001;
  // Infinite endpoints are probed on [x0 - span, x0 + span].
  double span = 40.0;
};

struct ValidatedProblem {
  ProblemSpec problem;
  double checked_lo, checked_hi;
  int checked_points;
};

// Sample-grid checks of the standing positivity assumptions.  Throws the
// typed error naming the first offending grid point.
ValidatedProblem validate(const ProblemSpec& p, const ValidationOptions& opts = {});

// Random discounting -> unit-rate problem on the time-changed diffusion:
// drift b/a, volatility sigma/sqrt(a), cost c/a, reward unchanged, q = 1.
// No-op on problems that already carry a constant rate.
ProblemSpec time_change_reduce(const ProblemSpec& p);

}  // namespace ostop
