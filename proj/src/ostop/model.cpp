#include "ostop/model.hpp"

#include <sstream>

#include "ostop/errors.hpp"

namespace ostop {

namespace {

std::string at_point(const char* what, double x, double v) {
  std::ostringstream os;
  os << what << " at x=" << x << " (value " << v << ")";
  return os.str();
}

}  // namespace

ValidatedProblem validate(const ProblemSpec& p, const ValidationOptions& opts) {
  const auto& iv = p.diffusion.interval;
  if (!(iv.lower < iv.upper)) fail(errc::config_error, "state interval requires lower < upper");
  if (!iv.contains(p.x0)) fail(errc::config_error, "starting point outside the state interval");

  double lo = std::isfinite(iv.lower) ? iv.lower : p.x0 - opts.span;
  double hi = std::isfinite(iv.upper) ? iv.upper : p.x0 + opts.span;
  // Open interval: probe strictly inside finite endpoints.
  double inset = 1e-9 * (hi - lo);
  if (std::isfinite(iv.lower)) lo += inset;
  if (std::isfinite(iv.upper)) hi -= inset;

  if (const auto* cr = std::get_if<ConstantRate>(&p.discount)) {
    if (!(cr->q > 0.0))
      fail(errc::non_positive_discount, at_point("constant rate q", p.x0, cr->q));
  }

  int n = std::max(opts.grid_n, 3);
  for (int i = 0; i < n; ++i) {
    double x = lo + (hi - lo) * i / (n - 1);
    double s = p.diffusion.sigma(x);
    if (!(s > 0.0) || !std::isfinite(s))
      fail(errc::non_positive_volatility, at_point("sigma", x, s));
    double g = p.reward(x);
    if (g < 0.0 || !std::isfinite(g)) fail(errc::negative_reward, at_point("reward", x, g));
    double c = p.cost(x);
    if (c < 0.0 || !std::isfinite(c)) fail(errc::negative_cost, at_point("cost", x, c));
    if (const auto* rd = std::get_if<RandomDiscount>(&p.discount)) {
      double a = rd->a(x);
      if (!(a > 0.0) || !std::isfinite(a))
        fail(errc::non_positive_discount, at_point("discount rate a", x, a));
    }
    double b = p.diffusion.drift(x);
    if (!std::isfinite(b)) fail(errc::config_error, at_point("drift", x, b));
  }
  return ValidatedProblem{p, lo, hi, n};
}

ProblemSpec time_change_reduce(const ProblemSpec& p) {
  if (p.has_constant_rate()) {
    // Idempotent on constant-rate problems; rate-q problems stay at rate q.
    return p;
  }
  const Coef a = std::get<RandomDiscount>(p.discount).a;

  ProblemSpec out = p;
  out.discount = ConstantRate{1.0};

  const Coef b = p.diffusion.drift;
  const Coef s = p.diffusion.sigma;
  const Coef c = p.cost;

  if (a.kind() == Coef::Kind::constant) {
    double a0 = a.p0();
    double inv = 1.0 / a0, isq = 1.0 / std::sqrt(a0);
    auto scale = [&](const Coef& f, double k) -> Coef {
      switch (f.kind()) {
        case Coef::Kind::constant: return Coef::constant(f.p0() * k);
        case Coef::Kind::affine: return Coef::affine(f.p0() * k, f.p1() * k);
        case Coef::Kind::quadratic: return Coef::quadratic(f.p0() * k, f.p1() * k, f.p2() * k);
        case Coef::Kind::exponential: return Coef::exponential(f.p0() * k, f.p1());
        case Coef::Kind::custom:
          return Coef::custom([f, k](double x) { return k * f(x); });
      }
      return f;
    };
    out.diffusion.drift = scale(b, inv);
    out.diffusion.sigma = scale(s, isq);
    out.cost = scale(c, inv);
    return out;
  }

  out.diffusion.drift = Coef::custom([b, a](double x) { return b(x) / a(x); });
  out.diffusion.sigma = Coef::custom([s, a](double x) { return s(x) / std::sqrt(a(x)); });
  out.cost = Coef::custom([c, a](double x) { return c(x) / a(x); });
  return out;
}

}  // namespace ostop
