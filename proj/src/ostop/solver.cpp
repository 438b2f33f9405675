#include "ostop/solver.hpp"

#include <sstream>

#include "ostop/errors.hpp"

namespace ostop {

ExcessiveHandle hplus_handle(const FundamentalPair& pair) {
  return {[&pair](double u) { return pair.log_hplus(u); },
          [&pair](double u) { return pair.weight_plus(u); }};
}

ExcessiveHandle hminus_handle(const FundamentalPair& pair) {
  return {[&pair](double u) { return pair.log_hminus(u); },
          [&pair](double u) { return pair.weight_minus(u); }};
}

PayoffHandle payoff_handle(const Reward& g, const CostPotential* dl) {
  PayoffHandle n;
  bool with_delta = dl && !dl->is_zero();
  if (with_delta) {
    const CostPotential* d = dl;
    n.f = [g, d](double u) { return g(u) + d->value(u); };
    if (g.has_derivative())
      n.df = [g, d](double u) { return g.df(u) + d->derivative(u); };
  } else {
    n.f = [g](double u) { return g(u); };
    if (g.has_derivative()) n.df = [g](double u) { return g.df(u); };
  }
  n.smooth_at = [g](double u) { return g.smooth_at(u); };
  return n;
}

namespace {

double eval_ratio(const PayoffHandle& n, const ExcessiveHandle& h, double u) {
  double num = n.f(u);
  if (num <= 0.0) return 0.0;
  return std::exp(std::log(num) - h.log_h(u));
}

}  // namespace

RatioMaxResult maximize_ratio(const PayoffHandle& n, const ExcessiveHandle& h,
                              std::span<const double> scan, bool open_tail,
                              const SearchOptions& opts, RatioScan* keep) {
  if (scan.size() < 2) fail(errc::invalid_argument, "ratio scan needs at least 2 nodes");
  const std::size_t N = scan.size();
  std::vector<double> r(N);
  std::size_t best = 0;
  for (std::size_t i = 0; i < N; ++i) {
    r[i] = eval_ratio(n, h, scan[i]);
    if (r[i] > r[best] * (1.0 + 1e-15)) best = i;  // ties toward the anchor
  }
  if (keep) {
    keep->scan.assign(scan.begin(), scan.end());
    keep->rvals = r;
  }

  // Tail behavior at the open end: growth over the trailing nodes means the
  // sup lives at the boundary of the truncation.  Differences at roundoff
  // scale mean the tail has converged to its limit within precision.
  if (open_tail) {
    std::size_t m = std::max<std::size_t>(2, static_cast<std::size_t>(N * opts.tail_fraction));
    if (N > 3 * m) {
      bool nondecreasing = true;
      for (std::size_t i = N - m; i < N; ++i)
        if (r[i] < r[i - 1] * (1.0 - 1e-13) - 1e-300) {
          nondecreasing = false;
          break;
        }
      if (nondecreasing && r[N - 1] > 0.0) {
        double a = r[N - 1 - 2 * m], b = r[N - 1 - m], c = r[N - 1];
        double d1 = b - a, d2 = c - b;
        double eps_flat = 1e-12 * std::max(std::abs(c), 1e-300);
        double limit;
        if (d2 <= eps_flat || d1 <= eps_flat) {
          limit = c;  // converged plateau
        } else {
          double rho = d2 / d1;
          if (rho >= 1.0 - 1e-9)
            fail(errc::unbounded_value, "ratio diverges along the truncated tail");
          limit = c + d2 * rho / (1.0 - rho);
        }
        double interior = r[best];
        if (best >= N - m || limit > interior * (1.0 + 1e-12)) {
          return RatioMaxResult{kNaN, limit, false};
        }
      }
    }
    if (best == N - 1 && r[best] > 0.0)
      fail(errc::unbounded_value, "ratio maximal at the truncation boundary");
  }

  if (r[best] <= 0.0) {
    // Payoff vanishes on the whole scan: sup is 0, attained at the anchor.
    return RatioMaxResult{scan[0], 0.0, true};
  }
  if (best == 0) {
    // Boundary maximum at the anchor (stop immediately); no interior polish.
    return RatioMaxResult{scan[0], r[0], true};
  }
  if (best == N - 1) {
    return RatioMaxResult{scan[N - 1], r[N - 1], true};
  }

  // Golden-section refinement on the bracketing panel pair.
  double a = scan[best - 1], b = scan[best + 1];
  if (a > b) std::swap(a, b);
  auto f = [&](double u) { return eval_ratio(n, h, u); };
  double tol = opts.golden_rel_tol * (1.0 + std::abs(scan[best]));
  double u = golden_max(f, a, b, tol);
  double ru = f(u);
  if (ru < r[best]) {
    u = scan[best];
    ru = r[best];
  }

  // Derivative polish: solve n'(u) = n(u) w(u) when the payoff is smooth in
  // a bracket around the golden result.
  if (n.df && n.smooth_at && n.smooth_at(u)) {
    double step = std::max(1e-7, 1e-7 * std::abs(u));
    double ua = u - step, ub = u + step;
    if (ua > a && ub < b && n.smooth_at(ua) && n.smooth_at(ub)) {
      auto foc = [&](double v) { return n.df(v) - n.f(v) * h.weight(v); };
      double fa = foc(ua), fb = foc(ub);
      // widen geometrically until the root is bracketed (stay inside [a,b])
      for (int k = 0; k < 40 && fa * fb > 0.0; ++k) {
        step *= 2.0;
        ua = std::max(u - step, a);
        ub = std::min(u + step, b);
        if (!n.smooth_at(ua) || !n.smooth_at(ub)) break;
        fa = foc(ua);
        fb = foc(ub);
        if (ua == a && ub == b) break;
      }
      if (fa * fb <= 0.0) {
        double u2 = brent_root(foc, ua, ub, 1e-15 * (1.0 + std::abs(u)));
        double r2 = f(u2);
        if (r2 >= ru) {
          u = u2;
          ru = r2;
        }
      }
    }
  }
  return RatioMaxResult{u, ru, true};
}

double ratio(const FundamentalPair& pair, const CostPotential& dl, const Reward& g, double u) {
  pair.require_in_grid(u, "ratio");
  auto n = payoff_handle(g, &dl);
  auto h = hplus_handle(pair);
  return eval_ratio(n, h, u);
}

namespace {

std::vector<double> upward_scan(const FundamentalPair& pair, double x) {
  pair.require_in_grid(x, "solve_one_sided");
  const auto& g = pair.grid();
  std::vector<double> scan;
  scan.reserve(g.size() + 1);
  scan.push_back(x);
  for (double v : g)
    if (v > x) scan.push_back(v);
  return scan;
}

std::vector<double> downward_scan(const FundamentalPair& pair, double x) {
  pair.require_in_grid(x, "solve_one_sided_down");
  const auto& g = pair.grid();
  std::vector<double> scan;
  scan.reserve(g.size() + 1);
  scan.push_back(x);
  for (auto it = g.rbegin(); it != g.rend(); ++it)
    if (*it < x) scan.push_back(*it);
  return scan;
}

}  // namespace

namespace {

// Scan envelope retained by solutions: sup of n/h over the nodes at or
// beyond y in the scan's outward direction, refined around an interior
// suffix maximum when one exists.
struct RatioEnvelope {
  RatioScan data;
  std::vector<double> sufmax;
  PayoffHandle n;
  ExcessiveHandle h;
  bool outward_increasing = true;  // scan coordinates increase outward

  static std::shared_ptr<RatioEnvelope> make(RatioScan&& rs, const PayoffHandle& n,
                                             const ExcessiveHandle& h) {
    auto env = std::make_shared<RatioEnvelope>();
    env->data = std::move(rs);
    env->n = n;
    env->h = h;
    const auto& sc = env->data.scan;
    env->outward_increasing = sc.size() < 2 || sc.back() > sc.front();
    env->sufmax.assign(env->data.rvals.size(), 0.0);
    double m = 0.0;
    for (std::size_t i = env->data.rvals.size(); i-- > 0;) {
      m = std::max(m, env->data.rvals[i]);
      env->sufmax[i] = m;
    }
    return env;
  }

  double ratio_at(double u) const { return eval_ratio(n, h, u); }

  // sup over {u' in scan direction beyond y} including y itself
  double sup_from(double y) const {
    const auto& sc = data.scan;
    double ry = ratio_at(y);
    std::size_t idx = 0;
    while (idx < sc.size() &&
           (outward_increasing ? sc[idx] <= y : sc[idx] >= y))
      ++idx;
    if (idx >= sc.size()) return ry;
    double s = sufmax[idx];
    if (s <= ry * (1.0 + 1e-13)) return ry;
    // interior suffix maximum: refine around the best node
    std::size_t jb = idx;
    for (std::size_t j = idx; j < sc.size(); ++j)
      if (data.rvals[j] > data.rvals[jb]) jb = j;
    double a = (jb > idx) ? sc[jb - 1] : y;
    double b = (jb + 1 < sc.size()) ? sc[jb + 1] : sc[jb];
    if (a > b) std::swap(a, b);
    auto f = [&](double u) { return eval_ratio(n, h, u); };
    double u = golden_max(f, a, b, 1e-11 * (1.0 + std::abs(sc[jb])));
    return std::max({ry, data.rvals[jb], f(u)});
  }
};

}  // namespace

OneSidedSolution solve_one_sided(const ExcessiveHandle& h, const PayoffHandle& n,
                                 std::span<const double> scan, double x,
                                 const std::function<double(double)>& delta_fn,
                                 const SearchOptions& opts) {
  RatioScan rs;
  auto res = maximize_ratio(n, h, scan, /*open_tail=*/true, opts, &rs);
  OneSidedSolution sol;
  sol.attained = res.attained;
  sol.u_star = res.attained ? res.u : kInf;
  // D* under h's own normalization; value(y) = D* h(y) - delta(y) on the
  // continuation side and the restarted supremum beyond the threshold
  // (which collapses to g(y) wherever the ratio is falling).
  (void)x;
  sol.D_star = res.ratio;
  auto env = RatioEnvelope::make(std::move(rs), n, h);
  const bool upward = scan.size() < 2 || scan[scan.size() - 1] > scan[0];
  double D = sol.D_star;
  double ustar = sol.u_star;
  bool attained = sol.attained;
  auto dfn = delta_fn;
  auto logh = h.log_h;
  sol.value = [env, logh, D, dfn, ustar, attained, upward](double y) {
    double del = dfn ? dfn(y) : 0.0;
    bool continuation = !attained || (upward ? y <= ustar : y >= ustar);
    if (continuation)
      return (D > 0.0 ? std::exp(std::log(D) + logh(y)) : 0.0) - del;
    double s = env->sup_from(y);
    if (s <= 0.0) return -del;
    return std::exp(std::log(s) + logh(y)) - del;
  };
  return sol;
}

OneSidedSolution solve_one_sided(const FundamentalPair& pair, const CostPotential& dl,
                                 const Reward& g, double x, const SearchOptions& opts) {
  auto scan = upward_scan(pair, x);
  auto n = payoff_handle(g, &dl);
  auto h = hplus_handle(pair);
  std::function<double(double)> dfn = [&dl](double y) { return dl.value(y); };
  if (dl.is_zero()) dfn = [](double) { return 0.0; };
  return solve_one_sided(h, n, scan, x, dfn, opts);
}

OneSidedSolution solve_one_sided_down(const FundamentalPair& pair, const CostPotential& dl,
                                      const Reward& g, double x, const SearchOptions& opts) {
  auto scan = downward_scan(pair, x);
  auto n = payoff_handle(g, &dl);
  auto h = hminus_handle(pair);
  std::function<double(double)> dfn = [&dl](double y) { return dl.value(y); };
  if (dl.is_zero()) dfn = [](double) { return 0.0; };
  auto sol = solve_one_sided(h, n, scan, x, dfn, opts);
  if (!sol.attained) sol.u_star = kNegInf;
  return sol;
}

TwoSidedSolution solve_two_sided(const FundamentalPair& pair, const CostPotential& dl,
                                 const Reward& g, double x, const SearchOptions& opts) {
  pair.require_in_grid(x, "solve_two_sided");
  auto n = payoff_handle(g, &dl);

  const double lpx = pair.log_hplus(x), lmx = pair.log_hminus(x);
  auto mixture = [&](double p) -> ExcessiveHandle {
    double lp_ = std::log(p), lq_ = std::log1p(-p);
    ExcessiveHandle h;
    h.log_h = [&pair, lpx, lmx, lp_, lq_](double u) {
      return log_add_exp(lp_ + pair.log_hplus(u) - lpx, lq_ + pair.log_hminus(u) - lmx);
    };
    h.weight = [&pair, lpx, lmx, lp_, lq_](double u) {
      double t1 = lp_ + pair.log_hplus(u) - lpx;
      double t2 = lq_ + pair.log_hminus(u) - lmx;
      double m = std::max(t1, t2);
      double e1 = std::exp(t1 - m), e2 = std::exp(t2 - m);
      return (pair.weight_plus(u) * e1 + pair.weight_minus(u) * e2) / (e1 + e2);
    };
    return h;
  };

  auto up = upward_scan(pair, x);
  auto down = downward_scan(pair, x);

  struct Side {
    RatioMaxResult res;
    bool ok;
    RatioScan scan;
  };
  auto side_sup = [&](double p, bool right, bool keep_scan = false) -> Side {
    auto h = mixture(p);
    try {
      Side out;
      out.res = maximize_ratio(n, h, right ? std::span<const double>(up)
                                           : std::span<const double>(down),
                               /*open_tail=*/true, opts, keep_scan ? &out.scan : nullptr);
      out.ok = out.res.attained;
      return out;
    } catch (const Error& e) {
      if (e.code() == errc::unbounded_value) return {{}, false, {}};
      throw;
    }
  };

  auto F = [&](double p, Side* r_out = nullptr, Side* l_out = nullptr) -> double {
    bool keep = r_out != nullptr;
    Side r = side_sup(p, true, keep), l = side_sup(p, false, keep);
    double rv = r.ok ? r.res.ratio : kInf;
    double lv = l.ok ? l.res.ratio : kNegInf;
    if (!r.ok && !l.ok) fail(errc::no_interior_solution, "both one-sided suprema unattained");
    if (r_out) *r_out = std::move(r);
    if (l_out) *l_out = std::move(l);
    return rv - lv;
  };

  double plo = opts.p_clip, phi = 1.0 - opts.p_clip;
  double Flo = F(plo), Fhi = F(phi);
  if (!(Flo > 0.0) || !(Fhi < 0.0)) {
    std::ostringstream os;
    os << "balance function has no sign change on [" << plo << ", " << phi
       << "] (F(lo)=" << Flo << ", F(hi)=" << Fhi << "); problem is effectively one-sided";
    fail(errc::no_interior_solution, os.str());
  }
  for (int it = 0; it < opts.bisect_max_iter && phi - plo > 1e-14; ++it) {
    double pm = 0.5 * (plo + phi);
    double Fm = F(pm);
    if (Fm > 0.0)
      plo = pm;
    else
      phi = pm;
  }
  double p = 0.5 * (plo + phi);
  Side right, left;
  F(p, &right, &left);
  if (!right.ok || !left.ok)
    fail(errc::no_interior_solution, "one-sided supremum unattained at balanced mixture");

  TwoSidedSolution sol;
  sol.p_star = p;
  sol.u1_star = left.res.u;
  sol.u2_star = right.res.u;
  sol.M_star = 0.5 * (right.res.ratio + left.res.ratio);
  if (!(sol.M_star > 0.0))
    fail(errc::no_interior_solution, "degenerate problem: zero payoff everywhere");

  auto h = mixture(p);
  double M = sol.M_star;
  auto logh = h.log_h;
  bool zero_delta = dl.is_zero();
  const CostPotential* dp = &dl;
  auto envR = RatioEnvelope::make(std::move(right.scan), n, h);
  auto envL = RatioEnvelope::make(std::move(left.scan), n, h);
  double u1 = sol.u1_star, u2 = sol.u2_star;
  sol.value = [logh, M, zero_delta, dp, envR, envL, u1, u2](double y) {
    double del = zero_delta ? 0.0 : dp->value(y);
    if (y > u1 && y < u2) return M * std::exp(logh(y)) - del;
    const auto& env = (y >= u2) ? envR : envL;
    double s = env->sup_from(y);
    if (s <= 0.0) return -del;
    return std::exp(std::log(s) + logh(y)) - del;
  };

  // 3-equation system residuals: ratio equality across the two thresholds
  // plus the smooth-fit (log-derivative) match at each, when g is smooth
  // there.
  sol.residual_ratio = (right.res.ratio - left.res.ratio) / sol.M_star;
  bool s1 = n.smooth_at && n.smooth_at(sol.u1_star);
  bool s2 = n.smooth_at && n.smooth_at(sol.u2_star);
  if (n.df && s1) {
    double nv = n.f(sol.u1_star);
    sol.residual_fit_lower = n.df(sol.u1_star) / nv - h.weight(sol.u1_star);
  }
  if (n.df && s2) {
    double nv = n.f(sol.u2_star);
    sol.residual_fit_upper = n.df(sol.u2_star) / nv - h.weight(sol.u2_star);
  }
  sol.smooth_fit_checked = n.df && s1 && s2;
  return sol;
}

std::vector<ValueRow> value_table(const std::function<double(double)>& value, const Reward& g,
                                  const std::function<double(double)>& delta_fn,
                                  std::span<const double> grid) {
  std::vector<ValueRow> rows;
  rows.reserve(grid.size());
  for (double x : grid) {
    ValueRow r;
    r.x = x;
    r.value = value(x);
    r.reward = g(x);
    r.delta = delta_fn ? delta_fn(x) : 0.0;
    r.stop = r.value <= r.reward + 1e-10 * (1.0 + std::abs(r.reward));
    rows.push_back(r);
  }
  return rows;
}

std::string value_table_csv(const std::vector<ValueRow>& rows) {
  std::ostringstream os;
  os.precision(17);
  os << "x,value,reward,delta,stop\n";
  for (const auto& r : rows)
    os << r.x << ',' << r.value << ',' << r.reward << ',' << r.delta << ',' << (r.stop ? 1 : 0)
       << "\n";
  return os.str();
}

}  // namespace ostop
