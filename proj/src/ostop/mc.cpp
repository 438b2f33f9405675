#include "ostop/mc.hpp"

#include <atomic>
#include <cmath>
#include <thread>

#include "ostop/errors.hpp"
#include "ostop/rng.hpp"

namespace ostop {

namespace {

struct PathOut {
  double payoff = 0.0;
  bool censored = false;
  double weight = 0.0;  // residual discount (or bound) carried by a censored path
};

// Deterministic chunked driver: per-sample Philox streams keyed by
// (seed, sample index), fixed chunk boundaries, ordered reduction.  Results
// are bit-identical for a given (seed, config) regardless of thread count.
template <typename Kernel>
Estimate run_paths(const SimConfig& cfg, Kernel&& kernel) {
  if (cfg.n_paths < 100) fail(errc::invalid_argument, "n_paths must be at least 100");
  if (!(cfg.dt > 0.0) || !(cfg.dt <= cfg.horizon))
    fail(errc::invalid_argument, "need 0 < dt <= horizon");
  if (cfg.antithetic && (cfg.n_paths % 2) != 0)
    fail(errc::invalid_argument, "antithetic sampling needs an even path count");

  const std::int64_t unit = cfg.antithetic ? 2 : 1;
  const std::int64_t n = cfg.n_paths / unit;
  const std::int64_t chunk = 4096;
  const std::int64_t n_chunks = (n + chunk - 1) / chunk;

  struct ChunkStats {
    double s = 0.0, s2 = 0.0, w = 0.0;
    std::int64_t trunc = 0;
  };
  std::vector<ChunkStats> stats(static_cast<std::size_t>(n_chunks));
  std::atomic<std::int64_t> next{0};

  auto worker = [&]() {
    std::int64_t ci;
    while ((ci = next.fetch_add(1)) < n_chunks) {
      ChunkStats acc;
      std::int64_t lo = ci * chunk, hi = std::min(n, lo + chunk);
      for (std::int64_t s = lo; s < hi; ++s) {
        PathOut a = kernel(static_cast<std::uint64_t>(s), 1.0);
        double v = a.payoff;
        bool cen = a.censored;
        double w = a.weight;
        if (cfg.antithetic) {
          PathOut b = kernel(static_cast<std::uint64_t>(s), -1.0);
          v = 0.5 * (v + b.payoff);
          cen = cen || b.censored;
          w = 0.5 * (w + b.weight);
        }
        acc.s += v;
        acc.s2 += v * v;
        acc.trunc += cen ? 1 : 0;
        acc.w += cen ? w : 0.0;
      }
      stats[static_cast<std::size_t>(ci)] = acc;
    }
  };

  int hw = static_cast<int>(std::thread::hardware_concurrency());
  int nthreads = cfg.threads > 0 ? cfg.threads : std::max(1, hw);
  nthreads = static_cast<int>(std::min<std::int64_t>(nthreads, n_chunks));
  if (nthreads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(nthreads));
    for (int i = 0; i < nthreads; ++i) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  KahanSum S, S2, W;
  std::int64_t trunc = 0;
  for (const auto& c : stats) {
    S.add(c.s);
    S2.add(c.s2);
    W.add(c.w);
    trunc += c.trunc;
  }
  Estimate est;
  est.n_effective = n;
  est.mean = S.value() / static_cast<double>(n);
  double var = (S2.value() - static_cast<double>(n) * est.mean * est.mean) /
               std::max<double>(1.0, static_cast<double>(n - 1));
  est.std_error = std::sqrt(std::max(0.0, var) / static_cast<double>(n));
  est.truncated_fraction = static_cast<double>(trunc) / static_cast<double>(n);
  est.seed = cfg.seed;

  double mean_censor_weight = W.value() / static_cast<double>(n);
  if (est.truncated_fraction > 0.05 &&
      mean_censor_weight > 1e-8 * (1.0 + std::abs(est.mean))) {
    fail(errc::horizon_too_short,
         "truncated fraction " + std::to_string(est.truncated_fraction) +
             " with non-negligible residual discount " + std::to_string(mean_censor_weight));
  }
  return est;
}

struct JumpDraw {
  bool active = false;
  double p_per_step = 0.0;
  double mean_size = 0.0;
};

JumpDraw make_jumps(const LevySpec& spec, double dt) {
  JumpDraw j;
  if (const auto* cp = std::get_if<CompoundPoissonExp>(&spec.jumps)) {
    j.active = true;
    j.p_per_step = cp->rate * dt;
    j.mean_size = cp->mean_size;
    if (j.p_per_step > 0.2)
      fail(errc::invalid_argument, "dt too coarse for the jump intensity");
  } else if (std::holds_alternative<PochhammerFamily>(spec.jumps)) {
    fail(errc::unsupported_family, "Pochhammer family paths cannot be simulated");
  }
  return j;
}

}  // namespace

// ---------------------------------------------------------------------------
// Generic diffusion kernel
// ---------------------------------------------------------------------------

Estimate simulate_payoff(const ProblemSpec& problem, const StoppingRule& rule,
                         const SimConfig& cfg) {
  const Coef drift = problem.diffusion.drift;
  const Coef sigma = problem.diffusion.sigma;
  const Coef cost = problem.cost;
  const Reward g = problem.reward;
  const bool random_rate = !problem.has_constant_rate();
  const Coef rate = random_rate ? std::get<RandomDiscount>(problem.discount).a
                                : Coef::constant(problem.rate());
  const double x0 = problem.x0;
  const double dt = cfg.dt, sqdt = std::sqrt(dt), half_dt = 0.5 * dt;
  const double up = rule.upper, lo = rule.lower;
  const bool has_up = std::isfinite(up), has_lo = std::isfinite(lo);
  const std::int64_t nsteps = static_cast<std::int64_t>(std::ceil(cfg.horizon / dt - 1e-12));
  const double floor_ = cfg.discount_floor;

  if (rule.kind == StoppingRule::Kind::fixed_time && rule.time > cfg.horizon)
    fail(errc::invalid_argument, "fixed stopping time beyond the horizon");

  auto kernel = [&, drift, sigma, cost, g, rate](std::uint64_t idx, double sign) -> PathOut {
    PhiloxStream stream(cfg.seed, idx);
    NormalSampler norm(stream);
    double Z = x0, D = 1.0, C = 0.0;
    double av = rate(Z), cv = cost(Z);

    if (rule.kind == StoppingRule::Kind::fixed_time) {
      double t_left = rule.time;
      while (t_left > 1e-15) {
        double h = std::min(dt, t_left);
        double sq = (h == dt) ? sqdt : std::sqrt(h);
        double bv = drift(Z), sv = sigma(Z);
        double Zn = Z + bv * h + sv * sq * sign * norm();
        double an = rate(Zn);
        double Dn = D * exp_small(-0.5 * h * (av + an));
        double cn = cost(Zn);
        C += 0.5 * h * (D * cv + Dn * cn);
        Z = Zn;
        D = Dn;
        av = an;
        cv = cn;
        t_left -= h;
      }
      return {D * g(Z) - C, false, 0.0};
    }

    for (std::int64_t k = 0; k < nsteps; ++k) {
      double bv = drift(Z), sv = sigma(Z);
      double Zn = Z + bv * dt + sv * sqdt * sign * norm();
      // threshold crossings: skeleton first, then the in-step bridge
      double hit_level = kNaN, lam = 0.0;
      if (has_up && Zn >= up) {
        hit_level = up;
        lam = (up - Z) / (Zn - Z);
      } else if (has_lo && Zn <= lo) {
        hit_level = lo;
        lam = (lo - Z) / (Zn - Z);
      } else if (cfg.bridge) {
        double s2dt = sv * sv * dt;
        if (has_up) {
          double d0 = up - Z, d1 = up - Zn;
          if (2.0 * d0 * d1 < 40.0 * s2dt &&
              stream.next_uniform() < std::exp(-2.0 * d0 * d1 / s2dt)) {
            hit_level = up;
            lam = d0 / (d0 + d1);
          }
        }
        if (std::isnan(hit_level) && has_lo) {
          double d0 = Z - lo, d1 = Zn - lo;
          if (2.0 * d0 * d1 < 40.0 * s2dt &&
              stream.next_uniform() < std::exp(-2.0 * d0 * d1 / s2dt)) {
            hit_level = lo;
            lam = d0 / (d0 + d1);
          }
        }
      }
      if (!std::isnan(hit_level)) {
        double ah = rate(hit_level), ch = cost(hit_level);
        double Dh = D * exp_small(-0.5 * lam * dt * (av + ah));
        C += 0.5 * lam * dt * (D * cv + Dh * ch);
        return {Dh * g(hit_level) - C, false, 0.0};
      }
      double an = rate(Zn);
      double Dn = D * exp_small(-0.5 * dt * (av + an));
      double cn = cost(Zn);
      C += half_dt * (D * cv + Dn * cn);
      Z = Zn;
      D = Dn;
      av = an;
      cv = cn;
      if (D < floor_) return {-C, true, D};
    }
    return {-C, true, D};
  };
  return run_paths(cfg, kernel);
}

std::vector<Estimate> simulate_threshold_family(const ProblemSpec& problem,
                                                const std::vector<double>& levels,
                                                const SimConfig& cfg) {
  for (std::size_t i = 1; i < levels.size(); ++i)
    if (!(levels[i] > levels[i - 1]))
      fail(errc::invalid_argument, "threshold family must be strictly increasing");
  if (levels.empty()) return {};
  const std::size_t K = levels.size();

  const Coef drift = problem.diffusion.drift;
  const Coef sigma = problem.diffusion.sigma;
  const Coef cost = problem.cost;
  const Reward g = problem.reward;
  const bool random_rate = !problem.has_constant_rate();
  const Coef rate = random_rate ? std::get<RandomDiscount>(problem.discount).a
                                : Coef::constant(problem.rate());
  const double dt = cfg.dt, sqdt = std::sqrt(dt), half_dt = 0.5 * dt;
  const std::int64_t nsteps = static_cast<std::int64_t>(std::ceil(cfg.horizon / dt - 1e-12));

  if (cfg.n_paths < 100) fail(errc::invalid_argument, "n_paths must be at least 100");

  struct ChunkStats {
    std::vector<double> s, s2;
    std::int64_t trunc = 0;
  };
  const std::int64_t chunk = 2048;
  const std::int64_t n = cfg.n_paths;
  const std::int64_t n_chunks = (n + chunk - 1) / chunk;
  std::vector<ChunkStats> stats(static_cast<std::size_t>(n_chunks));
  std::atomic<std::int64_t> next{0};

  auto worker = [&]() {
    std::vector<double> payoff(K);
    std::int64_t ci;
    while ((ci = next.fetch_add(1)) < n_chunks) {
      ChunkStats acc;
      acc.s.assign(K, 0.0);
      acc.s2.assign(K, 0.0);
      std::int64_t lo = ci * chunk, hi = std::min(n, lo + chunk);
      for (std::int64_t sidx = lo; sidx < hi; ++sidx) {
        PhiloxStream stream(cfg.seed, static_cast<std::uint64_t>(sidx));
        NormalSampler norm(stream);
        double Z = problem.x0, D = 1.0, C = 0.0;
        double av = rate(Z), cv = cost(Z);
        std::size_t idx = 0;
        while (idx < K && Z >= levels[idx]) {
          payoff[idx] = g(levels[idx]);  // already at/above: immediate stop
          ++idx;
        }
        bool done = idx >= K;
        std::int64_t k = 0;
        for (; k < nsteps && !done; ++k) {
          double bv = drift(Z), sv = sigma(Z);
          double Zn = Z + bv * dt + sv * sqdt * norm();
          double an = rate(Zn);
          double Dn = D * exp_small(-0.5 * dt * (av + an));
          while (idx < K && Zn >= levels[idx]) {
            double lam = (levels[idx] - Z) / (Zn - Z);
            double ah = rate(levels[idx]);
            double Dh = D * exp_small(-0.5 * lam * dt * (av + ah));
            double Ch = C + 0.5 * lam * dt * (D * cv + Dh * cost(levels[idx]));
            payoff[idx] = Dh * g(levels[idx]) - Ch;
            ++idx;
          }
          done = idx >= K;
          double cn = cost(Zn);
          C += half_dt * (D * cv + Dn * cn);
          Z = Zn;
          D = Dn;
          av = an;
          cv = cn;
          if (D < cfg.discount_floor) break;
        }
        if (idx < K) {
          acc.trunc += 1;
          for (std::size_t j = idx; j < K; ++j) payoff[j] = -C;
        }
        for (std::size_t j = 0; j < K; ++j) {
          acc.s[j] += payoff[j];
          acc.s2[j] += payoff[j] * payoff[j];
        }
      }
      stats[static_cast<std::size_t>(ci)] = std::move(acc);
    }
  };

  int hw = static_cast<int>(std::thread::hardware_concurrency());
  int nthreads = cfg.threads > 0 ? cfg.threads : std::max(1, hw);
  nthreads = static_cast<int>(std::min<std::int64_t>(nthreads, n_chunks));
  if (nthreads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int i = 0; i < nthreads; ++i) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  std::vector<Estimate> out(K);
  std::int64_t trunc = 0;
  for (std::size_t j = 0; j < K; ++j) {
    KahanSum S, S2;
    for (const auto& c : stats) {
      S.add(c.s[j]);
      S2.add(c.s2[j]);
    }
    Estimate e;
    e.n_effective = n;
    e.mean = S.value() / static_cast<double>(n);
    double var = (S2.value() - static_cast<double>(n) * e.mean * e.mean) /
                 std::max<double>(1.0, static_cast<double>(n - 1));
    e.std_error = std::sqrt(std::max(0.0, var) / static_cast<double>(n));
    e.seed = cfg.seed;
    out[j] = e;
  }
  for (const auto& c : stats) trunc += c.trunc;
  for (auto& e : out) e.truncated_fraction = static_cast<double>(trunc) / static_cast<double>(n);
  return out;
}

// ---------------------------------------------------------------------------
// Spectrally negative Levy kernel
// ---------------------------------------------------------------------------

Estimate simulate_levy_payoff(const LevySpec& spec, double x, const Reward& g, const Coef& cost,
                              double q, const StoppingRule& rule, const SimConfig& cfg) {
  if (!(q > 0.0)) fail(errc::invalid_argument, "simulate_levy_payoff requires q > 0");
  const double dt = cfg.dt, sqdt = std::sqrt(dt), half_dt = 0.5 * dt;
  const double bdt = spec.b * dt;
  const double sig = std::sqrt(spec.sigma2);
  const double ssqdt = sig * sqdt;
  const double decay = std::exp(-q * dt);
  const JumpDraw jumps = make_jumps(spec, dt);
  const double up = rule.upper, lo = rule.lower;
  const bool has_up = std::isfinite(up), has_lo = std::isfinite(lo);
  const std::int64_t nsteps = static_cast<std::int64_t>(std::ceil(cfg.horizon / dt - 1e-12));
  const double floor_ = cfg.discount_floor;
  const double s2dt = spec.sigma2 * dt;

  const bool cost_exp = cost.kind() == Coef::Kind::exponential;
  const double cgam = cost_exp ? cost.p1() : 0.0;
  const double gU = has_up ? g(up) : 0.0;

  // Early-kill bound for threshold rules: remaining value from state Z is at
  // most D (g(up) e^{-phi(q)(up-Z)} + delta(Z)) with the closed-form
  // exponential-cost potential; both factors are exact for spectrally
  // negative paths, so pruning at prune_tol truncates provably negligible
  // contributions.
  bool prune = cfg.prune_tol > 0.0 && rule.kind == StoppingRule::Kind::threshold && has_up &&
               !has_lo;
  double phi_q = 0.0, delta_coeff = 0.0;
  if (prune) {
    LaplaceExponent le(spec);
    phi_q = le.phi(q);
    if (cost.is_zero()) {
      delta_coeff = 0.0;
    } else if (cost_exp) {
      double pg = q - le.psi(cgam);
      if (pg > 0.0)
        delta_coeff = cost.p0() / pg;
      else
        prune = false;
    } else if (cost.kind() == Coef::Kind::constant) {
      delta_coeff = cost.p0() / q;  // constant cost: delta = c/q
    } else {
      prune = false;
    }
  }
  const double prune_tol = cfg.prune_tol;

  if (rule.kind == StoppingRule::Kind::fixed_time && rule.time > cfg.horizon)
    fail(errc::invalid_argument, "fixed stopping time beyond the horizon");

  auto kernel = [&, g, cost](std::uint64_t idx, double sign) -> PathOut {
    PhiloxStream stream(cfg.seed, idx);
    NormalSampler norm(stream);
    double Z = x, D = 1.0, C = 0.0;
    double F = cost(Z);

    auto cost_at = [&](double z, double dz_from_Z) -> double {
      return cost_exp ? F * exp_small(cgam * dz_from_Z) : cost(z);
    };

    if (rule.kind == StoppingRule::Kind::fixed_time) {
      std::int64_t nt = static_cast<std::int64_t>(std::llround(rule.time / dt));
      for (std::int64_t k = 0; k < nt; ++k) {
        double dZ = bdt + ssqdt * sign * norm();
        if (jumps.active && stream.next_uniform() < jumps.p_per_step) {
          dZ += jumps.mean_size * std::log(stream.next_uniform());
          if (stream.next_uniform() < jumps.p_per_step)
            dZ += jumps.mean_size * std::log(stream.next_uniform());
        }
        double Zn = Z + dZ;
        double Dn = D * decay;
        double Fn = cost_at(Zn, dZ);
        C += half_dt * (D * F + Dn * Fn);
        Z = Zn;
        D = Dn;
        F = Fn;
      }
      return {D * g(Z) - C, false, 0.0};
    }

    std::int64_t k = 0;
    for (; k < nsteps; ++k) {
      double dZg = bdt + ssqdt * sign * norm();
      double Zn = Z + dZg;
      // continuous upward crossing (no positive jumps)
      if (has_up) {
        if (Zn >= up) {
          double lam = (up - Z) / (Zn - Z);
          double Dh = D * exp_small(-q * lam * dt);
          double Fh = cost_at(up, up - Z);
          C += 0.5 * lam * dt * (D * F + Dh * Fh);
          return {Dh * gU - C, false, 0.0};
        }
        if (cfg.bridge) {
          double d0 = up - Z, d1 = up - Zn;
          if (2.0 * d0 * d1 < 40.0 * s2dt &&
              stream.next_uniform() < std::exp(-2.0 * d0 * d1 / s2dt)) {
            double lam = d0 / (d0 + d1);
            double Dh = D * exp_small(-q * lam * dt);
            double Fh = cost_at(up, up - Z);
            C += 0.5 * lam * dt * (D * F + Dh * Fh);
            return {Dh * gU - C, false, 0.0};
          }
        }
      }
      bool jumped = false;
      if (jumps.active && stream.next_uniform() < jumps.p_per_step) {
        Zn += jumps.mean_size * std::log(stream.next_uniform());
        if (stream.next_uniform() < jumps.p_per_step)
          Zn += jumps.mean_size * std::log(stream.next_uniform());
        jumped = true;
      }
      if (has_lo) {
        double hit = kNaN, lam = 0.0, zstop = lo;
        if (Zn <= lo) {
          // overshoot allowed when the crossing came from a jump
          lam = jumped ? 1.0 : (lo - Z) / (Zn - Z);
          zstop = jumped ? Zn : lo;
          hit = 1.0;
        } else if (cfg.bridge && !jumped) {
          double d0 = Z - lo, d1 = Zn - lo;
          if (2.0 * d0 * d1 < 40.0 * s2dt &&
              stream.next_uniform() < std::exp(-2.0 * d0 * d1 / s2dt)) {
            lam = d0 / (d0 + d1);
            hit = 1.0;
          }
        }
        if (!std::isnan(hit)) {
          double Dh = D * exp_small(-q * lam * dt);
          double Fh = cost_at(zstop, zstop - Z);
          C += 0.5 * lam * dt * (D * F + Dh * Fh);
          return {Dh * g(zstop) - C, false, 0.0};
        }
      }
      double Dn = D * decay;
      double Fn = cost_at(Zn, Zn - Z);
      C += half_dt * (D * F + Dn * Fn);
      Z = Zn;
      D = Dn;
      F = Fn;
      if (D < floor_) return {-C, true, D};
      if (prune && (k & 127) == 0) {
        double bound = D * (gU * std::exp(phi_q * (Z - up)) +
                            delta_coeff * (cost_exp ? std::exp(cgam * Z) : 1.0));
        if (bound < prune_tol) return {-C, true, bound};
      }
    }
    return {-C, true, D};
  };
  return run_paths(cfg, kernel);
}

Estimate estimate_levy_terminal(const LevySpec& spec, double x, double t,
                                const std::function<double(double)>& f, const SimConfig& cfg) {
  const double dt = cfg.dt, sqdt = std::sqrt(dt);
  const double bdt = spec.b * dt;
  const double ssqdt = std::sqrt(spec.sigma2) * sqdt;
  const JumpDraw jumps = make_jumps(spec, dt);
  const std::int64_t nt = static_cast<std::int64_t>(std::llround(t / dt));

  auto kernel = [&, f](std::uint64_t idx, double sign) -> PathOut {
    PhiloxStream stream(cfg.seed, idx);
    NormalSampler norm(stream);
    double Z = x;
    for (std::int64_t k = 0; k < nt; ++k) {
      Z += bdt + ssqdt * sign * norm();
      if (jumps.active && stream.next_uniform() < jumps.p_per_step)
        Z += jumps.mean_size * std::log(stream.next_uniform());
    }
    return {f(Z), false, 0.0};
  };
  return run_paths(cfg, kernel);
}

// ---------------------------------------------------------------------------
// Radial / self-similar kernels
// ---------------------------------------------------------------------------

Estimate estimate_bessel2d_hitting(double x, double a, double q, const SimConfig& cfg) {
  if (!(0.0 <= x && x <= a)) fail(errc::bad_ordering, "need 0 <= x <= a");
  if (x == a) {
    return Estimate{1.0, 0.0, cfg.n_paths, 0.0, cfg.seed};
  }
  const double dt = cfg.dt, sqdt = std::sqrt(dt);
  const double decay = std::exp(-q * dt);
  const std::int64_t nsteps = static_cast<std::int64_t>(std::ceil(cfg.horizon / dt - 1e-12));
  const double floor_ = cfg.discount_floor;

  auto kernel = [&](std::uint64_t idx, double sign) -> PathOut {
    PhiloxStream stream(cfg.seed, idx);
    NormalSampler norm(stream);
    double X = x, Y = 0.0, D = 1.0, R = x;
    for (std::int64_t k = 0; k < nsteps; ++k) {
      double Xn = X + sqdt * sign * norm();
      double Yn = Y + sqdt * sign * norm();
      double Rn = std::sqrt(Xn * Xn + Yn * Yn);
      if (Rn >= a) {
        double lam = (a - R) / (Rn - R);
        if (!(lam >= 0.0 && lam <= 1.0)) lam = 0.5;
        return {D * exp_small(-q * lam * dt), false, 0.0};
      }
      if (cfg.bridge) {
        double d0 = a - R, d1 = a - Rn;
        if (2.0 * d0 * d1 < 40.0 * dt &&
            stream.next_uniform() < std::exp(-2.0 * d0 * d1 / dt)) {
          double lam = d0 / (d0 + d1);
          return {D * exp_small(-q * lam * dt), false, 0.0};
        }
      }
      X = Xn;
      Y = Yn;
      R = Rn;
      D *= decay;
      if (D < floor_) return {0.0, true, D};
    }
    return {0.0, true, D};
  };
  return run_paths(cfg, kernel);
}

Estimate estimate_ssmp_hitting(const SsmpSpec& spec, double x, double a, double q,
                               const SimConfig& cfg) {
  if (!(0.0 < x && x <= a)) fail(errc::bad_ordering, "need 0 < x <= a");
  if (x == a) return Estimate{1.0, 0.0, cfg.n_paths, 0.0, cfg.seed};
  const double dt = cfg.dt, sqdt = std::sqrt(dt), half_dt = 0.5 * dt;
  const double bdt = spec.levy.b * dt;
  const double ssqdt = std::sqrt(spec.levy.sigma2) * sqdt;
  const double s2dt = spec.levy.sigma2 * dt;
  const JumpDraw jumps = make_jumps(spec.levy, dt);
  const double L = std::log(a);
  const double alpha = spec.alpha;
  const std::int64_t nsteps = static_cast<std::int64_t>(std::ceil(cfg.horizon / dt - 1e-12));
  const double floor_ = cfg.discount_floor;

  auto kernel = [&](std::uint64_t idx, double sign) -> PathOut {
    PhiloxStream stream(cfg.seed, idx);
    NormalSampler norm(stream);
    double Z = std::log(x), Sg = 0.0;     // Sigma_s = int e^{alpha Z}
    double E = std::exp(alpha * Z);
    for (std::int64_t k = 0; k < nsteps; ++k) {
      double dZg = bdt + ssqdt * sign * norm();
      double Zn = Z + dZg;
      // continuous upward crossing of log a in the Levy clock
      double lam = kNaN;
      if (Zn >= L) {
        lam = (L - Z) / (Zn - Z);
      } else if (cfg.bridge) {
        double d0 = L - Z, d1 = L - Zn;
        if (2.0 * d0 * d1 < 40.0 * s2dt &&
            stream.next_uniform() < std::exp(-2.0 * d0 * d1 / s2dt))
          lam = d0 / (d0 + d1);
      }
      if (!std::isnan(lam)) {
        double Eh = E * exp_small(alpha * lam * dZg);
        double T = Sg + 0.5 * lam * dt * (E + Eh);  // hitting time of the ssMp clock
        return {std::exp(-q * T), false, 0.0};
      }
      if (jumps.active && stream.next_uniform() < jumps.p_per_step)
        Zn += jumps.mean_size * std::log(stream.next_uniform());
      double En = E * exp_small(alpha * (Zn - Z));
      Sg += half_dt * (E + En);
      Z = Zn;
      E = En;
      double disc = std::exp(-q * Sg);
      if (disc < floor_) return {0.0, true, disc};
    }
    return {0.0, true, std::exp(-q * Sg)};
  };
  return run_paths(cfg, kernel);
}

Estimate estimate_ou_hitting(const SsmpSpec& spec, double x, double a, double r,
                             const SimConfig& cfg) {
  if (!(0.0 < x && x <= a)) fail(errc::bad_ordering, "need 0 < x <= a");
  if (x == a) return Estimate{1.0, 0.0, cfg.n_paths, 0.0, cfg.seed};
  const double dt = cfg.dt, sqdt = std::sqrt(dt), half_dt = 0.5 * dt;
  const double bdt = spec.levy.b * dt;
  const double ssqdt = std::sqrt(spec.levy.sigma2) * sqdt;
  const double s2dt = spec.levy.sigma2 * dt;
  const JumpDraw jumps = make_jumps(spec.levy, dt);
  const double la = std::log(a);
  const double alpha = spec.alpha, chi = spec.chi();
  const std::int64_t nsteps = static_cast<std::int64_t>(std::ceil(cfg.horizon / dt - 1e-12));
  const double floor_ = cfg.discount_floor;

  auto kernel = [&](std::uint64_t idx, double sign) -> PathOut {
    PhiloxStream stream(cfg.seed, idx);
    NormalSampler norm(stream);
    double Z = std::log(x), Sg = 0.0;
    double E = std::exp(alpha * Z);
    double Lcur = la;  // moving barrier log a + log(1+chi Sigma)/alpha
    for (std::int64_t k = 0; k < nsteps; ++k) {
      double dZg = bdt + ssqdt * sign * norm();
      double Zn = Z + dZg;
      double En = E * exp_small(alpha * dZg);
      double Sn = Sg + half_dt * (E + En);
      double Ln = la + std::log1p(chi * Sn) / alpha;
      double lam = kNaN;
      if (Zn >= Ln) {
        double d0 = Lcur - Z, d1 = Ln - Zn;
        lam = d0 / (d0 - d1);
        if (!(lam >= 0.0 && lam <= 1.0)) lam = 0.5;
      } else if (cfg.bridge) {
        double d0 = Lcur - Z, d1 = Ln - Zn;
        if (d0 > 0.0 && d1 > 0.0 && 2.0 * d0 * d1 < 40.0 * s2dt &&
            stream.next_uniform() < std::exp(-2.0 * d0 * d1 / s2dt))
          lam = d0 / (d0 + d1);
      }
      if (!std::isnan(lam)) {
        double T = Sg + lam * (Sn - Sg);  // T^X at the moving boundary
        return {std::exp(-(r / chi) * std::log1p(chi * T)), false, 0.0};
      }
      if (jumps.active && stream.next_uniform() < jumps.p_per_step) {
        Zn += jumps.mean_size * std::log(stream.next_uniform());
        En = E * exp_small(alpha * (Zn - Z));
        Sn = Sg + half_dt * (E + En);
        Ln = la + std::log1p(chi * Sn) / alpha;
      }
      Z = Zn;
      E = En;
      Sg = Sn;
      Lcur = Ln;
      double disc = std::exp(-(r / chi) * std::log1p(chi * Sg));
      if (disc < floor_) return {0.0, true, disc};
    }
    return {0.0, true, std::exp(-(r / chi) * std::log1p(chi * Sg))};
  };
  return run_paths(cfg, kernel);
}

Estimate estimate_ssmp_terminal(const SsmpSpec& spec, double x, double t,
                                const std::function<double(double)>& f, const SimConfig& cfg) {
  if (!(x > 0.0)) fail(errc::invalid_argument, "ssmp starts at x > 0");
  const double dt = cfg.dt, sqdt = std::sqrt(dt), half_dt = 0.5 * dt;
  const double bdt = spec.levy.b * dt;
  const double ssqdt = std::sqrt(spec.levy.sigma2) * sqdt;
  const JumpDraw jumps = make_jumps(spec.levy, dt);
  const double alpha = spec.alpha;
  const std::int64_t nsteps = static_cast<std::int64_t>(std::ceil(cfg.horizon / dt - 1e-12));

  auto kernel = [&, f](std::uint64_t idx, double sign) -> PathOut {
    PhiloxStream stream(cfg.seed, idx);
    NormalSampler norm(stream);
    double Z = std::log(x), Sg = 0.0;
    double E = std::exp(alpha * Z);
    for (std::int64_t k = 0; k < nsteps; ++k) {
      double dZ = bdt + ssqdt * sign * norm();
      if (jumps.active && stream.next_uniform() < jumps.p_per_step)
        dZ += jumps.mean_size * std::log(stream.next_uniform());
      double Zn = Z + dZ;
      double En = E * exp_small(alpha * dZ);
      double Sn = Sg + half_dt * (E + En);
      if (Sn >= t) {
        double lam = (t - Sg) / (Sn - Sg);
        double Zs = Z + lam * dZ;
        return {f(std::exp(Zs)), false, 0.0};
      }
      Z = Zn;
      E = En;
      Sg = Sn;
    }
    return {f(std::exp(Z)), true, 1.0};
  };
  return run_paths(cfg, kernel);
}

LevyPathSet sample_levy_paths(const LevySpec& spec, double x, int n_paths, double dt,
                              double horizon, std::uint64_t seed) {
  if (n_paths <= 0 || n_paths > 10000)
    fail(errc::invalid_argument, "path ensembles are for test-scale n only");
  const double sqdt = std::sqrt(dt);
  const double bdt = spec.b * dt;
  const double ssqdt = std::sqrt(spec.sigma2) * sqdt;
  const JumpDraw jumps = make_jumps(spec, dt);
  const std::int64_t nsteps = static_cast<std::int64_t>(std::ceil(horizon / dt - 1e-12));

  LevyPathSet out;
  out.dt = dt;
  out.z.resize(static_cast<std::size_t>(n_paths));
  for (int p = 0; p < n_paths; ++p) {
    PhiloxStream stream(seed, static_cast<std::uint64_t>(p));
    NormalSampler norm(stream);
    auto& path = out.z[static_cast<std::size_t>(p)];
    path.resize(static_cast<std::size_t>(nsteps + 1));
    path[0] = x;
    double Z = x;
    for (std::int64_t k = 0; k < nsteps; ++k) {
      Z += bdt + ssqdt * norm();
      if (jumps.active && stream.next_uniform() < jumps.p_per_step)
        Z += jumps.mean_size * std::log(stream.next_uniform());
      path[static_cast<std::size_t>(k + 1)] = Z;
    }
  }
  return out;
}

}  // namespace ostop
