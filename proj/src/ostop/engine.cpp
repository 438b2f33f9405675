#include "ostop/engine.hpp"

#include <cmath>
#include <set>
#include <sstream>

#include "ostop/errors.hpp"

namespace ostop::engine {

namespace {

[[noreturn]] void bad_config(const std::string& msg) { fail(errc::config_error, msg); }

void check_keys(const json& j, const char* where, std::initializer_list<const char*> allowed) {
  if (!j.is_object()) bad_config(std::string(where) + " must be an object");
  std::set<std::string> ok(allowed.begin(), allowed.end());
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!ok.count(it.key()))
      bad_config("unknown key '" + it.key() + "' in " + where);
}

double num(const json& j, const char* where) {
  if (!j.is_number()) bad_config(std::string(where) + " must be a number");
  return j.get<double>();
}

double num_or(const json& j, const char* key, double dflt) {
  if (!j.contains(key)) return dflt;
  return num(j.at(key), key);
}

Coef parse_coef(const json& j, const char* where) {
  check_keys(j, where, {"type", "value", "c0", "c1", "c2", "coeff", "rate"});
  std::string t = j.value("type", "");
  if (t == "constant") return Coef::constant(num(j.at("value"), "value"));
  if (t == "affine") return Coef::affine(num_or(j, "c0", 0.0), num_or(j, "c1", 0.0));
  if (t == "quadratic")
    return Coef::quadratic(num_or(j, "c0", 0.0), num_or(j, "c1", 0.0), num_or(j, "c2", 0.0));
  if (t == "exp") return Coef::exponential(num_or(j, "coeff", 1.0), num_or(j, "rate", 1.0));
  bad_config("unknown coefficient type '" + t + "' in " + where);
}

// Payoff catalog.  "of": "exp" applies the payoff to e^x (the price reading
// of a log-scale state), "state" applies it to x directly.
Reward make_call(double K, bool on_exp) {
  Reward g;
  if (on_exp) {
    double lk = std::log(K);
    g.f = [K](double x) { return std::max(std::exp(x) - K, 0.0); };
    g.df = [lk](double x) { return x > lk ? std::exp(x) : 0.0; };
    g.kinks = {lk};
  } else {
    g.f = [K](double x) { return std::max(x - K, 0.0); };
    g.df = [K](double x) { return x > K ? 1.0 : 0.0; };
    g.kinks = {K};
  }
  return g;
}

Reward make_put(double L, bool on_exp) {
  Reward g;
  if (on_exp) {
    double ll = std::log(L);
    g.f = [L](double x) { return std::max(L - std::exp(x), 0.0); };
    g.df = [ll](double x) { return x < ll ? -std::exp(x) : 0.0; };
    g.kinks = {ll};
  } else {
    g.f = [L](double x) { return std::max(L - x, 0.0); };
    g.df = [L](double x) { return x < L ? -1.0 : 0.0; };
    g.kinks = {L};
  }
  return g;
}

Reward make_strangle(double L, double K, bool on_exp) {
  Reward put = make_put(L, on_exp), call = make_call(K, on_exp);
  Reward g;
  g.f = [put, call](double x) { return put.f(x) + call.f(x); };
  g.df = [put, call](double x) { return put.df(x) + call.df(x); };
  g.kinks = put.kinks;
  g.kinks.insert(g.kinks.end(), call.kinks.begin(), call.kinks.end());
  return g;
}

Reward make_constant(double v) {
  Reward g;
  g.f = [v](double) { return v; };
  g.df = [](double) { return 0.0; };
  return g;
}

void parse_reward(const json& j, RunConfig& cfg) {
  check_keys(j, "problem.reward", {"type", "strike", "put_strike", "call_strike", "value", "of"});
  std::string t = j.value("type", "");
  std::string of = j.value("of", "exp");
  if (of != "exp" && of != "state") bad_config("reward 'of' must be 'exp' or 'state'");
  bool on_exp = of == "exp";
  cfg.reward_type = t;
  cfg.reward_on_exp = on_exp;
  if (t == "call") {
    cfg.reward_p1 = num(j.at("strike"), "strike");
    cfg.reward = make_call(cfg.reward_p1, on_exp);
  } else if (t == "put") {
    cfg.reward_p1 = num(j.at("strike"), "strike");
    cfg.reward = make_put(cfg.reward_p1, on_exp);
  } else if (t == "strangle") {
    cfg.reward_p1 = num(j.at("put_strike"), "put_strike");
    cfg.reward_p2 = num(j.at("call_strike"), "call_strike");
    cfg.reward = make_strangle(cfg.reward_p1, cfg.reward_p2, on_exp);
  } else if (t == "constant") {
    cfg.reward_p1 = num(j.at("value"), "value");
    cfg.reward = make_constant(cfg.reward_p1);
  } else {
    bad_config("unknown reward type '" + t + "'");
  }
}

Coef parse_cost(const json& j) {
  check_keys(j, "problem.cost", {"type", "value", "coeff", "gamma"});
  std::string t = j.value("type", "");
  if (t == "zero") return Coef::constant(0.0);
  if (t == "constant") return Coef::constant(num(j.at("value"), "value"));
  if (t == "exp")
    return Coef::exponential(num(j.at("coeff"), "coeff"), num(j.at("gamma"), "gamma"));
  bad_config("unknown cost type '" + t + "'");
}

JumpFamily parse_jumps(const json& j) {
  check_keys(j, "problem.jumps", {"family", "rate", "mean_size", "alpha", "gamma"});
  std::string f = j.value("family", "none");
  if (f == "none") return NoJumps{};
  if (f == "cp_exp")
    return CompoundPoissonExp{num(j.at("rate"), "rate"), num(j.at("mean_size"), "mean_size")};
  if (f == "pochhammer")
    return PochhammerFamily{num(j.at("alpha"), "alpha"), num(j.at("gamma"), "gamma")};
  bad_config("unknown jump family '" + f + "'");
}

}  // namespace

RunConfig parse_config(const std::string& json_text) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const std::exception& e) {
    bad_config(std::string("invalid JSON: ") + e.what());
  }
  check_keys(root, "config", {"problem", "solver", "mc", "output"});
  if (!root.contains("problem")) bad_config("missing 'problem' section");
  const json& p = root.at("problem");
  check_keys(p, "problem",
             {"kind", "drift", "sigma", "interval", "sigma2", "b", "jumps", "q",
              "use_martingale_rate", "alpha", "lambda", "beta", "gamma_ud", "preset", "nu",
              "reward", "cost", "discount", "x0"});

  RunConfig cfg;
  std::string kind = p.value("kind", "diffusion");
  if (kind == "diffusion")
    cfg.kind = ProblemKind::diffusion;
  else if (kind == "levy")
    cfg.kind = ProblemKind::levy;
  else if (kind == "ssmp")
    cfg.kind = ProblemKind::ssmp;
  else
    bad_config("unknown problem kind '" + kind + "'");

  if (!p.contains("reward")) bad_config("missing problem.reward");
  parse_reward(p.at("reward"), cfg);
  if (p.contains("cost")) cfg.cost = parse_cost(p.at("cost"));

  if (cfg.kind == ProblemKind::diffusion) {
    DiffusionSpec d;
    d.drift = p.contains("drift") ? parse_coef(p.at("drift"), "problem.drift")
                                  : Coef::constant(0.0);
    d.sigma = p.contains("sigma") ? parse_coef(p.at("sigma"), "problem.sigma")
                                  : Coef::constant(1.0);
    if (p.contains("interval")) {
      const json& iv = p.at("interval");
      check_keys(iv, "problem.interval", {"lower", "upper"});
      d.interval.lower = num_or(iv, "lower", kNegInf);
      d.interval.upper = num_or(iv, "upper", kInf);
    }
    cfg.problem.diffusion = d;
    cfg.problem.reward = cfg.reward;
    cfg.problem.cost = cfg.cost;
    cfg.problem.x0 = num_or(p, "x0", 0.0);
    if (!p.contains("discount")) bad_config("missing problem.discount");
    const json& disc = p.at("discount");
    check_keys(disc, "problem.discount", {"type", "q", "a"});
    std::string dt = disc.value("type", "rate");
    if (dt == "rate") {
      double q = num(disc.at("q"), "discount.q");
      if (!(q > 0.0)) bad_config("discount rate q must be positive");
      cfg.problem.discount = ConstantRate{q};
    } else if (dt == "state") {
      cfg.problem.discount = RandomDiscount{parse_coef(disc.at("a"), "discount.a")};
    } else {
      bad_config("unknown discount type '" + dt + "'");
    }
  } else if (cfg.kind == ProblemKind::levy) {
    cfg.levy.sigma2 = num_or(p, "sigma2", 1.0);
    cfg.levy.b = num_or(p, "b", 0.0);
    if (p.contains("jumps")) cfg.levy.jumps = parse_jumps(p.at("jumps"));
    cfg.levy_x0 = num_or(p, "x0", 0.0);
    if (p.contains("q")) {
      cfg.levy_q = num(p.at("q"), "problem.q");
      if (!(cfg.levy_q > 0.0)) bad_config("q must be positive");
    }
  } else {
    std::string preset = p.value("preset", "");
    if (preset == "bessel") {
      double nu = num_or(p, "nu", 0.0);
      cfg.ssmp.levy = LevySpec{1.0, nu, NoJumps{}};
      cfg.ssmp.alpha = 2.0;
    } else if (preset == "mittag_leffler") {
      double alpha = num_or(p, "alpha", 1.5);
      if (alpha == 1.0)
        cfg.ssmp.levy = LevySpec{0.0, 1.0, NoJumps{}};
      else
        cfg.ssmp.levy = LevySpec{0.0, 0.0, PochhammerFamily{alpha, 1.0}};
      cfg.ssmp.alpha = alpha;
    } else if (preset == "pochhammer") {
      double alpha = num_or(p, "alpha", 1.5);
      double gamma = num_or(p, "gamma", 1.0);
      cfg.ssmp.levy = LevySpec{0.0, 0.0, PochhammerFamily{alpha, gamma}};
      cfg.ssmp.alpha = alpha;
    } else if (preset.empty()) {
      cfg.ssmp.levy.sigma2 = num_or(p, "sigma2", 1.0);
      cfg.ssmp.levy.b = num_or(p, "b", 0.0);
      if (p.contains("jumps")) cfg.ssmp.levy.jumps = parse_jumps(p.at("jumps"));
      cfg.ssmp.alpha = num_or(p, "alpha", 2.0);
    } else {
      bad_config("unknown ssmp preset '" + preset + "'");
    }
    cfg.ssmp.lambda = num_or(p, "lambda", 1.0);
    cfg.ssmp_q = num_or(p, "q", 1.0);
    cfg.ssmp_beta = num_or(p, "beta", 1.0);
    cfg.ssmp_gamma_ud = num_or(p, "gamma_ud", 1.0);
    cfg.ssmp_x0 = num_or(p, "x0", 1.0);
  }

  if (root.contains("solver")) {
    const json& s = root.at("solver");
    check_keys(s, "solver",
               {"grid_n", "trunc_lo", "trunc_hi", "span_units", "ode_rtol", "side", "tail_tol"});
    cfg.sturm.grid_n = static_cast<int>(num_or(s, "grid_n", 4096));
    cfg.sturm.trunc_lo = num_or(s, "trunc_lo", kNaN);
    cfg.sturm.trunc_hi = num_or(s, "trunc_hi", kNaN);
    cfg.sturm.span_units = num_or(s, "span_units", 40.0);
    cfg.sturm.ode_rtol = num_or(s, "ode_rtol", 1e-12);
    cfg.tail_tol = num_or(s, "tail_tol", 1e-9);
    std::string side = s.value("side", "auto");
    if (side == "auto")
      cfg.side = Side::automatic;
    else if (side == "one")
      cfg.side = Side::one;
    else if (side == "one_down")
      cfg.side = Side::one_down;
    else if (side == "two")
      cfg.side = Side::two;
    else
      bad_config("unknown solver side '" + side + "'");
  }

  if (root.contains("mc")) {
    const json& m = root.at("mc");
    check_keys(m, "mc",
               {"n_paths", "dt", "horizon", "seed", "antithetic", "bridge", "discount_floor",
                "prune_tol", "threads"});
    cfg.has_mc = true;
    cfg.mc.n_paths = static_cast<std::int64_t>(num_or(m, "n_paths", 100000));
    cfg.mc.dt = num_or(m, "dt", 1e-3);
    cfg.mc.horizon = num_or(m, "horizon", 100.0);
    cfg.mc.seed = static_cast<std::uint64_t>(num_or(m, "seed", 12345));
    cfg.mc.antithetic = m.value("antithetic", false);
    cfg.mc.bridge = m.value("bridge", true);
    cfg.mc.discount_floor = num_or(m, "discount_floor", 1e-10);
    cfg.mc.prune_tol = num_or(m, "prune_tol", 0.0);
    cfg.mc.threads = static_cast<int>(num_or(m, "threads", 0));
  }

  if (root.contains("output")) {
    const json& o = root.at("output");
    check_keys(o, "output", {"dir", "sturm_csv", "grid_n"});
    cfg.out_dir = o.value("dir", ".");
    cfg.want_sturm_csv = o.value("sturm_csv", false);
    cfg.table_grid_n = static_cast<int>(num_or(o, "grid_n", 512));
  }
  return cfg;
}

// ---------------------------------------------------------------------------
// Solve paths per problem kind
// ---------------------------------------------------------------------------

namespace {

struct DiffusionArtifacts {
  ProblemSpec reduced;
  std::shared_ptr<FundamentalPair> pair;
  std::shared_ptr<CostPotential> dl;
  // solution
  bool two_sided = false;
  OneSidedSolution one;
  TwoSidedSolution two;
  bool degenerate = false;
  std::function<double(double)> value;
  StoppingRule rule;
};

bool reward_is_zero(const ProblemSpec& p, double lo, double hi) {
  for (int i = 0; i <= 64; ++i) {
    double x = lo + (hi - lo) * i / 64.0;
    if (p.reward(x) != 0.0 || p.cost(x) != 0.0) return false;
  }
  return true;
}

DiffusionArtifacts solve_diffusion(const RunConfig& cfg) {
  DiffusionArtifacts art;
  auto validated = validate(cfg.problem);
  art.reduced = time_change_reduce(validated.problem);
  double q = art.reduced.rate();

  art.pair = std::make_shared<FundamentalPair>(
      fundamental_solutions(art.reduced.diffusion, q, cfg.sturm));
  if (art.reduced.x0 < art.pair->grid_lo() || art.reduced.x0 > art.pair->grid_hi())
    bad_config("x0 outside the truncated solver grid");

  if (reward_is_zero(art.reduced, art.pair->grid_lo(), art.pair->grid_hi())) {
    art.degenerate = true;
    art.value = [](double) { return 0.0; };
    art.rule = StoppingRule::fixed_time(0.0);
    return art;
  }

  art.dl = std::make_shared<CostPotential>(delta(*art.pair, art.reduced.cost, cfg.tail_tol));

  const Reward& g = art.reduced.reward;
  double x = art.reduced.x0;
  auto solve_up = [&]() {
    art.one = solve_one_sided(*art.pair, *art.dl, g, x, cfg.search);
    art.two_sided = false;
    art.value = art.one.value;
    art.rule = StoppingRule::threshold(art.one.u_star);
  };
  auto solve_down = [&]() {
    art.one = solve_one_sided_down(*art.pair, *art.dl, g, x, cfg.search);
    art.two_sided = false;
    art.value = art.one.value;
    art.rule = StoppingRule::threshold_down(art.one.u_star);
  };
  auto solve_both = [&]() {
    art.two = solve_two_sided(*art.pair, *art.dl, g, x, cfg.search);
    art.two_sided = true;
    art.value = art.two.value;
    art.rule = StoppingRule::interval(art.two.u1_star, art.two.u2_star);
  };

  switch (cfg.side) {
    case Side::one: solve_up(); break;
    case Side::one_down: solve_down(); break;
    case Side::two: solve_both(); break;
    case Side::automatic: {
      try {
        solve_both();
      } catch (const Error& e) {
        if (e.code() != errc::no_interior_solution) throw;
        // one-sided fallback toward the side carrying payoff mass
        solve_up();
        if (art.one.D_star <= 0.0) solve_down();
      }
      break;
    }
  }
  return art;
}

json estimate_json(const Estimate& e) {
  json j;
  j["mean"] = e.mean;
  j["std_error"] = e.std_error;
  j["n"] = e.n_effective;
  j["truncated_fraction"] = e.truncated_fraction;
  j["seed"] = e.seed;
  return j;
}

struct LevyArtifacts {
  LaplaceExponent le;
  double q;
  double x0;
  bool closed_form = false;
  CallWithCost cwc{};
  OneSidedSolution one;
  std::function<double(double)> delta_fn;
  StoppingRule rule;
};

LevyArtifacts solve_levy(const RunConfig& cfg) {
  LevyArtifacts art{LaplaceExponent(cfg.levy), 0.0, cfg.levy_x0};
  art.q = std::isnan(cfg.levy_q) ? martingale_rate(art.le) : cfg.levy_q;

  const Coef& c = cfg.cost;
  double delta_coeff = 0.0, delta_gamma = 0.0;
  if (c.kind() == Coef::Kind::exponential) {
    double pg = art.q - art.le.psi(c.p1());
    if (!(pg > 0.0))
      fail(errc::p_gamma_nonpositive, "exponential cost is not integrable at this rate");
    delta_coeff = c.p0() / pg;
    delta_gamma = c.p1();
  } else if (c.kind() == Coef::Kind::constant) {
    delta_coeff = c.p0() / art.q;
    delta_gamma = 0.0;
  } else if (!c.is_zero()) {
    bad_config("levy problems support zero, constant or exponential costs");
  }
  art.delta_fn = [delta_coeff, delta_gamma](double z) {
    return delta_coeff * std::exp(delta_gamma * z);
  };

  // generic one-sided route through the exponential excessive function
  double phiq = art.le.phi(art.q);
  ExcessiveHandle h{[phiq](double u) { return phiq * u; }, [phiq](double) { return phiq; }};
  PayoffHandle n;
  const Reward& g = cfg.reward;
  auto dfn = art.delta_fn;
  n.f = [g, dfn](double u) { return g(u) + dfn(u); };
  if (g.has_derivative()) {
    n.df = [g, dfn, delta_gamma](double u) { return g.df(u) + delta_gamma * dfn(u); };
  }
  n.smooth_at = [g](double u) { return g.smooth_at(u); };

  double x = art.x0;
  double span = 60.0 / std::max(phiq, 0.05);
  const int N = 4096;
  std::vector<double> scan(N);
  for (int i = 0; i < N; ++i) scan[i] = x + span * i / (N - 1);
  art.one = solve_one_sided(h, n, scan, x, art.delta_fn, cfg.search);
  art.rule = StoppingRule::threshold(art.one.u_star);
  return art;
}

}  // namespace

RunOutputs run_solve(const RunConfig& cfg, SolveHandle* keep) {
  RunOutputs out;
  json s;
  if (cfg.kind == ProblemKind::diffusion) {
    auto art = solve_diffusion(cfg);
    if (keep) {
      auto pair = art.pair;
      auto dl = art.dl;
      auto f = art.value;
      keep->value = [pair, dl, f](double x) { return f(x); };
    }
    s["kind"] = "diffusion";
    s["q"] = art.reduced.rate();
    if (art.degenerate) {
      s["degenerate"] = true;
      s["value"] = 0.0;
      s["attained"] = true;
    } else if (art.two_sided) {
      s["side"] = "two";
      s["M_star"] = art.two.M_star;
      s["p_star"] = art.two.p_star;
      s["thresholds"] = json::array({art.two.u1_star, art.two.u2_star});
      s["attained"] = true;
      s["value"] = art.value(art.reduced.x0);
      if (art.two.smooth_fit_checked) {
        s["residuals"] = json::array({art.two.residual_ratio, art.two.residual_fit_lower,
                                      art.two.residual_fit_upper});
      }
    } else {
      s["side"] = "one";
      s["D_star"] = art.one.D_star;
      s["thresholds"] = json::array({art.one.u_star});
      s["attained"] = art.one.attained;
      s["value"] = art.value(art.reduced.x0);
    }
    // value table over the solver grid
    if (!art.degenerate) {
      std::vector<double> grid;
      const auto& gx = art.pair->grid();
      int stride = std::max<int>(1, static_cast<int>(gx.size()) / cfg.table_grid_n);
      for (std::size_t i = 0; i < gx.size(); i += static_cast<std::size_t>(stride))
        grid.push_back(gx[i]);
      std::function<double(double)> dfn = [&](double y) { return art.dl->value(y); };
      auto rows = value_table(art.value, art.reduced.reward, dfn, grid);
      out.table_csv = value_table_csv(rows);
      if (cfg.want_sturm_csv) {
        auto dt = art.dl->table();
        out.sturm_csv = sturm_csv(*art.pair, &dt);
      }
    }
  } else if (cfg.kind == ProblemKind::levy) {
    auto art = solve_levy(cfg);
    if (keep) keep->value = art.one.value;
    s["kind"] = "levy";
    s["q"] = art.q;
    s["theta"] = art.le.theta();
    s["D_star"] = art.one.D_star;
    s["thresholds"] = json::array({art.one.u_star});
    s["attained"] = art.one.attained;
    s["value"] = art.one.value(art.x0);
    if (cfg.reward_type == "call" && cfg.reward_on_exp &&
        cfg.cost.kind() == Coef::Kind::exponential && cfg.cost.p1() > 0.0 &&
        cfg.cost.p1() < 1.0 && std::isnan(cfg.levy_q)) {
      auto cwc = call_with_cost(art.le, cfg.reward_p1, cfg.cost.p0(), cfg.cost.p1(), art.x0);
      json cf;
      cf["x_star"] = cwc.x_star;
      cf["p_gamma"] = cwc.p_gamma;
      if (cwc.start_below) cf["value"] = cwc.value;
      s["closed_form"] = cf;
    }
    std::vector<double> grid;
    double lo = art.x0 - 5.0, hi = art.one.attained ? art.one.u_star + 2.0 : art.x0 + 10.0;
    for (int i = 0; i < cfg.table_grid_n; ++i)
      grid.push_back(lo + (hi - lo) * i / (cfg.table_grid_n - 1));
    std::function<double(double)> dfn = art.delta_fn;
    auto rows = value_table(art.one.value, cfg.reward, dfn, grid);
    out.table_csv = value_table_csv(rows);
  } else {
    auto pse = PowerSeriesEigenfunction(cfg.ssmp);
    auto sols = solve_ssmp_problems(pse, cfg.reward, cfg.ssmp_q, cfg.ssmp_beta,
                                    cfg.ssmp_gamma_ud, cfg.ssmp_x0);
    s["kind"] = "ssmp";
    s["q"] = cfg.ssmp_q;
    auto put = [&](const char* name, const SsmpProblemSolution& p) {
      json jp;
      jp["a_star"] = p.a_star;
      jp["value"] = p.value;
      jp["attained"] = p.attained;
      s[name] = jp;
    };
    put("V_X", sols.v_x);
    put("V_U", sols.v_u);
    put("V_U_delta", sols.v_ud);
    put("V_S_q", sols.v_sq);
    put("V_X_nonhom", sols.v_x_nonhom);
    s["value"] = sols.v_x.value;
    s["thresholds"] = json::array({sols.v_x.a_star});
    s["attained"] = sols.v_x.attained;
  }
  out.summary = s;
  return out;
}

RunOutputs run_table(const RunConfig& cfg, int grid_n) {
  RunConfig c2 = cfg;
  if (grid_n > 0) c2.table_grid_n = grid_n;
  return run_solve(c2);
}

RunOutputs run_verify(const RunConfig& cfg, std::optional<double> perturb) {
  if (!cfg.has_mc) bad_config("verify requires an 'mc' section");
  RunOutputs out = run_solve(cfg);
  json checks = json::array();
  bool all_pass = true;

  auto add_check = [&](const std::string& name, double solver_value, const Estimate& e,
                       double extra_tol = 0.0) {
    bool pass = std::abs(solver_value - e.mean) <= 3.0 * e.std_error + extra_tol;
    json c;
    c["name"] = name;
    c["solver_value"] = solver_value;
    c["mc_mean"] = e.mean;
    c["mc_se"] = e.std_error;
    c["pass"] = pass;
    checks.push_back(c);
    all_pass = all_pass && pass;
  };

  if (cfg.kind == ProblemKind::diffusion) {
    auto art = solve_diffusion(cfg);
    double v0 = art.value(art.reduced.x0);
    if (art.degenerate) {
      Estimate e;
      e.mean = 0.0;
      e.std_error = 0.0;
      e.n_effective = cfg.mc.n_paths;
      e.seed = cfg.mc.seed;
      add_check("degenerate_zero_value", 0.0, e);
    } else {
      // simulate the original (unreduced) problem under the solved rule
      Estimate e = simulate_payoff(cfg.problem, art.rule, cfg.mc);
      add_check("value_at_rule", v0, e);
      if (perturb && !art.two_sided && art.one.attained) {
        StoppingRule pr = StoppingRule::threshold(art.one.u_star + *perturb);
        Estimate ep = simulate_payoff(cfg.problem, pr, cfg.mc);
        bool dom = ep.mean <= v0 + 3.0 * ep.std_error;
        json c;
        c["name"] = "perturbed_threshold_dominance";
        c["solver_value"] = v0;
        c["mc_mean"] = ep.mean;
        c["mc_se"] = ep.std_error;
        c["optimality_gap"] = v0 - ep.mean;
        c["pass"] = dom;
        checks.push_back(c);
        all_pass = all_pass && dom;
      }
    }
  } else if (cfg.kind == ProblemKind::levy) {
    auto art = solve_levy(cfg);
    double v0 = art.one.value(art.x0);
    if (!art.one.attained) bad_config("verify needs an attained threshold");
    Estimate e =
        simulate_levy_payoff(cfg.levy, art.x0, cfg.reward, cfg.cost, art.q, art.rule, cfg.mc);
    add_check("value_at_rule", v0, e);
    if (perturb) {
      StoppingRule pr = StoppingRule::threshold(art.one.u_star + *perturb);
      Estimate ep =
          simulate_levy_payoff(cfg.levy, art.x0, cfg.reward, cfg.cost, art.q, pr, cfg.mc);
      bool dom = ep.mean <= v0 + 3.0 * ep.std_error;
      json c;
      c["name"] = "perturbed_threshold_dominance";
      c["solver_value"] = v0;
      c["mc_mean"] = ep.mean;
      c["mc_se"] = ep.std_error;
      c["optimality_gap"] = v0 - ep.mean;
      c["pass"] = dom;
      checks.push_back(c);
      all_pass = all_pass && dom;
    }
  } else {
    auto pse = PowerSeriesEigenfunction(cfg.ssmp);
    auto sols = solve_ssmp_problems(pse, cfg.reward, cfg.ssmp_q, cfg.ssmp_beta,
                                    cfg.ssmp_gamma_ud, cfg.ssmp_x0);
    if (!sols.v_x.attained) bad_config("verify needs an attained ssmp threshold");
    // MC of the plain problem at the solved threshold via the Levy-clock
    // representation; payoff g(a*) e^{-q T_{a*}}.
    Estimate hit = estimate_ssmp_hitting(cfg.ssmp, cfg.ssmp_x0, sols.v_x.a_star, cfg.ssmp_q,
                                         cfg.mc);
    Estimate e = hit;
    double ga = cfg.reward(sols.v_x.a_star);
    e.mean = hit.mean * ga;
    e.std_error = hit.std_error * std::abs(ga);
    add_check("V_X_at_rule", sols.v_x.value, e);
  }

  out.verdicts = json::object();
  out.verdicts["checks"] = checks;
  out.verdicts["all_pass"] = all_pass;
  out.verify_passed = all_pass;
  return out;
}

RunOutputs run_simulate(const RunConfig& cfg) {
  if (!cfg.has_mc) bad_config("simulate requires an 'mc' section");
  RunOutputs out;
  if (cfg.kind == ProblemKind::diffusion) {
    auto art = solve_diffusion(cfg);
    Estimate e = simulate_payoff(cfg.problem, art.rule, cfg.mc);
    out.estimate = estimate_json(e);
  } else if (cfg.kind == ProblemKind::levy) {
    auto art = solve_levy(cfg);
    Estimate e =
        simulate_levy_payoff(cfg.levy, art.x0, cfg.reward, cfg.cost, art.q, art.rule, cfg.mc);
    out.estimate = estimate_json(e);
  } else {
    auto pse = PowerSeriesEigenfunction(cfg.ssmp);
    auto sols = solve_ssmp_problems(pse, cfg.reward, cfg.ssmp_q, cfg.ssmp_beta,
                                    cfg.ssmp_gamma_ud, cfg.ssmp_x0);
    Estimate hit =
        estimate_ssmp_hitting(cfg.ssmp, cfg.ssmp_x0, sols.v_x.a_star, cfg.ssmp_q, cfg.mc);
    hit.mean *= cfg.reward(sols.v_x.a_star);
    hit.std_error *= std::abs(cfg.reward(sols.v_x.a_star));
    out.estimate = estimate_json(hit);
  }
  return out;
}

}  // namespace ostop::engine
