#pragma once

#include <optional>
#include <string>

#include <json.hpp>

#include "ostop/mc.hpp"
#include "ostop/potential.hpp"
#include "ostop/solver.hpp"
#include "ostop/ssmp.hpp"
#include "ostop/sturm.hpp"

namespace ostop::engine {

using json = nlohmann::ordered_json;

enum class ProblemKind { diffusion, levy, ssmp };
enum class Side { automatic, one, one_down, two };

struct RunConfig {
  ProblemKind kind = ProblemKind::diffusion;

  // diffusion problem
  ProblemSpec problem;

  // levy problem
  LevySpec levy;
  double levy_q = kNaN;  // NaN: use psi(1)
  double levy_x0 = 0.0;

  // ssmp problem
  SsmpSpec ssmp;
  double ssmp_q = 1.0;
  double ssmp_beta = 1.0;
  double ssmp_gamma_ud = 1.0;
  double ssmp_x0 = 1.0;

  Reward reward;  // shared reward description
  std::string reward_type;            // catalog name
  double reward_p1 = kNaN, reward_p2 = kNaN;
  bool reward_on_exp = true;
  Coef cost = Coef::constant(0.0);

  // solver section
  SturmOptions sturm;
  SearchOptions search;
  Side side = Side::automatic;
  double tail_tol = 1e-9;

  // mc section
  SimConfig mc;
  bool has_mc = false;

  // output section
  std::string out_dir = ".";
  bool want_sturm_csv = false;
  int table_grid_n = 512;
};

// Strict parse: unknown keys anywhere are rejected.
RunConfig parse_config(const std::string& json_text);

struct RunOutputs {
  json summary;               // solve summary
  std::string table_csv;      // value table
  std::string sturm_csv;      // optional tabulated fundamental data
  json verdicts;              // verify results
  json estimate;              // simulate results
  bool verify_passed = true;
};

// Retained solution: the evaluator owns the numerical artifacts it needs.
struct SolveHandle {
  std::function<double(double)> value;  // empty when unsupported (ssmp)
};

RunOutputs run_solve(const RunConfig& cfg, SolveHandle* keep = nullptr);
RunOutputs run_table(const RunConfig& cfg, int grid_n);
// perturb: optional threshold offset injected into an extra optimality-gap
// check.
RunOutputs run_verify(const RunConfig& cfg, std::optional<double> perturb = std::nullopt);
RunOutputs run_simulate(const RunConfig& cfg);

}  // namespace ostop::engine
