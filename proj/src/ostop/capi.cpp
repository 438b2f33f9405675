#include "ostop/ostop.h"

#include <string>

#include "ostop/engine.hpp"
#include "ostop/errors.hpp"

namespace {

thread_local std::string g_last_error;

ostop_status classify(const ostop::Error& e) {
  using ostop::errc;
  switch (e.code()) {
    case errc::config_error:
    case errc::non_positive_volatility:
    case errc::negative_reward:
    case errc::negative_cost:
    case errc::non_positive_discount:
    case errc::invalid_argument:
    case errc::unsupported_family:
      return OSTOP_ERR_CONFIG;
    case errc::verification_failed:
      return OSTOP_ERR_VERIFY;
    case errc::internal:
      return OSTOP_ERR_INTERNAL;
    default:
      return OSTOP_ERR_SOLVER;
  }
}

template <typename Fn>
ostop_status guarded(Fn&& fn) {
  try {
    fn();
    g_last_error.clear();
    return OSTOP_OK;
  } catch (const ostop::Error& e) {
    g_last_error = e.what();
    return classify(e);
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return OSTOP_ERR_INTERNAL;
  } catch (...) {
    g_last_error = "unknown error";
    return OSTOP_ERR_INTERNAL;
  }
}

}  // namespace

struct ostop_run {
  ostop::engine::RunConfig cfg;
  ostop::engine::SolveHandle handle;
  std::string summary, table, sturm, verdicts, estimate;
  bool solved = false;
};

extern "C" {

const char* ostop_version(void) { return "0.1.0"; }

const char* ostop_last_error(void) { return g_last_error.c_str(); }

ostop_status ostop_run_create(const char* config_json, ostop_run** out) {
  if (!config_json || !out) {
    g_last_error = "null argument";
    return OSTOP_ERR_INVALID;
  }
  *out = nullptr;
  ostop_run* run = nullptr;
  ostop_status st = guarded([&] {
    run = new ostop_run();
    run->cfg = ostop::engine::parse_config(config_json);
  });
  if (st != OSTOP_OK) {
    delete run;
    return st;
  }
  *out = run;
  return OSTOP_OK;
}

void ostop_run_destroy(ostop_run* run) { delete run; }

ostop_status ostop_run_solve(ostop_run* run) {
  if (!run) {
    g_last_error = "null run";
    return OSTOP_ERR_INVALID;
  }
  return guarded([&] {
    auto out = ostop::engine::run_solve(run->cfg, &run->handle);
    run->summary = out.summary.dump(2) + "\n";
    run->table = out.table_csv;
    run->sturm = out.sturm_csv;
    run->solved = true;
  });
}

ostop_status ostop_run_table(ostop_run* run, int grid_n) {
  if (!run) {
    g_last_error = "null run";
    return OSTOP_ERR_INVALID;
  }
  return guarded([&] {
    auto out = ostop::engine::run_table(run->cfg, grid_n);
    run->summary = out.summary.dump(2) + "\n";
    run->table = out.table_csv;
    run->sturm = out.sturm_csv;
  });
}

ostop_status ostop_run_verify(ostop_run* run, double perturb_threshold, int* all_passed) {
  if (!run) {
    g_last_error = "null run";
    return OSTOP_ERR_INVALID;
  }
  bool passed = false;
  ostop_status st = guarded([&] {
    std::optional<double> perturb;
    if (perturb_threshold != 0.0) perturb = perturb_threshold;
    auto out = ostop::engine::run_verify(run->cfg, perturb);
    run->summary = out.summary.dump(2) + "\n";
    run->table = out.table_csv;
    run->verdicts = out.verdicts.dump(2) + "\n";
    passed = out.verify_passed;
  });
  if (all_passed) *all_passed = passed ? 1 : 0;
  if (st == OSTOP_OK && !passed) {
    g_last_error = "verification checks failed";
    return OSTOP_ERR_VERIFY;
  }
  return st;
}

ostop_status ostop_run_simulate(ostop_run* run) {
  if (!run) {
    g_last_error = "null run";
    return OSTOP_ERR_INVALID;
  }
  return guarded([&] {
    auto out = ostop::engine::run_simulate(run->cfg);
    run->estimate = out.estimate.dump(2) + "\n";
  });
}

const char* ostop_run_summary_json(const ostop_run* run) {
  return run && !run->summary.empty() ? run->summary.c_str() : nullptr;
}
const char* ostop_run_table_csv(const ostop_run* run) {
  return run && !run->table.empty() ? run->table.c_str() : nullptr;
}
const char* ostop_run_sturm_csv(const ostop_run* run) {
  return run && !run->sturm.empty() ? run->sturm.c_str() : nullptr;
}
const char* ostop_run_verdicts_json(const ostop_run* run) {
  return run && !run->verdicts.empty() ? run->verdicts.c_str() : nullptr;
}
const char* ostop_run_estimate_json(const ostop_run* run) {
  return run && !run->estimate.empty() ? run->estimate.c_str() : nullptr;
}

ostop_status ostop_run_value_at(ostop_run* run, double x, double* value) {
  if (!run || !value) {
    g_last_error = "null argument";
    return OSTOP_ERR_INVALID;
  }
  if (!run->solved || !run->handle.value) {
    g_last_error = "no retained value function (run solve first)";
    return OSTOP_ERR_INVALID;
  }
  return guarded([&] { *value = run->handle.value(x); });
}

}  // extern "C"
