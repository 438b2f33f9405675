#pragma once

#include <stdexcept>
#include <string>

namespace ostop {

// Error taxonomy. Categories map onto the C API status codes; the name
// identifies the precise failure for callers that want to branch on it.
enum class errc {
  // configuration / input validation
  config_error,
  non_positive_volatility,
  negative_reward,
  negative_cost,
  non_positive_discount,
  invalid_argument,
  out_of_grid,
  bad_ordering,
  unsupported_family,
  pole_in_denominator,
  // numerical construction failures
  quadrature_failure,
  integration_blowup,
  non_monotone,
  series_divergence,
  // solver-level outcomes
  not_integrable,
  unbounded_value,
  no_interior_solution,
  nonpositive_rate,
  p_gamma_nonpositive,
  start_above_threshold,
  horizon_too_short,
  verification_failed,
  internal,
};

const char* errc_name(errc c);

class Error : public std::runtime_error {
 public:
  Error(errc code, const std::string& msg)
      : std::runtime_error(std::string(errc_name(code)) + ": " + msg), code_(code) {}
  errc code() const { return code_; }

 private:
  errc code_;
};

[[noreturn]] inline void fail(errc code, const std::string& msg) { throw Error(code, msg); }

}  // namespace ostop
