#pragma once

#include <stdexcept>
#include <string>

namespace appraisal {

enum class errc {
  // network validation
  index_out_of_range,
  self_loop,
  duplicate_edge,
  out_degree_too_small,
  weight_out_of_range,
  row_sum_violation,
  not_rooted,
  too_few_roots,
  // state / dynamics
  dimension_mismatch,
  not_in_simplex,
  vertex_state,
  target_not_zero,
  drift_exceeded,
  non_finite_state,
  horizon_mismatch,
  // equilibrium
  n_too_small,
  mu_out_of_range,
  singular_system,
  sign_pattern_violation,
  bisection_failed,
  eigen_failure,
  not_an_equilibrium,
  // generation / io
  infeasible_spec,
  parse_error,
};

class Error : public std::runtime_error {
 public:
  Error(errc code, std::string message)
      : std::runtime_error(std::move(message)), code_(code) {}

  errc code() const noexcept { return code_; }

 private:
  errc code_;
};

}  // namespace appraisal
