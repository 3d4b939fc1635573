#pragma once

#include <stdexcept>
#include <string>

namespace desqn {

enum class Errc {
  invalid_range,
  invalid_probability,
  invalid_dimension,
  invalid_config,
  dimension_mismatch,
  non_square_matrix,
  degenerate_matrix,
  empty_batch,
  architecture_mismatch,
  shape_mismatch,
  non_finite_gradient,
  invalid_transition,
  insufficient_data,
  invalid_action,
  step_after_terminal,
  unknown_task,
  io_error,
};

const char* to_string(Errc code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace desqn
