#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace affect {

// Typed error codes surfaced by parsers, the pipeline and the solvers.
enum class errc {
  // ingest
  missing_column,
  non_monotone_timestamp,
  non_finite_value,
  empty_file,
  ragged_row,
  duplicate_segment_index,
  gap_in_indices,
  io_error,
  // segmentation
  invalid_windowing,
  count_mismatch,
  too_few_recordings,
  segment_out_of_range,
  // svr
  empty_training_set,
  dimension_mismatch,
  too_few_instances,
  invalid_model_file,
  // fusion
  alignment_error,
  label_mismatch,
  length_mismatch,
  plan_incomplete,
  invalid_plan,
  missing_test_labels,
  // metrics
  zero_variance,
  degenerate_denominator,
  // generic
  invalid_argument,
};

const char* errc_name(errc code) noexcept;

// Single exception type carrying a typed code plus optional row context
// (1-based data row for file parsers, 0 when not applicable).
class Error : public std::runtime_error {
public:
  Error(errc code, std::string message, std::size_t row = 0)
      : std::runtime_error(std::string(errc_name(code)) + ": " + message),
        code_(code),
        row_(row) {}

  errc code() const noexcept { return code_; }
  std::size_t row() const noexcept { return row_; }

private:
  errc code_;
  std::size_t row_;
};

[[noreturn]] inline void raise(errc code, std::string message, std::size_t row = 0) {
  throw Error(code, std::move(message), row);
}

}  // namespace affect
