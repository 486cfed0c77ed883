#include "affect/error.hpp"

namespace affect {

const char* errc_name(errc code) noexcept {
  switch (code) {
    case errc::missing_column: return "MissingColumn";
    case errc::non_monotone_timestamp: return "NonMonotoneTimestamp";
    case errc::non_finite_value: return "NonFiniteValue";
    case errc::empty_file: return "EmptyFile";
    case errc::ragged_row: return "RaggedRow";
    case errc::duplicate_segment_index: return "DuplicateSegmentIndex";
    case errc::gap_in_indices: return "GapInIndices";
    case errc::io_error: return "IoError";
    case errc::invalid_windowing: return "InvalidWindowing";
    case errc::count_mismatch: return "CountMismatch";
    case errc::too_few_recordings: return "TooFewRecordings";
    case errc::segment_out_of_range: return "SegmentOutOfRange";
    case errc::empty_training_set: return "EmptyTrainingSet";
    case errc::dimension_mismatch: return "DimensionMismatch";
    case errc::too_few_instances: return "TooFewInstances";
    case errc::invalid_model_file: return "InvalidModelFile";
    case errc::alignment_error: return "AlignmentError";
    case errc::label_mismatch: return "LabelMismatch";
    case errc::length_mismatch: return "LengthMismatch";
    case errc::plan_incomplete: return "PlanIncomplete";
    case errc::invalid_plan: return "InvalidPlan";
    case errc::missing_test_labels: return "MissingTestLabels";
    case errc::zero_variance: return "ZeroVariance";
    case errc::degenerate_denominator: return "DegenerateDenominator";
    case errc::invalid_argument: return "InvalidArgument";
  }
  return "UnknownError";
}

}  // namespace affect
