#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "affect/error.hpp"

namespace affect::ingest {

// Warning channel for recoverable oddities (frame-rate mismatch, degenerate
// segments, ...). Null sink discards.
using WarningSink = std::function<void(const std::string&)>;

// One timestamped gaze sample. Coordinates are dimensionless; a corpus only
// has to be internally consistent about units. When valid is false the
// numeric fields may hold anything and the frame is excluded from all
// feature statistics downstream.
struct GazeFrame {
  double timestamp = 0.0;  // seconds, strictly increasing within a recording
  double gaze_x = 0.0;
  double gaze_y = 0.0;
  double eye_openness = 1.0;  // >= 0, larger = more open
  bool valid = true;
};

struct Recording {
  std::string recording_id;
  double frame_rate = 0.0;  // Hz
  std::vector<GazeFrame> frames;

  // Covered time span: last timestamp minus first plus one frame period,
  // so a k-frame recording sampled at rate f spans k/f seconds.
  double duration() const;
};

// Per-segment feature matrix for one modality ("speech", "gaze", ...).
struct FeatureRow {
  long long segment_index = 0;
  std::vector<double> values;
};

struct ModalityFeatureFile {
  std::string modality;
  std::size_t dimension = 0;
  std::vector<FeatureRow> rows;  // sorted by segment_index, contiguous from 0
};

struct LabelRow {
  long long segment_index = 0;
  double arousal = 0.0;
  double valence = 0.0;
};

struct LabelFile {
  std::vector<LabelRow> rows;  // contiguous segment_index from 0
};

// Gaze CSV: header `timestamp,gaze_x,gaze_y,eye_openness,valid`, valid in
// {0,1}. Column order is free, extra columns are ignored. When no declared
// frame rate is given it is inferred as 1 / median inter-frame interval;
// a declared rate more than 10% off the median only warns.
// Errors: MissingColumn, NonMonotoneTimestamp (with data row number),
// NonFiniteValue, EmptyFile.
Recording parse_gaze_csv(const std::string& path,
                         std::optional<double> declared_frame_rate = std::nullopt,
                         const WarningSink& warn = nullptr);

// Feature CSV: header `segment_index,<name0>,...,<name{d-1}>`. Rows are
// returned sorted by segment_index. Errors: RaggedRow,
// DuplicateSegmentIndex, GapInIndices, NonFiniteValue, MissingColumn.
ModalityFeatureFile parse_feature_csv(const std::string& path, const std::string& modality);

// Label CSV: header `segment_index,arousal,valence`.
// Errors: GapInIndices, DuplicateSegmentIndex, NonFiniteValue, RaggedRow.
LabelFile parse_label_csv(const std::string& path);

// Writers. Round trip through the matching parser is exact field-for-field.
void write_gaze_csv(const Recording& recording, const std::string& path);
void write_feature_csv(const ModalityFeatureFile& file, const std::string& path,
                       const std::vector<std::string>& column_names = {});
void write_label_csv(const LabelFile& file, const std::string& path);

}  // namespace affect::ingest
