#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "affect/ingest.hpp"

namespace affect::segmentation {

// One analysis window. Segment k of a recording covers
// [k*hop, k*hop + window); the default scheme is a 3 s window with a 1 s
// overlap between neighbours, i.e. hop = 2 s.
struct Segment {
  std::string recording_id;
  long long index = 0;  // ordinal within the recording, from 0
  double start = 0.0;   // seconds
  double end = 0.0;
};

struct LabeledInstance {
  Segment segment;
  std::vector<double> features;
  double arousal = 0.0;
  double valence = 0.0;
};

// Segments [k*hop, k*hop + window) for k = 0 .. floor((duration-window)/hop).
// Returns an empty list (and warns) when duration < window.
// Errors: InvalidWindowing unless window > 0 and 0 < hop <= window.
std::vector<Segment> make_windows(double recording_duration, double window, double hop,
                                  const std::string& recording_id = "",
                                  const ingest::WarningSink& warn = nullptr);

// Pairs feature row i with label row i. Counts must match exactly.
// Errors: CountMismatch(features=m, labels=n).
std::vector<LabeledInstance> align(const ingest::ModalityFeatureFile& features,
                                   const ingest::LabelFile& labels);

// Same, but stamps each instance with its segment identity (used when the
// global row order spans several recordings).
std::vector<LabeledInstance> align(const ingest::ModalityFeatureFile& features,
                                   const ingest::LabelFile& labels,
                                   const std::vector<Segment>& segments);

// Keeps instances with |valence| > tolerance, order preserved.
std::vector<LabeledInstance> filter_zero_valence(const std::vector<LabeledInstance>& instances,
                                                 double tolerance = 1e-9);

// Recording-level partition: distinct ids in first-appearance order are
// shuffled with a seeded generator and the first ceil(fraction * n) of them
// (clamped to [1, n-1]) become the training side.
struct RecordingPartition {
  std::vector<std::string> train_ids;
  std::vector<std::string> validation_ids;
};

RecordingPartition partition_recordings(const std::vector<std::string>& recording_ids,
                                        double fraction, std::uint64_t seed);

// 66/34-style split of instances at recording granularity; no recording_id
// straddles the boundary. Errors: TooFewRecordings with fewer than 2
// distinct recordings.
struct TrainValidationSplit {
  std::vector<LabeledInstance> train;
  std::vector<LabeledInstance> validation;
};

TrainValidationSplit split_train_validation(const std::vector<LabeledInstance>& instances,
                                            double fraction, std::uint64_t seed);

}  // namespace affect::segmentation
