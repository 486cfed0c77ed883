#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "affect/ingest.hpp"
#include "affect/segmentation.hpp"

namespace affect::gaze {

// Configuration for the 31-feature gaze vector. Defaults assume gaze
// coordinates roughly in [-1, 1].
struct GazeFeatureConfig {
  std::pair<double, double> reference_point{0.0, 0.0};  // "approach" target
  double closure_threshold = 0.2;       // eye_openness below this counts as closed
  double dispersion_threshold = 0.05;   // I-DT (max_x-min_x)+(max_y-min_y) bound
  double min_fixation_duration = 0.10;  // seconds
  std::size_t zone_rows = 3;
  std::size_t zone_cols = 3;
  std::pair<double, double> zone_range_x{-1.0, 1.0};
  std::pair<double, double> zone_range_y{-1.0, 1.0};
  // Band edges in Hz; singleton bands (lo == hi) take the single nearest
  // periodogram bin, range bands sum every bin inside [lo, hi].
  std::vector<std::pair<double, double>> psd_bands{
      {0.011, 0.011}, {0.022, 0.022}, {0.033, 0.044}, {0.055, 0.066}, {0.077, 0.133}};
  double psd_resolution = 0.011;  // Hz; signal is zero-padded until rate/N <= this

  void validate() const;  // throws InvalidArgument
};

struct Fixation {
  double centroid_x = 0.0;
  double centroid_y = 0.0;
  double start = 0.0;  // seconds
  double end = 0.0;    // start + covered frame span, always > start
};

// Fixed output layout. Per-axis blocks repeat the same 12 statistics for x
// then y. A segment with fewer than 2 valid frames yields all zeros; a
// constant-gaze segment yields zeros everywhere except the two means.
inline constexpr std::size_t kFeatureCount = 31;
inline constexpr std::size_t kApproachRatio = 0;
inline constexpr std::size_t kMeanApproachTimeMs = 1;
inline constexpr std::size_t kMeanScanPathLen = 2;
inline constexpr std::size_t kSdScanPathLen = 3;
inline constexpr std::size_t kAxisBlockX = 4;
inline constexpr std::size_t kAxisBlockY = 16;
// offsets within an axis block:
inline constexpr std::size_t kBlockMean = 0;
inline constexpr std::size_t kBlockIqr12 = 1;
inline constexpr std::size_t kBlockIqr23 = 2;
inline constexpr std::size_t kBlockSd = 3;
inline constexpr std::size_t kBlockSkewness = 4;
inline constexpr std::size_t kBlockPsdBand1 = 5;  // ... through kBlockPsdBand1+4
inline constexpr std::size_t kBlockZoneSdMean = 10;
inline constexpr std::size_t kBlockZoneSdSd = 11;
inline constexpr std::size_t kMeanCloseRun = 28;
inline constexpr std::size_t kSdCloseRun = 29;
inline constexpr std::size_t kSkewCloseRun = 30;

using GazeFeatureVector = std::array<double, kFeatureCount>;

// Column names gf00..gf30 for emitted feature CSVs.
std::vector<std::string> feature_column_names();

// --- per-family primitives (valid, time-ordered frames of one segment) ---

// A frame approaches when its distance to the reference point drops below
// the previous frame's. Ratio over the n-1 transitions; mean maximal-run
// length converted to milliseconds at the given frame rate. (0, 0) with
// fewer than 2 frames or no approaching frame.
std::pair<double, double> approach_features(const std::vector<ingest::GazeFrame>& frames,
                                            double frame_rate, const GazeFeatureConfig& config);

// Dispersion-threshold identification: grow a window while
// (max_x - min_x) + (max_y - min_y) stays within the threshold, emit it as a
// fixation when it covers at least min_fixation_duration. A window of k
// frames covers (t_last - t_first) + 1/frame_rate seconds.
std::vector<Fixation> detect_fixations(const std::vector<ingest::GazeFrame>& frames,
                                       double frame_rate, const GazeFeatureConfig& config);

// Mean and population sd of distances between consecutive fixation
// centroids; (0, 0) with fewer than 2 fixations.
std::pair<double, double> scan_path_features(const std::vector<Fixation>& fixations);

struct CoordinateStats {
  double mean = 0.0;
  double iqr_q1_q2 = 0.0;  // Q2 - Q1
  double iqr_q2_q3 = 0.0;  // Q3 - Q2
  double sd = 0.0;         // population
  double skewness = 0.0;   // g1 = m3 / m2^1.5, 0 when m2 < 1e-12
};

// Quantiles by linear interpolation at rank (n-1)p over the sorted values.
// All zeros (mean included) with fewer than 2 values.
CoordinateStats coordinate_stats(const std::vector<double>& values);

// Mean-removed, zero-padded periodogram band powers; P[k] = |DFT[k]|^2 /
// (n_original * frame_rate) with N the smallest power of two reaching the
// configured resolution (and at least the sample count).
std::array<double, 5> psd_features(const std::vector<double>& values, double frame_rate,
                                   const GazeFeatureConfig& config);

// Mean and population sd of the per-cell population sds of the chosen
// axis's coordinates, over grid cells holding at least 2 samples.
enum class Axis { x, y };
std::pair<double, double> zone_features(const std::vector<std::pair<double, double>>& points,
                                        Axis axis, const GazeFeatureConfig& config);

// Mean/population sd/skewness of maximal closed-run lengths in frames,
// where closed means eye_openness < closure_threshold. Zeros with no runs.
struct ClosureStats {
  double mean_run = 0.0;
  double sd_run = 0.0;
  double skew_run = 0.0;
};
ClosureStats closure_features(const std::vector<ingest::GazeFrame>& frames,
                              const GazeFeatureConfig& config);

// Full vector for one segment: restricts to valid frames with timestamp in
// [segment.start, segment.end) and assembles the layout above. A segment
// with fewer than 2 valid frames yields all zeros plus a warning.
// Errors: SegmentOutOfRange when the segment exceeds the recording span.
GazeFeatureVector extract_gaze_vector(const ingest::Recording& recording,
                                      const segmentation::Segment& segment,
                                      const GazeFeatureConfig& config = {},
                                      const ingest::WarningSink& warn = nullptr);

// Featurizes every segment of a recording into the ingest feature format.
ingest::ModalityFeatureFile extract_recording_features(
    const ingest::Recording& recording, const std::vector<segmentation::Segment>& segments,
    const GazeFeatureConfig& config = {}, const ingest::WarningSink& warn = nullptr);

}  // namespace affect::gaze
