#include "affect/gaze_features.hpp"

#include <algorithm>
#include <cmath>

namespace affect::gaze {

void GazeFeatureConfig::validate() const {
  if (!(closure_threshold > 0) || !(dispersion_threshold > 0) || !(min_fixation_duration > 0))
    raise(errc::invalid_argument, "gaze feature thresholds must be positive");
  if (zone_rows < 1 || zone_cols < 1)
    raise(errc::invalid_argument, "zone grid dimensions must be >= 1");
  if (!(zone_range_x.second > zone_range_x.first) || !(zone_range_y.second > zone_range_y.first))
    raise(errc::invalid_argument, "zone range must be a proper interval");
  if (!(psd_resolution > 0)) raise(errc::invalid_argument, "psd resolution must be positive");
  double prev_hi = -1.0;
  for (const auto& [lo, hi] : psd_bands) {
    if (!(lo > 0) || hi < lo || lo <= prev_hi)
      raise(errc::invalid_argument, "psd bands must be positive, ascending and non-overlapping");
    prev_hi = hi;
  }
}

std::vector<std::string> feature_column_names() {
  std::vector<std::string> names;
  names.reserve(kFeatureCount);
  for (std::size_t i = 0; i < kFeatureCount; ++i) {
    char buf[8];
    std::snprintf(buf, sizeof(buf), "gf%02zu", i);
    names.emplace_back(buf);
  }
  return names;
}

namespace {

double pop_mean(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

double pop_sd(const std::vector<double>& v, double mean) {
  if (v.size() < 2) return 0.0;
  double s = 0.0;
  for (double x : v) s += (x - mean) * (x - mean);
  return std::sqrt(s / static_cast<double>(v.size()));
}

// g1 skewness with the zero-variance guard shared by every run/coordinate
// statistic in the set.
double pop_skewness(const std::vector<double>& v, double mean) {
  if (v.size() < 2) return 0.0;
  double m2 = 0.0, m3 = 0.0;
  for (double x : v) {
    const double d = x - mean;
    m2 += d * d;
    m3 += d * d * d;
  }
  const auto n = static_cast<double>(v.size());
  m2 /= n;
  m3 /= n;
  if (m2 < 1e-12) return 0.0;
  return m3 / std::pow(m2, 1.5);
}

double distance_to(const ingest::GazeFrame& f, const std::pair<double, double>& ref) {
  return std::hypot(f.gaze_x - ref.first, f.gaze_y - ref.second);
}

// run lengths of maximal true-runs in a flag sequence
std::vector<double> run_lengths(const std::vector<bool>& flags) {
  std::vector<double> runs;
  std::size_t len = 0;
  for (bool f : flags) {
    if (f) {
      ++len;
    } else if (len > 0) {
      runs.push_back(static_cast<double>(len));
      len = 0;
    }
  }
  if (len > 0) runs.push_back(static_cast<double>(len));
  return runs;
}

}  // namespace

std::pair<double, double> approach_features(const std::vector<ingest::GazeFrame>& frames,
                                            double frame_rate, const GazeFeatureConfig& config) {
  if (frames.size() < 2 || !(frame_rate > 0)) return {0.0, 0.0};
  std::vector<bool> approaching(frames.size() - 1);
  double prev = distance_to(frames[0], config.reference_point);
  for (std::size_t t = 1; t < frames.size(); ++t) {
    const double d = distance_to(frames[t], config.reference_point);
    approaching[t - 1] = d < prev;
    prev = d;
  }
  std::size_t count = 0;
  for (bool f : approaching) count += f ? 1 : 0;
  const double ratio = static_cast<double>(count) / static_cast<double>(approaching.size());
  const auto runs = run_lengths(approaching);
  if (runs.empty()) return {ratio, 0.0};
  return {ratio, pop_mean(runs) * 1000.0 / frame_rate};
}

std::vector<Fixation> detect_fixations(const std::vector<ingest::GazeFrame>& frames,
                                       double frame_rate, const GazeFeatureConfig& config) {
  std::vector<Fixation> fixations;
  if (frames.empty() || !(frame_rate > 0)) return fixations;
  const double period = 1.0 / frame_rate;

  std::size_t i = 0;
  while (i < frames.size()) {
    double min_x = frames[i].gaze_x, max_x = min_x;
    double min_y = frames[i].gaze_y, max_y = min_y;
    std::size_t j = i;
    while (j + 1 < frames.size()) {
      const double nx = frames[j + 1].gaze_x;
      const double ny = frames[j + 1].gaze_y;
      const double disp = (std::max(max_x, nx) - std::min(min_x, nx)) +
                          (std::max(max_y, ny) - std::min(min_y, ny));
      if (disp > config.dispersion_threshold) break;
      min_x = std::min(min_x, nx);
      max_x = std::max(max_x, nx);
      min_y = std::min(min_y, ny);
      max_y = std::max(max_y, ny);
      ++j;
    }
    const double covered = frames[j].timestamp - frames[i].timestamp + period;
    if (covered >= config.min_fixation_duration) {
      Fixation fix;
      double sx = 0.0, sy = 0.0;
      for (std::size_t k = i; k <= j; ++k) {
        sx += frames[k].gaze_x;
        sy += frames[k].gaze_y;
      }
      const auto n = static_cast<double>(j - i + 1);
      fix.centroid_x = sx / n;
      fix.centroid_y = sy / n;
      fix.start = frames[i].timestamp;
      fix.end = frames[j].timestamp + period;
      fixations.push_back(fix);
    }
    i = j + 1;
  }
  return fixations;
}

std::pair<double, double> scan_path_features(const std::vector<Fixation>& fixations) {
  if (fixations.size() < 2) return {0.0, 0.0};
  std::vector<double> lengths;
  lengths.reserve(fixations.size() - 1);
  for (std::size_t k = 1; k < fixations.size(); ++k)
    lengths.push_back(std::hypot(fixations[k].centroid_x - fixations[k - 1].centroid_x,
                                 fixations[k].centroid_y - fixations[k - 1].centroid_y));
  const double mean = pop_mean(lengths);
  return {mean, pop_sd(lengths, mean)};
}

namespace {

double quantile_sorted(const std::vector<double>& sorted, double p) {
  const double h = (static_cast<double>(sorted.size()) - 1.0) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  if (lo + 1 >= sorted.size()) return sorted.back();
  const double frac = h - std::floor(h);
  return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

}  // namespace

CoordinateStats coordinate_stats(const std::vector<double>& values) {
  CoordinateStats stats;
  if (values.size() < 2) return stats;
  std::vector<double> sorted = values;
  std::sort(sorted.begin(), sorted.end());
  const double q1 = quantile_sorted(sorted, 0.25);
  const double q2 = quantile_sorted(sorted, 0.50);
  const double q3 = quantile_sorted(sorted, 0.75);
  stats.mean = pop_mean(values);
  stats.iqr_q1_q2 = q2 - q1;
  stats.iqr_q2_q3 = q3 - q2;
  stats.sd = pop_sd(values, stats.mean);
  stats.skewness = pop_skewness(values, stats.mean);
  return stats;
}

std::array<double, 5> psd_features(const std::vector<double>& values, double frame_rate,
                                   const GazeFeatureConfig& config) {
  std::array<double, 5> out{};
  const std::size_t n = values.size();
  if (n < 2 || !(frame_rate > 0)) return out;

  // pad length: smallest power of two reaching the bin resolution (never
  // shorter than the signal itself)
  std::size_t padded = 1;
  while (static_cast<double>(padded) < frame_rate / config.psd_resolution || padded < n) padded *= 2;

  const double mean = pop_mean(values);

  // One Goertzel pass per required bin; the padded tail is all zeros so the
  // recurrence only runs over the n real samples.
  auto bin_power = [&](std::size_t k) {
    const double w = 2.0 * M_PI * static_cast<double>(k) / static_cast<double>(padded);
    const double coeff = 2.0 * std::cos(w);
    double s_prev = 0.0, s_prev2 = 0.0;
    for (std::size_t t = 0; t < n; ++t) {
      const double s = (values[t] - mean) + coeff * s_prev - s_prev2;
      s_prev2 = s_prev;
      s_prev = s;
    }
    const double mag2 = s_prev * s_prev + s_prev2 * s_prev2 - coeff * s_prev * s_prev2;
    return mag2 / (static_cast<double>(n) * frame_rate);
  };

  const double bin_hz = frame_rate / static_cast<double>(padded);
  const std::size_t nyquist_bin = padded / 2;
  const std::size_t n_bands = std::min<std::size_t>(config.psd_bands.size(), out.size());
  for (std::size_t b = 0; b < n_bands; ++b) {
    const auto [lo, hi] = config.psd_bands[b];
    if (lo == hi) {
      auto k = static_cast<std::size_t>(std::llround(lo / bin_hz));
      k = std::min(k, nyquist_bin);
      out[b] = bin_power(k);
    } else {
      const double slack = 1e-12 * frame_rate;
      double sum = 0.0;
      for (std::size_t k = 0; k <= nyquist_bin; ++k) {
        const double f = static_cast<double>(k) * bin_hz;
        if (f > hi + slack) break;
        if (f >= lo - slack) sum += bin_power(k);
      }
      out[b] = sum;
    }
  }
  return out;
}

std::pair<double, double> zone_features(const std::vector<std::pair<double, double>>& points,
                                        Axis axis, const GazeFeatureConfig& config) {
  const std::size_t cells = config.zone_rows * config.zone_cols;
  std::vector<std::vector<double>> per_cell(cells);

  const double x_span = config.zone_range_x.second - config.zone_range_x.first;
  const double y_span = config.zone_range_y.second - config.zone_range_y.first;
  for (const auto& [x, y] : points) {
    auto col = static_cast<long long>(
        std::floor((x - config.zone_range_x.first) / x_span * static_cast<double>(config.zone_cols)));
    auto row = static_cast<long long>(
        std::floor((y - config.zone_range_y.first) / y_span * static_cast<double>(config.zone_rows)));
    col = std::clamp<long long>(col, 0, static_cast<long long>(config.zone_cols) - 1);
    row = std::clamp<long long>(row, 0, static_cast<long long>(config.zone_rows) - 1);
    const auto cell = static_cast<std::size_t>(row) * config.zone_cols + static_cast<std::size_t>(col);
    per_cell[cell].push_back(axis == Axis::x ? x : y);
  }

  std::vector<double> cell_sds;
  for (const auto& cell : per_cell)
    if (cell.size() >= 2) cell_sds.push_back(pop_sd(cell, pop_mean(cell)));

  if (cell_sds.empty()) return {0.0, 0.0};
  const double mean = pop_mean(cell_sds);
  return {mean, pop_sd(cell_sds, mean)};
}

ClosureStats closure_features(const std::vector<ingest::GazeFrame>& frames,
                              const GazeFeatureConfig& config) {
  ClosureStats stats;
  std::vector<bool> closed(frames.size());
  for (std::size_t t = 0; t < frames.size(); ++t)
    closed[t] = frames[t].eye_openness < config.closure_threshold;
  const auto runs = run_lengths(closed);
  if (runs.empty()) return stats;
  stats.mean_run = pop_mean(runs);
  stats.sd_run = pop_sd(runs, stats.mean_run);
  stats.skew_run = pop_skewness(runs, stats.mean_run);
  return stats;
}

GazeFeatureVector extract_gaze_vector(const ingest::Recording& recording,
                                      const segmentation::Segment& segment,
                                      const GazeFeatureConfig& config,
                                      const ingest::WarningSink& warn) {
  config.validate();
  if (segment.start < -1e-9 || segment.end > recording.duration() + 1e-9)
    raise(errc::segment_out_of_range,
          "segment [" + std::to_string(segment.start) + ", " + std::to_string(segment.end) +
              ") outside recording '" + recording.recording_id + "' of duration " +
              std::to_string(recording.duration()));

  std::vector<ingest::GazeFrame> frames;
  for (const auto& f : recording.frames)
    if (f.valid && f.timestamp >= segment.start && f.timestamp < segment.end) frames.push_back(f);

  GazeFeatureVector out{};
  if (frames.size() < 2) {
    if (warn)
      warn("segment " + std::to_string(segment.index) + " of recording '" + recording.recording_id +
           "' has fewer than 2 valid frames, emitting zeros");
    return out;
  }

  const double rate = recording.frame_rate;
  const auto [approach_ratio, approach_ms] = approach_features(frames, rate, config);
  out[kApproachRatio] = approach_ratio;
  out[kMeanApproachTimeMs] = approach_ms;

  const auto fixations = detect_fixations(frames, rate, config);
  const auto [scan_mean, scan_sd] = scan_path_features(fixations);
  out[kMeanScanPathLen] = scan_mean;
  out[kSdScanPathLen] = scan_sd;

  std::vector<double> xs, ys;
  std::vector<std::pair<double, double>> points;
  xs.reserve(frames.size());
  ys.reserve(frames.size());
  points.reserve(frames.size());
  for (const auto& f : frames) {
    xs.push_back(f.gaze_x);
    ys.push_back(f.gaze_y);
    points.emplace_back(f.gaze_x, f.gaze_y);
  }

  auto fill_axis = [&](std::size_t base, const std::vector<double>& vals, Axis axis) {
    const auto stats = coordinate_stats(vals);
    out[base + kBlockMean] = stats.mean;
    out[base + kBlockIqr12] = stats.iqr_q1_q2;
    out[base + kBlockIqr23] = stats.iqr_q2_q3;
    out[base + kBlockSd] = stats.sd;
    out[base + kBlockSkewness] = stats.skewness;
    const auto psd = psd_features(vals, rate, config);
    for (std::size_t b = 0; b < psd.size(); ++b) out[base + kBlockPsdBand1 + b] = psd[b];
    const auto [zone_mean, zone_sd] = zone_features(points, axis, config);
    out[base + kBlockZoneSdMean] = zone_mean;
    out[base + kBlockZoneSdSd] = zone_sd;
  };
  fill_axis(kAxisBlockX, xs, Axis::x);
  fill_axis(kAxisBlockY, ys, Axis::y);

  const auto closure = closure_features(frames, config);
  out[kMeanCloseRun] = closure.mean_run;
  out[kSdCloseRun] = closure.sd_run;
  out[kSkewCloseRun] = closure.skew_run;
  return out;
}

ingest::ModalityFeatureFile extract_recording_features(
    const ingest::Recording& recording, const std::vector<segmentation::Segment>& segments,
    const GazeFeatureConfig& config, const ingest::WarningSink& warn) {
  ingest::ModalityFeatureFile file;
  file.modality = "gaze";
  file.dimension = kFeatureCount;
  file.rows.reserve(segments.size());
  for (const auto& seg : segments) {
    const auto vec = extract_gaze_vector(recording, seg, config, warn);
    ingest::FeatureRow row;
    row.segment_index = seg.index;
    row.values.assign(vec.begin(), vec.end());
    file.rows.push_back(std::move(row));
  }
  return file;
}

}  // namespace affect::gaze
