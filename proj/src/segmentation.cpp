#include "affect/segmentation.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <set>
#include <unordered_set>

namespace affect::segmentation {

std::vector<Segment> make_windows(double recording_duration, double window, double hop,
                                  const std::string& recording_id,
                                  const ingest::WarningSink& warn) {
  if (!(window > 0.0) || !(hop > 0.0) || hop > window || !std::isfinite(recording_duration) ||
      !std::isfinite(window) || !std::isfinite(hop))
    raise(errc::invalid_windowing,
          "need window > 0 and 0 < hop <= window (window=" + std::to_string(window) +
              ", hop=" + std::to_string(hop) + ")");

  std::vector<Segment> out;
  if (recording_duration < window) {
    if (warn && recording_duration > 0.0)
      warn("recording '" + recording_id + "' shorter than one window (" +
           std::to_string(recording_duration) + " s < " + std::to_string(window) +
           " s), no segments emitted");
    return out;
  }
  // 1e-9 slack rescues durations that land on a window boundary up to
  // floating-point rounding (e.g. timestamps accumulated as k/rate).
  const auto count = static_cast<long long>(std::floor((recording_duration - window) / hop + 1e-9)) + 1;
  out.reserve(static_cast<std::size_t>(count));
  for (long long k = 0; k < count; ++k) {
    Segment s;
    s.recording_id = recording_id;
    s.index = k;
    s.start = static_cast<double>(k) * hop;
    s.end = s.start + window;
    out.push_back(std::move(s));
  }
  return out;
}

std::vector<LabeledInstance> align(const ingest::ModalityFeatureFile& features,
                                   const ingest::LabelFile& labels) {
  return align(features, labels, {});
}

std::vector<LabeledInstance> align(const ingest::ModalityFeatureFile& features,
                                   const ingest::LabelFile& labels,
                                   const std::vector<Segment>& segments) {
  if (features.rows.size() != labels.rows.size())
    raise(errc::count_mismatch, "features=" + std::to_string(features.rows.size()) +
                                    ", labels=" + std::to_string(labels.rows.size()));
  if (!segments.empty() && segments.size() != features.rows.size())
    raise(errc::count_mismatch, "segments=" + std::to_string(segments.size()) +
                                    ", features=" + std::to_string(features.rows.size()));

  std::vector<LabeledInstance> out;
  out.reserve(features.rows.size());
  for (std::size_t i = 0; i < features.rows.size(); ++i) {
    LabeledInstance inst;
    if (!segments.empty()) {
      inst.segment = segments[i];
    } else {
      inst.segment.index = static_cast<long long>(i);
    }
    inst.features = features.rows[i].values;
    inst.arousal = labels.rows[i].arousal;
    inst.valence = labels.rows[i].valence;
    out.push_back(std::move(inst));
  }
  return out;
}

std::vector<LabeledInstance> filter_zero_valence(const std::vector<LabeledInstance>& instances,
                                                 double tolerance) {
  if (tolerance < 0.0) raise(errc::invalid_argument, "tolerance must be >= 0");
  std::vector<LabeledInstance> out;
  out.reserve(instances.size());
  for (const auto& inst : instances)
    if (std::abs(inst.valence) > tolerance) out.push_back(inst);
  return out;
}

namespace {

// Fisher-Yates with explicit modulo draws; std::shuffle's draw sequence is
// not pinned by the standard and splits must be reproducible everywhere.
void seeded_shuffle(std::vector<std::string>& ids, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  for (std::size_t i = ids.size(); i > 1; --i) {
    const auto j = static_cast<std::size_t>(rng() % i);
    std::swap(ids[i - 1], ids[j]);
  }
}

}  // namespace

RecordingPartition partition_recordings(const std::vector<std::string>& recording_ids,
                                        double fraction, std::uint64_t seed) {
  if (!(fraction > 0.0) || !(fraction < 1.0))
    raise(errc::invalid_argument, "fraction must be in (0,1)");
  if (recording_ids.size() < 2)
    raise(errc::too_few_recordings,
          "need at least 2 recordings, got " + std::to_string(recording_ids.size()));

  // Sorting first makes the partition a function of the id set and seed,
  // independent of instance presentation order.
  std::vector<std::string> ids = recording_ids;
  std::sort(ids.begin(), ids.end());
  seeded_shuffle(ids, seed);

  const auto n = static_cast<double>(ids.size());
  // The 1e-9 backs out fp noise so fraction 0.66 of 100 recordings gives
  // exactly 66; clamped so both sides stay non-empty.
  auto k = static_cast<std::size_t>(std::ceil(fraction * n - 1e-9));
  k = std::min(std::max<std::size_t>(k, 1), ids.size() - 1);

  RecordingPartition part;
  part.train_ids.assign(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(k));
  part.validation_ids.assign(ids.begin() + static_cast<std::ptrdiff_t>(k), ids.end());
  return part;
}

TrainValidationSplit split_train_validation(const std::vector<LabeledInstance>& instances,
                                            double fraction, std::uint64_t seed) {
  std::vector<std::string> ids;
  std::set<std::string> seen;
  for (const auto& inst : instances)
    if (seen.insert(inst.segment.recording_id).second) ids.push_back(inst.segment.recording_id);

  auto part = partition_recordings(ids, fraction, seed);
  std::unordered_set<std::string> train_set(part.train_ids.begin(), part.train_ids.end());

  TrainValidationSplit split;
  for (const auto& inst : instances) {
    if (train_set.count(inst.segment.recording_id))
      split.train.push_back(inst);
    else
      split.validation.push_back(inst);
  }
  return split;
}

}  // namespace affect::segmentation
