#include "affect/synth.hpp"

#include <cmath>
#include <random>

#include "affect/segmentation.hpp"

namespace affect::ingest {

void SynthConfig::validate() const {
  if (n_recordings == 0 || speech_dim == 0) raise(errc::invalid_argument, "counts must be positive");
  if (!(duration > 0) || !(frame_rate > 0)) raise(errc::invalid_argument, "duration and frame rate must be positive");
  if (noise_sd < 0) raise(errc::invalid_argument, "noise_sd must be >= 0");
  if (!(window > 0) || !(hop > 0) || hop > window)
    raise(errc::invalid_argument, "need window > 0 and 0 < hop <= window");
}

namespace {

// Deterministic draw helpers; distribution shapes are pinned here rather
// than through std::*_distribution, whose draw sequences vary by library.
struct Rng {
  std::mt19937_64 gen;

  explicit Rng(std::uint64_t seed) : gen(seed) {}

  double uniform() { return static_cast<double>(gen() >> 11) * 0x1.0p-53; }
  double range(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  std::uint64_t below(std::uint64_t n) { return gen() % n; }

  double normal() {
    // Box-Muller, fresh pair per call
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
  }
};

Recording generate_recording(Rng& rng, const std::string& id, const SynthConfig& config) {
  Recording rec;
  rec.recording_id = id;
  rec.frame_rate = config.frame_rate;
  const auto n_frames = static_cast<std::size_t>(std::llround(config.duration * config.frame_rate));
  rec.frames.reserve(n_frames);

  double x = rng.range(-0.7, 0.7);
  double y = rng.range(-0.7, 0.7);
  bool fixating = true;
  std::size_t frames_left = 4 + rng.below(14);  // dwell 0.13..0.6 s at 30 Hz
  double step_x = 0.0, step_y = 0.0;

  std::size_t blink_left = 0;
  std::size_t dropout_left = 0;

  for (std::size_t k = 0; k < n_frames; ++k) {
    if (fixating) {
      x += 0.004 * rng.normal();
      y += 0.004 * rng.normal();
    } else {
      x += step_x;
      y += step_y;
    }
    x = std::clamp(x, -0.9, 0.9);
    y = std::clamp(y, -0.9, 0.9);

    if (--frames_left == 0) {
      if (fixating) {
        const double tx = rng.range(-0.7, 0.7);
        const double ty = rng.range(-0.7, 0.7);
        const std::size_t saccade_frames = 2 + rng.below(4);
        step_x = (tx - x) / static_cast<double>(saccade_frames);
        step_y = (ty - y) / static_cast<double>(saccade_frames);
        fixating = false;
        frames_left = saccade_frames;
      } else {
        fixating = true;
        frames_left = 4 + rng.below(14);
      }
    }

    double openness;
    if (blink_left > 0) {
      --blink_left;
      openness = rng.range(0.0, 0.15);
    } else if (rng.uniform() < 0.02) {
      blink_left = 1 + rng.below(5);
      openness = rng.range(0.0, 0.15);
    } else {
      openness = rng.range(0.55, 1.0);
    }

    bool valid = true;
    if (dropout_left > 0) {
      --dropout_left;
      valid = false;
    } else if (rng.uniform() < 0.004) {
      dropout_left = rng.below(3);
      valid = false;
    }

    GazeFrame frame;
    frame.timestamp = static_cast<double>(k) / config.frame_rate;
    frame.gaze_x = x;
    frame.gaze_y = y;
    frame.eye_openness = openness;
    frame.valid = valid;
    rec.frames.push_back(frame);
  }
  return rec;
}

}  // namespace

double SynthLabelModel::arousal_from(const gaze::GazeFeatureVector& g,
                                     const std::vector<double>& s) const {
  const auto d = s.size();
  const double speech_signal = (s[0 % d] + s[1 % d] + s[2 % d]) / std::sqrt(3.0);
  const double gaze_signal =
      gaze_scale * (g[gaze::kAxisBlockX + gaze::kBlockMean] + g[gaze::kAxisBlockY + gaze::kBlockMean]);
  return speech_main_weight * speech_signal + gaze_cross_weight * gaze_signal;
}

double SynthLabelModel::valence_from(const gaze::GazeFeatureVector& g,
                                     const std::vector<double>& s) const {
  const auto d = s.size();
  const double speech_signal = s[3 % d];
  const double gaze_signal =
      gaze_scale * (g[gaze::kAxisBlockX + gaze::kBlockMean] - g[gaze::kAxisBlockY + gaze::kBlockMean]);
  return gaze_main_weight * gaze_signal + speech_cross_weight * speech_signal;
}

SynthCorpus synth_corpus(const SynthConfig& config) {
  config.validate();
  SynthCorpus corpus;
  Rng rng(config.seed);
  const gaze::GazeFeatureConfig feature_config;

  for (std::size_t r = 0; r < config.n_recordings; ++r) {
    char id[16];
    std::snprintf(id, sizeof(id), "rec%03zu", r);
    SynthRecording entry;
    entry.recording = generate_recording(rng, id, config);

    const auto segments = segmentation::make_windows(entry.recording.duration(), config.window,
                                                     config.hop, entry.recording.recording_id);
    entry.speech.modality = "speech";
    entry.speech.dimension = config.speech_dim;
    for (const auto& seg : segments) {
      FeatureRow row;
      row.segment_index = seg.index;
      row.values.reserve(config.speech_dim);
      for (std::size_t j = 0; j < config.speech_dim; ++j) row.values.push_back(rng.normal());

      const auto gaze_vec = gaze::extract_gaze_vector(entry.recording, seg, feature_config);
      LabelRow label;
      label.segment_index = seg.index;
      label.arousal = corpus.label_model.arousal_from(gaze_vec, row.values) +
                      config.noise_sd * rng.normal();
      label.valence = corpus.label_model.valence_from(gaze_vec, row.values) +
                      config.noise_sd * rng.normal();

      entry.speech.rows.push_back(std::move(row));
      entry.labels.rows.push_back(label);
    }
    corpus.recordings.push_back(std::move(entry));
  }
  return corpus;
}

}  // namespace affect::ingest
