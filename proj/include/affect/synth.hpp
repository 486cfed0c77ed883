#pragma once

#include <cstdint>

#include "affect/gaze_features.hpp"
#include "affect/ingest.hpp"

namespace affect::ingest {

// Synthetic corpus: a fixation/saccade gaze process with blink and dropout
// runs, pseudo-random speech feature vectors, and per-segment labels that
// are a fixed linear functional of a small subset of the true features plus
// Gaussian noise. Pure function of the config; identical configs give
// bit-identical corpora.
struct SynthConfig {
  std::uint64_t seed = 0;
  std::size_t n_recordings = 8;
  double duration = 30.0;    // seconds per recording
  double frame_rate = 30.0;  // Hz
  std::size_t speech_dim = 24;
  double noise_sd = 0.05;
  double window = 3.0;  // segmentation used for speech features and labels
  double hop = 2.0;

  void validate() const;
};

// The label functional. Arousal leans on speech, valence on gaze, so each
// modality is strongly informative for one dimension and mildly for the
// other; fusing both recovers more of either label than any single
// modality can. Speech indices are taken modulo the configured dimension.
struct SynthLabelModel {
  double speech_main_weight = 1.0;   // on the informative dimension
  double speech_cross_weight = 0.33; // on the other dimension
  double gaze_main_weight = 1.0;
  double gaze_cross_weight = 0.33;
  // Scale that brings the gaze mean-coordinate signals to roughly unit sd
  // under the generator's fixation process.
  double gaze_scale = 4.4;

  double arousal_from(const gaze::GazeFeatureVector& gaze_features,
                      const std::vector<double>& speech_features) const;
  double valence_from(const gaze::GazeFeatureVector& gaze_features,
                      const std::vector<double>& speech_features) const;
};

struct SynthRecording {
  Recording recording;
  ModalityFeatureFile speech;  // one row per segment, local segment_index
  LabelFile labels;            // aligned with speech rows
};

struct SynthCorpus {
  std::vector<SynthRecording> recordings;
  SynthLabelModel label_model;
};

SynthCorpus synth_corpus(const SynthConfig& config);

}  // namespace affect::ingest
