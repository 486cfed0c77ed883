#pragma once

#include <string>
#include <vector>

#include "affect/fusion.hpp"
#include "affect/gaze_features.hpp"
#include "affect/synth.hpp"

namespace affect::ingest {

// On-disk corpus layout, one directory per split:
//   <root>/{train,dev,test}/gaze/<recording_id>.csv
//   <root>/{train,dev,test}/speech_features.csv
//   <root>/{train,dev,test}/labels.csv
// Speech features and labels are corpus-wide per split, indexed by a global
// segment_index that runs over recordings in sorted recording-id order.
inline constexpr const char* kSplitDirs[3] = {"train", "dev", "test"};

// Writes a synthetic corpus, recordings assigned to train/dev/test in
// 50/25/25 proportion by recording order.
void write_corpus_dir(const SynthCorpus& corpus, const std::string& root);

// One split loaded as aligned per-modality instance lists. Gaze features
// are extracted on the fly with the given windowing; the recording order of
// the gaze directory defines the global segment index mapping shared with
// the speech and label files.
struct LoadedSplit {
  std::vector<segmentation::LabeledInstance> gaze;
  std::vector<segmentation::LabeledInstance> speech;
};

LoadedSplit load_split(const std::string& split_dir, double window, double hop,
                       const gaze::GazeFeatureConfig& config = {},
                       const WarningSink& warn = nullptr);

// Full three-split load into run_experiment's dataset map ("gaze","speech").
std::map<std::string, fusion::ModalityDataset> load_corpus_dir(
    const std::string& root, double window, double hop,
    const gaze::GazeFeatureConfig& config = {}, const WarningSink& warn = nullptr);

// Sorted *.csv paths of a directory. Errors: IoError.
std::vector<std::string> list_csv_files(const std::string& dir);

}  // namespace affect::ingest
