#include "affect/corpus_io.hpp"

#include <algorithm>
#include <filesystem>

namespace fs = std::filesystem;

namespace affect::ingest {

namespace {

// 50/25/25 by recording order; every split gets at least one recording
// when there are at least three.
std::size_t split_of(std::size_t index, std::size_t total) {
  const std::size_t n_train = std::max<std::size_t>(1, total / 2);
  const std::size_t n_dev = std::max<std::size_t>(total >= 3 ? 1 : 0, total / 4);
  if (index < n_train) return 0;
  if (index < n_train + n_dev) return 1;
  return 2;
}

}  // namespace

void write_corpus_dir(const SynthCorpus& corpus, const std::string& root) {
  struct SplitAccumulator {
    ModalityFeatureFile speech;
    LabelFile labels;
  };
  SplitAccumulator acc[3];
  for (auto& s : acc) {
    s.speech.modality = "speech";
    s.speech.dimension = 0;
  }

  for (std::size_t s = 0; s < 3; ++s)
    fs::create_directories(fs::path(root) / kSplitDirs[s] / "gaze");

  for (std::size_t r = 0; r < corpus.recordings.size(); ++r) {
    const auto& entry = corpus.recordings[r];
    const std::size_t s = split_of(r, corpus.recordings.size());
    auto& out = acc[s];
    out.speech.dimension = entry.speech.dimension;

    const auto gaze_path =
        fs::path(root) / kSplitDirs[s] / "gaze" / (entry.recording.recording_id + ".csv");
    write_gaze_csv(entry.recording, gaze_path.string());

    // re-index into the split-global segment space
    for (const auto& row : entry.speech.rows) {
      FeatureRow global = row;
      global.segment_index = static_cast<long long>(out.speech.rows.size());
      out.speech.rows.push_back(std::move(global));
    }
    for (const auto& row : entry.labels.rows) {
      LabelRow global = row;
      global.segment_index = static_cast<long long>(out.labels.rows.size());
      out.labels.rows.push_back(global);
    }
  }

  for (std::size_t s = 0; s < 3; ++s) {
    const auto dir = fs::path(root) / kSplitDirs[s];
    write_feature_csv(acc[s].speech, (dir / "speech_features.csv").string());
    write_label_csv(acc[s].labels, (dir / "labels.csv").string());
  }
}

std::vector<std::string> list_csv_files(const std::string& dir) {
  if (!fs::is_directory(dir)) raise(errc::io_error, dir + " is not a directory");
  std::vector<std::string> paths;
  for (const auto& entry : fs::directory_iterator(dir))
    if (entry.is_regular_file() && entry.path().extension() == ".csv")
      paths.push_back(entry.path().string());
  std::sort(paths.begin(), paths.end());
  return paths;
}

LoadedSplit load_split(const std::string& split_dir, double window, double hop,
                       const gaze::GazeFeatureConfig& config, const WarningSink& warn) {
  const auto gaze_paths = list_csv_files((fs::path(split_dir) / "gaze").string());
  if (gaze_paths.empty()) raise(errc::empty_file, "no gaze recordings in " + split_dir);

  // Recording order (sorted paths) defines the global segment index space.
  ModalityFeatureFile gaze_features;
  gaze_features.modality = "gaze";
  gaze_features.dimension = gaze::kFeatureCount;
  std::vector<segmentation::Segment> segments;
  for (const auto& path : gaze_paths) {
    const auto recording = parse_gaze_csv(path, std::nullopt, warn);
    const auto windows =
        segmentation::make_windows(recording.duration(), window, hop, recording.recording_id, warn);
    const auto features = gaze::extract_recording_features(recording, windows, config, warn);
    for (std::size_t i = 0; i < windows.size(); ++i) {
      FeatureRow row = features.rows[i];
      row.segment_index = static_cast<long long>(gaze_features.rows.size());
      gaze_features.rows.push_back(std::move(row));
      segments.push_back(windows[i]);
    }
  }

  const auto labels = parse_label_csv((fs::path(split_dir) / "labels.csv").string());
  const auto speech =
      parse_feature_csv((fs::path(split_dir) / "speech_features.csv").string(), "speech");

  LoadedSplit split;
  split.gaze = segmentation::align(gaze_features, labels, segments);
  split.speech = segmentation::align(speech, labels, segments);
  return split;
}

std::map<std::string, fusion::ModalityDataset> load_corpus_dir(
    const std::string& root, double window, double hop, const gaze::GazeFeatureConfig& config,
    const WarningSink& warn) {
  fusion::ModalityDataset gaze_set, speech_set;
  gaze_set.modality = "gaze";
  speech_set.modality = "speech";

  for (std::size_t s = 0; s < 3; ++s) {
    auto split = load_split((fs::path(root) / kSplitDirs[s]).string(), window, hop, config, warn);
    auto assign = [&](fusion::ModalityDataset& dataset, std::vector<segmentation::LabeledInstance>& v) {
      if (s == 0) dataset.train = std::move(v);
      else if (s == 1) dataset.development = std::move(v);
      else dataset.test = std::move(v);
    };
    assign(gaze_set, split.gaze);
    assign(speech_set, split.speech);
  }

  std::map<std::string, fusion::ModalityDataset> datasets;
  datasets.emplace("gaze", std::move(gaze_set));
  datasets.emplace("speech", std::move(speech_set));
  return datasets;
}

}  // namespace affect::ingest
