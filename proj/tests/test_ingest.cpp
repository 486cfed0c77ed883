#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "affect/gaze_features.hpp"
#include "affect/ingest.hpp"
#include "affect/metrics.hpp"
#include "affect/segmentation.hpp"
#include "affect/synth.hpp"
#include "oracles.hpp"

using namespace affect;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("affect_ingest_test_" + std::to_string(::getpid()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string file(const std::string& name) const { return (path / name).string(); }
};

std::string write_file(const TempDir& dir, const std::string& name, const std::string& content) {
  const auto path = dir.file(name);
  std::ofstream out(path, std::ios::binary);
  out << content;
  return path;
}

}  // namespace

TEST_CASE("gaze csv: well-formed rows") {
  TempDir dir;
  const auto path = write_file(dir, "rec.csv",
                               "timestamp,gaze_x,gaze_y,eye_openness,valid\n"
                               "0.0,0.1,0.2,0.9,1\n"
                               "0.033,0.11,0.19,0.8,1\n"
                               "0.066,0.12,0.18,0.85,0\n");
  const auto rec = ingest::parse_gaze_csv(path);
  REQUIRE(rec.frames.size() == 3);
  CHECK(rec.recording_id == "rec");
  CHECK(rec.frames[0].gaze_x == doctest::Approx(0.1));
  CHECK(rec.frames[2].valid == false);
  CHECK(rec.frame_rate == doctest::Approx(1.0 / 0.033).epsilon(1e-6));
}

TEST_CASE("gaze csv: non-monotone timestamp reports the row") {
  TempDir dir;
  const auto path = write_file(dir, "rec.csv",
                               "timestamp,gaze_x,gaze_y,eye_openness,valid\n"
                               "0.0,0,0,1,1\n"
                               "0.0,0,0,1,1\n");
  try {
    ingest::parse_gaze_csv(path);
    FAIL("expected NonMonotoneTimestamp");
  } catch (const Error& e) {
    CHECK(e.code() == errc::non_monotone_timestamp);
    CHECK(e.row() == 2);
  }
}

TEST_CASE("gaze csv: header only, missing column, non-finite") {
  TempDir dir;
  const auto header_only =
      write_file(dir, "empty.csv", "timestamp,gaze_x,gaze_y,eye_openness,valid\n");
  CHECK_THROWS_AS(ingest::parse_gaze_csv(header_only), Error);
  try {
    ingest::parse_gaze_csv(header_only);
  } catch (const Error& e) {
    CHECK(e.code() == errc::empty_file);
  }

  const auto missing = write_file(dir, "missing.csv", "timestamp,gaze_x,gaze_y,valid\n0,0,0,1\n");
  try {
    ingest::parse_gaze_csv(missing);
    FAIL("expected MissingColumn");
  } catch (const Error& e) {
    CHECK(e.code() == errc::missing_column);
  }

  const auto nan_row = write_file(dir, "nan.csv",
                                  "timestamp,gaze_x,gaze_y,eye_openness,valid\n0,nan,0,1,1\n");
  try {
    ingest::parse_gaze_csv(nan_row);
    FAIL("expected NonFiniteValue");
  } catch (const Error& e) {
    CHECK(e.code() == errc::non_finite_value);
  }
}

TEST_CASE("gaze csv: declared frame rate off the median warns") {
  TempDir dir;
  std::string content = "timestamp,gaze_x,gaze_y,eye_openness,valid\n";
  for (int i = 0; i < 30; ++i)
    content += std::to_string(i / 30.0) + ",0,0,1,1\n";
  const auto path = write_file(dir, "rec.csv", content);

  int warnings = 0;
  auto rec = ingest::parse_gaze_csv(path, 60.0, [&](const std::string&) { ++warnings; });
  CHECK(rec.frame_rate == 60.0);
  CHECK(warnings == 1);

  warnings = 0;
  rec = ingest::parse_gaze_csv(path, 30.0, [&](const std::string&) { ++warnings; });
  CHECK(warnings == 0);
}

TEST_CASE("feature csv: shape and typed errors") {
  TempDir dir;
  std::string good = "segment_index";
  for (int c = 0; c < 31; ++c) good += ",f" + std::to_string(c);
  good += "\n";
  for (int r = 0; r < 4; ++r) {
    good += std::to_string(r);
    for (int c = 0; c < 31; ++c) good += "," + std::to_string(0.1 * c);
    good += "\n";
  }
  const auto file = ingest::parse_feature_csv(write_file(dir, "good.csv", good), "speech");
  CHECK(file.dimension == 31);
  CHECK(file.rows.size() == 4);
  CHECK(file.modality == "speech");

  const auto ragged =
      write_file(dir, "ragged.csv", "segment_index,f0,f1\n0,1,2\n1,3\n");
  try {
    ingest::parse_feature_csv(ragged, "m");
    FAIL("expected RaggedRow");
  } catch (const Error& e) {
    CHECK(e.code() == errc::ragged_row);
  }

  const auto dup = write_file(dir, "dup.csv", "segment_index,f0\n0,1\n2,2\n2,3\n");
  try {
    ingest::parse_feature_csv(dup, "m");
    FAIL("expected DuplicateSegmentIndex");
  } catch (const Error& e) {
    CHECK(e.code() == errc::duplicate_segment_index);
  }

  const auto gap = write_file(dir, "gap.csv", "segment_index,f0\n0,1\n2,2\n");
  try {
    ingest::parse_feature_csv(gap, "m");
    FAIL("expected GapInIndices");
  } catch (const Error& e) {
    CHECK(e.code() == errc::gap_in_indices);
  }

  // rows sorted by segment_index
  const auto shuffled = write_file(dir, "shuffled.csv", "segment_index,f0\n1,10\n0,20\n");
  const auto sorted = ingest::parse_feature_csv(shuffled, "m");
  CHECK(sorted.rows[0].values[0] == 20.0);
  CHECK(sorted.rows[1].values[0] == 10.0);
}

TEST_CASE("label csv: basics and typed errors") {
  TempDir dir;
  const auto good = write_file(dir, "l.csv", "segment_index,arousal,valence\n0,0.1,-0.2\n1,0.0,0.3\n");
  const auto labels = ingest::parse_label_csv(good);
  REQUIRE(labels.rows.size() == 2);
  CHECK(labels.rows[0].valence == -0.2);

  const auto gap = write_file(dir, "gap.csv", "segment_index,arousal,valence\n0,1,1\n2,1,1\n");
  try {
    ingest::parse_label_csv(gap);
    FAIL("expected GapInIndices");
  } catch (const Error& e) {
    CHECK(e.code() == errc::gap_in_indices);
  }

  const auto nan_row = write_file(dir, "nan.csv", "segment_index,arousal,valence\n0,nan,1\n");
  try {
    ingest::parse_label_csv(nan_row);
    FAIL("expected NonFiniteValue");
  } catch (const Error& e) {
    CHECK(e.code() == errc::non_finite_value);
  }
}

TEST_CASE("round trip: write then parse reproduces files field-for-field") {
  TempDir dir;
  oracles::TestRng rng(77);

  for (int trial = 0; trial < 40; ++trial) {
    ingest::Recording rec;
    rec.recording_id = "rt";
    rec.frame_rate = rng.range(10, 120);
    double t = rng.range(0, 5);
    const int n = 2 + static_cast<int>(rng.below(40));
    for (int i = 0; i < n; ++i) {
      ingest::GazeFrame f;
      f.timestamp = t;
      t += rng.range(1e-4, 0.2);
      f.gaze_x = rng.normal() * std::pow(10.0, rng.range(-8, 6));
      f.gaze_y = rng.normal();
      f.eye_openness = rng.range(0, 2);
      f.valid = rng.uniform() < 0.9;
      rec.frames.push_back(f);
    }
    const auto path = dir.file("rt.csv");
    ingest::write_gaze_csv(rec, path);
    const auto back = ingest::parse_gaze_csv(path, rec.frame_rate);
    REQUIRE(back.frames.size() == rec.frames.size());
    for (std::size_t i = 0; i < rec.frames.size(); ++i) {
      CHECK(back.frames[i].timestamp == rec.frames[i].timestamp);
      CHECK(back.frames[i].gaze_x == rec.frames[i].gaze_x);
      CHECK(back.frames[i].gaze_y == rec.frames[i].gaze_y);
      CHECK(back.frames[i].eye_openness == rec.frames[i].eye_openness);
      CHECK(back.frames[i].valid == rec.frames[i].valid);
    }
  }

  for (int trial = 0; trial < 40; ++trial) {
    ingest::ModalityFeatureFile file;
    file.modality = "m";
    file.dimension = 1 + rng.below(8);
    const int rows = static_cast<int>(rng.below(12));
    for (int r = 0; r < rows; ++r) {
      ingest::FeatureRow row;
      row.segment_index = r;
      for (std::size_t c = 0; c < file.dimension; ++c)
        row.values.push_back(rng.normal() * std::pow(10.0, rng.range(-12, 12)));
      file.rows.push_back(std::move(row));
    }
    const auto path = dir.file("ff.csv");
    ingest::write_feature_csv(file, path);
    const auto back = ingest::parse_feature_csv(path, "m");
    CHECK(back.dimension == file.dimension);
    REQUIRE(back.rows.size() == file.rows.size());
    for (std::size_t r = 0; r < file.rows.size(); ++r) {
      CHECK(back.rows[r].segment_index == file.rows[r].segment_index);
      for (std::size_t c = 0; c < file.dimension; ++c)
        CHECK(back.rows[r].values[c] == file.rows[r].values[c]);
    }

    ingest::LabelFile labels;
    for (int r = 0; r < rows; ++r)
      labels.rows.push_back({r, rng.normal(), rng.normal()});
    const auto lpath = dir.file("ll.csv");
    ingest::write_label_csv(labels, lpath);
    const auto lback = ingest::parse_label_csv(lpath);
    REQUIRE(lback.rows.size() == labels.rows.size());
    for (std::size_t r = 0; r < labels.rows.size(); ++r) {
      CHECK(lback.rows[r].arousal == labels.rows[r].arousal);
      CHECK(lback.rows[r].valence == labels.rows[r].valence);
    }
  }
}

TEST_CASE("parsers survive arbitrary bytes with typed errors only") {
  TempDir dir;
  oracles::TestRng rng(99);
  for (int trial = 0; trial < 300; ++trial) {
    std::string blob;
    const int len = static_cast<int>(rng.below(400));
    for (int i = 0; i < len; ++i) {
      // mostly printable, sprinkled with commas/newlines/junk
      const double roll = rng.uniform();
      if (roll < 0.15) blob += ',';
      else if (roll < 0.3) blob += '\n';
      else if (roll < 0.4) blob += static_cast<char>(rng.below(256));
      else blob += static_cast<char>('0' + rng.below(75));
    }
    const auto path = write_file(dir, "fuzz.csv", blob);
    try {
      (void)ingest::parse_gaze_csv(path);
    } catch (const Error&) {
    }
    try {
      (void)ingest::parse_feature_csv(path, "m");
    } catch (const Error&) {
    }
    try {
      (void)ingest::parse_label_csv(path);
    } catch (const Error&) {
    }
  }
}

TEST_CASE("synth: identical seed gives identical corpora") {
  ingest::SynthConfig config;
  config.seed = 7;
  config.n_recordings = 3;
  config.duration = 9;
  const auto a = ingest::synth_corpus(config);
  const auto b = ingest::synth_corpus(config);
  REQUIRE(a.recordings.size() == b.recordings.size());
  for (std::size_t r = 0; r < a.recordings.size(); ++r) {
    const auto& ra = a.recordings[r];
    const auto& rb = b.recordings[r];
    REQUIRE(ra.recording.frames.size() == rb.recording.frames.size());
    for (std::size_t i = 0; i < ra.recording.frames.size(); ++i) {
      CHECK(ra.recording.frames[i].gaze_x == rb.recording.frames[i].gaze_x);
      CHECK(ra.recording.frames[i].eye_openness == rb.recording.frames[i].eye_openness);
      CHECK(ra.recording.frames[i].valid == rb.recording.frames[i].valid);
    }
    REQUIRE(ra.labels.rows.size() == rb.labels.rows.size());
    for (std::size_t i = 0; i < ra.labels.rows.size(); ++i) {
      CHECK(ra.labels.rows[i].arousal == rb.labels.rows[i].arousal);
      CHECK(ra.labels.rows[i].valence == rb.labels.rows[i].valence);
    }
  }

  config.seed = 8;
  const auto c = ingest::synth_corpus(config);
  bool any_difference = false;
  for (std::size_t i = 0; i < c.recordings[0].recording.frames.size(); ++i)
    any_difference |= c.recordings[0].recording.frames[i].gaze_x !=
                      a.recordings[0].recording.frames[i].gaze_x;
  CHECK(any_difference);
}

TEST_CASE("synth: zero noise makes labels the exact linear functional") {
  ingest::SynthConfig config;
  config.seed = 3;
  config.n_recordings = 2;
  config.duration = 9;
  config.noise_sd = 0.0;
  const auto corpus = ingest::synth_corpus(config);

  metrics::EvaluationPair oracle_fit;
  for (const auto& entry : corpus.recordings) {
    const auto segments =
        segmentation::make_windows(entry.recording.duration(), config.window, config.hop,
                                   entry.recording.recording_id);
    REQUIRE(segments.size() == entry.labels.rows.size());
    for (std::size_t i = 0; i < segments.size(); ++i) {
      const auto gaze_vec = gaze::extract_gaze_vector(entry.recording, segments[i]);
      const auto& speech = entry.speech.rows[i].values;
      CHECK(entry.labels.rows[i].arousal == corpus.label_model.arousal_from(gaze_vec, speech));
      CHECK(entry.labels.rows[i].valence == corpus.label_model.valence_from(gaze_vec, speech));
      oracle_fit.predictions.push_back(corpus.label_model.arousal_from(gaze_vec, speech));
      oracle_fit.ground_truth.push_back(entry.labels.rows[i].arousal);
    }
  }
  // an oracle linear model therefore scores r = 1 exactly
  CHECK(metrics::pearson(oracle_fit) == 1.0);
}

TEST_CASE("synth: 7 s recordings with 3 s window and 2 s hop give 3 label rows") {
  ingest::SynthConfig config;
  config.seed = 1;
  config.n_recordings = 2;
  config.duration = 7;
  const auto corpus = ingest::synth_corpus(config);
  for (const auto& entry : corpus.recordings) CHECK(entry.labels.rows.size() == 3);
}
