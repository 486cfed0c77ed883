// affect: batch pipeline for bimodal continuous affect prediction.
// Subcommands: synth, extract, train, predict, fuse, evaluate, experiment.
// Exit codes: 0 success, 1 usage error, 2 input error, 3 pipeline error.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "affect/corpus_io.hpp"
#include "affect/csv.hpp"
#include "affect/fusion.hpp"
#include "affect/gaze_features.hpp"
#include "affect/metrics.hpp"
#include "affect/svr.hpp"
#include "affect/synth.hpp"

namespace fs = std::filesystem;
using namespace affect;

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitInput = 2;
constexpr int kExitPipeline = 3;

int exit_code_for(const Error& e) {
  switch (e.code()) {
    case errc::missing_column:
    case errc::non_monotone_timestamp:
    case errc::non_finite_value:
    case errc::empty_file:
    case errc::ragged_row:
    case errc::duplicate_segment_index:
    case errc::gap_in_indices:
    case errc::io_error:
    case errc::invalid_model_file:
      return kExitInput;
    default:
      return kExitPipeline;
  }
}

struct GlobalOptions {
  std::uint64_t seed = 0;
  double window = 3.0;
  double overlap = 1.0;
  int verbose = 0;
  gaze::GazeFeatureConfig gaze_config;

  double hop() const { return window - overlap; }

  ingest::WarningSink warn_sink() const {
    return [](const std::string& message) { std::cerr << "warning: " << message << '\n'; };
  }
};

svr::Target parse_target(const std::string& value) {
  if (value == "arousal") return svr::Target::arousal;
  if (value == "valence") return svr::Target::valence;
  raise(errc::invalid_argument, "target must be arousal or valence");
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) raise(errc::io_error, "cannot write " + path);
  return out;
}

void write_predictions_csv(const std::vector<double>& predictions, const std::string& path) {
  auto out = open_out(path);
  out << "segment_index,prediction\n";
  for (std::size_t i = 0; i < predictions.size(); ++i)
    out << i << ',' << csv::format_double(predictions[i]) << '\n';
}

std::vector<double> single_column(const ingest::ModalityFeatureFile& file) {
  std::vector<double> out;
  out.reserve(file.rows.size());
  for (const auto& row : file.rows) {
    if (row.values.empty()) raise(errc::ragged_row, "prediction file row without value");
    out.push_back(row.values[0]);
  }
  return out;
}

// --- synth -------------------------------------------------------------

int cmd_synth(const GlobalOptions& global, const std::string& out_dir,
              const ingest::SynthConfig& config_in) {
  ingest::SynthConfig config = config_in;
  config.seed = global.seed;
  config.window = global.window;
  config.hop = global.hop();
  const auto corpus = ingest::synth_corpus(config);
  ingest::write_corpus_dir(corpus, out_dir);
  if (global.verbose > 0) {
    std::size_t segments = 0;
    for (const auto& rec : corpus.recordings) segments += rec.labels.rows.size();
    std::cerr << "synthesized " << corpus.recordings.size() << " recordings, " << segments
              << " segments into " << out_dir << '\n';
  }
  return 0;
}

// --- extract -----------------------------------------------------------

int cmd_extract(const GlobalOptions& global, const std::string& in_dir,
                const std::string& out_dir) {
  std::vector<std::string> paths;
  try {
    paths = ingest::list_csv_files(in_dir);
  } catch (const Error&) {
    paths.clear();
  }
  if (paths.empty()) {
    std::cerr << "no input recordings\n";
    return kExitInput;
  }
  fs::create_directories(out_dir);
  const gaze::GazeFeatureConfig& config = global.gaze_config;
  const auto names = gaze::feature_column_names();
  const auto warn = global.warn_sink();
  for (const auto& path : paths) {
    const auto recording = ingest::parse_gaze_csv(path, std::nullopt, warn);
    const auto windows = segmentation::make_windows(recording.duration(), global.window,
                                                    global.hop(), recording.recording_id, warn);
    const auto features = gaze::extract_recording_features(recording, windows, config, warn);
    const auto out_path = fs::path(out_dir) / (recording.recording_id + ".features.csv");
    ingest::write_feature_csv(features, out_path.string(), names);
    if (global.verbose > 0)
      std::cerr << recording.recording_id << ": " << windows.size() << " segments\n";
  }
  return 0;
}

// --- train / predict ------------------------------------------------------

int cmd_train(const GlobalOptions& global, const std::string& features_path,
              const std::string& labels_path, const std::string& target_str, double c,
              double epsilon, double tolerance, std::size_t max_iterations,
              bool filter_zero_valence, const std::string& model_out) {
  const auto target = parse_target(target_str);
  const auto features = ingest::parse_feature_csv(features_path, "features");
  const auto labels = ingest::parse_label_csv(labels_path);
  auto instances = segmentation::align(features, labels);
  if (filter_zero_valence) instances = segmentation::filter_zero_valence(instances);

  svr::SvrHyperparams hp;
  hp.c = c;
  hp.epsilon = epsilon;
  hp.tolerance = tolerance;
  const auto model = svr::train(instances, target, hp, max_iterations);
  svr::save_model(model, model_out);
  if (global.verbose > 0)
    std::cerr << "trained on " << model.train_meta.n_train << " instances, "
              << model.train_meta.iterations << " iterations, dual objective "
              << csv::format_double(model.train_meta.dual_objective)
              << (model.train_meta.converged ? "" : " (iteration cap hit)") << '\n';
  return 0;
}

int cmd_predict(const std::string& model_path, const std::string& features_path,
                const std::string& out_path) {
  const auto model = svr::load_model(model_path);
  const auto features = ingest::parse_feature_csv(features_path, "features");
  std::vector<double> predictions;
  predictions.reserve(features.rows.size());
  for (const auto& row : features.rows) predictions.push_back(svr::predict(model, row.values));
  write_predictions_csv(predictions, out_path);
  return 0;
}

// --- fuse -------------------------------------------------------------

int cmd_fuse(const std::string& mode, const std::vector<std::string>& inputs,
             const std::string& out_path) {
  if (inputs.size() < 2) raise(errc::invalid_argument, "fuse needs at least 2 inputs");
  if (mode == "feature") {
    if (inputs.size() != 2) raise(errc::invalid_argument, "feature fusion takes exactly 2 inputs");
    const auto a = ingest::parse_feature_csv(inputs[0], "a");
    const auto b = ingest::parse_feature_csv(inputs[1], "b");
    if (a.rows.size() != b.rows.size())
      raise(errc::alignment_error, "inputs have " + std::to_string(a.rows.size()) + " vs " +
                                       std::to_string(b.rows.size()) + " segments");
    ingest::ModalityFeatureFile fused;
    fused.modality = "fused";
    fused.dimension = a.dimension + b.dimension;
    for (std::size_t i = 0; i < a.rows.size(); ++i) {
      ingest::FeatureRow row = a.rows[i];
      row.values.insert(row.values.end(), b.rows[i].values.begin(), b.rows[i].values.end());
      fused.rows.push_back(std::move(row));
    }
    ingest::write_feature_csv(fused, out_path);
    return 0;
  }
  if (mode == "average") {
    std::vector<std::vector<double>> columns;
    columns.reserve(inputs.size());
    for (const auto& path : inputs)
      columns.push_back(single_column(ingest::parse_feature_csv(path, "predictions")));
    write_predictions_csv(fusion::averaged_prediction_fusion(columns), out_path);
    return 0;
  }
  raise(errc::invalid_argument, "mode must be feature or average");
}

// --- evaluate -----------------------------------------------------------

int cmd_evaluate(const std::string& predictions_path, const std::string& labels_path,
                 const std::string& target_str, const std::string& out_path) {
  const auto target = parse_target(target_str);
  const auto predictions = single_column(ingest::parse_feature_csv(predictions_path, "predictions"));
  const auto labels = ingest::parse_label_csv(labels_path);

  metrics::EvaluationPair pair;
  pair.predictions = predictions;
  pair.ground_truth.reserve(labels.rows.size());
  for (const auto& row : labels.rows)
    pair.ground_truth.push_back(target == svr::Target::arousal ? row.arousal : row.valence);

  const auto report = metrics::compute_report(pair);
  std::printf("r   = %.6f\nccc = %.6f\n", report.r, report.ccc);
  if (!out_path.empty()) {
    auto out = open_out(out_path);
    out << "metric,value\nr," << csv::format_double(report.r) << "\nccc,"
        << csv::format_double(report.ccc) << '\n';
  }
  return 0;
}

// --- experiment -----------------------------------------------------------

void write_report_csv(const fusion::ExperimentReport& report, const std::string& path) {
  auto out = open_out(path);
  out << "system,dimension,r,ccc\n";
  for (const auto& cell : report.cells)
    out << cell.system << ',' << svr::target_name(cell.dimension) << ','
        << csv::format_double(cell.r) << ',' << csv::format_double(cell.ccc) << '\n';
}

void print_report_table(const fusion::ExperimentReport& report) {
  std::printf("%-28s %10s %10s %10s %10s\n", "system", "arousal r", "arousal c", "valence r",
              "valence c");
  std::vector<std::string> systems;
  for (const auto& cell : report.cells)
    if (systems.empty() || systems.back() != cell.system) systems.push_back(cell.system);
  for (const auto& system : systems) {
    double values[4] = {0, 0, 0, 0};
    for (const auto& cell : report.cells) {
      if (cell.system != system) continue;
      const int base = cell.dimension == svr::Target::arousal ? 0 : 2;
      values[base] = cell.r;
      values[base + 1] = cell.ccc;
    }
    std::printf("%-28s %10.4f %10.4f %10.4f %10.4f\n", system.c_str(), values[0], values[1],
                values[2], values[3]);
  }
}

int cmd_experiment(const GlobalOptions& global, const std::string& data_dir,
                   const std::string& out_dir, const std::string& plan_path, bool per_recording) {
  const auto plan =
      plan_path.empty() ? fusion::ExperimentPlan::published_defaults() : fusion::ExperimentPlan::load(plan_path);
  plan.validate();

  for (const char* split : ingest::kSplitDirs)
    if (!fs::is_directory(fs::path(data_dir) / split))
      raise(errc::plan_incomplete,
            std::string("plan requires the '") + split + "' split but " +
                (fs::path(data_dir) / split).string() + " is missing");

  const auto warn = global.verbose > 0 ? global.warn_sink() : ingest::WarningSink{};
  const auto datasets =
      ingest::load_corpus_dir(data_dir, global.window, global.hop(), global.gaze_config, warn);

  fusion::FusionOptions options;
  options.seed = global.seed;
  const auto report = fusion::run_experiment(plan, datasets, options);

  fs::create_directories(out_dir);
  write_report_csv(report, (fs::path(out_dir) / "report.csv").string());
  for (const auto& traj : report.trajectories) {
    const auto path = fs::path(out_dir) /
                      ("trajectory_" + traj.system + "_" + svr::target_name(traj.dimension) + ".csv");
    auto out = open_out(path.string());
    out << "segment_index,prediction,ground_truth\n";
    for (std::size_t i = 0; i < traj.predictions.size(); ++i)
      out << i << ',' << csv::format_double(traj.predictions[i]) << ','
          << csv::format_double(traj.ground_truth[i]) << '\n';
  }

  if (per_recording) {
    auto out = open_out((fs::path(out_dir) / "report_per_recording.csv").string());
    out << "system,dimension,recording_id,r,ccc\n";
    for (const auto& traj : report.trajectories) {
      metrics::EvaluationPair pair;
      pair.predictions = traj.predictions;
      pair.ground_truth = traj.ground_truth;
      std::vector<std::string> skipped;
      for (const auto& [rec, m] : metrics::per_recording_reports(pair, traj.recording_ids, &skipped))
        out << traj.system << ',' << svr::target_name(traj.dimension) << ',' << rec << ','
            << csv::format_double(m.r) << ',' << csv::format_double(m.ccc) << '\n';
      for (const auto& message : skipped) std::cerr << "warning: " << message << '\n';
    }
  }

  print_report_table(report);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"bimodal continuous affect prediction pipeline"};
  app.require_subcommand(1);
  app.set_config("--config");

  GlobalOptions global;
  app.add_option("--seed", global.seed, "seed for all randomness")->capture_default_str();
  app.add_option("--window", global.window, "segment window length in seconds")->capture_default_str();
  app.add_option("--overlap", global.overlap, "overlap between adjacent windows in seconds")
      ->capture_default_str();
  app.add_flag("-v,--verbose", global.verbose, "verbose diagnostics on stderr");
  app.add_option("--closure-threshold", global.gaze_config.closure_threshold,
                 "eye openness below this counts as closed")
      ->capture_default_str();
  app.add_option("--dispersion-threshold", global.gaze_config.dispersion_threshold,
                 "fixation dispersion bound in coordinate units")
      ->capture_default_str();
  app.add_option("--min-fixation", global.gaze_config.min_fixation_duration,
                 "minimum fixation duration in seconds")
      ->capture_default_str();
  app.add_option("--zone-rows", global.gaze_config.zone_rows, "fixation zone grid rows")
      ->capture_default_str();
  app.add_option("--zone-cols", global.gaze_config.zone_cols, "fixation zone grid columns")
      ->capture_default_str();

  // synth
  auto* synth = app.add_subcommand("synth", "generate a seeded synthetic corpus");
  std::string synth_out;
  ingest::SynthConfig synth_config;
  synth->add_option("--out", synth_out, "output corpus directory")->required();
  synth->add_option("--recordings", synth_config.n_recordings, "number of recordings")
      ->capture_default_str();
  synth->add_option("--duration", synth_config.duration, "seconds per recording")
      ->capture_default_str();
  synth->add_option("--frame-rate", synth_config.frame_rate, "gaze frame rate in Hz")
      ->capture_default_str();
  synth->add_option("--speech-dim", synth_config.speech_dim, "speech feature dimension")
      ->capture_default_str();
  synth->add_option("--noise-sd", synth_config.noise_sd, "label noise standard deviation")
      ->capture_default_str();

  // extract
  auto* extract = app.add_subcommand("extract", "extract gaze feature CSVs from gaze recordings");
  std::string extract_in, extract_out;
  extract->add_option("--in", extract_in, "directory of gaze CSV recordings")->required();
  extract->add_option("--out", extract_out, "output directory for feature CSVs")->required();

  // train
  auto* train = app.add_subcommand("train", "train one SVR model");
  std::string train_features, train_labels, train_target = "arousal", train_out;
  double train_c = 1.0, train_epsilon = 1e-3, train_tolerance = 1e-3;
  std::size_t train_max_iterations = 1'000'000;
  bool train_filter = false;
  train->add_option("--features", train_features, "feature CSV")->required();
  train->add_option("--labels", train_labels, "label CSV")->required();
  train->add_option("--target", train_target, "arousal or valence")->capture_default_str();
  train->add_option("--c", train_c, "SVR complexity C")->capture_default_str();
  train->add_option("--epsilon", train_epsilon, "epsilon tube half-width")->capture_default_str();
  train->add_option("--tolerance", train_tolerance, "KKT stopping tolerance")->capture_default_str();
  train->add_option("--max-iterations", train_max_iterations, "SMO iteration cap")
      ->capture_default_str();
  train->add_flag("--filter-zero-valence", train_filter, "drop zero-valence segments before training");
  train->add_option("--out", train_out, "model file to write")->required();

  // predict
  auto* predict = app.add_subcommand("predict", "predict with a trained model");
  std::string predict_model, predict_features, predict_out;
  predict->add_option("--model", predict_model, "model file")->required();
  predict->add_option("--features", predict_features, "feature CSV")->required();
  predict->add_option("--out", predict_out, "prediction CSV to write")->required();

  // fuse
  auto* fuse = app.add_subcommand("fuse", "fuse feature files or prediction files");
  std::string fuse_mode = "feature", fuse_out;
  std::vector<std::string> fuse_inputs;
  fuse->add_option("--mode", fuse_mode, "feature (concatenate) or average (mean predictions)")
      ->capture_default_str();
  fuse->add_option("--out", fuse_out, "output CSV")->required();
  fuse->add_option("inputs", fuse_inputs, "input CSVs")->expected(-2);

  // evaluate
  auto* evaluate = app.add_subcommand("evaluate", "Pearson r and CCC of predictions vs labels");
  std::string eval_predictions, eval_labels, eval_target = "arousal", eval_out;
  evaluate->add_option("--predictions", eval_predictions, "prediction CSV")->required();
  evaluate->add_option("--labels", eval_labels, "label CSV")->required();
  evaluate->add_option("--target", eval_target, "arousal or valence")->capture_default_str();
  evaluate->add_option("--out", eval_out, "optional metrics CSV");

  // experiment
  auto* experiment = app.add_subcommand("experiment", "run the full 6-system evaluation");
  std::string exp_data, exp_out, exp_plan;
  bool exp_per_recording = false;
  experiment->add_option("--data", exp_data, "corpus directory (train/dev/test layout)")->required();
  experiment->add_option("--out", exp_out, "output directory")->required();
  experiment->add_option("--plan", exp_plan, "experiment plan file (default: published plan)");
  experiment->add_flag("--per-recording", exp_per_recording, "also write per-recording metrics");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);  // prints the help or error text
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (global.window <= 0 || global.overlap < 0 || global.overlap >= global.window) {
      std::cerr << "error: need window > overlap >= 0\n";
      return kExitUsage;
    }
    if (synth->parsed()) return cmd_synth(global, synth_out, synth_config);
    if (extract->parsed()) return cmd_extract(global, extract_in, extract_out);
    if (train->parsed())
      return cmd_train(global, train_features, train_labels, train_target, train_c, train_epsilon,
                       train_tolerance, train_max_iterations, train_filter, train_out);
    if (predict->parsed()) return cmd_predict(predict_model, predict_features, predict_out);
    if (fuse->parsed()) return cmd_fuse(fuse_mode, fuse_inputs, fuse_out);
    if (evaluate->parsed()) return cmd_evaluate(eval_predictions, eval_labels, eval_target, eval_out);
    if (experiment->parsed())
      return cmd_experiment(global, exp_data, exp_out, exp_plan, exp_per_recording);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code_for(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitPipeline;
  }
  return kExitUsage;
}
