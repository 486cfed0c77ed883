#pragma once

#include <map>
#include <string>
#include <vector>

#include "affect/metrics.hpp"
#include "affect/svr.hpp"

namespace affect::fusion {

using segmentation::LabeledInstance;
using svr::Target;

// Aligned train/development/test splits of one modality. Segment identity
// (recording_id, index) must line up position-for-position across the
// modalities of an experiment; test labels may be NaN when truth is not
// available (evaluation then refuses to run).
struct ModalityDataset {
  std::string modality;
  std::vector<LabeledInstance> train;
  std::vector<LabeledInstance> development;
  std::vector<LabeledInstance> test;
};

// --- experiment plan -------------------------------------------------------

enum class ModelRole {
  unimodal,
  feature_fusion,
  model_fusion_stage1,
  model_fusion_final,
  output_associative_final,
};

// Training-set ids follow the published scheme verbatim: A is the combined
// train+development pool, B the train split alone, C the development-set
// prediction pairs feeding the model-fusion stage 2, E the four-column
// arousal+valence prediction set feeding output-associative stage 2.
// (There is no set D.)
enum class SetId { A, B, C, E };

struct PlanEntry {
  ModelRole role = ModelRole::unimodal;
  std::string modality;  // unimodal / stage-1 entries only
  Target target = Target::arousal;
  SetId set = SetId::A;
  double c = 1.0;
  bool filter_zero_valence = false;

  std::string model_name() const;
};

struct ExperimentPlan {
  std::vector<PlanEntry> entries;

  // Checks C values, role/set-id consistency and the zero-valence rule:
  // the filter is on for every valence model except feature fusion and off
  // for every arousal model. Errors: InvalidPlan.
  void validate() const;

  // Distinct unimodal modalities, first-appearance order.
  std::vector<std::string> modalities() const;

  // Errors: PlanIncomplete when no entry matches.
  const PlanEntry& find(ModelRole role, Target target, const std::string& modality = "") const;

  // Plain-text format, one `entry key=value ...` line per model.
  static ExperimentPlan parse(const std::string& text);
  static ExperimentPlan load(const std::string& path);
  void save(const std::string& path) const;

  // The 14 published models with their complexity values.
  static ExperimentPlan published_defaults();
};

// --- instrumentation -------------------------------------------------------

enum class SplitId { train, development, test };
const char* split_name(SplitId split);

// Records which split each trained model consumed, and as what. Lets tests
// assert the stacking data flow: stage-2 models must touch the train split
// only through stage-1 predictions made on the development split.
struct DataAccessLog {
  struct Entry {
    std::string model;
    SplitId split;
    std::string what;  // "features", "labels", "stage1_predictions"
  };
  std::vector<Entry> entries;

  void note(const std::string& model, SplitId split, const std::string& what) {
    entries.push_back({model, split, what});
  }
};

struct FusionOptions {
  std::uint64_t seed = 0;
  double train_fraction = 0.66;  // recording-level build/validation split
  double valence_zero_tolerance = 1e-9;
  double svr_epsilon = 1e-3;
  double svr_tolerance = 1e-3;
  std::size_t max_iterations = 1'000'000;
  DataAccessLog* access_log = nullptr;
};

// --- fusion strategies -----------------------------------------------------

// Row-wise concatenation [a_features || b_features] per aligned segment;
// labels taken from a and asserted equal to b's.
// Errors: AlignmentError, LabelMismatch.
ModalityDataset feature_fusion(const ModalityDataset& a, const ModalityDataset& b);

// Elementwise arithmetic mean of >= 2 per-modality prediction vectors.
// Errors: LengthMismatch.
std::vector<double> averaged_prediction_fusion(const std::vector<std::vector<double>>& predictions);

struct ModelFusionResult {
  svr::SvrModel stage1_a;
  svr::SvrModel stage1_b;
  svr::SvrModel stage2;
  std::vector<double> test_predictions;
};

// Stage 1: one SVR per modality on its stage-1 training set. Stage 2: their
// development-split predictions, paired as 2-vectors with the development
// labels, train the final SVR, which then maps stage-1 test predictions to
// the final test prediction.
// Errors: PlanIncomplete, AlignmentError.
ModelFusionResult model_fusion(const ModalityDataset& a, const ModalityDataset& b, Target target,
                               const ExperimentPlan& plan, const FusionOptions& options = {});

struct OutputAssociativeResult {
  svr::SvrModel stage1_a_arousal;
  svr::SvrModel stage1_a_valence;
  svr::SvrModel stage1_b_arousal;
  svr::SvrModel stage1_b_valence;
  svr::SvrModel final_model;
  std::vector<double> test_predictions;
};

// Like model fusion but the final SVR sees both dimensions from both
// modalities: 4-column development prediction rows labeled with the target
// dimension.
// Errors: PlanIncomplete, AlignmentError.
OutputAssociativeResult output_associative_fusion(const ModalityDataset& a,
                                                  const ModalityDataset& b, Target target,
                                                  const ExperimentPlan& plan,
                                                  const FusionOptions& options = {});

// --- experiment orchestration ----------------------------------------------

struct ReportCell {
  std::string system;
  Target dimension = Target::arousal;
  double r = 0.0;
  double ccc = 0.0;
};

struct Trajectory {
  std::string system;
  Target dimension = Target::arousal;
  std::vector<double> predictions;
  std::vector<double> ground_truth;
  std::vector<std::string> recording_ids;  // per test segment
};

// Training metadata of every model an experiment built, in build order.
struct ModelInfo {
  std::string name;
  SetId set = SetId::A;
  std::size_t n_train = 0;
  std::size_t iterations = 0;
  double dual_objective = 0.0;
  bool converged = false;
};

struct ExperimentReport {
  std::vector<ReportCell> cells;       // 6 systems x 2 dimensions
  std::vector<Trajectory> trajectories;
  std::vector<ModelInfo> models;
};

// Trains and evaluates the two unimodal baselines and the four fusion
// systems on both dimensions, reporting test-set r and CCC per cell plus
// per-segment prediction trajectories.
ExperimentReport run_experiment(const ExperimentPlan& plan,
                                const std::map<std::string, ModalityDataset>& datasets,
                                const FusionOptions& options = {});

}  // namespace affect::fusion
