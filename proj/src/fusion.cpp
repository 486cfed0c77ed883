#include "affect/fusion.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <unordered_set>

#include "affect/csv.hpp"

namespace affect::fusion {

namespace {

const char* role_name(ModelRole role) {
  switch (role) {
    case ModelRole::unimodal: return "unimodal";
    case ModelRole::feature_fusion: return "feature_fusion";
    case ModelRole::model_fusion_stage1: return "model_fusion_stage1";
    case ModelRole::model_fusion_final: return "model_fusion_final";
    case ModelRole::output_associative_final: return "output_associative_final";
  }
  return "?";
}

const char* set_name(SetId set) {
  switch (set) {
    case SetId::A: return "A";
    case SetId::B: return "B";
    case SetId::C: return "C";
    case SetId::E: return "E";
  }
  return "?";
}

bool labels_equal(double x, double y) { return x == y || (std::isnan(x) && std::isnan(y)); }

}  // namespace

const char* split_name(SplitId split) {
  switch (split) {
    case SplitId::train: return "train";
    case SplitId::development: return "development";
    case SplitId::test: return "test";
  }
  return "?";
}

std::string PlanEntry::model_name() const {
  std::string name = role_name(role);
  if (!modality.empty()) name += "_" + modality;
  name += std::string("_") + svr::target_name(target);
  return name;
}

void ExperimentPlan::validate() const {
  for (const auto& e : entries) {
    if (!std::isfinite(e.c) || !(e.c > 0))
      raise(errc::invalid_plan, "C must be positive for " + e.model_name());
    const bool needs_modality =
        e.role == ModelRole::unimodal || e.role == ModelRole::model_fusion_stage1;
    if (needs_modality && e.modality.empty())
      raise(errc::invalid_plan, "missing modality for " + std::string(role_name(e.role)));
    if (!needs_modality && !e.modality.empty())
      raise(errc::invalid_plan, "unexpected modality for " + e.model_name());

    // set-id consistency with the role
    switch (e.role) {
      case ModelRole::unimodal:
      case ModelRole::feature_fusion:
      case ModelRole::model_fusion_stage1:
        if (e.set == SetId::C || e.set == SetId::E)
          raise(errc::invalid_plan, e.model_name() + " cannot train on a stage-2 set");
        break;
      case ModelRole::model_fusion_final:
        if (e.set != SetId::C) raise(errc::invalid_plan, e.model_name() + " must use set C");
        break;
      case ModelRole::output_associative_final:
        if (e.set != SetId::E) raise(errc::invalid_plan, e.model_name() + " must use set E");
        break;
    }

    // zero-valence rule: on for every valence model except feature fusion
    const bool expected_filter =
        e.target == Target::valence && e.role != ModelRole::feature_fusion;
    if (e.filter_zero_valence != expected_filter)
      raise(errc::invalid_plan, "zero-valence filter must be " +
                                    std::string(expected_filter ? "on" : "off") + " for " +
                                    e.model_name());
  }

  for (std::size_t i = 0; i < entries.size(); ++i)
    for (std::size_t j = i + 1; j < entries.size(); ++j)
      if (entries[i].role == entries[j].role && entries[i].target == entries[j].target &&
          entries[i].modality == entries[j].modality)
        raise(errc::invalid_plan, "duplicate entry " + entries[i].model_name());
}

std::vector<std::string> ExperimentPlan::modalities() const {
  std::vector<std::string> out;
  for (const auto& e : entries)
    if (e.role == ModelRole::unimodal &&
        std::find(out.begin(), out.end(), e.modality) == out.end())
      out.push_back(e.modality);
  return out;
}

const PlanEntry& ExperimentPlan::find(ModelRole role, Target target,
                                      const std::string& modality) const {
  for (const auto& e : entries)
    if (e.role == role && e.target == target && e.modality == modality) return e;
  PlanEntry probe;
  probe.role = role;
  probe.target = target;
  probe.modality = modality;
  raise(errc::plan_incomplete, "plan has no entry for " + probe.model_name());
}

namespace {

ModelRole parse_role(const std::string& s) {
  for (auto role : {ModelRole::unimodal, ModelRole::feature_fusion, ModelRole::model_fusion_stage1,
                    ModelRole::model_fusion_final, ModelRole::output_associative_final})
    if (s == role_name(role)) return role;
  raise(errc::invalid_plan, "unknown role '" + s + "'");
}

SetId parse_set(const std::string& s) {
  if (s == "A") return SetId::A;
  if (s == "B") return SetId::B;
  if (s == "C") return SetId::C;
  if (s == "E") return SetId::E;
  raise(errc::invalid_plan, "unknown set id '" + s + "'");
}

}  // namespace

ExperimentPlan ExperimentPlan::parse(const std::string& text) {
  ExperimentPlan plan;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::istringstream ls(line);
    std::string word;
    if (!(ls >> word) || word[0] == '#') continue;
    if (word != "entry")
      raise(errc::invalid_plan, "line " + std::to_string(line_no) + ": expected 'entry'");

    PlanEntry entry;
    bool have_role = false, have_target = false, have_c = false, have_set = false,
         have_filter = false;
    while (ls >> word) {
      const auto eq = word.find('=');
      if (eq == std::string::npos)
        raise(errc::invalid_plan, "line " + std::to_string(line_no) + ": expected key=value, got '" + word + "'");
      const std::string key = word.substr(0, eq);
      const std::string value = word.substr(eq + 1);
      if (key == "role") {
        entry.role = parse_role(value);
        have_role = true;
      } else if (key == "modality") {
        entry.modality = value;
      } else if (key == "target") {
        if (value == "arousal") entry.target = Target::arousal;
        else if (value == "valence") entry.target = Target::valence;
        else raise(errc::invalid_plan, "unknown target '" + value + "'");
        have_target = true;
      } else if (key == "set") {
        entry.set = parse_set(value);
        have_set = true;
      } else if (key == "c") {
        auto v = csv::parse_double(value);
        if (!v) raise(errc::invalid_plan, "bad C value '" + value + "'");
        entry.c = *v;
        have_c = true;
      } else if (key == "filter") {
        if (value == "true" || value == "1") entry.filter_zero_valence = true;
        else if (value == "false" || value == "0") entry.filter_zero_valence = false;
        else raise(errc::invalid_plan, "bad filter value '" + value + "'");
        have_filter = true;
      } else {
        raise(errc::invalid_plan, "unknown key '" + key + "'");
      }
    }
    if (!have_role || !have_target || !have_c || !have_set || !have_filter)
      raise(errc::invalid_plan,
            "line " + std::to_string(line_no) + ": entry needs role, target, set, c and filter");
    plan.entries.push_back(std::move(entry));
  }
  plan.validate();
  return plan;
}

ExperimentPlan ExperimentPlan::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) raise(errc::io_error, "cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse(buf.str());
}

void ExperimentPlan::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) raise(errc::io_error, "cannot write " + path);
  out << "# experiment plan: one model per line\n";
  for (const auto& e : entries) {
    out << "entry role=" << role_name(e.role);
    if (!e.modality.empty()) out << " modality=" << e.modality;
    out << " target=" << svr::target_name(e.target) << " set=" << set_name(e.set)
        << " c=" << csv::format_double(e.c)
        << " filter=" << (e.filter_zero_valence ? "true" : "false") << '\n';
  }
}

ExperimentPlan ExperimentPlan::published_defaults() {
  const auto A = Target::arousal;
  const auto V = Target::valence;
  ExperimentPlan plan;
  plan.entries = {
      {ModelRole::unimodal, "speech", A, SetId::A, 2.5e-4, false},
      {ModelRole::unimodal, "speech", V, SetId::A, 9.0e-5, true},
      {ModelRole::unimodal, "gaze", A, SetId::A, 0.009, false},
      {ModelRole::unimodal, "gaze", V, SetId::A, 6.5, true},
      {ModelRole::feature_fusion, "", A, SetId::A, 1.8e-4, false},
      {ModelRole::feature_fusion, "", V, SetId::A, 2.0e-4, false},
      {ModelRole::model_fusion_stage1, "speech", A, SetId::B, 7.0e-5, false},
      {ModelRole::model_fusion_stage1, "speech", V, SetId::B, 8.0e-6, true},
      {ModelRole::model_fusion_stage1, "gaze", A, SetId::B, 10.0, false},
      {ModelRole::model_fusion_stage1, "gaze", V, SetId::B, 10.0, true},
      {ModelRole::model_fusion_final, "", A, SetId::C, 9.0, false},
      {ModelRole::model_fusion_final, "", V, SetId::C, 7.0, true},
      {ModelRole::output_associative_final, "", A, SetId::E, 0.2, false},
      {ModelRole::output_associative_final, "", V, SetId::E, 4.0e-4, true},
  };
  return plan;
}

// --- dataset plumbing -------------------------------------------------------

namespace {

void check_alignment(const std::vector<LabeledInstance>& a, const std::vector<LabeledInstance>& b,
                     const std::string& what) {
  if (a.size() != b.size())
    raise(errc::alignment_error,
          what + ": " + std::to_string(a.size()) + " vs " + std::to_string(b.size()) + " segments");
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i].segment.recording_id != b[i].segment.recording_id ||
        a[i].segment.index != b[i].segment.index)
      raise(errc::alignment_error, what + ": segment identity differs at position " + std::to_string(i));
  }
}

void check_labels_equal(const std::vector<LabeledInstance>& a,
                        const std::vector<LabeledInstance>& b, const std::string& what) {
  for (std::size_t i = 0; i < a.size(); ++i)
    if (!labels_equal(a[i].arousal, b[i].arousal) || !labels_equal(a[i].valence, b[i].valence))
      raise(errc::label_mismatch, what + ": labels differ at position " + std::to_string(i));
}

std::vector<std::string> recording_order(const std::vector<LabeledInstance>& instances) {
  std::vector<std::string> ids;
  std::set<std::string> seen;
  for (const auto& inst : instances)
    if (seen.insert(inst.segment.recording_id).second) ids.push_back(inst.segment.recording_id);
  return ids;
}

std::vector<std::vector<double>> feature_matrix(const std::vector<LabeledInstance>& instances) {
  std::vector<std::vector<double>> rows;
  rows.reserve(instances.size());
  for (const auto& inst : instances) rows.push_back(inst.features);
  return rows;
}

// Keeps the instances of the build-side recordings of a shared partition.
std::vector<LabeledInstance> keep_recordings(const std::vector<LabeledInstance>& instances,
                                             const std::vector<std::string>& ids) {
  std::unordered_set<std::string> keep(ids.begin(), ids.end());
  std::vector<LabeledInstance> out;
  out.reserve(instances.size());
  for (const auto& inst : instances)
    if (keep.count(inst.segment.recording_id)) out.push_back(inst);
  return out;
}

svr::SvrHyperparams hyperparams_for(const PlanEntry& entry, const FusionOptions& options) {
  svr::SvrHyperparams hp;
  hp.c = entry.c;
  hp.epsilon = options.svr_epsilon;
  hp.tolerance = options.svr_tolerance;
  return hp;
}

// Trains one plan entry on already-assembled instances, applying the
// zero-valence filter and the recording-level build/validation partition.
svr::SvrModel train_entry(const PlanEntry& entry, std::vector<LabeledInstance> instances,
                          const FusionOptions& options) {
  if (entry.filter_zero_valence)
    instances = segmentation::filter_zero_valence(instances, options.valence_zero_tolerance);
  const auto partition = segmentation::partition_recordings(recording_order(instances),
                                                            options.train_fraction, options.seed);
  const auto build = keep_recordings(instances, partition.train_ids);
  return svr::train(build, entry.target, hyperparams_for(entry, options), options.max_iterations);
}

// Resolves a set-A or set-B entry to its training pool and logs the access.
svr::SvrModel train_pool_entry(const PlanEntry& entry, const ModalityDataset& data,
                               const FusionOptions& options) {
  std::vector<LabeledInstance> pool = data.train;
  if (options.access_log) {
    options.access_log->note(entry.model_name(), SplitId::train, "features");
    options.access_log->note(entry.model_name(), SplitId::train, "labels");
  }
  if (entry.set == SetId::A) {
    pool.insert(pool.end(), data.development.begin(), data.development.end());
    if (options.access_log) {
      options.access_log->note(entry.model_name(), SplitId::development, "features");
      options.access_log->note(entry.model_name(), SplitId::development, "labels");
    }
  }
  return train_entry(entry, std::move(pool), options);
}

}  // namespace

ModalityDataset feature_fusion(const ModalityDataset& a, const ModalityDataset& b) {
  ModalityDataset fused;
  fused.modality = a.modality + "+" + b.modality;

  auto fuse_split = [&](const std::vector<LabeledInstance>& sa,
                        const std::vector<LabeledInstance>& sb, const std::string& what) {
    check_alignment(sa, sb, what);
    check_labels_equal(sa, sb, what);
    std::vector<LabeledInstance> out;
    out.reserve(sa.size());
    for (std::size_t i = 0; i < sa.size(); ++i) {
      LabeledInstance inst = sa[i];
      inst.features.insert(inst.features.end(), sb[i].features.begin(), sb[i].features.end());
      out.push_back(std::move(inst));
    }
    return out;
  };

  fused.train = fuse_split(a.train, b.train, "train");
  fused.development = fuse_split(a.development, b.development, "development");
  fused.test = fuse_split(a.test, b.test, "test");
  return fused;
}

std::vector<double> averaged_prediction_fusion(const std::vector<std::vector<double>>& predictions) {
  if (predictions.size() < 2)
    raise(errc::invalid_argument, "averaged fusion needs at least 2 modalities");
  const std::size_t n = predictions[0].size();
  for (const auto& p : predictions)
    if (p.size() != n)
      raise(errc::length_mismatch, "prediction vectors have different lengths");

  std::vector<double> out(n, 0.0);
  for (const auto& p : predictions)
    for (std::size_t i = 0; i < n; ++i) out[i] += p[i];
  for (double& v : out) v /= static_cast<double>(predictions.size());
  return out;
}

namespace {

// Builds the stage-2 instance rows: one per development segment, features =
// the stage-1 prediction columns, labels copied from the development split.
std::vector<LabeledInstance> stage2_rows(const std::vector<LabeledInstance>& development,
                                         const std::vector<std::vector<double>>& columns) {
  std::vector<LabeledInstance> rows;
  rows.reserve(development.size());
  for (std::size_t i = 0; i < development.size(); ++i) {
    LabeledInstance inst;
    inst.segment = development[i].segment;
    inst.arousal = development[i].arousal;
    inst.valence = development[i].valence;
    inst.features.reserve(columns.size());
    for (const auto& col : columns) inst.features.push_back(col[i]);
    rows.push_back(std::move(inst));
  }
  return rows;
}

void note_stage2(const PlanEntry& entry, const FusionOptions& options) {
  if (!options.access_log) return;
  options.access_log->note(entry.model_name(), SplitId::development, "stage1_predictions");
  options.access_log->note(entry.model_name(), SplitId::development, "labels");
}

}  // namespace

ModelFusionResult model_fusion(const ModalityDataset& a, const ModalityDataset& b, Target target,
                               const ExperimentPlan& plan, const FusionOptions& options) {
  check_alignment(a.development, b.development, "development");
  check_alignment(a.test, b.test, "test");
  check_labels_equal(a.development, b.development, "development");

  ModelFusionResult result;
  result.stage1_a = train_pool_entry(plan.find(ModelRole::model_fusion_stage1, target, a.modality),
                                     a, options);
  result.stage1_b = train_pool_entry(plan.find(ModelRole::model_fusion_stage1, target, b.modality),
                                     b, options);

  const auto dev_a = svr::predict(result.stage1_a, feature_matrix(a.development));
  const auto dev_b = svr::predict(result.stage1_b, feature_matrix(b.development));

  const auto& final_entry = plan.find(ModelRole::model_fusion_final, target);
  note_stage2(final_entry, options);
  result.stage2 = train_entry(final_entry, stage2_rows(a.development, {dev_a, dev_b}), options);

  const auto test_a = svr::predict(result.stage1_a, feature_matrix(a.test));
  const auto test_b = svr::predict(result.stage1_b, feature_matrix(b.test));
  result.test_predictions.reserve(test_a.size());
  for (std::size_t i = 0; i < test_a.size(); ++i)
    result.test_predictions.push_back(svr::predict(result.stage2, {test_a[i], test_b[i]}));
  return result;
}

OutputAssociativeResult output_associative_fusion(const ModalityDataset& a,
                                                  const ModalityDataset& b, Target target,
                                                  const ExperimentPlan& plan,
                                                  const FusionOptions& options) {
  check_alignment(a.development, b.development, "development");
  check_alignment(a.test, b.test, "test");
  check_labels_equal(a.development, b.development, "development");

  OutputAssociativeResult result;
  result.stage1_a_arousal = train_pool_entry(
      plan.find(ModelRole::model_fusion_stage1, Target::arousal, a.modality), a, options);
  result.stage1_a_valence = train_pool_entry(
      plan.find(ModelRole::model_fusion_stage1, Target::valence, a.modality), a, options);
  result.stage1_b_arousal = train_pool_entry(
      plan.find(ModelRole::model_fusion_stage1, Target::arousal, b.modality), b, options);
  result.stage1_b_valence = train_pool_entry(
      plan.find(ModelRole::model_fusion_stage1, Target::valence, b.modality), b, options);

  const auto dev_matrix_a = feature_matrix(a.development);
  const auto dev_matrix_b = feature_matrix(b.development);
  const std::vector<std::vector<double>> dev_columns = {
      svr::predict(result.stage1_a_arousal, dev_matrix_a),
      svr::predict(result.stage1_a_valence, dev_matrix_a),
      svr::predict(result.stage1_b_arousal, dev_matrix_b),
      svr::predict(result.stage1_b_valence, dev_matrix_b),
  };

  const auto& final_entry = plan.find(ModelRole::output_associative_final, target);
  note_stage2(final_entry, options);
  result.final_model = train_entry(final_entry, stage2_rows(a.development, dev_columns), options);

  const auto test_matrix_a = feature_matrix(a.test);
  const auto test_matrix_b = feature_matrix(b.test);
  const std::vector<std::vector<double>> test_columns = {
      svr::predict(result.stage1_a_arousal, test_matrix_a),
      svr::predict(result.stage1_a_valence, test_matrix_a),
      svr::predict(result.stage1_b_arousal, test_matrix_b),
      svr::predict(result.stage1_b_valence, test_matrix_b),
  };
  result.test_predictions.reserve(a.test.size());
  for (std::size_t i = 0; i < a.test.size(); ++i)
    result.test_predictions.push_back(svr::predict(
        result.final_model,
        {test_columns[0][i], test_columns[1][i], test_columns[2][i], test_columns[3][i]}));
  return result;
}

ExperimentReport run_experiment(const ExperimentPlan& plan,
                                const std::map<std::string, ModalityDataset>& datasets,
                                const FusionOptions& options) {
  plan.validate();
  const auto modality_names = plan.modalities();
  if (modality_names.size() != 2)
    raise(errc::invalid_plan, "experiment needs exactly 2 unimodal modalities, plan has " +
                                  std::to_string(modality_names.size()));
  for (const auto& name : modality_names)
    if (!datasets.count(name))
      raise(errc::plan_incomplete, "no dataset provided for modality '" + name + "'");

  const ModalityDataset& a = datasets.at(modality_names[0]);
  const ModalityDataset& b = datasets.at(modality_names[1]);
  for (const auto* split : {&a.test, &b.test}) {
    if (split->size() < 2) raise(errc::too_few_instances, "test split needs at least 2 segments");
    for (const auto& inst : *split)
      if (!std::isfinite(inst.arousal) || !std::isfinite(inst.valence))
        raise(errc::missing_test_labels, "test split has no usable ground truth");
  }
  check_alignment(a.train, b.train, "train");
  check_alignment(a.development, b.development, "development");
  check_alignment(a.test, b.test, "test");
  check_labels_equal(a.train, b.train, "train");
  check_labels_equal(a.development, b.development, "development");
  check_labels_equal(a.test, b.test, "test");

  ExperimentReport report;
  std::vector<std::string> test_recordings;
  test_recordings.reserve(a.test.size());
  for (const auto& inst : a.test) test_recordings.push_back(inst.segment.recording_id);

  auto record_model = [&](const PlanEntry& entry, const svr::SvrModel& model) {
    ModelInfo info;
    info.name = entry.model_name();
    info.set = entry.set;
    info.n_train = model.train_meta.n_train;
    info.iterations = model.train_meta.iterations;
    info.dual_objective = model.train_meta.dual_objective;
    info.converged = model.train_meta.converged;
    report.models.push_back(std::move(info));
  };

  auto evaluate = [&](const std::string& system, Target target, std::vector<double> predictions) {
    metrics::EvaluationPair pair;
    pair.predictions = std::move(predictions);
    pair.ground_truth.reserve(a.test.size());
    for (const auto& inst : a.test) pair.ground_truth.push_back(svr::target_value(inst, target));
    const auto m = metrics::compute_report(pair);

    ReportCell cell;
    cell.system = system;
    cell.dimension = target;
    cell.r = m.r;
    cell.ccc = m.ccc;
    report.cells.push_back(cell);

    Trajectory traj;
    traj.system = system;
    traj.dimension = target;
    traj.predictions = std::move(pair.predictions);
    traj.ground_truth = std::move(pair.ground_truth);
    traj.recording_ids = test_recordings;
    report.trajectories.push_back(std::move(traj));
  };

  const ModalityDataset fused = feature_fusion(a, b);

  for (auto target : {Target::arousal, Target::valence}) {
    std::map<std::string, std::vector<double>> unimodal_predictions;
    for (const auto& name : modality_names) {
      const auto& data = datasets.at(name);
      const auto& entry = plan.find(ModelRole::unimodal, target, name);
      const auto model = train_pool_entry(entry, data, options);
      record_model(entry, model);
      unimodal_predictions[name] = svr::predict(model, feature_matrix(data.test));
    }
    for (const auto& name : modality_names)
      evaluate("unimodal_" + name, target, unimodal_predictions[name]);

    const auto& ff_entry = plan.find(ModelRole::feature_fusion, target);
    const auto ff_model = train_pool_entry(ff_entry, fused, options);
    record_model(ff_entry, ff_model);
    evaluate("feature_fusion", target, svr::predict(ff_model, feature_matrix(fused.test)));

    evaluate("averaged_prediction_fusion", target,
             averaged_prediction_fusion({unimodal_predictions[modality_names[0]],
                                         unimodal_predictions[modality_names[1]]}));

    const auto mf = model_fusion(a, b, target, plan, options);
    record_model(plan.find(ModelRole::model_fusion_stage1, target, a.modality), mf.stage1_a);
    record_model(plan.find(ModelRole::model_fusion_stage1, target, b.modality), mf.stage1_b);
    record_model(plan.find(ModelRole::model_fusion_final, target), mf.stage2);
    evaluate("model_fusion", target, mf.test_predictions);

    const auto oa = output_associative_fusion(a, b, target, plan, options);
    record_model(plan.find(ModelRole::output_associative_final, target), oa.final_model);
    evaluate("output_associative_fusion", target, oa.test_predictions);
  }

  // Table-style ordering: systems outermost, dimensions inner.
  const std::vector<std::string> system_order = {
      "unimodal_" + modality_names[0], "unimodal_" + modality_names[1],
      "feature_fusion", "averaged_prediction_fusion", "model_fusion",
      "output_associative_fusion"};
  auto rank = [&](const std::string& system) {
    return std::find(system_order.begin(), system_order.end(), system) - system_order.begin();
  };
  std::stable_sort(report.cells.begin(), report.cells.end(), [&](const auto& x, const auto& y) {
    if (rank(x.system) != rank(y.system)) return rank(x.system) < rank(y.system);
    return static_cast<int>(x.dimension) < static_cast<int>(y.dimension);
  });
  std::stable_sort(report.trajectories.begin(), report.trajectories.end(),
                   [&](const auto& x, const auto& y) {
                     if (rank(x.system) != rank(y.system)) return rank(x.system) < rank(y.system);
                     return static_cast<int>(x.dimension) < static_cast<int>(y.dimension);
                   });
  return report;
}

}  // namespace affect::fusion
