#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <set>

#include "affect/fusion.hpp"
#include "oracles.hpp"

using namespace affect;
using fusion::ExperimentPlan;
using fusion::ModalityDataset;
using fusion::ModelRole;
using segmentation::LabeledInstance;
using svr::Target;

namespace {

struct TwoModalities {
  ModalityDataset a;  // informative for arousal
  ModalityDataset b;  // informative for valence
};

// Aligned two-modality corpus with exactly-linear labels plus noise.
// Every 10th segment gets an exact 0.0 valence when inject_zero_valence.
TwoModalities make_datasets(oracles::TestRng& rng, std::size_t recs_per_split,
                            std::size_t segments_per_recording, bool inject_zero_valence = false) {
  TwoModalities out;
  out.a.modality = "speech";
  out.b.modality = "gaze";
  std::size_t rec_counter = 0;
  std::size_t row_counter = 0;

  for (int split = 0; split < 3; ++split) {
    for (std::size_t r = 0; r < recs_per_split; ++r, ++rec_counter) {
      const std::string id = "r" + std::to_string(100 + rec_counter);
      for (std::size_t s = 0; s < segments_per_recording; ++s, ++row_counter) {
        LabeledInstance ia, ib;
        ia.segment.recording_id = ib.segment.recording_id = id;
        ia.segment.index = ib.segment.index = static_cast<long long>(s);
        ia.features = {rng.range(-1, 1), rng.range(-1, 1), rng.range(-1, 1), rng.range(-1, 1)};
        ib.features = {rng.range(-1, 1), rng.range(-1, 1), rng.range(-1, 1)};

        double arousal = ia.features[0] + 0.5 * ia.features[1] + 0.25 * ib.features[0] +
                         0.02 * rng.normal();
        double valence = ib.features[0] - 0.7 * ib.features[1] + 0.25 * ia.features[0] +
                         0.02 * rng.normal();
        if (inject_zero_valence && row_counter % 10 == 0) valence = 0.0;
        ia.arousal = ib.arousal = arousal;
        ia.valence = ib.valence = valence;

        auto push = [&](ModalityDataset& d, LabeledInstance inst) {
          if (split == 0) d.train.push_back(std::move(inst));
          else if (split == 1) d.development.push_back(std::move(inst));
          else d.test.push_back(std::move(inst));
        };
        push(out.a, std::move(ia));
        push(out.b, std::move(ib));
      }
    }
  }
  return out;
}

// published plan structure with a desk-scale complexity value
ExperimentPlan desk_plan(double c = 10.0) {
  auto plan = ExperimentPlan::published_defaults();
  for (auto& entry : plan.entries) entry.c = c;
  return plan;
}

std::size_t zero_valence_rows_in(const std::vector<LabeledInstance>& instances,
                                 const std::set<std::string>& recordings) {
  std::size_t count = 0;
  for (const auto& inst : instances)
    if (recordings.count(inst.segment.recording_id) && std::abs(inst.valence) <= 1e-9) ++count;
  return count;
}

const fusion::ModelInfo& model_named(const fusion::ExperimentReport& report,
                                     const std::string& name) {
  for (const auto& info : report.models)
    if (info.name == name) return info;
  FAIL("no model named ", name);
  static fusion::ModelInfo dummy;
  return dummy;
}

}  // namespace

TEST_CASE("published plan: 14 entries, valid, findable") {
  const auto plan = ExperimentPlan::published_defaults();
  CHECK(plan.entries.size() == 14);
  plan.validate();
  CHECK(plan.modalities() == std::vector<std::string>{"speech", "gaze"});

  CHECK(plan.find(ModelRole::unimodal, Target::arousal, "speech").c == doctest::Approx(2.5e-4));
  CHECK(plan.find(ModelRole::unimodal, Target::valence, "gaze").c == doctest::Approx(6.5));
  CHECK(plan.find(ModelRole::feature_fusion, Target::valence).filter_zero_valence == false);
  CHECK(plan.find(ModelRole::unimodal, Target::valence, "speech").filter_zero_valence == true);
  CHECK(plan.find(ModelRole::model_fusion_final, Target::valence).c == doctest::Approx(7.0));
  CHECK(plan.find(ModelRole::output_associative_final, Target::arousal).c == doctest::Approx(0.2));

  try {
    plan.find(ModelRole::unimodal, Target::arousal, "video");
    FAIL("expected PlanIncomplete");
  } catch (const Error& e) {
    CHECK(e.code() == errc::plan_incomplete);
  }
}

TEST_CASE("plan validation enforces the zero-valence rule and set ids") {
  auto plan = ExperimentPlan::published_defaults();
  plan.entries[1].filter_zero_valence = false;  // unimodal speech valence
  CHECK_THROWS_AS(plan.validate(), Error);

  plan = ExperimentPlan::published_defaults();
  plan.entries[4].filter_zero_valence = true;  // feature fusion arousal
  CHECK_THROWS_AS(plan.validate(), Error);

  plan = ExperimentPlan::published_defaults();
  plan.entries[10].set = fusion::SetId::A;  // final model fusion must use C
  CHECK_THROWS_AS(plan.validate(), Error);

  plan = ExperimentPlan::published_defaults();
  plan.entries[0].c = 0.0;
  CHECK_THROWS_AS(plan.validate(), Error);
}

TEST_CASE("plan file round trip") {
  namespace fs = std::filesystem;
  const auto dir = fs::temp_directory_path() / "affect_fusion_test";
  fs::create_directories(dir);
  const auto path = (dir / "plan.txt").string();

  const auto plan = ExperimentPlan::published_defaults();
  plan.save(path);
  const auto loaded = ExperimentPlan::load(path);
  REQUIRE(loaded.entries.size() == plan.entries.size());
  for (std::size_t i = 0; i < plan.entries.size(); ++i) {
    CHECK(loaded.entries[i].role == plan.entries[i].role);
    CHECK(loaded.entries[i].modality == plan.entries[i].modality);
    CHECK(loaded.entries[i].target == plan.entries[i].target);
    CHECK(loaded.entries[i].set == plan.entries[i].set);
    CHECK(loaded.entries[i].c == plan.entries[i].c);
    CHECK(loaded.entries[i].filter_zero_valence == plan.entries[i].filter_zero_valence);
  }
  fs::remove_all(dir);

  CHECK_THROWS_AS(ExperimentPlan::parse("entry role=unimodal"), Error);
  CHECK_THROWS_AS(ExperimentPlan::parse("bogus line"), Error);
  CHECK(ExperimentPlan::parse("# just a comment\n").entries.empty());
}

TEST_CASE("feature fusion concatenates a then b") {
  oracles::TestRng rng(201);
  auto two = make_datasets(rng, 2, 3);
  const auto fused = fusion::feature_fusion(two.a, two.b);
  CHECK(fused.modality == "speech+gaze");
  REQUIRE(fused.train.size() == two.a.train.size());
  for (std::size_t i = 0; i < fused.train.size(); ++i) {
    const auto& f = fused.train[i].features;
    REQUIRE(f.size() == 7);  // 4 + 3
    for (std::size_t j = 0; j < 4; ++j) CHECK(f[j] == two.a.train[i].features[j]);
    for (std::size_t j = 0; j < 3; ++j) CHECK(f[4 + j] == two.b.train[i].features[j]);
    CHECK(fused.train[i].arousal == two.a.train[i].arousal);
  }

  // count mismatch
  auto broken = two;
  broken.b.train.pop_back();
  try {
    fusion::feature_fusion(broken.a, broken.b);
    FAIL("expected AlignmentError");
  } catch (const Error& e) {
    CHECK(e.code() == errc::alignment_error);
  }

  // label mismatch
  broken = two;
  broken.b.development[0].valence += 0.5;
  try {
    fusion::feature_fusion(broken.a, broken.b);
    FAIL("expected LabelMismatch");
  } catch (const Error& e) {
    CHECK(e.code() == errc::label_mismatch);
  }
}

TEST_CASE("feature fusion at published dimensions: 2268 + 31 = 2299") {
  oracles::TestRng rng(202);
  ModalityDataset wide, narrow;
  wide.modality = "speech";
  narrow.modality = "gaze";
  for (int i = 0; i < 3; ++i) {
    LabeledInstance iw, in_;
    iw.segment.recording_id = in_.segment.recording_id = "r";
    iw.segment.index = in_.segment.index = i;
    iw.features.assign(2268, 0.0);
    for (auto& v : iw.features) v = rng.uniform();
    in_.features.assign(31, 0.0);
    for (auto& v : in_.features) v = rng.uniform();
    iw.arousal = in_.arousal = 0.1 * i;
    iw.valence = in_.valence = -0.1 * i;
    wide.train.push_back(iw);
    narrow.train.push_back(in_);
    wide.development.push_back(iw);
    narrow.development.push_back(in_);
    wide.test.push_back(iw);
    narrow.test.push_back(in_);
  }
  const auto fused = fusion::feature_fusion(wide, narrow);
  CHECK(fused.train[0].features.size() == 2299);
}

TEST_CASE("averaged prediction fusion is the exact arithmetic mean") {
  CHECK(fusion::averaged_prediction_fusion({{0.2}, {0.4}})[0] == doctest::Approx(0.3));
  CHECK(fusion::averaged_prediction_fusion({{0.0}, {0.3}, {0.6}})[0] == doctest::Approx(0.3));

  // identical inputs come back unchanged
  const std::vector<double> p{0.1, -0.4, 2.5};
  const auto same = fusion::averaged_prediction_fusion({p, p});
  for (std::size_t i = 0; i < p.size(); ++i) CHECK(same[i] == p[i]);

  // modality order does not matter
  oracles::TestRng rng(203);
  std::vector<double> x, y;
  for (int i = 0; i < 20; ++i) {
    x.push_back(rng.normal());
    y.push_back(rng.normal());
  }
  const auto xy = fusion::averaged_prediction_fusion({x, y});
  const auto yx = fusion::averaged_prediction_fusion({y, x});
  for (std::size_t i = 0; i < x.size(); ++i) CHECK(xy[i] == yx[i]);

  CHECK_THROWS_AS(fusion::averaged_prediction_fusion({{1.0}}), Error);
  CHECK_THROWS_AS(fusion::averaged_prediction_fusion({{1.0}, {1.0, 2.0}}), Error);
}

TEST_CASE("model fusion: stage-2 sees 2 prediction columns") {
  oracles::TestRng rng(204);
  const auto two = make_datasets(rng, 4, 12);
  const auto plan = desk_plan();
  fusion::FusionOptions options;
  options.seed = 3;

  const auto result = fusion::model_fusion(two.a, two.b, Target::arousal, plan, options);
  CHECK(result.stage2.dimension() == 2);
  CHECK(result.test_predictions.size() == two.a.test.size());

  // stage-2 training pool: the build-side development recordings
  const auto dev_ids = [&] {
    std::vector<std::string> ids;
    std::set<std::string> seen;
    for (const auto& inst : two.a.development)
      if (seen.insert(inst.segment.recording_id).second) ids.push_back(inst.segment.recording_id);
    return ids;
  }();
  const auto partition = segmentation::partition_recordings(dev_ids, options.train_fraction, options.seed);
  std::set<std::string> build(partition.train_ids.begin(), partition.train_ids.end());
  std::size_t expected = 0;
  for (const auto& inst : two.a.development)
    if (build.count(inst.segment.recording_id)) ++expected;
  CHECK(result.stage2.train_meta.n_train == expected);
}

TEST_CASE("output-associative fusion: 4 columns for either target") {
  oracles::TestRng rng(205);
  const auto two = make_datasets(rng, 4, 10);
  const auto plan = desk_plan();
  for (auto target : {Target::arousal, Target::valence}) {
    const auto result = fusion::output_associative_fusion(two.a, two.b, target, plan);
    CHECK(result.final_model.dimension() == 4);
    CHECK(result.test_predictions.size() == two.a.test.size());
  }
}

TEST_CASE("output-associative fusion ignores a constant modality") {
  oracles::TestRng rng(206);
  auto two = make_datasets(rng, 4, 10);

  auto with_constant_b = [&](double value) {
    auto copy = two;
    for (auto* split : {&copy.b.train, &copy.b.development, &copy.b.test})
      for (auto& inst : *split)
        for (auto& v : inst.features) v = value;
    return copy;
  };

  const auto first = with_constant_b(7.0);
  const auto second = with_constant_b(-2.5);
  const auto plan = desk_plan();
  const auto out1 = fusion::output_associative_fusion(first.a, first.b, Target::arousal, plan);
  const auto out2 = fusion::output_associative_fusion(second.a, second.b, Target::arousal, plan);
  REQUIRE(out1.test_predictions.size() == out2.test_predictions.size());
  for (std::size_t i = 0; i < out1.test_predictions.size(); ++i)
    CHECK(std::abs(out1.test_predictions[i] - out2.test_predictions[i]) < 1e-8);
}

TEST_CASE("run_experiment: 6 systems x 2 dimensions, table order") {
  oracles::TestRng rng(207);
  const auto two = make_datasets(rng, 4, 12);
  std::map<std::string, ModalityDataset> datasets{{"speech", two.a}, {"gaze", two.b}};
  fusion::FusionOptions options;
  options.seed = 5;

  const auto report = fusion::run_experiment(desk_plan(), datasets, options);
  REQUIRE(report.cells.size() == 12);
  const std::vector<std::string> expected_order{
      "unimodal_speech", "unimodal_speech", "unimodal_gaze", "unimodal_gaze",
      "feature_fusion", "feature_fusion", "averaged_prediction_fusion",
      "averaged_prediction_fusion", "model_fusion", "model_fusion",
      "output_associative_fusion", "output_associative_fusion"};
  for (std::size_t i = 0; i < report.cells.size(); ++i) {
    CHECK(report.cells[i].system == expected_order[i]);
    CHECK(report.cells[i].dimension == (i % 2 == 0 ? Target::arousal : Target::valence));
    CHECK(std::isfinite(report.cells[i].r));
    CHECK(report.cells[i].r >= -1.0);
    CHECK(report.cells[i].r <= 1.0);
    CHECK(std::abs(report.cells[i].ccc) <= std::abs(report.cells[i].r) + 1e-12);
  }
  CHECK(report.trajectories.size() == 12);
  for (const auto& traj : report.trajectories) {
    CHECK(traj.predictions.size() == two.a.test.size());
    // self-agreement sanity: ground truth against itself scores 1 on both
    metrics::EvaluationPair self;
    self.predictions = traj.ground_truth;
    self.ground_truth = traj.ground_truth;
    CHECK(metrics::pearson(self) == doctest::Approx(1.0));
    CHECK(metrics::ccc(self) == doctest::Approx(1.0));
  }

  // expected model inventory: 4 unimodal + 2 ff + (2 stage1 + 1 final) x2 mf
  // + 1 final x2 oa = 14 recorded entries
  CHECK(report.models.size() == 14);
}

TEST_CASE("run_experiment is deterministic") {
  oracles::TestRng rng(208);
  const auto two = make_datasets(rng, 3, 10);
  std::map<std::string, ModalityDataset> datasets{{"speech", two.a}, {"gaze", two.b}};
  fusion::FusionOptions options;
  options.seed = 11;

  const auto r1 = fusion::run_experiment(desk_plan(), datasets, options);
  const auto r2 = fusion::run_experiment(desk_plan(), datasets, options);
  REQUIRE(r1.cells.size() == r2.cells.size());
  for (std::size_t i = 0; i < r1.cells.size(); ++i) {
    CHECK(r1.cells[i].r == r2.cells[i].r);
    CHECK(r1.cells[i].ccc == r2.cells[i].ccc);
  }
}

TEST_CASE("segment presentation order does not change the results") {
  oracles::TestRng rng(209);
  const auto two = make_datasets(rng, 3, 10);

  auto permuted = two;
  auto permute_pairwise = [&](std::vector<LabeledInstance>& va, std::vector<LabeledInstance>& vb) {
    REQUIRE(va.size() == vb.size());
    for (std::size_t i = va.size(); i > 1; --i) {
      const auto j = static_cast<std::size_t>(rng.below(i));
      std::swap(va[i - 1], va[j]);
      std::swap(vb[i - 1], vb[j]);
    }
  };
  permute_pairwise(permuted.a.train, permuted.b.train);
  permute_pairwise(permuted.a.development, permuted.b.development);
  permute_pairwise(permuted.a.test, permuted.b.test);

  fusion::FusionOptions options;
  options.seed = 17;
  std::map<std::string, ModalityDataset> d1{{"speech", two.a}, {"gaze", two.b}};
  std::map<std::string, ModalityDataset> d2{{"speech", permuted.a}, {"gaze", permuted.b}};
  const auto r1 = fusion::run_experiment(desk_plan(), d1, options);
  const auto r2 = fusion::run_experiment(desk_plan(), d2, options);
  REQUIRE(r1.cells.size() == r2.cells.size());
  for (std::size_t i = 0; i < r1.cells.size(); ++i) {
    CHECK(r1.cells[i].r == doctest::Approx(r2.cells[i].r).epsilon(1e-9));
    CHECK(r1.cells[i].ccc == doctest::Approx(r2.cells[i].ccc).epsilon(1e-9));
  }
}

TEST_CASE("zero-valence exclusion reaches every valence model except feature fusion") {
  oracles::TestRng rng(210);
  const auto two = make_datasets(rng, 4, 10, /*inject_zero_valence=*/true);
  std::map<std::string, ModalityDataset> datasets{{"speech", two.a}, {"gaze", two.b}};
  fusion::FusionOptions options;
  options.seed = 23;
  const auto report = fusion::run_experiment(desk_plan(), datasets, options);

  // set A universe: train + development recordings
  std::vector<std::string> set_a_ids;
  std::set<std::string> seen;
  std::vector<LabeledInstance> pool = two.a.train;
  pool.insert(pool.end(), two.a.development.begin(), two.a.development.end());
  for (const auto& inst : pool)
    if (seen.insert(inst.segment.recording_id).second) set_a_ids.push_back(inst.segment.recording_id);
  const auto part_a = segmentation::partition_recordings(set_a_ids, options.train_fraction, options.seed);
  const std::set<std::string> build_a(part_a.train_ids.begin(), part_a.train_ids.end());
  const std::size_t zeros_a = zero_valence_rows_in(pool, build_a);
  REQUIRE(zeros_a > 0);

  const auto& ff_valence = model_named(report, "feature_fusion_valence");
  const auto& uni_valence = model_named(report, "unimodal_speech_valence");
  CHECK(ff_valence.n_train == uni_valence.n_train + zeros_a);

  // arousal models never filter, so both keep the zero-valence rows
  const auto& ff_arousal = model_named(report, "feature_fusion_arousal");
  const auto& uni_arousal = model_named(report, "unimodal_speech_arousal");
  CHECK(ff_arousal.n_train == uni_arousal.n_train);
  CHECK(ff_arousal.n_train == ff_valence.n_train);
  CHECK(uni_arousal.n_train == uni_valence.n_train + zeros_a);

  // stage-2 valence models exclude zero-valence development rows
  std::vector<std::string> dev_ids;
  seen.clear();
  for (const auto& inst : two.a.development)
    if (seen.insert(inst.segment.recording_id).second) dev_ids.push_back(inst.segment.recording_id);
  const auto part_dev = segmentation::partition_recordings(dev_ids, options.train_fraction, options.seed);
  const std::set<std::string> build_dev(part_dev.train_ids.begin(), part_dev.train_ids.end());
  const std::size_t zeros_dev = zero_valence_rows_in(two.a.development, build_dev);
  REQUIRE(zeros_dev > 0);

  const auto& mf_arousal = model_named(report, "model_fusion_final_arousal");
  const auto& mf_valence = model_named(report, "model_fusion_final_valence");
  CHECK(mf_valence.n_train == mf_arousal.n_train - zeros_dev);
  const auto& oa_valence = model_named(report, "output_associative_final_valence");
  CHECK(oa_valence.n_train == mf_valence.n_train);
}

TEST_CASE("stacking data flow: stage-2 models never touch the train split") {
  oracles::TestRng rng(211);
  const auto two = make_datasets(rng, 3, 10);
  std::map<std::string, ModalityDataset> datasets{{"speech", two.a}, {"gaze", two.b}};
  fusion::DataAccessLog log;
  fusion::FusionOptions options;
  options.seed = 29;
  options.access_log = &log;
  (void)fusion::run_experiment(desk_plan(), datasets, options);

  CHECK(!log.entries.empty());
  bool saw_stage2 = false;
  for (const auto& entry : log.entries) {
    CHECK(entry.split != fusion::SplitId::test);  // nothing trains on test
    const bool is_final = entry.model.find("final") != std::string::npos;
    if (is_final) {
      saw_stage2 = true;
      CHECK(entry.split == fusion::SplitId::development);
      CHECK((entry.what == "stage1_predictions" || entry.what == "labels"));
    }
  }
  CHECK(saw_stage2);
}

TEST_CASE("run_experiment input validation") {
  oracles::TestRng rng(212);
  const auto two = make_datasets(rng, 3, 8);

  std::map<std::string, ModalityDataset> missing{{"speech", two.a}};
  try {
    fusion::run_experiment(desk_plan(), missing, {});
    FAIL("expected PlanIncomplete");
  } catch (const Error& e) {
    CHECK(e.code() == errc::plan_incomplete);
  }

  auto unlabeled = two;
  for (auto& inst : unlabeled.a.test) inst.arousal = std::nan("");
  for (auto& inst : unlabeled.b.test) inst.arousal = std::nan("");
  std::map<std::string, ModalityDataset> datasets{{"speech", unlabeled.a}, {"gaze", unlabeled.b}};
  try {
    fusion::run_experiment(desk_plan(), datasets, {});
    FAIL("expected MissingTestLabels");
  } catch (const Error& e) {
    CHECK(e.code() == errc::missing_test_labels);
  }
}
