#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "affect/segmentation.hpp"

namespace affect::svr {

enum class Target { arousal, valence };

inline const char* target_name(Target t) { return t == Target::arousal ? "arousal" : "valence"; }

inline double target_value(const segmentation::LabeledInstance& inst, Target t) {
  return t == Target::arousal ? inst.arousal : inst.valence;
}

enum class Kernel { linear };
enum class Normalization { min_max_0_1 };

struct SvrHyperparams {
  double c = 1.0;            // complexity, > 0
  double epsilon = 1e-3;     // tube half-width, >= 0
  double tolerance = 1e-3;   // KKT stopping tolerance, > 0
  Kernel kernel = Kernel::linear;
  Normalization normalization = Normalization::min_max_0_1;

  void validate() const;
};

// Per-feature (min, max) fitted on training data; transform is
// (x - min) / (max - min), constant columns map to 0, out-of-range inputs
// are not clamped.
using NormParams = std::vector<std::pair<double, double>>;

NormParams normalize_fit(const std::vector<std::vector<double>>& train_features);
std::vector<double> normalize_apply(const NormParams& params, const std::vector<double>& features);

struct TrainMeta {
  std::size_t n_train = 0;
  std::size_t iterations = 0;
  double dual_objective = 0.0;
  bool converged = false;
};

struct SvrModel {
  std::vector<std::vector<double>> support_vectors;  // normalized feature space
  std::vector<double> betas;                         // beta_i = alpha_i - alpha_i*
  double bias = 0.0;
  NormParams norm_params;
  SvrHyperparams hyperparams;
  TrainMeta train_meta;

  std::size_t dimension() const { return norm_params.size(); }
};

struct TrainOptions {
  std::size_t max_iterations = 1'000'000;
  // Invoked once per two-coefficient step with the running dual objective;
  // intended for instrumentation, costs O(n) per step when set.
  std::function<void(std::size_t iteration, double dual_objective)> iteration_callback;
};

// Epsilon-insensitive SVR trained by sequential minimal optimization on the
// dual
//   max  -1/2 sum_ij beta_i beta_j K(x_i,x_j) - eps sum_i |beta_i|
//        + sum_i y_i beta_i
//   s.t. sum_i beta_i = 0,  |beta_i| <= C,
// with the working pair chosen by maximal KKT violation. The bias is the
// average over KKT-interior coefficients (midpoint of the violation bounds
// when none are interior). Deterministic: ties break on the lowest index.
// Errors: TooFewInstances, DimensionMismatch.
SvrModel train(const std::vector<std::vector<double>>& features, const std::vector<double>& targets,
               const SvrHyperparams& hp, const TrainOptions& options = {});

SvrModel train(const std::vector<segmentation::LabeledInstance>& instances, Target target,
               const SvrHyperparams& hp, std::size_t max_iterations = 1'000'000);

// f(x) = sum_i beta_i K(sv_i, normalize(x)) + bias.
// Errors: DimensionMismatch.
double predict(const SvrModel& model, const std::vector<double>& features);
std::vector<double> predict(const SvrModel& model, const std::vector<std::vector<double>>& features);

// Versioned flat text format with exact (bit-identical) round trip.
void save_model(const SvrModel& model, const std::string& path);
SvrModel load_model(const std::string& path);  // errc::invalid_model_file

}  // namespace affect::svr
