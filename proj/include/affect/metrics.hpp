#pragma once

#include <string>
#include <vector>

#include "affect/error.hpp"

namespace affect::metrics {

struct EvaluationPair {
  std::vector<double> predictions;
  std::vector<double> ground_truth;

  void validate() const;  // equal length >= 2, all finite
};

struct MetricsReport {
  double r = 0.0;    // Pearson correlation
  double ccc = 0.0;  // concordance correlation coefficient
  double mu_pred = 0.0;
  double mu_truth = 0.0;
  double sd_pred = 0.0;  // population
  double sd_truth = 0.0;
};

// Product-moment correlation with population moments.
// Errors: ZeroVariance naming the degenerate side.
double pearson(const EvaluationPair& pair);

// 2*cov / (var_x + var_y + (mu_x - mu_y)^2), population moments. Defined
// whenever the denominator is positive (a single constant side gives 0).
// Errors: DegenerateDenominator.
double ccc(const EvaluationPair& pair);

MetricsReport compute_report(const EvaluationPair& pair);

// Per-recording breakdown: evaluates each contiguous group of equal
// recording ids separately. Groups that are degenerate (too short, zero
// variance) are skipped with a warning line appended to `skipped`.
std::vector<std::pair<std::string, MetricsReport>> per_recording_reports(
    const EvaluationPair& pair, const std::vector<std::string>& recording_ids,
    std::vector<std::string>* skipped = nullptr);

}  // namespace affect::metrics
