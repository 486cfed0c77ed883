#include "affect/metrics.hpp"

#include <algorithm>
#include <cmath>

namespace affect::metrics {

void EvaluationPair::validate() const {
  if (predictions.size() != ground_truth.size())
    raise(errc::length_mismatch, "predictions=" + std::to_string(predictions.size()) +
                                     ", ground_truth=" + std::to_string(ground_truth.size()));
  if (predictions.size() < 2)
    raise(errc::invalid_argument, "need at least 2 samples, got " + std::to_string(predictions.size()));
  for (double v : predictions)
    if (!std::isfinite(v)) raise(errc::non_finite_value, "non-finite prediction");
  for (double v : ground_truth)
    if (!std::isfinite(v)) raise(errc::non_finite_value, "non-finite ground truth");
}

namespace {

struct Moments {
  double mu_x, mu_y, var_x, var_y, cov;  // population
};

Moments moments_of(const EvaluationPair& pair) {
  pair.validate();
  const auto n = static_cast<double>(pair.predictions.size());
  double sx = 0.0, sy = 0.0;
  for (std::size_t i = 0; i < pair.predictions.size(); ++i) {
    sx += pair.predictions[i];
    sy += pair.ground_truth[i];
  }
  Moments m{sx / n, sy / n, 0.0, 0.0, 0.0};
  for (std::size_t i = 0; i < pair.predictions.size(); ++i) {
    const double dx = pair.predictions[i] - m.mu_x;
    const double dy = pair.ground_truth[i] - m.mu_y;
    m.var_x += dx * dx;
    m.var_y += dy * dy;
    m.cov += dx * dy;
  }
  m.var_x /= n;
  m.var_y /= n;
  m.cov /= n;
  return m;
}

}  // namespace

double pearson(const EvaluationPair& pair) {
  const auto m = moments_of(pair);
  if (m.var_x <= 0.0) raise(errc::zero_variance, "predictions have zero variance");
  if (m.var_y <= 0.0) raise(errc::zero_variance, "ground truth has zero variance");
  // rounding can land an ulp outside the mathematical range
  return std::clamp(m.cov / (std::sqrt(m.var_x) * std::sqrt(m.var_y)), -1.0, 1.0);
}

double ccc(const EvaluationPair& pair) {
  const auto m = moments_of(pair);
  const double mean_gap = m.mu_x - m.mu_y;
  const double denom = m.var_x + m.var_y + mean_gap * mean_gap;
  if (denom <= 0.0)
    raise(errc::degenerate_denominator, "both sequences constant with equal means");
  return std::clamp(2.0 * m.cov / denom, -1.0, 1.0);
}

MetricsReport compute_report(const EvaluationPair& pair) {
  const auto m = moments_of(pair);
  MetricsReport report;
  report.mu_pred = m.mu_x;
  report.mu_truth = m.mu_y;
  report.sd_pred = std::sqrt(m.var_x);
  report.sd_truth = std::sqrt(m.var_y);
  report.r = pearson(pair);
  report.ccc = ccc(pair);
  return report;
}

std::vector<std::pair<std::string, MetricsReport>> per_recording_reports(
    const EvaluationPair& pair, const std::vector<std::string>& recording_ids,
    std::vector<std::string>* skipped) {
  pair.validate();
  if (recording_ids.size() != pair.predictions.size())
    raise(errc::length_mismatch, "recording ids do not match sample count");

  std::vector<std::pair<std::string, MetricsReport>> out;
  std::size_t start = 0;
  while (start < recording_ids.size()) {
    std::size_t end = start;
    while (end < recording_ids.size() && recording_ids[end] == recording_ids[start]) ++end;
    EvaluationPair group;
    group.predictions.assign(pair.predictions.begin() + static_cast<std::ptrdiff_t>(start),
                             pair.predictions.begin() + static_cast<std::ptrdiff_t>(end));
    group.ground_truth.assign(pair.ground_truth.begin() + static_cast<std::ptrdiff_t>(start),
                              pair.ground_truth.begin() + static_cast<std::ptrdiff_t>(end));
    try {
      out.emplace_back(recording_ids[start], compute_report(group));
    } catch (const Error& e) {
      if (skipped)
        skipped->push_back("recording '" + recording_ids[start] + "' skipped: " + e.what());
    }
    start = end;
  }
  return out;
}

}  // namespace affect::metrics
