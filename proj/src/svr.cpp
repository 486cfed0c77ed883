#include "affect/svr.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "affect/csv.hpp"

namespace affect::svr {

void SvrHyperparams::validate() const {
  if (!std::isfinite(c) || !(c > 0)) raise(errc::invalid_argument, "C must be finite and > 0");
  if (!std::isfinite(epsilon) || epsilon < 0) raise(errc::invalid_argument, "epsilon must be >= 0");
  if (!std::isfinite(tolerance) || !(tolerance > 0))
    raise(errc::invalid_argument, "tolerance must be > 0");
}

NormParams normalize_fit(const std::vector<std::vector<double>>& train_features) {
  if (train_features.empty()) raise(errc::empty_training_set, "no training instances");
  const std::size_t d = train_features[0].size();
  NormParams params(d, {std::numeric_limits<double>::infinity(),
                        -std::numeric_limits<double>::infinity()});
  for (const auto& row : train_features) {
    if (row.size() != d)
      raise(errc::dimension_mismatch, "inconsistent feature dimension in training set");
    for (std::size_t j = 0; j < d; ++j) {
      params[j].first = std::min(params[j].first, row[j]);
      params[j].second = std::max(params[j].second, row[j]);
    }
  }
  return params;
}

std::vector<double> normalize_apply(const NormParams& params, const std::vector<double>& features) {
  if (features.size() != params.size())
    raise(errc::dimension_mismatch, "expected dimension " + std::to_string(params.size()) +
                                        ", got " + std::to_string(features.size()));
  std::vector<double> out(features.size());
  for (std::size_t j = 0; j < features.size(); ++j) {
    const auto [lo, hi] = params[j];
    out[j] = hi > lo ? (features[j] - lo) / (hi - lo) : 0.0;
  }
  return out;
}

namespace {

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) s += a[j] * b[j];
  return s;
}

// Working state of the 2n-variable SMO. Index (i, +) holds the coefficient
// pushing f(x_i) up, (i, -) the one pushing it down; beta_i is their
// difference and u_i = sum_q K(i,q) beta_q is maintained incrementally.
class SmoSolver {
public:
  SmoSolver(const std::vector<std::vector<double>>& x, const std::vector<double>& y,
            const SvrHyperparams& hp)
      : x_(x), y_(y), hp_(hp), n_(x.size()),
        alpha_up_(n_, 0.0), alpha_dn_(n_, 0.0), beta_(n_, 0.0), u_(n_, 0.0) {
    // full kernel cache for the problem sizes this artifact sees
    const bool cache = n_ <= 4096;
    if (cache) {
      kernel_.assign(n_ * n_, 0.0);
      for (std::size_t i = 0; i < n_; ++i)
        for (std::size_t j = i; j < n_; ++j) {
          const double k = dot(x_[i], x_[j]);
          kernel_[i * n_ + j] = k;
          kernel_[j * n_ + i] = k;
        }
    }
  }

  double kernel(std::size_t i, std::size_t j) const {
    return kernel_.empty() ? dot(x_[i], x_[j]) : kernel_[i * n_ + j];
  }

  // alpha-form dual objective D = -(1/2 sum beta_p u_p
  //                                 + eps sum(a+ + a-) - sum y beta)
  double dual_objective() const {
    double quad = 0.0, slack = 0.0, lin = 0.0;
    for (std::size_t p = 0; p < n_; ++p) {
      quad += beta_[p] * u_[p];
      slack += alpha_up_[p] + alpha_dn_[p];
      lin += y_[p] * beta_[p];
    }
    return -(0.5 * quad + hp_.epsilon * slack - lin);
  }

  // Exact score ties are routine: an unclipped pair step equalizes the two
  // scores bit-for-bit. Breaking them by row index would make the solve
  // depend on presentation order, so ties compare content instead.
  bool key_less(std::size_t i, bool i_plus, std::size_t j, bool j_plus) const {
    if (y_[i] != y_[j]) return y_[i] < y_[j];
    if (x_[i] != x_[j]) return x_[i] < x_[j];
    return i_plus && !j_plus;
  }

  TrainMeta solve(const TrainOptions& options) {
    TrainMeta meta;
    meta.n_train = n_;
    const double c = hp_.c;

    while (meta.iterations < options.max_iterations) {
      // Maximal-violation working pair over the bound-feasible directions.
      // The score of index (i,s) is y_i - u_i -/+ eps; optimality is
      // max(up) <= min(low) + tolerance.
      double best_up = -std::numeric_limits<double>::infinity();
      double best_low = std::numeric_limits<double>::infinity();
      std::size_t up_point = 0, low_point = 0;
      bool up_plus = true, low_plus = true;
      bool have_up = false, have_low = false;
      for (std::size_t i = 0; i < n_; ++i) {
        const double v_plus = y_[i] - u_[i] - hp_.epsilon;
        const double v_minus = v_plus + 2.0 * hp_.epsilon;
        auto consider_up = [&](double v, bool plus) {
          if (!have_up || v > best_up ||
              (v == best_up && key_less(i, plus, up_point, up_plus))) {
            best_up = v;
            up_point = i;
            up_plus = plus;
            have_up = true;
          }
        };
        auto consider_low = [&](double v, bool plus) {
          if (!have_low || v < best_low ||
              (v == best_low && key_less(i, plus, low_point, low_plus))) {
            best_low = v;
            low_point = i;
            low_plus = plus;
            have_low = true;
          }
        };
        if (alpha_up_[i] < c) consider_up(v_plus, true);
        if (alpha_dn_[i] > 0) consider_up(v_minus, false);
        if (alpha_up_[i] > 0) consider_low(v_plus, true);
        if (alpha_dn_[i] < c) consider_low(v_minus, false);
      }

      const double violation = best_up - best_low;
      if (violation <= hp_.tolerance) {
        meta.converged = true;
        break;
      }

      // Analytic step along the direction that grows beta[up_point] and
      // shrinks beta[low_point] by the same amount s.
      const std::size_t a = up_point, b = low_point;
      const double q = kernel(a, a) + kernel(b, b) - 2.0 * kernel(a, b);
      const double s_max_a = up_plus ? c - alpha_up_[a] : alpha_dn_[a];
      const double s_max_b = low_plus ? alpha_up_[b] : c - alpha_dn_[b];
      const double s_max = std::min(s_max_a, s_max_b);
      const double s = q > 1e-12 ? std::min(violation / q, s_max) : s_max;
      if (!(s > 0.0)) {
        // numerically stuck pair
        break;
      }

      // Bound hits land exactly on the bound so |beta| <= C stays exact.
      if (up_plus)
        alpha_up_[a] = s >= s_max_a ? c : alpha_up_[a] + s;
      else
        alpha_dn_[a] = s >= s_max_a ? 0.0 : alpha_dn_[a] - s;
      if (low_plus)
        alpha_up_[b] = s >= s_max_b ? 0.0 : alpha_up_[b] - s;
      else
        alpha_dn_[b] = s >= s_max_b ? c : alpha_dn_[b] + s;
      beta_[a] = alpha_up_[a] - alpha_dn_[a];
      beta_[b] = alpha_up_[b] - alpha_dn_[b];

      if (kernel_.empty()) {
        for (std::size_t p = 0; p < n_; ++p)
          u_[p] += s * (dot(x_[p], x_[a]) - dot(x_[p], x_[b]));
      } else {
        const double* row_a = &kernel_[a * n_];
        const double* row_b = &kernel_[b * n_];
        for (std::size_t p = 0; p < n_; ++p) u_[p] += s * (row_a[p] - row_b[p]);
      }

      ++meta.iterations;
      if (options.iteration_callback)
        options.iteration_callback(meta.iterations, dual_objective());
    }

    meta.dual_objective = dual_objective();
    return meta;
  }

  // Bias from KKT-interior coefficients; midpoint of the remaining
  // feasibility interval when none are interior. Contributions are summed
  // in content order so the value matches across row permutations.
  double bias() const {
    std::vector<std::pair<std::size_t, double>> interior;  // (index, value)
    for (std::size_t i = 0; i < n_; ++i) {
      const double v_plus = y_[i] - u_[i] - hp_.epsilon;
      const double v_minus = v_plus + 2.0 * hp_.epsilon;
      if (alpha_up_[i] > 0 && alpha_up_[i] < hp_.c) interior.emplace_back(i, v_plus);
      if (alpha_dn_[i] > 0 && alpha_dn_[i] < hp_.c) interior.emplace_back(i, v_minus);
    }
    if (!interior.empty()) {
      std::sort(interior.begin(), interior.end(), [&](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second < b.second;
        return key_less(a.first, true, b.first, true);
      });
      double sum = 0.0;
      for (const auto& [index, value] : interior) sum += value;
      return sum / static_cast<double>(interior.size());
    }

    double best_up = -std::numeric_limits<double>::infinity();
    double best_low = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n_; ++i) {
      const double v_plus = y_[i] - u_[i] - hp_.epsilon;
      const double v_minus = v_plus + 2.0 * hp_.epsilon;
      if (alpha_up_[i] < hp_.c) best_up = std::max(best_up, v_plus);
      if (alpha_dn_[i] > 0) best_up = std::max(best_up, v_minus);
      if (alpha_up_[i] > 0) best_low = std::min(best_low, v_plus);
      if (alpha_dn_[i] < hp_.c) best_low = std::min(best_low, v_minus);
    }
    return 0.5 * (best_up + best_low);
  }

  const std::vector<double>& betas() const { return beta_; }

private:
  const std::vector<std::vector<double>>& x_;
  const std::vector<double>& y_;
  SvrHyperparams hp_;
  std::size_t n_;
  std::vector<double> alpha_up_, alpha_dn_, beta_, u_;
  std::vector<double> kernel_;
};

}  // namespace

SvrModel train(const std::vector<std::vector<double>>& features, const std::vector<double>& targets,
               const SvrHyperparams& hp, const TrainOptions& options) {
  hp.validate();
  if (features.size() < 2)
    raise(errc::too_few_instances, "need at least 2 instances, got " + std::to_string(features.size()));
  if (features.size() != targets.size())
    raise(errc::dimension_mismatch, "feature rows do not match target count");
  for (double y : targets)
    if (!std::isfinite(y)) raise(errc::non_finite_value, "non-finite training target");

  SvrModel model;
  model.hyperparams = hp;
  model.norm_params = normalize_fit(features);

  std::vector<std::vector<double>> normalized;
  normalized.reserve(features.size());
  for (const auto& row : features) normalized.push_back(normalize_apply(model.norm_params, row));

  SmoSolver solver(normalized, targets, hp);
  model.train_meta = solver.solve(options);
  model.bias = solver.bias();

  // Canonical support-vector order: by content, not input position, so a
  // permuted training set yields an identical model file and identical
  // prediction rounding.
  const auto& betas = solver.betas();
  std::vector<std::size_t> order;
  for (std::size_t i = 0; i < betas.size(); ++i)
    if (betas[i] != 0.0) order.push_back(i);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (normalized[a] != normalized[b]) return normalized[a] < normalized[b];
    return betas[a] < betas[b];
  });
  for (std::size_t i : order) {
    model.support_vectors.push_back(normalized[i]);
    model.betas.push_back(betas[i]);
  }
  return model;
}

SvrModel train(const std::vector<segmentation::LabeledInstance>& instances, Target target,
               const SvrHyperparams& hp, std::size_t max_iterations) {
  std::vector<std::vector<double>> features;
  std::vector<double> targets;
  features.reserve(instances.size());
  targets.reserve(instances.size());
  for (const auto& inst : instances) {
    features.push_back(inst.features);
    targets.push_back(target_value(inst, target));
  }
  TrainOptions options;
  options.max_iterations = max_iterations;
  return train(features, targets, hp, options);
}

double predict(const SvrModel& model, const std::vector<double>& features) {
  const auto normalized = normalize_apply(model.norm_params, features);
  double f = model.bias;
  for (std::size_t i = 0; i < model.support_vectors.size(); ++i)
    f += model.betas[i] * dot(model.support_vectors[i], normalized);
  return f;
}

std::vector<double> predict(const SvrModel& model, const std::vector<std::vector<double>>& features) {
  std::vector<double> out;
  out.reserve(features.size());
  for (const auto& row : features) out.push_back(predict(model, row));
  return out;
}

void save_model(const SvrModel& model, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) raise(errc::io_error, "cannot write " + path);
  const auto d = model.norm_params.size();
  out << "affect-svr-model 1\n";
  out << "kernel linear\n";
  out << "normalization min_max_0_1\n";
  out << "c " << csv::format_double(model.hyperparams.c) << '\n';
  out << "epsilon " << csv::format_double(model.hyperparams.epsilon) << '\n';
  out << "tolerance " << csv::format_double(model.hyperparams.tolerance) << '\n';
  out << "dimension " << d << '\n';
  out << "bias " << csv::format_double(model.bias) << '\n';
  out << "train_meta " << model.train_meta.n_train << ' ' << model.train_meta.iterations << ' '
      << csv::format_double(model.train_meta.dual_objective) << ' '
      << (model.train_meta.converged ? 1 : 0) << '\n';
  out << "norm_params\n";
  for (const auto& [lo, hi] : model.norm_params)
    out << csv::format_double(lo) << ' ' << csv::format_double(hi) << '\n';
  out << "support " << model.betas.size() << '\n';
  for (std::size_t i = 0; i < model.betas.size(); ++i) {
    out << csv::format_double(model.betas[i]);
    for (double v : model.support_vectors[i]) out << ' ' << csv::format_double(v);
    out << '\n';
  }
  out << "end\n";
}

namespace {

[[noreturn]] void bad_model(const std::string& path, const std::string& why) {
  raise(errc::invalid_model_file, path + ": " + why);
}

std::string expect_line(std::istream& in, const std::string& path) {
  std::string line;
  if (!std::getline(in, line)) bad_model(path, "truncated file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  return line;
}

double parse_tagged(const std::string& line, const std::string& tag, const std::string& path) {
  std::istringstream ss(line);
  std::string word;
  ss >> word;
  if (word != tag) bad_model(path, "expected '" + tag + "', got '" + word + "'");
  std::string value;
  ss >> value;
  auto v = csv::parse_double(value);
  if (!v) bad_model(path, "bad value for " + tag);
  return *v;
}

std::size_t parse_tagged_count(const std::string& line, const std::string& tag,
                               const std::string& path) {
  std::istringstream ss(line);
  std::string word, value;
  ss >> word >> value;
  if (word != tag) bad_model(path, "expected '" + tag + "', got '" + word + "'");
  auto v = csv::parse_index(value);
  if (!v || *v > 100'000'000) bad_model(path, "bad count for " + tag);
  return static_cast<std::size_t>(*v);
}

}  // namespace

SvrModel load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) raise(errc::io_error, "cannot open " + path);

  SvrModel model;
  if (expect_line(in, path) != "affect-svr-model 1") bad_model(path, "unrecognized header");
  if (expect_line(in, path) != "kernel linear") bad_model(path, "unsupported kernel");
  if (expect_line(in, path) != "normalization min_max_0_1") bad_model(path, "unsupported normalization");
  model.hyperparams.c = parse_tagged(expect_line(in, path), "c", path);
  model.hyperparams.epsilon = parse_tagged(expect_line(in, path), "epsilon", path);
  model.hyperparams.tolerance = parse_tagged(expect_line(in, path), "tolerance", path);
  const auto d = parse_tagged_count(expect_line(in, path), "dimension", path);
  model.bias = parse_tagged(expect_line(in, path), "bias", path);

  {
    std::istringstream ss(expect_line(in, path));
    std::string word;
    ss >> word;
    if (word != "train_meta") bad_model(path, "expected train_meta");
    std::string n_train, iters, obj, conv;
    ss >> n_train >> iters >> obj >> conv;
    auto nt = csv::parse_index(n_train);
    auto it = csv::parse_index(iters);
    auto ob = csv::parse_double(obj);
    auto cv = csv::parse_index(conv);
    if (!nt || !it || !ob || !cv || (*cv != 0 && *cv != 1)) bad_model(path, "bad train_meta");
    model.train_meta.n_train = static_cast<std::size_t>(*nt);
    model.train_meta.iterations = static_cast<std::size_t>(*it);
    model.train_meta.dual_objective = *ob;
    model.train_meta.converged = *cv == 1;
  }

  if (expect_line(in, path) != "norm_params") bad_model(path, "expected norm_params");
  model.norm_params.reserve(d);
  for (std::size_t j = 0; j < d; ++j) {
    std::istringstream ss(expect_line(in, path));
    std::string lo, hi;
    ss >> lo >> hi;
    auto l = csv::parse_double(lo);
    auto h = csv::parse_double(hi);
    if (!l || !h) bad_model(path, "bad norm_params row");
    model.norm_params.emplace_back(*l, *h);
  }

  const std::size_t n_support = parse_tagged_count(expect_line(in, path), "support", path);
  model.betas.reserve(n_support);
  model.support_vectors.reserve(n_support);
  for (std::size_t i = 0; i < n_support; ++i) {
    std::istringstream ss(expect_line(in, path));
    std::string word;
    ss >> word;
    auto beta = csv::parse_double(word);
    if (!beta) bad_model(path, "bad support row");
    std::vector<double> sv;
    sv.reserve(d);
    while (ss >> word) {
      auto v = csv::parse_double(word);
      if (!v) bad_model(path, "bad support value");
      sv.push_back(*v);
    }
    if (sv.size() != d) bad_model(path, "support vector dimension mismatch");
    model.betas.push_back(*beta);
    model.support_vectors.push_back(std::move(sv));
  }
  if (expect_line(in, path) != "end") bad_model(path, "missing end marker");
  return model;
}

}  // namespace affect::svr
