#pragma once

// Linear SVM on dense features: L2-regularized hinge loss minimized by
// seeded stochastic subgradient descent (step 1/(lambda * t), t counted over
// all updates), the bias treated as the weight of a constant feature, and
// the returned weights averaged over the iterates of the last epoch.
// Multiclass problems are reduced one-vs-rest; two-class problems keep a
// single weight vector that scores the higher class id.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <memory>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "hats/error.hpp"
#include "hats/feature_io.hpp"
#include "hats/random.hpp"

namespace hats {

struct SvmHyper {
  double lambda = 1e-4;
  int epochs = 50;
  std::uint64_t seed = 1;
  bool standardize = false;

  friend bool operator==(const SvmHyper&, const SvmHyper&) = default;
};

struct LinearModel {
  std::vector<std::uint32_t> classes;       // ascending
  std::vector<std::vector<double>> weights;  // one row (binary) or one per class
  std::vector<double> bias;
  std::size_t dimension = 0;
  SvmHyper hyper{};
  std::string fingerprint;
  // Per-dimension standardization, empty when disabled.
  std::vector<double> mean;
  std::vector<double> scale;

  bool binary() const noexcept { return classes.size() == 2; }

  friend bool operator==(const LinearModel&, const LinearModel&) = default;
};

/// Objective of one binary subproblem at (w, b): lambda/2 (|w|^2 + b^2) +
/// mean hinge loss, labels in {-1, +1}.
inline double svm_objective(const FeatureMatrix& x, std::span<const int> y, std::span<const double> w, double b,
                            double lambda) {
  double hinge = 0.0;
  for (std::size_t i = 0; i < x.rows(); ++i) {
    const auto row = x.row(i);
    const double s = std::inner_product(row.begin(), row.end(), w.begin(), b);
    hinge += std::max(0.0, 1.0 - y[i] * s);
  }
  const double reg = std::inner_product(w.begin(), w.end(), w.begin(), b * b);
  return 0.5 * lambda * reg + hinge / static_cast<double>(x.rows());
}

namespace detail {

struct BinarySolution {
  std::vector<double> w;
  double b = 0.0;
  std::vector<double> epoch_objective;  // at each epoch's averaged iterate
};

inline BinarySolution train_binary(const FeatureMatrix& x, std::span<const int> y, const SvmHyper& hyper,
                                   bool trace) {
  const std::size_t n = x.rows();
  const std::size_t d = x.cols();
  BinarySolution sol;
  sol.w.assign(d, 0.0);
  std::vector<double> w(d, 0.0), avg_w(d, 0.0);
  double b = 0.0, avg_b = 0.0, best = 0.0;
  std::vector<std::size_t> order(n);
  std::uint64_t step = 0;
  for (int epoch = 0; epoch < hyper.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    SplitMix64 rng(derive_seed(hyper.seed, static_cast<std::uint64_t>(epoch)));
    shuffle(order, rng);
    std::fill(avg_w.begin(), avg_w.end(), 0.0);
    avg_b = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      const std::size_t i = order[k];
      ++step;
      const double eta = 1.0 / (hyper.lambda * static_cast<double>(step));
      const auto row = x.row(i);
      const double score = std::inner_product(row.begin(), row.end(), w.begin(), b);
      const double shrink = 1.0 - eta * hyper.lambda;
      for (double& v : w) v *= shrink;
      b *= shrink;
      if (y[i] * score < 1.0) {
        const double g = eta * y[i];
        for (std::size_t j = 0; j < d; ++j) w[j] += g * row[j];
        b += g;
      }
      // Running mean of this epoch's iterates.
      const double a = 1.0 / static_cast<double>(k + 1);
      for (std::size_t j = 0; j < d; ++j) avg_w[j] += a * (w[j] - avg_w[j]);
      avg_b += a * (b - avg_b);
    }
    // Keep the best epoch average seen so far, so the reported objective
    // never goes up even when one epoch's average lands worse than the last.
    const double obj = svm_objective(x, y, avg_w, avg_b, hyper.lambda);
    if (epoch == 0 || obj <= best) {
      best = obj;
      sol.w = avg_w;
      sol.b = avg_b;
    }
    if (trace) sol.epoch_objective.push_back(best);
  }
  return sol;
}

inline void check_matrix_labels(const FeatureMatrix& x, std::span<const std::uint32_t> labels) {
  if (x.rows() != labels.size())
    throw Error(ErrorCode::DimensionMismatch, std::to_string(x.rows()) + " feature rows but " +
                                                  std::to_string(labels.size()) + " labels");
}

}  // namespace detail

inline void standardize_in_place(FeatureMatrix& x, std::span<const double> mean, std::span<const double> scale) {
  for (std::size_t i = 0; i < x.rows(); ++i) {
    auto r = x.row(i);
    for (std::size_t j = 0; j < x.cols(); ++j) r[j] = (r[j] - mean[j]) / scale[j];
  }
}

/// Per-epoch training objective of each binary subproblem, recorded at the
/// epoch's averaged iterate.
struct TrainingTrace {
  std::vector<std::vector<double>> epoch_objective;
};

inline LinearModel train_linear_svm(const FeatureMatrix& features, std::span<const std::uint32_t> labels,
                                    const SvmHyper& hyper, TrainingTrace* trace = nullptr) {
  detail::check_matrix_labels(features, labels);
  if (!(hyper.lambda > 0.0)) throw Error(ErrorCode::InvalidArgument, "lambda must be > 0");
  if (hyper.epochs < 1) throw Error(ErrorCode::InvalidArgument, "epochs must be >= 1");
  LinearModel model;
  model.classes.assign(labels.begin(), labels.end());
  std::sort(model.classes.begin(), model.classes.end());
  model.classes.erase(std::unique(model.classes.begin(), model.classes.end()), model.classes.end());
  if (model.classes.size() < 2)
    throw Error(ErrorCode::SingleClassInput, "training needs at least two classes");
  model.dimension = features.cols();
  model.hyper = hyper;

  const FeatureMatrix* x = &features;
  FeatureMatrix standardized;
  if (hyper.standardize) {
    const std::size_t n = features.rows(), d = features.cols();
    model.mean.assign(d, 0.0);
    model.scale.assign(d, 0.0);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < d; ++j) model.mean[j] += features.row(i)[j] / static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < d; ++j) {
        const double c = features.row(i)[j] - model.mean[j];
        model.scale[j] += c * c / static_cast<double>(n);
      }
    for (double& s : model.scale) s = s > 0.0 ? std::sqrt(s) : 1.0;
    standardized = features;
    standardize_in_place(standardized, model.mean, model.scale);
    x = &standardized;
  }

  const std::size_t heads = model.binary() ? 1 : model.classes.size();
  std::vector<int> y(labels.size());
  for (std::size_t h = 0; h < heads; ++h) {
    const std::uint32_t positive = model.binary() ? model.classes[1] : model.classes[h];
    for (std::size_t i = 0; i < labels.size(); ++i) y[i] = labels[i] == positive ? 1 : -1;
    auto sol = detail::train_binary(*x, y, hyper, trace != nullptr);
    model.weights.push_back(std::move(sol.w));
    model.bias.push_back(sol.b);
    if (trace) trace->epoch_objective.push_back(std::move(sol.epoch_objective));
  }
  return model;
}

/// Scores w . x + b, one row per sample, one column per weight vector.
inline std::vector<std::vector<double>> decision_scores(const LinearModel& model, const FeatureMatrix& features) {
  if (features.cols() != model.dimension)
    throw Error(ErrorCode::DimensionMismatch, "model expects dimension " + std::to_string(model.dimension) +
                                                  ", features have " + std::to_string(features.cols()));
  std::vector<std::vector<double>> out(features.rows(), std::vector<double>(model.weights.size()));
  std::vector<double> buf(features.cols());
  for (std::size_t i = 0; i < features.rows(); ++i) {
    auto row = features.row(i);
    std::span<const double> v = row;
    if (!model.mean.empty()) {
      for (std::size_t j = 0; j < row.size(); ++j) buf[j] = (row[j] - model.mean[j]) / model.scale[j];
      v = buf;
    }
    for (std::size_t h = 0; h < model.weights.size(); ++h)
      out[i][h] = std::inner_product(v.begin(), v.end(), model.weights[h].begin(), model.bias[h]);
  }
  return out;
}

/// Binary: higher class when the score is > 0. Multiclass: argmax. Ties go
/// to the lower class index.
inline std::vector<std::uint32_t> predict(const LinearModel& model, const FeatureMatrix& features) {
  const auto scores = decision_scores(model, features);
  std::vector<std::uint32_t> out;
  out.reserve(scores.size());
  for (const auto& s : scores) {
    if (model.binary()) {
      out.push_back(s[0] > 0.0 ? model.classes[1] : model.classes[0]);
    } else {
      const auto best = std::max_element(s.begin(), s.end());  // first maximum
      out.push_back(model.classes[static_cast<std::size_t>(best - s.begin())]);
    }
  }
  return out;
}

/// Score of the positive (higher) class for binary models.
inline std::vector<double> positive_scores(const LinearModel& model, const FeatureMatrix& features) {
  if (!model.binary()) throw Error(ErrorCode::InvalidArgument, "positive scores need a two-class model");
  const auto scores = decision_scores(model, features);
  std::vector<double> out(scores.size());
  for (std::size_t i = 0; i < scores.size(); ++i) out[i] = scores[i][0];
  return out;
}

inline double accuracy(std::span<const std::uint32_t> predicted, std::span<const std::uint32_t> actual) {
  if (predicted.size() != actual.size())
    throw Error(ErrorCode::LengthMismatch, "prediction and label vectors differ in length");
  if (predicted.empty()) throw Error(ErrorCode::EmptyInput, "accuracy of an empty set");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < predicted.size(); ++i) hits += predicted[i] == actual[i];
  return static_cast<double>(hits) / static_cast<double>(predicted.size());
}

struct RocPoint {
  double fpr = 0.0;
  double tpr = 0.0;
};

struct RocCurve {
  std::vector<RocPoint> points;
  double auc = 0.0;
};

/// ROC by descending-score threshold sweep; equal scores form one step, so
/// the trapezoidal AUC gives tied positive/negative pairs half credit.
/// `positive` holds the binary labels (true = positive class).
inline RocCurve roc_auc(std::span<const double> scores, std::span<const bool> positive) {
  if (scores.size() != positive.size())
    throw Error(ErrorCode::LengthMismatch, "scores and labels differ in length");
  const auto n_pos = static_cast<std::size_t>(std::count(positive.begin(), positive.end(), true));
  const std::size_t n_neg = positive.size() - n_pos;
  if (n_pos == 0 || n_neg == 0) throw Error(ErrorCode::SingleClassInput, "ROC needs both classes");
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  RocCurve roc;
  roc.points.push_back({0.0, 0.0});
  std::size_t tp = 0, fp = 0;
  double area2 = 0.0;  // twice the area, in units of (1/n_neg)(1/n_pos)
  for (std::size_t k = 0; k < order.size();) {
    const double s = scores[order[k]];
    std::size_t dtp = 0, dfp = 0;
    for (; k < order.size() && scores[order[k]] == s; ++k) (positive[order[k]] ? dtp : dfp) += 1;
    area2 += static_cast<double>(dfp) * static_cast<double>(2 * tp + dtp);
    tp += dtp;
    fp += dfp;
    roc.points.push_back({static_cast<double>(fp) / static_cast<double>(n_neg),
                          static_cast<double>(tp) / static_cast<double>(n_pos)});
  }
  roc.auc = area2 / (2.0 * static_cast<double>(n_pos) * static_cast<double>(n_neg));
  return roc;
}

inline RocCurve roc_auc(std::span<const double> scores, std::span<const std::uint32_t> labels,
                        std::uint32_t positive_class) {
  std::unique_ptr<bool[]> flags(new bool[labels.size()]);
  for (std::size_t i = 0; i < labels.size(); ++i) flags[i] = labels[i] == positive_class;
  return roc_auc(scores, std::span<const bool>(flags.get(), labels.size()));
}

/// Stratified, seeded split. Returns (train, test) indices, each ascending.
inline std::pair<std::vector<std::size_t>, std::vector<std::size_t>> stratified_split(
    std::span<const std::uint32_t> labels, double test_fraction, std::uint64_t seed) {
  if (!(test_fraction >= 0.0 && test_fraction < 1.0))
    throw Error(ErrorCode::InvalidArgument, "test fraction must be in [0, 1)");
  std::map<std::uint32_t, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < labels.size(); ++i) by_class[labels[i]].push_back(i);
  std::vector<std::size_t> train, test;
  for (auto& [cls, idx] : by_class) {
    SplitMix64 rng(derive_seed(seed, cls));
    shuffle(idx, rng);
    const auto n_test = static_cast<std::size_t>(std::llround(test_fraction * static_cast<double>(idx.size())));
    test.insert(test.end(), idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_test));
    train.insert(train.end(), idx.begin() + static_cast<std::ptrdiff_t>(n_test), idx.end());
  }
  std::sort(train.begin(), train.end());
  std::sort(test.begin(), test.end());
  return {std::move(train), std::move(test)};
}

}  // namespace hats
