#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace oesense {

struct Sample {
  std::vector<double> features;
  int label = 0;        // index into Dataset::label_names
  std::string subject;  // free-form subject id
};

/// Labeled feature rows. Every row has `dim` features and a label in
/// [0, label_names.size()).
struct Dataset {
  std::size_t dim = 0;
  std::vector<std::string> label_names;
  std::vector<Sample> rows;

  std::size_t n_classes() const noexcept { return label_names.size(); }
  std::vector<std::size_t> class_counts() const;
  std::vector<std::string> subjects() const;  // sorted, unique

  Dataset subset(std::span<const std::size_t> indices) const;
  /// Rows whose subject equals (or differs from) `subject`.
  Dataset with_subject(const std::string& subject, bool keep) const;
  void append(const Dataset& other);
  /// Throws Errc::InvalidArgument on ragged rows or out-of-range labels.
  void validate() const;
};

enum class ModelKind { LogReg, LinearSvm, Knn };

std::string_view to_string(ModelKind kind) noexcept;
ModelKind model_kind_from_string(std::string_view name);

struct TrainOptions {
  ModelKind kind = ModelKind::LogReg;
  int k = 5;                  // neighbours for Knn
  int max_epochs = 500;
  double grad_tol = 1e-5;
  double svm_lambda = 1e-3;
};

/// Per-feature z-score parameters learned from training data.
struct Normalizer {
  std::vector<double> mean;
  std::vector<double> stddev;

  static Normalizer fit(const Dataset& data);
  std::vector<double> apply(std::span<const double> x) const;
};

/// A trained classifier. Immutable after training; safe to share across
/// threads for prediction.
class Model {
 public:
  ModelKind kind() const noexcept { return kind_; }
  std::size_t dim() const noexcept { return dim_; }
  std::size_t n_classes() const noexcept { return labels_.size(); }
  const std::vector<std::string>& label_names() const noexcept { return labels_; }
  const Normalizer& normalizer() const noexcept { return norm_; }
  int k() const noexcept { return k_; }

  /// Raw class scores (higher is better). For Knn: neighbour vote counts.
  std::vector<double> scores(std::span<const double> features) const;
  /// argmax of scores(); ties go to the lowest class id.
  int predict(std::span<const double> features) const;

  // Linear models: weights_ is n_classes x dim (row-major), bias_ n_classes.
  const std::vector<double>& weights() const noexcept { return weights_; }
  const std::vector<double>& bias() const noexcept { return bias_; }
  // Knn: normalized exemplars (row-major) and their labels.
  const std::vector<double>& exemplars() const noexcept { return exemplars_; }
  const std::vector<int>& exemplar_labels() const noexcept { return exemplar_labels_; }

  static Model linear(ModelKind kind, std::vector<std::string> labels,
                      Normalizer norm, std::vector<double> weights,
                      std::vector<double> bias);
  static Model knn(std::vector<std::string> labels, Normalizer norm, int k,
                   std::vector<double> exemplars, std::vector<int> labels_of);

 private:
  ModelKind kind_ = ModelKind::LogReg;
  std::size_t dim_ = 0;
  std::vector<std::string> labels_;
  Normalizer norm_;
  std::vector<double> weights_;
  std::vector<double> bias_;
  int k_ = 5;
  std::vector<double> exemplars_;
  std::vector<int> exemplar_labels_;
};

struct TrainStats {
  int epochs = 0;
  double final_grad_norm = 0.0;
  // Objective after each epoch (linear models only).
  std::vector<double> loss_history;
};

struct TrainResult {
  Model model;
  TrainStats stats;
};

/// LogReg: multinomial cross-entropy; LinearSvm: one-vs-rest squared hinge
/// with L2 penalty. Both use full-batch gradient descent with backtracking
/// from zero weights and stop at grad_tol or max_epochs. Knn stores the
/// normalized training rows.
TrainResult fit(const Dataset& data, const TrainOptions& opts);
Model train(const Dataset& data, const TrainOptions& opts);

struct Metrics {
  std::vector<std::vector<std::size_t>> confusion;  // [true][predicted]
  std::vector<double> precision;
  std::vector<double> recall;
  double macro_precision = 0.0;
  double macro_recall = 0.0;
  double accuracy = 0.0;
  std::size_t n = 0;
  // Some class had no predictions or no samples; its ratio was set to 0.
  bool zero_division = false;
};

using LabelPair = std::pair<int, int>;  // (true, predicted)

Metrics compute_metrics(std::span<const LabelPair> pairs, std::size_t n_classes);

std::vector<LabelPair> predict_all(const Model& model, const Dataset& data);

/// Stratified assignment of rows to `k` folds (returns fold index per row).
/// Rows of each class are shuffled with `seed` and dealt round-robin, with
/// the dealing offset carried across classes so fold sizes stay balanced.
std::vector<int> stratified_folds(const Dataset& data, int k, std::uint64_t seed);

/// Stratified split; returns (train indices, test indices).
std::pair<std::vector<std::size_t>, std::vector<std::size_t>> holdout_split(
    const Dataset& data, double test_fraction, std::uint64_t seed);

/// Pooled held-out predictions over k stratified folds.
Metrics kfold_cv(const Dataset& data, int k, const TrainOptions& opts,
                 std::uint64_t seed);

struct SubjectMetrics {
  std::string subject;
  Metrics metrics;
};

/// Train on all other subjects, test on each held-out subject in turn.
std::vector<SubjectMetrics> leave_one_subject_out(const Dataset& data,
                                                  const TrainOptions& opts);

/// Retrain on the general data plus the subject's personal rows.
Model personalize(const Dataset& base, const Dataset& personal,
                  const TrainOptions& opts);

struct PersonalizationSplit {
  Dataset personal;  // first n rows per class of the subject
  Dataset test;      // subject rows outside the reserved pool
};

/// Draws `n` rows per class from `subject` (after a seeded shuffle) as
/// personal data and tests on rows beyond the first `reserve` per class, so
/// runs with different n share one test set.
PersonalizationSplit personalization_split(const Dataset& subject_rows, int n,
                                           int reserve, std::uint64_t seed);

}  // namespace oesense
