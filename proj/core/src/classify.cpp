#include "oesense/classify.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <random>
#include <set>

#include "oesense/error.hpp"

namespace oesense {

// ---- Dataset -------------------------------------------------------------

std::vector<std::size_t> Dataset::class_counts() const {
  std::vector<std::size_t> counts(n_classes(), 0);
  for (const auto& r : rows) ++counts.at(static_cast<std::size_t>(r.label));
  return counts;
}

std::vector<std::string> Dataset::subjects() const {
  std::set<std::string> s;
  for (const auto& r : rows) s.insert(r.subject);
  return {s.begin(), s.end()};
}

Dataset Dataset::subset(std::span<const std::size_t> indices) const {
  Dataset out{dim, label_names, {}};
  out.rows.reserve(indices.size());
  for (auto i : indices) out.rows.push_back(rows.at(i));
  return out;
}

Dataset Dataset::with_subject(const std::string& subject, bool keep) const {
  Dataset out{dim, label_names, {}};
  for (const auto& r : rows)
    if ((r.subject == subject) == keep) out.rows.push_back(r);
  return out;
}

void Dataset::append(const Dataset& other) {
  require(other.dim == dim, "cannot append datasets of different dimension");
  require(other.label_names == label_names,
          "cannot append datasets with different label maps");
  rows.insert(rows.end(), other.rows.begin(), other.rows.end());
}

void Dataset::validate() const {
  require(dim > 0, "dataset dimension must be positive");
  for (std::size_t i = 0; i < rows.size(); ++i) {
    require(rows[i].features.size() == dim,
            "row " + std::to_string(i) + " has " +
                std::to_string(rows[i].features.size()) + " features, expected " +
                std::to_string(dim));
    require(rows[i].label >= 0 &&
                static_cast<std::size_t>(rows[i].label) < n_classes(),
            "row " + std::to_string(i) + " has an out-of-range label");
  }
}

std::string_view to_string(ModelKind kind) noexcept {
  switch (kind) {
    case ModelKind::LogReg: return "logreg";
    case ModelKind::LinearSvm: return "linear_svm";
    case ModelKind::Knn: return "knn";
  }
  return "logreg";
}

ModelKind model_kind_from_string(std::string_view name) {
  if (name == "logreg" || name == "lr") return ModelKind::LogReg;
  if (name == "linear_svm" || name == "svm") return ModelKind::LinearSvm;
  if (name == "knn") return ModelKind::Knn;
  fail(Errc::InvalidArgument, "unknown model kind '" + std::string(name) + "'");
}

// ---- Normalizer ----------------------------------------------------------

Normalizer Normalizer::fit(const Dataset& data) {
  const std::size_t d = data.dim;
  const double n = static_cast<double>(data.rows.size());
  Normalizer nz{std::vector<double>(d, 0.0), std::vector<double>(d, 1.0)};
  if (data.rows.empty()) return nz;
  for (const auto& r : data.rows)
    for (std::size_t j = 0; j < d; ++j) nz.mean[j] += r.features[j];
  for (auto& m : nz.mean) m /= n;
  std::vector<double> var(d, 0.0);
  for (const auto& r : data.rows)
    for (std::size_t j = 0; j < d; ++j) {
      const double c = r.features[j] - nz.mean[j];
      var[j] += c * c;
    }
  for (std::size_t j = 0; j < d; ++j) {
    const double sd = std::sqrt(var[j] / n);
    // Constant features pass through centred but unscaled.
    nz.stddev[j] = sd > 1e-12 ? sd : 1.0;
  }
  return nz;
}

std::vector<double> Normalizer::apply(std::span<const double> x) const {
  std::vector<double> out(x.size());
  for (std::size_t j = 0; j < x.size(); ++j)
    out[j] = (x[j] - mean[j]) / stddev[j];
  return out;
}

// ---- Model ---------------------------------------------------------------

Model Model::linear(ModelKind kind, std::vector<std::string> labels,
                    Normalizer norm, std::vector<double> weights,
                    std::vector<double> bias) {
  require(kind != ModelKind::Knn, "linear() called with the Knn kind");
  Model m;
  m.kind_ = kind;
  m.dim_ = norm.mean.size();
  m.labels_ = std::move(labels);
  m.norm_ = std::move(norm);
  require(weights.size() == m.labels_.size() * m.dim_,
          "weight matrix does not match classes x dim");
  require(bias.size() == m.labels_.size(), "bias does not match class count");
  m.weights_ = std::move(weights);
  m.bias_ = std::move(bias);
  return m;
}

Model Model::knn(std::vector<std::string> labels, Normalizer norm, int k,
                 std::vector<double> exemplars, std::vector<int> labels_of) {
  Model m;
  m.kind_ = ModelKind::Knn;
  m.dim_ = norm.mean.size();
  m.labels_ = std::move(labels);
  m.norm_ = std::move(norm);
  require(k >= 1, "knn requires k >= 1");
  require(m.dim_ > 0 && exemplars.size() == labels_of.size() * m.dim_,
          "exemplar storage does not match dim");
  for (int l : labels_of)
    require(l >= 0 && static_cast<std::size_t>(l) < m.labels_.size(),
            "exemplar label out of range");
  m.k_ = k;
  m.exemplars_ = std::move(exemplars);
  m.exemplar_labels_ = std::move(labels_of);
  return m;
}

std::vector<double> Model::scores(std::span<const double> features) const {
  require(features.size() == dim_,
          "feature vector has " + std::to_string(features.size()) +
              " values, model expects " + std::to_string(dim_));
  const auto x = norm_.apply(features);
  const std::size_t kc = labels_.size();
  std::vector<double> s(kc, 0.0);
  if (kind_ != ModelKind::Knn) {
    for (std::size_t c = 0; c < kc; ++c) {
      double z = bias_[c];
      const double* w = weights_.data() + c * dim_;
      for (std::size_t j = 0; j < dim_; ++j) z += w[j] * x[j];
      s[c] = z;
    }
    return s;
  }
  const std::size_t n = exemplar_labels_.size();
  std::vector<std::pair<double, std::size_t>> dist(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double* e = exemplars_.data() + i * dim_;
    double d2 = 0.0;
    for (std::size_t j = 0; j < dim_; ++j) {
      const double diff = e[j] - x[j];
      d2 += diff * diff;
    }
    dist[i] = {d2, i};
  }
  const std::size_t kk = std::min<std::size_t>(static_cast<std::size_t>(k_), n);
  std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(kk),
                    dist.end());
  for (std::size_t i = 0; i < kk; ++i)
    s[static_cast<std::size_t>(exemplar_labels_[dist[i].second])] += 1.0;
  return s;
}

int Model::predict(std::span<const double> features) const {
  const auto s = scores(features);
  // max_element returns the first maximum, i.e. the lowest class id on ties.
  return static_cast<int>(std::max_element(s.begin(), s.end()) - s.begin());
}

// ---- Training ------------------------------------------------------------

namespace {

using Objective = std::function<double(const std::vector<double>&, std::vector<double>&)>;

// Full-batch gradient descent with Armijo backtracking. The objective never
// increases between epochs.
TrainStats minimize(std::vector<double>& theta, const Objective& f,
                    const TrainOptions& opts) {
  TrainStats stats;
  std::vector<double> grad(theta.size()), trial(theta.size()),
      trial_grad(theta.size());
  double loss = f(theta, grad);
  double step = 1.0;
  auto norm2 = [](const std::vector<double>& v) {
    return std::inner_product(v.begin(), v.end(), v.begin(), 0.0);
  };
  double gn2 = norm2(grad);
  while (stats.epochs < opts.max_epochs && std::sqrt(gn2) >= opts.grad_tol) {
    step = std::min(step * 2.0, 1e6);
    double trial_loss = 0.0;
    bool accepted = false;
    while (step > 1e-14) {
      for (std::size_t i = 0; i < theta.size(); ++i)
        trial[i] = theta[i] - step * grad[i];
      trial_loss = f(trial, trial_grad);
      if (trial_loss <= loss - 1e-4 * step * gn2) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;
    theta.swap(trial);
    grad.swap(trial_grad);
    loss = trial_loss;
    gn2 = norm2(grad);
    ++stats.epochs;
    stats.loss_history.push_back(loss);
  }
  stats.final_grad_norm = std::sqrt(gn2);
  return stats;
}

struct Design {
  std::vector<double> x;  // n x d normalized, row-major
  std::vector<int> y;
  std::size_t n = 0, d = 0, k = 0;
};

Design make_design(const Dataset& data, const Normalizer& nz) {
  Design ds;
  ds.n = data.rows.size();
  ds.d = data.dim;
  ds.k = data.n_classes();
  ds.x.reserve(ds.n * ds.d);
  for (const auto& r : data.rows) {
    const auto z = nz.apply(r.features);
    ds.x.insert(ds.x.end(), z.begin(), z.end());
    ds.y.push_back(r.label);
  }
  return ds;
}

// theta layout: [W (k x d) | b (k)]
double logreg_objective(const Design& ds, const std::vector<double>& theta,
                        std::vector<double>& grad) {
  const std::size_t n = ds.n, d = ds.d, k = ds.k;
  std::fill(grad.begin(), grad.end(), 0.0);
  std::vector<double> z(k);
  double loss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double* xi = ds.x.data() + i * d;
    for (std::size_t c = 0; c < k; ++c) {
      double s = theta[k * d + c];
      const double* w = theta.data() + c * d;
      for (std::size_t j = 0; j < d; ++j) s += w[j] * xi[j];
      z[c] = s;
    }
    const double zmax = *std::max_element(z.begin(), z.end());
    double sum = 0.0;
    for (auto& v : z) {
      v = std::exp(v - zmax);
      sum += v;
    }
    const auto yi = static_cast<std::size_t>(ds.y[i]);
    loss += -(std::log(z[yi] / sum));
    for (std::size_t c = 0; c < k; ++c) {
      const double r = z[c] / sum - (c == yi ? 1.0 : 0.0);
      double* g = grad.data() + c * d;
      for (std::size_t j = 0; j < d; ++j) g[j] += r * xi[j];
      grad[k * d + c] += r;
    }
  }
  const double inv = 1.0 / static_cast<double>(n);
  for (auto& g : grad) g *= inv;
  return loss * inv;
}

double svm_objective(const Design& ds, double lambda,
                     const std::vector<double>& theta, std::vector<double>& grad) {
  const std::size_t n = ds.n, d = ds.d, k = ds.k;
  std::fill(grad.begin(), grad.end(), 0.0);
  double loss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double* xi = ds.x.data() + i * d;
    for (std::size_t c = 0; c < k; ++c) {
      const double* w = theta.data() + c * d;
      double s = theta[k * d + c];
      for (std::size_t j = 0; j < d; ++j) s += w[j] * xi[j];
      const double yc = (static_cast<std::size_t>(ds.y[i]) == c) ? 1.0 : -1.0;
      const double margin = 1.0 - yc * s;
      if (margin > 0.0) {
        loss += margin * margin;
        const double r = -2.0 * margin * yc;
        double* g = grad.data() + c * d;
        for (std::size_t j = 0; j < d; ++j) g[j] += r * xi[j];
        grad[k * d + c] += r;
      }
    }
  }
  const double inv = 1.0 / static_cast<double>(n);
  for (auto& g : grad) g *= inv;
  loss *= inv;
  for (std::size_t i = 0; i < k * d; ++i) {
    loss += 0.5 * lambda * theta[i] * theta[i];
    grad[i] += lambda * theta[i];
  }
  return loss;
}

void check_trainable(const Dataset& data) {
  data.validate();
  const auto counts = data.class_counts();
  std::size_t present = 0;
  for (std::size_t c = 0; c < counts.size(); ++c) {
    if (counts[c] == 0) continue;
    ++present;
    if (counts[c] < 2)
      fail(Errc::InvalidDataset, "class '" + data.label_names[c] +
                                     "' has fewer than 2 training samples");
  }
  if (present < 2)
    fail(Errc::InvalidDataset, "training needs at least 2 distinct classes");
}

}  // namespace

TrainResult fit(const Dataset& data, const TrainOptions& opts) {
  check_trainable(data);
  auto nz = Normalizer::fit(data);
  const auto ds = make_design(data, nz);
  TrainResult res;

  if (opts.kind == ModelKind::Knn) {
    std::vector<int> labels(ds.y);
    res.model = Model::knn(data.label_names, std::move(nz), opts.k, ds.x,
                           std::move(labels));
    return res;
  }

  std::vector<double> theta(ds.k * ds.d + ds.k, 0.0);
  Objective obj;
  if (opts.kind == ModelKind::LogReg) {
    obj = [&](const std::vector<double>& t, std::vector<double>& g) {
      return logreg_objective(ds, t, g);
    };
  } else {
    obj = [&](const std::vector<double>& t, std::vector<double>& g) {
      return svm_objective(ds, opts.svm_lambda, t, g);
    };
  }
  res.stats = minimize(theta, obj, opts);
  std::vector<double> w(theta.begin(), theta.begin() + static_cast<std::ptrdiff_t>(ds.k * ds.d));
  std::vector<double> b(theta.begin() + static_cast<std::ptrdiff_t>(ds.k * ds.d), theta.end());
  res.model = Model::linear(opts.kind, data.label_names, std::move(nz),
                            std::move(w), std::move(b));
  return res;
}

Model train(const Dataset& data, const TrainOptions& opts) {
  return fit(data, opts).model;
}

// ---- Metrics & protocols -------------------------------------------------

Metrics compute_metrics(std::span<const LabelPair> pairs, std::size_t n_classes) {
  Metrics m;
  m.n = pairs.size();
  m.confusion.assign(n_classes, std::vector<std::size_t>(n_classes, 0));
  for (const auto& [t, p] : pairs) {
    require(t >= 0 && p >= 0 && static_cast<std::size_t>(t) < n_classes &&
                static_cast<std::size_t>(p) < n_classes,
            "label out of range in metrics input");
    ++m.confusion[static_cast<std::size_t>(t)][static_cast<std::size_t>(p)];
  }
  m.precision.assign(n_classes, 0.0);
  m.recall.assign(n_classes, 0.0);
  std::size_t correct = 0, active = 0;
  double psum = 0.0, rsum = 0.0;
  for (std::size_t c = 0; c < n_classes; ++c) {
    std::size_t row = 0, col = 0;
    for (std::size_t j = 0; j < n_classes; ++j) {
      row += m.confusion[c][j];
      col += m.confusion[j][c];
    }
    const std::size_t tp = m.confusion[c][c];
    correct += tp;
    if (row == 0 && col == 0) continue;  // class absent from this evaluation
    ++active;
    if (col > 0) m.precision[c] = static_cast<double>(tp) / static_cast<double>(col);
    else m.zero_division = true;
    if (row > 0) m.recall[c] = static_cast<double>(tp) / static_cast<double>(row);
    else m.zero_division = true;
    psum += m.precision[c];
    rsum += m.recall[c];
  }
  if (active > 0) {
    m.macro_precision = psum / static_cast<double>(active);
    m.macro_recall = rsum / static_cast<double>(active);
  }
  if (m.n > 0) m.accuracy = static_cast<double>(correct) / static_cast<double>(m.n);
  return m;
}

std::vector<LabelPair> predict_all(const Model& model, const Dataset& data) {
  std::vector<LabelPair> out;
  out.reserve(data.rows.size());
  for (const auto& r : data.rows) out.emplace_back(r.label, model.predict(r.features));
  return out;
}

namespace {

std::vector<std::vector<std::size_t>> shuffled_by_class(const Dataset& data,
                                                        std::uint64_t seed) {
  std::vector<std::vector<std::size_t>> by_class(data.n_classes());
  for (std::size_t i = 0; i < data.rows.size(); ++i)
    by_class.at(static_cast<std::size_t>(data.rows[i].label)).push_back(i);
  std::mt19937_64 rng(seed);
  for (auto& idx : by_class) std::shuffle(idx.begin(), idx.end(), rng);
  return by_class;
}

}  // namespace

std::vector<int> stratified_folds(const Dataset& data, int k, std::uint64_t seed) {
  require(k >= 2, "k-fold needs k >= 2");
  const auto counts = data.class_counts();
  for (std::size_t c = 0; c < counts.size(); ++c)
    if (counts[c] > 0 && counts[c] < static_cast<std::size_t>(k))
      fail(Errc::InvalidDataset, "class '" + data.label_names[c] + "' has " +
                                     std::to_string(counts[c]) +
                                     " samples, fewer than k=" + std::to_string(k));
  std::vector<int> fold(data.rows.size(), 0);
  std::size_t offset = 0;
  for (const auto& idx : shuffled_by_class(data, seed)) {
    for (std::size_t i = 0; i < idx.size(); ++i)
      fold[idx[i]] = static_cast<int>((offset + i) % static_cast<std::size_t>(k));
    offset += idx.size();
  }
  return fold;
}

std::pair<std::vector<std::size_t>, std::vector<std::size_t>> holdout_split(
    const Dataset& data, double test_fraction, std::uint64_t seed) {
  require(test_fraction > 0.0 && test_fraction < 1.0,
          "test fraction must lie in (0, 1)");
  std::vector<std::size_t> train_idx, test_idx;
  for (const auto& idx : shuffled_by_class(data, seed)) {
    const auto n_test = static_cast<std::size_t>(
        std::lround(test_fraction * static_cast<double>(idx.size())));
    for (std::size_t i = 0; i < idx.size(); ++i)
      (i < n_test ? test_idx : train_idx).push_back(idx[i]);
  }
  std::sort(train_idx.begin(), train_idx.end());
  std::sort(test_idx.begin(), test_idx.end());
  return {train_idx, test_idx};
}

Metrics kfold_cv(const Dataset& data, int k, const TrainOptions& opts,
                 std::uint64_t seed) {
  data.validate();
  const auto fold = stratified_folds(data, k, seed);
  std::vector<LabelPair> pooled;
  pooled.reserve(data.rows.size());
  for (int f = 0; f < k; ++f) {
    std::vector<std::size_t> tr, te;
    for (std::size_t i = 0; i < fold.size(); ++i) (fold[i] == f ? te : tr).push_back(i);
    const auto model = train(data.subset(tr), opts);
    const auto pairs = predict_all(model, data.subset(te));
    pooled.insert(pooled.end(), pairs.begin(), pairs.end());
  }
  return compute_metrics(pooled, data.n_classes());
}

std::vector<SubjectMetrics> leave_one_subject_out(const Dataset& data,
                                                  const TrainOptions& opts) {
  data.validate();
  const auto subjects = data.subjects();
  if (subjects.size() < 2)
    fail(Errc::InvalidDataset, "leave-one-subject-out needs at least 2 subjects");
  std::vector<SubjectMetrics> out;
  for (const auto& s : subjects) {
    const auto model = train(data.with_subject(s, false), opts);
    const auto pairs = predict_all(model, data.with_subject(s, true));
    out.push_back({s, compute_metrics(pairs, data.n_classes())});
  }
  return out;
}

Model personalize(const Dataset& base, const Dataset& personal,
                  const TrainOptions& opts) {
  Dataset merged = base;
  merged.append(personal);
  return train(merged, opts);
}

PersonalizationSplit personalization_split(const Dataset& subject_rows, int n,
                                           int reserve, std::uint64_t seed) {
  require(n >= 0, "personal sample count must be >= 0");
  require(reserve >= n, "reserve must be at least the personal sample count");
  PersonalizationSplit split{{subject_rows.dim, subject_rows.label_names, {}},
                             {subject_rows.dim, subject_rows.label_names, {}}};
  for (const auto& idx : shuffled_by_class(subject_rows, seed)) {
    for (std::size_t i = 0; i < idx.size(); ++i) {
      if (i < static_cast<std::size_t>(n))
        split.personal.rows.push_back(subject_rows.rows[idx[i]]);
      else if (i >= static_cast<std::size_t>(reserve))
        split.test.rows.push_back(subject_rows.rows[idx[i]]);
    }
  }
  return split;
}

}  // namespace oesense
