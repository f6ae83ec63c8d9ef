#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <set>

#include "oesense/classify.hpp"
#include "oesense/error.hpp"
#include "oesense/synth.hpp"

using namespace oesense;

namespace {

Dataset two_blobs(std::uint64_t seed = 0) {
  BlobSpec spec;
  spec.n_classes = 2;
  spec.dim = 4;
  spec.margin = 5.0;
  spec.per_class = 40;
  spec.seed = seed;
  return synth_blobs(spec);
}

Dataset five_blobs(double margin, std::uint64_t seed = 0) {
  BlobSpec spec;
  spec.margin = margin;
  spec.seed = seed;
  return synth_blobs(spec);
}

double training_accuracy(const Model& m, const Dataset& d) {
  return compute_metrics(predict_all(m, d), d.n_classes()).accuracy;
}

std::vector<double> class_mean(const Dataset& d, int label) {
  std::vector<double> mu(d.dim, 0.0);
  std::size_t n = 0;
  for (const auto& r : d.rows) {
    if (r.label != label) continue;
    for (std::size_t j = 0; j < d.dim; ++j) mu[j] += r.features[j];
    ++n;
  }
  for (auto& v : mu) v /= static_cast<double>(n);
  return mu;
}

}  // namespace

TEST(Train, SeparableBlobsPerfectTraining) {
  const auto d = two_blobs();
  for (auto kind : {ModelKind::LogReg, ModelKind::LinearSvm, ModelKind::Knn}) {
    TrainOptions o;
    o.kind = kind;
    EXPECT_DOUBLE_EQ(training_accuracy(train(d, o), d), 1.0) << to_string(kind);
  }
}

TEST(Train, Knn1ReproducesLabels) {
  const auto d = five_blobs(1.0);
  TrainOptions o;
  o.kind = ModelKind::Knn;
  o.k = 1;
  const auto m = train(d, o);
  for (const auto& r : d.rows) EXPECT_EQ(m.predict(r.features), r.label);
}

TEST(Train, DuplicatedRowsSameLogRegDecisions) {
  const auto d = five_blobs(2.0, 3);
  Dataset dd = d;
  dd.append(d);
  TrainOptions o;
  const auto a = train(d, o);
  const auto b = train(dd, o);
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-6.0, 6.0);
  for (int i = 0; i < 200; ++i) {
    std::vector<double> p(d.dim);
    for (auto& v : p) v = u(rng);
    EXPECT_EQ(a.predict(p), b.predict(p));
  }
}

TEST(Train, Errors) {
  auto d = two_blobs();
  Dataset one = d;
  std::erase_if(one.rows, [](const Sample& s) { return s.label == 1; });
  try {
    train(one, {});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::InvalidDataset);
  }
  Dataset ragged = d;
  ragged.rows[3].features.pop_back();
  EXPECT_THROW(train(ragged, {}), Error);
  const auto m = train(d, {});
  EXPECT_THROW(m.predict(std::vector<double>(3, 0.0)), Error);
}

TEST(Train, LogRegLossNonIncreasing) {
  const auto r = fit(five_blobs(1.5, 4), {});
  ASSERT_GT(r.stats.loss_history.size(), 2u);
  for (std::size_t i = 1; i < r.stats.loss_history.size(); ++i)
    EXPECT_LE(r.stats.loss_history[i], r.stats.loss_history[i - 1] + 1e-12);
}

TEST(Predict, BlobCentresAndDeterminism) {
  const auto d = five_blobs(5.0);
  for (auto kind : {ModelKind::LogReg, ModelKind::LinearSvm, ModelKind::Knn}) {
    TrainOptions o;
    o.kind = kind;
    const auto m = train(d, o);
    for (int c = 0; c < 5; ++c) {
      const auto mu = class_mean(d, c);
      EXPECT_EQ(m.predict(mu), c);
      EXPECT_EQ(m.predict(mu), m.predict(mu));
    }
  }
}

TEST(Predict, KnnTieGoesToLowestClass) {
  Normalizer n{{0.0}, {1.0}};
  const auto m = Model::knn({"a", "b"}, n, 2, {-1.0, 1.0}, {1, 0});
  EXPECT_EQ(m.predict(std::vector<double>{0.0}), 0);
}

TEST(Normalizer, ZeroMeanUnitStd) {
  const auto d = five_blobs(3.0, 8);
  const auto n = Normalizer::fit(d);
  std::vector<double> sum(d.dim, 0.0), sq(d.dim, 0.0);
  for (const auto& r : d.rows) {
    const auto z = n.apply(r.features);
    for (std::size_t j = 0; j < d.dim; ++j) {
      sum[j] += z[j];
      sq[j] += z[j] * z[j];
    }
  }
  const double cnt = static_cast<double>(d.rows.size());
  for (std::size_t j = 0; j < d.dim; ++j) {
    EXPECT_NEAR(sum[j] / cnt, 0.0, 1e-6);
    EXPECT_NEAR(std::sqrt(sq[j] / cnt), 1.0, 1e-6);
  }
}

TEST(Predict, ScaleInvarianceWithRefitNormalization) {
  const auto d = five_blobs(3.0, 5);
  Dataset s = d;
  for (auto& r : s.rows)
    for (auto& v : r.features) v *= 7.5;
  const auto a = train(d, {});
  const auto b = train(s, {});
  for (std::size_t i = 0; i < d.rows.size(); ++i)
    EXPECT_EQ(a.predict(d.rows[i].features), b.predict(s.rows[i].features));
}

TEST(Metrics, AllCorrectAndAllOneClass) {
  std::vector<LabelPair> ok = {{0, 0}, {1, 1}, {1, 1}, {0, 0}};
  const auto m = compute_metrics(ok, 2);
  EXPECT_DOUBLE_EQ(m.macro_precision, 1.0);
  EXPECT_DOUBLE_EQ(m.macro_recall, 1.0);
  std::vector<LabelPair> all_a = {{0, 0}, {0, 0}, {1, 0}, {1, 0}};
  const auto n = compute_metrics(all_a, 2);
  EXPECT_DOUBLE_EQ(n.recall[0], 1.0);
  EXPECT_DOUBLE_EQ(n.recall[1], 0.0);
  EXPECT_DOUBLE_EQ(n.macro_recall, 0.5);
  EXPECT_TRUE(n.zero_division);
  EXPECT_DOUBLE_EQ(n.precision[1], 0.0);
}

TEST(Metrics, HandBuiltThreeByThree) {
  // confusion rows (true) x cols (pred):
  //   5 1 0
  //   2 3 1
  //   0 1 4
  const int cm[3][3] = {{5, 1, 0}, {2, 3, 1}, {0, 1, 4}};
  std::vector<LabelPair> pairs;
  for (int t = 0; t < 3; ++t)
    for (int p = 0; p < 3; ++p)
      for (int i = 0; i < cm[t][p]; ++i) pairs.push_back({t, p});
  const auto m = compute_metrics(pairs, 3);
  EXPECT_EQ(m.n, 17u);
  for (int t = 0; t < 3; ++t)
    for (int p = 0; p < 3; ++p) EXPECT_EQ(m.confusion[t][p], static_cast<std::size_t>(cm[t][p]));
  EXPECT_NEAR(m.recall[0], 5.0 / 6.0, 1e-12);
  EXPECT_NEAR(m.recall[1], 3.0 / 6.0, 1e-12);
  EXPECT_NEAR(m.recall[2], 4.0 / 5.0, 1e-12);
  EXPECT_NEAR(m.precision[0], 5.0 / 7.0, 1e-12);
  EXPECT_NEAR(m.precision[1], 3.0 / 5.0, 1e-12);
  EXPECT_NEAR(m.precision[2], 4.0 / 5.0, 1e-12);
  EXPECT_NEAR(m.macro_recall, (5.0 / 6.0 + 0.5 + 0.8) / 3.0, 1e-12);
  EXPECT_NEAR(m.macro_precision, (5.0 / 7.0 + 0.6 + 0.8) / 3.0, 1e-12);
  EXPECT_NEAR(m.accuracy, 12.0 / 17.0, 1e-12);
  EXPECT_FALSE(m.zero_division);
}

TEST(Folds, PartitionAndBalance) {
  BlobSpec spec;
  spec.per_class = 23;
  const auto d = synth_blobs(spec);
  const auto folds = stratified_folds(d, 5, 42);
  ASSERT_EQ(folds.size(), d.rows.size());
  std::vector<std::vector<std::size_t>> per(5, std::vector<std::size_t>(5, 0));
  for (std::size_t i = 0; i < folds.size(); ++i) {
    ASSERT_GE(folds[i], 0);
    ASSERT_LT(folds[i], 5);
    ++per[static_cast<std::size_t>(folds[i])][static_cast<std::size_t>(d.rows[i].label)];
  }
  for (std::size_t f = 0; f < 5; ++f)
    for (std::size_t c = 0; c < 5; ++c) EXPECT_LE(std::abs(static_cast<double>(per[f][c]) - 23.0 / 5.0), 1.0);
  EXPECT_EQ(stratified_folds(d, 5, 42), folds);
  spec.per_class = 3;
  try {
    stratified_folds(synth_blobs(spec), 5, 0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::InvalidDataset);
  }
}

TEST(Holdout, DisjointCover) {
  const auto d = five_blobs(5.0);
  const auto [tr, te] = holdout_split(d, 0.2, 1);
  std::set<std::size_t> all(tr.begin(), tr.end());
  for (auto i : te) EXPECT_TRUE(all.insert(i).second);
  EXPECT_EQ(all.size(), d.rows.size());
  EXPECT_EQ(te.size(), 100u);
}

TEST(KfoldCv, SeparableAndDeterministic) {
  const auto d = five_blobs(5.0, 2);
  for (auto kind : {ModelKind::LogReg, ModelKind::LinearSvm}) {
    TrainOptions o;
    o.kind = kind;
    const auto a = kfold_cv(d, 5, o, 9);
    EXPECT_GE(a.macro_recall, 0.98);
    EXPECT_EQ(a.n, d.rows.size());
    const auto b = kfold_cv(d, 5, o, 9);
    EXPECT_EQ(a.confusion, b.confusion);
  }
}

TEST(KfoldCv, OverlappingBlobsNearChance) {
  const auto m = kfold_cv(five_blobs(0.1, 6), 5, {}, 0);
  EXPECT_NEAR(m.macro_recall, 0.2, 0.1);
}

TEST(LeaveOneOut, ShiftedSubjectScoresLower) {
  BlobSpec spec;
  spec.n_subjects = 3;
  spec.per_class = 40;
  spec.margin = 4.0;
  spec.subject_shift = {0.0, 0.0, 8.0};
  spec.seed = 12;
  const auto d = synth_blobs(spec);
  const auto res = leave_one_subject_out(d, {});
  ASSERT_EQ(res.size(), 3u);
  EXPECT_GE(res[0].metrics.macro_recall, 0.9);
  EXPECT_GE(res[1].metrics.macro_recall, 0.9);
  EXPECT_LT(res[2].metrics.macro_recall, res[0].metrics.macro_recall);
  EXPECT_LT(res[2].metrics.macro_recall, res[1].metrics.macro_recall);

  spec.n_subjects = 1;
  spec.subject_shift.clear();
  EXPECT_THROW(leave_one_subject_out(synth_blobs(spec), {}), Error);
}

TEST(Personalize, ZeroRowsMatchesLeaveOneOut) {
  BlobSpec spec;
  spec.n_subjects = 3;
  spec.per_class = 30;
  spec.subject_shift = {0.0, 0.0, 2.5};
  spec.seed = 2;
  const auto d = synth_blobs(spec);
  const auto base = d.with_subject("s2", false);
  const auto own = d.with_subject("s2", true);
  const auto split = personalization_split(own, 0, 20, 1);
  EXPECT_TRUE(split.personal.rows.empty());
  const auto plain = train(base, {});
  const auto pers = personalize(base, split.personal, {});
  for (const auto& r : own.rows) EXPECT_EQ(plain.predict(r.features), pers.predict(r.features));

  const auto ten = personalization_split(own, 10, 20, 1);
  EXPECT_EQ(ten.personal.rows.size(), 50u);
  EXPECT_EQ(ten.test.rows.size(), split.test.rows.size());
  const auto m0 = compute_metrics(predict_all(pers, split.test), 5);
  const auto m10 = compute_metrics(predict_all(personalize(base, ten.personal, {}), ten.test), 5);
  EXPECT_GE(m10.macro_recall, m0.macro_recall);
}
