#include <gtest/gtest.h>

#include <cmath>

#include "oesense/classify.hpp"
#include "oesense/error.hpp"
#include "oesense/segmentation.hpp"
#include "oesense/spectrum.hpp"
#include "oesense/synth.hpp"

using namespace oesense;

TEST(SynthWalk, GroundTruthAndDeterminism) {
  WalkSpec spec;
  spec.n_steps = 17;
  spec.cadence_hz = 1.7;
  spec.seed = 3;
  spec.snr_db = 15.0;
  const auto a = synth_walk(spec);
  const auto b = synth_walk(spec);
  EXPECT_EQ(a.event_times_s.size(), 17u);
  EXPECT_EQ(a.trace.data(), b.trace.data());
  for (std::size_t i = 1; i < a.event_times_s.size(); ++i)
    EXPECT_GT(a.event_times_s[i], a.event_times_s[i - 1]);
  spec.seed = 4;
  EXPECT_NE(synth_walk(spec).trace.data(), a.trace.data());
}

TEST(SynthWalk, ZeroStepsIsSilent) {
  WalkSpec spec;
  spec.n_steps = 0;
  spec.duration_s = 2.0;
  const auto w = synth_walk(spec);
  EXPECT_TRUE(w.event_times_s.empty());
  for (double v : w.trace.data()) EXPECT_EQ(v, 0.0);
}

TEST(SynthWalk, EnergyMostlyBelowFiftyHertz) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    WalkSpec spec;
    spec.seed = seed;
    spec.cadence_hz = 1.0 + 0.5 * static_cast<double>(seed);
    const auto w = synth_walk(spec);
    EXPECT_GE(band_energy_ratio(w.trace, 50.0).low_fraction, 0.95) << seed;
  }
}

TEST(SynthWalk, RejectsBadSpecs) {
  WalkSpec spec;
  spec.cadence_hz = 3.5;
  EXPECT_THROW(synth_walk(spec), Error);
  spec.cadence_hz = 2.0;
  spec.n_steps = 40;
  spec.duration_s = 5.0;
  EXPECT_THROW(synth_walk(spec), Error);
}

TEST(SynthTaps, TimesAndValidation) {
  TapSpec spec;
  spec.times_s = {1.0, 2.0};
  const auto t = synth_taps(spec);
  EXPECT_EQ(t.event_times_s, spec.times_s);
  spec.times_s.clear();
  const auto silent = synth_taps(spec);
  for (double v : silent.trace.data()) EXPECT_EQ(v, 0.0);
  spec.times_s = {1.0, 1.3};
  EXPECT_THROW(synth_taps(spec), Error);
  spec.times_s = {0.1};
  EXPECT_THROW(synth_taps(spec), Error);
  spec.times_s = {4.8};
  EXPECT_THROW(synth_taps(spec), Error);
}

TEST(SynthTaps, TapZcrBelowStepZcr) {
  WalkSpec w;
  w.n_steps = 10;
  w.baseline_drift = 0.02;
  TapSpec t;
  t.times_s = {0.6, 1.6, 2.6, 3.6};
  t.baseline_drift = 0.02;
  const auto steps = extract_gestures(synth_walk(w).trace);
  const auto taps = extract_gestures(synth_taps(t).trace);
  ASSERT_FALSE(steps.empty());
  ASSERT_FALSE(taps.empty());
  double ms = 0.0, mt = 0.0;
  for (const auto& s : steps) ms += zero_crossing_rate(s);
  for (const auto& s : taps) mt += zero_crossing_rate(s);
  EXPECT_LT(mt / static_cast<double>(taps.size()), ms / static_cast<double>(steps.size()));
}

TEST(SynthMusic, EnergyAboveFiftyHertz) {
  MusicSpec a;
  a.freqs_hz = {440.0};
  EXPECT_LT(band_energy_ratio(synth_music(a), 50.0).low_fraction, 1e-3);
  MusicSpec b;
  b.freqs_hz = {200.0, 800.0, 3000.0};
  const auto mb = synth_music(b);
  const double lf = band_energy_ratio(mb, 50.0).low_fraction;
  EXPECT_LT(lf, 0.01);
  b.gains = {0.1, 0.05, 0.2};
  EXPECT_LT(band_energy_ratio(synth_music(b), 50.0).low_fraction, 0.01);
  EXPECT_NEAR(band_energy_ratio(mb.scaled(0.2), 50.0).low_fraction, lf, 1e-12);
  MusicSpec bad;
  bad.freqs_hz = {40.0};
  EXPECT_THROW(synth_music(bad), Error);
}

TEST(SynthBlobs, ShapeSeparationDeterminism) {
  BlobSpec spec;
  const auto d = synth_blobs(spec);
  EXPECT_EQ(d.rows.size(), 500u);
  EXPECT_EQ(d.n_classes(), 5u);
  EXPECT_EQ(d.dim, 8u);
  for (auto c : d.class_counts()) EXPECT_EQ(c, 100u);
  const auto e = synth_blobs(spec);
  for (std::size_t i = 0; i < d.rows.size(); ++i) EXPECT_EQ(d.rows[i].features, e.rows[i].features);

  // Empirical class means stay roughly margin * sigma apart.
  std::vector<std::vector<double>> mu(5, std::vector<double>(8, 0.0));
  for (const auto& r : d.rows)
    for (std::size_t j = 0; j < 8; ++j) mu[static_cast<std::size_t>(r.label)][j] += r.features[j] / 100.0;
  for (std::size_t a = 0; a < 5; ++a)
    for (std::size_t b = a + 1; b < 5; ++b) {
      double dd = 0.0;
      for (std::size_t j = 0; j < 8; ++j) dd += (mu[a][j] - mu[b][j]) * (mu[a][j] - mu[b][j]);
      EXPECT_GE(std::sqrt(dd), 2.0 * 5.0 * 0.9);
    }
}

TEST(SynthBlobs, SubjectsLabelled) {
  BlobSpec spec;
  spec.n_subjects = 3;
  spec.per_class = 10;
  spec.subject_shift = {0.0, 1.0, 2.0};
  const auto d = synth_blobs(spec);
  EXPECT_EQ(d.rows.size(), 150u);
  EXPECT_EQ(d.subjects(), (std::vector<std::string>{"s0", "s1", "s2"}));
}
