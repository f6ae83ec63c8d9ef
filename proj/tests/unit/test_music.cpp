#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "oesense/error.hpp"
#include "oesense/filter.hpp"
#include "oesense/music.hpp"
#include "oesense/spectrum.hpp"
#include "oesense/synth.hpp"
#include "oracles.hpp"

using namespace oesense;

namespace {

Spectrogram random_spec(std::size_t bins, std::size_t frames, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 10.0);
  std::vector<double> v(bins * frames);
  for (auto& x : v) x = u(rng);
  return Spectrogram(bins, frames, v, 1.0, 1.0);
}

// Direct per-window SSIM with population-free sample covariance, written
// independently of the library.
double reference_ssim(const Spectrogram& a, const Spectrogram& b) {
  double L = 0.0;
  for (double v : a.values()) L = std::max(L, v);
  for (double v : b.values()) L = std::max(L, v);
  const double c1 = (0.01 * L) * (0.01 * L), c2 = (0.03 * L) * (0.03 * L);
  double total = 0.0;
  std::size_t count = 0;
  for (std::size_t i = 0; i + 8 <= a.n_bins(); ++i)
    for (std::size_t j = 0; j + 8 <= a.n_frames(); ++j) {
      std::vector<double> xa, xb;
      for (std::size_t p = 0; p < 8; ++p)
        for (std::size_t q = 0; q < 8; ++q) {
          xa.push_back(a.at(i + p, j + q));
          xb.push_back(b.at(i + p, j + q));
        }
      double ma = 0, mb = 0;
      for (std::size_t k = 0; k < 64; ++k) ma += xa[k], mb += xb[k];
      ma /= 64;
      mb /= 64;
      double va = 0, vb = 0, cab = 0;
      for (std::size_t k = 0; k < 64; ++k) {
        va += (xa[k] - ma) * (xa[k] - ma);
        vb += (xb[k] - mb) * (xb[k] - mb);
        cab += (xa[k] - ma) * (xb[k] - mb);
      }
      va /= 63;
      vb /= 63;
      cab /= 63;
      total += ((2 * ma * mb + c1) * (2 * cab + c2)) /
               ((ma * ma + mb * mb + c1) * (va + vb + c2));
      ++count;
    }
  return std::clamp(total / static_cast<double>(count), 0.0, 1.0);
}

}  // namespace

TEST(Superimpose, Identities) {
  const AudioTrace act(oracle::sine(20.0, 0.4, 1.0, 1000), 1000);
  const AudioTrace silence(std::vector<double>(1000, 0.0), 1000);
  const AudioTrace music(oracle::sine(200.0, 0.3, 0.37, 1000), 1000);
  EXPECT_EQ(superimpose(act, silence).trace.data(), act.data());
  EXPECT_EQ(superimpose(act, music, 0.0).trace.data(), act.data());
  const auto m = superimpose(silence, music, 1.0);
  for (std::size_t i = 0; i < 1000; ++i) EXPECT_EQ(m.trace[i], music[i % music.size()]);
  EXPECT_FALSE(m.rescaled);
  EXPECT_THROW(superimpose(act, AudioTrace(std::vector<double>(10, 0.0), 2000)), Error);
}

TEST(Superimpose, RescalesOnOverflow) {
  const AudioTrace a(std::vector<double>(100, 0.8), 1000);
  const auto r = superimpose(a, a, 1.0);
  EXPECT_TRUE(r.rescaled);
  for (double v : r.trace.data()) EXPECT_NEAR(v, 1.0, 1e-12);
}

TEST(Ssim, SelfSymmetryAndReference) {
  const auto a = random_spec(20, 30, 1);
  const auto b = random_spec(20, 30, 2);
  EXPECT_NEAR(spectrogram_ssim(a, a), 1.0, 1e-12);
  EXPECT_NEAR(spectrogram_ssim(a, b), spectrogram_ssim(b, a), 1e-12);
  EXPECT_NEAR(spectrogram_ssim(a, b), reference_ssim(a, b), 1e-9);
  EXPECT_THROW(spectrogram_ssim(a, random_spec(20, 29, 3)), Error);
}

TEST(Ssim, InvertedCopyScoresLow) {
  const auto a = random_spec(16, 24, 4);
  double mx = 0.0;
  for (double v : a.values()) mx = std::max(mx, v);
  std::vector<double> inv;
  for (double v : a.values()) inv.push_back(mx - v);
  const Spectrogram b(16, 24, inv, 1.0, 1.0);
  EXPECT_LT(spectrogram_ssim(a, b), 0.3);
}

TEST(Ssim, ScalingPenalized) {
  const auto a = random_spec(16, 24, 5);
  EXPECT_LT(spectrogram_ssim(a, a.scaled(2.0)), 1.0);
}

TEST(Pearson, Basics) {
  const std::vector<double> x = {1.0, 3.0, 2.0, 5.0, 4.0};
  std::vector<double> neg, aff;
  for (double v : x) neg.push_back(-v), aff.push_back(3.0 * v + 7.0);
  EXPECT_NEAR(pearson(x, x), 1.0, 1e-12);
  EXPECT_NEAR(pearson(x, neg), -1.0, 1e-12);
  EXPECT_NEAR(pearson(aff, x), 1.0, 1e-12);
  try {
    pearson(std::vector<double>(5, 2.0), x);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::UndefinedCorrelation);
  }
  EXPECT_THROW(pearson(std::vector<double>{1.0, 2.0}, x), Error);
}

TEST(MusicImpact, LowpassRemovesMusic) {
  WalkSpec w;
  w.n_steps = 10;
  w.seed = 7;
  const auto walk = synth_walk(w);
  MusicSpec m;
  m.freqs_hz = {220.0, 440.0, 660.0, 1320.0};
  m.duration_s = 2.0;
  const auto music = synth_music(m);
  const auto rep = music_impact(walk.trace, music);
  EXPECT_GE(rep.pearson, 0.98);
  EXPECT_GE(rep.ssim, 0.0);
  EXPECT_LE(rep.ssim, 1.0);
  EXPECT_LT(rep.low_band_fraction, 0.01);
}
