#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "oesense/audio.hpp"
#include "oesense/error.hpp"
#include "oesense/filter.hpp"
#include "oesense/spectrum.hpp"
#include "oracles.hpp"

using namespace oesense;

namespace {

AudioTrace tone(double f, double amp = 1.0, double dur = 1.0, int rate = 48000) {
  return AudioTrace(oracle::sine(f, amp, dur, rate), rate);
}

double diff_norm(const std::vector<double>& a, const std::vector<double>& b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(acc);
}

double norm(const std::vector<double>& a) {
  double acc = 0.0;
  for (double v : a) acc += v * v;
  return std::sqrt(acc);
}

}  // namespace

TEST(AudioTrace, RejectsNonFiniteAndBadRate) {
  EXPECT_THROW(AudioTrace({0.0, NAN}, 1000), Error);
  EXPECT_THROW(AudioTrace({0.0, INFINITY}, 1000), Error);
  EXPECT_THROW(AudioTrace({0.0}, 0), Error);
  AudioTrace t(std::vector<double>(48000, 0.0), 48000);
  EXPECT_DOUBLE_EQ(t.duration_s(), 1.0);
}

TEST(AudioTrace, StereoRequiresMatchingChannels) {
  AudioTrace a(std::vector<double>(10, 0.0), 1000);
  AudioTrace b(std::vector<double>(11, 0.0), 1000);
  AudioTrace c(std::vector<double>(10, 0.0), 2000);
  EXPECT_THROW(StereoTrace(a, b), Error);
  EXPECT_THROW(StereoTrace(a, c), Error);
  StereoTrace s(a, a);
  EXPECT_EQ(s.left().channel(), Channel::Left);
  EXPECT_EQ(s.right().channel(), Channel::Right);
}

TEST(Lowpass, PassbandToneKeepsRms) {
  const auto in = tone(30.0);
  const auto out = lowpass(in, 50.0);
  ASSERT_EQ(out.size(), in.size());
  const double ratio = oracle::rms(out.data(), 4800) / oracle::rms(in.data(), 4800);
  EXPECT_NEAR(ratio, 1.0, 0.05);
  EXPECT_NEAR(ratio, oracle::zero_phase_gain(30.0, 50.0, 48000, 4), 2e-3);
}

TEST(Lowpass, StopbandToneAttenuated) {
  const auto in = tone(440.0);
  const auto out = lowpass(in, 50.0);
  EXPECT_LE(oracle::rms(out.data()), 0.01 * oracle::rms(in.data()));
}

TEST(Lowpass, ZeroInZeroOut) {
  AudioTrace z(std::vector<double>(4800, 0.0), 48000);
  const auto out = lowpass(z, 50.0);
  for (double v : out.data()) EXPECT_EQ(v, 0.0);
}

TEST(Lowpass, Errors) {
  AudioTrace empty(std::vector<double>{}, 48000);
  EXPECT_THROW(lowpass(empty, 50.0), Error);
  EXPECT_THROW(lowpass(tone(30.0), 24000.0), Error);
  EXPECT_THROW(lowpass(tone(30.0), 30000.0), Error);
  EXPECT_THROW(lowpass(tone(30.0), 0.0), Error);
}

TEST(Lowpass, TracksFrequencyResponseOracle) {
  // Tone sweep at the 1 kHz pipeline rate; compare the steady-state RMS
  // ratio with the analytic zero-phase Butterworth response.
  for (double f : {2.0, 5.0, 10.0, 20.0, 25.0, 40.0, 50.0, 60.0, 80.0, 100.0, 150.0}) {
    const auto in = tone(f, 1.0, 4.0, 1000);
    const auto out = lowpass(in, 50.0);
    const double measured = oracle::rms(out.data(), 500) / oracle::rms(in.data(), 500);
    const double expected = oracle::zero_phase_gain(f, 50.0, 1000.0, 4);
    EXPECT_NEAR(measured, expected, 2e-3 + 0.01 * expected) << "f=" << f;
  }
}

TEST(Lowpass, IdempotentOnBandLimitedInput) {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<double> x(4000);
  for (auto& v : x) v = g(rng);
  // Band-limit well inside the passband first.
  const auto base = lowpass(AudioTrace(x, 1000), 10.0);
  const auto once = lowpass(base, 50.0);
  const auto twice = lowpass(once, 50.0);
  EXPECT_LE(diff_norm(twice.data(), once.data()), 1e-3 * norm(once.data()));
}

TEST(Decimate, LengthAndRate) {
  const auto lp = lowpass(AudioTrace(std::vector<double>(48000, 0.0), 48000), 50.0);
  const auto d = decimate(lp, 48);
  EXPECT_EQ(d.size(), 1000u);
  EXPECT_EQ(d.sample_rate_hz(), 1000);
  const auto odd = decimate(lowpass(AudioTrace(std::vector<double>(48047, 0.0), 48000), 50.0), 48);
  EXPECT_EQ(odd.size(), 48047u / 48u);
}

TEST(Decimate, FactorOneIsIdentity) {
  const auto in = tone(30.0, 0.5, 0.1);
  const auto out = decimate(in, 1);
  EXPECT_EQ(out.data(), in.data());
  EXPECT_EQ(out.sample_rate_hz(), in.sample_rate_hz());
}

TEST(Decimate, RejectsAliasingFactor) {
  const auto lp = lowpass(tone(30.0), 50.0);
  EXPECT_THROW(decimate(lp, 960), Error);  // Nyquist 25 Hz < 50 Hz
  EXPECT_THROW(decimate(tone(30.0), 48), Error);  // not band-limited
  EXPECT_THROW(decimate(lp, 0), Error);
}

TEST(Decimate, ResampledSineMatchesOracle) {
  const auto in = tone(30.0, 1.0, 2.0);
  const auto out = decimate(lowpass(in, 50.0), 48);
  const double g = oracle::zero_phase_gain(30.0, 50.0, 48000.0, 4);
  const auto expect = oracle::sine(30.0, g, 2.0, 1000);
  ASSERT_EQ(out.size(), expect.size());
  double err = 0.0;
  for (std::size_t i = 100; i + 100 < out.size(); ++i)
    err = std::max(err, std::abs(out[i] - expect[i]));
  EXPECT_LT(err, 0.01);
  EXPECT_NEAR(oracle::rms(out.data(), 100) / oracle::rms(in.data(), 4800), 1.0, 0.05);
}

TEST(Decimate, CommutesWithRateAwareLowpass) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<double> x(96000);
  for (auto& v : x) v = g(rng);
  const auto band = lowpass(AudioTrace(x, 48000), 20.0);
  const auto a = decimate(lowpass(band, 50.0), 48);
  const auto b = lowpass(decimate(band, 48), 50.0);
  EXPECT_LE(diff_norm(a.data(), b.data()), 0.01 * norm(a.data()));
}

TEST(Condition, FortyEightKilohertzToOneKilohertz) {
  const auto c = condition(tone(30.0), 50.0, 1000);
  EXPECT_EQ(c.sample_rate_hz(), 1000);
  EXPECT_EQ(c.size(), 1000u);
  EXPECT_EQ(decimation_factor(44100, 1000), 42);
}

TEST(BandEnergy, LowAndHighTones) {
  const auto low = band_energy_ratio(tone(30.0), 50.0);
  EXPECT_NEAR(low.low_fraction, 1.0, 1e-3);
  EXPECT_NEAR(low.high_fraction, 0.0, 1e-3);
  const auto high = band_energy_ratio(tone(440.0), 50.0);
  EXPECT_NEAR(high.low_fraction, 0.0, 1e-3);
  EXPECT_NEAR(high.high_fraction, 1.0, 1e-3);
}

TEST(BandEnergy, FractionsSumToOneAndScaleInvariant) {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> g(0.0, 0.2);
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<double> x(3000 + 137 * trial);
    for (auto& v : x) v = g(rng);
    const AudioTrace t(x, 1000);
    const auto r = band_energy_ratio(t, 50.0);
    EXPECT_NEAR(r.low_fraction + r.high_fraction, 1.0, 1e-9);
    EXPECT_GE(r.low_fraction, 0.0);
    EXPECT_LE(r.low_fraction, 1.0);
    const auto s = band_energy_ratio(t.scaled(37.5), 50.0);
    EXPECT_NEAR(s.low_fraction, r.low_fraction, 1e-12);
  }
}

TEST(BandEnergy, SilenceIsUndefined) {
  AudioTrace z(std::vector<double>(1000, 0.0), 1000);
  try {
    band_energy_ratio(z, 50.0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::UndefinedRatio);
  }
  EXPECT_THROW(band_energy_ratio(tone(30.0), 30000.0), Error);
}

TEST(Stft, FrameArithmetic) {
  AudioTrace t(std::vector<double>(1000, 0.0), 1000);
  const auto s = stft_spectrogram(t, 256, 64);
  EXPECT_EQ(s.n_frames(), 12u);
  EXPECT_EQ(s.n_bins(), 129u);
  for (double v : s.values()) EXPECT_EQ(v, 0.0);
  EXPECT_DOUBLE_EQ(s.freq_resolution_hz(), 1000.0 / 256.0);
  EXPECT_DOUBLE_EQ(s.hop_s(), 0.064);
}

TEST(Stft, ShortTraceRejected) {
  AudioTrace t(std::vector<double>(100, 0.0), 1000);
  EXPECT_THROW(stft_spectrogram(t, 256, 64), Error);
  EXPECT_THROW(stft_spectrogram(AudioTrace(std::vector<double>(300, 0.0), 1000), 256, 0), Error);
}

TEST(Stft, ToneLandsInExpectedBinAndMatchesDft) {
  const auto x = oracle::sine(100.0, 1.0, 1.0, 1000);
  const auto s = stft_spectrogram(AudioTrace(x, 1000), 256, 64);
  for (std::size_t t = 0; t < s.n_frames(); ++t) {
    std::size_t best = 0;
    for (std::size_t k = 1; k < s.n_bins(); ++k)
      if (s.at(k, t) > s.at(best, t)) best = k;
    EXPECT_EQ(best, 26u);
  }
  // Frame 3 against an O(n^2) DFT of the same Hann-windowed samples.
  std::vector<double> frame(256);
  for (std::size_t i = 0; i < 256; ++i)
    frame[i] = x[3 * 64 + i] * (0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * i / 256.0));
  const auto ref = oracle::naive_dft(frame);
  for (std::size_t k = 0; k < 129; ++k) EXPECT_NEAR(s.at(k, 3), std::abs(ref[k]), 1e-9);
}

TEST(Stft, ScalesLinearly) {
  const auto x = oracle::sine(60.0, 0.3, 1.0, 1000);
  const auto a = stft_spectrogram(AudioTrace(x, 1000), 128, 32);
  std::vector<double> y(x);
  for (auto& v : y) v *= 4.0;
  const auto b = stft_spectrogram(AudioTrace(y, 1000), 128, 32);
  for (std::size_t i = 0; i < a.values().size(); ++i)
    EXPECT_NEAR(b.values()[i], 4.0 * a.values()[i], 1e-9 * (1.0 + b.values()[i]));
}

TEST(Spectrogram, LogMagnitudeIsNonNegative) {
  const auto s = stft_spectrogram(AudioTrace(oracle::sine(60.0, 0.3, 1.0, 1000), 1000), 128, 32);
  const auto l = to_log_magnitude(s);
  for (double v : l.values()) EXPECT_GE(v, 0.0);
}
