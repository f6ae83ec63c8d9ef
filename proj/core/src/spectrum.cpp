#include "oesense/spectrum.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "fft.hpp"
#include "oesense/error.hpp"

namespace oesense {

Spectrogram::Spectrogram(std::size_t n_bins, std::size_t n_frames,
                         std::vector<double> magnitudes,
                         double freq_resolution_hz, double hop_s)
    : n_bins_(n_bins),
      n_frames_(n_frames),
      values_(std::move(magnitudes)),
      freq_res_(freq_resolution_hz),
      hop_s_(hop_s) {
  require(values_.size() == n_bins_ * n_frames_,
          "spectrogram storage does not match its shape");
  for (double v : values_) {
    if (!(v >= 0.0) || !std::isfinite(v))
      fail(Errc::InvalidArgument,
           "spectrogram magnitudes must be finite and non-negative");
  }
}

Spectrogram Spectrogram::scaled(double gain) const {
  std::vector<double> v(values_);
  for (auto& x : v) x *= gain;
  return Spectrogram(n_bins_, n_frames_, std::move(v), freq_res_, hop_s_);
}

std::vector<double> hann_window(std::size_t n) {
  std::vector<double> w(n);
  for (std::size_t i = 0; i < n; ++i)
    w[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) /
                                static_cast<double>(n));
  return w;
}

BandEnergy band_energy_ratio(const AudioTrace& trace, double split_hz) {
  const double rate = trace.sample_rate_hz();
  require(split_hz > 0.0 && split_hz < rate / 2.0,
          "split frequency must lie in (0, Nyquist)");
  require(!trace.empty(), "band energy of an empty trace");

  const auto w = hann_window(trace.size());
  std::vector<double> x(trace.size());
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = trace[i] * w[i];

  const std::size_t n = detail::next_pow2(x.size());
  const auto spec = detail::rfft(x, n);
  double low = 0.0, high = 0.0;
  for (std::size_t k = 0; k < spec.size(); ++k) {
    // Interior bins stand for both the positive and negative frequency.
    const double weight = (k == 0 || 2 * k == n) ? 1.0 : 2.0;
    const double e = weight * std::norm(spec[k]);
    const double f = static_cast<double>(k) * rate / static_cast<double>(n);
    (f < split_hz ? low : high) += e;
  }
  const double total = low + high;
  if (!(total > 0.0))
    fail(Errc::UndefinedRatio, "trace has zero total energy");
  return {low / total, high / total};
}

Spectrogram stft_spectrogram(const AudioTrace& trace, std::size_t window_len,
                             std::size_t hop) {
  require(window_len >= 2, "STFT window must be at least 2 samples");
  require(hop >= 1, "STFT hop must be >= 1");
  require(window_len <= trace.size(),
          "trace (" + std::to_string(trace.size()) +
              " samples) is shorter than the STFT window (" +
              std::to_string(window_len) + ")");

  const auto w = hann_window(window_len);
  const std::size_t n_frames = 1 + (trace.size() - window_len) / hop;
  const std::size_t n_bins = window_len / 2 + 1;
  std::vector<double> mags(n_bins * n_frames);
  std::vector<double> frame(window_len);
  const auto x = trace.samples();
  for (std::size_t t = 0; t < n_frames; ++t) {
    for (std::size_t i = 0; i < window_len; ++i)
      frame[i] = x[t * hop + i] * w[i];
    const auto spec = detail::rfft(frame, window_len);
    for (std::size_t k = 0; k < n_bins; ++k)
      mags[k * n_frames + t] = std::abs(spec[k]);
  }
  const double rate = trace.sample_rate_hz();
  return Spectrogram(n_bins, n_frames, std::move(mags),
                     rate / static_cast<double>(window_len),
                     static_cast<double>(hop) / rate);
}

Spectrogram to_log_magnitude(const Spectrogram& spec, double floor_db) {
  const double floor_mag = std::pow(10.0, floor_db / 20.0);
  std::vector<double> v(spec.values().begin(), spec.values().end());
  for (auto& m : v) m = 20.0 * std::log10(std::max(m, floor_mag)) - floor_db;
  return Spectrogram(spec.n_bins(), spec.n_frames(), std::move(v),
                     spec.freq_resolution_hz(), spec.hop_s());
}

}  // namespace oesense
