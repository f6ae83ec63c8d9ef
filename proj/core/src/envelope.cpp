#include "oesense/envelope.hpp"

#include <cmath>

#include "fft.hpp"
#include "oesense/error.hpp"
#include "oesense/filter.hpp"

namespace oesense {

namespace {
// Absorbs rounding in sample-index / rate conversions.
constexpr double kIntervalSlack = 1e-9;
}  // namespace

Envelope analytic_envelope(const AudioTrace& trace) {
  const std::size_t n = trace.size();
  require(n >= 4, "analytic envelope needs at least 4 samples");

  auto spec = detail::dft_real(trace.samples(), n);
  // One-sided reconstruction: keep DC (and Nyquist for even n), double the
  // positive frequencies, drop the negative ones.
  const std::size_t half = (n % 2 == 0) ? n / 2 : (n + 1) / 2;
  for (std::size_t k = 1; k < half; ++k) spec[k] *= 2.0;
  for (std::size_t k = (n % 2 == 0) ? half + 1 : half; k < n; ++k) spec[k] = 0.0;

  const auto analytic = detail::idft(spec);
  Envelope env;
  env.sample_rate_hz = trace.sample_rate_hz();
  env.upper.resize(n);
  env.lower.resize(n);
  const double scale = 1.0 / static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double mag = std::abs(analytic[i]) * scale;
    env.upper[i] = mag;
    env.lower[i] = -mag;
  }
  return env;
}

Envelope smooth_envelope(const Envelope& env, double cutoff_hz) {
  require(env.upper.size() == env.lower.size(),
          "envelope series lengths differ");
  const auto f =
      butterworth_lowpass(kLowpassOrder, cutoff_hz, env.sample_rate_hz);
  Envelope out;
  out.sample_rate_hz = env.sample_rate_hz;
  out.upper = filtfilt(f, env.upper);
  out.lower = filtfilt(f, env.lower);
  out.clamped = env.clamped;
  for (std::size_t i = 0; i < out.upper.size(); ++i) {
    if (out.upper[i] < out.lower[i]) {
      const double mid = 0.5 * (out.upper[i] + out.lower[i]);
      out.upper[i] = out.lower[i] = mid;
      out.clamped = true;
    }
  }
  return out;
}

std::vector<Peak> local_maxima(std::span<const double> series, double rate_hz) {
  require(rate_hz > 0.0, "rate must be positive");
  std::vector<Peak> peaks;
  const std::size_t n = series.size();
  std::size_t i = 1;
  while (i + 1 < n) {
    if (series[i] > series[i - 1]) {
      std::size_t j = i;
      while (j + 1 < n && series[j + 1] == series[i]) ++j;
      if (j + 1 < n && series[j + 1] < series[i])
        peaks.push_back({static_cast<double>(i) / rate_hz, series[i]});
      i = j + 1;
    } else {
      ++i;
    }
  }
  return peaks;
}

std::vector<Peak> detect_peaks(std::span<const double> series, double rate_hz,
                               double min_interval_s) {
  require(min_interval_s >= 0.0, "minimum peak interval must be >= 0");
  for (double v : series)
    require(std::isfinite(v), "peak detection input must be finite");
  const auto raw = local_maxima(series, rate_hz);
  std::vector<Peak> kept;
  for (const auto& p : raw) {
    if (kept.empty() || p.x - kept.back().x >= min_interval_s - kIntervalSlack)
      kept.push_back(p);
  }
  return kept;
}

}  // namespace oesense
