#pragma once

// Reference computations used by the tests. Nothing here calls into the
// library's DSP code.

#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

namespace oesense::oracle {

inline std::vector<double> sine(double freq_hz, double amp, double duration_s,
                                int rate_hz, double phase = 0.0) {
  const auto n = static_cast<std::size_t>(std::lround(duration_s * rate_hz));
  std::vector<double> x(n);
  for (std::size_t i = 0; i < n; ++i)
    x[i] = amp * std::sin(2.0 * std::numbers::pi * freq_hz * static_cast<double>(i) / rate_hz +
                          phase);
  return x;
}

inline double rms(const std::vector<double>& x, std::size_t skip = 0) {
  double acc = 0.0;
  std::size_t n = 0;
  for (std::size_t i = skip; i + skip < x.size(); ++i, ++n) acc += x[i] * x[i];
  return n ? std::sqrt(acc / static_cast<double>(n)) : 0.0;
}

/// |H(f)| of an order-N digital Butterworth lowpass designed by the
/// prewarped bilinear transform.
inline double butterworth_gain(double f, double cutoff, double rate, int order) {
  const double r = std::tan(std::numbers::pi * f / rate) /
                   std::tan(std::numbers::pi * cutoff / rate);
  return 1.0 / std::sqrt(1.0 + std::pow(r, 2 * order));
}

/// Forward-backward application squares the magnitude.
inline double zero_phase_gain(double f, double cutoff, double rate, int order) {
  const double g = butterworth_gain(f, cutoff, rate, order);
  return g * g;
}

/// O(n^2) DFT.
inline std::vector<std::complex<double>> naive_dft(const std::vector<double>& x) {
  const std::size_t n = x.size();
  std::vector<std::complex<double>> out(n);
  for (std::size_t k = 0; k < n; ++k) {
    std::complex<double> acc = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      acc += x[i] * std::polar(1.0, -2.0 * std::numbers::pi * static_cast<double>(k * i % n) /
                                        static_cast<double>(n));
    out[k] = acc;
  }
  return out;
}

/// |analytic signal| via the naive DFT with explicit negative-frequency
/// suppression.
inline std::vector<double> naive_envelope(const std::vector<double>& x) {
  const std::size_t n = x.size();
  auto spec = naive_dft(x);
  std::vector<std::complex<double>> h(n, 0.0);
  h[0] = spec[0];
  for (std::size_t k = 1; k < n; ++k) {
    if (2 * k < n) h[k] = 2.0 * spec[k];
    else if (2 * k == n) h[k] = spec[k];
  }
  std::vector<double> env(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::complex<double> acc = 0.0;
    for (std::size_t k = 0; k < n; ++k)
      acc += h[k] * std::polar(1.0, 2.0 * std::numbers::pi * static_cast<double>(k * i % n) /
                                        static_cast<double>(n));
    env[i] = std::abs(acc) / static_cast<double>(n);
  }
  return env;
}

/// Indices of samples strictly above both neighbours (plateaus resolved to
/// their first sample), by direct neighbourhood scan.
inline std::vector<std::size_t> brute_local_maxima(const std::vector<double>& s) {
  std::vector<std::size_t> out;
  for (std::size_t i = 1; i + 1 < s.size(); ++i) {
    if (!(s[i] > s[i - 1])) continue;
    std::size_t j = i;
    while (j + 1 < s.size() && s[j + 1] == s[i]) ++j;
    if (j + 1 < s.size() && s[j + 1] < s[i]) out.push_back(i);
  }
  return out;
}

inline std::vector<double> gaussian_bump(std::size_t n, int rate, double centre_s,
                                         double width_s, double amp = 1.0) {
  std::vector<double> x(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / rate - centre_s;
    x[i] = amp * std::exp(-0.5 * t * t / (width_s * width_s));
  }
  return x;
}

}  // namespace oesense::oracle
