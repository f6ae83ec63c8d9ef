#pragma once

#include <span>
#include <vector>

#include "oesense/audio.hpp"

namespace oesense {

/// Second-order section, transposed direct form II. a0 is normalized to 1.
struct Biquad {
  double b0 = 1.0, b1 = 0.0, b2 = 0.0;
  double a1 = 0.0, a2 = 0.0;
};

/// Cascade of second-order sections.
struct SosFilter {
  std::vector<Biquad> sections;
  int order = 0;
  double cutoff_cycles = 0.0;  // cutoff / sample rate
};

/// Digital Butterworth lowpass via the bilinear transform with prewarping.
SosFilter butterworth_lowpass(int order, double cutoff_hz, double rate_hz);

/// Single causal pass with zero initial state.
std::vector<double> sosfilt(const SosFilter& filter, std::span<const double> x);

/// Zero-phase forward-backward filtering. The input is odd-reflected at
/// each end by 3 x order cutoff periods (at least 3 x order samples, at most
/// len - 1) and each section starts from its steady-state response to the
/// first padded sample.
std::vector<double> filtfilt(const SosFilter& filter, std::span<const double> x);

inline constexpr int kLowpassOrder = 4;

/// Zero-phase 4th-order Butterworth lowpass. The result carries
/// `bandlimit_hz = cutoff_hz`.
AudioTrace lowpass(const AudioTrace& trace, double cutoff_hz);

/// Keeps every `factor`-th sample. factor > 1 requires a band-limited trace
/// whose cutoff stays below the new Nyquist frequency.
AudioTrace decimate(const AudioTrace& trace, int factor);

/// Largest integer factor that takes `rate_hz` down to no less than
/// `target_rate_hz`.
int decimation_factor(int rate_hz, int target_rate_hz) noexcept;

/// The shared front end: lowpass at `cutoff_hz` at the native rate, then
/// decimate to about `target_rate_hz` (1 kHz by default).
AudioTrace condition(const AudioTrace& trace, double cutoff_hz = 50.0,
                     int target_rate_hz = 1000);

}  // namespace oesense
