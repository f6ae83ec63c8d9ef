#pragma once

#include <span>
#include <vector>

#include "oesense/audio.hpp"

namespace oesense {

/// Upper and lower amplitude envelopes of a trace.
struct Envelope {
  std::vector<double> upper;
  std::vector<double> lower;
  int sample_rate_hz = 0;
  // Set when smoothing pushed upper below lower and samples were clamped.
  bool clamped = false;
};

/// A peak on an envelope: `x` in seconds from trace start, `y` in envelope
/// units (negative for lower-envelope peaks).
struct Peak {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Peak&, const Peak&) = default;
};

/// Envelope from the analytic signal, built by zeroing the negative half of
/// the full-length spectrum and doubling the positive half.
/// upper = |analytic|, lower = -|analytic|.
Envelope analytic_envelope(const AudioTrace& trace);

/// Zero-phase lowpass of each envelope series at `cutoff_hz`.
Envelope smooth_envelope(const Envelope& env, double cutoff_hz = 5.0);

/// Strict local maxima of `series`; a flat top resolves to its leftmost
/// sample. Endpoints never qualify.
std::vector<Peak> local_maxima(std::span<const double> series, double rate_hz);

/// local_maxima() followed by a left-to-right pass that drops any peak closer
/// than `min_interval_s` to the last retained one.
std::vector<Peak> detect_peaks(std::span<const double> series, double rate_hz,
                               double min_interval_s);

}  // namespace oesense
