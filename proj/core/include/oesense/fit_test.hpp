#pragma once

#include "oesense/audio.hpp"

namespace oesense {

inline constexpr double kProbeLowHz = 300.0;
inline constexpr double kProbeHighHz = 1500.0;
inline constexpr double kProbeFadeS = 0.005;

struct FitThresholds {
  double min_low_ratio = 5.0;    // occlusion boost at 300 Hz
  double max_high_ratio = 0.2;   // attenuation at 1500 Hz
};

struct FitTestResult {
  double a300_base = 0.0, a1500_base = 0.0;
  double a300_test = 0.0, a1500_test = 0.0;
  double ratio_low = 0.0;   // a300_test / a300_base
  double ratio_high = 0.0;  // a1500_test / a1500_base
  bool passed = false;
};

/// Sine probe with 5 ms raised-cosine fade-in/out and
/// round(duration * rate) samples.
AudioTrace generate_probe_tone(double freq_hz, double duration_s = 0.1,
                               int rate_hz = 48000, double amplitude = 0.5);

/// Amplitude of the `freq_hz` component, by projecting the steady-state part
/// of the recording (fades excluded) onto a complex exponential:
/// 2/N * |sum x[n] e^{-j w n}|.
double tone_amplitude(const AudioTrace& recording, double freq_hz);

/// Sealing is good when ratio_low > 5 and ratio_high < 0.2.
FitTestResult evaluate_fit(double base300, double base1500, double test300,
                           double test1500, const FitThresholds& th = {});

/// Back-to-back 300 Hz then 1500 Hz probes, each `tone_s` long.
AudioTrace generate_probe_sequence(double tone_s = 0.1, int rate_hz = 48000,
                                   double amplitude = 0.5);

struct ProbeAmplitudes {
  double a300 = 0.0;
  double a1500 = 0.0;
};

/// Measures a recording laid out like generate_probe_sequence().
ProbeAmplitudes measure_probe_sequence(const AudioTrace& recording,
                                       double tone_s = 0.1);

}  // namespace oesense
