#pragma once

#include <cstdint>
#include <limits>
#include <vector>

#include "oesense/audio.hpp"
#include "oesense/classify.hpp"

namespace oesense {

inline constexpr double kNoNoise = std::numeric_limits<double>::infinity();

/// Walking trace: each step is a chain of damped 15-40 Hz spikes spread over
/// about 120 ms, followed by silence until the next step.
struct WalkSpec {
  int n_steps = 20;
  double cadence_hz = 2.0;        // in [1.0, 3.3]
  int strike_spikes = 6;
  double snr_db = kNoNoise;       // white noise vs. mean clean power
  double amplitude = 0.5;         // per-step peak scale; steps vary 0.6-1.0x
  double baseline_drift = 0.0;    // amplitude of a slow (<2 Hz) baseline sway
  double duration_s = 0.0;        // 0: 0.5 s lead-in + n/cadence + 0.5 s
  double lead_in_s = 0.5;
  int rate_hz = 48000;
  std::uint64_t seed = 0;
};

/// Face taps: one short, heavily damped pulse of 1-2 spikes per tap.
struct TapSpec {
  std::vector<double> times_s;
  int spike_count = 1;
  double snr_db = kNoNoise;
  double amplitude = 0.5;
  double baseline_drift = 0.0;
  double duration_s = 5.0;
  int rate_hz = 48000;
  std::uint64_t seed = 0;
};

/// Sum of tones, all above 100 Hz.
struct MusicSpec {
  std::vector<double> freqs_hz;
  std::vector<double> gains;  // empty: equal gains summing to 0.6
  double duration_s = 5.0;
  int rate_hz = 48000;
  std::uint64_t seed = 0;
};

/// Gaussian class clusters whose neighbouring centres are 2 * margin * sigma
/// apart (margin sigmas from each centre to the midpoint boundary).
/// Each subject may carry a per-class mean shift of magnitude
/// subject_shift[s] in a seeded random direction.
struct BlobSpec {
  int n_classes = 5;
  int dim = 8;
  double margin = 5.0;
  double sigma = 1.0;
  int per_class = 100;            // per subject and class
  int n_subjects = 1;
  std::vector<double> subject_shift;  // empty: no shifts
  std::uint64_t seed = 0;
};

struct SynthTrace {
  AudioTrace trace;
  std::vector<double> event_times_s;  // step or tap onsets
};

SynthTrace synth_walk(const WalkSpec& spec);
SynthTrace synth_taps(const TapSpec& spec);
AudioTrace synth_music(const MusicSpec& spec);
Dataset synth_blobs(const BlobSpec& spec);

}  // namespace oesense
