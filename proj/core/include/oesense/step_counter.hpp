#pragma once

#include <span>
#include <string_view>
#include <utility>
#include <vector>

#include "oesense/audio.hpp"
#include "oesense/envelope.hpp"

namespace oesense {

struct StepCounterConfig {
  double theta_intvl_s = 0.3;      // minimum spacing of retained peaks
  double theta_amp_factor = 0.3;   // fraction of the mean peak amplitude
  double delta_align_s = 0.2;      // max upper/lower peak time lag
  double lowpass_cutoff_hz = 50.0;
  double envelope_smooth_hz = 5.0;
  int pipeline_rate_hz = 1000;

  /// Throws Errc::InvalidArgument on a non-positive field or when
  /// delta_align_s >= theta_intvl_s.
  void validate() const;
};

enum class RejectReason { TooClose, TooSmall, Unmatched };

std::string_view to_string(RejectReason reason) noexcept;

struct RejectedPeak {
  Peak peak;
  RejectReason reason;
};

struct PeakFilterResult {
  std::vector<Peak> kept;
  std::vector<RejectedPeak> rejected;
  double amplitude_threshold = 0.0;
};

/// Peak pruning for one envelope. The amplitude threshold is
/// `theta_amp_factor * mean(|y|)` over all input peaks, fixed before any
/// deletion. Peaks below it are dropped first, then a sequential pass drops
/// any peak closer than `theta_intvl_s` to the last retained one.
PeakFilterResult filter_peaks_detailed(std::span<const Peak> peaks,
                                       double theta_intvl_s,
                                       double theta_amp_factor);

std::vector<Peak> filter_peaks(std::span<const Peak> peaks, double theta_intvl_s,
                               double theta_amp_factor);

using PeakPair = std::pair<Peak, Peak>;

/// Greedy one-to-one matching in time order: each upper peak takes the
/// earliest unused lower peak with |dx| < delta_s.
std::vector<PeakPair> align_peaks(std::span<const Peak> upper,
                                  std::span<const Peak> lower, double delta_s);

struct StepReport {
  std::size_t count = 0;
  std::vector<PeakPair> matched_pairs;
  std::vector<RejectedPeak> rejected_peaks;
  Channel channel = Channel::Mono;
  // Trace shorter than 2 s.
  bool low_confidence = false;
};

/// Full step-counting pipeline: lowpass, decimate, analytic envelope,
/// envelope smoothing, per-envelope peak detection and filtering, then
/// upper/lower alignment. One aligned pair is one step.
StepReport count_steps(const AudioTrace& trace,
                       const StepCounterConfig& cfg = {});

/// Smoothed envelope of the conditioned (lowpassed, decimated) trace, shared
/// by the step counter and gesture segmentation.
struct ConditionedEnvelope {
  AudioTrace signal;
  Envelope envelope;
};
ConditionedEnvelope conditioned_envelope(const AudioTrace& trace,
                                         const StepCounterConfig& cfg);

/// Peaks of the lower envelope, found on its magnitude. y keeps the
/// envelope's (negative) sign.
std::vector<Peak> lower_envelope_peaks(std::span<const double> lower,
                                       double rate_hz);

}  // namespace oesense
