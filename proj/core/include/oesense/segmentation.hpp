#pragma once

#include <array>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "oesense/audio.hpp"
#include "oesense/classify.hpp"
#include "oesense/step_counter.hpp"

namespace oesense {

enum class SegmentKind { Activity, Gesture };

struct Segment {
  std::vector<double> samples;
  int sample_rate_hz = 0;
  double start_s = 0.0;  // negative when a gesture window was left-padded
  std::optional<std::string> label;
  Channel channel = Channel::Mono;
  SegmentKind kind = SegmentKind::Activity;
  // Window ran past the trace and was zero-padded.
  bool padded = false;

  double duration_s() const noexcept {
    return static_cast<double>(samples.size()) / sample_rate_hz;
  }
};

/// Fixed windows starting every window_s * (1 - overlap) seconds; the
/// trailing partial window is dropped.
std::vector<Segment> sliding_windows(const AudioTrace& trace,
                                     double window_s = 1.0, double overlap = 0.5);

struct GestureConfig {
  // Front end and peak pruning. An isolated pulse smoothed at 5 Hz rings with
  // side peaks near 7 % of the main one, which a 0.3 factor does not reject.
  StepCounterConfig peaks{.theta_amp_factor = 0.5};
  double before_s = 0.15;
  double after_s = 0.25;
};

/// One 0.4 s window per retained upper-envelope peak, spanning
/// [peak - 0.15 s, peak + 0.25 s) of the conditioned 1 kHz signal.
std::vector<Segment> extract_gestures(const AudioTrace& trace,
                                      const GestureConfig& cfg = {});

/// Cuts one gesture window per peak from an already conditioned trace.
/// Windows running past either end are zero-padded and flagged.
std::vector<Segment> gesture_windows(const AudioTrace& conditioned,
                                     std::span<const Peak> peaks,
                                     const GestureConfig& cfg = {});

/// Retained envelope peaks used by extract_gestures().
std::vector<Peak> gesture_peaks(const AudioTrace& trace,
                                const GestureConfig& cfg = {});

/// Sign changes per second. Zero samples inherit the previous sign; leading
/// zeros carry no sign.
double zero_crossing_rate(const Segment& seg);

enum class Motion { Step, Tap };

std::string_view to_string(Motion m) noexcept;

/// Number of local maxima of |x| above `rel_threshold` of the segment's
/// maximum magnitude.
std::size_t spike_count(std::span<const double> x, double rel_threshold = 0.25);

/// (zero-crossing rate, spike count, RMS) used by the KNN variant.
std::array<double, 3> step_tap_features(const Segment& seg);

struct ZcrThreshold {
  double threshold = 0.0;
  // Steps sit above the threshold when true.
  bool step_above = true;
};

/// Midpoint between the mean ZCR of the two labeled sets.
ZcrThreshold calibrate_zcr_threshold(std::span<const Segment> steps,
                                     std::span<const Segment> taps);

struct KnnStepTap {
  Model model;  // labels: 0 = step, 1 = tap
};

KnnStepTap train_step_tap_knn(std::span<const Segment> steps,
                              std::span<const Segment> taps, int k = 5);

/// std::monostate means "not calibrated"; classifying with it throws
/// Errc::NotReady.
using StepTapMethod = std::variant<std::monostate, ZcrThreshold, KnnStepTap>;

Motion classify_step_vs_tap(const Segment& seg, const StepTapMethod& method);

}  // namespace oesense
