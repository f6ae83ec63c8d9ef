#include "oesense/segmentation.hpp"

#include <algorithm>
#include <cmath>

#include "oesense/error.hpp"
#include "oesense/filter.hpp"

namespace oesense {

std::vector<Segment> sliding_windows(const AudioTrace& trace, double window_s,
                                     double overlap) {
  require(window_s > 0.0, "window length must be positive");
  require(overlap >= 0.0 && overlap < 1.0, "overlap must lie in [0, 1)");
  const double rate = trace.sample_rate_hz();
  const auto win = static_cast<std::size_t>(std::lround(window_s * rate));
  const double hop_s = window_s * (1.0 - overlap);
  require(win >= 1, "window shorter than one sample");

  std::vector<Segment> out;
  const auto x = trace.samples();
  for (std::size_t k = 0;; ++k) {
    const double start_s = static_cast<double>(k) * hop_s;
    const auto start = static_cast<std::size_t>(std::lround(start_s * rate));
    if (start + win > x.size()) break;
    Segment seg;
    seg.samples.assign(x.begin() + static_cast<std::ptrdiff_t>(start),
                       x.begin() + static_cast<std::ptrdiff_t>(start + win));
    seg.sample_rate_hz = trace.sample_rate_hz();
    seg.start_s = start_s;
    seg.channel = trace.channel();
    seg.kind = SegmentKind::Activity;
    out.push_back(std::move(seg));
  }
  return out;
}

std::vector<Peak> gesture_peaks(const AudioTrace& trace, const GestureConfig& cfg) {
  const auto ce = conditioned_envelope(trace, cfg.peaks);
  const auto raw = detect_peaks(ce.envelope.upper, ce.envelope.sample_rate_hz, 0.0);
  return filter_peaks(raw, cfg.peaks.theta_intvl_s, cfg.peaks.theta_amp_factor);
}

std::vector<Segment> gesture_windows(const AudioTrace& conditioned,
                                     std::span<const Peak> peaks,
                                     const GestureConfig& cfg) {
  require(cfg.before_s >= 0.0 && cfg.after_s > 0.0,
          "gesture window offsets must be non-negative");
  const double rate = conditioned.sample_rate_hz();
  const auto before = std::lround(cfg.before_s * rate);
  const auto length = std::lround((cfg.before_s + cfg.after_s) * rate);
  const auto x = conditioned.samples();
  const auto n = static_cast<long>(x.size());

  std::vector<Segment> out;
  for (const auto& p : peaks) {
    const long centre = std::lround(p.x * rate);
    const long first = centre - before;
    Segment seg;
    seg.samples.assign(static_cast<std::size_t>(length), 0.0);
    for (long i = 0; i < length; ++i) {
      const long src = first + i;
      if (src >= 0 && src < n)
        seg.samples[static_cast<std::size_t>(i)] = x[static_cast<std::size_t>(src)];
      else seg.padded = true;
    }
    seg.sample_rate_hz = conditioned.sample_rate_hz();
    seg.start_s = static_cast<double>(first) / rate;
    seg.channel = conditioned.channel();
    seg.kind = SegmentKind::Gesture;
    out.push_back(std::move(seg));
  }
  return out;
}

std::vector<Segment> extract_gestures(const AudioTrace& trace,
                                      const GestureConfig& cfg) {
  require(cfg.before_s >= 0.0 && cfg.after_s > 0.0,
          "gesture window offsets must be non-negative");
  const auto ce = conditioned_envelope(trace, cfg.peaks);
  const auto raw =
      detect_peaks(ce.envelope.upper, ce.envelope.sample_rate_hz, 0.0);
  const auto peaks =
      filter_peaks(raw, cfg.peaks.theta_intvl_s, cfg.peaks.theta_amp_factor);
  return gesture_windows(ce.signal, peaks, cfg);
}

double zero_crossing_rate(const Segment& seg) {
  require(!seg.samples.empty(), "zero-crossing rate of an empty segment");
  require(seg.sample_rate_hz > 0, "segment sample rate must be positive");
  int last = 0;
  std::size_t changes = 0;
  for (double v : seg.samples) {
    const int s = v > 0.0 ? 1 : (v < 0.0 ? -1 : last);
    if (s != 0 && last != 0 && s != last) ++changes;
    if (s != 0) last = s;
  }
  return static_cast<double>(changes) / seg.duration_s();
}

std::string_view to_string(Motion m) noexcept {
  return m == Motion::Step ? "step" : "tap";
}

std::size_t spike_count(std::span<const double> x, double rel_threshold) {
  double peak = 0.0;
  for (double v : x) peak = std::max(peak, std::abs(v));
  if (peak == 0.0) return 0;
  std::size_t count = 0;
  for (std::size_t i = 1; i + 1 < x.size(); ++i) {
    const double a = std::abs(x[i]);
    if (a > std::abs(x[i - 1]) && a >= std::abs(x[i + 1]) &&
        a >= rel_threshold * peak)
      ++count;
  }
  return count;
}

std::array<double, 3> step_tap_features(const Segment& seg) {
  return {zero_crossing_rate(seg), static_cast<double>(spike_count(seg.samples)),
          rms(seg.samples)};
}

ZcrThreshold calibrate_zcr_threshold(std::span<const Segment> steps,
                                     std::span<const Segment> taps) {
  if (steps.empty() || taps.empty())
    fail(Errc::InvalidDataset, "ZCR calibration needs both steps and taps");
  auto mean_zcr = [](std::span<const Segment> segs) {
    double acc = 0.0;
    for (const auto& s : segs) acc += zero_crossing_rate(s);
    return acc / static_cast<double>(segs.size());
  };
  const double ms = mean_zcr(steps), mt = mean_zcr(taps);
  return {0.5 * (ms + mt), ms >= mt};
}

KnnStepTap train_step_tap_knn(std::span<const Segment> steps,
                              std::span<const Segment> taps, int k) {
  Dataset data{3, {"step", "tap"}, {}};
  for (const auto& s : steps) {
    const auto f = step_tap_features(s);
    data.rows.push_back({{f.begin(), f.end()}, 0, {}});
  }
  for (const auto& s : taps) {
    const auto f = step_tap_features(s);
    data.rows.push_back({{f.begin(), f.end()}, 1, {}});
  }
  TrainOptions opts;
  opts.kind = ModelKind::Knn;
  opts.k = k;
  return {train(data, opts)};
}

Motion classify_step_vs_tap(const Segment& seg, const StepTapMethod& method) {
  if (std::holds_alternative<std::monostate>(method))
    fail(Errc::NotReady, "step/tap classifier has no calibration or model");
  if (const auto* z = std::get_if<ZcrThreshold>(&method)) {
    const bool above = zero_crossing_rate(seg) > z->threshold;
    return above == z->step_above ? Motion::Step : Motion::Tap;
  }
  const auto& knn = std::get<KnnStepTap>(method);
  const auto f = step_tap_features(seg);
  return knn.model.predict(f) == 0 ? Motion::Step : Motion::Tap;
}

}  // namespace oesense
