#include "oesense/step_counter.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "oesense/error.hpp"
#include "oesense/filter.hpp"

namespace oesense {

namespace {
constexpr double kIntervalSlack = 1e-9;
constexpr double kMinConfidentDuration = 2.0;
}  // namespace

void StepCounterConfig::validate() const {
  require(theta_intvl_s > 0.0, "theta_intvl_s must be positive");
  require(theta_amp_factor > 0.0, "theta_amp_factor must be positive");
  require(delta_align_s > 0.0, "delta_align_s must be positive");
  require(lowpass_cutoff_hz > 0.0, "lowpass_cutoff_hz must be positive");
  require(envelope_smooth_hz > 0.0, "envelope_smooth_hz must be positive");
  require(pipeline_rate_hz > 0, "pipeline_rate_hz must be positive");
  require(delta_align_s < theta_intvl_s,
          "delta_align_s must be smaller than theta_intvl_s");
}

std::string_view to_string(RejectReason reason) noexcept {
  switch (reason) {
    case RejectReason::TooClose: return "TooClose";
    case RejectReason::TooSmall: return "TooSmall";
    case RejectReason::Unmatched: return "Unmatched";
  }
  return "Unmatched";
}

PeakFilterResult filter_peaks_detailed(std::span<const Peak> peaks,
                                       double theta_intvl_s,
                                       double theta_amp_factor) {
  PeakFilterResult res;
  if (peaks.empty()) return res;
  const double mean_amp =
      std::accumulate(peaks.begin(), peaks.end(), 0.0,
                      [](double acc, const Peak& p) { return acc + std::abs(p.y); }) /
      static_cast<double>(peaks.size());
  res.amplitude_threshold = theta_amp_factor * mean_amp;

  for (const auto& p : peaks) {
    if (std::abs(p.y) < res.amplitude_threshold) {
      res.rejected.push_back({p, RejectReason::TooSmall});
    } else if (!res.kept.empty() &&
               p.x - res.kept.back().x < theta_intvl_s - kIntervalSlack) {
      res.rejected.push_back({p, RejectReason::TooClose});
    } else {
      res.kept.push_back(p);
    }
  }
  return res;
}

std::vector<Peak> filter_peaks(std::span<const Peak> peaks, double theta_intvl_s,
                               double theta_amp_factor) {
  return filter_peaks_detailed(peaks, theta_intvl_s, theta_amp_factor).kept;
}

std::vector<PeakPair> align_peaks(std::span<const Peak> upper,
                                  std::span<const Peak> lower, double delta_s) {
  std::vector<PeakPair> pairs;
  std::vector<bool> used(lower.size(), false);
  std::size_t first_open = 0;
  for (const auto& u : upper) {
    // Lower peaks too far behind this upper peak are also too far behind every
    // later one.
    while (first_open < lower.size() &&
           (used[first_open] || lower[first_open].x <= u.x - delta_s))
      ++first_open;
    for (std::size_t j = first_open; j < lower.size(); ++j) {
      if (lower[j].x - u.x >= delta_s) break;
      if (!used[j] && std::abs(u.x - lower[j].x) < delta_s) {
        used[j] = true;
        pairs.emplace_back(u, lower[j]);
        break;
      }
    }
  }
  return pairs;
}

std::vector<Peak> lower_envelope_peaks(std::span<const double> lower,
                                       double rate_hz) {
  std::vector<double> magnitude(lower.size());
  std::transform(lower.begin(), lower.end(), magnitude.begin(),
                 [](double v) { return -v; });
  auto peaks = detect_peaks(magnitude, rate_hz, 0.0);
  for (auto& p : peaks) p.y = -p.y;
  return peaks;
}

ConditionedEnvelope conditioned_envelope(const AudioTrace& trace,
                                         const StepCounterConfig& cfg) {
  cfg.validate();
  auto signal = condition(trace, cfg.lowpass_cutoff_hz, cfg.pipeline_rate_hz);
  auto env = smooth_envelope(analytic_envelope(signal), cfg.envelope_smooth_hz);
  return {std::move(signal), std::move(env)};
}

StepReport count_steps(const AudioTrace& trace, const StepCounterConfig& cfg) {
  cfg.validate();
  StepReport report;
  report.channel = trace.channel();
  report.low_confidence = trace.duration_s() < kMinConfidentDuration;

  auto signal = condition(trace, cfg.lowpass_cutoff_hz, cfg.pipeline_rate_hz);
  if (signal.size() < 4) {
    report.low_confidence = true;
    return report;
  }
  const auto env =
      smooth_envelope(analytic_envelope(signal), cfg.envelope_smooth_hz);
  const double rate = env.sample_rate_hz;

  const auto up_raw = detect_peaks(env.upper, rate, 0.0);
  const auto low_raw = lower_envelope_peaks(env.lower, rate);
  auto up = filter_peaks_detailed(up_raw, cfg.theta_intvl_s, cfg.theta_amp_factor);
  auto low =
      filter_peaks_detailed(low_raw, cfg.theta_intvl_s, cfg.theta_amp_factor);

  report.matched_pairs = align_peaks(up.kept, low.kept, cfg.delta_align_s);
  report.count = report.matched_pairs.size();

  report.rejected_peaks = std::move(up.rejected);
  report.rejected_peaks.insert(report.rejected_peaks.end(), low.rejected.begin(),
                               low.rejected.end());
  auto matched = [&](const Peak& p, bool is_upper) {
    return std::any_of(report.matched_pairs.begin(), report.matched_pairs.end(),
                       [&](const PeakPair& pr) {
                         return (is_upper ? pr.first : pr.second) == p;
                       });
  };
  for (const auto& p : up.kept)
    if (!matched(p, true)) report.rejected_peaks.push_back({p, RejectReason::Unmatched});
  for (const auto& p : low.kept)
    if (!matched(p, false))
      report.rejected_peaks.push_back({p, RejectReason::Unmatched});
  return report;
}

}  // namespace oesense
