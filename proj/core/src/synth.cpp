#include "oesense/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <string>

#include "oesense/error.hpp"

namespace oesense {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kSpikeSpacingS = 0.02;
constexpr double kSpikeLengthS = 0.1;
constexpr double kStepSpikeTauS = 0.015;
constexpr double kTapSpikeTauS = 0.006;
constexpr double kSpikeDecay = 0.85;

double uniform(std::mt19937_64& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

// Adds a chain of alternating-sign damped sines starting at `onset_s`.
void add_strike(std::vector<double>& x, int rate, double onset_s, int spikes,
                double amp, double tau_s, std::mt19937_64& rng) {
  const auto len = static_cast<std::size_t>(std::lround(kSpikeLengthS * rate));
  for (int s = 0; s < spikes; ++s) {
    const double f = uniform(rng, 15.0, 40.0);
    const double sign = (s % 2 == 0) ? 1.0 : -1.0;
    const double a = amp * sign * std::pow(kSpikeDecay, s);
    const auto start = static_cast<std::size_t>(
        std::lround((onset_s + s * kSpikeSpacingS) * rate));
    for (std::size_t i = 0; i < len && start + i < x.size(); ++i) {
      const double t = static_cast<double>(i) / rate;
      x[start + i] += a * std::sin(kTwoPi * f * t) * std::exp(-t / tau_s);
    }
  }
}

void add_drift(std::vector<double>& x, int rate, double amp, std::mt19937_64& rng) {
  if (amp == 0.0) return;
  const double p1 = uniform(rng, 0.0, kTwoPi), p2 = uniform(rng, 0.0, kTwoPi);
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double t = static_cast<double>(i) / rate;
    x[i] += amp * (0.7 * std::sin(kTwoPi * 1.1 * t + p1) +
                   0.3 * std::sin(kTwoPi * 0.35 * t + p2));
  }
}

void add_noise(std::vector<double>& x, double snr_db, double fallback_power,
               std::mt19937_64& rng) {
  if (std::isinf(snr_db) && snr_db > 0) return;
  double power = 0.0;
  for (double v : x) power += v * v;
  power = x.empty() ? 0.0 : power / static_cast<double>(x.size());
  if (power == 0.0) power = fallback_power;
  std::normal_distribution<double> noise(0.0, std::sqrt(power / std::pow(10.0, snr_db / 10.0)));
  for (auto& v : x) v += noise(rng);
}

}  // namespace

SynthTrace synth_walk(const WalkSpec& spec) {
  require(spec.rate_hz > 0, "sample rate must be positive");
  require(spec.n_steps >= 0, "step count must be non-negative");
  require(spec.cadence_hz >= 1.0 && spec.cadence_hz <= 3.3,
          "walking cadence must lie in [1.0, 3.3] Hz");
  require(spec.strike_spikes >= 1, "a step needs at least one spike");
  const double duration = spec.duration_s > 0.0
                              ? spec.duration_s
                              : spec.lead_in_s + spec.n_steps / spec.cadence_hz + 0.5;
  require(spec.n_steps / spec.cadence_hz <= duration,
          "walk does not fit: " + std::to_string(spec.n_steps) + " steps at " +
              std::to_string(spec.cadence_hz) + " Hz exceed " +
              std::to_string(duration) + " s");
  require(spec.n_steps == 0 ||
              spec.lead_in_s + (spec.n_steps - 1 + 0.03) / spec.cadence_hz + 0.2 <= duration,
          "last step would be cut off by the end of the trace");

  std::mt19937_64 rng(spec.seed);
  std::vector<double> x(static_cast<std::size_t>(std::lround(duration * spec.rate_hz)), 0.0);
  std::vector<double> times;
  const double period = 1.0 / spec.cadence_hz;
  for (int k = 0; k < spec.n_steps; ++k) {
    // +-3% of a stride of timing jitter keeps consecutive steps > 0.3 s apart.
    const double t = spec.lead_in_s + (k + uniform(rng, -0.03, 0.03)) * period;
    times.push_back(t);
    add_strike(x, spec.rate_hz, t, spec.strike_spikes,
               spec.amplitude * uniform(rng, 0.6, 1.0), kStepSpikeTauS, rng);
  }
  add_drift(x, spec.rate_hz, spec.baseline_drift, rng);
  add_noise(x, spec.snr_db, spec.amplitude * spec.amplitude / 8.0, rng);
  return {AudioTrace(std::move(x), spec.rate_hz), std::move(times)};
}

SynthTrace synth_taps(const TapSpec& spec) {
  require(spec.rate_hz > 0, "sample rate must be positive");
  require(spec.spike_count >= 1, "a tap needs at least one spike");
  require(spec.duration_s > 0.0, "duration must be positive");
  auto times = spec.times_s;
  std::sort(times.begin(), times.end());
  for (std::size_t i = 0; i < times.size(); ++i) {
    require(times[i] >= 0.2 && times[i] <= spec.duration_s - 0.3,
            "tap time " + std::to_string(times[i]) + " s outside [0.2, duration - 0.3]");
    if (i > 0)
      require(times[i] - times[i - 1] >= 0.4,
              "taps closer than 0.4 s overlap their gesture windows");
  }
  std::mt19937_64 rng(spec.seed);
  std::vector<double> x(static_cast<std::size_t>(std::lround(spec.duration_s * spec.rate_hz)), 0.0);
  for (double t : times)
    add_strike(x, spec.rate_hz, t, spec.spike_count,
               spec.amplitude * uniform(rng, 0.6, 1.0), kTapSpikeTauS, rng);
  add_drift(x, spec.rate_hz, spec.baseline_drift, rng);
  add_noise(x, spec.snr_db, spec.amplitude * spec.amplitude / 8.0, rng);
  return {AudioTrace(std::move(x), spec.rate_hz), std::move(times)};
}

AudioTrace synth_music(const MusicSpec& spec) {
  require(spec.rate_hz > 0, "sample rate must be positive");
  require(spec.duration_s > 0.0, "duration must be positive");
  require(spec.gains.empty() || spec.gains.size() == spec.freqs_hz.size(),
          "music gains must match the tone list");
  for (double f : spec.freqs_hz)
    require(f > 100.0 && f < spec.rate_hz / 2.0,
            "music tone " + std::to_string(f) + " Hz must lie in (100 Hz, Nyquist)");
  std::mt19937_64 rng(spec.seed);
  std::vector<double> x(static_cast<std::size_t>(std::lround(spec.duration_s * spec.rate_hz)), 0.0);
  const double equal =
      spec.freqs_hz.empty() ? 0.0 : 0.6 / static_cast<double>(spec.freqs_hz.size());
  for (std::size_t k = 0; k < spec.freqs_hz.size(); ++k) {
    const double g = spec.gains.empty() ? equal : spec.gains[k];
    const double phase = uniform(rng, 0.0, kTwoPi);
    const double w = kTwoPi * spec.freqs_hz[k] / spec.rate_hz;
    for (std::size_t i = 0; i < x.size(); ++i)
      x[i] += g * std::sin(w * static_cast<double>(i) + phase);
  }
  return AudioTrace(std::move(x), spec.rate_hz);
}

Dataset synth_blobs(const BlobSpec& spec) {
  require(spec.n_classes >= 1 && spec.dim >= 1, "blob shape must be positive");
  require(spec.margin > 0.0 && spec.sigma > 0.0, "margin and sigma must be positive");
  require(spec.per_class >= 0 && spec.n_subjects >= 1, "invalid blob counts");
  require(spec.subject_shift.empty() ||
              spec.subject_shift.size() == static_cast<std::size_t>(spec.n_subjects),
          "subject_shift must list one magnitude per subject");

  const auto d = static_cast<std::size_t>(spec.dim);
  const auto k = static_cast<std::size_t>(spec.n_classes);
  // margin is the centre-to-boundary distance in sigmas, so neighbouring
  // centres sit 2 * margin * sigma apart: scaled one-hot vectors, or points
  // on a line when there are fewer dimensions than classes.
  const double gap = 2.0 * spec.margin * spec.sigma;
  std::vector<std::vector<double>> centres(k, std::vector<double>(d, 0.0));
  for (std::size_t c = 0; c < k; ++c) {
    if (d >= k) centres[c][c] = gap / std::numbers::sqrt2;
    else centres[c][0] = static_cast<double>(c) * gap;
  }

  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Dataset data;
  data.dim = d;
  for (std::size_t c = 0; c < k; ++c) data.label_names.push_back("class" + std::to_string(c));

  for (int s = 0; s < spec.n_subjects; ++s) {
    const double shift =
        spec.subject_shift.empty() ? 0.0 : spec.subject_shift[static_cast<std::size_t>(s)];
    for (std::size_t c = 0; c < k; ++c) {
      std::vector<double> offset(d);
      double norm = 0.0;
      for (auto& v : offset) {
        v = gauss(rng);
        norm += v * v;
      }
      norm = std::sqrt(norm);
      for (auto& v : offset) v = norm > 0 ? shift * spec.sigma * v / norm : 0.0;
      for (int i = 0; i < spec.per_class; ++i) {
        Sample row;
        row.features.resize(d);
        for (std::size_t j = 0; j < d; ++j)
          row.features[j] = centres[c][j] + offset[j] + spec.sigma * gauss(rng);
        row.label = static_cast<int>(c);
        row.subject = "s" + std::to_string(s);
        data.rows.push_back(std::move(row));
      }
    }
  }
  return data;
}

}  // namespace oesense
