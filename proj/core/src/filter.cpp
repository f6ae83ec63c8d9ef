#include "oesense/filter.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "oesense/error.hpp"

namespace oesense {

SosFilter butterworth_lowpass(int order, double cutoff_hz, double rate_hz) {
  require(order >= 1, "filter order must be >= 1");
  require(rate_hz > 0.0, "sample rate must be positive");
  require(cutoff_hz > 0.0 && cutoff_hz < rate_hz / 2.0,
          "cutoff must lie in (0, Nyquist); got " + std::to_string(cutoff_hz) +
              " Hz at " + std::to_string(rate_hz) + " Hz");

  const double k = std::tan(std::numbers::pi * cutoff_hz / rate_hz);
  const double k2 = k * k;
  SosFilter f;
  f.order = order;
  f.cutoff_cycles = cutoff_hz / rate_hz;
  for (int i = 0; i < order / 2; ++i) {
    // Analog pole pair at angle pi(2i+1)/(2N) from the imaginary axis.
    const double q =
        1.0 / (2.0 * std::sin(std::numbers::pi * (2 * i + 1) / (2.0 * order)));
    const double norm = 1.0 / (1.0 + k / q + k2);
    Biquad s;
    s.b0 = k2 * norm;
    s.b1 = 2.0 * s.b0;
    s.b2 = s.b0;
    s.a1 = 2.0 * (k2 - 1.0) * norm;
    s.a2 = (1.0 - k / q + k2) * norm;
    f.sections.push_back(s);
  }
  if (order % 2 == 1) {
    Biquad s;
    s.b0 = k / (1.0 + k);
    s.b1 = s.b0;
    s.b2 = 0.0;
    s.a1 = (k - 1.0) / (k + 1.0);
    s.a2 = 0.0;
    f.sections.push_back(s);
  }
  return f;
}

namespace {

struct State {
  double s1 = 0.0, s2 = 0.0;
};

void run_section(const Biquad& q, State st, std::vector<double>& x) {
  for (auto& v : x) {
    const double in = v;
    const double out = q.b0 * in + st.s1;
    st.s1 = q.b1 * in - q.a1 * out + st.s2;
    st.s2 = q.b2 * in - q.a2 * out;
    v = out;
  }
}

// State that makes each section output its DC response to a constant input
// of `x0`, so filtering starts without a step transient.
void run_steady(const SosFilter& f, std::vector<double>& x) {
  if (x.empty()) return;
  double level = x.front();
  for (const auto& q : f.sections) {
    const double gain = (q.b0 + q.b1 + q.b2) / (1.0 + q.a1 + q.a2);
    const double out = gain * level;
    State st;
    st.s2 = q.b2 * level - q.a2 * out;
    st.s1 = q.b1 * level - q.a1 * out + st.s2;
    run_section(q, st, x);
    level = out;
  }
}

}  // namespace

std::vector<double> sosfilt(const SosFilter& filter, std::span<const double> x) {
  std::vector<double> y(x.begin(), x.end());
  for (const auto& q : filter.sections) run_section(q, State{}, y);
  return y;
}

std::vector<double> filtfilt(const SosFilter& filter, std::span<const double> x) {
  const std::size_t n = x.size();
  if (n == 0) return {};
  // The slowest pole decays over a few cutoff periods; a pad of only
  // 3 x order samples leaves a visible switch-on transient at high rates.
  std::size_t pad = 3 * static_cast<std::size_t>(filter.order);
  if (filter.cutoff_cycles > 0.0)
    pad = std::max(pad, static_cast<std::size_t>(
                            std::ceil(pad / filter.cutoff_cycles)));
  pad = std::min(pad, n - 1);

  std::vector<double> ext;
  ext.reserve(n + 2 * pad);
  for (std::size_t i = pad; i >= 1; --i) ext.push_back(2.0 * x[0] - x[i]);
  ext.insert(ext.end(), x.begin(), x.end());
  for (std::size_t i = 1; i <= pad; ++i)
    ext.push_back(2.0 * x[n - 1] - x[n - 1 - i]);

  run_steady(filter, ext);
  std::reverse(ext.begin(), ext.end());
  run_steady(filter, ext);
  std::reverse(ext.begin(), ext.end());

  return {ext.begin() + static_cast<std::ptrdiff_t>(pad),
          ext.begin() + static_cast<std::ptrdiff_t>(pad + n)};
}

AudioTrace lowpass(const AudioTrace& trace, double cutoff_hz) {
  require(!trace.empty(), "lowpass of an empty trace");
  const auto f =
      butterworth_lowpass(kLowpassOrder, cutoff_hz, trace.sample_rate_hz());
  return AudioTrace(filtfilt(f, trace.samples()), trace.sample_rate_hz(),
                    trace.channel(), cutoff_hz);
}

AudioTrace decimate(const AudioTrace& trace, int factor) {
  require(factor >= 1, "decimation factor must be >= 1");
  if (factor == 1) return trace;
  require(trace.sample_rate_hz() % factor == 0,
          "decimation factor must divide the sample rate");
  const int new_rate = trace.sample_rate_hz() / factor;
  const auto limit = trace.bandlimit_hz();
  require(limit.has_value(),
          "decimate requires a lowpass-filtered trace (no band limit recorded)");
  require(new_rate / 2.0 >= *limit,
          "decimation by " + std::to_string(factor) + " puts Nyquist at " +
              std::to_string(new_rate / 2.0) + " Hz, below the " +
              std::to_string(*limit) + " Hz band limit");

  const auto src = trace.samples();
  std::vector<double> out(src.size() / static_cast<std::size_t>(factor));
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = src[i * factor];
  return AudioTrace(std::move(out), new_rate, trace.channel(), limit);
}

int decimation_factor(int rate_hz, int target_rate_hz) noexcept {
  if (target_rate_hz <= 0 || rate_hz <= target_rate_hz) return 1;
  int factor = rate_hz / target_rate_hz;
  while (factor > 1 && rate_hz % factor != 0) --factor;
  return factor;
}

AudioTrace condition(const AudioTrace& trace, double cutoff_hz,
                     int target_rate_hz) {
  auto filtered = lowpass(trace, cutoff_hz);
  return decimate(filtered, decimation_factor(trace.sample_rate_hz(),
                                              target_rate_hz));
}

}  // namespace oesense
