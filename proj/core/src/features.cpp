#include "oesense/features.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "fft.hpp"
#include "oesense/error.hpp"
#include "oesense/spectrum.hpp"

namespace oesense {

namespace {

constexpr std::size_t kChroma = 12;
constexpr std::size_t kContrastBands = 7;
constexpr std::size_t kTonnetz = 6;
constexpr double kContrastQuantile = 0.2;

const std::vector<FeatureBlock> kLayout = {
    {"mfcc", 0, 40},        {"mfcc_delta", 40, 80}, {"mfcc_delta2", 80, 120},
    {"mel", 120, 160},      {"chroma", 160, 172},   {"contrast", 172, 179},
    {"tonnetz", 179, 185},  {"rmse", 185, 186},     {"onset_count", 186, 187},
};

double hz_to_mel(double f) { return 2595.0 * std::log10(1.0 + f / 700.0); }
double mel_to_hz(double m) { return 700.0 * (std::pow(10.0, m / 2595.0) - 1.0); }

using Frames = std::vector<std::vector<double>>;  // [frame][bin]

// Centred Hann frames of |X|.
Frames magnitude_frames(std::span<const double> x, std::size_t window = kFeatureWindow,
                        std::size_t hop = kFeatureHop) {
  const std::size_t half = window / 2;
  std::vector<double> padded(x.size() + window, 0.0);
  std::copy(x.begin(), x.end(), padded.begin() + static_cast<std::ptrdiff_t>(half));
  const std::size_t n_frames = 1 + x.size() / hop;
  const auto w = hann_window(window);
  Frames mags(n_frames);
  std::vector<double> frame(window);
  for (std::size_t t = 0; t < n_frames; ++t) {
    for (std::size_t i = 0; i < window; ++i)
      frame[i] = padded[t * hop + i] * w[i];
    const auto spec = detail::rfft(frame, window);
    mags[t].resize(spec.size());
    for (std::size_t k = 0; k < spec.size(); ++k) mags[t][k] = std::abs(spec[k]);
  }
  return mags;
}

double safe_log(double v) { return std::log(std::max(v, kLogFloor)); }

// Centred first difference over frames with one-sided edges.
Frames frame_gradient(const Frames& c) {
  const std::size_t n = c.size();
  Frames g(n, std::vector<double>(c.empty() ? 0 : c[0].size(), 0.0));
  if (n < 2) return g;
  for (std::size_t j = 0; j < c[0].size(); ++j) {
    g[0][j] = c[1][j] - c[0][j];
    g[n - 1][j] = c[n - 1][j] - c[n - 2][j];
    for (std::size_t t = 1; t + 1 < n; ++t)
      g[t][j] = 0.5 * (c[t + 1][j] - c[t - 1][j]);
  }
  return g;
}

void write_time_mean(const Frames& f, double* out) {
  const std::size_t dim = f.front().size();
  for (std::size_t j = 0; j < dim; ++j) {
    double acc = 0.0;
    for (const auto& row : f) acc += row[j];
    out[j] = acc / static_cast<double>(f.size());
  }
}

std::vector<double> dct_ortho(std::span<const double> v) {
  const std::size_t n = v.size();
  std::vector<double> out(n);
  for (std::size_t k = 0; k < n; ++k) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      acc += v[i] * std::cos(std::numbers::pi * static_cast<double>(k) *
                             (static_cast<double>(i) + 0.5) / static_cast<double>(n));
    const double scale = std::sqrt((k == 0 ? 1.0 : 2.0) / static_cast<double>(n));
    out[k] = scale * acc;
  }
  return out;
}

// Pitch class of each STFT bin (-1 for DC).
std::vector<int> bin_pitch_classes(std::size_t n_bins, double bin_hz) {
  std::vector<int> pc(n_bins, -1);
  for (std::size_t k = 1; k < n_bins; ++k) {
    const double midi = 69.0 + 12.0 * std::log2(static_cast<double>(k) * bin_hz / 440.0);
    const long note = std::lround(midi);
    pc[k] = static_cast<int>(((note % 12) + 12) % 12);
  }
  return pc;
}

// Octave sub-band edges ending at Nyquist: rate/2 / 2^6, ..., rate/2.
std::array<double, kContrastBands + 1> contrast_edges(double rate_hz) {
  std::array<double, kContrastBands + 1> e{};
  e[0] = 0.0;
  const double nyq = rate_hz / 2.0;
  for (std::size_t b = 1; b <= kContrastBands; ++b)
    e[b] = nyq / std::pow(2.0, static_cast<double>(kContrastBands - b));
  return e;
}

std::size_t onset_peaks(std::span<const double> flux) {
  if (flux.empty()) return 0;
  std::vector<double> tmp(flux.begin(), flux.end());
  auto median = [](std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
  };
  const double med = median(tmp);
  for (auto& v : tmp) v = std::abs(v - med);
  const double threshold = med + median(tmp);

  std::size_t count = 0;
  long last = -1000;
  const auto n = static_cast<long>(flux.size());
  for (long t = 0; t < n; ++t) {
    const double v = flux[static_cast<std::size_t>(t)];
    const double left = t > 0 ? flux[static_cast<std::size_t>(t - 1)] : -1.0;
    const double right = t + 1 < n ? flux[static_cast<std::size_t>(t + 1)] : -1.0;
    if (v > threshold && v > kLogFloor && v > left && v >= right && t - last >= 2) {
      ++count;
      last = t;
    }
  }
  return count;
}

std::vector<double> spectral_flux(const Frames& mags) {
  std::vector<double> flux(mags.size(), 0.0);
  std::vector<double> prev(mags.empty() ? 0 : mags[0].size(), 0.0);
  for (std::size_t t = 0; t < mags.size(); ++t) {
    double acc = 0.0;
    for (std::size_t k = 0; k < prev.size(); ++k)
      acc += std::max(0.0, mags[t][k] - prev[k]);
    flux[t] = acc;
    prev = mags[t];
  }
  return flux;
}

}  // namespace

const std::vector<FeatureBlock>& feature_index_map() { return kLayout; }

FeatureBlock feature_block(std::string_view name) {
  for (const auto& b : kLayout)
    if (b.name == name) return b;
  fail(Errc::InvalidArgument, "unknown feature block '" + std::string(name) + "'");
}

std::vector<std::string> feature_column_names() {
  std::vector<std::string> names;
  names.reserve(kFeatureDim);
  for (const auto& b : kLayout) {
    if (b.end - b.begin == 1) {
      names.push_back(b.name);
      continue;
    }
    for (std::size_t i = 0; i < b.end - b.begin; ++i)
      names.push_back(b.name + "_" + std::to_string(i));
  }
  return names;
}

std::vector<std::string> fused_column_names() {
  std::vector<std::string> names;
  for (const auto& n : feature_column_names()) names.push_back("left_" + n);
  for (const auto& n : feature_column_names()) names.push_back("right_" + n);
  return names;
}

std::vector<double> mel_filterbank(std::size_t n_bands, std::size_t n_fft,
                                   double rate_hz) {
  const std::size_t n_bins = n_fft / 2 + 1;
  const double mel_max = hz_to_mel(rate_hz / 2.0);
  std::vector<double> edges(n_bands + 2);
  for (std::size_t i = 0; i < edges.size(); ++i)
    edges[i] = mel_to_hz(mel_max * static_cast<double>(i) /
                         static_cast<double>(n_bands + 1));
  std::vector<double> fb(n_bands * n_bins, 0.0);
  for (std::size_t m = 0; m < n_bands; ++m) {
    const double lo = edges[m], mid = edges[m + 1], hi = edges[m + 2];
    for (std::size_t k = 0; k < n_bins; ++k) {
      const double f = static_cast<double>(k) * rate_hz / static_cast<double>(n_fft);
      const double rise = (f - lo) / (mid - lo);
      const double fall = (hi - f) / (hi - mid);
      fb[m * n_bins + k] = std::max(0.0, std::min(rise, fall));
    }
  }
  return fb;
}

std::size_t count_onsets(std::span<const double> x) {
  return onset_peaks(spectral_flux(magnitude_frames(x)));
}

void FeatureConfig::validate() const {
  require(stft_window >= 128 && stft_window <= 4096,
          "feature stft_window must lie in [128, 4096]");
  require(stft_hop >= 1 && stft_hop <= stft_window,
          "feature stft_hop must lie in [1, stft_window]");
}

FeatureVector extract_features(const Segment& seg, const FeatureConfig& cfg) {
  cfg.validate();
  require(seg.sample_rate_hz == kFeatureRateHz,
          "feature extraction expects a 1000 Hz segment, got " +
              std::to_string(seg.sample_rate_hz) + " Hz");
  require(seg.samples.size() == 400 || seg.samples.size() == 1000,
          "feature extraction expects a 0.4 s or 1.0 s segment, got " +
              std::to_string(seg.samples.size()) + " samples");

  const double rate = seg.sample_rate_hz;
  const auto mags = magnitude_frames(seg.samples, cfg.stft_window, cfg.stft_hop);
  const std::size_t n_frames = mags.size();
  const std::size_t n_bins = cfg.stft_window / 2 + 1;
  const double bin_hz = rate / static_cast<double>(cfg.stft_window);

  const auto fb = mel_filterbank(kMelBands, cfg.stft_window, kFeatureRateHz);
  const auto pitch = bin_pitch_classes(n_bins, bin_hz);
  static const auto edges = contrast_edges(kFeatureRateHz);

  Frames mel(n_frames, std::vector<double>(kMelBands, 0.0));
  Frames mfcc(n_frames);
  Frames chroma(n_frames, std::vector<double>(kChroma, 0.0));
  Frames contrast(n_frames, std::vector<double>(kContrastBands, 0.0));
  Frames tonnetz(n_frames, std::vector<double>(kTonnetz, 0.0));

  std::vector<double> log_mel(kMelBands);
  for (std::size_t t = 0; t < n_frames; ++t) {
    const auto& mag = mags[t];

    for (std::size_t m = 0; m < kMelBands; ++m) {
      double e = 0.0;
      for (std::size_t k = 0; k < n_bins; ++k)
        e += fb[m * n_bins + k] * mag[k] * mag[k];
      mel[t][m] = e;
      log_mel[m] = safe_log(e);
    }
    mfcc[t] = dct_ortho(log_mel);

    for (std::size_t k = 1; k < n_bins; ++k)
      chroma[t][static_cast<std::size_t>(pitch[k])] += mag[k] * mag[k];
    const double cmax = *std::max_element(chroma[t].begin(), chroma[t].end());
    if (cmax > 0.0)
      for (auto& v : chroma[t]) v /= cmax;

    for (std::size_t b = 0; b < kContrastBands; ++b) {
      std::vector<double> band;
      for (std::size_t k = 0; k < n_bins; ++k) {
        const double f = static_cast<double>(k) * bin_hz;
        const bool last = b + 1 == kContrastBands;
        if (f >= edges[b] && (f < edges[b + 1] || (last && f <= edges[b + 1])))
          band.push_back(mag[k]);
      }
      std::sort(band.begin(), band.end());
      const auto q = std::max<std::size_t>(
          1, static_cast<std::size_t>(std::lround(kContrastQuantile *
                                                  static_cast<double>(band.size()))));
      double valley = 0.0, peak = 0.0;
      for (std::size_t i = 0; i < q; ++i) {
        valley += band[i];
        peak += band[band.size() - 1 - i];
      }
      contrast[t][b] = safe_log(peak / static_cast<double>(q)) -
                       safe_log(valley / static_cast<double>(q));
    }

    // Tonal centroid of the L1-normalized chroma: fifths, minor thirds and
    // major thirds circles.
    double csum = 0.0;
    for (double v : chroma[t]) csum += v;
    if (csum > 0.0) {
      constexpr double pi = std::numbers::pi;
      constexpr std::array<double, 3> angle = {7.0 * pi / 6.0, 3.0 * pi / 2.0,
                                               2.0 * pi / 3.0};
      constexpr std::array<double, 3> radius = {1.0, 1.0, 0.5};
      for (std::size_t l = 0; l < kChroma; ++l) {
        const double w = chroma[t][l] / csum;
        for (std::size_t r = 0; r < 3; ++r) {
          tonnetz[t][2 * r] += w * radius[r] * std::sin(static_cast<double>(l) * angle[r]);
          tonnetz[t][2 * r + 1] += w * radius[r] * std::cos(static_cast<double>(l) * angle[r]);
        }
      }
    }
  }

  const auto delta = frame_gradient(mfcc);
  const auto delta2 = frame_gradient(delta);

  FeatureVector fv;
  fv.channel = seg.channel;
  double* out = fv.values.data();
  write_time_mean(mfcc, out + 0);
  write_time_mean(delta, out + 40);
  write_time_mean(delta2, out + 80);
  write_time_mean(mel, out + 120);
  write_time_mean(chroma, out + 160);
  write_time_mean(contrast, out + 172);
  write_time_mean(tonnetz, out + 179);
  out[185] = rms(seg.samples);
  out[186] = static_cast<double>(onset_peaks(spectral_flux(mags)));

  for (std::size_t i = 0; i < kFeatureDim; ++i)
    if (!std::isfinite(fv.values[i]))
      fail(Errc::Internal, "feature " + feature_column_names()[i] + " is not finite");
  return fv;
}

FusedFeatureVector fuse(const FeatureVector& left, const FeatureVector& right) {
  require(left.channel == Channel::Left, "fuse: first vector must be Left");
  require(right.channel == Channel::Right, "fuse: second vector must be Right");
  FusedFeatureVector f;
  std::copy(left.values.begin(), left.values.end(), f.values.begin());
  std::copy(right.values.begin(), right.values.end(),
            f.values.begin() + static_cast<std::ptrdiff_t>(kFeatureDim));
  return f;
}

}  // namespace oesense
