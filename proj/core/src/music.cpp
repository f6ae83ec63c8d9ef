#include "oesense/music.hpp"

#include <algorithm>
#include <cmath>

#include "oesense/error.hpp"
#include "oesense/filter.hpp"

namespace oesense {

Superposition superimpose(const AudioTrace& activity,
                          const AudioTrace& interference, double gain) {
  require(activity.sample_rate_hz() == interference.sample_rate_hz(),
          "superimpose: sample rates differ (" +
              std::to_string(activity.sample_rate_hz()) + " vs " +
              std::to_string(interference.sample_rate_hz()) + ")");
  std::vector<double> out(activity.data());
  if (gain != 0.0 && !interference.empty()) {
    const std::size_t m = interference.size();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += gain * interference[i % m];
  }
  double peak = 0.0;
  for (double v : out) peak = std::max(peak, std::abs(v));
  Superposition res{activity.with_samples({}), false, 1.0};
  if (peak > 1.0) {
    for (auto& v : out) v /= peak;
    res.rescaled = true;
    res.scale = peak;
  }
  res.trace = activity.with_samples(std::move(out));
  return res;
}

double spectrogram_ssim(const Spectrogram& a, const Spectrogram& b) {
  require(a.n_bins() == b.n_bins() && a.n_frames() == b.n_frames(),
          "SSIM inputs must have the same shape");
  constexpr std::size_t win = 8;
  const std::size_t rows = a.n_bins(), cols = a.n_frames();
  require(rows >= 1 && cols >= 1, "SSIM of an empty spectrogram");
  const std::size_t wr = std::min(win, rows), wc = std::min(win, cols);

  double range = 0.0;
  for (double v : a.values()) range = std::max(range, v);
  for (double v : b.values()) range = std::max(range, v);
  if (range == 0.0) return 1.0;  // both all-zero
  const double c1 = (0.01 * range) * (0.01 * range);
  const double c2 = (0.03 * range) * (0.03 * range);
  const double np = static_cast<double>(wr * wc);

  double total = 0.0;
  std::size_t windows = 0;
  for (std::size_t r0 = 0; r0 + wr <= rows; ++r0) {
    for (std::size_t c0 = 0; c0 + wc <= cols; ++c0) {
      double sa = 0, sb = 0, saa = 0, sbb = 0, sab = 0;
      for (std::size_t r = r0; r < r0 + wr; ++r)
        for (std::size_t c = c0; c < c0 + wc; ++c) {
          const double x = a.at(r, c), y = b.at(r, c);
          sa += x;
          sb += y;
          saa += x * x;
          sbb += y * y;
          sab += x * y;
        }
      const double ma = sa / np, mb = sb / np;
      // Sample (co)variances, as in the reference SSIM implementation.
      const double denom = np > 1 ? np - 1 : 1.0;
      const double va = (saa - np * ma * ma) / denom;
      const double vb = (sbb - np * mb * mb) / denom;
      const double cov = (sab - np * ma * mb) / denom;
      total += ((2 * ma * mb + c1) * (2 * cov + c2)) /
               ((ma * ma + mb * mb + c1) * (va + vb + c2));
      ++windows;
    }
  }
  return std::clamp(total / static_cast<double>(windows), 0.0, 1.0);
}

double pearson(std::span<const double> a, std::span<const double> b) {
  require(a.size() == b.size(), "pearson: inputs differ in length");
  require(a.size() >= 2, "pearson needs at least 2 samples");
  const double n = static_cast<double>(a.size());
  double ma = 0, mb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ma += a[i];
    mb += b[i];
  }
  ma /= n;
  mb /= n;
  double sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double x = a[i] - ma, y = b[i] - mb;
    sab += x * y;
    saa += x * x;
    sbb += y * y;
  }
  if (saa == 0.0 || sbb == 0.0)
    fail(Errc::UndefinedCorrelation, "pearson of a constant sequence");
  return std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0);
}

SimilarityReport music_impact(const AudioTrace& activity, const AudioTrace& music,
                              const MusicImpactConfig& cfg) {
  const auto mix = superimpose(activity, music, cfg.gain);
  const auto filtered_mix =
      condition(mix.trace, cfg.lowpass_cutoff_hz, cfg.pipeline_rate_hz);
  const auto filtered_clean =
      condition(activity, cfg.lowpass_cutoff_hz, cfg.pipeline_rate_hz);

  SimilarityReport r;
  r.rescaled = mix.rescaled;
  r.pearson = pearson(filtered_mix.samples(), filtered_clean.samples());
  const auto sa = to_log_magnitude(
      stft_spectrogram(filtered_mix, cfg.stft_window, cfg.stft_hop));
  const auto sb = to_log_magnitude(
      stft_spectrogram(filtered_clean, cfg.stft_window, cfg.stft_hop));
  r.ssim = spectrogram_ssim(sa, sb);
  r.low_band_fraction = band_energy_ratio(music, cfg.split_hz).low_fraction;
  return r;
}

}  // namespace oesense
