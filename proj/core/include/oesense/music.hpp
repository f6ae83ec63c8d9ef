#pragma once

#include <span>

#include "oesense/audio.hpp"
#include "oesense/spectrum.hpp"

namespace oesense {

struct Superposition {
  AudioTrace trace;
  // Peak exceeded 1 and every sample was divided by `scale`.
  bool rescaled = false;
  double scale = 1.0;
};

/// out[i] = activity[i] + gain * interference[i mod len(interference)].
/// Rescales the whole result when its peak magnitude exceeds 1.
Superposition superimpose(const AudioTrace& activity,
                          const AudioTrace& interference, double gain = 1.0);

/// Mean SSIM over all 8x8 windows (stride 1) with C1 = (0.01 L)^2 and
/// C2 = (0.03 L)^2, L the largest value across both inputs. Clamped to
/// [0, 1].
double spectrogram_ssim(const Spectrogram& a, const Spectrogram& b);

/// Product-moment correlation. Throws Errc::UndefinedCorrelation for a
/// constant input.
double pearson(std::span<const double> a, std::span<const double> b);

struct SimilarityReport {
  double ssim = 0.0;
  double pearson = 0.0;
  double low_band_fraction = 0.0;
  bool rescaled = false;
};

struct MusicImpactConfig {
  double gain = 1.0;
  double lowpass_cutoff_hz = 50.0;
  double split_hz = 50.0;
  int pipeline_rate_hz = 1000;
  std::size_t stft_window = 256;
  std::size_t stft_hop = 64;
};

/// Superimposes `music` on `activity`, runs both the mixture and the clean
/// activity through the lowpass front end, and compares them: SSIM of the
/// log-magnitude spectrograms, Pearson correlation of the waveforms, and the
/// music's sub-split energy fraction.
SimilarityReport music_impact(const AudioTrace& activity, const AudioTrace& music,
                              const MusicImpactConfig& cfg = {});

}  // namespace oesense
