#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "oesense/audio.hpp"

namespace oesense {

/// Magnitude spectrogram, stored bin-major: at(bin, frame).
class Spectrogram {
 public:
  Spectrogram(std::size_t n_bins, std::size_t n_frames,
              std::vector<double> magnitudes, double freq_resolution_hz,
              double hop_s);

  std::size_t n_bins() const noexcept { return n_bins_; }
  std::size_t n_frames() const noexcept { return n_frames_; }
  double freq_resolution_hz() const noexcept { return freq_res_; }
  double hop_s() const noexcept { return hop_s_; }
  double at(std::size_t bin, std::size_t frame) const noexcept {
    return values_[bin * n_frames_ + frame];
  }
  std::span<const double> values() const noexcept { return values_; }

  Spectrogram scaled(double gain) const;

 private:
  std::size_t n_bins_;
  std::size_t n_frames_;
  std::vector<double> values_;
  double freq_res_;
  double hop_s_;
};

struct BandEnergy {
  double low_fraction = 0.0;
  double high_fraction = 0.0;
};

/// Fraction of spectral energy below and at-or-above `split_hz`.
///
/// The trace is Hann-windowed and zero-padded to the next power of two.
/// Throws Errc::UndefinedRatio when the trace carries no energy.
BandEnergy band_energy_ratio(const AudioTrace& trace, double split_hz);

/// Hann-windowed STFT magnitudes; frames start at multiples of `hop` and the
/// trailing partial frame is dropped.
Spectrogram stft_spectrogram(const AudioTrace& trace, std::size_t window_len,
                             std::size_t hop);

/// 20*log10 magnitude clamped at `floor_db` and shifted so the floor maps to
/// zero; keeps the result non-negative.
Spectrogram to_log_magnitude(const Spectrogram& spec, double floor_db = -100.0);

/// Periodic Hann window.
std::vector<double> hann_window(std::size_t n);

}  // namespace oesense
