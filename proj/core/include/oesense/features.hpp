#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "oesense/audio.hpp"
#include "oesense/segmentation.hpp"

namespace oesense {

inline constexpr std::size_t kFeatureDim = 187;
inline constexpr std::size_t kFusedFeatureDim = 2 * kFeatureDim;

/// Extraction parameters at the 1 kHz pipeline rate. Frames are centred:
/// the segment is zero-padded by window/2 on both sides.
inline constexpr int kFeatureRateHz = 1000;
inline constexpr std::size_t kFeatureWindow = 256;
inline constexpr std::size_t kFeatureHop = 64;
inline constexpr std::size_t kMelBands = 40;
inline constexpr double kLogFloor = 1e-10;

struct FeatureVector {
  std::array<double, kFeatureDim> values{};
  Channel channel = Channel::Mono;
};

struct FusedFeatureVector {
  std::array<double, kFusedFeatureDim> values{};
};

struct FeatureBlock {
  std::string name;
  std::size_t begin = 0;  // inclusive
  std::size_t end = 0;    // exclusive
};

/// Layout of the per-channel vector:
///   mfcc [0,40) | mfcc_delta [40,80) | mfcc_delta2 [80,120) |
///   mel [120,160) | chroma [160,172) | contrast [172,179) |
///   tonnetz [179,185) | rmse [185,186) | onset_count [186,187)
const std::vector<FeatureBlock>& feature_index_map();

/// Range of one named block; throws for unknown names.
FeatureBlock feature_block(std::string_view name);

/// One column name per value ("mfcc_0", ..., "onset_count").
std::vector<std::string> feature_column_names();
/// Fused names with "left_" / "right_" prefixes.
std::vector<std::string> fused_column_names();

/// STFT framing. Band counts and family sizes are fixed by the 187-value
/// layout; only the framing is tunable.
struct FeatureConfig {
  std::size_t stft_window = kFeatureWindow;
  std::size_t stft_hop = kFeatureHop;

  void validate() const;
};

/// 187 features for a 0.4 s or 1.0 s segment at 1 kHz. Frame-varying
/// families are averaged over frames. Throws Errc::InvalidArgument on the
/// wrong rate or length and Errc::Internal if any value comes out
/// non-finite.
FeatureVector extract_features(const Segment& seg, const FeatureConfig& cfg = {});

/// left ++ right; channels must be Left and Right respectively.
FusedFeatureVector fuse(const FeatureVector& left, const FeatureVector& right);

/// Triangular mel filterbank over [0, rate/2], HTK mel scale. Row-major
/// [band][bin], n_fft/2 + 1 bins per band.
std::vector<double> mel_filterbank(std::size_t n_bands, std::size_t n_fft,
                                   double rate_hz);

/// Number of spectral-flux onsets in a segment (same framing as above).
std::size_t count_onsets(std::span<const double> x);

}  // namespace oesense
