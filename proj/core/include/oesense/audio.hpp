#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace oesense {

enum class Channel { Left, Right, Mono };

std::string_view to_string(Channel channel) noexcept;
Channel channel_from_string(std::string_view name);

/// One channel of in-ear audio.
///
/// Samples are finite and nominally in [-1, 1]. `bandlimit_hz` records the
/// cutoff of the last lowpass applied, which lets decimate() reject factors
/// that would alias.
class AudioTrace {
 public:
  AudioTrace(std::vector<double> samples, int sample_rate_hz,
             Channel channel = Channel::Mono,
             std::optional<double> bandlimit_hz = std::nullopt);

  std::span<const double> samples() const noexcept { return samples_; }
  const std::vector<double>& data() const noexcept { return samples_; }
  std::size_t size() const noexcept { return samples_.size(); }
  bool empty() const noexcept { return samples_.empty(); }
  int sample_rate_hz() const noexcept { return rate_; }
  Channel channel() const noexcept { return channel_; }
  std::optional<double> bandlimit_hz() const noexcept { return bandlimit_; }
  double duration_s() const noexcept {
    return static_cast<double>(samples_.size()) / rate_;
  }
  double operator[](std::size_t i) const noexcept { return samples_[i]; }

  AudioTrace with_samples(std::vector<double> samples) const;
  AudioTrace with_channel(Channel channel) const;
  AudioTrace scaled(double gain) const;

 private:
  std::vector<double> samples_;
  int rate_;
  Channel channel_;
  std::optional<double> bandlimit_;
};

class StereoTrace {
 public:
  StereoTrace(AudioTrace left, AudioTrace right);

  const AudioTrace& left() const noexcept { return left_; }
  const AudioTrace& right() const noexcept { return right_; }
  int sample_rate_hz() const noexcept { return left_.sample_rate_hz(); }
  std::size_t size() const noexcept { return left_.size(); }

 private:
  AudioTrace left_;
  AudioTrace right_;
};

double rms(std::span<const double> x) noexcept;

}  // namespace oesense
