#include "oesense/audio.hpp"

#include <cmath>
#include <string>

#include "oesense/error.hpp"

namespace oesense {

std::string_view to_string(Errc code) noexcept {
  switch (code) {
    case Errc::InvalidArgument: return "invalid-argument";
    case Errc::InvalidDataset: return "invalid-dataset";
    case Errc::UndefinedRatio: return "undefined-ratio";
    case Errc::UndefinedCorrelation: return "undefined-correlation";
    case Errc::Parse: return "parse-error";
    case Errc::UnsupportedFormat: return "unsupported-format";
    case Errc::Version: return "version-error";
    case Errc::Io: return "io-error";
    case Errc::NotReady: return "not-ready";
    case Errc::Internal: return "internal-error";
  }
  return "unknown";
}

Error::Error(Errc code, const std::string& message,
             std::optional<std::size_t> byte_offset)
    : std::runtime_error(std::string(to_string(code)) + ": " + message),
      code_(code),
      offset_(byte_offset) {}

void fail(Errc code, const std::string& message) { throw Error(code, message); }

std::string_view to_string(Channel channel) noexcept {
  switch (channel) {
    case Channel::Left: return "Left";
    case Channel::Right: return "Right";
    case Channel::Mono: return "Mono";
  }
  return "Mono";
}

Channel channel_from_string(std::string_view name) {
  if (name == "Left" || name == "left" || name == "L") return Channel::Left;
  if (name == "Right" || name == "right" || name == "R") return Channel::Right;
  if (name == "Mono" || name == "mono" || name == "M") return Channel::Mono;
  fail(Errc::InvalidArgument, "unknown channel '" + std::string(name) + "'");
}

AudioTrace::AudioTrace(std::vector<double> samples, int sample_rate_hz,
                       Channel channel, std::optional<double> bandlimit_hz)
    : samples_(std::move(samples)),
      rate_(sample_rate_hz),
      channel_(channel),
      bandlimit_(bandlimit_hz) {
  require(rate_ > 0, "sample rate must be positive");
  for (std::size_t i = 0; i < samples_.size(); ++i) {
    if (!std::isfinite(samples_[i])) {
      fail(Errc::InvalidArgument,
           "non-finite sample at index " + std::to_string(i));
    }
  }
}

AudioTrace AudioTrace::with_samples(std::vector<double> samples) const {
  return AudioTrace(std::move(samples), rate_, channel_, bandlimit_);
}

AudioTrace AudioTrace::with_channel(Channel channel) const {
  return AudioTrace(samples_, rate_, channel, bandlimit_);
}

AudioTrace AudioTrace::scaled(double gain) const {
  std::vector<double> out(samples_);
  for (auto& v : out) v *= gain;
  return AudioTrace(std::move(out), rate_, channel_, bandlimit_);
}

StereoTrace::StereoTrace(AudioTrace left, AudioTrace right)
    : left_(left.with_channel(Channel::Left)),
      right_(right.with_channel(Channel::Right)) {
  require(left_.size() == right_.size(),
          "stereo channels must have identical length");
  require(left_.sample_rate_hz() == right_.sample_rate_hz(),
          "stereo channels must share a sample rate");
}

double rms(std::span<const double> x) noexcept {
  if (x.empty()) return 0.0;
  double acc = 0.0;
  for (double v : x) acc += v * v;
  return std::sqrt(acc / static_cast<double>(x.size()));
}

}  // namespace oesense
