#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace oesense {

enum class Errc {
  InvalidArgument,
  InvalidDataset,
  UndefinedRatio,
  UndefinedCorrelation,
  Parse,
  UnsupportedFormat,
  Version,
  Io,
  NotReady,
  Internal,
};

std::string_view to_string(Errc code) noexcept;

// Single exception type for the library; callers switch on code().
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& message,
        std::optional<std::size_t> byte_offset = std::nullopt);

  Errc code() const noexcept { return code_; }
  // Set for parse errors that can point into the input.
  std::optional<std::size_t> byte_offset() const noexcept { return offset_; }

 private:
  Errc code_;
  std::optional<std::size_t> offset_;
};

[[noreturn]] void fail(Errc code, const std::string& message);

inline void require(bool condition, const std::string& message) {
  if (!condition) fail(Errc::InvalidArgument, message);
}

}  // namespace oesense
