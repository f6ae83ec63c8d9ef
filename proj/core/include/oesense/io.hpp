#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "oesense/audio.hpp"
#include "oesense/classify.hpp"

namespace oesense {

// ---- WAV (RIFF/WAVE, 16-bit signed PCM, little endian) ---------------------

using WavContent = std::variant<AudioTrace, StereoTrace>;

struct WavWriteReport {
  // Some samples were outside [-1, 1] and were clipped.
  bool clipped = false;
  std::size_t clipped_samples = 0;
};

/// Decodes a PCM16 WAV image. Samples are scaled by 1/32768. Malformed
/// input throws Errc::Parse with the offending byte offset; other encodings
/// throw Errc::UnsupportedFormat.
WavContent decode_wav(std::span<const std::uint8_t> bytes);
WavContent read_wav(const std::filesystem::path& path);

std::vector<std::uint8_t> encode_wav(const WavContent& content,
                                     WavWriteReport* report = nullptr);
WavWriteReport write_wav(const WavContent& content,
                         const std::filesystem::path& path);

/// Mono files yield one trace, stereo files yield Left then Right.
std::vector<AudioTrace> wav_channels(const WavContent& content);

// ---- Feature CSV -----------------------------------------------------------

/// RFC 4180 field quoting.
std::string csv_escape(const std::string& field);
/// Splits one CSV record (no embedded newlines).
std::vector<std::string> csv_split(const std::string& line);

struct FeatureRow {
  std::vector<double> values;
  std::string subject;
  std::string label;
};

/// Header: feature columns, then "subject", then "label".
void write_feature_csv(std::ostream& out, const std::vector<std::string>& columns,
                       std::span<const FeatureRow> rows);
void write_feature_csv(const std::filesystem::path& path,
                       const std::vector<std::string>& columns,
                       std::span<const FeatureRow> rows);

/// Parses a feature CSV into a Dataset. Class ids follow the sorted label
/// names.
Dataset read_feature_csv(std::istream& in);
Dataset read_feature_csv(const std::filesystem::path& path);

// ---- Ground-truth sidecar ----------------------------------------------------

struct GroundTruthEvent {
  double t = 0.0;
  std::string kind;  // "step" or "tap"
};

/// JSON-lines: {"t": seconds, "kind": "step"|"tap"} per line.
void write_ground_truth(std::ostream& out, std::span<const GroundTruthEvent> events);
void write_ground_truth(const std::filesystem::path& path,
                        std::span<const GroundTruthEvent> events);
std::vector<GroundTruthEvent> read_ground_truth(std::istream& in);
std::vector<GroundTruthEvent> read_ground_truth(const std::filesystem::path& path);

// ---- Model persistence -------------------------------------------------------

inline constexpr int kModelFormatVersion = 1;

/// Line-oriented text format, magic and version first:
///   oesense-model 1
///   kind logreg|linear_svm|knn
///   dim D
///   classes K
///   label <name>            (K lines)
///   mean v1 .. vD
///   stddev v1 .. vD
///   weights / bias rows (linear) or k, exemplars, exemplar rows (knn)
///   end
/// Doubles use 17 significant digits so save(load(save(m))) is byte-stable.
void save_model(const Model& model, std::ostream& out);
void save_model(const Model& model, const std::filesystem::path& path);
Model load_model(std::istream& in);
Model load_model(const std::filesystem::path& path);

}  // namespace oesense
