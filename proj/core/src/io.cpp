#include "oesense/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <iterator>
#include <map>
#include "json.hpp"
#include <sstream>

#include "oesense/error.hpp"

namespace oesense {

namespace {

[[noreturn]] void parse_fail(const std::string& what, std::size_t offset) {
  throw Error(Errc::Parse, what + " (byte offset " + std::to_string(offset) + ")",
              offset);
}

std::uint32_t le32(std::span<const std::uint8_t> b, std::size_t at) {
  return static_cast<std::uint32_t>(b[at]) | (static_cast<std::uint32_t>(b[at + 1]) << 8) |
         (static_cast<std::uint32_t>(b[at + 2]) << 16) |
         (static_cast<std::uint32_t>(b[at + 3]) << 24);
}

std::uint16_t le16(std::span<const std::uint8_t> b, std::size_t at) {
  return static_cast<std::uint16_t>(b[at] | (b[at + 1] << 8));
}

bool tag_is(std::span<const std::uint8_t> b, std::size_t at, const char* tag) {
  return std::memcmp(b.data() + at, tag, 4) == 0;
}

void put32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void put16(std::vector<std::uint8_t>& out, std::uint16_t v) {
  out.push_back(static_cast<std::uint8_t>(v & 0xff));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
}

void put_tag(std::vector<std::uint8_t>& out, const char* tag) {
  out.insert(out.end(), tag, tag + 4);
}

std::vector<std::uint8_t> slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(Errc::Io, "cannot open '" + path.string() + "' for reading");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(Errc::Io, "cannot open '" + path.string() + "' for reading");
  return in;
}

std::ofstream open_out(const std::filesystem::path& path, bool binary = false) {
  std::ofstream out(path, binary ? std::ios::binary | std::ios::trunc : std::ios::trunc);
  if (!out) fail(Errc::Io, "cannot open '" + path.string() + "' for writing");
  return out;
}

std::string fmt_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

// ---- WAV ---------------------------------------------------------------------

WavContent decode_wav(std::span<const std::uint8_t> b) {
  if (b.size() < 12) parse_fail("file too short for a RIFF header", b.size());
  if (!tag_is(b, 0, "RIFF")) parse_fail("missing RIFF magic", 0);
  if (!tag_is(b, 8, "WAVE")) parse_fail("missing WAVE form type", 8);

  bool have_fmt = false;
  std::uint16_t channels = 0, bits = 0, block_align = 0;
  std::uint32_t rate = 0;
  std::size_t data_at = 0, data_len = 0;
  bool have_data = false;

  std::size_t pos = 12;
  while (pos < b.size()) {
    if (pos + 8 > b.size()) parse_fail("truncated chunk header", pos);
    const std::size_t len = le32(b, pos + 4);
    const std::size_t body = pos + 8;
    if (body + len > b.size()) parse_fail("chunk extends past end of file", pos);
    if (tag_is(b, pos, "fmt ")) {
      if (len < 16) parse_fail("fmt chunk shorter than 16 bytes", pos);
      std::uint16_t format = le16(b, body);
      channels = le16(b, body + 2);
      rate = le32(b, body + 4);
      block_align = le16(b, body + 12);
      bits = le16(b, body + 14);
      if (format == 0xFFFE) {
        if (len < 40) parse_fail("extensible fmt chunk too short", pos);
        format = le16(b, body + 24);  // sub-format GUID starts with the tag
      }
      if (format != 1)
        throw Error(Errc::UnsupportedFormat,
                    "WAV format tag " + std::to_string(format) + " is not PCM");
      if (bits != 16)
        throw Error(Errc::UnsupportedFormat,
                    std::to_string(bits) + "-bit PCM is not supported (16-bit only)");
      if (channels != 1 && channels != 2)
        throw Error(Errc::UnsupportedFormat,
                    std::to_string(channels) + " channels not supported (1 or 2)");
      if (rate == 0) parse_fail("sample rate is zero", body + 4);
      if (block_align != channels * 2) parse_fail("block align mismatch", body + 12);
      have_fmt = true;
    } else if (tag_is(b, pos, "data")) {
      if (!have_fmt) parse_fail("data chunk before fmt chunk", pos);
      data_at = body;
      data_len = len;
      have_data = true;
      break;
    }
    pos = body + len + (len & 1);
  }
  if (!have_fmt) parse_fail("no fmt chunk", b.size());
  if (!have_data) parse_fail("no data chunk", b.size());
  if (data_len % block_align != 0)
    parse_fail("data chunk holds a partial sample frame", data_at + data_len);

  const std::size_t frames = data_len / block_align;
  std::vector<double> ch[2];
  for (int c = 0; c < channels; ++c) ch[c].resize(frames);
  for (std::size_t i = 0; i < frames; ++i) {
    for (int c = 0; c < channels; ++c) {
      const auto raw = static_cast<std::int16_t>(le16(b, data_at + i * block_align + 2 * c));
      ch[c][i] = static_cast<double>(raw) / 32768.0;
    }
  }
  const int r = static_cast<int>(rate);
  if (channels == 1) return AudioTrace(std::move(ch[0]), r);
  return StereoTrace(AudioTrace(std::move(ch[0]), r, Channel::Left),
                     AudioTrace(std::move(ch[1]), r, Channel::Right));
}

WavContent read_wav(const std::filesystem::path& path) {
  const auto bytes = slurp(path);
  return decode_wav(bytes);
}

std::vector<std::uint8_t> encode_wav(const WavContent& content,
                                     WavWriteReport* report) {
  std::vector<const AudioTrace*> chans;
  if (const auto* m = std::get_if<AudioTrace>(&content)) chans = {m};
  else {
    const auto& s = std::get<StereoTrace>(content);
    chans = {&s.left(), &s.right()};
  }
  const auto n_ch = static_cast<std::uint16_t>(chans.size());
  const std::size_t frames = chans[0]->size();
  const auto rate = static_cast<std::uint32_t>(chans[0]->sample_rate_hz());
  const auto data_len = static_cast<std::uint32_t>(frames * n_ch * 2);

  WavWriteReport rep;
  std::vector<std::uint8_t> out;
  out.reserve(44 + data_len);
  put_tag(out, "RIFF");
  put32(out, 36 + data_len);
  put_tag(out, "WAVE");
  put_tag(out, "fmt ");
  put32(out, 16);
  put16(out, 1);
  put16(out, n_ch);
  put32(out, rate);
  put32(out, rate * n_ch * 2);
  put16(out, static_cast<std::uint16_t>(n_ch * 2));
  put16(out, 16);
  put_tag(out, "data");
  put32(out, data_len);
  for (std::size_t i = 0; i < frames; ++i) {
    for (const auto* c : chans) {
      double v = (*c)[i];
      if (v > 1.0 || v < -1.0) {
        rep.clipped = true;
        ++rep.clipped_samples;
        v = std::clamp(v, -1.0, 1.0);
      }
      const long q = std::clamp<long>(std::lround(v * 32768.0), -32768, 32767);
      put16(out, static_cast<std::uint16_t>(static_cast<std::int16_t>(q)));
    }
  }
  if (report) *report = rep;
  return out;
}

WavWriteReport write_wav(const WavContent& content, const std::filesystem::path& path) {
  WavWriteReport rep;
  const auto bytes = encode_wav(content, &rep);
  auto out = open_out(path, true);
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) fail(Errc::Io, "failed writing '" + path.string() + "'");
  return rep;
}

std::vector<AudioTrace> wav_channels(const WavContent& content) {
  if (const auto* m = std::get_if<AudioTrace>(&content)) return {*m};
  const auto& s = std::get<StereoTrace>(content);
  return {s.left(), s.right()};
}

// ---- CSV ---------------------------------------------------------------------

std::string csv_escape(const std::string& field) {
  if (field.find_first_of(",\"\r\n") == std::string::npos) return field;
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

std::vector<std::string> csv_split(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(cur));
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  if (quoted) fail(Errc::Parse, "unterminated quoted CSV field");
  fields.push_back(std::move(cur));
  return fields;
}

void write_feature_csv(std::ostream& out, const std::vector<std::string>& columns,
                       std::span<const FeatureRow> rows) {
  for (const auto& c : columns) out << csv_escape(c) << ',';
  out << "subject,label\n";
  for (const auto& r : rows) {
    require(r.values.size() == columns.size(), "feature row width mismatch");
    for (double v : r.values) out << fmt_double(v) << ',';
    out << csv_escape(r.subject) << ',' << csv_escape(r.label) << '\n';
  }
}

void write_feature_csv(const std::filesystem::path& path,
                       const std::vector<std::string>& columns,
                       std::span<const FeatureRow> rows) {
  auto out = open_out(path);
  write_feature_csv(out, columns, rows);
  if (!out) fail(Errc::Io, "failed writing '" + path.string() + "'");
}

Dataset read_feature_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) fail(Errc::Parse, "feature CSV is empty");
  const auto header = csv_split(line);
  if (header.size() < 3 || header[header.size() - 2] != "subject" ||
      header.back() != "label")
    fail(Errc::Parse, "feature CSV header must end with subject,label");
  const std::size_t dim = header.size() - 2;

  std::vector<std::pair<std::vector<double>, std::pair<std::string, std::string>>> raw;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto f = csv_split(line);
    if (f.size() != header.size())
      fail(Errc::Parse, "line " + std::to_string(line_no) + " has " +
                            std::to_string(f.size()) + " fields, expected " +
                            std::to_string(header.size()));
    std::vector<double> v(dim);
    for (std::size_t j = 0; j < dim; ++j) {
      char* end = nullptr;
      v[j] = std::strtod(f[j].c_str(), &end);
      if (f[j].empty() || *end != '\0' || !std::isfinite(v[j]))
        fail(Errc::Parse, "line " + std::to_string(line_no) + ", column " +
                              std::to_string(j + 1) + ": bad number '" + f[j] + "'");
    }
    raw.push_back({std::move(v), {f[dim], f[dim + 1]}});
  }

  std::map<std::string, int> ids;
  for (const auto& r : raw) ids.emplace(r.second.second, 0);
  Dataset data;
  data.dim = dim;
  for (auto& [name, id] : ids) {
    id = static_cast<int>(data.label_names.size());
    data.label_names.push_back(name);
  }
  for (auto& r : raw)
    data.rows.push_back({std::move(r.first), ids.at(r.second.second), r.second.first});
  return data;
}

Dataset read_feature_csv(const std::filesystem::path& path) {
  auto in = open_in(path);
  return read_feature_csv(in);
}

// ---- Ground truth --------------------------------------------------------------

void write_ground_truth(std::ostream& out, std::span<const GroundTruthEvent> events) {
  for (const auto& e : events) {
    nlohmann::ordered_json j;
    j["t"] = e.t;
    j["kind"] = e.kind;
    out << j.dump() << '\n';
  }
}

void write_ground_truth(const std::filesystem::path& path,
                        std::span<const GroundTruthEvent> events) {
  auto out = open_out(path);
  write_ground_truth(out, events);
  if (!out) fail(Errc::Io, "failed writing '" + path.string() + "'");
}

std::vector<GroundTruthEvent> read_ground_truth(std::istream& in) {
  std::vector<GroundTruthEvent> events;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      events.push_back({j.at("t").get<double>(), j.at("kind").get<std::string>()});
    } catch (const nlohmann::json::exception& e) {
      fail(Errc::Parse, "ground truth line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return events;
}

std::vector<GroundTruthEvent> read_ground_truth(const std::filesystem::path& path) {
  auto in = open_in(path);
  return read_ground_truth(in);
}

// ---- Model persistence -----------------------------------------------------------

void save_model(const Model& model, std::ostream& out) {
  const std::size_t d = model.dim(), k = model.n_classes();
  auto row = [&](const char* tag, const double* v, std::size_t n) {
    if (tag) out << tag;
    for (std::size_t i = 0; i < n; ++i) out << (i || tag ? " " : "") << fmt_double(v[i]);
    out << '\n';
  };
  out << "oesense-model " << kModelFormatVersion << '\n';
  out << "kind " << to_string(model.kind()) << '\n';
  out << "dim " << d << '\n';
  out << "classes " << k << '\n';
  for (const auto& name : model.label_names()) out << "label " << name << '\n';
  row("mean", model.normalizer().mean.data(), d);
  row("stddev", model.normalizer().stddev.data(), d);
  if (model.kind() == ModelKind::Knn) {
    const auto& labels = model.exemplar_labels();
    out << "k " << model.k() << '\n';
    out << "exemplars " << labels.size() << '\n';
    for (std::size_t i = 0; i < labels.size(); ++i) {
      out << labels[i];
      for (std::size_t j = 0; j < d; ++j) out << ' ' << fmt_double(model.exemplars()[i * d + j]);
      out << '\n';
    }
  } else {
    out << "weights\n";
    for (std::size_t c = 0; c < k; ++c) row(nullptr, model.weights().data() + c * d, d);
    row("bias", model.bias().data(), k);
  }
  out << "end\n";
}

void save_model(const Model& model, const std::filesystem::path& path) {
  auto out = open_out(path);
  save_model(model, out);
  if (!out) fail(Errc::Io, "failed writing '" + path.string() + "'");
}

namespace {

class ModelReader {
 public:
  explicit ModelReader(std::istream& in) : in_(in) {}

  std::istringstream next(const char* expect) {
    std::string line;
    if (!std::getline(in_, line)) corrupt(std::string("missing '") + expect + "' line");
    ++line_no_;
    std::istringstream ss(line);
    if (expect) {
      std::string tag;
      ss >> tag;
      if (tag != expect) corrupt(std::string("expected '") + expect + "', found '" + tag + "'");
    }
    return ss;
  }

  std::string rest_of(std::istringstream& ss) {
    std::string s;
    std::getline(ss >> std::ws, s);
    return s;
  }

  template <typename T>
  T value(std::istringstream& ss) {
    T v{};
    if (!(ss >> v)) corrupt("malformed value");
    return v;
  }

  std::vector<double> doubles(std::istringstream& ss, std::size_t n) {
    std::vector<double> v(n);
    for (auto& x : v) {
      std::string tok;
      if (!(ss >> tok)) corrupt("too few values");
      char* end = nullptr;
      x = std::strtod(tok.c_str(), &end);
      if (*end != '\0' || !std::isfinite(x)) corrupt("bad number '" + tok + "'");
    }
    std::string extra;
    if (ss >> extra) corrupt("too many values");
    return v;
  }

  [[noreturn]] void corrupt(const std::string& what) const {
    fail(Errc::Parse, "model file line " + std::to_string(line_no_) + ": " + what);
  }

 private:
  std::istream& in_;
  std::size_t line_no_ = 0;
};

}  // namespace

Model load_model(std::istream& in) {
  ModelReader rd(in);
  auto magic = rd.next("oesense-model");
  const int version = rd.value<int>(magic);
  if (version != kModelFormatVersion)
    fail(Errc::Version, "model format version " + std::to_string(version) +
                            " is not supported (expected " +
                            std::to_string(kModelFormatVersion) + ")");
  auto kind_line = rd.next("kind");
  const auto kind_name = rd.value<std::string>(kind_line);
  ModelKind kind;
  try {
    kind = model_kind_from_string(kind_name);
  } catch (const Error&) {
    fail(Errc::Version, "unknown model kind '" + kind_name + "'");
  }
  auto dim_line = rd.next("dim");
  const auto d = rd.value<std::size_t>(dim_line);
  auto cls_line = rd.next("classes");
  const auto k = rd.value<std::size_t>(cls_line);
  if (d == 0 || k == 0 || d > 1'000'000 || k > 100'000) rd.corrupt("implausible shape");
  std::vector<std::string> labels;
  for (std::size_t c = 0; c < k; ++c) {
    auto l = rd.next("label");
    labels.push_back(rd.rest_of(l));
  }
  Normalizer nz;
  auto mean_line = rd.next("mean");
  nz.mean = rd.doubles(mean_line, d);
  auto sd_line = rd.next("stddev");
  nz.stddev = rd.doubles(sd_line, d);

  Model model;
  try {
    if (kind == ModelKind::Knn) {
      auto k_line = rd.next("k");
      const int kk = rd.value<int>(k_line);
      auto n_line = rd.next("exemplars");
      const auto n = rd.value<std::size_t>(n_line);
      std::vector<double> ex;
      std::vector<int> lab;
      ex.reserve(n * d);
      for (std::size_t i = 0; i < n; ++i) {
        auto r = rd.next(nullptr);
        lab.push_back(rd.value<int>(r));
        const auto v = rd.doubles(r, d);
        ex.insert(ex.end(), v.begin(), v.end());
      }
      model = Model::knn(std::move(labels), std::move(nz), kk, std::move(ex), std::move(lab));
    } else {
      rd.next("weights");
      std::vector<double> w;
      w.reserve(k * d);
      for (std::size_t c = 0; c < k; ++c) {
        auto r = rd.next(nullptr);
        const auto v = rd.doubles(r, d);
        w.insert(w.end(), v.begin(), v.end());
      }
      auto b_line = rd.next("bias");
      auto b = rd.doubles(b_line, k);
      model = Model::linear(kind, std::move(labels), std::move(nz), std::move(w), std::move(b));
    }
  } catch (const Error& e) {
    if (e.code() == Errc::InvalidArgument) rd.corrupt(e.what());
    throw;
  }
  rd.next("end");
  return model;
}

Model load_model(const std::filesystem::path& path) {
  auto in = open_in(path);
  return load_model(in);
}

}  // namespace oesense
