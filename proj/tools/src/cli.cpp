#include "oesense/cli.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "oesense/audio.hpp"
#include "oesense/classify.hpp"
#include "oesense/error.hpp"
#include "oesense/features.hpp"
#include "oesense/filter.hpp"
#include "oesense/fit_test.hpp"
#include "oesense/io.hpp"
#include "oesense/music.hpp"
#include "oesense/segmentation.hpp"
#include "oesense/spectrum.hpp"
#include "oesense/step_counter.hpp"
#include "oesense/synth.hpp"

namespace oesense::cli {

namespace {

namespace fs = std::filesystem;
using Json = nlohmann::ordered_json;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

constexpr double kLatencyBudgetMs = 50.0;

// ---- effective configuration ------------------------------------------------

struct Settings {
  StepCounterConfig steps;
  GestureConfig gesture;
  double window_s = 1.0;
  double overlap = 0.5;
  FeatureConfig features;
  TrainOptions train;
  FitThresholds fit;
  double tone_s = 0.1;
  MusicImpactConfig music;
};

Json peaks_json(const StepCounterConfig& c) {
  return Json{{"theta_intvl_s", c.theta_intvl_s},
              {"theta_amp_factor", c.theta_amp_factor},
              {"delta_align_s", c.delta_align_s},
              {"lowpass_cutoff_hz", c.lowpass_cutoff_hz},
              {"envelope_smooth_hz", c.envelope_smooth_hz},
              {"pipeline_rate_hz", c.pipeline_rate_hz}};
}

Json settings_json(const Settings& s) {
  Json gesture = peaks_json(s.gesture.peaks);
  gesture["before_s"] = s.gesture.before_s;
  gesture["after_s"] = s.gesture.after_s;
  return Json{
      {"step_counter", peaks_json(s.steps)},
      {"gesture", gesture},
      {"activity", {{"window_s", s.window_s}, {"overlap", s.overlap}}},
      {"features",
       {{"stft_window", s.features.stft_window}, {"stft_hop", s.features.stft_hop}}},
      {"classifier",
       {{"model", std::string(to_string(s.train.kind))},
        {"k", s.train.k},
        {"max_epochs", s.train.max_epochs},
        {"grad_tol", s.train.grad_tol},
        {"svm_lambda", s.train.svm_lambda}}},
      {"fit_test",
       {{"min_low_ratio", s.fit.min_low_ratio},
        {"max_high_ratio", s.fit.max_high_ratio},
        {"tone_s", s.tone_s}}},
      {"music",
       {{"gain", s.music.gain},
        {"lowpass_cutoff_hz", s.music.lowpass_cutoff_hz},
        {"split_hz", s.music.split_hz},
        {"stft_window", s.music.stft_window},
        {"stft_hop", s.music.stft_hop}}}};
}

template <typename T>
T config_value(const nlohmann::json& v, const std::string& where) {
  try {
    return v.get<T>();
  } catch (const nlohmann::json::exception&) {
    throw UsageError("config: wrong type for '" + where + "'");
  }
}

using Setter = std::function<void(const nlohmann::json&, const std::string&)>;

template <typename T>
Setter set(T& target) {
  return [&target](const nlohmann::json& v, const std::string& where) {
    target = config_value<T>(v, where);
  };
}

std::map<std::string, Setter> peak_setters(StepCounterConfig& c) {
  return {{"theta_intvl_s", set(c.theta_intvl_s)},
          {"theta_amp_factor", set(c.theta_amp_factor)},
          {"delta_align_s", set(c.delta_align_s)},
          {"lowpass_cutoff_hz", set(c.lowpass_cutoff_hz)},
          {"envelope_smooth_hz", set(c.envelope_smooth_hz)},
          {"pipeline_rate_hz", set(c.pipeline_rate_hz)}};
}

void apply_config(const fs::path& path, Settings& s) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open config file '" + path.string() + "'");
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw UsageError("config '" + path.string() + "': " + e.what());
  }
  if (!doc.is_object()) throw UsageError("config must be a JSON object");

  std::map<std::string, std::map<std::string, Setter>> sections;
  sections["step_counter"] = peak_setters(s.steps);
  sections["gesture"] = peak_setters(s.gesture.peaks);
  sections["gesture"]["before_s"] = set(s.gesture.before_s);
  sections["gesture"]["after_s"] = set(s.gesture.after_s);
  sections["activity"] = {{"window_s", set(s.window_s)}, {"overlap", set(s.overlap)}};
  sections["features"] = {{"stft_window", set(s.features.stft_window)},
                          {"stft_hop", set(s.features.stft_hop)}};
  sections["classifier"] = {
      {"model",
       [&s](const nlohmann::json& v, const std::string& where) {
         try {
           s.train.kind = model_kind_from_string(config_value<std::string>(v, where));
         } catch (const Error& e) {
           throw UsageError(std::string("config: ") + e.what());
         }
       }},
      {"k", set(s.train.k)},
      {"max_epochs", set(s.train.max_epochs)},
      {"grad_tol", set(s.train.grad_tol)},
      {"svm_lambda", set(s.train.svm_lambda)}};
  sections["fit_test"] = {{"min_low_ratio", set(s.fit.min_low_ratio)},
                          {"max_high_ratio", set(s.fit.max_high_ratio)},
                          {"tone_s", set(s.tone_s)}};
  sections["music"] = {{"gain", set(s.music.gain)},
                       {"lowpass_cutoff_hz", set(s.music.lowpass_cutoff_hz)},
                       {"split_hz", set(s.music.split_hz)},
                       {"stft_window", set(s.music.stft_window)},
                       {"stft_hop", set(s.music.stft_hop)}};

  for (const auto& [name, body] : doc.items()) {
    auto sec = sections.find(name);
    if (sec == sections.end()) throw UsageError("config: unknown section '" + name + "'");
    if (!body.is_object()) throw UsageError("config: section '" + name + "' must be an object");
    for (const auto& [key, value] : body.items()) {
      const std::string where = name + "." + key;
      auto it = sec->second.find(key);
      if (it == sec->second.end()) throw UsageError("config: unknown key '" + where + "'");
      it->second(value, where);
    }
  }
}

// Peak/front-end flags shared by several subcommands.
struct PeakFlags {
  std::optional<double> theta_intvl, theta_amp, delta, cutoff, smooth;

  void add(CLI::App* app) {
    app->add_option("--theta-intvl", theta_intvl, "Minimum peak interval (s)");
    app->add_option("--theta-amp", theta_amp, "Amplitude threshold factor");
    app->add_option("--delta", delta, "Maximum upper/lower alignment lag (s)");
    app->add_option("--cutoff", cutoff, "Front-end lowpass cutoff (Hz)");
    app->add_option("--smooth", smooth, "Envelope smoothing cutoff (Hz)");
  }
  void apply(StepCounterConfig& c) const {
    if (theta_intvl) c.theta_intvl_s = *theta_intvl;
    if (theta_amp) c.theta_amp_factor = *theta_amp;
    if (delta) c.delta_align_s = *delta;
    if (cutoff) c.lowpass_cutoff_hz = *cutoff;
    if (smooth) c.envelope_smooth_hz = *smooth;
  }
};

struct ClassifierFlags {
  std::optional<std::string> model;
  std::optional<int> k, max_epochs;
  std::optional<double> svm_lambda;

  void add(CLI::App* app) {
    app->add_option("--model", model, "logreg|lr, linear_svm|svm or knn");
    app->add_option("--k", k, "Neighbours for knn");
    app->add_option("--max-epochs", max_epochs, "Gradient-descent epoch limit");
    app->add_option("--svm-lambda", svm_lambda, "L2 penalty for linear_svm");
  }
  void apply(TrainOptions& o) const {
    if (model) {
      try {
        o.kind = model_kind_from_string(*model);
      } catch (const Error&) {
        throw UsageError("unknown model '" + *model + "'");
      }
    }
    if (k) o.k = *k;
    if (max_epochs) o.max_epochs = *max_epochs;
    if (svm_lambda) o.svm_lambda = *svm_lambda;
  }
};

// ---- helpers ----------------------------------------------------------------

void emit(std::ostream& out, const Json& j) { out << j.dump() << '\n'; }

std::vector<AudioTrace> load_channels(const std::string& path) {
  return wav_channels(read_wav(path));
}

std::string stem_of(const std::string& path) { return fs::path(path).stem().string(); }

Json metrics_json(const Metrics& m, const std::vector<std::string>& labels) {
  Json per = Json::array();
  for (std::size_t c = 0; c < labels.size(); ++c)
    per.push_back({{"label", labels[c]},
                   {"precision", m.precision[c]},
                   {"recall", m.recall[c]}});
  return Json{{"n", m.n},
              {"accuracy", m.accuracy},
              {"macro_precision", m.macro_precision},
              {"macro_recall", m.macro_recall},
              {"zero_division", m.zero_division},
              {"classes", per},
              {"confusion", m.confusion}};
}

enum class Mode { Activity, Gesture };

Mode parse_mode(const std::string& s) {
  if (s == "activity") return Mode::Activity;
  if (s == "gesture") return Mode::Gesture;
  throw UsageError("unknown mode '" + s + "' (expected activity or gesture)");
}

std::vector<Segment> segments_of(const AudioTrace& trace, Mode mode, const Settings& s) {
  if (mode == Mode::Gesture) return extract_gestures(trace, s.gesture);
  const auto conditioned =
      condition(trace, s.steps.lowpass_cutoff_hz, s.steps.pipeline_rate_hz);
  return sliding_windows(conditioned, s.window_s, s.overlap);
}

// Paired left/right segments cut at shared positions.
std::vector<std::pair<Segment, Segment>> paired_segments(const AudioTrace& left,
                                                         const AudioTrace& right,
                                                         Mode mode, const Settings& s) {
  std::vector<Segment> l, r;
  if (mode == Mode::Activity) {
    l = segments_of(left, mode, s);
    r = segments_of(right, mode, s);
  } else {
    std::vector<double> mix(left.size());
    for (std::size_t i = 0; i < mix.size(); ++i) mix[i] = 0.5 * (left[i] + right[i]);
    const auto peaks = gesture_peaks(AudioTrace(mix, left.sample_rate_hz()), s.gesture);
    const auto& pc = s.gesture.peaks;
    l = gesture_windows(condition(left, pc.lowpass_cutoff_hz, pc.pipeline_rate_hz), peaks,
                        s.gesture);
    r = gesture_windows(condition(right, pc.lowpass_cutoff_hz, pc.pipeline_rate_hz), peaks,
                        s.gesture);
  }
  std::vector<std::pair<Segment, Segment>> out;
  for (std::size_t i = 0; i < l.size() && i < r.size(); ++i)
    out.emplace_back(std::move(l[i]), std::move(r[i]));
  return out;
}

std::vector<double> split_doubles(const std::string& text, const std::string& what) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw UsageError("invalid number '" + item + "' in " + what);
    }
  }
  return out;
}

struct LabeledInput {
  std::string path, label, subject;
};

std::vector<LabeledInput> read_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(Errc::Io, "cannot open manifest '" + path + "'");
  std::vector<LabeledInput> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto f = csv_split(line);
    if (line_no == 1 && !f.empty() && f[0] == "path") continue;
    if (f.size() != 3)
      fail(Errc::Parse, "manifest '" + path + "' line " + std::to_string(line_no) +
                            ": expected path,label,subject");
    fs::path p(f[0]);
    if (p.is_relative()) p = fs::path(path).parent_path() / p;
    out.push_back({p.string(), f[1], f[2]});
  }
  return out;
}

double elapsed_ms(std::chrono::steady_clock::time_point since) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - since)
      .count();
}

// ---- subcommands ------------------------------------------------------------

struct Globals {
  int rate = 48000;
  std::uint64_t seed = 0;
  std::string config;
  bool verbose = false;
};

struct Context {
  Globals g;
  Settings s;
  std::ostream& out;
  std::ostream& err;
};

struct FitArgs {
  std::string base, test, b300, b1500, t300, t1500, generate;
  std::optional<double> min_low, max_high, tone_s;
};

void cmd_fit_test(Context& ctx, const FitArgs& a) {
  if (!a.generate.empty()) {
    const auto probe = generate_probe_sequence(ctx.s.tone_s, ctx.g.rate);
    write_wav(probe, a.generate);
    emit(ctx.out, Json{{"probe", a.generate},
                       {"rate", ctx.g.rate},
                       {"tone_s", ctx.s.tone_s},
                       {"samples", probe.size()}});
    return;
  }
  const bool pair_mode = !a.base.empty() || !a.test.empty();
  const bool four_mode = !a.b300.empty() || !a.b1500.empty() || !a.t300.empty() ||
                         !a.t1500.empty();
  if (pair_mode == four_mode)
    throw UsageError(
        "fit-test needs either --base and --test, or all of --base300 --base1500 "
        "--test300 --test1500 (or --generate)");

  auto report = [&](Channel ch, double b3, double b15, double t3, double t15) {
    const auto r = evaluate_fit(b3, b15, t3, t15, ctx.s.fit);
    emit(ctx.out, Json{{"channel", std::string(to_string(ch))},
                       {"result", r.passed ? "PASS" : "FAIL"},
                       {"ratio_low", r.ratio_low},
                       {"ratio_high", r.ratio_high},
                       {"a300_base", r.a300_base},
                       {"a1500_base", r.a1500_base},
                       {"a300_test", r.a300_test},
                       {"a1500_test", r.a1500_test}});
    ctx.err << to_string(ch) << ": " << (r.passed ? "PASS" : "FAIL") << " (300 Hz x"
            << r.ratio_low << ", 1500 Hz x" << r.ratio_high << ")\n";
  };

  if (pair_mode) {
    if (a.base.empty() || a.test.empty()) throw UsageError("fit-test needs both --base and --test");
    const auto base = load_channels(a.base);
    const auto test = load_channels(a.test);
    if (base.size() != test.size())
      fail(Errc::InvalidArgument, "base and test recordings have different channel counts");
    for (std::size_t c = 0; c < base.size(); ++c) {
      const auto b = measure_probe_sequence(base[c], ctx.s.tone_s);
      const auto t = measure_probe_sequence(test[c], ctx.s.tone_s);
      report(base[c].channel(), b.a300, b.a1500, t.a300, t.a1500);
    }
    return;
  }
  if (a.b300.empty() || a.b1500.empty() || a.t300.empty() || a.t1500.empty())
    throw UsageError("fit-test four-file mode needs --base300 --base1500 --test300 --test1500");
  const auto b3 = load_channels(a.b300), b15 = load_channels(a.b1500);
  const auto t3 = load_channels(a.t300), t15 = load_channels(a.t1500);
  const std::size_t n = b3.size();
  if (b15.size() != n || t3.size() != n || t15.size() != n)
    fail(Errc::InvalidArgument, "fit-test recordings have different channel counts");
  for (std::size_t c = 0; c < n; ++c)
    report(b3[c].channel(), tone_amplitude(b3[c], kProbeLowHz),
           tone_amplitude(b15[c], kProbeHighHz), tone_amplitude(t3[c], kProbeLowHz),
           tone_amplitude(t15[c], kProbeHighHz));
}

struct CountArgs {
  std::vector<std::string> inputs;
  bool times = false;
};

void cmd_count_steps(Context& ctx, const CountArgs& a) {
  for (const auto& path : a.inputs) {
    for (const auto& trace : load_channels(path)) {
      const auto r = count_steps(trace, ctx.s.steps);
      Json j{{"channel", std::string(to_string(trace.channel()))},
             {"steps", r.count},
             {"file", path},
             {"duration_s", trace.duration_s()},
             {"low_confidence", r.low_confidence},
             {"rejected_peaks", r.rejected_peaks.size()}};
      if (a.times) {
        Json t = Json::array();
        for (const auto& [u, l] : r.matched_pairs) t.push_back(u.x);
        j["step_times_s"] = t;
      }
      emit(ctx.out, j);
      if (r.low_confidence)
        ctx.err << "warning: " << path << " (" << to_string(trace.channel())
                << ") is shorter than 2 s; count is low-confidence\n";
    }
  }
}

struct SegmentArgs {
  std::vector<std::string> inputs;
  std::string mode = "gesture";
  std::string out_dir;
  std::optional<double> zcr_threshold;
};

void cmd_segment(Context& ctx, const SegmentArgs& a) {
  const Mode mode = parse_mode(a.mode);
  if (!a.out_dir.empty()) fs::create_directories(a.out_dir);
  for (const auto& path : a.inputs) {
    for (const auto& trace : load_channels(path)) {
      const auto segs = segments_of(trace, mode, ctx.s);
      for (std::size_t i = 0; i < segs.size(); ++i) {
        const auto& seg = segs[i];
        Json j{{"file", path},
               {"channel", std::string(to_string(seg.channel))},
               {"index", i},
               {"kind", mode == Mode::Gesture ? "gesture" : "activity"},
               {"start_s", seg.start_s},
               {"duration_s", seg.duration_s()},
               {"padded", seg.padded}};
        if (a.zcr_threshold) {
          const double zcr = zero_crossing_rate(seg);
          j["zcr"] = zcr;
          j["motion"] = std::string(
              to_string(classify_step_vs_tap(seg, ZcrThreshold{*a.zcr_threshold, true})));
        }
        if (!a.out_dir.empty()) {
          char name[64];
          std::snprintf(name, sizeof name, "_%s_%03zu.wav",
                        std::string(to_string(seg.channel)).c_str(), i);
          const auto dest = fs::path(a.out_dir) / (stem_of(path) + name);
          const auto rep =
              write_wav(AudioTrace(seg.samples, seg.sample_rate_hz, seg.channel), dest);
          j["path"] = dest.string();
          if (rep.clipped) j["clipped_samples"] = rep.clipped_samples;
        }
        emit(ctx.out, j);
      }
    }
  }
}

struct FeatureArgs {
  std::vector<std::string> inputs;
  std::string manifest;
  std::string mode = "activity";
  std::string label;
  std::string subject;
  std::string out;
  bool fuse = false;
};

void cmd_features(Context& ctx, const FeatureArgs& a) {
  const Mode mode = parse_mode(a.mode);
  std::vector<LabeledInput> inputs;
  for (const auto& p : a.inputs) inputs.push_back({p, a.label, a.subject});
  if (!a.manifest.empty()) {
    auto more = read_manifest(a.manifest);
    inputs.insert(inputs.end(), more.begin(), more.end());
  }
  if (inputs.empty()) throw UsageError("features needs input files or --manifest");

  std::vector<FeatureRow> rows;
  for (const auto& in : inputs) {
    const auto channels = load_channels(in.path);
    if (a.fuse) {
      if (channels.size() != 2)
        fail(Errc::InvalidArgument, "--fuse needs a stereo recording: " + in.path);
      for (auto& [l, r] : paired_segments(channels[0], channels[1], mode, ctx.s)) {
        l.channel = Channel::Left;
        r.channel = Channel::Right;
        const auto f =
            fuse(extract_features(l, ctx.s.features), extract_features(r, ctx.s.features));
        rows.push_back({{f.values.begin(), f.values.end()}, in.subject, in.label});
      }
    } else {
      for (const auto& trace : channels)
        for (const auto& seg : segments_of(trace, mode, ctx.s)) {
          const auto f = extract_features(seg, ctx.s.features);
          rows.push_back({{f.values.begin(), f.values.end()}, in.subject, in.label});
        }
    }
  }
  const auto columns = a.fuse ? fused_column_names() : feature_column_names();
  write_feature_csv(fs::path(a.out), columns, rows);
  emit(ctx.out, Json{{"out", a.out}, {"rows", rows.size()}, {"columns", columns.size()}});
}

struct TrainArgs {
  std::string input;
  std::string out;
};

void cmd_train(Context& ctx, const TrainArgs& a) {
  const auto data = read_feature_csv(fs::path(a.input));
  const auto res = fit(data, ctx.s.train);
  save_model(res.model, fs::path(a.out));
  const auto m = compute_metrics(predict_all(res.model, data), data.n_classes());
  emit(ctx.out, Json{{"model", std::string(to_string(res.model.kind()))},
                     {"out", a.out},
                     {"rows", data.rows.size()},
                     {"dim", data.dim},
                     {"classes", data.label_names},
                     {"epochs", res.stats.epochs},
                     {"final_grad_norm", res.stats.final_grad_norm},
                     {"train_accuracy", m.accuracy}});
}

struct ClassifyArgs {
  std::string model;
  std::vector<std::string> inputs;
  std::string mode = "gesture";
  bool latency = false;
};

void cmd_classify(Context& ctx, const ClassifyArgs& a) {
  const auto model = load_model(fs::path(a.model));
  const bool fused = model.dim() == kFusedFeatureDim;
  if (!fused && model.dim() != kFeatureDim && !a.inputs.empty() &&
      fs::path(a.inputs.front()).extension() != ".csv")
    fail(Errc::InvalidArgument, "model dimension " + std::to_string(model.dim()) +
                                    " does not match audio features (187 or 374)");
  const Mode mode = parse_mode(a.mode);
  const auto& names = model.label_names();

  for (const auto& path : a.inputs) {
    if (fs::path(path).extension() == ".csv") {
      const auto data = read_feature_csv(fs::path(path));
      if (data.dim != model.dim())
        fail(Errc::InvalidArgument, "feature dimension " + std::to_string(data.dim) +
                                        " does not match the model's " +
                                        std::to_string(model.dim()));
      for (std::size_t i = 0; i < data.rows.size(); ++i) {
        const auto& row = data.rows[i];
        emit(ctx.out, Json{{"file", path},
                           {"row", i},
                           {"predicted",
                            names[static_cast<std::size_t>(model.predict(row.features))]},
                           {"label", data.label_names[static_cast<std::size_t>(row.label)]},
                           {"subject", row.subject}});
      }
      continue;
    }

    const auto t0 = std::chrono::steady_clock::now();
    const auto channels = load_channels(path);
    std::vector<std::vector<double>> feats;
    std::vector<Json> meta;
    double filter_ms = 0.0, feature_ms = 0.0, infer_ms = 0.0;
    auto t = std::chrono::steady_clock::now();
    if (fused) {
      if (channels.size() != 2)
        fail(Errc::InvalidArgument, "the model expects fused stereo features: " + path);
      auto pairs = paired_segments(channels[0], channels[1], mode, ctx.s);
      filter_ms += elapsed_ms(t);
      t = std::chrono::steady_clock::now();
      for (auto& [l, r] : pairs) {
        l.channel = Channel::Left;
        r.channel = Channel::Right;
        const auto f =
            fuse(extract_features(l, ctx.s.features), extract_features(r, ctx.s.features));
        feats.emplace_back(f.values.begin(), f.values.end());
        meta.push_back(Json{{"file", path}, {"channel", "Fused"}, {"start_s", l.start_s}});
      }
      feature_ms += elapsed_ms(t);
    } else {
      for (const auto& trace : channels) {
        t = std::chrono::steady_clock::now();
        const auto segs = segments_of(trace, mode, ctx.s);
        filter_ms += elapsed_ms(t);
        t = std::chrono::steady_clock::now();
        for (const auto& seg : segs) {
          const auto f = extract_features(seg, ctx.s.features);
          feats.emplace_back(f.values.begin(), f.values.end());
          meta.push_back(Json{{"file", path},
                              {"channel", std::string(to_string(seg.channel))},
                              {"start_s", seg.start_s}});
        }
        feature_ms += elapsed_ms(t);
      }
    }
    t = std::chrono::steady_clock::now();
    std::vector<int> pred;
    for (const auto& f : feats) pred.push_back(model.predict(f));
    infer_ms += elapsed_ms(t);
    const double total_ms = elapsed_ms(t0);

    for (std::size_t i = 0; i < pred.size(); ++i) {
      meta[i]["predicted"] = names[static_cast<std::size_t>(pred[i])];
      emit(ctx.out, meta[i]);
    }
    if (pred.empty()) ctx.err << "warning: no segments found in " << path << "\n";
    if (a.latency) {
      const double pipeline = filter_ms + feature_ms + infer_ms;
      emit(ctx.out, Json{{"file", path},
                         {"segments", pred.size()},
                         {"latency_ms",
                          {{"filter", filter_ms},
                           {"feature", feature_ms},
                           {"inference", infer_ms},
                           {"pipeline", pipeline},
                           {"total", total_ms}}},
                         {"budget_ms", kLatencyBudgetMs},
                         {"within_budget", pipeline < kLatencyBudgetMs}});
      if (pipeline >= kLatencyBudgetMs)
        ctx.err << "warning: " << path << " took " << pipeline
                << " ms for filter+feature+inference (budget " << kLatencyBudgetMs << " ms)\n";
    }
  }
}

struct EvaluateArgs {
  std::string input;
  std::string protocol = "cv";
  int folds = 5;
  double test_fraction = 0.2;
  std::string personal_n = "0,5,10,60";
  std::string subject;
};

void cmd_evaluate(Context& ctx, const EvaluateArgs& a) {
  const auto data = read_feature_csv(fs::path(a.input));
  const auto& opts = ctx.s.train;
  const std::string model = std::string(to_string(opts.kind));
  const auto& labels = data.label_names;

  if (a.protocol == "cv") {
    const auto m = kfold_cv(data, a.folds, opts, ctx.g.seed);
    Json j{{"protocol", "cv"}, {"model", model}, {"folds", a.folds}};
    j.update(metrics_json(m, labels));
    emit(ctx.out, j);
  } else if (a.protocol == "holdout") {
    const auto [train_idx, test_idx] = holdout_split(data, a.test_fraction, ctx.g.seed);
    const auto train_set = data.subset(train_idx);
    const auto test_set = data.subset(test_idx);
    const auto cv = kfold_cv(train_set, a.folds, opts, ctx.g.seed);
    Json jc{{"protocol", "cv"}, {"model", model}, {"folds", a.folds}, {"split", "train"}};
    jc.update(metrics_json(cv, labels));
    emit(ctx.out, jc);
    const auto m = compute_metrics(predict_all(train(train_set, opts), test_set),
                                   data.n_classes());
    Json jh{{"protocol", "holdout"}, {"model", model}, {"test_fraction", a.test_fraction}};
    jh.update(metrics_json(m, labels));
    emit(ctx.out, jh);
  } else if (a.protocol == "loo") {
    for (const auto& sm : leave_one_subject_out(data, opts)) {
      Json j{{"protocol", "loo"}, {"model", model}, {"subject", sm.subject}};
      j.update(metrics_json(sm.metrics, labels));
      emit(ctx.out, j);
    }
  } else if (a.protocol == "personalize") {
    std::vector<int> ns;
    for (double v : split_doubles(a.personal_n, "--personal-n")) {
      if (v < 0 || v != std::floor(v))
        throw UsageError("--personal-n values must be integers >= 0");
      ns.push_back(static_cast<int>(v));
    }
    if (ns.empty()) throw UsageError("--personal-n is empty");
    const int reserve = *std::max_element(ns.begin(), ns.end());
    std::vector<std::string> subjects =
        a.subject.empty() ? data.subjects() : std::vector<std::string>{a.subject};
    if (data.subjects().size() < 2)
      fail(Errc::InvalidDataset, "personalization needs at least two subjects");
    for (const auto& subj : subjects) {
      const auto base = data.with_subject(subj, false);
      const auto own = data.with_subject(subj, true);
      if (own.rows.empty()) fail(Errc::InvalidDataset, "no rows for subject '" + subj + "'");
      for (int n : ns) {
        const auto split = personalization_split(own, n, reserve, ctx.g.seed);
        const auto m = compute_metrics(
            predict_all(personalize(base, split.personal, opts), split.test), data.n_classes());
        Json j{{"protocol", "personalize"}, {"model", model}, {"subject", subj}, {"personal_n", n}};
        j.update(metrics_json(m, labels));
        emit(ctx.out, j);
      }
    }
  } else {
    throw UsageError("unknown protocol '" + a.protocol +
                     "' (expected holdout, cv, loo or personalize)");
  }
}

struct MusicArgs {
  std::string activity, music, bands_csv;
  std::optional<double> gain;
};

void cmd_music_impact(Context& ctx, const MusicArgs& a) {
  const auto act = load_channels(a.activity);
  const auto mus = load_channels(a.music);
  std::ofstream bands;
  if (!a.bands_csv.empty()) {
    bands.open(a.bands_csv);
    if (!bands) fail(Errc::Io, "cannot open '" + a.bands_csv + "' for writing");
    bands << "signal,channel,low_fraction,high_fraction\n";
  }
  auto band_row = [&](const std::string& what, const AudioTrace& t) {
    if (!bands.is_open()) return;
    try {
      const auto b = band_energy_ratio(t, ctx.s.music.split_hz);
      char buf[128];
      std::snprintf(buf, sizeof buf, "%.17g,%.17g", b.low_fraction, b.high_fraction);
      bands << what << ',' << to_string(t.channel()) << ',' << buf << '\n';
    } catch (const Error& e) {
      if (e.code() != Errc::UndefinedRatio) throw;
      bands << what << ',' << to_string(t.channel()) << ",,\n";
    }
  };
  for (std::size_t c = 0; c < act.size(); ++c) {
    const auto& m = mus.size() == act.size() ? mus[c] : mus.front();
    const auto rep = music_impact(act[c], m, ctx.s.music);
    emit(ctx.out, Json{{"channel", std::string(to_string(act[c].channel()))},
                       {"ssim", rep.ssim},
                       {"pearson", rep.pearson},
                       {"low_band_fraction", rep.low_band_fraction},
                       {"rescaled", rep.rescaled}});
    band_row("activity", act[c]);
    band_row("music", m.with_channel(act[c].channel()));
    band_row("mixture", superimpose(act[c], m, ctx.s.music.gain).trace);
  }
  if (bands.is_open() && !bands) fail(Errc::Io, "failed writing '" + a.bands_csv + "'");
}

struct SynthArgs {
  std::string kind;
  std::string out;
  std::string truth;
  int steps = 20;
  double cadence = 2.0;
  double snr = kNoNoise;
  double amplitude = 0.5;
  double drift = 0.0;
  double duration = 0.0;
  int strike_spikes = 6;
  std::string times = "1.0,2.0,3.0";
  int spikes = 1;
  std::string freqs = "220,440,880";
  std::string gains;
  int classes = 5;
  int dim = 8;
  double margin = 5.0;
  double sigma = 1.0;
  int per_class = 100;
  int subjects = 1;
  std::string shift;
  bool stereo = false;
};

void write_truth(const std::string& path, const std::vector<double>& times,
                 const std::string& kind) {
  std::vector<GroundTruthEvent> ev;
  for (double t : times) ev.push_back({t, kind});
  write_ground_truth(fs::path(path), ev);
}

void cmd_synth(Context& ctx, const SynthArgs& a) {
  const auto truth_path = [&] {
    if (!a.truth.empty()) return a.truth;
    return (fs::path(a.out).parent_path() / (stem_of(a.out) + ".truth.jsonl")).string();
  };
  auto write_audio = [&](const AudioTrace& t) {
    const auto rep = a.stereo ? write_wav(StereoTrace(t.with_channel(Channel::Left),
                                                      t.with_channel(Channel::Right)),
                                          a.out)
                              : write_wav(t, a.out);
    if (rep.clipped)
      ctx.err << "warning: " << rep.clipped_samples << " samples clipped in " << a.out << "\n";
  };

  if (a.kind == "walk") {
    WalkSpec w;
    w.n_steps = a.steps;
    w.cadence_hz = a.cadence;
    w.snr_db = a.snr;
    w.amplitude = a.amplitude;
    w.baseline_drift = a.drift;
    w.duration_s = a.duration;
    w.strike_spikes = a.strike_spikes;
    w.rate_hz = ctx.g.rate;
    w.seed = ctx.g.seed;
    const auto s = synth_walk(w);
    write_audio(s.trace);
    const auto tp = truth_path();
    write_truth(tp, s.event_times_s, "step");
    emit(ctx.out, Json{{"kind", "walk"}, {"out", a.out}, {"truth", tp},
                       {"events", s.event_times_s.size()}, {"rate", ctx.g.rate},
                       {"samples", s.trace.size()}, {"seed", ctx.g.seed}});
  } else if (a.kind == "taps") {
    TapSpec t;
    t.times_s = split_doubles(a.times, "--times");
    t.spike_count = a.spikes;
    t.snr_db = a.snr;
    t.amplitude = a.amplitude;
    t.baseline_drift = a.drift;
    if (a.duration > 0.0) t.duration_s = a.duration;
    t.rate_hz = ctx.g.rate;
    t.seed = ctx.g.seed;
    const auto s = synth_taps(t);
    write_audio(s.trace);
    const auto tp = truth_path();
    write_truth(tp, s.event_times_s, "tap");
    emit(ctx.out, Json{{"kind", "taps"}, {"out", a.out}, {"truth", tp},
                       {"events", s.event_times_s.size()}, {"rate", ctx.g.rate},
                       {"samples", s.trace.size()}, {"seed", ctx.g.seed}});
  } else if (a.kind == "music") {
    MusicSpec m;
    m.freqs_hz = split_doubles(a.freqs, "--freqs");
    m.gains = split_doubles(a.gains, "--gains");
    if (a.duration > 0.0) m.duration_s = a.duration;
    m.rate_hz = ctx.g.rate;
    m.seed = ctx.g.seed;
    const auto t = synth_music(m);
    write_audio(t);
    emit(ctx.out, Json{{"kind", "music"}, {"out", a.out}, {"rate", ctx.g.rate},
                       {"samples", t.size()}, {"seed", ctx.g.seed}});
  } else if (a.kind == "blobs") {
    BlobSpec b;
    b.n_classes = a.classes;
    b.dim = a.dim;
    b.margin = a.margin;
    b.sigma = a.sigma;
    b.per_class = a.per_class;
    b.n_subjects = a.subjects;
    b.subject_shift = split_doubles(a.shift, "--shift");
    b.seed = ctx.g.seed;
    const auto d = synth_blobs(b);
    std::vector<std::string> cols;
    for (std::size_t j = 0; j < d.dim; ++j) cols.push_back("x" + std::to_string(j));
    std::vector<FeatureRow> rows;
    for (const auto& r : d.rows)
      rows.push_back({r.features, r.subject, d.label_names[static_cast<std::size_t>(r.label)]});
    write_feature_csv(fs::path(a.out), cols, rows);
    emit(ctx.out, Json{{"kind", "blobs"}, {"out", a.out}, {"rows", rows.size()},
                       {"dim", d.dim}, {"classes", d.n_classes()}, {"seed", ctx.g.seed}});
  } else {
    throw UsageError("unknown synth kind '" + a.kind + "' (expected walk, taps, music or blobs)");
  }
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"In-ear acoustic sensing toolkit: step counting, gesture and activity "
               "recognition, fit testing."};
  app.name("oesense");
  app.require_subcommand(1);
  app.fallthrough();

  Globals g;
  app.add_option("--rate", g.rate, "Sample rate for generated audio (Hz)")
      ->check(CLI::PositiveNumber);
  app.add_option("--seed", g.seed, "Seed for synthesis and data splits");
  app.add_option("--config", g.config, "JSON file overriding default parameters");
  app.add_flag("--verbose,-v", g.verbose, "Print the effective configuration to stderr");

  FitArgs fit_args;
  auto* fit_cmd = app.add_subcommand("fit-test", "Check ear-canal sealing from probe recordings");
  fit_cmd->add_option("--base", fit_args.base, "Unworn probe-sequence recording");
  fit_cmd->add_option("--test", fit_args.test, "Worn probe-sequence recording");
  fit_cmd->add_option("--base300", fit_args.b300, "Unworn 300 Hz recording");
  fit_cmd->add_option("--base1500", fit_args.b1500, "Unworn 1500 Hz recording");
  fit_cmd->add_option("--test300", fit_args.t300, "Worn 300 Hz recording");
  fit_cmd->add_option("--test1500", fit_args.t1500, "Worn 1500 Hz recording");
  fit_cmd->add_option("--generate", fit_args.generate, "Write the probe sequence to this WAV");
  fit_cmd->add_option("--min-low-ratio", fit_args.min_low, "Required 300 Hz boost");
  fit_cmd->add_option("--max-high-ratio", fit_args.max_high, "Allowed 1500 Hz ratio");
  fit_cmd->add_option("--tone-s", fit_args.tone_s, "Probe tone length (s)");

  CountArgs count_args;
  PeakFlags count_peaks;
  auto* count_cmd = app.add_subcommand("count-steps", "Count steps per channel");
  count_cmd->add_option("inputs", count_args.inputs, "WAV files")->required();
  count_cmd->add_flag("--times", count_args.times, "Include step times");
  count_peaks.add(count_cmd);

  SegmentArgs seg_args;
  PeakFlags seg_peaks;
  auto* seg_cmd = app.add_subcommand("segment", "Cut activity windows or gesture segments");
  seg_cmd->add_option("inputs", seg_args.inputs, "WAV files")->required();
  seg_cmd->add_option("--mode", seg_args.mode, "activity or gesture");
  seg_cmd->add_option("--out-dir", seg_args.out_dir, "Write each segment as a 1 kHz WAV");
  seg_cmd->add_option("--zcr-threshold", seg_args.zcr_threshold,
                      "Label segments step (above) or tap (below) by zero-crossing rate");
  seg_peaks.add(seg_cmd);
  std::optional<double> window_s, overlap;
  seg_cmd->add_option("--window", window_s, "Activity window length (s)");
  seg_cmd->add_option("--overlap", overlap, "Activity window overlap in [0, 1)");

  FeatureArgs feat_args;
  PeakFlags feat_peaks;
  auto* feat_cmd = app.add_subcommand("features", "Extract 187-value feature rows to CSV");
  feat_cmd->add_option("inputs", feat_args.inputs, "WAV files");
  feat_cmd->add_option("--manifest", feat_args.manifest, "CSV of path,label,subject");
  feat_cmd->add_option("--mode", feat_args.mode, "activity or gesture");
  feat_cmd->add_option("--label", feat_args.label, "Label for positional inputs");
  feat_cmd->add_option("--subject", feat_args.subject, "Subject for positional inputs");
  feat_cmd->add_option("--out,-o", feat_args.out, "Output CSV")->required();
  feat_cmd->add_flag("--fuse", feat_args.fuse, "Concatenate left and right (374 values)");
  feat_cmd->add_option("--window", window_s, "Activity window length (s)");
  feat_cmd->add_option("--overlap", overlap, "Activity window overlap in [0, 1)");
  feat_peaks.add(feat_cmd);
  std::optional<std::size_t> stft_window, stft_hop;
  feat_cmd->add_option("--stft-window", stft_window, "Feature STFT window (samples)");
  feat_cmd->add_option("--stft-hop", stft_hop, "Feature STFT hop (samples)");

  TrainArgs train_args;
  ClassifierFlags train_flags;
  auto* train_cmd = app.add_subcommand("train", "Train a classifier on a feature CSV");
  train_cmd->add_option("input", train_args.input, "Feature CSV")->required();
  train_cmd->add_option("--out,-o", train_args.out, "Model file")->required();
  train_flags.add(train_cmd);

  ClassifyArgs cls_args;
  PeakFlags cls_peaks;
  auto* cls_cmd = app.add_subcommand("classify", "Predict labels for audio or feature rows");
  cls_cmd->add_option("--model", cls_args.model, "Model file")->required();
  cls_cmd->add_option("inputs", cls_args.inputs, "WAV files or feature CSVs")->required();
  cls_cmd->add_option("--mode", cls_args.mode, "activity or gesture");
  cls_cmd->add_flag("--latency", cls_args.latency, "Report per-stage wall time");
  cls_cmd->add_option("--window", window_s, "Activity window length (s)");
  cls_cmd->add_option("--overlap", overlap, "Activity window overlap in [0, 1)");
  cls_peaks.add(cls_cmd);
  cls_cmd->add_option("--stft-window", stft_window, "Feature STFT window (samples)");
  cls_cmd->add_option("--stft-hop", stft_hop, "Feature STFT hop (samples)");

  EvaluateArgs eval_args;
  ClassifierFlags eval_flags;
  auto* eval_cmd = app.add_subcommand("evaluate", "Run an evaluation protocol on a feature CSV");
  eval_cmd->add_option("input", eval_args.input, "Feature CSV")->required();
  eval_cmd->add_option("--protocol", eval_args.protocol, "holdout, cv, loo or personalize");
  eval_cmd->add_option("--folds", eval_args.folds, "Cross-validation folds")
      ->check(CLI::Range(2, 1000));
  eval_cmd->add_option("--test-fraction", eval_args.test_fraction, "Holdout fraction")
      ->check(CLI::Range(0.0, 1.0));
  eval_cmd->add_option("--personal-n", eval_args.personal_n,
                       "Comma-separated personal rows per class");
  eval_cmd->add_option("--subject", eval_args.subject, "Only personalize this subject");
  eval_flags.add(eval_cmd);

  MusicArgs music_args;
  auto* music_cmd = app.add_subcommand("music-impact", "Measure how much music survives filtering");
  music_cmd->add_option("activity", music_args.activity, "Activity WAV")->required();
  music_cmd->add_option("music", music_args.music, "Music WAV")->required();
  music_cmd->add_option("--gain", music_args.gain, "Music gain");
  music_cmd->add_option("--bands-csv", music_args.bands_csv, "Write band energies to CSV");

  SynthArgs syn;
  auto* syn_cmd = app.add_subcommand("synth", "Generate synthetic fixtures");
  syn_cmd->add_option("kind", syn.kind, "walk, taps, music or blobs")->required();
  syn_cmd->add_option("--out,-o", syn.out, "Output WAV (CSV for blobs)")->required();
  syn_cmd->add_option("--truth", syn.truth, "Ground-truth JSON-lines path");
  syn_cmd->add_option("--steps", syn.steps, "Number of steps");
  syn_cmd->add_option("--cadence", syn.cadence, "Steps per second");
  syn_cmd->add_option("--snr", syn.snr, "Signal-to-noise ratio (dB)");
  syn_cmd->add_option("--amplitude", syn.amplitude, "Event amplitude");
  syn_cmd->add_option("--drift", syn.drift, "Baseline drift amplitude");
  syn_cmd->add_option("--duration", syn.duration, "Trace length (s)");
  syn_cmd->add_option("--strike-spikes", syn.strike_spikes, "Spikes per step");
  syn_cmd->add_option("--times", syn.times, "Comma-separated tap times (s)");
  syn_cmd->add_option("--spikes", syn.spikes, "Spikes per tap");
  syn_cmd->add_option("--freqs", syn.freqs, "Comma-separated music tones (Hz)");
  syn_cmd->add_option("--gains", syn.gains, "Comma-separated tone gains");
  syn_cmd->add_option("--classes", syn.classes, "Blob classes");
  syn_cmd->add_option("--dim", syn.dim, "Blob dimension");
  syn_cmd->add_option("--margin", syn.margin, "Blob margin (sigmas)");
  syn_cmd->add_option("--sigma", syn.sigma, "Blob spread");
  syn_cmd->add_option("--per-class", syn.per_class, "Rows per class and subject");
  syn_cmd->add_option("--subjects", syn.subjects, "Number of subjects");
  syn_cmd->add_option("--shift", syn.shift, "Comma-separated per-subject shifts");
  syn_cmd->add_flag("--stereo", syn.stereo, "Write the same signal to both channels");

  std::vector<std::string> argv(args.rbegin(), args.rend());
  try {
    app.parse(argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, err, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  Context ctx{g, Settings{}, out, err};
  try {
    if (!g.config.empty()) apply_config(g.config, ctx.s);
    count_peaks.apply(ctx.s.steps);
    for (const PeakFlags* f : {&seg_peaks, &feat_peaks, &cls_peaks}) f->apply(ctx.s.gesture.peaks);
    if (window_s) ctx.s.window_s = *window_s;
    if (overlap) ctx.s.overlap = *overlap;
    if (stft_window) ctx.s.features.stft_window = *stft_window;
    if (stft_hop) ctx.s.features.stft_hop = *stft_hop;
    train_flags.apply(ctx.s.train);
    eval_flags.apply(ctx.s.train);
    if (fit_args.min_low) ctx.s.fit.min_low_ratio = *fit_args.min_low;
    if (fit_args.max_high) ctx.s.fit.max_high_ratio = *fit_args.max_high;
    if (fit_args.tone_s) ctx.s.tone_s = *fit_args.tone_s;
    if (music_args.gain) ctx.s.music.gain = *music_args.gain;
    if (g.verbose) err << "effective config: " << settings_json(ctx.s).dump() << "\n";

    if (fit_cmd->parsed()) cmd_fit_test(ctx, fit_args);
    else if (count_cmd->parsed()) cmd_count_steps(ctx, count_args);
    else if (seg_cmd->parsed()) cmd_segment(ctx, seg_args);
    else if (feat_cmd->parsed()) cmd_features(ctx, feat_args);
    else if (train_cmd->parsed()) cmd_train(ctx, train_args);
    else if (cls_cmd->parsed()) cmd_classify(ctx, cls_args);
    else if (eval_cmd->parsed()) cmd_evaluate(ctx, eval_args);
    else if (music_cmd->parsed()) cmd_music_impact(ctx, music_args);
    else if (syn_cmd->parsed()) cmd_synth(ctx, syn);
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\n" << app.help();
    return kExitUsage;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitProcessing;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitProcessing;
  }
  out.flush();
  return kExitOk;
}

}  // namespace oesense::cli
