#include <benchmark/benchmark.h>

#include "oesense/classify.hpp"
#include "oesense/envelope.hpp"
#include "oesense/features.hpp"
#include "oesense/filter.hpp"
#include "oesense/music.hpp"
#include "oesense/segmentation.hpp"
#include "oesense/step_counter.hpp"
#include "oesense/synth.hpp"

using namespace oesense;

namespace {

AudioTrace walk_trace(int steps) {
  WalkSpec w;
  w.n_steps = steps;
  w.snr_db = 20.0;
  return synth_walk(w).trace;
}

Segment gesture_segment() {
  TapSpec t;
  t.times_s = {1.0};
  t.duration_s = 2.0;
  return extract_gestures(synth_taps(t).trace).at(0);
}

}  // namespace

static void BM_Condition(benchmark::State& state) {
  const auto trace = walk_trace(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(condition(trace));
  state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(trace.size()));
}
BENCHMARK(BM_Condition)->Arg(10)->Arg(60)->Unit(benchmark::kMillisecond);

static void BM_Envelope(benchmark::State& state) {
  const auto signal = condition(walk_trace(static_cast<int>(state.range(0))));
  for (auto _ : state) benchmark::DoNotOptimize(smooth_envelope(analytic_envelope(signal)));
}
BENCHMARK(BM_Envelope)->Arg(10)->Arg(60)->Unit(benchmark::kMicrosecond);

static void BM_CountSteps(benchmark::State& state) {
  const auto trace = walk_trace(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(count_steps(trace));
}
BENCHMARK(BM_CountSteps)->Arg(10)->Arg(60)->Unit(benchmark::kMillisecond);

static void BM_ExtractGestures(benchmark::State& state) {
  TapSpec t;
  t.times_s = {0.6, 1.5, 2.4, 3.3, 4.2};
  const auto trace = synth_taps(t).trace;
  for (auto _ : state) benchmark::DoNotOptimize(extract_gestures(trace));
}
BENCHMARK(BM_ExtractGestures)->Unit(benchmark::kMillisecond);

static void BM_ExtractFeatures(benchmark::State& state) {
  const auto seg = gesture_segment();
  for (auto _ : state) benchmark::DoNotOptimize(extract_features(seg));
}
BENCHMARK(BM_ExtractFeatures)->Unit(benchmark::kMicrosecond);

static void BM_Train(benchmark::State& state) {
  const auto data = synth_blobs(BlobSpec{});
  TrainOptions opts;
  opts.kind = static_cast<ModelKind>(state.range(0));
  state.SetLabel(std::string(to_string(opts.kind)));
  for (auto _ : state) benchmark::DoNotOptimize(train(data, opts));
}
BENCHMARK(BM_Train)
    ->Arg(static_cast<int>(ModelKind::LogReg))
    ->Arg(static_cast<int>(ModelKind::LinearSvm))
    ->Arg(static_cast<int>(ModelKind::Knn))
    ->Unit(benchmark::kMillisecond);

static void BM_Predict(benchmark::State& state) {
  BlobSpec spec;
  spec.dim = static_cast<int>(kFeatureDim);
  const auto data = synth_blobs(spec);
  TrainOptions opts;
  opts.kind = static_cast<ModelKind>(state.range(0));
  const auto model = train(data, opts);
  state.SetLabel(std::string(to_string(opts.kind)));
  const auto& row = data.rows.front().features;
  for (auto _ : state) benchmark::DoNotOptimize(model.predict(row));
}
BENCHMARK(BM_Predict)
    ->Arg(static_cast<int>(ModelKind::LogReg))
    ->Arg(static_cast<int>(ModelKind::Knn))
    ->Unit(benchmark::kMicrosecond);

static void BM_MusicImpact(benchmark::State& state) {
  const auto walk = walk_trace(20);
  MusicSpec m;
  m.freqs_hz = {220.0, 440.0, 880.0};
  const auto music = synth_music(m);
  for (auto _ : state) benchmark::DoNotOptimize(music_impact(walk, music));
}
BENCHMARK(BM_MusicImpact)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
