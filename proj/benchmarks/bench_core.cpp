#include <benchmark/benchmark.h>

#include <limits>

#include "bisense/bounds.hpp"
#include "bisense/estimator.hpp"
#include "bisense/harness.hpp"

using namespace bisense;

namespace {

SceneGeometry eval_scene() {
  return SceneGeometry::with_default_boresights({0.0, 0.0}, {10.0, 10.0},
                                                Rect{0.0, 0.0, 10.0, 10.0});
}

SystemConfig desk_cfg() {
  SystemConfig c;
  c.total_subcarriers = 80;
  c.active_subcarriers = 16;
  c.symbols = 10;
  c.n_tx = 8;
  c.n_rx = 8;
  return c;
}

TargetState eval_target() {
  TargetState t;
  t.position = {7.49, 2.51};
  return t;
}

TrialFrames make_frames(const SystemConfig& cfg) {
  return build_trial_frames(eval_scene(), eval_target(), cfg,
                            SnrMode::normalized(0.0),
                            rng::TrialStreams::derive(1, 0));
}

}  // namespace

static void BM_SynthesizeDesk(benchmark::State& state) {
  const SystemConfig cfg = desk_cfg();
  const SceneGeometry scene = eval_scene();
  const TargetState t = eval_target();
  std::uint64_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(build_trial_frames(
        scene, t, cfg, SnrMode::normalized(0.0), rng::TrialStreams::derive(1, i++)));
  }
}
BENCHMARK(BM_SynthesizeDesk);

static void BM_SynthesizeFull(benchmark::State& state) {
  const SystemConfig cfg;
  const SceneGeometry scene = eval_scene();
  const TargetState t = eval_target();
  std::uint64_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(build_trial_frames(
        scene, t, cfg, SnrMode::normalized(0.0), rng::TrialStreams::derive(1, i++)));
  }
}
BENCHMARK(BM_SynthesizeFull);

static void BM_ObjectiveFull(benchmark::State& state) {
  const SystemConfig cfg;
  const TrialFrames f = make_frames(cfg);
  double delay = f.truth.delay;
  for (auto _ : state) {
    benchmark::DoNotOptimize(gml_objective(f.fine, delay, 0.0, f.truth.aoa));
    delay += 1e-12;
  }
}
BENCHMARK(BM_ObjectiveFull);

static void BM_TwoStageDesk(benchmark::State& state) {
  const SystemConfig cfg = desk_cfg();
  const SceneGeometry scene = eval_scene();
  const TrialFrames f = make_frames(cfg);
  for (auto _ : state) {
    benchmark::DoNotOptimize(two_stage_estimate(f, scene, cfg));
  }
}
BENCHMARK(BM_TwoStageDesk);

static void BM_TwoStageFull(benchmark::State& state) {
  const SystemConfig cfg;
  const SceneGeometry scene = eval_scene();
  const TrialFrames f = make_frames(cfg);
  for (auto _ : state) {
    benchmark::DoNotOptimize(two_stage_estimate(f, scene, cfg));
  }
}
BENCHMARK(BM_TwoStageFull);

static void BM_FimFull(benchmark::State& state) {
  const SystemConfig cfg;
  FimParams p;
  p.cfg = cfg;
  p.plan = make_plan(PlanStage::fine, cfg);
  p.symbols = generate_symbols(cfg.active_subcarriers, cfg.symbols, 3);
  p.delay = 5.27e-8;
  p.aoa = 0.46;
  for (auto _ : state) {
    benchmark::DoNotOptimize(fim(p));
  }
}
BENCHMARK(BM_FimFull);

BENCHMARK_MAIN();
