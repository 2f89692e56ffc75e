#pragma once

#include <Eigen/Dense>
#include <optional>
#include <vector>

#include "bisense/channel.hpp"
#include "bisense/geometry.hpp"
#include "bisense/rng.hpp"
#include "bisense/system.hpp"

namespace bisense {

// Explicit search axes, strictly increasing. A single-point axis pins that
// dimension (the default doppler axis is {0} for stationary scenes).
struct SearchGrid {
  std::vector<double> delay;    // s
  std::vector<double> doppler;  // Hz
  std::vector<double> aoa;      // rad
};

enum class EstimateStage { coarse, fine, two_stage };

struct EstimateResult {
  double delay = 0;
  double doppler = 0;
  double aoa = 0;
  double bistatic_range = 0;
  double score = 0;  // objective value at the returned tuple
  std::optional<Eigen::Vector2d> position;
  EstimateStage stage = EstimateStage::coarse;
  double window_m = 0;  // fine-stage delay window width, meters
  bool window_fallback = false;
};

struct EstimatorOptions {
  bool interpolate = true;  // parabolic peak refinement per axis
  int refine_rounds = 3;    // extra re-evaluated passes after the parabola
  bool doppler_search = false;
  double doppler_span_hz = 0;  // full width of the coarse doppler axis
};

// Concentrated likelihood of one tuple: the per-element de-rotated
// correlation combined across the array, normalized so the value is invariant
// to scaling of the data. Amplitude and phase of the path never enter.
double gml_objective(const RxGrid& grid, double delay, double doppler,
                     double aoa);

// Exhaustive maximization over the axes; ties break to the smallest delay,
// then aoa, then doppler. Evaluation order is fixed, results are
// deterministic. position is left unset (no scene available here).
EstimateResult grid_search(const RxGrid& grid, const SearchGrid& search,
                           const EstimatorOptions& opts = {});

// Stage wrappers build the axes from the scene: delay over the in-area
// bistatic range interval at a quarter of the stage resolution, arrival angle
// over the receive sector at a quarter beamwidth.
EstimateResult coarse_stage(const RxGrid& grid, const SceneGeometry& scene,
                            const SystemConfig& cfg,
                            const EstimatorOptions& opts = {});

// Fine search in a window around the coarse estimate. The window is sized
// from the coarse range bound but never exceeds 90% of the fine aliasing
// period; a non-finite bound falls back to the coarse-resolution branch and
// flags the result.
EstimateResult fine_stage(const RxGrid& grid, const EstimateResult& coarse,
                          double coarse_range_peb_m,
                          const SceneGeometry& scene, const SystemConfig& cfg,
                          const EstimatorOptions& opts = {});

// Both stage frames of one trial, synthesized with shared substreams so
// different estimation strategies can run on identical realizations.
struct TrialFrames {
  SubcarrierPlan coarse_plan;
  SubcarrierPlan fine_plan;
  RxGrid coarse;
  RxGrid fine;
  ChannelRealization chan_coarse;
  ChannelRealization chan_fine;
  BistaticParams truth;
};

TrialFrames build_trial_frames(const SceneGeometry& scene,
                               const TargetState& target,
                               const SystemConfig& cfg, const SnrMode& mode,
                               const rng::TrialStreams& streams);

struct TwoStageResult {
  EstimateResult result;  // fine values, stage = two_stage
  EstimateResult coarse;
  double coarse_range_peb_m = 0;
};

TwoStageResult two_stage_estimate(const SceneGeometry& scene,
                                  const TargetState& target,
                                  const SystemConfig& cfg, const SnrMode& mode,
                                  const rng::TrialStreams& streams,
                                  const EstimatorOptions& opts = {});

// Same search on pre-built frames (shared-realization studies).
TwoStageResult two_stage_estimate(const TrialFrames& frames,
                                  const SceneGeometry& scene,
                                  const SystemConfig& cfg,
                                  const EstimatorOptions& opts = {});

}  // namespace bisense
