#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "bisense/bounds.hpp"
#include "bisense/estimator.hpp"

namespace bisense {

enum class SweepMode { snr, rcs, single_shot, ambiguity_demo };

struct SweepSpec {
  SweepMode mode = SweepMode::snr;
  std::vector<double> snr_db;  // axis for snr mode, first entry otherwise
  std::vector<double> rcs_m2;  // axis for rcs mode
  int trials = 200;
  std::uint64_t seed = 1;
  bool physical = false;  // single-shot trials use the link budget
  EstimatorOptions estimator;
  int threads = 0;  // 0 = hardware concurrency
};

// Full scenario: system, scene, target, sweep. This is what the config file
// parses into.
struct ScenarioConfig {
  SystemConfig system;
  SceneGeometry scene;
  TargetState target;
  SweepSpec sweep;
};

ScenarioConfig parse_config(const std::string& text);     // throws ConfigError
ScenarioConfig load_config(const std::string& path);      // throws ConfigError

struct TrialRecord {
  std::uint64_t trial_index = 0;
  std::optional<double> snr_db;  // empty = physical link budget
  EstimateResult coarse;
  EstimateResult final;  // two-stage result
  double position_error_m = 0;
  double range_error_m = 0;
  double aoa_error_rad = 0;
  double coarse_range_peb_m = 0;
  double wall_time_s = 0;
  std::string error;  // nonempty if the pipeline failed; errors never escape
};

TrialRecord run_trial(const SystemConfig& cfg, const SceneGeometry& scene,
                      const TargetState& target, std::optional<double> snr_db,
                      std::uint64_t base_seed, std::uint64_t trial_index,
                      const EstimatorOptions& opts = {});

struct SweepPoint {
  double axis = 0;
  std::string axis_unit;  // "dB" or "m2"
  int trials = 0;
  double rmse_pos_m = 0;
  double peb_m = 0;
  double rmse_range_m = 0;
  double rmse_aoa_rad = 0;
  double amb_fail_rate = 0;
};

// Monte Carlo over the configured axis. Trials run concurrently but are
// seeded and aggregated by index, so output is identical to a serial run.
std::vector<SweepPoint> run_sweep(const ScenarioConfig& scenario);

// Exact column contract:
// axis,axis_unit,trials,rmse_pos_m,peb_m,rmse_range_m,rmse_aoa_rad,amb_fail_rate
void write_csv(const std::vector<SweepPoint>& points, std::ostream& out);

std::string trial_to_json(const TrialRecord& rec);

// Side-by-side run of naive single-stage (fine plan only, delay axis spanning
// one aliasing period) and the two-stage chain on identical realizations.
struct AmbiguityReport {
  bool ambiguity_possible = false;
  std::string explanation;
  double fine_unambiguous_range_m = 0;
  double target_range_m = 0;
  double single_stage_range_m = 0;
  double single_stage_range_error_m = 0;
  int alias_multiples = 0;  // nearest integer error / unambiguous range
  double two_stage_range_error_m = 0;
  double two_stage_position_error_m = 0;
  double snr_db = 0;
};

AmbiguityReport ambiguity_demo(const ScenarioConfig& scenario, double snr_db,
                               std::uint64_t seed);

std::string ambiguity_report_text(const AmbiguityReport& rep);

// Bound table over the configured SNR axis at the true target geometry.
struct PebPoint {
  double snr_db = 0;
  double peb_m = 0;
  double range_crlb_m = 0;   // sqrt of the delay variance, meters
  double aoa_crlb_rad = 0;   // sqrt of the aoa variance
};

std::vector<PebPoint> peb_table(const ScenarioConfig& scenario);

}  // namespace bisense
