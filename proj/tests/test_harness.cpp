#include <cmath>
#include <sstream>

#include <nlohmann/json.hpp>

#include "bisense/harness.hpp"
#include "doctest.h"

using namespace bisense;

namespace {

const char* kDeskConfig = R"(
# desk-size profile
[system]
total_subcarriers = 80
active_subcarriers = 16
symbols = 10
n_tx = 8
n_rx = 8

[target]
position = 7.49 2.51

[sweep]
mode = snr
snr_db = 0 6
trials = 8
seed = 3
)";

}  // namespace

TEST_CASE("empty config reproduces the evaluation profile") {
  const ScenarioConfig sc = parse_config("");
  CHECK(sc.system.f_c == 0.3e12);
  CHECK(sc.system.subcarrier_spacing == 6.25e6);
  CHECK(sc.system.total_subcarriers == 320);
  CHECK(sc.system.active_subcarriers == 64);
  CHECK(sc.system.symbols == 50);
  CHECK(sc.system.n_tx == 64);
  CHECK(sc.system.n_rx == 64);
  CHECK(sc.system.tx_power_gain == 1.0);
  CHECK(sc.system.noise_psd == 4e-20);
  CHECK(sc.system.bandwidth_ratio == 5);
  // Prefix derives from the scene when not set explicitly.
  CHECK(sc.system.cp_duration ==
        doctest::Approx(1.9539732304636725e-08).epsilon(1e-12));
  CHECK((sc.scene.tx_position - Eigen::Vector2d(0.0, 0.0)).norm() == 0.0);
  CHECK((sc.scene.rx_position - Eigen::Vector2d(10.0, 10.0)).norm() == 0.0);
  CHECK((sc.target.position - Eigen::Vector2d(7.49, 2.51)).norm() == 0.0);
  CHECK(sc.target.rcs == 1.0);
  CHECK(sc.sweep.trials == 200);
  CHECK(sc.sweep.seed == 1);
}

TEST_CASE("config parser reads sections, comments and lists") {
  const ScenarioConfig sc = parse_config(kDeskConfig);
  CHECK(sc.system.total_subcarriers == 80);
  CHECK(sc.system.active_subcarriers == 16);
  CHECK(sc.system.symbols == 10);
  CHECK(sc.sweep.mode == SweepMode::snr);
  CHECK(sc.sweep.snr_db == std::vector<double>{0.0, 6.0});
  CHECK(sc.sweep.trials == 8);
  CHECK(sc.sweep.seed == 3);
}

TEST_CASE("boundary units are degrees, internals are radians") {
  const ScenarioConfig sc = parse_config(
      "[scene]\n"
      "tx_position = 0 0\n"
      "rx_position = 10 0\n"
      "area = 0 1 10 9\n"
      "tx_boresight_deg = 90\n"
      "rx_boresight_deg = 90\n"
      "[target]\n"
      "position = 5 5\n");
  CHECK(sc.scene.tx_boresight.x() == doctest::Approx(0.0));
  CHECK(sc.scene.tx_boresight.y() == doctest::Approx(1.0));
  CHECK(sc.scene.rx_boresight.y() == doctest::Approx(1.0));
}

TEST_CASE("config rejects unknown keys, sections and malformed lines") {
  CHECK_THROWS_AS(parse_config("[system]\nbogus_key = 1\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("[nonsense]\nx = 1\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("[system]\nf_c 0.3e12\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("[system]\nf_c = not_a_number\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("[system]\nsymbols = 50\nsymbols = 60\n"),
                  ConfigError);
  CHECK_THROWS_AS(parse_config("[target]\nposition = 1\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("[target]\nposition = 50 50\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("[sweep]\nmode = telepathy\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("[sweep]\ntrials = 0\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("key_without_section = 1\n"), ConfigError);
}

TEST_CASE("sweep modes validate their axes when run") {
  ScenarioConfig sc = parse_config(kDeskConfig);
  sc.sweep.snr_db.clear();
  CHECK_THROWS_AS(run_sweep(sc), ConfigError);
  sc.sweep.mode = SweepMode::rcs;
  CHECK_THROWS_AS(run_sweep(sc), ConfigError);
  sc.sweep.mode = SweepMode::ambiguity_demo;
  CHECK_THROWS_AS(run_sweep(sc), ConfigError);
}

TEST_CASE("trials are deterministic in config and seed") {
  const ScenarioConfig sc = parse_config(kDeskConfig);
  const TrialRecord a =
      run_trial(sc.system, sc.scene, sc.target, 3.0, 17, 4, sc.sweep.estimator);
  const TrialRecord b =
      run_trial(sc.system, sc.scene, sc.target, 3.0, 17, 4, sc.sweep.estimator);
  CHECK(a.error.empty());
  CHECK(a.position_error_m == b.position_error_m);
  CHECK(a.range_error_m == b.range_error_m);
  CHECK(a.aoa_error_rad == b.aoa_error_rad);
  CHECK(a.final.score == b.final.score);

  const TrialRecord c =
      run_trial(sc.system, sc.scene, sc.target, 3.0, 17, 5, sc.sweep.estimator);
  CHECK(c.position_error_m != a.position_error_m);
}

TEST_CASE("sweep aggregates trials into the published csv schema") {
  ScenarioConfig sc = parse_config(kDeskConfig);
  sc.sweep.threads = 2;
  const auto points = run_sweep(sc);
  REQUIRE(points.size() == 2);
  CHECK(points[0].axis == 0.0);
  CHECK(points[1].axis == 6.0);
  for (const auto& p : points) {
    CHECK(p.axis_unit == "dB");
    CHECK(p.trials == 8);
    CHECK(p.rmse_pos_m > 0);
    CHECK(p.peb_m > 0);
    CHECK(p.amb_fail_rate == 0.0);
  }
  CHECK(points[1].rmse_pos_m < points[0].rmse_pos_m);

  std::ostringstream out;
  write_csv(points, out);
  const std::string text = out.str();
  CHECK(text.rfind("axis,axis_unit,trials,rmse_pos_m,peb_m,rmse_range_m,"
                   "rmse_aoa_rad,amb_fail_rate\n", 0) == 0);

  // Identical run, identical bytes, regardless of the thread count.
  ScenarioConfig sc2 = parse_config(kDeskConfig);
  sc2.sweep.threads = 7;
  std::ostringstream out2;
  write_csv(run_sweep(sc2), out2);
  CHECK(text == out2.str());
}

TEST_CASE("rcs sweep runs the physical budget with the swept cross section") {
  ScenarioConfig sc = parse_config(kDeskConfig);
  sc.sweep.mode = SweepMode::rcs;
  sc.sweep.rcs_m2 = {1.0, 4.0};
  sc.sweep.trials = 6;
  const auto points = run_sweep(sc);
  REQUIRE(points.size() == 2);
  CHECK(points[0].axis_unit == "m2");
  // Quadrupled cross section doubles the amplitude, halving the bound.
  CHECK(points[1].peb_m ==
        doctest::Approx(0.5 * points[0].peb_m).epsilon(1e-9));
  CHECK(points[1].rmse_pos_m < points[0].rmse_pos_m);
}

TEST_CASE("trial json carries both stages and the errors") {
  const ScenarioConfig sc = parse_config(kDeskConfig);
  const TrialRecord rec =
      run_trial(sc.system, sc.scene, sc.target, 6.0, 17, 0, sc.sweep.estimator);
  const auto j = nlohmann::json::parse(trial_to_json(rec));
  CHECK(j.at("trial_index") == 0);
  CHECK(j.at("snr_db") == 6.0);
  CHECK(j.at("coarse").at("bistatic_range_m").get<double>() > 14.0);
  CHECK(j.at("fine").at("bistatic_range_m").get<double>() > 14.0);
  CHECK(j.at("fine").at("window_fallback") == false);
  CHECK(j.at("position_error_m").get<double>() >= 0.0);
  CHECK(j.at("coarse_range_peb_m").get<double>() > 0.0);
  CHECK(j.contains("wall_time_s"));
}

TEST_CASE("ambiguity demo reports the alias and the two-stage recovery") {
  const ScenarioConfig sc = parse_config("");  // evaluation profile
  const AmbiguityReport rep = ambiguity_demo(sc, 0.0, 1);
  CHECK(rep.ambiguity_possible);
  CHECK(rep.fine_unambiguous_range_m ==
        doctest::Approx(9.593358656).epsilon(1e-12));
  CHECK(rep.target_range_m == doctest::Approx(15.79875944496909).epsilon(1e-12));
  CHECK(rep.alias_multiples == 1);
  CHECK(std::abs(rep.single_stage_range_error_m - 9.593358656) < 0.15);
  CHECK(rep.two_stage_position_error_m < 0.05);
  const std::string text = ambiguity_report_text(rep);
  CHECK(text.find("alias") != std::string::npos);
}

TEST_CASE("ambiguity demo declines scenes without an alias to show") {
  const ScenarioConfig sc = parse_config(
      "[scene]\n"
      "tx_position = 0 0\n"
      "rx_position = 2 2\n"
      "area = 0 0 4 4\n"
      "[target]\n"
      "position = 2 1\n");
  const AmbiguityReport rep = ambiguity_demo(sc, 0.0, 1);
  CHECK_FALSE(rep.ambiguity_possible);
  CHECK(rep.target_range_m < rep.fine_unambiguous_range_m);
  CHECK(ambiguity_report_text(rep).find("no ambiguity possible") !=
        std::string::npos);
}

TEST_CASE("peb table defaults to the link budget snr") {
  ScenarioConfig sc = parse_config(kDeskConfig);
  sc.sweep.snr_db.clear();
  const auto table = peb_table(sc);
  REQUIRE(table.size() == 1);
  CHECK(std::isfinite(table[0].peb_m));
  sc.sweep.snr_db = {0.0, 10.0};
  const auto two = peb_table(sc);
  REQUIRE(two.size() == 2);
  CHECK(two[1].peb_m ==
        doctest::Approx(two[0].peb_m / std::sqrt(10.0)).epsilon(1e-9));
  CHECK(two[1].snr_db == 10.0);
  CHECK(two[1].range_crlb_m > 0);
  CHECK(two[1].aoa_crlb_rad > 0);
}

TEST_CASE("single shot sweeps one point at the requested snr") {
  ScenarioConfig sc = parse_config(kDeskConfig);
  sc.sweep.mode = SweepMode::single_shot;
  sc.sweep.trials = 4;
  const auto points = run_sweep(sc);
  REQUIRE(points.size() == 1);
  CHECK(points[0].axis == 0.0);  // first axis entry
  CHECK(points[0].trials == 4);
}
