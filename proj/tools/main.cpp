#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "bisense/channel.hpp"
#include "bisense/estimator.hpp"
#include "bisense/harness.hpp"

namespace {

int cmd_sweep(const std::string& config_path, const std::string& out_path) {
  const bisense::ScenarioConfig sc = bisense::load_config(config_path);
  const auto points = bisense::run_sweep(sc);
  std::ofstream out(out_path, std::ios::binary);
  if (!out) {
    std::cerr << "sweep: cannot open " << out_path << " for writing\n";
    return 1;
  }
  bisense::write_csv(points, out);
  if (!out.good()) {
    std::cerr << "sweep: write to " << out_path << " failed\n";
    return 1;
  }
  std::cerr << "wrote " << points.size() << " point(s) to " << out_path << "\n";
  return 0;
}

int cmd_trial(const std::string& config_path, std::uint64_t seed,
              std::optional<double> snr_override, bool physical, bool as_json,
              const std::string& dump_prefix) {
  bisense::ScenarioConfig sc = bisense::load_config(config_path);
  std::optional<double> snr;
  if (physical) {
    snr = std::nullopt;
  } else if (snr_override) {
    snr = snr_override;
  } else if (sc.sweep.physical) {
    snr = std::nullopt;
  } else if (!sc.sweep.snr_db.empty()) {
    snr = sc.sweep.snr_db.front();
  } else {
    snr = bisense::link_snr_db(sc.system, sc.scene, sc.target);
  }

  if (!dump_prefix.empty()) {
    const auto streams = bisense::rng::TrialStreams::derive(sc.sweep.seed, seed);
    const auto mode = snr ? bisense::SnrMode::normalized(*snr)
                          : bisense::SnrMode::physical_budget();
    const auto frames =
        bisense::build_trial_frames(sc.scene, sc.target, sc.system, mode, streams);
    bisense::dump_rx_grid(dump_prefix + ".coarse.rxg", frames.coarse);
    bisense::dump_rx_grid(dump_prefix + ".fine.rxg", frames.fine);
    std::cerr << "dumped " << dump_prefix << ".coarse.rxg and " << dump_prefix
              << ".fine.rxg\n";
  }

  const bisense::TrialRecord rec = bisense::run_trial(
      sc.system, sc.scene, sc.target, snr, sc.sweep.seed, seed, sc.sweep.estimator);
  if (as_json) {
    std::cout << bisense::trial_to_json(rec) << "\n";
  } else if (rec.error.empty()) {
    std::printf("snr: %s\n", snr ? (std::to_string(*snr) + " dB").c_str()
                                 : "physical budget");
    std::printf("coarse range: %.6f m\n", rec.coarse.bistatic_range);
    std::printf("fine range:   %.6f m (error %.3e m)\n",
                rec.final.bistatic_range, rec.range_error_m);
    std::printf("aoa:          %.6f rad (error %.3e rad)\n", rec.final.aoa,
                rec.aoa_error_rad);
    if (rec.final.position) {
      std::printf("position:     (%.6f, %.6f) m (error %.3e m)\n",
                  rec.final.position->x(), rec.final.position->y(),
                  rec.position_error_m);
    } else {
      std::printf("position:     not invertible (estimate at the baseline)\n");
    }
    std::printf("wall time:    %.3f s\n", rec.wall_time_s);
  }
  if (!rec.error.empty()) {
    std::cerr << "trial failed: " << rec.error << "\n";
    return 1;
  }
  return 0;
}

int cmd_peb(const std::string& config_path) {
  const bisense::ScenarioConfig sc = bisense::load_config(config_path);
  const auto table = bisense::peb_table(sc);
  std::printf("%12s %14s %16s %16s\n", "snr_db", "peb_m", "range_crlb_m",
              "aoa_crlb_rad");
  for (const auto& p : table) {
    std::printf("%12.4g %14.6g %16.6g %16.6g\n", p.snr_db, p.peb_m,
                p.range_crlb_m, p.aoa_crlb_rad);
  }
  return 0;
}

int cmd_demo(const std::string& config_path, double snr_db, std::uint64_t seed) {
  const bisense::ScenarioConfig sc = bisense::load_config(config_path);
  const auto rep = bisense::ambiguity_demo(sc, snr_db, seed);
  std::cout << bisense::ambiguity_report_text(rep);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"bistatic OFDM sensing simulator"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_path;
  auto* sweep = app.add_subcommand("sweep", "run a trial sweep, write a CSV");
  sweep->add_option("--config", config_path, "scenario config file")->required();
  sweep->add_option("--out", out_path, "output CSV path")->required();

  std::string trial_config;
  std::uint64_t trial_seed = 0;
  bool trial_json = false;
  bool trial_physical = false;
  double trial_snr = 0;
  std::string dump_prefix;
  auto* trial = app.add_subcommand("trial", "run one trial, print the result");
  trial->add_option("--config", trial_config, "scenario config file")->required();
  trial->add_option("--seed", trial_seed, "trial index within the configured seed");
  auto* snr_opt = trial->add_option("--snr", trial_snr, "per-element SNR in dB");
  trial->add_flag("--physical", trial_physical,
                  "use the physical link budget instead of a set SNR");
  trial->add_flag("--json", trial_json, "emit the record as JSON");
  trial->add_option("--dump-rx", dump_prefix,
                    "write both stage grids to <prefix>.{coarse,fine}.rxg");

  std::string peb_config;
  auto* peb = app.add_subcommand("peb", "print the bound table for the scenario");
  peb->add_option("--config", peb_config, "scenario config file")->required();

  std::string demo_config;
  double demo_snr = 0.0;
  std::uint64_t demo_seed = 1;
  auto* demo = app.add_subcommand("demo-ambiguity",
                                  "contrast single-stage aliasing with the "
                                  "two-stage estimate");
  demo->add_option("--config", demo_config, "scenario config file")->required();
  demo->add_option("--snr", demo_snr, "per-element SNR in dB");
  demo->add_option("--seed", demo_seed, "rng seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    app.exit(e);
    return 2;
  }

  try {
    if (sweep->parsed()) return cmd_sweep(config_path, out_path);
    if (trial->parsed()) {
      std::optional<double> snr;
      if (snr_opt->count() > 0) snr = trial_snr;
      return cmd_trial(trial_config, trial_seed, snr, trial_physical,
                       trial_json, dump_prefix);
    }
    if (peb->parsed()) return cmd_peb(peb_config);
    if (demo->parsed()) return cmd_demo(demo_config, demo_snr, demo_seed);
  } catch (const bisense::ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
