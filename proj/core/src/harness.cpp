#include "bisense/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>

namespace bisense {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> tokens(const std::string& s) {
  std::istringstream in(s);
  std::vector<std::string> out;
  std::string t;
  while (in >> t) out.push_back(t);
  return out;
}

double parse_double(const std::string& v, const std::string& key) {
  try {
    std::size_t pos = 0;
    const double d = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw ConfigError("config: bad number for '" + key + "': " + v);
  }
}

long long parse_int(const std::string& v, const std::string& key) {
  try {
    std::size_t pos = 0;
    const long long i = std::stoll(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return i;
  } catch (const std::exception&) {
    throw ConfigError("config: bad integer for '" + key + "': " + v);
  }
}

bool parse_bool(const std::string& v, const std::string& key) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw ConfigError("config: bad boolean for '" + key + "': " + v);
}

std::vector<double> parse_list(const std::string& v, const std::string& key) {
  std::vector<double> out;
  for (const auto& t : tokens(v)) out.push_back(parse_double(t, key));
  if (out.empty()) throw ConfigError("config: empty list for '" + key + "'");
  return out;
}

Eigen::Vector2d parse_vec2(const std::string& v, const std::string& key) {
  const auto t = tokens(v);
  if (t.size() != 2) {
    throw ConfigError("config: '" + key + "' needs two values");
  }
  return {parse_double(t[0], key), parse_double(t[1], key)};
}

using Section = std::map<std::string, std::string>;

}  // namespace

ScenarioConfig parse_config(const std::string& text) {
  std::map<std::string, Section> sections;
  std::istringstream in(text);
  std::string line;
  std::string current;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find_first_of("#;");
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') {
        throw ConfigError("config: malformed section header at line " +
                          std::to_string(lineno));
      }
      current = trim(line.substr(1, line.size() - 2));
      if (current != "system" && current != "scene" && current != "target" &&
          current != "sweep") {
        throw ConfigError("config: unknown section [" + current + "]");
      }
      sections[current];
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos || current.empty()) {
      throw ConfigError("config: expected key = value at line " +
                        std::to_string(lineno));
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string val = trim(line.substr(eq + 1));
    if (key.empty() || val.empty()) {
      throw ConfigError("config: empty key or value at line " +
                        std::to_string(lineno));
    }
    if (!sections[current].emplace(key, val).second) {
      throw ConfigError("config: duplicate key '" + key + "' in [" + current + "]");
    }
  }

  ScenarioConfig sc;

  // Scene first: the cyclic prefix default derives from it.
  {
    Section s = sections["scene"];
    auto take = [&](const char* k) -> std::optional<std::string> {
      auto it = s.find(k);
      if (it == s.end()) return std::nullopt;
      std::string v = it->second;
      s.erase(it);
      return v;
    };
    Eigen::Vector2d tx{0.0, 0.0}, rx{10.0, 10.0};
    Rect area{0.0, 0.0, 10.0, 10.0};
    if (auto v = take("tx_position")) tx = parse_vec2(*v, "tx_position");
    if (auto v = take("rx_position")) rx = parse_vec2(*v, "rx_position");
    if (auto v = take("area")) {
      const auto t = tokens(*v);
      if (t.size() != 4) throw ConfigError("config: 'area' needs four values");
      area = {parse_double(t[0], "area"), parse_double(t[1], "area"),
              parse_double(t[2], "area"), parse_double(t[3], "area")};
    }
    sc.scene = SceneGeometry::with_default_boresights(tx, rx, area);
    if (auto v = take("tx_boresight_deg")) {
      const double a = parse_double(*v, "tx_boresight_deg") * kPi / 180.0;
      sc.scene.tx_boresight = {std::cos(a), std::sin(a)};
    }
    if (auto v = take("rx_boresight_deg")) {
      const double a = parse_double(*v, "rx_boresight_deg") * kPi / 180.0;
      sc.scene.rx_boresight = {std::cos(a), std::sin(a)};
    }
    if (!s.empty()) {
      throw ConfigError("config: unknown key '" + s.begin()->first + "' in [scene]");
    }
    sc.scene.validate();
  }

  {
    Section s = sections["system"];
    auto take = [&](const char* k) -> std::optional<std::string> {
      auto it = s.find(k);
      if (it == s.end()) return std::nullopt;
      std::string v = it->second;
      s.erase(it);
      return v;
    };
    SystemConfig& c = sc.system;
    if (auto v = take("f_c")) c.f_c = parse_double(*v, "f_c");
    if (auto v = take("subcarrier_spacing"))
      c.subcarrier_spacing = parse_double(*v, "subcarrier_spacing");
    if (auto v = take("total_subcarriers"))
      c.total_subcarriers = static_cast<int>(parse_int(*v, "total_subcarriers"));
    if (auto v = take("active_subcarriers"))
      c.active_subcarriers = static_cast<int>(parse_int(*v, "active_subcarriers"));
    if (auto v = take("symbols"))
      c.symbols = static_cast<int>(parse_int(*v, "symbols"));
    if (auto v = take("n_tx")) c.n_tx = static_cast<int>(parse_int(*v, "n_tx"));
    if (auto v = take("n_rx")) c.n_rx = static_cast<int>(parse_int(*v, "n_rx"));
    if (auto v = take("tx_power_gain"))
      c.tx_power_gain = parse_double(*v, "tx_power_gain");
    if (auto v = take("rx_element_gain"))
      c.rx_element_gain = parse_double(*v, "rx_element_gain");
    if (auto v = take("noise_psd")) c.noise_psd = parse_double(*v, "noise_psd");
    if (auto v = take("bandwidth_ratio"))
      c.bandwidth_ratio = static_cast<int>(parse_int(*v, "bandwidth_ratio"));
    if (auto v = take("snr_over_total_subcarriers"))
      c.snr_over_total_subcarriers = parse_bool(*v, "snr_over_total_subcarriers");
    if (auto v = take("cp_duration")) {
      c.cp_duration = parse_double(*v, "cp_duration");
    } else {
      c.cp_duration = cp_from_area(sc.scene);
    }
    if (!s.empty()) {
      throw ConfigError("config: unknown key '" + s.begin()->first + "' in [system]");
    }
    c.validate();
  }

  {
    Section s = sections["target"];
    auto take = [&](const char* k) -> std::optional<std::string> {
      auto it = s.find(k);
      if (it == s.end()) return std::nullopt;
      std::string v = it->second;
      s.erase(it);
      return v;
    };
    sc.target.position = {7.49, 2.51};
    if (auto v = take("position")) sc.target.position = parse_vec2(*v, "position");
    if (auto v = take("velocity")) sc.target.velocity = parse_vec2(*v, "velocity");
    if (auto v = take("rcs")) sc.target.rcs = parse_double(*v, "rcs");
    if (!s.empty()) {
      throw ConfigError("config: unknown key '" + s.begin()->first + "' in [target]");
    }
    if (sc.target.rcs <= 0) throw ConfigError("config: rcs must be positive");
    if (!sc.scene.area.contains(sc.target.position)) {
      throw ConfigError("config: target outside the surveillance area");
    }
  }

  {
    Section s = sections["sweep"];
    auto take = [&](const char* k) -> std::optional<std::string> {
      auto it = s.find(k);
      if (it == s.end()) return std::nullopt;
      std::string v = it->second;
      s.erase(it);
      return v;
    };
    SweepSpec& w = sc.sweep;
    if (auto v = take("mode")) {
      if (*v == "snr") w.mode = SweepMode::snr;
      else if (*v == "rcs") w.mode = SweepMode::rcs;
      else if (*v == "single_shot") w.mode = SweepMode::single_shot;
      else if (*v == "ambiguity_demo") w.mode = SweepMode::ambiguity_demo;
      else throw ConfigError("config: unknown sweep mode '" + *v + "'");
    }
    if (auto v = take("snr_db")) w.snr_db = parse_list(*v, "snr_db");
    if (auto v = take("rcs_m2")) w.rcs_m2 = parse_list(*v, "rcs_m2");
    if (auto v = take("trials")) {
      w.trials = static_cast<int>(parse_int(*v, "trials"));
      if (w.trials < 1) throw ConfigError("config: trials must be >= 1");
    }
    if (auto v = take("seed"))
      w.seed = static_cast<std::uint64_t>(parse_int(*v, "seed"));
    if (auto v = take("physical")) w.physical = parse_bool(*v, "physical");
    if (auto v = take("interpolate"))
      w.estimator.interpolate = parse_bool(*v, "interpolate");
    if (auto v = take("refine_rounds"))
      w.estimator.refine_rounds = static_cast<int>(parse_int(*v, "refine_rounds"));
    if (auto v = take("doppler_search"))
      w.estimator.doppler_search = parse_bool(*v, "doppler_search");
    if (auto v = take("doppler_span_hz"))
      w.estimator.doppler_span_hz = parse_double(*v, "doppler_span_hz");
    if (auto v = take("threads"))
      w.threads = static_cast<int>(parse_int(*v, "threads"));
    if (!s.empty()) {
      throw ConfigError("config: unknown key '" + s.begin()->first + "' in [sweep]");
    }
  }
  return sc;
}

ScenarioConfig load_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("config: cannot open " + path);
  std::stringstream buf;
  buf << f.rdbuf();
  return parse_config(buf.str());
}

TrialRecord run_trial(const SystemConfig& cfg, const SceneGeometry& scene,
                      const TargetState& target, std::optional<double> snr_db,
                      std::uint64_t base_seed, std::uint64_t trial_index,
                      const EstimatorOptions& opts) {
  TrialRecord rec;
  rec.trial_index = trial_index;
  rec.snr_db = snr_db;
  const auto t0 = std::chrono::steady_clock::now();
  try {
    const auto streams = rng::TrialStreams::derive(base_seed, trial_index);
    const SnrMode mode =
        snr_db ? SnrMode::normalized(*snr_db) : SnrMode::physical_budget();
    const TwoStageResult two =
        two_stage_estimate(scene, target, cfg, mode, streams, opts);
    const BistaticParams truth = forward_geometry(scene, target, cfg.f_c);
    rec.coarse = two.coarse;
    rec.final = two.result;
    rec.coarse_range_peb_m = two.coarse_range_peb_m;
    rec.range_error_m =
        std::abs(two.result.bistatic_range - truth.bistatic_range);
    rec.aoa_error_rad = std::abs(wrap_pi(two.result.aoa - truth.aoa));
    // An estimate at or below the baseline has no ellipse point; score the
    // degenerate limit, the receive node itself.
    const Eigen::Vector2d est =
        two.result.position ? *two.result.position : scene.rx_position;
    rec.position_error_m = (est - target.position).norm();
  } catch (const std::exception& e) {
    rec.error = e.what();
  }
  rec.wall_time_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return rec;
}

namespace {

SymbolGrid unit_symbols(int subcarriers, int symbols) {
  SymbolGrid g;
  g.values = Eigen::MatrixXcd::Ones(subcarriers, symbols);
  return g;
}

// Bound inputs at the true geometry for one sweep point. The information
// matrix only sees the product amplitude*|h| and the noise variance, so the
// normalized and physical paths feed the same machinery.
FimParams point_fim_params(const ScenarioConfig& sc, const TargetState& target,
                           std::optional<double> snr_db) {
  FimParams fp;
  fp.cfg = sc.system;
  fp.plan = make_plan(PlanStage::fine, sc.system);
  fp.symbols = unit_symbols(sc.system.active_subcarriers, sc.system.symbols);
  const BistaticParams truth = forward_geometry(sc.scene, target, sc.system.f_c);
  fp.doppler = truth.doppler;
  fp.delay = truth.delay;
  fp.aoa = truth.aoa;
  fp.phase = 0.0;
  fp.amplitude = 1.0;
  if (snr_db) {
    fp.amp = 1.0;
    fp.noise_var = std::pow(10.0, -*snr_db / 10.0);
  } else {
    const double eps_mag =
        std::sqrt(path_loss_tx(target.rcs, truth.range_tx) *
                  path_loss_rx(sc.system.f_c, truth.range_rx));
    fp.amp = std::sqrt(sc.system.tx_power_gain * sc.system.rx_element_gain /
                       sc.system.active_subcarriers) *
             eps_mag;
    fp.noise_var = sc.system.noise_psd * sc.system.subcarrier_spacing;
  }
  return fp;
}

struct PointTask {
  double axis = 0;
  std::string axis_unit;
  TargetState target;
  std::optional<double> snr_db;  // empty = physical
};

SweepPoint run_point(const ScenarioConfig& sc, const PointTask& task) {
  const int n = sc.sweep.trials;
  std::vector<TrialRecord> recs(n);
  const int hw = static_cast<int>(std::thread::hardware_concurrency());
  const int nthreads = std::max(
      1, std::min(sc.sweep.threads > 0 ? sc.sweep.threads : hw, n));
  std::atomic<int> next{0};
  auto worker = [&]() {
    for (int i = next.fetch_add(1); i < n; i = next.fetch_add(1)) {
      recs[i] = run_trial(sc.system, sc.scene, task.target, task.snr_db,
                          sc.sweep.seed, static_cast<std::uint64_t>(i),
                          sc.sweep.estimator);
    }
  };
  if (nthreads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(nthreads);
    for (int t = 0; t < nthreads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  // Ambiguity failure: a range miss beyond half the fine aliasing period, or
  // a trial that failed outright.
  const SubcarrierPlan fine = make_plan(PlanStage::fine, sc.system);
  const double amb_threshold = 0.5 * fine.unambiguous_range();

  SweepPoint p;
  p.axis = task.axis;
  p.axis_unit = task.axis_unit;
  p.trials = n;
  double se_pos = 0, se_range = 0, se_aoa = 0;
  int ok = 0, amb = 0;
  for (const auto& r : recs) {
    if (!r.error.empty()) {
      ++amb;
      continue;
    }
    se_pos += r.position_error_m * r.position_error_m;
    se_range += r.range_error_m * r.range_error_m;
    se_aoa += r.aoa_error_rad * r.aoa_error_rad;
    ++ok;
    if (r.range_error_m > amb_threshold) ++amb;
  }
  if (ok > 0) {
    p.rmse_pos_m = std::sqrt(se_pos / ok);
    p.rmse_range_m = std::sqrt(se_range / ok);
    p.rmse_aoa_rad = std::sqrt(se_aoa / ok);
  } else {
    p.rmse_pos_m = p.rmse_range_m = p.rmse_aoa_rad =
        std::numeric_limits<double>::quiet_NaN();
  }
  p.amb_fail_rate = static_cast<double>(amb) / n;
  try {
    p.peb_m = peb(point_fim_params(sc, task.target, task.snr_db), sc.scene);
  } catch (const std::exception&) {
    p.peb_m = std::numeric_limits<double>::quiet_NaN();
  }
  return p;
}

}  // namespace

std::vector<SweepPoint> run_sweep(const ScenarioConfig& sc) {
  std::vector<PointTask> tasks;
  switch (sc.sweep.mode) {
    case SweepMode::snr:
      if (sc.sweep.snr_db.empty()) {
        throw ConfigError("sweep: snr mode needs an snr_db axis");
      }
      for (double s : sc.sweep.snr_db) {
        tasks.push_back({s, "dB", sc.target, s});
      }
      break;
    case SweepMode::rcs:
      if (sc.sweep.rcs_m2.empty()) {
        throw ConfigError("sweep: rcs mode needs an rcs_m2 axis");
      }
      for (double r : sc.sweep.rcs_m2) {
        if (r <= 0) throw ConfigError("sweep: rcs axis must be positive");
        TargetState t = sc.target;
        t.rcs = r;
        tasks.push_back({r, "m2", t, std::nullopt});
      }
      break;
    case SweepMode::single_shot: {
      PointTask t;
      t.target = sc.target;
      if (!sc.sweep.physical && !sc.sweep.snr_db.empty()) {
        t.snr_db = sc.sweep.snr_db.front();
        t.axis = *t.snr_db;
      } else {
        t.snr_db = std::nullopt;
        t.axis = link_snr_db(sc.system, sc.scene, sc.target);
      }
      t.axis_unit = "dB";
      tasks.push_back(t);
      break;
    }
    case SweepMode::ambiguity_demo:
      throw ConfigError(
          "sweep: mode ambiguity_demo runs via the demo-ambiguity command");
  }
  std::vector<SweepPoint> points;
  points.reserve(tasks.size());
  for (const auto& t : tasks) points.push_back(run_point(sc, t));
  return points;
}

namespace {

std::string fmt_g(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

}  // namespace

void write_csv(const std::vector<SweepPoint>& points, std::ostream& out) {
  out << "axis,axis_unit,trials,rmse_pos_m,peb_m,rmse_range_m,rmse_aoa_rad,"
         "amb_fail_rate\n";
  for (const auto& p : points) {
    out << fmt_g(p.axis) << ',' << p.axis_unit << ',' << p.trials << ','
        << fmt_g(p.rmse_pos_m) << ',' << fmt_g(p.peb_m) << ','
        << fmt_g(p.rmse_range_m) << ',' << fmt_g(p.rmse_aoa_rad) << ','
        << fmt_g(p.amb_fail_rate) << '\n';
  }
}

std::string trial_to_json(const TrialRecord& rec) {
  nlohmann::json j;
  j["trial_index"] = rec.trial_index;
  if (rec.snr_db) {
    j["snr_db"] = *rec.snr_db;
  } else {
    j["snr_db"] = nullptr;
    j["mode"] = "physical";
  }
  auto stage = [](const EstimateResult& r) {
    nlohmann::json s;
    s["delay_s"] = r.delay;
    s["doppler_hz"] = r.doppler;
    s["aoa_rad"] = r.aoa;
    s["bistatic_range_m"] = r.bistatic_range;
    s["score"] = r.score;
    if (r.position) {
      s["position_m"] = {r.position->x(), r.position->y()};
    } else {
      s["position_m"] = nullptr;
    }
    return s;
  };
  if (rec.error.empty()) {
    j["coarse"] = stage(rec.coarse);
    j["fine"] = stage(rec.final);
    j["fine"]["window_m"] = rec.final.window_m;
    j["fine"]["window_fallback"] = rec.final.window_fallback;
    j["coarse_range_peb_m"] = rec.coarse_range_peb_m;
    j["position_error_m"] = rec.position_error_m;
    j["range_error_m"] = rec.range_error_m;
    j["aoa_error_rad"] = rec.aoa_error_rad;
  } else {
    j["error"] = rec.error;
  }
  j["wall_time_s"] = rec.wall_time_s;
  return j.dump(2);
}

AmbiguityReport ambiguity_demo(const ScenarioConfig& sc, double snr_db,
                               std::uint64_t seed) {
  AmbiguityReport rep;
  rep.snr_db = snr_db;
  const SubcarrierPlan fine = make_plan(PlanStage::fine, sc.system);
  const BistaticParams truth =
      forward_geometry(sc.scene, sc.target, sc.system.f_c);
  rep.fine_unambiguous_range_m = fine.unambiguous_range();
  rep.target_range_m = truth.bistatic_range;
  if (truth.bistatic_range <= fine.unambiguous_range()) {
    rep.ambiguity_possible = false;
    rep.explanation =
        "no ambiguity possible: target bistatic range " +
        fmt_g(truth.bistatic_range) + " m is within the fine unambiguous range " +
        fmt_g(fine.unambiguous_range()) + " m";
    return rep;
  }
  rep.ambiguity_possible = true;

  const auto streams = rng::TrialStreams::derive(seed, 0);
  const TrialFrames frames = build_trial_frames(
      sc.scene, sc.target, sc.system, SnrMode::normalized(snr_db), streams);

  // Naive single-stage consumer of the fine frame: scans one full aliasing
  // period from zero, which is all the plan can distinguish.
  SearchGrid naive;
  const double period_s = fine.unambiguous_range() / kSpeedOfLight;
  naive.delay.clear();
  {
    const double step = 0.25 / sc.system.bandwidth();
    const double hi = period_s * (1.0 - 1e-9);
    for (double t = 0.0; t <= hi; t += step) naive.delay.push_back(t);
  }
  naive.doppler = {0.0};
  const auto [alo, ahi] =
      area_sector(sc.scene.rx_position, sc.scene.rx_boresight, sc.scene.area);
  {
    const double step = 0.5 / sc.system.n_rx;
    const int segs =
        std::max(1, static_cast<int>(std::ceil((ahi - alo) / step)));
    for (int i = 0; i <= segs; ++i)
      naive.aoa.push_back(alo + (ahi - alo) * i / segs);
  }
  const EstimateResult single =
      grid_search(frames.fine, naive, sc.sweep.estimator);
  rep.single_stage_range_m = single.bistatic_range;
  rep.single_stage_range_error_m =
      std::abs(single.bistatic_range - truth.bistatic_range);
  rep.alias_multiples = static_cast<int>(std::llround(
      rep.single_stage_range_error_m / fine.unambiguous_range()));

  const TwoStageResult two =
      two_stage_estimate(frames, sc.scene, sc.system, sc.sweep.estimator);
  rep.two_stage_range_error_m =
      std::abs(two.result.bistatic_range - truth.bistatic_range);
  const Eigen::Vector2d est =
      two.result.position ? *two.result.position : sc.scene.rx_position;
  rep.two_stage_position_error_m = (est - sc.target.position).norm();
  rep.explanation = "single-stage estimate aliased by " +
                    std::to_string(rep.alias_multiples) +
                    " period(s) of the fine plan";
  return rep;
}

std::string ambiguity_report_text(const AmbiguityReport& rep) {
  std::ostringstream out;
  out << "fine unambiguous range: " << fmt_g(rep.fine_unambiguous_range_m)
      << " m\n";
  out << "target bistatic range:  " << fmt_g(rep.target_range_m) << " m\n";
  if (!rep.ambiguity_possible) {
    out << rep.explanation << '\n';
    return out.str();
  }
  out << "snr: " << fmt_g(rep.snr_db) << " dB\n";
  out << "single-stage range:     " << fmt_g(rep.single_stage_range_m)
      << " m (error " << fmt_g(rep.single_stage_range_error_m) << " m, "
      << rep.alias_multiples << " alias period(s))\n";
  out << "two-stage range error:  " << fmt_g(rep.two_stage_range_error_m)
      << " m\n";
  out << "two-stage position error: " << fmt_g(rep.two_stage_position_error_m)
      << " m\n";
  return out.str();
}

std::vector<PebPoint> peb_table(const ScenarioConfig& sc) {
  std::vector<double> axis = sc.sweep.snr_db;
  if (axis.empty()) {
    axis.push_back(link_snr_db(sc.system, sc.scene, sc.target));
  }
  std::vector<PebPoint> out;
  out.reserve(axis.size());
  for (double s : axis) {
    const FimParams fp = point_fim_params(sc, sc.target, s);
    PebPoint p;
    p.snr_db = s;
    p.peb_m = peb(fp, sc.scene);
    const auto var = crlb(fp);
    p.range_crlb_m = kSpeedOfLight * std::sqrt(var(3));
    p.aoa_crlb_rad = std::sqrt(var(4));
    out.push_back(p);
  }
  return out;
}

}  // namespace bisense
