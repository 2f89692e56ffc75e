#include "bisense/estimator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "bisense/bounds.hpp"

namespace bisense {

namespace {

constexpr double kBaselineMargin = 1e-6;  // m, keeps the ellipse nondegenerate

std::vector<double> axis_by_step(double lo, double hi, double max_step) {
  if (!(hi > lo)) return {lo};
  const int segments = std::max(1, static_cast<int>(std::ceil((hi - lo) / max_step)));
  std::vector<double> axis(segments + 1);
  const double step = (hi - lo) / segments;
  for (int i = 0; i <= segments; ++i) axis[i] = lo + i * step;
  return axis;
}

// Per-doppler correlator state: symbols folded along time, so every delay
// hypothesis costs one pass over subcarriers.
struct DopplerFold {
  Eigen::MatrixXcd d;  // n_rx x K

  DopplerFold(const RxGrid& g, double doppler) {
    const int N = g.n_rx, K = g.subcarriers, M = g.symbols;
    Eigen::VectorXcd pm(M);
    for (int m = 0; m < M; ++m) {
      const double ph = -2.0 * kPi * m * g.symbol_duration * doppler;
      pm(m) = {std::cos(ph), std::sin(ph)};
    }
    d.resize(N, K);
    for (int n = 0; n < N; ++n) {
      for (int k = 0; k < K; ++k) {
        std::complex<double> acc = 0;
        for (int m = 0; m < M; ++m) {
          acc += std::conj(g.x.values(k, m)) * pm(m) * g.at(n, k, m);
        }
        d(n, k) = acc;
      }
    }
  }

  Eigen::VectorXcd correlate(const std::vector<double>& rel, double delay) const {
    const int K = static_cast<int>(rel.size());
    Eigen::VectorXcd ph(K);
    for (int k = 0; k < K; ++k) {
      const double a = 2.0 * kPi * rel[k] * delay;
      ph(k) = {std::cos(a), std::sin(a)};
    }
    return d * ph;
  }
};

// Shared evaluation context for one search; caches the doppler fold so
// refinement probes stay cheap in the common single-doppler case.
struct Evaluator {
  const RxGrid& grid;
  std::vector<double> rel;
  double denom;
  double cached_doppler;
  DopplerFold fold;

  Evaluator(const RxGrid& g, double doppler0)
      : grid(g),
        rel(g.plan.relative_offsets()),
        denom(g.n_rx * g.x.energy()),
        cached_doppler(doppler0),
        fold(g, doppler0) {}

  void retune(double doppler) {
    if (doppler != cached_doppler) {
      fold = DopplerFold(grid, doppler);
      cached_doppler = doppler;
    }
  }

  double value(const Eigen::VectorXcd& steer, double delay, double doppler) {
    retune(doppler);
    const Eigen::VectorXcd xi = fold.correlate(rel, delay);
    return std::norm(steer.dot(xi)) / denom;
  }

  double value(double aoa, double delay, double doppler) {
    return value(steering_vector(grid.n_rx, aoa), delay, doppler);
  }
};

struct ParabolaAxis {
  double coordinate;
  double step;
  double lo, hi;
};

// Vertex offset of the parabola through three equispaced samples, clamped to
// one step; zero when the samples are degenerate.
double parabola_offset(double ym, double y0, double yp) {
  const double denom = ym - 2.0 * y0 + yp;
  if (!(std::abs(denom) > 0.0)) return 0.0;
  return std::clamp(0.5 * (ym - yp) / denom, -1.0, 1.0);
}

}  // namespace

double gml_objective(const RxGrid& grid, double delay, double doppler,
                     double aoa) {
  // Reference path: de-rotate every element by the hypothesis phases,
  // correlate with the known symbols, combine across the array.
  const int N = grid.n_rx, K = grid.subcarriers, M = grid.symbols;
  const std::vector<double> rel = grid.plan.relative_offsets();
  Eigen::VectorXcd dk(K), pm(M);
  for (int k = 0; k < K; ++k) {
    const double a = 2.0 * kPi * rel[k] * delay;
    dk(k) = {std::cos(a), std::sin(a)};
  }
  for (int m = 0; m < M; ++m) {
    const double a = -2.0 * kPi * m * grid.symbol_duration * doppler;
    pm(m) = {std::cos(a), std::sin(a)};
  }
  Eigen::VectorXcd xi(N);
  for (int n = 0; n < N; ++n) {
    std::complex<double> acc = 0;
    for (int k = 0; k < K; ++k) {
      std::complex<double> inner = 0;
      for (int m = 0; m < M; ++m) {
        inner += std::conj(grid.x.values(k, m)) * pm(m) * grid.at(n, k, m);
      }
      acc += dk(k) * inner;
    }
    xi(n) = acc;
  }
  const Eigen::VectorXcd b = steering_vector(N, aoa);
  return std::norm(b.dot(xi)) / (N * grid.x.energy());
}

EstimateResult grid_search(const RxGrid& grid, const SearchGrid& search,
                           const EstimatorOptions& opts) {
  if (search.delay.empty() || search.doppler.empty() || search.aoa.empty()) {
    throw ConfigError("grid_search: every axis needs at least one point");
  }
  const int nt = static_cast<int>(search.delay.size());
  const int nf = static_cast<int>(search.doppler.size());
  const int na = static_cast<int>(search.aoa.size());
  const int N = grid.n_rx;

  Eigen::MatrixXcd steer(N, na);
  for (int a = 0; a < na; ++a) steer.col(a) = steering_vector(N, search.aoa[a]);

  Evaluator ev(grid, search.doppler.front());

  // Values laid out delay-major, then aoa, then doppler: the scan order below
  // makes ties resolve to the smallest delay, then aoa, then doppler.
  std::vector<double> values(static_cast<std::size_t>(nt) * na * nf);
  for (int f = 0; f < nf; ++f) {
    ev.retune(search.doppler[f]);
    for (int t = 0; t < nt; ++t) {
      const Eigen::VectorXcd xi = ev.fold.correlate(ev.rel, search.delay[t]);
      const Eigen::VectorXcd comb = steer.adjoint() * xi;
      for (int a = 0; a < na; ++a) {
        values[(static_cast<std::size_t>(t) * na + a) * nf + f] =
            std::norm(comb(a)) / ev.denom;
      }
    }
  }

  std::size_t best = 0;
  for (std::size_t i = 1; i < values.size(); ++i) {
    if (values[i] > values[best]) best = i;
  }
  int bt = static_cast<int>(best / (static_cast<std::size_t>(na) * nf));
  int ba = static_cast<int>((best / nf) % na);
  int bf = static_cast<int>(best % nf);

  EstimateResult res;
  res.delay = search.delay[bt];
  res.aoa = search.aoa[ba];
  res.doppler = search.doppler[bf];
  res.score = values[best];

  if (opts.interpolate) {
    auto stored = [&](int t, int a, int f) {
      return values[(static_cast<std::size_t>(t) * na + a) * nf + f];
    };
    // First pass: classic three-point parabola on the stored grid samples,
    // per axis, only when the peak is interior.
    if (nt >= 3 && bt > 0 && bt < nt - 1) {
      const double off = parabola_offset(stored(bt - 1, ba, bf),
                                         stored(bt, ba, bf),
                                         stored(bt + 1, ba, bf));
      res.delay += off * (search.delay[bt + 1] - search.delay[bt]);
    }
    if (na >= 3 && ba > 0 && ba < na - 1) {
      const double off = parabola_offset(stored(bt, ba - 1, bf),
                                         stored(bt, ba, bf),
                                         stored(bt, ba + 1, bf));
      res.aoa += off * (search.aoa[ba + 1] - search.aoa[ba]);
    }
    if (nf >= 3 && bf > 0 && bf < nf - 1) {
      const double off = parabola_offset(stored(bt, ba, bf - 1),
                                         stored(bt, ba, bf),
                                         stored(bt, ba, bf + 1));
      res.doppler += off * (search.doppler[bf + 1] - search.doppler[bf]);
    }

    // Re-evaluated passes with a shrinking bracket wring out the remaining
    // quantization; each pass alternates the free axes.
    ParabolaAxis dax{res.delay, 0, search.delay.front(), search.delay.back()};
    ParabolaAxis aax{res.aoa, 0, search.aoa.front(), search.aoa.back()};
    ParabolaAxis fax{res.doppler, 0, search.doppler.front(), search.doppler.back()};
    dax.step = nt > 1 ? 0.25 * (search.delay[1] - search.delay[0]) : 0.0;
    aax.step = na > 1 ? 0.25 * (search.aoa[1] - search.aoa[0]) : 0.0;
    fax.step = nf > 1 ? 0.25 * (search.doppler[1] - search.doppler[0]) : 0.0;
    for (int round = 0; round < opts.refine_rounds; ++round) {
      if (nt > 1) {
        const double ym = ev.value(aax.coordinate, dax.coordinate - dax.step, fax.coordinate);
        const double y0 = ev.value(aax.coordinate, dax.coordinate, fax.coordinate);
        const double yp = ev.value(aax.coordinate, dax.coordinate + dax.step, fax.coordinate);
        dax.coordinate = std::clamp(
            dax.coordinate + parabola_offset(ym, y0, yp) * dax.step, dax.lo, dax.hi);
        dax.step *= 0.25;
      }
      if (na > 1) {
        const double ym = ev.value(aax.coordinate - aax.step, dax.coordinate, fax.coordinate);
        const double y0 = ev.value(aax.coordinate, dax.coordinate, fax.coordinate);
        const double yp = ev.value(aax.coordinate + aax.step, dax.coordinate, fax.coordinate);
        aax.coordinate = std::clamp(
            aax.coordinate + parabola_offset(ym, y0, yp) * aax.step, aax.lo, aax.hi);
        aax.step *= 0.25;
      }
      if (nf > 1) {
        const double ym = ev.value(aax.coordinate, dax.coordinate, fax.coordinate - fax.step);
        const double y0 = ev.value(aax.coordinate, dax.coordinate, fax.coordinate);
        const double yp = ev.value(aax.coordinate, dax.coordinate, fax.coordinate + fax.step);
        fax.coordinate = std::clamp(
            fax.coordinate + parabola_offset(ym, y0, yp) * fax.step, fax.lo, fax.hi);
        fax.step *= 0.25;
      }
    }
    res.delay = dax.coordinate;
    res.aoa = aax.coordinate;
    res.doppler = fax.coordinate;
    res.score = ev.value(res.aoa, res.delay, res.doppler);
  }

  res.bistatic_range = kSpeedOfLight * res.delay;
  return res;
}

namespace {

std::vector<double> doppler_axis(const SystemConfig& cfg,
                                 const EstimatorOptions& opts) {
  if (!opts.doppler_search || opts.doppler_span_hz <= 0.0) return {0.0};
  const double res = 1.0 / (cfg.symbols * cfg.symbol_duration());
  return axis_by_step(-0.5 * opts.doppler_span_hz, 0.5 * opts.doppler_span_hz,
                      0.25 * res);
}

void attach_position(EstimateResult& res, const SceneGeometry& scene) {
  if (res.bistatic_range > scene.baseline() + 0.5 * kBaselineMargin) {
    res.position = position_from_bistatic(res.bistatic_range, res.aoa, scene);
  } else {
    res.position.reset();
  }
}

}  // namespace

EstimateResult coarse_stage(const RxGrid& grid, const SceneGeometry& scene,
                            const SystemConfig& cfg,
                            const EstimatorOptions& opts) {
  if (grid.plan.stage != PlanStage::coarse) {
    throw ConfigError("coarse_stage: grid was synthesized with the wrong plan");
  }
  const double r_max = max_bistatic_range(scene);
  const double r_unamb = grid.plan.unambiguous_range();
  if (r_max >= r_unamb) {
    throw ConfigError(
        "coarse_stage: area bistatic range " + std::to_string(r_max) +
        " m reaches the unambiguous range " + std::to_string(r_unamb) + " m");
  }
  const double L = scene.baseline();
  SearchGrid search;
  search.delay = axis_by_step((L + kBaselineMargin) / kSpeedOfLight,
                              r_max / kSpeedOfLight, 0.25 / cfg.coarse_bandwidth());
  search.doppler = doppler_axis(cfg, opts);
  const auto [lo, hi] = area_sector(scene.rx_position, scene.rx_boresight, scene.area);
  search.aoa = axis_by_step(lo, hi, 0.5 / cfg.n_rx);  // quarter of 2/N beamwidth
  EstimateResult res = grid_search(grid, search, opts);
  res.stage = EstimateStage::coarse;
  attach_position(res, scene);
  return res;
}

EstimateResult fine_stage(const RxGrid& grid, const EstimateResult& coarse,
                          double coarse_range_peb_m, const SceneGeometry& scene,
                          const SystemConfig& cfg, const EstimatorOptions& opts) {
  if (grid.plan.stage != PlanStage::fine) {
    throw ConfigError("fine_stage: grid was synthesized with the wrong plan");
  }
  const double coarse_res = kSpeedOfLight / cfg.coarse_bandwidth();
  // Never span a full aliasing period of the dense plan, or the window can
  // admit a folded copy of the peak and the disambiguation is lost.
  const double clamp_w = 0.9 * grid.plan.unambiguous_range();
  bool fallback = false;
  double driven = 6.0 * coarse_range_peb_m;
  if (!std::isfinite(driven) || driven <= 0.0) {
    driven = 0.0;
    fallback = true;
  }
  const double window = std::min(2.0 * std::max(driven, 2.0 * coarse_res), clamp_w);

  const double L = scene.baseline();
  const double lo_m = std::max(L + kBaselineMargin,
                               coarse.bistatic_range - 0.5 * window);
  const double hi_m = std::min(coarse.bistatic_range + 0.5 * window,
                               std::max(lo_m, max_bistatic_range(scene)));
  SearchGrid search;
  search.delay = axis_by_step(lo_m / kSpeedOfLight, hi_m / kSpeedOfLight,
                              0.25 / cfg.bandwidth());
  search.doppler = doppler_axis(cfg, opts);
  const double bw = 2.0 / cfg.n_rx;
  const double half = 0.5 * kPi - 1e-3;
  const double alo = std::clamp(coarse.aoa - 3.0 * bw, -half, half);
  const double ahi = std::clamp(coarse.aoa + 3.0 * bw, -half, half);
  search.aoa = axis_by_step(alo, ahi, 0.25 * bw);

  EstimateResult res = grid_search(grid, search, opts);
  res.stage = EstimateStage::fine;
  res.window_m = window;
  res.window_fallback = fallback;
  attach_position(res, scene);
  return res;
}

TrialFrames build_trial_frames(const SceneGeometry& scene,
                               const TargetState& target,
                               const SystemConfig& cfg, const SnrMode& mode,
                               const rng::TrialStreams& streams) {
  cfg.validate();
  scene.validate();
  if (!scene.area.contains(target.position)) {
    throw ConfigError("trial: target outside the surveillance area");
  }
  TrialFrames f;
  f.coarse_plan = make_plan(PlanStage::coarse, cfg);
  f.fine_plan = make_plan(PlanStage::fine, cfg);
  const SymbolGrid xc =
      generate_symbols(cfg.active_subcarriers, cfg.symbols, streams.symbols_coarse);
  const SymbolGrid xf =
      generate_symbols(cfg.active_subcarriers, cfg.symbols, streams.symbols_fine);
  const auto [slo, shi] =
      area_sector(scene.tx_position, scene.tx_boresight, scene.area);
  const Beamformer beam =
      design_sector_beamformer(cfg.n_tx, slo, shi, std::max(2 * cfg.n_tx, 64));
  rng::Stream phase(streams.phase0);
  f.chan_coarse = realize_channel(scene, target, cfg, beam, phase);
  f.chan_fine = realize_channel(scene, target, cfg, beam, phase);
  f.truth = f.chan_coarse.geo;
  f.coarse = synthesize_rx(cfg, f.coarse_plan, xc, f.chan_coarse, mode,
                           streams.noise_coarse);
  f.fine = synthesize_rx(cfg, f.fine_plan, xf, f.chan_fine, mode,
                         streams.noise_fine);
  return f;
}

TwoStageResult two_stage_estimate(const TrialFrames& frames,
                                  const SceneGeometry& scene,
                                  const SystemConfig& cfg,
                                  const EstimatorOptions& opts) {
  TwoStageResult out;
  out.coarse = coarse_stage(frames.coarse, scene, cfg, opts);

  // Range bound of the coarse stage at its own estimate; sizing information
  // for the fine window only, never fed back into the data.
  double peb_range = std::numeric_limits<double>::quiet_NaN();
  try {
    FimParams fp;
    fp.amp = frames.coarse.amplitude;
    fp.amplitude = 1.0;
    fp.phase = 0.0;
    fp.doppler = out.coarse.doppler;
    fp.delay = out.coarse.delay;
    fp.aoa = out.coarse.aoa;
    fp.noise_var = frames.coarse.noise_var;
    fp.cfg = cfg;
    fp.plan = frames.coarse.plan;
    fp.symbols = frames.coarse.x;
    peb_range = range_crlb_m(fp);
  } catch (const std::exception&) {
    // fall through with NaN; fine_stage flags the fallback window
  }
  out.coarse_range_peb_m = peb_range;

  out.result = fine_stage(frames.fine, out.coarse, peb_range, scene, cfg, opts);
  out.result.stage = EstimateStage::two_stage;
  return out;
}

TwoStageResult two_stage_estimate(const SceneGeometry& scene,
                                  const TargetState& target,
                                  const SystemConfig& cfg, const SnrMode& mode,
                                  const rng::TrialStreams& streams,
                                  const EstimatorOptions& opts) {
  const TrialFrames frames =
      build_trial_frames(scene, target, cfg, mode, streams);
  return two_stage_estimate(frames, scene, cfg, opts);
}

}  // namespace bisense
