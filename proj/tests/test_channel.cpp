#include <cmath>
#include <complex>
#include <cstdio>
#include <limits>

#include "bisense/channel.hpp"
#include "doctest.h"

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

// Reference synthesis, one sample at a time from first principles. Kept
// independent of the production loop on purpose.
std::complex<double> reference_sample(const RxGrid& g,
                                      const ChannelRealization& chan,
                                      std::complex<double> scale, int n, int k,
                                      int m) {
  const int N = g.n_rx;
  const double mu = n - 0.5 * (N - 1);
  const double bph = mu * kPi * std::sin(chan.geo.aoa);
  const std::complex<double> b{std::cos(bph), std::sin(bph)};
  const double rel = g.plan.frequency_offsets[k] - g.plan.frequency_offsets[0];
  const double ph = 2.0 * kPi * (m * g.symbol_duration * chan.geo.doppler -
                                 rel * chan.geo.delay);
  const std::complex<double> rot{std::cos(ph), std::sin(ph)};
  return scale * b * rot * g.x.values(k, m);
}

}  // namespace

TEST_CASE("steering vector phases and norm") {
  const int n = 16;
  const double ang = 0.31;
  const Eigen::VectorXcd a = steering_vector(n, ang);
  CHECK(a.size() == n);
  CHECK(a.norm() == doctest::Approx(std::sqrt(16.0)).epsilon(1e-12));
  for (int i = 0; i < n; ++i) {
    CHECK(std::abs(a(i)) == doctest::Approx(1.0).epsilon(1e-12));
    const double want = (i - 0.5 * (n - 1)) * kPi * std::sin(ang);
    CHECK(std::arg(a(i) * std::polar(1.0, -want)) ==
          doctest::Approx(0.0).epsilon(1e-9));
  }
  // Mirror symmetry: negating the angle conjugates the response.
  const Eigen::VectorXcd am = steering_vector(n, -ang);
  CHECK((am - a.conjugate()).norm() < 1e-12);
  // Boresight response is flat.
  const Eigen::VectorXcd a0 = steering_vector(n, 0.0);
  CHECK((a0 - Eigen::VectorXcd::Ones(n)).norm() < 1e-12);
  CHECK(steering_vector(1, 0.7)(0) == std::complex<double>{1.0, 0.0});
}

TEST_CASE("path loss factors match hand-computed values") {
  CHECK(path_loss_tx(1.0, 7.9) ==
        doctest::Approx(0.0012750756536764568).epsilon(1e-12));
  CHECK(path_loss_rx(0.3e12, 7.9) ==
        doctest::Approx(1.0132695360685518e-10).epsilon(1e-12));
  // Inverse-square in range on both legs, linear in cross section.
  CHECK(path_loss_tx(2.0, 7.9) ==
        doctest::Approx(2.0 * path_loss_tx(1.0, 7.9)).epsilon(1e-12));
  CHECK(path_loss_tx(1.0, 15.8) ==
        doctest::Approx(path_loss_tx(1.0, 7.9) / 4.0).epsilon(1e-12));
  CHECK(path_loss_rx(0.3e12, 15.8) ==
        doctest::Approx(path_loss_rx(0.3e12, 7.9) / 4.0).epsilon(1e-12));
  CHECK_THROWS_AS(path_loss_tx(0.0, 1.0), ConfigError);
  CHECK_THROWS_AS(path_loss_rx(0.3e12, 0.0), ConfigError);
}

TEST_CASE("channel realization composes losses, delay phase and beam response") {
  const SceneGeometry scene = eval_scene();
  const SystemConfig cfg = desk_cfg();
  TargetState t;
  t.position = {7.49, 2.51};
  const Beamformer beam = design_sector_beamformer(cfg.n_tx, -0.6, 0.6, 64);
  rng::Stream rs(99);
  const ChannelRealization ch = realize_channel(scene, t, cfg, beam, rs);

  const double want_mag = std::sqrt(path_loss_tx(1.0, ch.geo.range_tx) *
                                    path_loss_rx(cfg.f_c, ch.geo.range_rx));
  CHECK(std::abs(ch.eps) == doctest::Approx(want_mag).epsilon(1e-12));
  CHECK(ch.phase0 >= 0.0);
  CHECK(ch.phase0 < 2.0 * kPi);
  const double want_ph =
      -(2.0 * kPi * cfg.f_c * ch.geo.delay + ch.phase0);
  CHECK(std::arg(ch.eps * std::polar(1.0, -want_ph)) ==
        doctest::Approx(0.0).epsilon(1e-9));
  const std::complex<double> want_h = beam.response(ch.geo.aod) * ch.eps;
  CHECK(std::abs(ch.h_eff - want_h) < 1e-18);

  // Two realizations from different stream states differ only in phase0.
  const ChannelRealization ch2 = realize_channel(scene, t, cfg, beam, rs);
  CHECK(std::abs(ch2.eps) == doctest::Approx(std::abs(ch.eps)).epsilon(1e-12));
  CHECK(ch2.phase0 != ch.phase0);
}

TEST_CASE("noiseless synthesis matches the reference model sample by sample") {
  const SceneGeometry scene = eval_scene();
  const SystemConfig cfg = desk_cfg();
  TargetState t;
  t.position = {6.2, 3.3};
  t.velocity = {4.0, -2.0};
  const Beamformer beam = design_sector_beamformer(cfg.n_tx, -0.6, 0.6, 64);
  rng::Stream rs(7);
  const ChannelRealization ch = realize_channel(scene, t, cfg, beam, rs);
  const SymbolGrid x = generate_symbols(cfg.active_subcarriers, cfg.symbols, 5);

  for (PlanStage stage : {PlanStage::coarse, PlanStage::fine}) {
    const SubcarrierPlan plan = make_plan(stage, cfg);
    // Infinite SNR turns the noise off entirely.
    const double inf = std::numeric_limits<double>::infinity();
    const RxGrid g = synthesize_rx(cfg, plan, x, ch,
                                   SnrMode::normalized(inf), 1);
    CHECK(g.noise_var == 0.0);
    CHECK(g.amplitude == doctest::Approx(1.0).epsilon(1e-12));
    const std::complex<double> scale = ch.h_eff / std::abs(ch.h_eff);
    for (int n : {0, 3, cfg.n_rx - 1}) {
      for (int k : {0, 7, cfg.active_subcarriers - 1}) {
        for (int m : {0, 4, cfg.symbols - 1}) {
          const std::complex<double> want =
              reference_sample(g, ch, scale, n, k, m);
          CHECK(std::abs(g.at(n, k, m) - want) < 1e-12);
        }
      }
    }
  }
}

TEST_CASE("physical synthesis carries the link budget amplitude") {
  const SceneGeometry scene = eval_scene();
  SystemConfig cfg = desk_cfg();
  cfg.tx_power_gain = 2.5;
  cfg.rx_element_gain = 1.5;
  TargetState t;
  t.position = {7.49, 2.51};
  t.rcs = 3.0;
  const Beamformer beam = design_sector_beamformer(cfg.n_tx, -0.6, 0.6, 64);
  rng::Stream rs(11);
  const ChannelRealization ch = realize_channel(scene, t, cfg, beam, rs);
  const SymbolGrid x = generate_symbols(cfg.active_subcarriers, cfg.symbols, 6);
  const SubcarrierPlan plan = make_plan(PlanStage::coarse, cfg);
  const RxGrid g =
      synthesize_rx(cfg, plan, x, ch, SnrMode::physical_budget(), 2);

  const double want_amp =
      std::sqrt(cfg.tx_power_gain * cfg.rx_element_gain /
                cfg.active_subcarriers) *
      std::abs(ch.eps);
  CHECK(g.amplitude == doctest::Approx(want_amp).epsilon(1e-12));
  CHECK(g.noise_var == doctest::Approx(cfg.noise_psd * cfg.subcarrier_spacing)
                           .epsilon(1e-12));
  // Per-element deterministic power equals amplitude^2: unit-modulus symbols,
  // unit-modulus steering entries, beam response reduced to its phase.
  const double snr_want =
      10.0 * std::log10(want_amp * want_amp / g.noise_var);
  CHECK(link_snr_db(cfg, scene, t) == doctest::Approx(snr_want).epsilon(1e-9));
}

TEST_CASE("closed-form link snr reproduces frozen evaluation values") {
  const SceneGeometry scene = eval_scene();
  SystemConfig cfg;  // full profile
  TargetState t;
  t.position = {7.49, 2.51};
  CHECK(link_snr_db(cfg, scene, t) ==
        doctest::Approx(-20.927226416050566).epsilon(1e-12));
  cfg.snr_over_total_subcarriers = true;
  CHECK(link_snr_db(cfg, scene, t) ==
        doctest::Approx(-27.916926459410753).epsilon(1e-12));
}

TEST_CASE("measured snr tracks the requested normalized snr") {
  const SceneGeometry scene = eval_scene();
  const SystemConfig cfg = desk_cfg();
  TargetState t;
  t.position = {7.49, 2.51};
  const Beamformer beam = design_sector_beamformer(cfg.n_tx, -0.6, 0.6, 64);
  rng::Stream rs(3);
  const ChannelRealization ch = realize_channel(scene, t, cfg, beam, rs);
  const SubcarrierPlan plan = make_plan(PlanStage::fine, cfg);

  for (double snr_db : {-10.0, 0.0, 10.0}) {
    double ps = 0, pn = 0;
    std::size_t count = 0;
    for (int rep = 0; rep < 100; ++rep) {
      const SymbolGrid x =
          generate_symbols(cfg.active_subcarriers, cfg.symbols, 100 + rep);
      const RxGrid g = synthesize_rx(cfg, plan, x, ch,
                                     SnrMode::normalized(snr_db), 1000 + rep);
      const std::complex<double> scale = ch.h_eff / std::abs(ch.h_eff);
      for (int n = 0; n < g.n_rx; ++n) {
        for (int k = 0; k < g.subcarriers; ++k) {
          for (int m = 0; m < g.symbols; ++m) {
            const std::complex<double> s =
                reference_sample(g, ch, scale, n, k, m);
            ps += std::norm(s);
            pn += std::norm(g.at(n, k, m) - s);
            ++count;
          }
        }
      }
    }
    CHECK(count >= 100000);
    const double measured = 10.0 * std::log10(ps / pn);
    CHECK(std::abs(measured - snr_db) < 0.1);
  }
}

TEST_CASE("noise is circular with matched real and imaginary power") {
  rng::Stream s(17);
  const double var = 0.37;
  double re2 = 0, im2 = 0, cross = 0;
  std::complex<double> mean = 0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const std::complex<double> z = s.cgaussian(var);
    re2 += z.real() * z.real();
    im2 += z.imag() * z.imag();
    cross += z.real() * z.imag();
    mean += z;
  }
  CHECK(re2 / n == doctest::Approx(var / 2).epsilon(0.02));
  CHECK(im2 / n == doctest::Approx(var / 2).epsilon(0.02));
  CHECK(std::abs(cross / n) < 0.01 * var);
  CHECK(std::abs(mean) / n < 0.01 * std::sqrt(var));
}

TEST_CASE("grid dump round trips through the binary format") {
  const SceneGeometry scene = eval_scene();
  const SystemConfig cfg = desk_cfg();
  TargetState t;
  t.position = {7.49, 2.51};
  const Beamformer beam = design_sector_beamformer(cfg.n_tx, -0.6, 0.6, 64);
  rng::Stream rs(5);
  const ChannelRealization ch = realize_channel(scene, t, cfg, beam, rs);
  const SymbolGrid x = generate_symbols(cfg.active_subcarriers, cfg.symbols, 8);
  const SubcarrierPlan plan = make_plan(PlanStage::fine, cfg);
  const RxGrid g =
      synthesize_rx(cfg, plan, x, ch, SnrMode::normalized(3.0), 77);

  const std::string path = "test_grid_roundtrip.rxg";
  dump_rx_grid(path, g);
  const RxGrid back = load_rx_grid(path);
  std::remove(path.c_str());

  CHECK(back.n_rx == g.n_rx);
  CHECK(back.subcarriers == g.subcarriers);
  CHECK(back.symbols == g.symbols);
  CHECK(back.plan.stage == g.plan.stage);
  CHECK(back.plan.indices == g.plan.indices);
  CHECK(back.noise_seed == g.noise_seed);
  CHECK(back.noise_var == doctest::Approx(g.noise_var).epsilon(1e-12));
  CHECK(back.symbol_duration ==
        doctest::Approx(g.symbol_duration).epsilon(1e-12));
  // Samples are stored as complex64; expect float precision, not double.
  double worst = 0;
  for (std::size_t i = 0; i < g.y.size(); ++i) {
    worst = std::max(worst, std::abs(back.y[i] - g.y[i]));
  }
  CHECK(worst < 1e-6);
  CHECK((back.x.values - g.x.values).norm() < 1e-5);

  CHECK_THROWS(load_rx_grid("does_not_exist.rxg"));
}
