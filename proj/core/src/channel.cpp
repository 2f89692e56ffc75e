#include "bisense/channel.hpp"

#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>

namespace bisense {

Eigen::VectorXcd steering_vector(int n, double angle) {
  if (n < 1) throw ConfigError("steering_vector: n must be positive");
  Eigen::VectorXcd a(n);
  const double base = kPi * std::sin(angle);
  const double center = 0.5 * (n - 1);
  for (int i = 0; i < n; ++i) {
    const double ph = (i - center) * base;
    a(i) = {std::cos(ph), std::sin(ph)};
  }
  return a;
}

double path_loss_tx(double rcs_m2, double range_m) {
  if (rcs_m2 <= 0.0 || range_m <= 0.0) {
    throw ConfigError("path_loss_tx: rcs and range must be positive");
  }
  return rcs_m2 / (4.0 * kPi * range_m * range_m);
}

double path_loss_rx(double carrier_hz, double range_m) {
  if (carrier_hz <= 0.0 || range_m <= 0.0) {
    throw ConfigError("path_loss_rx: carrier and range must be positive");
  }
  const double t = kSpeedOfLight / (4.0 * kPi * carrier_hz * range_m);
  return t * t;
}

ChannelRealization realize_channel(const SceneGeometry& scene,
                                   const TargetState& target,
                                   const SystemConfig& cfg,
                                   const Beamformer& beam, rng::Stream& rng) {
  ChannelRealization ch;
  ch.geo = forward_geometry(scene, target, cfg.f_c);
  ch.phase0 = rng.uniform(0.0, 2.0 * kPi);
  const double xi = path_loss_tx(target.rcs, ch.geo.range_tx);
  const double zeta = path_loss_rx(cfg.f_c, ch.geo.range_rx);
  const double mag = std::sqrt(xi * zeta);
  const double ph = -(2.0 * kPi * cfg.f_c * ch.geo.delay + ch.phase0);
  ch.eps = mag * std::complex<double>{std::cos(ph), std::sin(ph)};
  ch.h_eff = beam.response(ch.geo.aod) * ch.eps;
  return ch;
}

RxGrid synthesize_rx(const SystemConfig& cfg, const SubcarrierPlan& plan,
                     const SymbolGrid& x, const ChannelRealization& chan,
                     const SnrMode& mode, std::uint64_t noise_seed) {
  if (x.subcarriers() != plan.count()) {
    throw ConfigError("synthesize_rx: symbol grid does not match the plan");
  }
  const int N = cfg.n_rx;
  const int K = plan.count();
  const int M = x.symbols();

  RxGrid g;
  g.n_rx = N;
  g.subcarriers = K;
  g.symbols = M;
  g.x = x;
  g.plan = plan;
  g.symbol_duration = cfg.symbol_duration();
  g.noise_seed = noise_seed;

  // Deterministic per-element scale |A h|. Normalized mode pins it to one and
  // puts the requested SNR entirely into the noise variance; physical mode
  // spreads the configured power-gain product over the active subcarriers.
  // The beam response keeps only its phase in the scale, the configured gain
  // already being array-level.
  const double hmag = std::abs(chan.h_eff);
  if (!(hmag > 0.0)) throw ConfigError("synthesize_rx: zero channel response");
  std::complex<double> scale;
  if (mode.physical) {
    const double a =
        std::sqrt(cfg.tx_power_gain * cfg.rx_element_gain / cfg.active_subcarriers);
    scale = a * std::abs(chan.eps) * (chan.h_eff / hmag);
    g.noise_var = cfg.noise_psd * cfg.subcarrier_spacing;
  } else {
    scale = chan.h_eff / hmag;
    g.noise_var = std::pow(10.0, -mode.snr_db / 10.0);
  }
  g.amplitude = std::abs(scale);

  const Eigen::VectorXcd b = steering_vector(N, chan.geo.aoa);
  const std::vector<double> rel = plan.relative_offsets();

  // Separable phase ramps: delay along subcarriers, doppler along symbols.
  Eigen::VectorXcd dk(K), pm(M);
  for (int k = 0; k < K; ++k) {
    const double ph = -2.0 * kPi * rel[k] * chan.geo.delay;
    dk(k) = {std::cos(ph), std::sin(ph)};
  }
  for (int m = 0; m < M; ++m) {
    const double ph = 2.0 * kPi * m * g.symbol_duration * chan.geo.doppler;
    pm(m) = {std::cos(ph), std::sin(ph)};
  }

  g.y.resize(static_cast<std::size_t>(N) * K * M);
  rng::Stream noise(noise_seed);
  std::size_t idx = 0;
  for (int n = 0; n < N; ++n) {
    const std::complex<double> cn = scale * b(n);
    for (int k = 0; k < K; ++k) {
      const std::complex<double> cnk = cn * dk(k);
      for (int m = 0; m < M; ++m, ++idx) {
        std::complex<double> v = cnk * pm(m) * x.values(k, m);
        if (g.noise_var > 0.0) v += noise.cgaussian(g.noise_var);
        g.y[idx] = v;
      }
    }
  }
  return g;
}

double link_snr_db(const SystemConfig& cfg, const SceneGeometry& scene,
                   const TargetState& target) {
  const BistaticParams geo = forward_geometry(scene, target, cfg.f_c);
  const double xi = path_loss_tx(target.rcs, geo.range_tx);
  const double zeta = path_loss_rx(cfg.f_c, geo.range_rx);
  const int k_div = cfg.snr_over_total_subcarriers ? cfg.total_subcarriers
                                                   : cfg.active_subcarriers;
  const double snr = cfg.tx_power_gain * cfg.rx_element_gain * xi * zeta /
                     (k_div * cfg.noise_psd * cfg.subcarrier_spacing);
  return 10.0 * std::log10(snr);
}

namespace {

constexpr char kMagic[4] = {'B', 'R', 'X', 'G'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
void put(std::ofstream& f, const T& v) {
  f.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

template <typename T>
T get(std::ifstream& f) {
  T v{};
  f.read(reinterpret_cast<char*>(&v), sizeof(v));
  return v;
}

void put_c64(std::ofstream& f, const std::complex<double>& v) {
  const float re = static_cast<float>(v.real());
  const float im = static_cast<float>(v.imag());
  put(f, re);
  put(f, im);
}

std::complex<double> get_c64(std::ifstream& f) {
  const float re = get<float>(f);
  const float im = get<float>(f);
  return {re, im};
}

}  // namespace

void dump_rx_grid(const std::string& path, const RxGrid& grid) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("dump_rx_grid: cannot open " + path);
  f.write(kMagic, 4);
  put(f, kVersion);
  put(f, static_cast<std::uint32_t>(grid.n_rx));
  put(f, static_cast<std::uint32_t>(grid.subcarriers));
  put(f, static_cast<std::uint32_t>(grid.symbols));
  put(f, static_cast<std::uint32_t>(grid.plan.stage == PlanStage::fine ? 1 : 0));
  put(f, grid.plan.base_spacing_hz);
  put(f, grid.plan.effective_spacing_hz);
  put(f, grid.symbol_duration);
  put(f, grid.noise_var);
  put(f, grid.noise_seed);
  for (int k = 0; k < grid.subcarriers; ++k) {
    put(f, static_cast<std::int32_t>(grid.plan.indices[k]));
  }
  for (int k = 0; k < grid.subcarriers; ++k) {
    put(f, grid.plan.frequency_offsets[k]);
  }
  for (const auto& v : grid.y) put_c64(f, v);
  for (int k = 0; k < grid.subcarriers; ++k) {
    for (int m = 0; m < grid.symbols; ++m) put_c64(f, grid.x.values(k, m));
  }
  if (!f) throw std::runtime_error("dump_rx_grid: write failed: " + path);
}

RxGrid load_rx_grid(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("load_rx_grid: cannot open " + path);
  char magic[4];
  f.read(magic, 4);
  if (!f || std::memcmp(magic, kMagic, 4) != 0) {
    throw std::runtime_error("load_rx_grid: bad magic in " + path);
  }
  if (get<std::uint32_t>(f) != kVersion) {
    throw std::runtime_error("load_rx_grid: unsupported version in " + path);
  }
  RxGrid g;
  g.n_rx = static_cast<int>(get<std::uint32_t>(f));
  g.subcarriers = static_cast<int>(get<std::uint32_t>(f));
  g.symbols = static_cast<int>(get<std::uint32_t>(f));
  g.plan.stage = get<std::uint32_t>(f) == 1 ? PlanStage::fine : PlanStage::coarse;
  g.plan.base_spacing_hz = get<double>(f);
  g.plan.effective_spacing_hz = get<double>(f);
  g.symbol_duration = get<double>(f);
  g.noise_var = get<double>(f);
  g.noise_seed = get<std::uint64_t>(f);
  if (g.n_rx <= 0 || g.subcarriers <= 0 || g.symbols <= 0) {
    throw std::runtime_error("load_rx_grid: bad dimensions in " + path);
  }
  g.plan.indices.resize(g.subcarriers);
  for (auto& i : g.plan.indices) i = get<std::int32_t>(f);
  g.plan.frequency_offsets.resize(g.subcarriers);
  for (auto& o : g.plan.frequency_offsets) o = get<double>(f);
  g.y.resize(static_cast<std::size_t>(g.n_rx) * g.subcarriers * g.symbols);
  for (auto& v : g.y) v = get_c64(f);
  g.x.values.resize(g.subcarriers, g.symbols);
  for (int k = 0; k < g.subcarriers; ++k) {
    for (int m = 0; m < g.symbols; ++m) g.x.values(k, m) = get_c64(f);
  }
  if (!f) throw std::runtime_error("load_rx_grid: truncated file: " + path);
  return g;
}

}  // namespace bisense
