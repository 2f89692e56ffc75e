#pragma once

#include <Eigen/Dense>
#include <complex>
#include <cstdint>
#include <string>
#include <vector>

#include "bisense/geometry.hpp"
#include "bisense/rng.hpp"
#include "bisense/system.hpp"
#include "bisense/waveform.hpp"

namespace bisense {

// Half-wavelength ULA response, element i carries phase (i-(n-1)/2)*pi*sin(angle).
// l2 norm is sqrt(n).
Eigen::VectorXcd steering_vector(int n, double angle);

// Target-scatter power factor rcs/(4 pi r^2).
double path_loss_tx(double rcs_m2, double range_m);
// Receive-side spreading factor (c/(4 pi f_c r))^2.
double path_loss_rx(double carrier_hz, double range_m);

// One realized propagation path: eps carries both path losses and the carrier
// phase including a uniform random offset, h_eff additionally absorbs the
// transmit beam response at the departure angle.
struct ChannelRealization {
  std::complex<double> eps;
  std::complex<double> h_eff;
  double phase0 = 0;
  BistaticParams geo;
};

ChannelRealization realize_channel(const SceneGeometry& scene,
                                   const TargetState& target,
                                   const SystemConfig& cfg,
                                   const Beamformer& beam, rng::Stream& rng);

// Noise scaling for synthesis. Normalized mode pins the deterministic
// per-element signal power to one and sets the noise variance to 1/SNR;
// physical mode uses the configured link budget and noise_psd * spacing.
struct SnrMode {
  bool physical = false;
  double snr_db = 0;

  static SnrMode normalized(double snr_db) { return {false, snr_db}; }
  static SnrMode physical_budget() { return {true, 0}; }
};

// Received frequency-domain frame. y is n-major, then subcarrier, then
// symbol; amplitude is the deterministic per-element signal magnitude used at
// synthesis (|A h|), recorded for bound bookkeeping.
struct RxGrid {
  int n_rx = 0;
  int subcarriers = 0;
  int symbols = 0;
  std::vector<std::complex<double>> y;
  SymbolGrid x;
  SubcarrierPlan plan;
  double noise_var = 0;
  double symbol_duration = 0;
  double amplitude = 0;
  std::uint64_t noise_seed = 0;

  std::complex<double>& at(int n, int k, int m) {
    return y[(static_cast<std::size_t>(n) * subcarriers + k) * symbols + m];
  }
  const std::complex<double>& at(int n, int k, int m) const {
    return y[(static_cast<std::size_t>(n) * subcarriers + k) * symbols + m];
  }
};

RxGrid synthesize_rx(const SystemConfig& cfg, const SubcarrierPlan& plan,
                     const SymbolGrid& x, const ChannelRealization& chan,
                     const SnrMode& mode, std::uint64_t noise_seed);

// Closed-form per-element receive SNR of the configured link.
double link_snr_db(const SystemConfig& cfg, const SceneGeometry& scene,
                   const TargetState& target);

// Little-endian binary frame dump for cross-tool debugging: fixed header
// (dims, plan, noise variance, seed) followed by y then x as complex64.
// Layout is documented in the README.
void dump_rx_grid(const std::string& path, const RxGrid& grid);
RxGrid load_rx_grid(const std::string& path);

}  // namespace bisense
