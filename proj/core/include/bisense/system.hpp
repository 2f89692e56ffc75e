#pragma once

#include "bisense/common.hpp"

namespace bisense {

// OFDM sensing system parameters. All values SI (Hz, W, s); angles elsewhere
// are radians. Defaults reproduce the full evaluation profile.
struct SystemConfig {
  double f_c = 0.3e12;              // carrier (Hz)
  double subcarrier_spacing = 6.25e6;
  int total_subcarriers = 320;      // K, full comb
  int active_subcarriers = 64;      // K', per stage
  int symbols = 50;                 // M, per frame
  int n_tx = 64;
  int n_rx = 64;
  double tx_power_gain = 1.0;       // transmit power times array gain (W)
  double rx_element_gain = 1.0;
  double noise_psd = 4e-20;         // W/Hz
  double cp_duration = 1.9539732304636725e-8;  // s
  int bandwidth_ratio = 5;          // fine-stage subcarrier stride
  // Closed-form link SNR divides by the active count by default; flip to
  // divide by the total count instead.
  bool snr_over_total_subcarriers = false;

  double bandwidth() const { return total_subcarriers * subcarrier_spacing; }
  double coarse_bandwidth() const { return active_subcarriers * subcarrier_spacing; }
  // Symbol duration uses the base spacing in both stages; widening the
  // fine-stage spacing shortens nothing on the air.
  double symbol_duration() const { return 1.0 / subcarrier_spacing + cp_duration; }
  double wavelength() const { return kSpeedOfLight / f_c; }

  void validate() const;  // throws ConfigError
};

}  // namespace bisense
