#include "bisense/system.hpp"

#include <string>

namespace bisense {

void SystemConfig::validate() const {
  auto fail = [](const std::string& m) { throw ConfigError("system: " + m); };
  if (f_c <= 0) fail("f_c must be positive");
  if (subcarrier_spacing <= 0) fail("subcarrier_spacing must be positive");
  if (total_subcarriers <= 0) fail("total_subcarriers must be positive");
  if (active_subcarriers <= 0) fail("active_subcarriers must be positive");
  if (active_subcarriers > total_subcarriers) {
    fail("active_subcarriers exceeds total_subcarriers");
  }
  if (symbols <= 0) fail("symbols must be positive");
  if (n_tx <= 0 || n_rx <= 0) fail("array sizes must be positive");
  if (tx_power_gain <= 0) fail("tx_power_gain must be positive");
  if (rx_element_gain <= 0) fail("rx_element_gain must be positive");
  if (noise_psd <= 0) fail("noise_psd must be positive");
  if (cp_duration < 0) fail("cp_duration must be nonnegative");
  if (bandwidth_ratio < 1) fail("bandwidth_ratio must be >= 1");
  if (static_cast<long long>(bandwidth_ratio) * active_subcarriers >
      total_subcarriers) {
    fail("bandwidth_ratio * active_subcarriers exceeds total_subcarriers");
  }
}

}  // namespace bisense
