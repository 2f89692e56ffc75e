#pragma once

#include <stdexcept>
#include <string>

namespace bisense {

// Exact by definition (m/s).
inline constexpr double kSpeedOfLight = 299792458.0;
inline constexpr double kPi = 3.14159265358979323846264338327950288;

// Raised for invalid configuration or scenario input. The CLI maps this to
// exit code 2; every other failure maps to exit code 1.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace bisense
