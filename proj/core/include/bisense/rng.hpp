#pragma once

#include <complex>
#include <cstdint>
#include <random>

namespace bisense::rng {

// Stateless seed derivation: splitmix64 over (base, a, b). Used to hand every
// consumer its own named substream so parallel trial execution reproduces the
// serial results bit for bit.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b);

// Deterministic random stream. The engine output sequence is fixed by the
// standard; the mappings to uniforms, Gaussians and symbol bits are done here
// rather than with std distributions, whose algorithms vary across library
// implementations.
class Stream {
 public:
  explicit Stream(std::uint64_t seed) : eng_(seed) {}

  double uniform01();                          // [0, 1)
  double uniform(double lo, double hi);        // [lo, hi)
  double gaussian(double stddev);              // Box-Muller, spare cached
  std::complex<double> cgaussian(double var);  // circular CN(0, var)
  std::uint32_t bits2();                       // two independent bits
  std::uint64_t raw() { return eng_(); }

 private:
  std::mt19937_64 eng_;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

// Per-trial named substream seeds. A fresh symbol frame is transmitted per
// stage and the two stages see independent noise; the phase offset stream is
// shared and drawn once per stage in a fixed order.
struct TrialStreams {
  std::uint64_t symbols_coarse = 0;
  std::uint64_t symbols_fine = 0;
  std::uint64_t phase0 = 0;
  std::uint64_t noise_coarse = 0;
  std::uint64_t noise_fine = 0;

  static TrialStreams derive(std::uint64_t base_seed, std::uint64_t trial_index);
};

}  // namespace bisense::rng
