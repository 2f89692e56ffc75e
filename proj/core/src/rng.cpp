#include "bisense/rng.hpp"

#include <cmath>

#include "bisense/common.hpp"

namespace bisense::rng {

namespace {

std::uint64_t splitmix64(std::uint64_t& x) {
  x += 0x9E3779B97F4A7C15ULL;
  std::uint64_t z = x;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

constexpr std::uint64_t kTagSymbolsCoarse = 0x73796D63ULL;
constexpr std::uint64_t kTagSymbolsFine = 0x73796D66ULL;
constexpr std::uint64_t kTagPhase0 = 0x70683030ULL;
constexpr std::uint64_t kTagNoiseCoarse = 0x6E7A63ULL;
constexpr std::uint64_t kTagNoiseFine = 0x6E7A66ULL;

}  // namespace

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b) {
  std::uint64_t s = base;
  std::uint64_t h = splitmix64(s);
  s ^= a + 0x632BE59BD9B4E019ULL;
  h ^= splitmix64(s);
  s ^= b + 0x9E6C63D0876A9ULL;
  h ^= splitmix64(s);
  return h;
}

double Stream::uniform01() {
  // 53 random mantissa bits; never returns 1.0.
  return static_cast<double>(eng_() >> 11) * 0x1.0p-53;
}

double Stream::uniform(double lo, double hi) {
  return lo + (hi - lo) * uniform01();
}

double Stream::gaussian(double stddev) {
  if (have_spare_) {
    have_spare_ = false;
    return spare_ * stddev;
  }
  // Box-Muller; u1 bounded away from zero so the log is finite.
  double u1 = 0.0;
  do {
    u1 = uniform01();
  } while (u1 <= 0.0);
  const double u2 = uniform01();
  const double r = std::sqrt(-2.0 * std::log(u1));
  spare_ = r * std::sin(2.0 * kPi * u2);
  have_spare_ = true;
  return r * std::cos(2.0 * kPi * u2) * stddev;
}

std::complex<double> Stream::cgaussian(double var) {
  const double s = std::sqrt(0.5 * var);
  const double re = gaussian(1.0);
  const double im = gaussian(1.0);
  return {re * s, im * s};
}

std::uint32_t Stream::bits2() { return static_cast<std::uint32_t>(eng_() & 3u); }

TrialStreams TrialStreams::derive(std::uint64_t base_seed,
                                  std::uint64_t trial_index) {
  TrialStreams t;
  t.symbols_coarse = derive_seed(base_seed, trial_index, kTagSymbolsCoarse);
  t.symbols_fine = derive_seed(base_seed, trial_index, kTagSymbolsFine);
  t.phase0 = derive_seed(base_seed, trial_index, kTagPhase0);
  t.noise_coarse = derive_seed(base_seed, trial_index, kTagNoiseCoarse);
  t.noise_fine = derive_seed(base_seed, trial_index, kTagNoiseFine);
  return t;
}

}  // namespace bisense::rng
