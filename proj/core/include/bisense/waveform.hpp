#pragma once

#include <Eigen/Dense>
#include <complex>
#include <cstdint>
#include <vector>

#include "bisense/system.hpp"

namespace bisense {

// One frame of unit-modulus QPSK pilots, subcarriers by symbols.
struct SymbolGrid {
  Eigen::MatrixXcd values;  // K' x M

  int subcarriers() const { return static_cast<int>(values.rows()); }
  int symbols() const { return static_cast<int>(values.cols()); }
  double energy() const { return values.squaredNorm(); }
};

SymbolGrid generate_symbols(int subcarriers, int symbols, std::uint64_t seed);

enum class PlanStage { coarse, fine };

// Active-subcarrier layout of one stage. The coarse plan takes K' contiguous
// subcarriers centered on the carrier; the fine plan takes K' subcarriers
// strided by bandwidth_ratio starting at index 0, trading unambiguous range
// for resolution.
struct SubcarrierPlan {
  PlanStage stage = PlanStage::coarse;
  std::vector<int> indices;               // ascending, on the K-point comb
  double base_spacing_hz = 0;             // comb spacing
  double effective_spacing_hz = 0;        // spacing between active neighbors
  std::vector<double> frequency_offsets;  // f_k - f_c, Hz

  int count() const { return static_cast<int>(indices.size()); }
  double span_hz() const { return count() * effective_spacing_hz; }
  double unambiguous_range() const { return kSpeedOfLight / effective_spacing_hz; }
  double range_resolution() const { return kSpeedOfLight / span_hz(); }
  // Offsets relative to the first active subcarrier. Phase terms use these;
  // the constant shift to the absolute offsets is absorbed by the channel
  // phase and is not separately observable.
  std::vector<double> relative_offsets() const;
};

SubcarrierPlan make_plan(PlanStage stage, const SystemConfig& cfg);

// Transmit weights steering energy over an angular sector, unit l2 norm.
struct Beamformer {
  Eigen::VectorXcd weights;
  double sector_lo = 0;
  double sector_hi = 0;

  // a^H(angle) w
  std::complex<double> response(double angle) const;
};

// Least-squares fit of the array response to a sector indicator sampled on a
// uniform front-half-plane grid. The fitted indicator is widened by one
// nominal beamwidth (2/n_tx rad) per side so the commanded sector edges sit
// inside the flat region instead of on the rolloff. A zero-width sector
// degenerates to the matched steering vector.
Beamformer design_sector_beamformer(int n_tx, double sector_lo,
                                    double sector_hi, int grid_points);

}  // namespace bisense
