#include "bisense/waveform.hpp"

#include <cmath>

#include "bisense/channel.hpp"
#include "bisense/rng.hpp"

namespace bisense {

namespace {
constexpr double kInvSqrt2 = 0.70710678118654752440;
}

SymbolGrid generate_symbols(int subcarriers, int symbols, std::uint64_t seed) {
  if (subcarriers <= 0 || symbols <= 0) {
    throw ConfigError("generate_symbols: grid dimensions must be positive");
  }
  rng::Stream rng(seed);
  SymbolGrid grid;
  grid.values.resize(subcarriers, symbols);
  for (int k = 0; k < subcarriers; ++k) {
    for (int m = 0; m < symbols; ++m) {
      const std::uint32_t b = rng.bits2();
      const double re = (b & 1u) ? -kInvSqrt2 : kInvSqrt2;
      const double im = (b & 2u) ? -kInvSqrt2 : kInvSqrt2;
      grid.values(k, m) = {re, im};
    }
  }
  return grid;
}

std::vector<double> SubcarrierPlan::relative_offsets() const {
  std::vector<double> rel(indices.size());
  for (std::size_t i = 0; i < indices.size(); ++i) {
    rel[i] = (indices[i] - indices[0]) * base_spacing_hz;
  }
  return rel;
}

SubcarrierPlan make_plan(PlanStage stage, const SystemConfig& cfg) {
  cfg.validate();
  const int K = cfg.total_subcarriers;
  const int Ka = cfg.active_subcarriers;
  const int rho = cfg.bandwidth_ratio;

  SubcarrierPlan plan;
  plan.stage = stage;
  plan.base_spacing_hz = cfg.subcarrier_spacing;
  plan.indices.resize(Ka);
  if (stage == PlanStage::coarse) {
    // Contiguous block centered on the carrier.
    const int start = K / 2 - Ka / 2;
    for (int i = 0; i < Ka; ++i) plan.indices[i] = start + i;
    plan.effective_spacing_hz = cfg.subcarrier_spacing;
  } else {
    // Strided comb anchored at subcarrier 0.
    if (static_cast<long long>(rho) * Ka > K) {
      throw ConfigError("make_plan: strided plan does not fit the comb");
    }
    for (int i = 0; i < Ka; ++i) plan.indices[i] = i * rho;
    plan.effective_spacing_hz = rho * cfg.subcarrier_spacing;
  }
  plan.frequency_offsets.resize(Ka);
  for (int i = 0; i < Ka; ++i) {
    plan.frequency_offsets[i] =
        (plan.indices[i] - K / 2) * cfg.subcarrier_spacing;
  }
  return plan;
}

std::complex<double> Beamformer::response(double angle) const {
  const Eigen::VectorXcd a = steering_vector(static_cast<int>(weights.size()), angle);
  return a.dot(weights);  // conjugates a
}

Beamformer design_sector_beamformer(int n_tx, double sector_lo,
                                    double sector_hi, int grid_points) {
  if (n_tx < 1) throw ConfigError("beamformer: n_tx must be positive");
  if (sector_hi < sector_lo) throw ConfigError("beamformer: empty sector");
  const double half = 0.5 * kPi;
  if (sector_lo < -half || sector_hi > half) {
    throw ConfigError("beamformer: sector outside the front half plane");
  }
  if (grid_points < 2 * n_tx) {
    throw ConfigError("beamformer: need at least 2*n_tx grid points");
  }

  Beamformer bf;
  bf.sector_lo = sector_lo;
  bf.sector_hi = sector_hi;

  if (sector_hi - sector_lo < 1e-12) {
    // Single-point fit: the matched steering vector.
    bf.weights = steering_vector(n_tx, 0.5 * (sector_lo + sector_hi)) /
                 std::sqrt(static_cast<double>(n_tx));
    return bf;
  }

  // Midpoint sampling of the front half plane keeps endfire out of the fit.
  const double pad = 2.0 / n_tx;  // one nominal beamwidth each side
  Eigen::MatrixXcd A(grid_points, n_tx);
  Eigen::VectorXcd d(grid_points);
  for (int g = 0; g < grid_points; ++g) {
    const double phi = -half + (g + 0.5) * kPi / grid_points;
    A.row(g) = steering_vector(n_tx, phi).adjoint();
    d(g) = (phi >= sector_lo - pad && phi <= sector_hi + pad) ? 1.0 : 0.0;
  }
  Eigen::VectorXcd w = A.colPivHouseholderQr().solve(d);
  const double norm = w.norm();
  if (!(norm > 0.0) || !std::isfinite(norm)) {
    throw ConfigError("beamformer: least-squares design degenerate");
  }
  bf.weights = w / norm;
  return bf;
}

}  // namespace bisense
