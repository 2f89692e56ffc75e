#pragma once

#include <Eigen/Dense>
#include <complex>

#include "bisense/geometry.hpp"
#include "bisense/system.hpp"
#include "bisense/waveform.hpp"

namespace bisense {

// Unknown vector ordering is fixed: (|h|, arg h, doppler, delay, aoa).
// amplitude is the deterministic scale multiplying the path coefficient; only
// the product amplitude*amp is observable, the split is bookkeeping.
struct FimParams {
  double amp = 1.0;        // |h|
  double phase = 0.0;      // arg h
  double doppler = 0.0;    // Hz
  double delay = 0.0;      // s
  double aoa = 0.0;        // rad
  double amplitude = 1.0;  // A
  double noise_var = 1.0;
  SystemConfig cfg;
  SubcarrierPlan plan;
  SymbolGrid symbols;
};

// Noiseless model element for antenna n, active subcarrier k, symbol m.
// Shares the phase conventions of the synthesizer, so derivative checks
// against it validate the synthesis too.
std::complex<double> signal_model(const FimParams& p, int n, int k, int m);

using Fim = Eigen::Matrix<double, 5, 5>;

// Thrown when the (equilibrated) information matrix is not numerically
// invertible.
class NearSingularFim : public std::runtime_error {
 public:
  NearSingularFim(const std::string& what, double condition)
      : std::runtime_error(what), condition_(condition) {}
  double condition() const { return condition_; }

 private:
  double condition_ = 0;
};

Fim fim(const FimParams& p);

// Diagonal of the inverse information matrix (variances, parameter order as
// above). The inversion runs on the diagonally equilibrated matrix with a
// condition-number guard of 1e12.
Eigen::Matrix<double, 5, 1> crlb(const FimParams& p);

// Root bound on the bistatic range alone, meters; used to size the fine
// search window.
double range_crlb_m(const FimParams& p);

// Position error bound: delay/aoa covariance block mapped through the
// Jacobian of the ellipse inversion at the true geometry.
double peb(const FimParams& p, const SceneGeometry& scene);

}  // namespace bisense
