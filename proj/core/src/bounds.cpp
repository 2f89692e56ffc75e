#include "bisense/bounds.hpp"

#include <cmath>
#include <limits>

#include "bisense/channel.hpp"

namespace bisense {

std::complex<double> signal_model(const FimParams& p, int n, int k, int m) {
  const std::vector<double> rel = p.plan.relative_offsets();
  const double mu = n - 0.5 * (p.cfg.n_rx - 1);
  const double phase = p.phase +
                       2.0 * kPi * (m * p.cfg.symbol_duration() * p.doppler -
                                    rel[k] * p.delay) +
                       mu * kPi * std::sin(p.aoa);
  return p.amplitude * p.amp *
         std::complex<double>{std::cos(phase), std::sin(phase)} *
         p.symbols.values(k, m);
}

Fim fim(const FimParams& p) {
  if (p.amp <= 0.0) throw ConfigError("fim: |h| must be positive");
  if (p.noise_var <= 0.0) throw ConfigError("fim: noise variance must be positive");
  if (p.symbols.subcarriers() != p.plan.count()) {
    throw ConfigError("fim: symbol grid does not match the plan");
  }
  const int N = p.cfg.n_rx;
  const int K = p.plan.count();
  const int M = p.symbols.symbols();
  const double Ts = p.cfg.symbol_duration();
  const std::vector<double> rel = p.plan.relative_offsets();
  const double cth = std::cos(p.aoa);
  const double power = p.amplitude * p.amplitude * p.amp * p.amp;

  // Every derivative of the model is the model times one of these factors, so
  // each information entry is a weighted sum of Re(conj(g_i) g_j) with weight
  // |s|^2. Factor table, parameter order (|h|, arg h, doppler, delay, aoa):
  //   g1 = 1/|h|, g2 = j, g3 = j 2 pi m Ts, g4 = -j 2 pi f_k, g5 = j pi cos(aoa) mu_n.
  Fim info = Fim::Zero();
  const std::complex<double> j{0.0, 1.0};
  for (int n = 0; n < N; ++n) {
    const double mu = n - 0.5 * (N - 1);
    const std::complex<double> g5 = j * kPi * cth * mu;
    for (int k = 0; k < K; ++k) {
      const std::complex<double> g4 = -j * 2.0 * kPi * rel[k];
      for (int m = 0; m < M; ++m) {
        const std::complex<double> g3 = j * (2.0 * kPi * m * Ts);
        const std::complex<double> g[5] = {{1.0 / p.amp, 0.0}, j, g3, g4, g5};
        const double w = power * std::norm(p.symbols.values(k, m));
        for (int a = 0; a < 5; ++a) {
          for (int b = a; b < 5; ++b) {
            info(a, b) += w * (std::conj(g[a]) * g[b]).real();
          }
        }
      }
    }
  }
  info *= 2.0 / p.noise_var;
  for (int a = 0; a < 5; ++a) {
    for (int b = 0; b < a; ++b) info(a, b) = info(b, a);
  }
  return info;
}

namespace {

// Inverse through diagonal equilibration: the raw matrix mixes scales over
// ~20 decades (amplitude vs. squared angular frequencies), the equilibrated
// one is where conditioning is meaningful.
Fim guarded_inverse(const Fim& info) {
  Eigen::Matrix<double, 5, 1> d;
  for (int i = 0; i < 5; ++i) {
    if (!(info(i, i) > 0.0) || !std::isfinite(info(i, i))) {
      throw NearSingularFim("fim inverse: nonpositive diagonal entry",
                            std::numeric_limits<double>::infinity());
    }
    d(i) = 1.0 / std::sqrt(info(i, i));
  }
  const Fim scaled = d.asDiagonal() * info * d.asDiagonal();
  Eigen::SelfAdjointEigenSolver<Fim> es(scaled);
  if (es.info() != Eigen::Success) {
    throw NearSingularFim("fim inverse: eigensolver failed",
                          std::numeric_limits<double>::infinity());
  }
  const auto& ev = es.eigenvalues();
  const double lmin = ev(0), lmax = ev(4);
  const double cond = lmin > 0.0 ? lmax / lmin
                                 : std::numeric_limits<double>::infinity();
  if (!(lmin > 0.0) || cond >= 1e12) {
    throw NearSingularFim(
        "fim inverse: condition number " + std::to_string(cond) +
            " exceeds 1e12",
        cond);
  }
  const Fim inv_scaled = es.eigenvectors() *
                         ev.cwiseInverse().asDiagonal() *
                         es.eigenvectors().transpose();
  return d.asDiagonal() * inv_scaled * d.asDiagonal();
}

}  // namespace

Eigen::Matrix<double, 5, 1> crlb(const FimParams& p) {
  return guarded_inverse(fim(p)).diagonal();
}

double range_crlb_m(const FimParams& p) {
  const double var_delay = guarded_inverse(fim(p))(3, 3);
  return kSpeedOfLight * std::sqrt(var_delay);
}

double peb(const FimParams& p, const SceneGeometry& scene) {
  const Fim inv = guarded_inverse(fim(p));
  const Eigen::Matrix2d cov = inv.block<2, 2>(3, 3);  // (delay, aoa)
  Eigen::Matrix2d jac =
      position_jacobian(kSpeedOfLight * p.delay, p.aoa, scene);
  jac.col(0) *= kSpeedOfLight;  // d/d(range) to d/d(delay)
  return std::sqrt((jac * cov * jac.transpose()).trace());
}

}  // namespace bisense
