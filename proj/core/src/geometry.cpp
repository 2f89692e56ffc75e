#include "bisense/geometry.hpp"

#include <algorithm>
#include <array>
#include <cmath>

namespace bisense {

namespace {

constexpr double kMinNodeDistance = 1e-9;  // m, degeneracy guard

std::array<Eigen::Vector2d, 4> corners(const Rect& r) {
  return {Eigen::Vector2d{r.xmin, r.ymin}, Eigen::Vector2d{r.xmax, r.ymin},
          Eigen::Vector2d{r.xmin, r.ymax}, Eigen::Vector2d{r.xmax, r.ymax}};
}

}  // namespace

double wrap_pi(double angle) {
  double a = std::fmod(angle + kPi, 2.0 * kPi);
  if (a < 0) a += 2.0 * kPi;
  return a - kPi;
}

double azimuth(const Eigen::Vector2d& v) { return std::atan2(v.y(), v.x()); }

void SceneGeometry::validate() const {
  if (baseline() <= 0.0) {
    throw ConfigError("scene: tx and rx positions coincide");
  }
  if (std::abs(tx_boresight.norm() - 1.0) > 1e-12 ||
      std::abs(rx_boresight.norm() - 1.0) > 1e-12) {
    throw ConfigError("scene: boresights must be unit vectors");
  }
  if (area.width() < 0.0 || area.height() < 0.0) {
    throw ConfigError("scene: area is empty");
  }
}

SceneGeometry SceneGeometry::with_default_boresights(const Eigen::Vector2d& tx,
                                                     const Eigen::Vector2d& rx,
                                                     const Rect& area) {
  SceneGeometry s;
  s.tx_position = tx;
  s.rx_position = rx;
  s.area = area;
  const Eigen::Vector2d c = area.center();
  const Eigen::Vector2d dt = c - tx;
  const Eigen::Vector2d dr = c - rx;
  // A node sitting on the area center gets an arbitrary fixed boresight.
  s.tx_boresight = dt.norm() > kMinNodeDistance ? dt.normalized()
                                                : Eigen::Vector2d{1.0, 0.0};
  s.rx_boresight = dr.norm() > kMinNodeDistance ? dr.normalized()
                                                : Eigen::Vector2d{-1.0, 0.0};
  return s;
}

BistaticParams forward_geometry(const SceneGeometry& scene,
                                const TargetState& target, double carrier_hz) {
  if (carrier_hz <= 0.0) throw ConfigError("forward_geometry: carrier <= 0");
  const Eigen::Vector2d dt = target.position - scene.tx_position;
  const Eigen::Vector2d dr = target.position - scene.rx_position;
  BistaticParams g;
  g.range_tx = dt.norm();
  g.range_rx = dr.norm();
  if (g.range_tx < kMinNodeDistance || g.range_rx < kMinNodeDistance) {
    throw ConfigError("forward_geometry: target coincides with a node");
  }
  g.bistatic_range = g.range_tx + g.range_rx;
  g.delay = g.bistatic_range / kSpeedOfLight;
  g.aod = wrap_pi(azimuth(dt) - azimuth(scene.tx_boresight));
  g.aoa = wrap_pi(azimuth(dr) - azimuth(scene.rx_boresight));

  // Unit vectors target -> node; the bistatic angle is subtended between
  // them, the interior bisector carries the doppler projection.
  const Eigen::Vector2d ut = -dt / g.range_tx;
  const Eigen::Vector2d ur = -dr / g.range_rx;
  const double cang = std::clamp(ut.dot(ur), -1.0, 1.0);
  g.bistatic_angle = std::acos(cang);

  const double speed = target.velocity.norm();
  if (speed > 0.0) {
    const Eigen::Vector2d bis = ut + ur;
    if (bis.norm() > 1e-15) {
      const double cd =
          std::clamp(target.velocity.dot(bis) / (speed * bis.norm()), -1.0, 1.0);
      g.bisector_angle = std::acos(cd);
    } else {
      // Nodes diametrically opposite: bisector undefined, projection zero.
      g.bisector_angle = 0.5 * kPi;
    }
    const double lambda = kSpeedOfLight / carrier_hz;
    g.doppler = 2.0 * speed / lambda * std::cos(g.bisector_angle) *
                std::cos(0.5 * g.bistatic_angle);
  } else {
    g.bisector_angle = 0.0;
    g.doppler = 0.0;
  }
  return g;
}

namespace {

// Shared terms of the ellipse inversion: the arrival ray is re-expressed
// against the baseline direction, in which frame the focal chord length has
// the closed form used below.
struct EllipseTerms {
  double L, r, theta_g, cos_psi, sin_psi, denom;
};

EllipseTerms ellipse_terms(double range_m, double aoa_rad,
                           const SceneGeometry& scene) {
  EllipseTerms t;
  t.L = scene.baseline();
  t.r = range_m;
  t.theta_g = azimuth(scene.rx_boresight) + aoa_rad;
  const double psi =
      t.theta_g - azimuth(scene.tx_position - scene.rx_position);
  t.cos_psi = std::cos(psi);
  t.sin_psi = std::sin(psi);
  t.denom = 2.0 * (t.r - t.L * t.cos_psi);
  return t;
}

}  // namespace

Eigen::Vector2d position_from_bistatic(double range_m, double aoa_rad,
                                       const SceneGeometry& scene) {
  const EllipseTerms t = ellipse_terms(range_m, aoa_rad, scene);
  if (range_m <= t.L) {
    throw ConfigError("position_from_bistatic: range <= baseline, no ellipse");
  }
  if (std::abs(t.denom) < 1e-12) {
    throw ConfigError("position_from_bistatic: singular geometry");
  }
  const double gamma = (t.r * t.r - t.L * t.L) / t.denom;
  return scene.rx_position +
         gamma * Eigen::Vector2d{std::cos(t.theta_g), std::sin(t.theta_g)};
}

Eigen::Matrix2d position_jacobian(double range_m, double aoa_rad,
                                  const SceneGeometry& scene) {
  const EllipseTerms t = ellipse_terms(range_m, aoa_rad, scene);
  if (range_m <= t.L) {
    throw ConfigError("position_jacobian: range <= baseline, no ellipse");
  }
  if (std::abs(t.denom) < 1e-12) {
    throw ConfigError("position_jacobian: singular geometry");
  }
  const double num = t.r * t.r - t.L * t.L;
  const double gamma = num / t.denom;
  const double dsq = t.denom * t.denom;
  // d(gamma)/dr and d(gamma)/dtheta with denom = 2(r - L cos(psi)),
  // d(psi)/dtheta = 1.
  const double dgamma_dr =
      (t.r * t.r - 2.0 * t.r * t.L * t.cos_psi + t.L * t.L) * 2.0 / dsq;
  const double dgamma_dth = -num * 2.0 * t.L * t.sin_psi / dsq;
  const Eigen::Vector2d dir{std::cos(t.theta_g), std::sin(t.theta_g)};
  const Eigen::Vector2d perp{-std::sin(t.theta_g), std::cos(t.theta_g)};
  Eigen::Matrix2d j;
  j.col(0) = dgamma_dr * dir;
  j.col(1) = dgamma_dth * dir + gamma * perp;
  return j;
}

double max_bistatic_range(const SceneGeometry& scene) {
  double best = 0.0;
  for (const auto& c : corners(scene.area)) {
    const double r =
        (c - scene.tx_position).norm() + (c - scene.rx_position).norm();
    best = std::max(best, r);
  }
  return best;
}

double cp_from_area(const SceneGeometry& scene) {
  const double excess = max_bistatic_range(scene) - scene.baseline();
  return std::max(excess, 0.0) / kSpeedOfLight;
}

std::pair<double, double> area_sector(const Eigen::Vector2d& origin,
                                      const Eigen::Vector2d& boresight,
                                      const Rect& area) {
  const double clamp_hi = 0.5 * kPi - 1e-3;
  double lo = clamp_hi, hi = -clamp_hi;
  bool any = false;
  for (const auto& c : corners(area)) {
    const Eigen::Vector2d d = c - origin;
    if (d.norm() < kMinNodeDistance) continue;  // node on this corner
    const double a = wrap_pi(azimuth(d) - azimuth(boresight));
    lo = std::min(lo, a);
    hi = std::max(hi, a);
    any = true;
  }
  if (!any) throw ConfigError("area_sector: area degenerate at the node");
  lo = std::clamp(lo, -clamp_hi, clamp_hi);
  hi = std::clamp(hi, -clamp_hi, clamp_hi);
  return {lo, hi};
}

}  // namespace bisense
