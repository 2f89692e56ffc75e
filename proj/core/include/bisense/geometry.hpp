#pragma once

#include <Eigen/Dense>
#include <utility>

#include "bisense/common.hpp"

namespace bisense {

struct Rect {
  double xmin = 0, ymin = 0, xmax = 0, ymax = 0;

  double width() const { return xmax - xmin; }
  double height() const { return ymax - ymin; }
  bool contains(const Eigen::Vector2d& p) const {
    return p.x() >= xmin && p.x() <= xmax && p.y() >= ymin && p.y() <= ymax;
  }
  Eigen::Vector2d center() const {
    return {0.5 * (xmin + xmax), 0.5 * (ymin + ymax)};
  }
};

// Node layout in a fixed global frame. Arrival and departure angles are
// measured from the owning node's boresight, counterclockwise positive, and
// are only meaningful in the front half plane of the array.
struct SceneGeometry {
  Eigen::Vector2d tx_position{0.0, 0.0};
  Eigen::Vector2d rx_position{10.0, 10.0};
  Eigen::Vector2d tx_boresight{0.0, 0.0};  // unit; see with_default_boresights
  Eigen::Vector2d rx_boresight{0.0, 0.0};
  Rect area{0.0, 0.0, 10.0, 10.0};

  double baseline() const { return (rx_position - tx_position).norm(); }
  void validate() const;  // throws ConfigError

  // Boresights pointed at the area center.
  static SceneGeometry with_default_boresights(const Eigen::Vector2d& tx,
                                               const Eigen::Vector2d& rx,
                                               const Rect& area);
};

struct TargetState {
  Eigen::Vector2d position{0.0, 0.0};
  Eigen::Vector2d velocity{0.0, 0.0};  // m/s
  double rcs = 1.0;                    // m^2
};

// Ground-truth observables of one target. Angles in radians, ranges in
// meters, delay in seconds, doppler in Hz.
struct BistaticParams {
  double range_tx = 0;        // node-to-target
  double range_rx = 0;
  double bistatic_range = 0;  // range_tx + range_rx
  double delay = 0;
  double aod = 0;             // from tx boresight
  double aoa = 0;             // from rx boresight
  double doppler = 0;
  double bistatic_angle = 0;  // subtended at the target, [0, pi]
  double bisector_angle = 0;  // velocity vs. bistatic bisector, [0, pi]
};

double wrap_pi(double angle);
double azimuth(const Eigen::Vector2d& v);  // atan2(y, x)

BistaticParams forward_geometry(const SceneGeometry& scene,
                                const TargetState& target, double carrier_hz);

// Inverts (bistatic range, arrival angle) to a position on the ellipse with
// the two nodes as foci. Requires range_m strictly greater than the baseline.
Eigen::Vector2d position_from_bistatic(double range_m, double aoa_rad,
                                       const SceneGeometry& scene);

// d(x,y)/d(range, aoa) of position_from_bistatic, columns in that order.
Eigen::Matrix2d position_jacobian(double range_m, double aoa_rad,
                                  const SceneGeometry& scene);

// Largest bistatic range over the area; attained at a vertex because the
// range is convex over the rectangle.
double max_bistatic_range(const SceneGeometry& scene);

// Cyclic prefix long enough to cover every in-area echo.
double cp_from_area(const SceneGeometry& scene);

// Angular interval (relative to the boresight) that covers the whole area as
// seen from `origin`; clamped to the array front half plane.
std::pair<double, double> area_sector(const Eigen::Vector2d& origin,
                                      const Eigen::Vector2d& boresight,
                                      const Rect& area);

}  // namespace bisense
