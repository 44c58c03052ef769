#pragma once

#include <array>
#include <cmath>
#include <span>

namespace bdlp {

/// Position or displacement in up to three dimensions. Coordinates beyond the
/// active dimension are kept at zero.
using Point = std::array<double, 3>;

inline constexpr int kMaxDim = 3;

/// Distance convention used when evaluating kernels between points.
/// `box == 0` means plain Euclidean space; otherwise the cube [0, box)^dim
/// with periodic identification (minimum-image displacements).
struct Metric {
  int dim = 1;
  double box = 0.0;

  static Metric euclidean(int dim) { return {dim, 0.0}; }
  static Metric torus(int dim, double edge) { return {dim, edge}; }

  bool periodic() const { return box > 0.0; }

  /// x - y, wrapped to the minimum image on a torus.
  Point displacement(const Point& x, const Point& y) const {
    Point d{0.0, 0.0, 0.0};
    for (int k = 0; k < dim; ++k) {
      double v = x[k] - y[k];
      if (periodic()) v -= box * std::nearbyint(v / box);
      d[k] = v;
    }
    return d;
  }

  double distance(const Point& x, const Point& y) const {
    Point d = displacement(x, y);
    return std::sqrt(d[0] * d[0] + d[1] * d[1] + d[2] * d[2]);
  }

  /// Maps a point into [0, box)^dim. No-op in Euclidean space.
  Point wrap(Point x) const {
    if (!periodic()) return x;
    for (int k = 0; k < dim; ++k) {
      x[k] -= box * std::floor(x[k] / box);
      if (x[k] >= box) x[k] = 0.0;
    }
    return x;
  }
};

inline double norm(const Point& x) { return std::sqrt(x[0] * x[0] + x[1] * x[1] + x[2] * x[2]); }

/// Volume of the unit ball in dimension d.
inline double unit_ball_volume(int d) {
  return std::pow(M_PI, 0.5 * d) / std::tgamma(0.5 * d + 1.0);
}

/// Surface area of the unit sphere S^{d-1}.
inline double unit_sphere_area(int d) {
  return 2.0 * std::pow(M_PI, 0.5 * d) / std::tgamma(0.5 * d);
}

}  // namespace bdlp
