#pragma once

#include <limits>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "bdlp/geometry.hpp"

namespace bdlp {

/// c on the open ball |x| < radius, zero outside.
struct TopHat {
  double c = 0.0;
  double radius = 0.0;
};

/// Normalized Gaussian c (2 pi sigma^2)^{-d/2} exp(-|x|^2 / (2 sigma^2)).
/// Its integral over R^d is exactly c.
struct Gaussian {
  double c = 0.0;
  double sigma = 1.0;
};

/// Radial profile given at increasing radii, linearly interpolated. Values for
/// r below the first radius take the first value; zero beyond the last radius.
struct TabulatedRadial {
  std::vector<double> radii;
  std::vector<double> values;
};

/// A rotation-symmetric nonnegative kernel on R^d. Immutable after
/// construction, so it may be shared between threads.
class Kernel {
 public:
  using Shape = std::variant<TopHat, Gaussian, TabulatedRadial>;

  /// Validates nonnegativity and finiteness; throws ConfigError otherwise.
  Kernel(Shape shape, int dim);

  static Kernel top_hat(double c, double radius, int dim) { return Kernel(TopHat{c, radius}, dim); }
  static Kernel gaussian(double c, double sigma, int dim) { return Kernel(Gaussian{c, sigma}, dim); }
  static Kernel tabulated(std::vector<double> radii, std::vector<double> values, int dim) {
    return Kernel(TabulatedRadial{std::move(radii), std::move(values)}, dim);
  }
  static Kernel zero(int dim) { return top_hat(0.0, 0.0, dim); }

  const Shape& shape() const { return shape_; }
  int dim() const { return dim_; }

  /// a(r) for |x| = r.
  double radial(double r) const;
  /// a(x) in R^d (only the first dim() coordinates are read).
  double operator()(const Point& x) const { return radial(norm(x)); }

  /// <a>: integral over R^d.
  double l1_norm() const { return l1_norm_; }
  /// ||a||: supremum.
  double sup_norm() const { return sup_norm_; }
  /// Radius beyond which the kernel vanishes; +inf for Gaussians.
  double range() const;
  bool is_zero() const { return l1_norm_ == 0.0 && sup_norm_ == 0.0; }

  std::string describe() const;

 private:
  Shape shape_;
  int dim_;
  double l1_norm_ = 0.0;
  double sup_norm_ = 0.0;
};

/// Trapezoid quadrature of a tabulated kernel's mass, each table interval
/// split into `subdivisions` steps.
double tabulated_mass(const TabulatedRadial& table, int dim, int subdivisions);

/// Per-shape evaluation of a kernel on the space described by `metric`.
/// On a torus, Gaussians are summed over the 3^d nearest periodic images of
/// the minimum-image displacement; finite-range kernels use the minimum image
/// and must have range below box/2 (see check_torus_admissible).
double kernel_value(const Kernel& k, const Point& displacement, const Metric& metric);

/// Throws ConfigError if a finite-range kernel reaches half the torus edge.
void check_torus_admissible(const Kernel& k, double box, const std::string& name);

/// Upper bound on the relative error of the 3-image Gaussian wrapping,
/// exp(-(L / (2 sigma))^2 / 2). Zero for finite-range kernels.
double wrapping_truncation_error(const Kernel& k, double box);

/// Competition kernel a-, dispersal kernel a+ and intrinsic mortality m.
struct KernelPair {
  Kernel a_minus;
  Kernel a_plus;
  double m = 0.0;

  /// Throws ConfigError on mismatched dimensions, m < 0, or <a-> = 0 when
  /// competition-free dynamics were not explicitly allowed.
  void validate(bool allow_no_competition = false) const;
  int dim() const { return a_minus.dim(); }
};

/// E(x, eta) = sum over y in eta of a(x - y). The caller removes x from eta
/// when needed.
double interaction_energy(const Point& x, std::span<const Point> eta, const Kernel& k,
                          const Metric& metric);

/// E(eta) = sum over ordered pairs x != y in eta of a(x - y).
double total_energy(std::span<const Point> eta, const Kernel& k, const Metric& metric);

/// (m + b)|eta| + E-(eta); b = 0 gives the total death rate E(eta).
double death_energy(std::span<const Point> eta, const KernelPair& pair, double b,
                    const Metric& metric);

/// phi_theta(x) = a-(x) - theta a+(x). May be negative.
double phi_theta(const Point& x, const KernelPair& pair, double theta);

}  // namespace bdlp
