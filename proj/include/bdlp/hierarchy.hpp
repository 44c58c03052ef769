#pragma once

#include <complex>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "bdlp/kernels.hpp"

namespace bdlp {

namespace detail {
class PeriodicConvolver;
}

/// Uniform periodic grid of displacements on [0, L)^d, n points per axis.
/// Index i along an axis stands for the signed displacement i h (i < n/2) or
/// (i - n) h, with h = L / n.
struct Grid {
  int dim = 1;
  double L = 1.0;
  int points_per_axis = 64;

  std::size_t size() const;
  double spacing() const { return L / points_per_axis; }
  double cell_volume() const;
  /// Signed displacement of flat index i (first axis fastest).
  Point displacement(std::size_t i) const;
  /// Flat index of the mirrored displacement -x.
  std::size_t mirror(std::size_t i) const;
  void validate() const;
};

/// Samples a kernel at every grid displacement with the torus wrapping rule.
std::vector<double> sample_kernel(const Grid& grid, const Kernel& k);

/// Periodic convolution (f * g)(x_i) = h^d sum_j f(x_j) g(x_i - x_j),
/// computed in frequency space.
std::vector<double> convolve(const Grid& grid, std::span<const double> f, std::span<const double> g);
/// Convolution of a grid function with a kernel sampled on the same grid.
std::vector<double> convolve(const Grid& grid, std::span<const double> f, const Kernel& k);

/// Translation-invariant first and second correlation functions: rho is
/// k^(1), k2[i] is k^(2) at displacement grid.displacement(i).
struct TruncatedCorrelation {
  double rho = 0.0;
  std::vector<double> k2;

  /// The Poisson(kappa) state: rho = kappa, k2 = kappa^2.
  static TruncatedCorrelation poisson(const Grid& grid, double kappa);
  double k2_sup() const;
};

/// How the three-point function is expressed through (rho, k2).
enum class Closure { Poisson, Kirkwood };
Closure parse_closure(const std::string& name);
std::string to_string(Closure c);

/// Right-hand side of the correlation-function evolution truncated at order
/// two, on a periodic grid matching the simulator torus. Not safe for
/// concurrent use of one instance.
class HierarchyModel {
 public:
  HierarchyModel(const Grid& grid, const KernelPair& pair);

  /// d rho / dt = (<a+> - m) rho - int a-(y) k2(y) dy.
  double rhs_order1(const TruncatedCorrelation& state) const;
  /// d k2(x) / dt = -2 (m + a-(x)) k2(x) - 2 int a-(y) k3(0, x, y) dy
  ///               + 2 a+(x) rho + 2 (a+ * k2)(x).
  std::vector<double> rhs_order2(const TruncatedCorrelation& state, Closure closure) const;

  const Grid& grid() const { return grid_; }
  const KernelPair& pair() const { return pair_; }
  /// Grid quadratures of the kernels' mass. They stand in for <a+-> in every
  /// term, and constants are exact eigenfunctions of the discrete operators.
  double plus_mass() const { return plus_mass_; }
  double minus_mass() const { return minus_mass_; }
  std::span<const double> a_minus_grid() const { return a_minus_; }
  std::span<const double> a_plus_grid() const { return a_plus_; }
  /// Integral of a grid function over the torus.
  double integrate(std::span<const double> f) const;

 private:
  Grid grid_;
  KernelPair pair_;
  std::vector<double> a_minus_;
  std::vector<double> a_plus_;
  double plus_mass_ = 0.0;
  double minus_mass_ = 0.0;
  std::vector<std::complex<double>> a_plus_hat_;
  // work buffers make rhs evaluation single-threaded per model
  std::shared_ptr<detail::PeriodicConvolver> convolver_;
};

struct IntegrateOptions {
  double t_end = 0.0;
  double dt = 1e-3;
  double observe_every = 0.0;  // 0: only t = 0 and t_end
  double rtol = 0.0;           // > 0 enables step halving
  int max_halvings = 8;
};

struct HierarchyTrajectory {
  std::vector<double> times;
  std::vector<TruncatedCorrelation> states;
  double dt_used = 0.0;
  long clip_events = 0;
  double clip_mass = 0.0;
  /// False when the clipped mass exceeds 1e-6 of the k2 mass.
  bool valid = true;
  std::vector<std::string> warnings;
};

/// Largest dt accepted without a stability warning:
/// 0.1 / max(m + <a-> rho0, <a+>).
double recommended_dt(const KernelPair& pair, double rho0);

/// Classical four-stage Runge-Kutta integration. Negative k2 or rho after a
/// step are clipped to 0 and accounted. With rtol > 0 the whole run is
/// repeated at dt/2 until two successive refinements agree to rtol.
/// Throws IntegrationAbort on NaN or overflow.
HierarchyTrajectory integrate(const HierarchyModel& model, const TruncatedCorrelation& initial,
                              Closure closure, const IntegrateOptions& options);

}  // namespace bdlp
