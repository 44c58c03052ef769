#include "bdlp/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "bdlp/errors.hpp"

namespace bdlp {
namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

bool finite_nonneg(double v) { return std::isfinite(v) && v >= 0.0; }

double gaussian_peak(const Gaussian& g, int dim) {
  return g.c * std::pow(2.0 * M_PI * g.sigma * g.sigma, -0.5 * dim);
}

double table_interp(const TabulatedRadial& t, double r) {
  const auto& rs = t.radii;
  if (r > rs.back()) return 0.0;
  if (r <= rs.front()) return t.values.front();
  auto it = std::upper_bound(rs.begin(), rs.end(), r);
  std::size_t hi = static_cast<std::size_t>(it - rs.begin());
  if (hi >= rs.size()) return t.values.back();
  std::size_t lo = hi - 1;
  double w = (r - rs[lo]) / (rs[hi] - rs[lo]);
  return t.values[lo] + w * (t.values[hi] - t.values[lo]);
}

constexpr int kDefaultTableSubdivisions = 512;

}  // namespace

Kernel::Kernel(Shape shape, int dim) : shape_(std::move(shape)), dim_(dim) {
  if (dim < 1 || dim > kMaxDim) throw ConfigError("kernel dimension must be 1, 2 or 3");
  std::visit(Overloaded{
                 [&](const TopHat& t) {
                   if (!finite_nonneg(t.c)) throw ConfigError("top-hat amplitude c must be finite and >= 0");
                   if (!finite_nonneg(t.radius)) throw ConfigError("top-hat radius must be finite and >= 0");
                   l1_norm_ = t.c * unit_ball_volume(dim) * std::pow(t.radius, dim);
                   sup_norm_ = t.radius > 0.0 ? t.c : 0.0;
                 },
                 [&](const Gaussian& g) {
                   if (!finite_nonneg(g.c)) throw ConfigError("gaussian mass c must be finite and >= 0");
                   if (!(std::isfinite(g.sigma) && g.sigma > 0.0))
                     throw ConfigError("gaussian sigma must be finite and > 0");
                   l1_norm_ = g.c;
                   sup_norm_ = gaussian_peak(g, dim);
                 },
                 [&](const TabulatedRadial& t) {
                   if (t.radii.size() < 2 || t.radii.size() != t.values.size())
                     throw ConfigError("tabulated kernel needs >= 2 (radius, value) rows");
                   if (!finite_nonneg(t.radii.front())) throw ConfigError("tabulated radii must be >= 0");
                   for (std::size_t i = 1; i < t.radii.size(); ++i)
                     if (!(std::isfinite(t.radii[i]) && t.radii[i] > t.radii[i - 1]))
                       throw ConfigError("tabulated radii must be finite and strictly increasing");
                   for (double v : t.values)
                     if (!finite_nonneg(v)) throw ConfigError("tabulated values must be finite and >= 0");
                   l1_norm_ = tabulated_mass(t, dim, kDefaultTableSubdivisions);
                   sup_norm_ = *std::max_element(t.values.begin(), t.values.end());
                 },
             },
             shape_);
}

double Kernel::radial(double r) const {
  return std::visit(Overloaded{
                        [&](const TopHat& t) { return r < t.radius ? t.c : 0.0; },
                        [&](const Gaussian& g) {
                          return gaussian_peak(g, dim_) * std::exp(-r * r / (2.0 * g.sigma * g.sigma));
                        },
                        [&](const TabulatedRadial& t) { return table_interp(t, r); },
                    },
                    shape_);
}

double Kernel::range() const {
  return std::visit(Overloaded{
                        [](const TopHat& t) { return t.c > 0.0 ? t.radius : 0.0; },
                        [](const Gaussian& g) {
                          return g.c > 0.0 ? std::numeric_limits<double>::infinity() : 0.0;
                        },
                        [](const TabulatedRadial& t) { return t.radii.back(); },
                    },
                    shape_);
}

std::string Kernel::describe() const {
  std::ostringstream os;
  os.precision(17);
  std::visit(Overloaded{
                 [&](const TopHat& t) { os << "tophat(c=" << t.c << ", radius=" << t.radius; },
                 [&](const Gaussian& g) { os << "gaussian(c=" << g.c << ", sigma=" << g.sigma; },
                 [&](const TabulatedRadial& t) { os << "tabulated(rows=" << t.radii.size(); },
             },
             shape_);
  os << ", d=" << dim_ << ")";
  return os.str();
}

double tabulated_mass(const TabulatedRadial& table, int dim, int subdivisions) {
  // radial integral of a(r) |S^{d-1}| r^{d-1}; the flat core [0, r_0) is
  // integrated exactly.
  auto weight = [dim](double r) { return dim == 1 ? 1.0 : std::pow(r, dim - 1); };
  double sum = table.values.front() * std::pow(table.radii.front(), dim) / dim;
  for (std::size_t i = 0; i + 1 < table.radii.size(); ++i) {
    double r0 = table.radii[i];
    double h = (table.radii[i + 1] - r0) / subdivisions;
    double v0 = table.values[i];
    double dv = table.values[i + 1] - v0;
    for (int s = 0; s < subdivisions; ++s) {
      double ra = r0 + s * h;
      double rb = s + 1 == subdivisions ? table.radii[i + 1] : ra + h;
      double fa = (v0 + dv * (ra - r0) / (table.radii[i + 1] - r0)) * weight(ra);
      double fb = (v0 + dv * (rb - r0) / (table.radii[i + 1] - r0)) * weight(rb);
      sum += 0.5 * (rb - ra) * (fa + fb);
    }
  }
  return sum * unit_sphere_area(dim);
}

double kernel_value(const Kernel& k, const Point& displacement, const Metric& metric) {
  if (!metric.periodic()) return k(displacement);
  Point d = metric.displacement(displacement, Point{0.0, 0.0, 0.0});
  if (!std::holds_alternative<Gaussian>(k.shape())) return k(d);
  const double box = metric.box;
  double sum = 0.0;
  const int nx = 1;
  const int ny = metric.dim >= 2 ? 1 : 0;
  const int nz = metric.dim >= 3 ? 1 : 0;
  for (int i = -nx; i <= nx; ++i)
    for (int j = -ny; j <= ny; ++j)
      for (int l = -nz; l <= nz; ++l)
        sum += k(Point{d[0] + i * box, d[1] + j * box, d[2] + l * box});
  return sum;
}

void check_torus_admissible(const Kernel& k, double box, const std::string& name) {
  double range = k.range();
  if (std::isfinite(range) && range >= 0.5 * box) {
    std::ostringstream os;
    os << name << " kernel range " << range << " must be below half the torus edge L/2 = " << 0.5 * box
       << " (finite-range kernels are evaluated at the minimum image)";
    throw ConfigError(os.str());
  }
}

double wrapping_truncation_error(const Kernel& k, double box) {
  if (const auto* g = std::get_if<Gaussian>(&k.shape())) {
    double z = box / (2.0 * g->sigma);
    return std::exp(-0.5 * z * z);
  }
  return 0.0;
}

void KernelPair::validate(bool allow_no_competition) const {
  if (a_minus.dim() != a_plus.dim()) throw ConfigError("competition and dispersal kernels differ in dimension");
  if (!(std::isfinite(m) && m >= 0.0)) throw ConfigError("mortality m must be finite and >= 0");
  if (a_minus.l1_norm() <= 0.0 && !allow_no_competition)
    throw ConfigError("competition kernel has zero mass; set allow_no_competition = true to request it");
}

double interaction_energy(const Point& x, std::span<const Point> eta, const Kernel& k,
                          const Metric& metric) {
  double sum = 0.0;
  for (const Point& y : eta) sum += kernel_value(k, metric.displacement(x, y), metric);
  return sum;
}

double total_energy(std::span<const Point> eta, const Kernel& k, const Metric& metric) {
  double sum = 0.0;
  for (std::size_t i = 0; i < eta.size(); ++i)
    for (std::size_t j = i + 1; j < eta.size(); ++j)
      sum += kernel_value(k, metric.displacement(eta[i], eta[j]), metric);
  return 2.0 * sum;
}

double death_energy(std::span<const Point> eta, const KernelPair& pair, double b,
                    const Metric& metric) {
  return (pair.m + b) * static_cast<double>(eta.size()) + total_energy(eta, pair.a_minus, metric);
}

double phi_theta(const Point& x, const KernelPair& pair, double theta) {
  return pair.a_minus(x) - theta * pair.a_plus(x);
}

}  // namespace bdlp
