#include "bdlp/hierarchy.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "bdlp/errors.hpp"
#include "bdlp/observation.hpp"
#include "spectral.hpp"

namespace bdlp {

std::size_t Grid::size() const {
  std::size_t n = 1;
  for (int k = 0; k < dim; ++k) n *= static_cast<std::size_t>(points_per_axis);
  return n;
}

double Grid::cell_volume() const { return std::pow(spacing(), dim); }

Point Grid::displacement(std::size_t i) const {
  Point x{0.0, 0.0, 0.0};
  const auto n = static_cast<std::size_t>(points_per_axis);
  for (int k = 0; k < dim; ++k) {
    std::size_t j = i % n;
    i /= n;
    double s = 2 * j <= n ? static_cast<double>(j) : static_cast<double>(j) - static_cast<double>(n);
    x[k] = s * spacing();
  }
  return x;
}

std::size_t Grid::mirror(std::size_t i) const {
  const auto n = static_cast<std::size_t>(points_per_axis);
  std::size_t out = 0;
  std::size_t stride = 1;
  for (int k = 0; k < dim; ++k) {
    std::size_t j = i % n;
    i /= n;
    out += ((n - j) % n) * stride;
    stride *= n;
  }
  return out;
}

void Grid::validate() const {
  if (dim < 1 || dim > kMaxDim) throw ConfigError("grid dimension must be 1, 2 or 3");
  if (!(L > 0.0 && std::isfinite(L))) throw ConfigError("grid edge L must be positive");
  if (points_per_axis < 4) throw ConfigError("grid_points must be at least 4");
}

std::vector<double> sample_kernel(const Grid& grid, const Kernel& k) {
  const Metric metric = Metric::torus(grid.dim, grid.L);
  std::vector<double> out(grid.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = kernel_value(k, grid.displacement(i), metric);
  return out;
}

std::vector<double> convolve(const Grid& grid, std::span<const double> f, std::span<const double> g) {
  if (f.size() != grid.size() || g.size() != grid.size()) throw PreconditionError("grid size mismatch");
  detail::PeriodicConvolver conv(grid.dim, grid.points_per_axis);
  auto g_hat = conv.transform(g);
  std::vector<double> out(grid.size());
  conv.convolve(f, g_hat, out);
  const double h = grid.cell_volume();
  for (double& v : out) v *= h;
  return out;
}

std::vector<double> convolve(const Grid& grid, std::span<const double> f, const Kernel& k) {
  auto sampled = sample_kernel(grid, k);
  return convolve(grid, f, sampled);
}

TruncatedCorrelation TruncatedCorrelation::poisson(const Grid& grid, double kappa) {
  return {kappa, std::vector<double>(grid.size(), kappa * kappa)};
}

double TruncatedCorrelation::k2_sup() const {
  return k2.empty() ? 0.0 : *std::max_element(k2.begin(), k2.end());
}

Closure parse_closure(const std::string& name) {
  if (name == "poisson") return Closure::Poisson;
  if (name == "kirkwood") return Closure::Kirkwood;
  throw ConfigError("unknown closure '" + name + "' (expected poisson or kirkwood)");
}

std::string to_string(Closure c) { return c == Closure::Poisson ? "poisson" : "kirkwood"; }

HierarchyModel::HierarchyModel(const Grid& grid, const KernelPair& pair)
    : grid_(grid),
      pair_(pair),
      convolver_(std::make_shared<detail::PeriodicConvolver>(grid.dim, grid.points_per_axis)) {
  grid.validate();
  if (pair.dim() != grid.dim) throw ConfigError("kernel dimension differs from grid dimension");
  check_torus_admissible(pair.a_minus, grid.L, "competition");
  check_torus_admissible(pair.a_plus, grid.L, "dispersal");
  a_minus_ = sample_kernel(grid, pair.a_minus);
  a_plus_ = sample_kernel(grid, pair.a_plus);
  plus_mass_ = integrate(a_plus_);
  minus_mass_ = integrate(a_minus_);
  a_plus_hat_ = convolver_->transform(a_plus_);
}

double HierarchyModel::integrate(std::span<const double> f) const {
  double s = 0.0;
  for (double v : f) s += v;
  return s * grid_.cell_volume();
}

double HierarchyModel::rhs_order1(const TruncatedCorrelation& state) const {
  double competition = 0.0;
  for (std::size_t i = 0; i < a_minus_.size(); ++i) competition += a_minus_[i] * state.k2[i];
  competition *= grid_.cell_volume();
  return (plus_mass_ - pair_.m) * state.rho - competition;
}

std::vector<double> HierarchyModel::rhs_order2(const TruncatedCorrelation& state, Closure closure) const {
  const std::size_t n = grid_.size();
  const double h = grid_.cell_volume();
  const double rho = state.rho;
  const auto& k2 = state.k2;
  if (k2.size() != n) throw PreconditionError("k2 does not match the grid");

  std::vector<double> dispersal(n);
  convolver_->convolve(k2, a_plus_hat_, dispersal);

  std::vector<double> triple(n);
  if (closure == Closure::Poisson) {
    std::fill(triple.begin(), triple.end(), rho * rho * rho * minus_mass_);
  } else {
    if (!(rho > 0.0)) throw DegenerateClosureError("Kirkwood closure needs rho > 0");
    std::vector<double> weighted(n);
    for (std::size_t i = 0; i < n; ++i) weighted[i] = a_minus_[i] * k2[i];
    auto k2_hat = convolver_->transform(k2);
    convolver_->convolve(weighted, k2_hat, triple);
    const double inv = h / (rho * rho * rho);
    for (std::size_t i = 0; i < n; ++i) triple[i] *= k2[i] * inv;
  }

  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    out[i] = -2.0 * (pair_.m + a_minus_[i]) * k2[i] - 2.0 * triple[i] + 2.0 * a_plus_[i] * rho +
             2.0 * h * dispersal[i];
  }
  return out;
}

double recommended_dt(const KernelPair& pair, double rho0) {
  double rate = std::max(pair.m + pair.a_minus.l1_norm() * rho0, pair.a_plus.l1_norm());
  return rate > 0.0 ? 0.1 / rate : std::numeric_limits<double>::infinity();
}

namespace {

struct Derivative {
  double rho = 0.0;
  std::vector<double> k2;
};

Derivative evaluate(const HierarchyModel& model, const TruncatedCorrelation& s, Closure closure) {
  return {model.rhs_order1(s), model.rhs_order2(s, closure)};
}

TruncatedCorrelation axpy(const TruncatedCorrelation& s, double a, const Derivative& d) {
  TruncatedCorrelation out{s.rho + a * d.rho, s.k2};
  for (std::size_t i = 0; i < out.k2.size(); ++i) out.k2[i] += a * d.k2[i];
  return out;
}

void check_finite(const TruncatedCorrelation& s, double t) {
  auto bad = [](double v) { return !std::isfinite(v) || std::abs(v) > 1e300; };
  bool broken = bad(s.rho);
  for (double v : s.k2) broken = broken || bad(v);
  if (broken) {
    std::ostringstream os;
    os << "hierarchy integration diverged (NaN or overflow) at t = " << t;
    throw IntegrationAbort(os.str());
  }
}

HierarchyTrajectory integrate_fixed(const HierarchyModel& model, const TruncatedCorrelation& initial,
                                    Closure closure, const IntegrateOptions& options, double dt) {
  HierarchyTrajectory traj;
  traj.dt_used = dt;
  TruncatedCorrelation state = initial;
  double k2_mass = model.integrate(state.k2);
  double t = 0.0;
  for (double t_obs : observation_times(options.t_end, options.observe_every)) {
    const double interval = t_obs - t;
    if (interval > 0.0) {
      const long steps = std::max(1L, static_cast<long>(std::ceil(interval / dt - 1e-9)));
      const double h = interval / static_cast<double>(steps);
      for (long s = 0; s < steps; ++s) {
        Derivative k1 = evaluate(model, state, closure);
        Derivative k2 = evaluate(model, axpy(state, 0.5 * h, k1), closure);
        Derivative k3 = evaluate(model, axpy(state, 0.5 * h, k2), closure);
        Derivative k4 = evaluate(model, axpy(state, h, k3), closure);
        state.rho += h / 6.0 * (k1.rho + 2.0 * k2.rho + 2.0 * k3.rho + k4.rho);
        for (std::size_t i = 0; i < state.k2.size(); ++i)
          state.k2[i] += h / 6.0 * (k1.k2[i] + 2.0 * k2.k2[i] + 2.0 * k3.k2[i] + k4.k2[i]);
        check_finite(state, t + (s + 1) * h);
        if (state.rho < 0.0) {
          state.rho = 0.0;
          ++traj.clip_events;
        }
        for (double& v : state.k2)
          if (v < 0.0) {
            traj.clip_mass += -v * model.grid().cell_volume();
            ++traj.clip_events;
            v = 0.0;
          }
        k2_mass = std::max(k2_mass, model.integrate(state.k2));
      }
    }
    t = t_obs;
    traj.times.push_back(t_obs);
    traj.states.push_back(state);
  }
  traj.valid = traj.clip_mass <= 1e-6 * k2_mass;
  return traj;
}

double trajectory_difference(const HierarchyTrajectory& a, const HierarchyTrajectory& b) {
  double worst = 0.0;
  for (std::size_t k = 0; k < a.states.size() && k < b.states.size(); ++k) {
    const auto& x = a.states[k];
    const auto& y = b.states[k];
    double scale = std::max(std::abs(y.rho), 1e-300);
    worst = std::max(worst, std::abs(x.rho - y.rho) / scale);
    double sup = std::max(y.k2_sup(), 1e-300);
    for (std::size_t i = 0; i < x.k2.size(); ++i) worst = std::max(worst, std::abs(x.k2[i] - y.k2[i]) / sup);
  }
  return worst;
}

}  // namespace

HierarchyTrajectory integrate(const HierarchyModel& model, const TruncatedCorrelation& initial,
                              Closure closure, const IntegrateOptions& options) {
  if (!(options.dt > 0.0)) throw ConfigError("dt must be positive");
  if (initial.k2.size() != model.grid().size()) throw PreconditionError("initial k2 does not match the grid");
  std::vector<std::string> warnings;
  const double advised = recommended_dt(model.pair(), initial.rho);
  if (options.dt > advised) {
    std::ostringstream os;
    os << "dt = " << options.dt << " exceeds the stability heuristic " << advised;
    warnings.push_back(os.str());
  }
  HierarchyTrajectory traj = integrate_fixed(model, initial, closure, options, options.dt);
  if (options.rtol > 0.0) {
    bool converged = false;
    double dt = options.dt;
    for (int h = 0; h < options.max_halvings; ++h) {
      dt *= 0.5;
      HierarchyTrajectory finer = integrate_fixed(model, initial, closure, options, dt);
      double diff = trajectory_difference(traj, finer);
      traj = std::move(finer);
      if (diff < options.rtol) {
        converged = true;
        break;
      }
    }
    if (!converged) warnings.push_back("step halving did not reach rtol");
  }
  if (!traj.valid) warnings.push_back("clipped negative k2 mass exceeds 1e-6 of the k2 mass; run flagged invalid");
  traj.warnings.insert(traj.warnings.begin(), warnings.begin(), warnings.end());
  return traj;
}

}  // namespace bdlp
