#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "bdlp/errors.hpp"
#include "bdlp/hierarchy.hpp"

using namespace bdlp;

namespace {

double sup_abs(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s = std::max(s, std::abs(x));
  return s;
}

// O(N^2) periodic convolution on the grid, indices decomposed per axis.
std::vector<double> direct_convolution(const Grid& g, const std::vector<double>& f, const std::vector<double>& k) {
  const int n = g.points_per_axis;
  const std::size_t size = g.size();
  std::vector<double> out(size, 0.0);
  auto split = [&](std::size_t i, int* c) {
    for (int a = 0; a < g.dim; ++a) {
      c[a] = static_cast<int>(i % n);
      i /= n;
    }
  };
  for (std::size_t i = 0; i < size; ++i) {
    int ci[3] = {0, 0, 0};
    split(i, ci);
    for (std::size_t j = 0; j < size; ++j) {
      int cj[3] = {0, 0, 0};
      split(j, cj);
      std::size_t diff = 0, stride = 1;
      for (int a = 0; a < g.dim; ++a) {
        diff += static_cast<std::size_t>(((ci[a] - cj[a]) % n + n) % n) * stride;
        stride *= n;
      }
      out[i] += f[j] * k[diff];
    }
    out[i] *= g.cell_volume();
  }
  return out;
}

KernelPair gaussian_pair(int d, double c_minus, double c_plus, double sigma, double m) {
  return {Kernel::gaussian(c_minus, sigma, d), Kernel::gaussian(c_plus, sigma, d), m};
}

}  // namespace

TEST_CASE("grid displacements and mirror") {
  Grid g{2, 8.0, 8};
  CHECK(g.size() == 64);
  CHECK(g.spacing() == 1.0);
  CHECK(g.displacement(3)[0] == 3.0);
  CHECK(g.displacement(4)[0] == 4.0);
  CHECK(g.displacement(5)[0] == -3.0);
  CHECK(g.displacement(8 * 7)[1] == -1.0);
  for (std::size_t i = 0; i < g.size(); ++i) {
    Point a = g.displacement(i), b = g.displacement(g.mirror(i));
    for (int k = 0; k < 2; ++k) CHECK(std::abs(std::remainder(a[k] + b[k], g.L)) < 1e-12);
    CHECK(g.mirror(g.mirror(i)) == i);
  }
  CHECK_THROWS_AS(Grid({1, 1.0, 2}).validate(), ConfigError);
}

TEST_CASE("spectral convolution equals direct sums on 16-point grids") {
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int dim : {1, 2}) {
    Grid g{dim, 7.0, 16};
    std::vector<double> f(g.size()), k(g.size());
    for (auto& x : f) x = u(rng);
    for (auto& x : k) x = u(rng);
    auto fast = convolve(g, f, k);
    auto slow = direct_convolution(g, f, k);
    double diff = 0.0;
    for (std::size_t i = 0; i < f.size(); ++i) diff = std::max(diff, std::abs(fast[i] - slow[i]));
    CHECK(diff <= 1e-10);
  }
}

TEST_CASE("convolution identities") {
  Grid g{1, 16.0, 64};
  auto k = Kernel::gaussian(1.5, 1.0, 1);
  std::vector<double> delta(g.size(), 0.0);
  delta[0] = 1.0 / g.cell_volume();
  auto out = convolve(g, delta, k);
  auto sampled = sample_kernel(g, k);
  for (std::size_t i = 0; i < g.size(); ++i) CHECK(out[i] == doctest::Approx(sampled[i]).epsilon(1e-12));

  std::vector<double> constant(g.size(), 2.5);
  auto flat = convolve(g, constant, k);
  double mass = 0.0;
  for (double v : sampled) mass += v * g.cell_volume();
  for (double v : flat) CHECK(v == doctest::Approx(2.5 * mass).epsilon(1e-12));
  CHECK(mass == doctest::Approx(1.5).epsilon(1e-12));
}

TEST_CASE("first-order rhs") {
  Grid g{1, 20.0, 128};
  KernelPair contact{Kernel::zero(1), Kernel::gaussian(1.0, 1.0, 1), 0.3};
  HierarchyModel model(g, contact);
  auto s = TruncatedCorrelation::poisson(g, 2.0);
  CHECK(model.rhs_order1(s) == doctest::Approx((model.plus_mass() - 0.3) * 2.0).epsilon(1e-14));
  CHECK(model.plus_mass() == doctest::Approx(1.0).epsilon(1e-12));
  auto empty = TruncatedCorrelation::poisson(g, 0.0);
  HierarchyModel competing(g, gaussian_pair(1, 1.0, 1.0, 1.0, 0.5));
  CHECK(competing.rhs_order1(empty) == 0.0);
}

TEST_CASE("stationary triple cancels for both closures") {
  for (int dim : {1, 2}) {
    Grid g{dim, 16.0, dim == 1 ? 128 : 48};
    const double theta = 2.0;
    HierarchyModel model(g, gaussian_pair(dim, theta * 0.8, 0.8, 1.1, 0.0));
    TruncatedCorrelation s = TruncatedCorrelation::poisson(g, 1.0 / theta);
    CHECK(std::abs(model.rhs_order1(s)) <= 1e-10);
    for (Closure c : {Closure::Poisson, Closure::Kirkwood}) {
      auto r = model.rhs_order2(s, c);
      CHECK(sup_abs(r) <= 1e-10 * 0.8 / (theta * theta));
    }
  }
}

TEST_CASE("pure mortality decays k2 at rate 2m") {
  Grid g{1, 10.0, 32};
  KernelPair none{Kernel::zero(1), Kernel::zero(1), 0.7};
  HierarchyModel model(g, none);
  auto s = TruncatedCorrelation::poisson(g, 1.3);
  for (Closure c : {Closure::Poisson, Closure::Kirkwood}) {
    auto r = model.rhs_order2(s, c);
    for (std::size_t i = 0; i < r.size(); ++i) CHECK(r[i] == doctest::Approx(-2.0 * 0.7 * s.k2[i]).epsilon(1e-14));
  }
  IntegrateOptions opt;
  opt.t_end = 2.0;
  opt.dt = 1e-3;
  auto traj = integrate(model, s, Closure::Poisson, opt);
  const auto& last = traj.states.back();
  CHECK(last.k2[5] == doctest::Approx(1.69 * std::exp(-2.0 * 0.7 * 2.0)).epsilon(1e-10));
  CHECK(last.rho == doctest::Approx(1.3 * std::exp(-0.7 * 2.0)).epsilon(1e-10));
}

TEST_CASE("contact pair equation from hand derivation") {
  // a- = 0, Poisson closure, k2 = rho^2:
  // dk2/dt(x) = -2 m rho^2 + 2 a+(x) rho + 2 rho^2 <a+>_grid
  Grid g{1, 8.0, 16};
  const double m = 0.4, rho = 1.7;
  auto ap = Kernel::gaussian(0.9, 0.6, 1);
  HierarchyModel model(g, {Kernel::zero(1), ap, m});
  auto r = model.rhs_order2(TruncatedCorrelation::poisson(g, rho), Closure::Poisson);
  double mass = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double x = g.displacement(i)[0];
    double v = 0.0;
    for (int n = -1; n <= 1; ++n)
      v += 0.9 / std::sqrt(2.0 * M_PI * 0.36) * std::exp(-(x + n * 8.0) * (x + n * 8.0) / (2.0 * 0.36));
    mass += v * g.spacing();
  }
  for (std::size_t i : {0u, 1u, 4u, 8u, 13u}) {
    const double x = g.displacement(i)[0];
    double a = 0.0;
    for (int n = -1; n <= 1; ++n)
      a += 0.9 / std::sqrt(2.0 * M_PI * 0.36) * std::exp(-(x + n * 8.0) * (x + n * 8.0) / (2.0 * 0.36));
    const double expected = -2.0 * m * rho * rho + 2.0 * a * rho + 2.0 * rho * rho * mass;
    CHECK(r[i] == doctest::Approx(expected).epsilon(1e-12));
  }
}

TEST_CASE("kirkwood needs a positive density") {
  Grid g{1, 10.0, 16};
  HierarchyModel model(g, gaussian_pair(1, 1.0, 1.0, 1.0, 0.0));
  auto s = TruncatedCorrelation::poisson(g, 0.0);
  CHECK_THROWS_AS(model.rhs_order2(s, Closure::Kirkwood), DegenerateClosureError);
  CHECK_NOTHROW(model.rhs_order2(s, Closure::Poisson));
}

TEST_CASE("zero horizon returns the initial state") {
  Grid g{1, 10.0, 32};
  HierarchyModel model(g, gaussian_pair(1, 1.0, 1.0, 1.0, 0.5));
  auto s = TruncatedCorrelation::poisson(g, 0.8);
  IntegrateOptions opt;
  auto traj = integrate(model, s, Closure::Kirkwood, opt);
  REQUIRE(traj.states.size() == 1);
  CHECK(traj.states[0].rho == 0.8);
  CHECK(traj.states[0].k2 == s.k2);
}

TEST_CASE("contact density follows the exponential law") {
  Grid g{1, 20.0, 256};
  const double m = 0.5, kappa = 5.0;
  HierarchyModel model(g, {Kernel::zero(1), Kernel::gaussian(1.0, 1.0, 1), m});
  IntegrateOptions opt;
  opt.t_end = 2.0;
  opt.dt = 1e-3;
  opt.observe_every = 0.5;
  auto traj = integrate(model, TruncatedCorrelation::poisson(g, kappa), Closure::Poisson, opt);
  for (std::size_t k = 0; k < traj.times.size(); ++k) {
    const double exact = kappa * std::exp((1.0 - m) * traj.times[k]);
    CHECK(std::abs(traj.states[k].rho - exact) / exact < 1e-6);
  }
}

TEST_CASE("fourth-order convergence") {
  Grid g{1, 12.0, 64};
  HierarchyModel model(g, gaussian_pair(1, 1.0, 1.4, 0.8, 0.2));
  auto s0 = TruncatedCorrelation::poisson(g, 1.5);
  auto run = [&](double dt) {
    IntegrateOptions opt;
    opt.t_end = 2.0;
    opt.dt = dt;
    return integrate(model, s0, Closure::Kirkwood, opt).states.back();
  };
  auto ref = run(0.2 / 256.0);
  auto err = [&](double dt) {
    auto s = run(dt);
    double e = std::abs(s.rho - ref.rho);
    for (std::size_t i = 0; i < s.k2.size(); ++i) e = std::max(e, std::abs(s.k2[i] - ref.k2[i]));
    return e;
  };
  const double e1 = err(0.05), e2 = err(0.025), e3 = err(0.0125);
  const double slope = std::log(e1 / e3) / std::log(4.0);
  CHECK(std::abs(slope - 4.0) <= 0.3);
  CHECK(e1 / e2 > 12.0);
  CHECK(e2 / e3 > 12.0);
}

TEST_CASE("integration preserves evenness") {
  Grid g{2, 10.0, 32};
  HierarchyModel model(g, {Kernel::gaussian(0.6, 0.7, 2), Kernel::gaussian(1.0, 1.2, 2), 0.3});
  auto s = TruncatedCorrelation::poisson(g, 1.0);
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0.5, 1.5);
  for (std::size_t i = 0; i < g.size(); ++i) {
    std::size_t j = g.mirror(i);
    if (j < i) continue;
    s.k2[i] = s.k2[j] = u(rng);
  }
  IntegrateOptions opt;
  opt.t_end = 1.0;
  opt.dt = 0.01;
  auto traj = integrate(model, s, Closure::Kirkwood, opt);
  const auto& k2 = traj.states.back().k2;
  for (std::size_t i = 0; i < g.size(); ++i) CHECK(std::abs(k2[i] - k2[g.mirror(i)]) <= 1e-12 * std::abs(k2[i]));
}

TEST_CASE("step halving reaches the tolerance") {
  Grid g{1, 12.0, 32};
  HierarchyModel model(g, gaussian_pair(1, 1.0, 1.0, 1.0, 0.1));
  IntegrateOptions opt;
  opt.t_end = 1.0;
  opt.dt = 0.5;
  opt.rtol = 1e-8;
  auto traj = integrate(model, TruncatedCorrelation::poisson(g, 1.2), Closure::Kirkwood, opt);
  CHECK(traj.dt_used < 0.5);
  CHECK(traj.valid);
  CHECK(std::none_of(traj.warnings.begin(), traj.warnings.end(),
                     [](const std::string& w) { return w.find("rtol") != std::string::npos; }));
  CHECK(std::any_of(traj.warnings.begin(), traj.warnings.end(),
                    [](const std::string& w) { return w.find("heuristic") != std::string::npos; }));
}

TEST_CASE("blow-up aborts") {
  Grid g{1, 10.0, 16};
  HierarchyModel model(g, {Kernel::zero(1), Kernel::zero(1), 1000.0});
  IntegrateOptions opt;
  opt.t_end = 200.0;
  opt.dt = 1.0;
  CHECK_THROWS_AS(integrate(model, TruncatedCorrelation::poisson(g, 1.0), Closure::Poisson, opt), IntegrationAbort);
}

TEST_CASE("recommended step") {
  KernelPair p = gaussian_pair(1, 2.0, 1.0, 1.0, 0.5);
  CHECK(recommended_dt(p, 1.5) == doctest::Approx(0.1 / 3.5));
  KernelPair q{Kernel::zero(1), Kernel::gaussian(4.0, 1.0, 1), 0.5};
  CHECK(recommended_dt(q, 1.0) == doctest::Approx(0.025));
}

TEST_CASE("closure names") {
  CHECK(parse_closure("poisson") == Closure::Poisson);
  CHECK(parse_closure("kirkwood") == Closure::Kirkwood);
  CHECK_THROWS_AS(parse_closure("gaussian"), ConfigError);
  CHECK(to_string(Closure::Kirkwood) == "kirkwood");
}

TEST_CASE("torus admissibility is enforced") {
  Grid g{1, 4.0, 16};
  KernelPair wide{Kernel::top_hat(1.0, 2.5, 1), Kernel::top_hat(1.0, 1.0, 1), 0.0};
  CHECK_THROWS_AS(HierarchyModel(g, wide), ConfigError);
}
