#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "bdlp/errors.hpp"
#include "bdlp/stability.hpp"

using namespace bdlp;

namespace {

KernelPair top_hats(int d, double cm, double r, double cp, double big_r) {
  return {Kernel::top_hat(cm, r, d), Kernel::top_hat(cp, big_r, d), 0.0};
}

KernelPair gaussians(int d, double cm, double sm, double cp, double sp) {
  return {Kernel::gaussian(cm, sm, d), Kernel::gaussian(cp, sp, d), 0.0};
}

BruteForceOptions quick(long trials = 400) {
  BruteForceOptions o;
  o.trials = trials;
  o.sweeps = 60;
  return o;
}

}  // namespace

TEST_CASE("pointwise domination for top hats") {
  auto c = pointwise_theta(top_hats(2, 3.0, 1.0, 1.5, 0.8));
  REQUIRE(c);
  CHECK(c->theta == 2.0);
  CHECK(c->b == 0.0);
  CHECK(c->source == CertificateSource::PointwiseDomination);
  CHECK_FALSE(pointwise_theta(top_hats(1, 1.0, 0.5, 1.0, 1.0)));
}

TEST_CASE("pointwise domination for gaussians") {
  auto c = pointwise_theta(gaussians(1, 1.0, 2.0, 1.0, 1.0));
  REQUIRE(c);
  CHECK(c->theta == doctest::Approx(0.5).epsilon(1e-15));
  auto c3 = pointwise_theta(gaussians(3, 2.0, 1.5, 1.0, 1.0));
  REQUIRE(c3);
  CHECK(c3->theta == doctest::Approx(std::pow(1.0 / 1.5, 3) * 2.0).epsilon(1e-14));
  CHECK_FALSE(pointwise_theta(gaussians(1, 1.0, 1.0, 1.0, 2.0)));
}

TEST_CASE("pointwise scan agrees with the closed-form infimum") {
  // a- = 2 (1 - r/2) on [0, 2), a+ top hat of height 1 on [0, 1): ratio minimum 1 at r -> 1
  KernelPair p{Kernel::tabulated({0.0, 2.0}, {2.0, 0.0}, 1), Kernel::top_hat(1.0, 1.0, 1), 0.0};
  auto c = pointwise_theta(p);
  REQUIRE(c);
  CHECK(c->theta == doctest::Approx(1.0).epsilon(1e-9));
  for (double r = 0.0; r < 1.0; r += 1e-3) CHECK(p.a_minus.radial(r) >= c->theta * p.a_plus.radial(r) - 1e-12);
}

TEST_CASE("zero dispersal gives no pointwise certificate") {
  KernelPair p{Kernel::top_hat(1.0, 1.0, 1), Kernel::zero(1), 0.0};
  CHECK_FALSE(pointwise_theta(p));
}

TEST_CASE("rescale") {
  CHECK(rescale(1.0, 2.0, 0.5) == 1.0);
  CHECK(rescale(0.7, 1.3, 0.7) == 1.3);
  CHECK(rescale(4.0, 0.0, 1.0) == 0.0);
  CHECK_THROWS_AS(rescale(1.0, 1.0, 1.5), PreconditionError);
  CHECK_THROWS_AS(rescale(1.0, 1.0, 0.0), PreconditionError);
  // composition
  const double b1 = rescale(1.0, 2.0, 0.5);
  CHECK(rescale(0.5, b1, 0.25) == rescale(1.0, 2.0, 0.25));
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0.01, 1.0);
  for (int i = 0; i < 200; ++i) {
    double t0 = 1.0, b0 = 3.0 * u(rng), t1 = u(rng), t2 = t1 * u(rng);
    CHECK(rescale(t1, rescale(t0, b0, t1), t2) == doctest::Approx(rescale(t0, b0, t2)).epsilon(1e-14));
  }
}

TEST_CASE("packing bound") {
  CHECK(packing_bound(1, 0.5, 1.0) == 5);
  CHECK(packing_bound(2, 1.0, 1.5) == 15);
  CHECK(packing_bound(2, 1.0, 1.5) == static_cast<long>(std::ceil(M_PI / std::sqrt(12.0) * 16.0)));
  CHECK(packing_bound(3, 1.0, 1.0) == static_cast<long>(std::ceil(M_PI / std::sqrt(18.0) * 27.0)));
  CHECK(packing_density(4) == 1.0);
}

TEST_CASE("finite range certificate in one dimension") {
  auto c = finite_range_theta(top_hats(1, 1.0, 0.5, 1.0, 1.0), 1.0);
  CHECK(c.packing_bound.value() == 5);
  CHECK(c.theta == doctest::Approx(0.125).epsilon(1e-15));
  CHECK(c.b == 1.0);
  CHECK(c.source == CertificateSource::FiniteRangePacking);

  auto equal = finite_range_theta(top_hats(1, 2.0, 1.0, 4.0, 1.0), 0.7);
  CHECK(equal.theta == 0.5);
  CHECK(equal.b == 0.0);
  CHECK_FALSE(equal.packing_bound);
}

TEST_CASE("finite range certificate in two dimensions") {
  auto c = finite_range_theta(top_hats(2, 2.0, 1.0, 1.0, 1.5), 0.5);
  CHECK(c.packing_bound.value() == 15);
  CHECK(c.theta == doctest::Approx(std::min(2.0 / 15.0, 0.5 / (2.0 * 14.0))).epsilon(1e-15));
  auto r = verify_bruteforce(top_hats(2, 2.0, 1.0, 1.0, 1.5), c.theta, c.b, quick());
  CHECK(r.min_u >= -1e-9);
}

TEST_CASE("finite range preconditions") {
  CHECK_THROWS_AS(finite_range_theta(top_hats(1, 1.0, 0.5, 1.0, 1.0), 0.0), PreconditionError);
  KernelPair g{Kernel::top_hat(1.0, 0.5, 1), Kernel::gaussian(1.0, 1.0, 1), 0.0};
  CHECK_THROWS_AS(finite_range_theta(g, 1.0), UnsupportedShapeError);
}

TEST_CASE("gaussian certificates") {
  auto same = gaussian_theta(gaussians(1, 1.0, 1.0, 1.0, 1.0), 0.0);
  CHECK(same.theta == 1.0);
  CHECK(same.b == 0.0);
  auto wide = gaussian_theta(gaussians(1, 1.0, 2.0, 1.0, 1.0), 0.0);
  CHECK(wide.theta == doctest::Approx(0.5).epsilon(1e-15));

  const double b0 = (1.0 / std::sqrt(2.0 * M_PI)) * (1.0 - 0.5);
  CHECK(b0 == doctest::Approx(0.19947114020071635).epsilon(1e-15));
  auto at_b0 = gaussian_theta(gaussians(1, 1.0, 1.0, 1.0, 2.0), b0);
  CHECK(at_b0.theta == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(at_b0.b == doctest::Approx(b0).epsilon(1e-14));
  CHECK(at_b0.source == CertificateSource::GaussianFourier);

  auto half = gaussian_theta(gaussians(1, 1.0, 1.0, 1.0, 2.0), 0.5 * b0);
  CHECK(half.theta == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(half.b == doctest::Approx(0.5 * b0).epsilon(1e-14));
  CHECK(half.source == CertificateSource::Rescaled);

  KernelPair mixed{Kernel::top_hat(1.0, 1.0, 1), Kernel::gaussian(1.0, 1.0, 1), 0.0};
  CHECK_THROWS_AS(gaussian_theta(mixed, 1.0), UnsupportedShapeError);
  CHECK_THROWS_AS(gaussian_theta(gaussians(1, 1.0, 1.0, 1.0, 2.0), 0.0), PreconditionError);
}

TEST_CASE("stability functional on small configurations") {
  auto p = top_hats(1, 1.0, 0.5, 1.0, 1.0);
  std::vector<Point> none;
  CHECK(stability_functional(none, p, 0.3, 0.2) == 0.0);
  std::vector<Point> one{{0, 0, 0}};
  CHECK(stability_functional(one, p, 0.3, 0.2) == 0.2);
  std::vector<Point> two{{0, 0, 0}, {0.7, 0, 0}};
  // only a+ acts at distance 0.7
  CHECK(stability_functional(two, p, 0.3, 0.2) == doctest::Approx(0.4 - 2.0 * 0.3).epsilon(1e-15));
}

TEST_CASE("two-point criterion theta <= b / c+ is exact") {
  auto p = top_hats(1, 1.0, 0.5, 2.0, 1.0);
  const double b = 0.6;
  const double theta = b / 2.0;
  for (double u = 0.0; u < 1.5; u += 1e-3) {
    std::vector<Point> eta{{0, 0, 0}, {u, 0, 0}};
    CHECK(stability_functional(eta, p, theta, b) >= -1e-12);
  }
  std::vector<Point> bad{{0, 0, 0}, {0.75, 0, 0}};
  CHECK(stability_functional(bad, p, 1.01 * theta, b) < 0.0);
}

TEST_CASE("monotonicity in theta") {
  auto p = top_hats(2, 1.0, 0.5, 1.0, 1.0);
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0.0, 2.0);
  for (int i = 0; i < 100; ++i) {
    std::vector<Point> eta(5, Point{0, 0, 0});
    for (auto& x : eta) x = {u(rng), u(rng), 0};
    double hi = stability_functional(eta, p, 0.4, 0.3);
    double lo = stability_functional(eta, p, 0.2, 0.3);
    CHECK(lo >= hi);
  }
}

TEST_CASE("oracle on exact cancellation") {
  auto g = gaussians(1, 1.0, 1.0, 1.0, 1.0);
  auto r = verify_bruteforce(g, 1.0, 0.0, quick(200));
  CHECK(r.min_u >= -1e-12);
}

TEST_CASE("oracle confirms certificates and refutes inflated ones") {
  auto p = top_hats(1, 1.0, 0.5, 1.0, 1.0);
  auto c = finite_range_theta(p, 1.0);
  auto ok = verify_bruteforce(p, c.theta, c.b, quick());
  CHECK(ok.min_u >= -1e-9);
  auto bad = verify_bruteforce(p, 10.0 * c.theta, c.b, quick());
  CHECK(bad.min_u < 0.0);
  CHECK(bad.worst_config.size() >= 2);
  CHECK(stability_functional(bad.worst_config, p, 10.0 * c.theta, c.b) == doctest::Approx(bad.min_u));
}

TEST_CASE("oracle is reproducible") {
  auto p = top_hats(2, 1.0, 0.5, 1.0, 1.0);
  auto a = verify_bruteforce(p, 0.3, 0.1, quick(100));
  auto b = verify_bruteforce(p, 0.3, 0.1, quick(100));
  CHECK(a.min_u == b.min_u);
  CHECK(a.worst_config == b.worst_config);
}

TEST_CASE("certify picks the strongest available construction") {
  auto dom = certify(top_hats(1, 2.0, 1.0, 1.0, 0.5), 0.0);
  REQUIRE(dom);
  CHECK(dom->source == CertificateSource::PointwiseDomination);
  auto pack = certify(top_hats(1, 1.0, 0.5, 1.0, 1.0), 1.0);
  REQUIRE(pack);
  CHECK(pack->source == CertificateSource::FiniteRangePacking);
  auto gauss = certify(gaussians(2, 1.0, 1.0, 1.0, 1.5), 0.05);
  REQUIRE(gauss);
  CHECK((gauss->source == CertificateSource::GaussianFourier || gauss->source == CertificateSource::Rescaled));
  KernelPair contact{Kernel::zero(1), Kernel::top_hat(1.0, 1.0, 1), 0.0};
  CHECK_FALSE(certify(contact, 1.0));
}

TEST_CASE("competition core") {
  auto t = competition_core(Kernel::top_hat(2.0, 0.7, 1));
  CHECK(t.c_minus == 2.0);
  CHECK(t.r == 0.7);
  auto g = competition_core(Kernel::gaussian(1.0, 1.0, 1));
  CHECK(g.r == 1.0);
  CHECK(g.c_minus == doctest::Approx(std::exp(-0.5) / std::sqrt(2.0 * M_PI)).epsilon(1e-14));
  CHECK_THROWS_AS(competition_core(Kernel::zero(1)), UnsupportedShapeError);
}
