#include "bdlp/stability.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "bdlp/errors.hpp"
#include "bdlp/parallel.hpp"
#include "bdlp/random.hpp"

namespace bdlp {

std::string to_string(CertificateSource s) {
  switch (s) {
    case CertificateSource::PointwiseDomination: return "PointwiseDomination";
    case CertificateSource::FiniteRangePacking: return "FiniteRangePacking";
    case CertificateSource::GaussianFourier: return "GaussianFourier";
    case CertificateSource::Rescaled: return "Rescaled";
    case CertificateSource::EmpiricalOnly: return "EmpiricalOnly";
  }
  return "unknown";
}

namespace {

std::vector<double> breakpoints(const Kernel& k) {
  std::vector<double> out;
  if (const auto* t = std::get_if<TopHat>(&k.shape())) out.push_back(t->radius);
  if (const auto* t = std::get_if<TabulatedRadial>(&k.shape()))
    out.insert(out.end(), t->radii.begin(), t->radii.end());
  return out;
}

StabilityCertificate make_certificate(double theta, double b, CertificateSource source) {
  StabilityCertificate c;
  c.theta = theta;
  c.b = b;
  c.source = source;
  return c;
}

}  // namespace

std::optional<StabilityCertificate> pointwise_theta(const KernelPair& pair) {
  const Kernel& am = pair.a_minus;
  const Kernel& ap = pair.a_plus;
  if (ap.is_zero() || am.is_zero()) return std::nullopt;
  const int d = pair.dim();

  const auto* gm = std::get_if<Gaussian>(&am.shape());
  const auto* gp = std::get_if<Gaussian>(&ap.shape());
  if (gm && gp) {
    if (gm->sigma < gp->sigma) return std::nullopt;
    double theta = std::pow(gp->sigma / gm->sigma, d) * gm->c / gp->c;
    return make_certificate(theta, 0.0, CertificateSource::PointwiseDomination);
  }
  if (gp) return std::nullopt;  // infinite-range dispersal against finite-range competition

  const auto* tm = std::get_if<TopHat>(&am.shape());
  const auto* tp = std::get_if<TopHat>(&ap.shape());
  if (tm && tp) {
    if (tm->radius < tp->radius) return std::nullopt;
    return make_certificate(tm->c / tp->c, 0.0, CertificateSource::PointwiseDomination);
  }

  // Generic finite-range dispersal: scan the ratio over the support. For
  // piecewise-linear profiles the ratio is monotone between breakpoints, so
  // evaluating both one-sided limits at every breakpoint finds the infimum.
  const double support = ap.range();
  std::vector<double> radii;
  radii.reserve(kPointwiseScanPoints + 16);
  for (int i = 0; i < kPointwiseScanPoints; ++i) radii.push_back(support * i / kPointwiseScanPoints);
  for (const Kernel* k : {&am, &ap})
    for (double r : breakpoints(*k)) {
      radii.push_back(r);
      radii.push_back(r * (1.0 - 1e-12));
    }
  radii.push_back(support * (1.0 - 1e-12));
  double best = std::numeric_limits<double>::infinity();
  for (double r : radii) {
    if (r < 0.0 || r >= support) continue;
    double plus = ap.radial(r);
    if (plus <= 0.0) continue;
    best = std::min(best, am.radial(r) / plus);
  }
  if (!(best > 0.0) || !std::isfinite(best)) return std::nullopt;
  return make_certificate(best, 0.0, CertificateSource::PointwiseDomination);
}

double rescale(double theta0, double b0, double theta) {
  if (!(theta > 0.0) || theta > theta0) throw PreconditionError("rescale requires 0 < theta <= theta0");
  if (!(b0 >= 0.0)) throw PreconditionError("rescale requires b0 >= 0");
  if (theta == theta0) return b0;
  return b0 * theta / theta0;
}

CompetitionCore competition_core(const Kernel& a_minus) {
  CompetitionCore core;
  if (const auto* t = std::get_if<TopHat>(&a_minus.shape())) {
    core = {t->c, t->radius};
  } else if (const auto* g = std::get_if<Gaussian>(&a_minus.shape())) {
    core = {a_minus.radial(g->sigma), g->sigma};
  } else if (const auto* t = std::get_if<TabulatedRadial>(&a_minus.shape())) {
    core = {std::min(t->values[0], t->values[1]), t->radii[1]};
  }
  if (!(core.c_minus > 0.0 && core.r > 0.0))
    throw UnsupportedShapeError("competition kernel has no positive plateau near the origin");
  return core;
}

double packing_density(int dim) {
  switch (dim) {
    case 1: return 1.0;
    case 2: return M_PI / std::sqrt(12.0);
    case 3: return M_PI / std::sqrt(18.0);
    default: return 1.0;
  }
}

long packing_bound(int dim, double r, double big_r) {
  if (!(r > 0.0)) throw PreconditionError("packing bound needs r > 0");
  double v = packing_density(dim) * std::pow(1.0 + 2.0 * big_r / r, dim);
  return static_cast<long>(std::ceil(v));
}

StabilityCertificate finite_range_theta(const KernelPair& pair, double b) {
  return finite_range_theta(pair, competition_core(pair.a_minus), b);
}

StabilityCertificate finite_range_theta(const KernelPair& pair, CompetitionCore core, double b) {
  const auto* tp = std::get_if<TopHat>(&pair.a_plus.shape());
  if (!tp) throw UnsupportedShapeError("finite-range certificate needs a top-hat dispersal kernel");
  if (!(tp->c > 0.0 && tp->radius > 0.0)) throw PreconditionError("dispersal kernel vanishes");
  if (!(core.c_minus > 0.0 && core.r > 0.0)) throw PreconditionError("competition core must be positive");
  const double c_plus = tp->c;
  const double big_r = tp->radius;
  if (core.r >= big_r) return make_certificate(core.c_minus / c_plus, 0.0, CertificateSource::FiniteRangePacking);
  if (!(b > 0.0)) throw PreconditionError("long dispersal (r < R) requires b > 0");

  const long xi = packing_bound(pair.dim(), core.r, big_r);
  double theta = core.c_minus / (c_plus * static_cast<double>(xi));
  if (xi > 1) theta = std::min(theta, b / (2.0 * c_plus * static_cast<double>(xi - 1)));
  StabilityCertificate cert = make_certificate(theta, b, CertificateSource::FiniteRangePacking);
  cert.packing_bound = xi;
  return cert;
}

StabilityCertificate gaussian_theta(const KernelPair& pair, double b) {
  const auto* gm = std::get_if<Gaussian>(&pair.a_minus.shape());
  const auto* gp = std::get_if<Gaussian>(&pair.a_plus.shape());
  if (!gm || !gp) throw UnsupportedShapeError("gaussian certificate needs two Gaussian kernels");
  if (!(gm->c > 0.0 && gp->c > 0.0)) throw PreconditionError("gaussian certificate needs c-, c+ > 0");
  if (gm->sigma >= gp->sigma) return *pointwise_theta(pair);
  if (!(b > 0.0)) throw PreconditionError("sigma- < sigma+ requires b > 0");

  const int d = pair.dim();
  const double theta0 = gm->c / gp->c;
  // phi_theta0(0): strictly positive since sigma- < sigma+
  const double b0 = gm->c * (std::pow(2.0 * M_PI * gm->sigma * gm->sigma, -0.5 * d) -
                             std::pow(2.0 * M_PI * gp->sigma * gp->sigma, -0.5 * d));
  const double theta = std::min(theta0, theta0 * b / b0);
  const double b_cert = rescale(theta0, b0, theta);
  return make_certificate(theta, b_cert,
                          theta < theta0 ? CertificateSource::Rescaled : CertificateSource::GaussianFourier);
}

std::optional<StabilityCertificate> certify(const KernelPair& pair, double b) {
  if (auto c = pointwise_theta(pair)) return c;
  try {
    if (std::holds_alternative<Gaussian>(pair.a_minus.shape()) &&
        std::holds_alternative<Gaussian>(pair.a_plus.shape()))
      return gaussian_theta(pair, b);
    if (std::holds_alternative<TopHat>(pair.a_plus.shape())) return finite_range_theta(pair, b);
  } catch (const Error&) {
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// brute-force refutation oracle

double stability_functional(std::span<const Point> eta, const KernelPair& pair, double theta, double b) {
  double sum = 0.0;
  for (std::size_t i = 0; i < eta.size(); ++i)
    for (std::size_t j = i + 1; j < eta.size(); ++j) {
      Point d{eta[i][0] - eta[j][0], eta[i][1] - eta[j][1], eta[i][2] - eta[j][2]};
      sum += phi_theta(d, pair, theta);
    }
  return b * static_cast<double>(eta.size()) + 2.0 * sum;
}

namespace {

double effective_range(const Kernel& k) {
  if (const auto* g = std::get_if<Gaussian>(&k.shape())) return 3.0 * g->sigma;
  return k.range();
}

Point random_direction(int dim, Rng& rng) {
  std::normal_distribution<double> normal;
  for (;;) {
    Point p{0.0, 0.0, 0.0};
    for (int k = 0; k < dim; ++k) p[k] = normal(rng);
    double n = norm(p);
    if (n > 1e-12) {
      for (int k = 0; k < dim; ++k) p[k] /= n;
      return p;
    }
  }
}

Point random_in_ball(int dim, double radius, Rng& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Point dir = random_direction(dim, rng);
  double rr = radius * std::pow(u(rng), 1.0 / dim);
  for (int k = 0; k < dim; ++k) dir[k] *= rr;
  return dir;
}

struct Trial {
  double u = 0.0;
  std::vector<Point> eta;
};

class Searcher {
 public:
  Searcher(const KernelPair& pair, double theta, double b, const BruteForceOptions& opt)
      : pair_(pair), theta_(theta), b_(b), opt_(opt), dim_(pair.dim()) {
    double rm = effective_range(pair.a_minus);
    double rp = effective_range(pair.a_plus);
    scale_ = std::max(rm, rp);
    if (!(scale_ > 0.0)) scale_ = 1.0;
    r_small_ = rm > 0.0 ? rm : scale_;
    r_big_ = rp > 0.0 ? rp : scale_;
  }

  Trial run(std::uint64_t seed, long index) const {
    Rng rng(seed);
    std::uniform_int_distribution<int> count(2, opt_.n_max);
    const int n = count(rng);
    std::vector<Point> eta = initial(static_cast<int>(index % 4), n, rng);
    descend(eta);
    return {stability_functional(eta, pair_, theta_, b_), std::move(eta)};
  }

 private:
  double phi(const Point& a, const Point& c) const {
    return phi_theta(Point{a[0] - c[0], a[1] - c[1], a[2] - c[2]}, pair_, theta_);
  }

  std::vector<Point> initial(int kind, int n, Rng& rng) const {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<Point> eta;
    eta.reserve(static_cast<std::size_t>(n));
    switch (kind) {
      case 0: {  // uniform in a box of edge 4 * range
        const double edge = 4.0 * scale_;
        for (int i = 0; i < n; ++i) {
          Point p{0.0, 0.0, 0.0};
          for (int k = 0; k < dim_; ++k) p[k] = edge * u(rng);
          eta.push_back(p);
        }
        break;
      }
      case 1:  // dense cluster inside the competition core
        for (int i = 0; i < n; ++i) eta.push_back(random_in_ball(dim_, 0.5 * r_small_, rng));
        break;
      case 2: {  // centre plus a shell just inside the dispersal range
        eta.push_back(Point{0.0, 0.0, 0.0});
        for (int i = 1; i < n; ++i) {
          Point dir = random_direction(dim_, rng);
          double rad = r_big_ * (0.9 + 0.0999 * u(rng));
          for (int k = 0; k < dim_; ++k) dir[k] *= rad;
          eta.push_back(dir);
        }
        break;
      }
      default: {  // square lattice with spacing just above the competition range
        const double spacing = r_small_ * (1.0 + 1e-9) * (1.0 + 0.5 * u(rng));
        const int side = static_cast<int>(std::ceil(std::pow(n, 1.0 / dim_)));
        for (int i = 0; static_cast<int>(eta.size()) < n; ++i) {
          int rem = i;
          Point p{0.0, 0.0, 0.0};
          for (int k = 0; k < dim_; ++k) {
            p[k] = spacing * (rem % side);
            rem /= side;
          }
          eta.push_back(p);
        }
        break;
      }
    }
    return eta;
  }

  void descend(std::vector<Point>& eta) const {
    const int sweeps = std::max(opt_.sweeps, 2);
    const double start = 0.5 * scale_;
    const double cool = std::pow(1e-3 / 0.5, 1.0 / (sweeps - 1));
    double step = start;
    for (int s = 0; s < sweeps; ++s, step *= cool) {
      for (std::size_t i = 0; i < eta.size(); ++i) {
        for (int k = 0; k < dim_; ++k) {
          for (double sign : {1.0, -1.0}) {
            Point moved = eta[i];
            moved[k] += sign * step;
            double delta = 0.0;
            for (std::size_t j = 0; j < eta.size(); ++j) {
              if (j == i) continue;
              delta += phi(moved, eta[j]) - phi(eta[i], eta[j]);
            }
            if (delta < 0.0) {
              eta[i] = moved;
              break;
            }
          }
        }
      }
    }
  }

  const KernelPair& pair_;
  double theta_;
  double b_;
  BruteForceOptions opt_;
  int dim_;
  double scale_ = 1.0;
  double r_small_ = 1.0;
  double r_big_ = 1.0;
};

}  // namespace

BruteForceResult verify_bruteforce(const KernelPair& pair, double theta, double b,
                                   const BruteForceOptions& options) {
  if (options.n_max < 2) throw PreconditionError("verify_bruteforce needs n_max >= 2");
  if (options.trials < 1) throw PreconditionError("verify_bruteforce needs trials >= 1");
  Searcher searcher(pair, theta, b, options);
  std::vector<Trial> trials(static_cast<std::size_t>(options.trials));
  parallel_for(trials.size(), [&](std::size_t i) {
    trials[i] = searcher.run(derive_seed(options.seed, i), static_cast<long>(i));
  });
  BruteForceResult result;
  result.trials = options.trials;
  result.min_u = std::numeric_limits<double>::infinity();
  for (auto& t : trials) {
    if (t.u < result.min_u) {
      result.min_u = t.u;
      result.worst_config = std::move(t.eta);
    }
  }
  return result;
}

}  // namespace bdlp
