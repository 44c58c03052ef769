#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "bdlp/kernels.hpp"

namespace bdlp {

/// How a (theta, b) pair was obtained.
enum class CertificateSource {
  PointwiseDomination,
  FiniteRangePacking,
  GaussianFourier,
  Rescaled,
  EmpiricalOnly,
};

std::string to_string(CertificateSource s);

/// Witness that b|eta| + E-(eta) >= theta E+(eta) for every finite eta.
/// Unless the source is EmpiricalOnly the pair is proven, not just tested.
struct StabilityCertificate {
  double theta = 0.0;
  double b = 0.0;
  CertificateSource source = CertificateSource::EmpiricalOnly;
  std::optional<long> packing_bound;       // set for FiniteRangePacking
  std::optional<double> worst_empirical_u;  // set once verified
  std::vector<Point> violating_config;      // nonempty iff worst_empirical_u < 0
};

/// Largest theta with a-(x) >= theta a+(x) everywhere, with b = 0. Closed form
/// for top-hat and Gaussian pairs; other shapes are scanned on
/// kPointwiseScanPoints uniform radii over the dispersal support (plus the
/// table nodes). Returns nullopt when no positive theta exists, including
/// when a+ vanishes identically.
std::optional<StabilityCertificate> pointwise_theta(const KernelPair& pair);
inline constexpr int kPointwiseScanPoints = 20000;

/// Shrinks a valid (theta0, b0) pair to theta <= theta0: b = b0 theta / theta0.
/// Throws PreconditionError unless 0 < theta <= theta0 and b0 >= 0.
double rescale(double theta0, double b0, double theta);

/// Lower plateau of a competition kernel: a-(x) >= c_minus for |x| < r.
struct CompetitionCore {
  double c_minus = 0.0;
  double r = 0.0;
};

/// Extracts a plateau from a-: the top-hat itself; for a Gaussian r = sigma
/// and c_minus = a-(sigma); for a table, the first interval with its smaller
/// endpoint value. Throws UnsupportedShapeError if no positive plateau exists.
CompetitionCore competition_core(const Kernel& a_minus);

/// Packing bound on the number of balls of radius r/2 inside a ball of radius
/// R + r/2: ceil(Delta(d) (1 + 2R/r)^d).
long packing_bound(int dim, double r, double big_r);
/// Densest-packing density used by packing_bound (1 for d >= 4).
double packing_density(int dim);

/// Certificate for a finite-range (top-hat) dispersal kernel and a
/// competition kernel bounded below near the origin.
/// r >= R: theta = c-/c+, b = 0. Otherwise, with Xi = packing_bound,
/// theta = min{c-/(c+ Xi), b/(2 c+ (Xi - 1))} at the given b.
StabilityCertificate finite_range_theta(const KernelPair& pair, double b);
StabilityCertificate finite_range_theta(const KernelPair& pair, CompetitionCore core, double b);

/// Certificate for a Gaussian pair. sigma- >= sigma+ reduces to pointwise
/// domination. Otherwise the Fourier-positive phi at theta0 = c-/c+ gives
/// b0 = phi_theta0(0), rescaled down to the requested b.
StabilityCertificate gaussian_theta(const KernelPair& pair, double b);

/// Best available proven certificate: pointwise, then Gaussian, then finite
/// range. nullopt if none applies.
std::optional<StabilityCertificate> certify(const KernelPair& pair, double b);

struct BruteForceOptions {
  int n_max = 6;
  long trials = 10000;
  std::uint64_t seed = 1;
  int sweeps = 200;
};

/// min U below -kViolationTolerance is reported as a violation; smaller
/// negatives are floating-point cancellation.
inline constexpr double kViolationTolerance = 1e-9;

struct BruteForceResult {
  double min_u = 0.0;              // min over searched eta of U_theta(eta)
  std::vector<Point> worst_config;  // argmin
  long trials = 0;
};

/// U_theta(eta) = b|eta| + E-(eta) - theta E+(eta) in Euclidean space.
double stability_functional(std::span<const Point> eta, const KernelPair& pair, double theta,
                            double b);

/// Falsification search for negative U_theta: random boxes and adversarial
/// templates at kernel-range scale, each refined by coordinate descent with
/// multiplicatively cooled step. Trials are seeded by counter from
/// options.seed, so the result does not depend on the thread count.
BruteForceResult verify_bruteforce(const KernelPair& pair, double theta, double b,
                                   const BruteForceOptions& options);

}  // namespace bdlp
