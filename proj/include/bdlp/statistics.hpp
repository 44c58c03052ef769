#pragma once

#include <span>
#include <vector>

#include "bdlp/geometry.hpp"

namespace bdlp {

struct RunResult;

/// Radial bin edges e_0 < e_1 < ... < e_n on [0, L/2].
class BinEdges {
 public:
  explicit BinEdges(std::vector<double> edges);

  /// First bin (0, 0.01 L/2], then count - 1 logarithmic bins up to L/2.
  static BinEdges logarithmic(double box, int count = 64);
  /// `count` equal bins on (0, r_max].
  static BinEdges linear(double r_max, int count);

  std::size_t size() const { return edges_.size() - 1; }
  double lo(std::size_t i) const { return edges_[i]; }
  double hi(std::size_t i) const { return edges_[i + 1]; }
  double max() const { return edges_.back(); }
  const std::vector<double>& edges() const { return edges_; }
  /// Bin index of a distance in (e_0, e_n], or size() if outside.
  std::size_t locate(double r) const;
  /// d-dimensional volume of shell i.
  double shell_volume(std::size_t i, int dim) const;
  /// Throws ConfigError if the last edge exceeds L/2.
  void check_torus(double box) const;

 private:
  std::vector<double> edges_;
};

/// Ordered-pair distance counts (each unordered pair counted twice) under
/// the minimum-image torus metric.
std::vector<double> count_ordered_pairs(std::span<const Point> points, const Metric& metric,
                                        const BinEdges& bins);

struct DensityEstimate {
  double time = 0.0;
  double rho = 0.0;
  double std_error = 0.0;
  std::size_t replicas = 0;
};

/// Mean of N/V across replicas at each observation time, with the standard
/// error of the mean.
std::vector<DensityEstimate> density_estimate(std::span<const RunResult> runs, double volume);

struct PairCorrelationEstimate {
  double time = 0.0;
  std::vector<double> k2;
  std::vector<double> std_error;
};

/// k2(bin) = E[ordered pair count in bin] / (V vol(bin)) from snapshot
/// pair counts. Requires runs made with the same bins.
std::vector<PairCorrelationEstimate> pair_correlation(std::span<const RunResult> runs,
                                                      const BinEdges& bins, int dim, double volume);

/// max over bins with upper edge <= r0 of k2 / rho^2.
double cluster_index(const PairCorrelationEstimate& k2, const BinEdges& bins, double rho, double r0);

/// Sample mean and standard error of the mean.
struct MeanStderr {
  double mean = 0.0;
  double std_error = 0.0;
};
MeanStderr mean_stderr(std::span<const double> xs);

}  // namespace bdlp
