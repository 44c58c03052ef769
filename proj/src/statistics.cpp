#include "bdlp/statistics.hpp"

#include <algorithm>
#include <cmath>

#include "bdlp/errors.hpp"
#include "bdlp/simulator.hpp"

namespace bdlp {

BinEdges::BinEdges(std::vector<double> edges) : edges_(std::move(edges)) {
  if (edges_.size() < 2) throw ConfigError("need at least one bin");
  if (!(edges_.front() >= 0.0)) throw ConfigError("bin edges must start at >= 0");
  for (std::size_t i = 1; i < edges_.size(); ++i)
    if (!(edges_[i] > edges_[i - 1])) throw ConfigError("bin edges must be strictly increasing");
}

BinEdges BinEdges::logarithmic(double box, int count) {
  if (count < 2) throw ConfigError("logarithmic binning needs >= 2 bins");
  const double top = 0.5 * box;
  const double first = 0.01 * top;
  std::vector<double> e{0.0, first};
  for (int i = 1; i < count; ++i) e.push_back(first * std::pow(top / first, double(i) / (count - 1)));
  e.back() = top;
  return BinEdges(std::move(e));
}

BinEdges BinEdges::linear(double r_max, int count) {
  if (count < 1) throw ConfigError("linear binning needs >= 1 bin");
  std::vector<double> e;
  for (int i = 0; i <= count; ++i) e.push_back(r_max * i / count);
  e.back() = r_max;
  return BinEdges(std::move(e));
}

std::size_t BinEdges::locate(double r) const {
  if (!(r > edges_.front()) || r > edges_.back()) return size();
  auto it = std::lower_bound(edges_.begin(), edges_.end(), r);
  return static_cast<std::size_t>(it - edges_.begin()) - 1;
}

double BinEdges::shell_volume(std::size_t i, int dim) const {
  return unit_ball_volume(dim) * (std::pow(hi(i), dim) - std::pow(lo(i), dim));
}

void BinEdges::check_torus(double box) const {
  if (max() > 0.5 * box * (1.0 + 1e-12))
    throw ConfigError("pair-correlation bins must not extend beyond L/2 (torus distance ambiguity)");
}

std::vector<double> count_ordered_pairs(std::span<const Point> points, const Metric& metric,
                                        const BinEdges& bins) {
  std::vector<double> counts(bins.size(), 0.0);
  for (std::size_t i = 0; i < points.size(); ++i)
    for (std::size_t j = i + 1; j < points.size(); ++j) {
      std::size_t b = bins.locate(metric.distance(points[i], points[j]));
      if (b < counts.size()) counts[b] += 2.0;
    }
  return counts;
}

MeanStderr mean_stderr(std::span<const double> xs) {
  MeanStderr out;
  if (xs.empty()) return out;
  double sum = 0.0;
  for (double x : xs) sum += x;
  out.mean = sum / static_cast<double>(xs.size());
  if (xs.size() < 2) return out;
  double ss = 0.0;
  for (double x : xs) ss += (x - out.mean) * (x - out.mean);
  const double n = static_cast<double>(xs.size());
  out.std_error = std::sqrt(ss / (n - 1.0) / n);
  return out;
}

std::vector<DensityEstimate> density_estimate(std::span<const RunResult> runs, double volume) {
  std::size_t steps = 0;
  for (const auto& r : runs) steps = std::max(steps, r.snapshots.size());
  std::vector<DensityEstimate> out;
  std::vector<double> xs;
  for (std::size_t k = 0; k < steps; ++k) {
    xs.clear();
    double t = 0.0;
    for (const auto& r : runs) {
      if (k >= r.snapshots.size()) continue;
      t = r.snapshots[k].time;
      xs.push_back(static_cast<double>(r.snapshots[k].n) / volume);
    }
    MeanStderr ms = mean_stderr(xs);
    out.push_back({t, ms.mean, ms.std_error, xs.size()});
  }
  return out;
}

std::vector<PairCorrelationEstimate> pair_correlation(std::span<const RunResult> runs,
                                                      const BinEdges& bins, int dim, double volume) {
  std::size_t steps = 0;
  for (const auto& r : runs) steps = std::max(steps, r.snapshots.size());
  std::vector<PairCorrelationEstimate> out;
  std::vector<double> xs;
  for (std::size_t k = 0; k < steps; ++k) {
    PairCorrelationEstimate est;
    est.k2.assign(bins.size(), 0.0);
    est.std_error.assign(bins.size(), 0.0);
    for (std::size_t b = 0; b < bins.size(); ++b) {
      xs.clear();
      const double norm = volume * bins.shell_volume(b, dim);
      for (const auto& r : runs) {
        if (k >= r.snapshots.size()) continue;
        const Snapshot& s = r.snapshots[k];
        est.time = s.time;
        if (s.pair_counts.size() != bins.size())
          throw PreconditionError("snapshot pair counts do not match the requested bins");
        xs.push_back(s.pair_counts[b] / norm);
      }
      MeanStderr ms = mean_stderr(xs);
      est.k2[b] = ms.mean;
      est.std_error[b] = ms.std_error;
    }
    out.push_back(std::move(est));
  }
  return out;
}

double cluster_index(const PairCorrelationEstimate& k2, const BinEdges& bins, double rho, double r0) {
  if (!(rho > 0.0)) throw PreconditionError("cluster index needs a positive density");
  double best = 0.0;
  bool any = false;
  for (std::size_t b = 0; b < bins.size(); ++b) {
    if (bins.hi(b) > r0 * (1.0 + 1e-12)) continue;
    best = any ? std::max(best, k2.k2[b] / (rho * rho)) : k2.k2[b] / (rho * rho);
    any = true;
  }
  if (!any) throw PreconditionError("no bin lies below the cluster radius r0");
  return best;
}

}  // namespace bdlp
