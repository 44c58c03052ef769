#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <variant>
#include <vector>

#include "bdlp/kernels.hpp"
#include "bdlp/observation.hpp"
#include "bdlp/random.hpp"
#include "bdlp/statistics.hpp"

namespace bdlp {

/// Periodic box [0, L)^d standing in for R^d.
struct Domain {
  int dim = 1;
  double L = 1.0;
  /// Cell-list edge; 0 selects the competition interaction radius.
  double cell_size = 0.0;

  Metric metric() const { return Metric::torus(dim, L); }
  double volume() const;
};

struct PoissonIntensity {
  double kappa = 0.0;
};
struct ExplicitPoints {
  std::vector<Point> points;
};
using InitialCondition = std::variant<PoissonIntensity, ExplicitPoints>;

enum class EventKind { Birth, Death, Absorbed, Stalled };

struct Event {
  EventKind kind = EventKind::Absorbed;
  std::size_t index = 0;  // parent (Birth) or victim (Death), before removal
  Point position{};       // child (Birth) or victim (Death) position
  double waiting_time = 0.0;
};

/// Draws offspring displacements from a+/<a+>.
class DispersalSampler {
 public:
  explicit DispersalSampler(const Kernel& a_plus);
  Point operator()(Rng& rng) const;

 private:
  Kernel kernel_;
  // inverse-CDF table of the radial density a(r) r^{d-1} (tabulated kernels)
  std::vector<double> cdf_r_;
  std::vector<double> cdf_;
};

/// Radius below which a pair interacts through a-. Gaussians are cut where
/// the kernel has decayed by a factor 1e-16 relative to its peak; a cut at or
/// above L/2 means every pair interacts (3^d image sum, no cut).
double competition_cutoff(const Kernel& a_minus);

/// Exact event-driven simulation of the birth-death-competition process on
/// a torus. Each particle dies at rate m + E-(x, gamma \ x); births occur at
/// total rate <a+> N, the parent uniform and the child displaced by a draw
/// from a+/<a+>.
class Simulator {
 public:
  Simulator(const Domain& domain, const KernelPair& pair, const InitialCondition& initial,
            std::uint64_t seed);

  /// Advances by one event. Absorbed when N = 0; Stalled when both total
  /// rates vanish (time jumps to +inf).
  Event step();

  enum class AdvanceStatus { Reached, Absorbed, Truncated };
  /// Runs events until the next one would occur after t, then sets time = t.
  /// Stops early (Truncated) as soon as N exceeds max_points.
  AdvanceStatus advance_until(double t, std::size_t max_points);

  std::size_t size() const { return points_.size(); }
  double time() const { return time_; }
  std::uint64_t events() const { return events_; }
  std::span<const Point> points() const { return points_; }
  std::span<const double> death_rates() const { return death_rates_; }
  double total_death_rate() const { return total_death_rate_; }
  double total_birth_rate() const { return birth_mass_ * static_cast<double>(points_.size()); }
  const Domain& domain() const { return domain_; }
  const KernelPair& pair() const { return pair_; }

  /// Max relative deviation of cached death rates (and their total) from a
  /// from-scratch recomputation.
  double cache_error() const;
  /// Rebuilds every rate cache from scratch.
  void refresh_rates();

  /// Indices of points within the competition cutoff of x (cell list).
  std::vector<std::size_t> neighbors(const Point& x) const;
  /// Same set by exhaustive scan.
  std::vector<std::size_t> neighbors_bruteforce(const Point& x) const;
  /// Competition pair value a-(x - y) on the torus, as used by the caches.
  double pair_value(const Point& x, const Point& y) const;
  /// Whether the cell list is active (false: all pairs are neighbors).
  bool uses_cells() const { return cells_per_axis_ >= 3; }
  int cells_per_axis() const { return cells_per_axis_; }

  static constexpr std::size_t kLinearScanLimit = 4096;
  static constexpr std::uint64_t kRefreshInterval = 1'000'000;

 private:
  class Fenwick {
   public:
    void clear() { tree_.assign(1, 0.0); }
    std::size_t size() const { return tree_.size() - 1; }
    void push_back(double v);
    void pop_back() { tree_.pop_back(); }
    void add(std::size_t i, double delta);
    double prefix(std::size_t count) const;
    /// Smallest index whose inclusive prefix sum exceeds u.
    std::size_t find(double u) const;

   private:
    std::vector<double> tree_{0.0};
  };

  std::size_t cell_of(const Point& x) const;
  template <class F>
  void for_each_neighbor(const Point& x, F&& f) const;
  void insert(const Point& x);
  void remove(std::size_t i);
  void add_rate(std::size_t i, double delta);
  std::size_t pick_victim(double fraction) const;
  Event fire(double waiting_time);
  double recomputed_rate(std::size_t i) const;

  Domain domain_;
  KernelPair pair_;
  Metric metric_;
  Rng rng_;
  DispersalSampler sampler_;
  double birth_mass_ = 0.0;
  double cutoff_ = 0.0;
  bool competition_ = false;
  int cells_per_axis_ = 1;

  std::vector<Point> points_;
  std::vector<double> death_rates_;
  std::vector<std::size_t> cell_id_;
  std::vector<std::size_t> cell_slot_;
  std::vector<std::vector<std::size_t>> cells_;
  Fenwick fenwick_;
  double total_death_rate_ = 0.0;
  double time_ = 0.0;
  std::uint64_t events_ = 0;
};

/// Observation record.
struct Snapshot {
  double time = 0.0;
  std::size_t n = 0;
  double density = 0.0;
  std::vector<Point> points;        // when RunConfig::record_points
  std::vector<double> pair_counts;  // ordered pairs per bin, when bins given
};

struct RunConfig {
  double t_end = 0.0;
  double observe_every = 0.0;  // 0: observe at t = 0 and t_end only
  std::size_t max_points = 1'000'000;
  bool record_points = false;
  std::optional<BinEdges> bins;
};

enum class Termination { Completed, Absorbed, Truncated };
const char* to_string(Termination t);

struct RunResult {
  std::vector<Snapshot> snapshots;
  Termination termination = Termination::Completed;
  std::uint64_t events = 0;
  double cache_error = 0.0;  // measured at the end of the run
};

/// One replica. Absorbed replicas keep emitting N = 0 snapshots so ensemble
/// means stay unbiased; truncated runs stop emitting at the overflow.
RunResult run(const Domain& domain, const KernelPair& pair, const InitialCondition& initial,
              const RunConfig& config, std::uint64_t seed);

/// Independent replicas seeded by derive_seed(master_seed, replica); output
/// order is by replica index regardless of scheduling.
std::vector<RunResult> run_ensemble(const Domain& domain, const KernelPair& pair,
                                    const InitialCondition& initial, const RunConfig& config,
                                    std::size_t replicas, std::uint64_t master_seed);

}  // namespace bdlp
