#include "bdlp/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "bdlp/errors.hpp"
#include "bdlp/parallel.hpp"

namespace bdlp {

double Domain::volume() const { return std::pow(L, dim); }

// ---------------------------------------------------------------------------
// dispersal sampling

namespace {

constexpr int kTableSubdivisions = 512;

Point unit_direction(int dim, Rng& rng) {
  if (dim == 1) {
    std::bernoulli_distribution coin(0.5);
    return Point{coin(rng) ? 1.0 : -1.0, 0.0, 0.0};
  }
  std::normal_distribution<double> normal;
  for (;;) {
    Point p{0.0, 0.0, 0.0};
    for (int k = 0; k < dim; ++k) p[k] = normal(rng);
    double n = norm(p);
    if (n > 1e-300) {
      for (int k = 0; k < dim; ++k) p[k] /= n;
      return p;
    }
  }
}

}  // namespace

DispersalSampler::DispersalSampler(const Kernel& a_plus) : kernel_(a_plus) {
  const auto* t = std::get_if<TabulatedRadial>(&kernel_.shape());
  if (!t) return;
  const int d = kernel_.dim();
  auto density = [&](double r) { return kernel_.radial(r) * (d == 1 ? 1.0 : std::pow(r, d - 1)); };
  // flat core [0, r_0) then every table interval refined
  cdf_r_.push_back(0.0);
  cdf_.push_back(0.0);
  auto append = [&](double r) {
    double r_prev = cdf_r_.back();
    double area = 0.5 * (r - r_prev) * (density(r_prev) + density(std::min(r, t->radii.back())));
    cdf_r_.push_back(r);
    cdf_.push_back(cdf_.back() + area);
  };
  if (t->radii.front() > 0.0) {
    for (int s = 1; s <= kTableSubdivisions; ++s) append(t->radii.front() * s / kTableSubdivisions);
  }
  for (std::size_t i = 0; i + 1 < t->radii.size(); ++i) {
    double h = (t->radii[i + 1] - t->radii[i]) / kTableSubdivisions;
    for (int s = 1; s <= kTableSubdivisions; ++s)
      append(s == kTableSubdivisions ? t->radii[i + 1] : t->radii[i] + s * h);
  }
}

Point DispersalSampler::operator()(Rng& rng) const {
  if (!(kernel_.l1_norm() > 0.0)) throw PreconditionError("dispersal sampled from a zero-mass kernel");
  const int d = kernel_.dim();
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  if (const auto* g = std::get_if<Gaussian>(&kernel_.shape())) {
    std::normal_distribution<double> normal(0.0, g->sigma);
    Point p{0.0, 0.0, 0.0};
    for (int k = 0; k < d; ++k) p[k] = normal(rng);
    return p;
  }
  double r = 0.0;
  if (const auto* t = std::get_if<TopHat>(&kernel_.shape())) {
    r = t->radius * std::pow(uniform(rng), 1.0 / d);
  } else {
    double target = uniform(rng) * cdf_.back();
    auto it = std::upper_bound(cdf_.begin(), cdf_.end(), target);
    std::size_t hi = std::min<std::size_t>(static_cast<std::size_t>(it - cdf_.begin()), cdf_.size() - 1);
    std::size_t lo = hi - 1;
    double span = cdf_[hi] - cdf_[lo];
    double w = span > 0.0 ? (target - cdf_[lo]) / span : 0.0;
    r = cdf_r_[lo] + w * (cdf_r_[hi] - cdf_r_[lo]);
  }
  Point dir = unit_direction(d, rng);
  for (int k = 0; k < d; ++k) dir[k] *= r;
  return dir;
}

double competition_cutoff(const Kernel& a_minus) {
  if (a_minus.is_zero()) return 0.0;
  if (const auto* g = std::get_if<Gaussian>(&a_minus.shape()))
    return g->sigma * std::sqrt(2.0 * std::log(1e16));
  return a_minus.range();
}

// ---------------------------------------------------------------------------
// Fenwick tree over death rates

void Simulator::Fenwick::push_back(double v) {
  std::size_t i = tree_.size();  // 1-based index of the new slot
  std::size_t low = i & (~i + 1);
  tree_.push_back(v + prefix(i - 1) - prefix(i - low));
}

void Simulator::Fenwick::add(std::size_t i, double delta) {
  for (std::size_t j = i + 1; j < tree_.size(); j += j & (~j + 1)) tree_[j] += delta;
}

double Simulator::Fenwick::prefix(std::size_t count) const {
  double s = 0.0;
  for (std::size_t j = count; j > 0; j -= j & (~j + 1)) s += tree_[j];
  return s;
}

std::size_t Simulator::Fenwick::find(double u) const {
  std::size_t pos = 0;
  std::size_t mask = 1;
  while (mask * 2 <= size()) mask *= 2;
  for (; mask > 0; mask /= 2) {
    std::size_t next = pos + mask;
    if (next <= size() && tree_[next] <= u) {
      pos = next;
      u -= tree_[next];
    }
  }
  return std::min(pos, size() - 1);
}

// ---------------------------------------------------------------------------

Simulator::Simulator(const Domain& domain, const KernelPair& pair, const InitialCondition& initial,
                     std::uint64_t seed)
    : domain_(domain),
      pair_(pair),
      metric_(domain.metric()),
      rng_(seed),
      sampler_(pair.a_plus),
      birth_mass_(pair.a_plus.l1_norm()) {
  if (domain.dim < 1 || domain.dim > kMaxDim) throw ConfigError("domain dimension must be 1, 2 or 3");
  if (!(domain.L > 0.0 && std::isfinite(domain.L))) throw ConfigError("torus edge L must be positive");
  if (pair.dim() != domain.dim) throw ConfigError("kernel dimension differs from domain dimension");
  pair.validate(true);
  check_torus_admissible(pair.a_minus, domain.L, "competition");
  check_torus_admissible(pair.a_plus, domain.L, "dispersal");

  competition_ = !pair.a_minus.is_zero();
  cutoff_ = competition_cutoff(pair.a_minus);
  double cell = domain.cell_size > 0.0 ? domain.cell_size : cutoff_;
  if (domain.cell_size > 0.0 && domain.cell_size < cutoff_)
    throw ConfigError("cell_size must be at least the competition interaction radius");
  if (domain.cell_size > domain.L) throw ConfigError("cell_size must not exceed L");
  cells_per_axis_ = 1;
  if (competition_ && cutoff_ < 0.5 * domain.L && cell > 0.0) {
    const int cap = domain.dim == 1 ? 65536 : (domain.dim == 2 ? 256 : 40);
    int n = static_cast<int>(std::min<double>(std::floor(domain.L / cell), cap));
    cells_per_axis_ = n >= 3 ? n : 1;
  }
  std::size_t total_cells = 1;
  for (int k = 0; k < domain.dim; ++k) total_cells *= static_cast<std::size_t>(cells_per_axis_);
  cells_.assign(total_cells, {});

  std::vector<Point> start;
  if (const auto* p = std::get_if<PoissonIntensity>(&initial)) {
    if (!(p->kappa >= 0.0 && std::isfinite(p->kappa))) throw ConfigError("initial intensity must be >= 0");
    std::poisson_distribution<long long> count(p->kappa * domain.volume());
    const long long n = p->kappa > 0.0 ? count(rng_) : 0;
    std::uniform_real_distribution<double> u(0.0, domain.L);
    for (long long i = 0; i < n; ++i) {
      Point x{0.0, 0.0, 0.0};
      for (int k = 0; k < domain.dim; ++k) x[k] = u(rng_);
      start.push_back(x);
    }
  } else {
    for (Point x : std::get<ExplicitPoints>(initial).points) {
      for (int k = domain.dim; k < kMaxDim; ++k) x[k] = 0.0;
      start.push_back(metric_.wrap(x));
    }
  }
  points_.reserve(start.size());
  for (const Point& x : start) insert(x);
  refresh_rates();
}

double Simulator::pair_value(const Point& x, const Point& y) const {
  if (!competition_) return 0.0;
  Point d = metric_.displacement(x, y);
  if (uses_cells() && norm(d) >= cutoff_) return 0.0;
  return kernel_value(pair_.a_minus, d, metric_);
}

std::size_t Simulator::cell_of(const Point& x) const {
  std::size_t id = 0;
  for (int k = domain_.dim - 1; k >= 0; --k) {
    int c = static_cast<int>(std::floor(x[k] / domain_.L * cells_per_axis_));
    c = std::clamp(c, 0, cells_per_axis_ - 1);
    id = id * static_cast<std::size_t>(cells_per_axis_) + static_cast<std::size_t>(c);
  }
  return id;
}

template <class F>
void Simulator::for_each_neighbor(const Point& x, F&& f) const {
  if (!uses_cells()) {
    for (std::size_t j = 0; j < points_.size(); ++j) f(j);
    return;
  }
  const int n = cells_per_axis_;
  int base[kMaxDim] = {0, 0, 0};
  for (int k = 0; k < domain_.dim; ++k)
    base[k] = std::clamp(static_cast<int>(std::floor(x[k] / domain_.L * n)), 0, n - 1);
  const int ry = domain_.dim >= 2 ? 1 : 0;
  const int rz = domain_.dim >= 3 ? 1 : 0;
  for (int dz = -rz; dz <= rz; ++dz)
    for (int dy = -ry; dy <= ry; ++dy)
      for (int dx = -1; dx <= 1; ++dx) {
        std::size_t cx = static_cast<std::size_t>((base[0] + dx + n) % n);
        std::size_t cy = static_cast<std::size_t>((base[1] + dy + n) % n);
        std::size_t cz = static_cast<std::size_t>((base[2] + dz + n) % n);
        std::size_t id = cx;
        if (domain_.dim >= 2) id += static_cast<std::size_t>(n) * cy;
        if (domain_.dim >= 3) id += static_cast<std::size_t>(n) * static_cast<std::size_t>(n) * cz;
        for (std::size_t j : cells_[id]) f(j);
      }
}

void Simulator::add_rate(std::size_t i, double delta) {
  death_rates_[i] += delta;
  fenwick_.add(i, delta);
  total_death_rate_ += delta;
}

void Simulator::insert(const Point& x) {
  double rate = pair_.m;
  if (competition_) {
    for_each_neighbor(x, [&](std::size_t j) {
      double v = pair_value(x, points_[j]);
      if (v != 0.0) {
        rate += v;
        add_rate(j, v);
      }
    });
  }
  const std::size_t i = points_.size();
  points_.push_back(x);
  death_rates_.push_back(rate);
  fenwick_.push_back(rate);
  total_death_rate_ += rate;
  std::size_t c = cell_of(x);
  cell_id_.push_back(c);
  cell_slot_.push_back(cells_[c].size());
  cells_[c].push_back(i);
}

void Simulator::remove(std::size_t i) {
  const Point x = points_[i];
  // detach i from its cell first so the neighbor loop skips it
  {
    auto& cell = cells_[cell_id_[i]];
    std::size_t slot = cell_slot_[i];
    std::size_t moved = cell.back();
    cell[slot] = moved;
    cell_slot_[moved] = slot;
    cell.pop_back();
  }
  if (competition_) {
    for_each_neighbor(x, [&](std::size_t j) {
      if (j == i) return;
      double v = pair_value(x, points_[j]);
      if (v != 0.0) add_rate(j, -v);
    });
  }
  total_death_rate_ -= death_rates_[i];
  fenwick_.add(i, -death_rates_[i]);

  const std::size_t last = points_.size() - 1;
  if (i != last) {
    points_[i] = points_[last];
    death_rates_[i] = death_rates_[last];
    fenwick_.add(i, death_rates_[last]);
    cell_id_[i] = cell_id_[last];
    cell_slot_[i] = cell_slot_[last];
    cells_[cell_id_[i]][cell_slot_[i]] = i;
  }
  points_.pop_back();
  death_rates_.pop_back();
  cell_id_.pop_back();
  cell_slot_.pop_back();
  fenwick_.pop_back();
}

std::size_t Simulator::pick_victim(double fraction) const {
  const std::size_t n = points_.size();
  if (n > kLinearScanLimit) return fenwick_.find(fraction * fenwick_.prefix(n));
  double target = fraction * total_death_rate_;
  double running = 0.0;
  std::size_t last_positive = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (death_rates_[i] > 0.0) last_positive = i;
    running += death_rates_[i];
    if (running > target && death_rates_[i] > 0.0) return i;
  }
  return last_positive;
}

Event Simulator::step() {
  Event ev;
  if (points_.empty()) {
    ev.kind = EventKind::Absorbed;
    return ev;
  }
  const double total = total_birth_rate() + std::max(0.0, total_death_rate_);
  if (!(total > 0.0)) {
    ev.kind = EventKind::Stalled;
    ev.waiting_time = std::numeric_limits<double>::infinity();
    time_ = ev.waiting_time;
    return ev;
  }
  std::exponential_distribution<double> wait(total);
  return fire(wait(rng_));
}

Event Simulator::fire(double waiting_time) {
  Event ev;
  const double birth = total_birth_rate();
  const double total = birth + std::max(0.0, total_death_rate_);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  ev.waiting_time = waiting_time;
  time_ += waiting_time;
  if (uniform(rng_) * total < birth) {
    std::uniform_int_distribution<std::size_t> pick(0, points_.size() - 1);
    ev.kind = EventKind::Birth;
    ev.index = pick(rng_);
    Point child = points_[ev.index];
    Point xi = sampler_(rng_);
    for (int k = 0; k < domain_.dim; ++k) child[k] += xi[k];
    ev.position = metric_.wrap(child);
    insert(ev.position);
  } else {
    ev.kind = EventKind::Death;
    ev.index = pick_victim(uniform(rng_));
    ev.position = points_[ev.index];
    remove(ev.index);
  }
  if (++events_ % kRefreshInterval == 0) refresh_rates();
  return ev;
}

Simulator::AdvanceStatus Simulator::advance_until(double t, std::size_t max_points) {
  if (points_.size() > max_points) return AdvanceStatus::Truncated;
  for (;;) {
    if (points_.empty()) {
      time_ = t;
      return AdvanceStatus::Absorbed;
    }
    const double total = total_birth_rate() + std::max(0.0, total_death_rate_);
    if (!(total > 0.0)) {
      time_ = t;
      return AdvanceStatus::Reached;
    }
    // A waiting time overshooting the horizon is discarded; exact by
    // memorylessness.
    std::exponential_distribution<double> wait(total);
    const double tau = wait(rng_);
    if (time_ + tau > t) {
      time_ = t;
      return AdvanceStatus::Reached;
    }
    fire(tau);
    if (points_.size() > max_points) return AdvanceStatus::Truncated;
  }
}

double Simulator::recomputed_rate(std::size_t i) const {
  double rate = pair_.m;
  if (!competition_) return rate;
  for_each_neighbor(points_[i], [&](std::size_t j) {
    if (j != i) rate += pair_value(points_[i], points_[j]);
  });
  return rate;
}

void Simulator::refresh_rates() {
  fenwick_.clear();
  total_death_rate_ = 0.0;
  for (std::size_t i = 0; i < points_.size(); ++i) {
    death_rates_[i] = recomputed_rate(i);
    fenwick_.push_back(death_rates_[i]);
    total_death_rate_ += death_rates_[i];
  }
}

double Simulator::cache_error() const {
  const double scale = pair_.m + pair_.a_minus.sup_norm() + std::numeric_limits<double>::min();
  double worst = 0.0;
  double sum = 0.0;
  for (std::size_t i = 0; i < points_.size(); ++i) {
    double r = recomputed_rate(i);
    sum += r;
    worst = std::max(worst, std::abs(death_rates_[i] - r) / std::max(std::abs(r), scale));
  }
  worst = std::max(worst, std::abs(total_death_rate_ - sum) / std::max(std::abs(sum), scale));
  return worst;
}

std::vector<std::size_t> Simulator::neighbors(const Point& x) const {
  std::vector<std::size_t> out;
  for_each_neighbor(x, [&](std::size_t j) {
    if (metric_.distance(x, points_[j]) < cutoff_) out.push_back(j);
  });
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<std::size_t> Simulator::neighbors_bruteforce(const Point& x) const {
  std::vector<std::size_t> out;
  for (std::size_t j = 0; j < points_.size(); ++j)
    if (metric_.distance(x, points_[j]) < cutoff_) out.push_back(j);
  return out;
}

// ---------------------------------------------------------------------------

const char* to_string(Termination t) {
  switch (t) {
    case Termination::Completed: return "completed";
    case Termination::Absorbed: return "absorbed";
    case Termination::Truncated: return "truncated";
  }
  return "unknown";
}

std::vector<double> observation_times(double t_end, double observe_every) {
  if (!(t_end >= 0.0) || !std::isfinite(t_end)) throw ConfigError("t_end must be finite and >= 0");
  if (!(observe_every >= 0.0)) throw ConfigError("observe_every must be >= 0");
  std::vector<double> times{0.0};
  if (t_end == 0.0) return times;
  if (observe_every > 0.0) {
    const auto count = static_cast<long>(std::floor(t_end / observe_every + 1e-9));
    for (long k = 1; k <= count; ++k) times.push_back(std::min(t_end, k * observe_every));
  }
  if (times.back() < t_end * (1.0 - 1e-12)) times.push_back(t_end);
  return times;
}

RunResult run(const Domain& domain, const KernelPair& pair, const InitialCondition& initial,
              const RunConfig& config, std::uint64_t seed) {
  if (config.bins) config.bins->check_torus(domain.L);
  Simulator sim(domain, pair, initial, seed);
  const Metric metric = domain.metric();
  const double volume = domain.volume();
  RunResult result;
  for (double t : observation_times(config.t_end, config.observe_every)) {
    auto status = sim.advance_until(t, config.max_points);
    if (status == Simulator::AdvanceStatus::Truncated) {
      result.termination = Termination::Truncated;
      break;
    }
    if (status == Simulator::AdvanceStatus::Absorbed) result.termination = Termination::Absorbed;
    Snapshot s;
    s.time = t;
    s.n = sim.size();
    s.density = static_cast<double>(s.n) / volume;
    if (config.record_points) s.points.assign(sim.points().begin(), sim.points().end());
    if (config.bins) s.pair_counts = count_ordered_pairs(sim.points(), metric, *config.bins);
    result.snapshots.push_back(std::move(s));
  }
  result.events = sim.events();
  result.cache_error = sim.cache_error();
  return result;
}

std::vector<RunResult> run_ensemble(const Domain& domain, const KernelPair& pair,
                                    const InitialCondition& initial, const RunConfig& config,
                                    std::size_t replicas, std::uint64_t master_seed) {
  std::vector<RunResult> out(replicas);
  parallel_for(replicas, [&](std::size_t i) {
    out[i] = run(domain, pair, initial, config, derive_seed(master_seed, i));
  });
  return out;
}

}  // namespace bdlp
