#include "bdlp/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "bdlp/errors.hpp"
#include "bdlp/observation.hpp"

namespace bdlp {

namespace fs = std::filesystem;

std::string output_stamp(const ExperimentConfig& cfg, const std::string& comment) {
  char buf[128];
  std::snprintf(buf, sizeof buf, "bdlp %s config_hash=%016llx seed=%llu", kVersion,
                static_cast<unsigned long long>(config_hash(cfg)),
                static_cast<unsigned long long>(cfg.simulate.seed));
  return comment + buf;
}

namespace {

std::ofstream open_csv(const ExperimentConfig& cfg, const fs::path& path) {
  std::ofstream os(path);
  if (!os) throw Error("cannot write " + path.string());
  os.precision(17);
  os << output_stamp(cfg) << "\n";
  return os;
}

double kernel_scale(const Kernel& k) {
  return std::visit(
      [](const auto& s) -> double {
        using S = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<S, TopHat>) return s.radius;
        else if constexpr (std::is_same_v<S, Gaussian>) return s.sigma;
        else return s.radii.empty() ? 0.0 : s.radii.back();
      },
      k.shape());
}

}  // namespace

// ---------------------------------------------------------------------------
// simulate

SimulateOutcome run_simulate(const ExperimentConfig& cfg) {
  const Domain domain = cfg.domain();
  const KernelPair pair = cfg.pair();
  SimulateOutcome out;
  out.bins = BinEdges::logarithmic(cfg.L, cfg.simulate.bins);
  RunConfig rc;
  rc.t_end = cfg.simulate.t_end;
  rc.observe_every = cfg.simulate.observe_every;
  rc.max_points = cfg.simulate.max_points;
  rc.record_points = cfg.simulate.write_points;
  rc.bins = out.bins;
  out.runs = run_ensemble(domain, pair, PoissonIntensity{cfg.simulate.initial_intensity}, rc,
                          cfg.simulate.replicas, cfg.simulate.seed);
  out.density = density_estimate(out.runs, domain.volume());
  out.k2 = pair_correlation(out.runs, out.bins, cfg.dim, domain.volume());
  return out;
}

void write_simulate(const ExperimentConfig& cfg, const SimulateOutcome& out, const fs::path& dir) {
  {
    auto os = open_csv(cfg, dir / "density.csv");
    os << "time,rho,stderr,replicas\n";
    for (const auto& d : out.density) os << d.time << ',' << d.rho << ',' << d.std_error << ',' << d.replicas << '\n';
  }
  {
    auto os = open_csv(cfg, dir / "snapshots.csv");
    os << "time,replica,N,density\n";
    for (std::size_t r = 0; r < out.runs.size(); ++r)
      for (const auto& s : out.runs[r].snapshots) os << s.time << ',' << r << ',' << s.n << ',' << s.density << '\n';
  }
  {
    auto os = open_csv(cfg, dir / "pair_correlation.csv");
    os << "time,r_lo,r_hi,k2,stderr\n";
    for (const auto& est : out.k2)
      for (std::size_t b = 0; b < out.bins.size(); ++b)
        os << est.time << ',' << out.bins.lo(b) << ',' << out.bins.hi(b) << ',' << est.k2[b] << ','
           << est.std_error[b] << '\n';
  }
  if (cfg.simulate.write_points) {
    for (std::size_t r = 0; r < out.runs.size(); ++r)
      for (std::size_t k = 0; k < out.runs[r].snapshots.size(); ++k) {
        const auto& s = out.runs[r].snapshots[k];
        auto os = open_csv(cfg, dir / ("points_" + std::to_string(r) + "_" + std::to_string(k) + ".csv"));
        os << "# time=" << s.time << '\n';
        const char* names[] = {"x", "y", "z"};
        for (int c = 0; c < cfg.dim; ++c) os << (c ? "," : "") << names[c];
        os << '\n';
        for (const auto& p : s.points) {
          for (int c = 0; c < cfg.dim; ++c) os << (c ? "," : "") << p[c];
          os << '\n';
        }
      }
  }
}

// ---------------------------------------------------------------------------
// hierarchy

namespace {

HierarchyTrajectory integrate_config(const ExperimentConfig& cfg, double t_end, double observe_every) {
  HierarchyModel model(cfg.grid(), cfg.pair());
  IntegrateOptions opt;
  opt.t_end = t_end;
  opt.observe_every = observe_every;
  opt.dt = cfg.hierarchy.dt;
  opt.rtol = cfg.hierarchy.rtol;
  return integrate(model, TruncatedCorrelation::poisson(cfg.grid(), cfg.simulate.initial_intensity),
                   parse_closure(cfg.hierarchy.closure), opt);
}

}  // namespace

HierarchyTrajectory run_hierarchy(const ExperimentConfig& cfg) {
  return integrate_config(cfg, cfg.hierarchy.t_end, cfg.hierarchy.observe_every);
}

double hierarchy_k2_at(const Grid& grid, const TruncatedCorrelation& state, double r) {
  const double h = grid.spacing();
  const int half = grid.points_per_axis / 2;
  double x = std::clamp(r / h, 0.0, static_cast<double>(half));
  int j = std::min(static_cast<int>(x), half - 1);
  double w = x - j;
  return (1.0 - w) * state.k2[j] + w * state.k2[j + 1];
}

void write_hierarchy(const ExperimentConfig& cfg, const HierarchyTrajectory& traj, const fs::path& dir) {
  const Grid grid = cfg.grid();
  {
    auto os = open_csv(cfg, dir / "hierarchy_rho.csv");
    for (const auto& w : traj.warnings) os << "# warning: " << w << '\n';
    os << "time,rho\n";
    for (std::size_t k = 0; k < traj.times.size(); ++k) os << traj.times[k] << ',' << traj.states[k].rho << '\n';
  }
  {
    auto os = open_csv(cfg, dir / "hierarchy_k2.csv");
    os << "time,r,k2\n";
    for (std::size_t k = 0; k < traj.times.size(); ++k)
      for (int j = 0; j <= grid.points_per_axis / 2; ++j)
        os << traj.times[k] << ',' << j * grid.spacing() << ',' << traj.states[k].k2[j] << '\n';
  }
}

// ---------------------------------------------------------------------------
// stability

StabilityOutcome run_stability(const ExperimentConfig& cfg) {
  StabilityOutcome out;
  const KernelPair pair = cfg.pair();
  auto cert = certify(pair, cfg.stability.b);
  if (!cert) return out;
  out.certified = true;
  out.certificate = *cert;
  BruteForceOptions opt;
  opt.n_max = cfg.stability.n_max;
  opt.trials = cfg.stability.trials;
  opt.seed = cfg.simulate.seed;
  out.search = verify_bruteforce(pair, cert->theta, cert->b, opt);
  out.certificate.worst_empirical_u = out.search.min_u;
  if (out.search.min_u < -kViolationTolerance) out.certificate.violating_config = out.search.worst_config;
  return out;
}

std::string certificate_json(const ExperimentConfig& cfg, const StabilityOutcome& out) {
  nlohmann::json j;
  j["version"] = kVersion;
  char hash[17];
  std::snprintf(hash, sizeof hash, "%016llx", static_cast<unsigned long long>(config_hash(cfg)));
  j["config_hash"] = hash;
  j["seed"] = cfg.simulate.seed;
  j["certified"] = out.certified;
  if (out.certified) {
    const auto& c = out.certificate;
    j["theta"] = c.theta;
    j["b"] = c.b;
    j["source"] = to_string(c.source);
    j["xi"] = c.packing_bound ? nlohmann::json(*c.packing_bound) : nlohmann::json(nullptr);
    j["worst_U"] = c.worst_empirical_u ? nlohmann::json(*c.worst_empirical_u) : nlohmann::json(nullptr);
    nlohmann::json pts = nlohmann::json::array();
    for (const auto& p : c.violating_config) pts.push_back(std::vector<double>(p.begin(), p.begin() + cfg.dim));
    j["violating_config"] = pts;
  } else {
    j["theta"] = nullptr;
    j["b"] = cfg.stability.b;
    j["source"] = nullptr;
  }
  return j.dump(2) + "\n";
}

// ---------------------------------------------------------------------------
// bounds

EnvelopeChoice choose_envelope(const ExperimentConfig& cfg) {
  const KernelPair pair = cfg.pair();
  const double plus = pair.a_plus.l1_norm();
  const double k0 = cfg.k0_sup_root();
  EnvelopeChoice out;
  if (plus == 0.0) {
    const double rho0 = cfg.simulate.initial_intensity;
    out.envelope = Envelope::pure_death(pair.m, rho0, rho0 * rho0);
    out.description = "pure death: rho0 e^{-m t}, rho0^2 e^{-2 m t}";
    return out;
  }
  auto cert = certify(pair, cfg.stability.b);
  std::ostringstream os;
  os.precision(10);
  if (pair.m > plus) {
    const double eps = cfg.bounds.epsilon.value_or(0.5 * (pair.m - plus));
    if (cert) {
      auto e = extinction_constants(pair, *cert, k0, eps);
      out.envelope = Envelope::extinction(e);
      os << "extinction: C_eps = " << e.c_epsilon << ", theta_eps = " << e.theta_epsilon << ", eps = " << eps;
    } else {
      ExtinctionConstants e{eps, 0.0, k0};
      out.envelope = Envelope::extinction(e);
      out.negative_control = true;
      os << "extinction without certificate (negative control): C = " << k0 << ", eps = " << eps;
    }
  } else if (cert) {
    const double delta = cfg.bounds.delta.value_or(cert->b == 0.0 ? pair.m : pair.m - 1.0);
    auto g = growth_constants(pair, *cert, k0, delta);
    out.envelope = Envelope::growth(g, plus);
    os << "growth: C_delta = " << g.c_delta << ", delta = " << delta << ", theta = " << cert->theta
       << ", b = " << cert->b;
  } else {
    const double delta = cfg.bounds.delta.value_or(pair.m);
    out.envelope = Envelope::growth({delta, k0}, plus);
    out.negative_control = true;
    os << "growth without certificate (negative control): C = " << k0 << ", delta = " << delta;
  }
  out.description = os.str();
  return out;
}

std::string bounds_report(const ExperimentConfig& cfg) {
  const KernelPair pair = cfg.pair();
  const double b = cfg.stability.b;
  std::ostringstream os;
  os.precision(12);
  os << output_stamp(cfg) << "\n";
  os << "<a+> = " << pair.a_plus.l1_norm() << "\n<a-> = " << pair.a_minus.l1_norm()
     << "\n||a+|| = " << pair.a_plus.sup_norm() << "\n||a-|| = " << pair.a_minus.sup_norm() << "\nm = " << pair.m
     << "\nb = " << b << "\n";
  ScalePair scale{cfg.bounds.alpha1, cfg.bounds.alpha2, parse_variant(cfg.bounds.variant)};
  const double bt = beta(scale.alpha2, pair, b, scale.variant);
  const double horizon = time_horizon(scale, pair, b);
  os << "beta(alpha2 = " << scale.alpha2 << ", " << to_string(scale.variant) << ") = " << bt << "\n";
  os << "T(alpha2, alpha1) = " << horizon << "\n";
  const double t = cfg.bounds.t;
  try {
    os << "q_norm_bound(t = " << t << ") = " << q_norm_bound(t, horizon) << "\n";
    auto series = convergence_terms(20, t, horizon);
    os << "convergence_terms(t / T = " << series.ratio << "): c_1 = " << series.terms[1]
       << ", partial sum to n = 20: " << series.partial_sums.back() << "\n";
  } catch (const HorizonExceededError& e) {
    os << "q_norm_bound(t = " << t << "): " << e.what() << "\n";
  } catch (const PreconditionError& e) {
    os << "convergence_terms: " << e.what() << "\n";
  }
  auto nb = a_norm_bounds(scale.alpha2, scale.alpha1, pair);
  os << "a_norm_bounds(alpha2 -> alpha1): A1 <= " << nb.a1 << ", A2 <= " << nb.a2 << ", B <= " << nb.b << "\n";

  auto cert = certify(pair, b);
  if (cert) {
    os << "certificate: theta = " << cert->theta << ", b = " << cert->b << ", source = " << to_string(cert->source);
    if (cert->packing_bound) os << ", xi = " << *cert->packing_bound;
    os << "\n";
  } else {
    os << "certificate: none (no proven stability bound for this pair)\n";
  }
  try {
    EnvelopeChoice env = choose_envelope(cfg);
    os << "envelope: " << env.description << "\n";
    if (env.envelope.kind == Envelope::Kind::Growth)
      os << "alpha_T(t = " << t << ") = "
         << alpha_horizon(env.envelope.c, pair.a_plus.l1_norm() - env.envelope.rate, pair.a_plus.l1_norm(), t)
         << "\n";
    os << "envelope at t: n=1 " << env.envelope.bound(1, t) << ", n=2 " << env.envelope.bound(2, t) << "\n";
  } catch (const PreconditionError& e) {
    os << "envelope: " << e.what() << "\n";
  }
  return os.str();
}

// ---------------------------------------------------------------------------
// compare

std::pair<double, double> k2_sup_estimate(const PairCorrelationEstimate& est) {
  std::size_t best = 0;
  for (std::size_t b = 1; b < est.k2.size(); ++b)
    if (est.k2[b] > est.k2[best]) best = b;
  return {est.k2[best], est.std_error[best]};
}

CompareOutcome run_compare(const ExperimentConfig& cfg) {
  CompareOutcome out;
  const KernelPair pair = cfg.pair();
  out.envelope = choose_envelope(cfg);
  out.simulation = run_simulate(cfg);
  out.hierarchy = integrate_config(cfg, cfg.simulate.t_end, cfg.simulate.observe_every);

  if (cfg.compare.r0) {
    out.r0 = *cfg.compare.r0;
  } else if (!pair.a_minus.is_zero()) {
    out.r0 = std::min(kernel_scale(pair.a_minus), 0.5 * cfg.L);
  } else {
    out.r0 = kernel_scale(pair.a_plus) > 0.0 ? std::min(kernel_scale(pair.a_plus), 0.5 * cfg.L) : cfg.L / 20.0;
  }

  std::vector<ObservedPoint> sim_obs, hier_obs;
  const auto& density = out.simulation.density;
  const auto& k2 = out.simulation.k2;
  for (std::size_t k = 0; k < density.size() && k < k2.size(); ++k) {
    auto [sup, err] = k2_sup_estimate(k2[k]);
    sim_obs.push_back({density[k].time, density[k].rho, density[k].std_error, sup, err});
  }
  for (std::size_t k = 0; k < out.hierarchy.times.size(); ++k) {
    const auto& s = out.hierarchy.states[k];
    hier_obs.push_back({out.hierarchy.times[k], s.rho, 0.0, s.k2_sup(), 0.0});
  }
  const bool control = out.envelope.negative_control;
  out.ledger.add(check_envelope(sim_obs, out.envelope.envelope, "simulation", control));
  out.ledger.add(check_envelope(hier_obs, out.envelope.envelope, "hierarchy", control));

  // clustering: the index must not decrease between observation times
  const auto& bins = out.simulation.bins;
  std::vector<double> index_err;
  for (std::size_t k = 0; k < density.size() && k < k2.size(); ++k) {
    const double rho = density[k].rho;
    if (!(rho > 0.0)) {
      out.cluster_index.push_back(std::numeric_limits<double>::quiet_NaN());
      index_err.push_back(0.0);
      continue;
    }
    std::size_t best = bins.size();
    for (std::size_t b = 0; b < bins.size(); ++b) {
      if (bins.hi(b) > out.r0 * (1.0 + 1e-12)) continue;
      if (best == bins.size() || k2[k].k2[b] > k2[k].k2[best]) best = b;
    }
    if (best == bins.size()) throw PreconditionError("no pair-correlation bin lies below r0");
    out.cluster_index.push_back(cluster_index(k2[k], bins, rho, out.r0));
    index_err.push_back(k2[k].std_error[best] / (rho * rho));
  }
  if (pair.a_minus.is_zero() && pair.m < pair.a_plus.l1_norm()) {
    for (std::size_t k = 1; k < out.cluster_index.size(); ++k) {
      LedgerRecord r;
      r.check = "cluster_index_growth:simulation";
      r.time = k2[k].time;
      r.bound_value = out.cluster_index[k - 1];
      r.observed = out.cluster_index[k];
      r.margin = r.observed - r.bound_value;
      const double err = std::hypot(index_err[k], index_err[k - 1]);
      if (r.margin >= 0.0)
        r.status = CheckStatus::Pass;
      else if (r.margin >= -3.0 * err)
        r.status = CheckStatus::Inconclusive;
      else
        r.status = CheckStatus::Fail;
      out.ledger.add(r);
    }
  }
  return out;
}

void write_compare(const ExperimentConfig& cfg, const CompareOutcome& out, const fs::path& dir) {
  const Grid grid = cfg.grid();
  const auto& bins = out.simulation.bins;
  {
    auto os = open_csv(cfg, dir / "compare.csv");
    os << "# envelope: " << out.envelope.description << "\n";
    for (const auto& w : out.hierarchy.warnings) os << "# hierarchy warning: " << w << '\n';
    os << "time,quantity,r,simulation,simulation_stderr,hierarchy\n";
    const auto& density = out.simulation.density;
    for (std::size_t k = 0; k < density.size(); ++k) {
      const bool have_h = k < out.hierarchy.states.size();
      os << density[k].time << ",rho,," << density[k].rho << ',' << density[k].std_error << ','
         << (have_h ? out.hierarchy.states[k].rho : std::nan("")) << '\n';
      if (k < out.cluster_index.size())
        os << density[k].time << ",cluster_index," << out.r0 << ',' << out.cluster_index[k] << ",,\n";
      if (k >= out.simulation.k2.size()) continue;
      const auto& est = out.simulation.k2[k];
      for (std::size_t b = 0; b < bins.size(); ++b) {
        const double r = 0.5 * (bins.lo(b) + bins.hi(b));
        os << density[k].time << ",k2," << r << ',' << est.k2[b] << ',' << est.std_error[b] << ','
           << (have_h ? hierarchy_k2_at(grid, out.hierarchy.states[k], r) : std::nan("")) << '\n';
      }
    }
  }
  auto os = open_csv(cfg, dir / "ledger.csv");
  out.ledger.write_csv(os);
}

}  // namespace bdlp
