#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "bdlp/bounds.hpp"
#include "bdlp/config.hpp"
#include "bdlp/hierarchy.hpp"
#include "bdlp/simulator.hpp"
#include "bdlp/stability.hpp"
#include "bdlp/statistics.hpp"

namespace bdlp {

/// Provenance line written at the top of every output file.
std::string output_stamp(const ExperimentConfig& cfg, const std::string& comment = "# ");

struct SimulateOutcome {
  BinEdges bins{std::vector<double>{0.0, 1.0}};
  std::vector<RunResult> runs;
  std::vector<DensityEstimate> density;
  std::vector<PairCorrelationEstimate> k2;
};

SimulateOutcome run_simulate(const ExperimentConfig& cfg);
/// density.csv, snapshots.csv, pair_correlation.csv and, with write_points,
/// points_<replica>_<k>.csv.
void write_simulate(const ExperimentConfig& cfg, const SimulateOutcome& out, const std::filesystem::path& dir);

/// Integrates from the Poisson(initial_intensity) state.
HierarchyTrajectory run_hierarchy(const ExperimentConfig& cfg);
/// hierarchy_rho.csv (time,rho) and hierarchy_k2.csv (time,r,k2), k2 taken
/// along the first axis for r in [0, L/2].
void write_hierarchy(const ExperimentConfig& cfg, const HierarchyTrajectory& traj,
                     const std::filesystem::path& dir);

struct StabilityOutcome {
  bool certified = false;
  StabilityCertificate certificate;
  BruteForceResult search;
};

/// Proven certificate for the configured pair (if any), checked by the
/// brute-force search.
StabilityOutcome run_stability(const ExperimentConfig& cfg);
std::string certificate_json(const ExperimentConfig& cfg, const StabilityOutcome& out);

/// Human-readable listing of every closed-form quantity for the config.
std::string bounds_report(const ExperimentConfig& cfg);

/// The envelope the configuration falls under. Pure death when <a+> = 0,
/// extinction when m > <a+>, growth otherwise. Without a stability
/// certificate (a- = 0) the growth envelope uses C = k0_sup_root and is
/// marked as a negative control.
struct EnvelopeChoice {
  Envelope envelope;
  bool negative_control = false;
  std::string description;
};
EnvelopeChoice choose_envelope(const ExperimentConfig& cfg);

struct CompareOutcome {
  SimulateOutcome simulation;
  HierarchyTrajectory hierarchy;
  EnvelopeChoice envelope;
  std::vector<double> cluster_index;  // simulation, per observation time
  double r0 = 0.0;
  BoundLedger ledger;
};

/// Simulation and hierarchy on the same observation grid, checked against
/// the applicable envelope, plus a monotone-clustering check for
/// competition-free models.
CompareOutcome run_compare(const ExperimentConfig& cfg);
/// compare.csv (time,quantity,r,simulation,simulation_stderr,hierarchy) and
/// ledger.csv.
void write_compare(const ExperimentConfig& cfg, const CompareOutcome& out, const std::filesystem::path& dir);

/// Sup over bins of the estimated k2 and its standard error at one time.
std::pair<double, double> k2_sup_estimate(const PairCorrelationEstimate& est);
/// Hierarchy k2 along the first axis, linearly interpolated at distance r.
double hierarchy_k2_at(const Grid& grid, const TruncatedCorrelation& state, double r);

}  // namespace bdlp
