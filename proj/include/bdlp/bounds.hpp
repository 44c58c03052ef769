#pragma once

#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "bdlp/kernels.hpp"
#include "bdlp/stability.hpp"

namespace bdlp {

/// Which part of the perturbation enters the scale-to-scale estimates:
/// Full uses the whole B operator, Positive only its positivity-preserving
/// part.
enum class BVariant { Full, Positive };
BVariant parse_variant(const std::string& s);
std::string to_string(BVariant v);

/// Pair of Banach-scale indices alpha1 < alpha2.
struct ScalePair {
  double alpha1 = 0.0;
  double alpha2 = 1.0;
  BVariant variant = BVariant::Full;

  /// Throws PreconditionError unless alpha2 > alpha1.
  void validate() const;
};

/// beta(alpha2) = <a+> + b + <a-> e^{alpha2} (Full) or <a+> + b (Positive).
double beta(double alpha2, double plus_mass, double minus_mass, double b, BVariant variant);
double beta(double alpha2, const KernelPair& pair, double b, BVariant variant);

/// Existence horizon (alpha2 - alpha1) / beta(alpha2); +inf when beta = 0.
double time_horizon(const ScalePair& scale, const KernelPair& pair, double b);
double time_horizon(const ScalePair& scale, double plus_mass, double minus_mass, double b);

/// Norm bound T / (T - t) on the solution operator; throws
/// HorizonExceededError for t >= T and PreconditionError for t < 0.
double q_norm_bound(double t, double horizon);

struct OperatorNormBounds {
  double a1 = 0.0;  // multiplicative part
  double a2 = 0.0;  // creation part
  double b = 0.0;   // integral part
};

/// Bounds on the generator pieces acting from K_{alpha'} to K_{alpha}:
///   a1 <= m / (e da) + 4 ||a-|| / (e^2 da^2)
///   a2 <= e^{-alpha'} 4 ||a+|| / (e^2 da^2)
///   b  <= (<a+> + <a-> e^{alpha'}) / (e da),      da = alpha - alpha'.
OperatorNormBounds a_norm_bounds(double alpha, double alpha_prime, const KernelPair& pair);

/// (p / (e sigma))^p, the maximum over n > 0 of n^p e^{-sigma n}.
double power_exponential_bound(double p, double sigma);

struct ConvergenceSeries {
  std::vector<double> terms;         // c_0 .. c_{n_max}
  std::vector<double> partial_sums;  // running sums of terms
  double ratio = 0.0;                // T / T_delta
};

/// c_n = (1/n!) (n/e)^n (T/T_delta)^n for n = 0..n_max (c_0 = 1), computed in
/// log space. Requires 0 <= T < T_delta.
ConvergenceSeries convergence_terms(int n_max, double horizon, double horizon_delta);

/// Growth-regime constant: the initial data satisfy k0(eta) <= C^{|eta|} and
/// the growth envelope is C^n e^{n (<a+> - delta) t}.
struct GrowthConstants {
  double delta = 0.0;
  double c_delta = 0.0;
};

/// Extinction-regime constants; envelope C^n e^{-epsilon t}.
struct ExtinctionConstants {
  double epsilon = 0.0;
  double theta_epsilon = 0.0;
  double c_epsilon = 0.0;
};

/// C_delta = max(k0_sup_root, 1/theta) when b = 0, else
/// max(k0_sup_root, b / ((m - delta) theta)). Needs <a+> > 0, m <= <a+> and
/// delta <= m (b = 0) or delta < m (b > 0).
GrowthConstants growth_constants(const KernelPair& pair, const StabilityCertificate& cert,
                                 double k0_sup_root, double delta);

/// theta_eps = theta (1 - (eps + 2 <a+>) / (2 m)), C_eps = max(k0_sup_root,
/// 1 / theta_eps). Needs m > <a+> > 0 and eps in (0, m - <a+>).
ExtinctionConstants extinction_constants(const KernelPair& pair, const StabilityCertificate& cert,
                                         double k0_sup_root, double epsilon);

/// log C_delta + (<a+> - delta) T: the scale index on which the growth
/// solution lives up to time T.
double alpha_horizon(double c_delta, double delta, double plus_mass, double horizon);

// ---------------------------------------------------------------------------
// envelope checks

/// Upper envelope for the n-point correlation as a function of time.
struct Envelope {
  enum class Kind { Growth, Extinction, PureDeath };
  Kind kind = Kind::Growth;
  double c = 1.0;     // C_delta or C_eps
  double rate = 0.0;  // <a+> - delta (Growth) or epsilon (Extinction)
  double m = 0.0;     // PureDeath: mortality
  double rho0 = 0.0;  // PureDeath: initial density
  double k2_sup0 = 0.0;

  static Envelope growth(const GrowthConstants& g, double plus_mass);
  static Envelope extinction(const ExtinctionConstants& e);
  static Envelope pure_death(double m, double rho0, double k2_sup0);

  /// Bound on k^(n) at time t for n = 1, 2.
  double bound(int n, double t) const;
  /// Stable identifier of the bound's formula.
  std::string formula_id() const;
};

/// One observation of a trajectory: density and (optionally) sup of k2,
/// with standard errors (zero for deterministic trajectories).
struct ObservedPoint {
  double time = 0.0;
  double rho = 0.0;
  double rho_stderr = 0.0;
  std::optional<double> k2_sup;
  double k2_stderr = 0.0;
};

enum class CheckStatus { Pass, Inconclusive, Fail };
std::string to_string(CheckStatus s);

struct LedgerRecord {
  std::string check;  // "<formula id>:n=<n>:<source>"
  double time = 0.0;
  double bound_value = 0.0;
  double observed = 0.0;
  double margin = 0.0;  // bound - observed
  CheckStatus status = CheckStatus::Pass;
  bool negative_control = false;
};

/// Compares each observation against the envelope for n = 1 and (when k2 is
/// present) n = 2. Observed values above the bound but within 3 standard
/// errors are Inconclusive.
std::vector<LedgerRecord> check_envelope(std::span<const ObservedPoint> trajectory, const Envelope& envelope,
                                         const std::string& source, bool negative_control = false);

class BoundLedger {
 public:
  void add(LedgerRecord r) { records_.push_back(std::move(r)); }
  void add(std::span<const LedgerRecord> rs) { records_.insert(records_.end(), rs.begin(), rs.end()); }
  const std::vector<LedgerRecord>& records() const { return records_; }
  /// True iff no record outside the negative controls failed.
  bool all_pass() const;
  /// True iff some negative-control record failed, as expected.
  bool negative_controls_tripped() const;
  /// CSV with header check,time,bound_value,observed,margin,status.
  void write_csv(std::ostream& os) const;

 private:
  std::vector<LedgerRecord> records_;
};

}  // namespace bdlp
