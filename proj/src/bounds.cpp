#include "bdlp/bounds.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "bdlp/errors.hpp"

namespace bdlp {

BVariant parse_variant(const std::string& s) {
  if (s == "full") return BVariant::Full;
  if (s == "positive") return BVariant::Positive;
  throw ConfigError("unknown variant '" + s + "' (expected full or positive)");
}

std::string to_string(BVariant v) { return v == BVariant::Full ? "full" : "positive"; }

void ScalePair::validate() const {
  if (!(alpha2 > alpha1)) throw PreconditionError("scale pair needs alpha2 > alpha1");
}

double beta(double alpha2, double plus_mass, double minus_mass, double b, BVariant variant) {
  double base = plus_mass + b;
  return variant == BVariant::Full ? base + minus_mass * std::exp(alpha2) : base;
}

double beta(double alpha2, const KernelPair& pair, double b, BVariant variant) {
  return beta(alpha2, pair.a_plus.l1_norm(), pair.a_minus.l1_norm(), b, variant);
}

double time_horizon(const ScalePair& scale, double plus_mass, double minus_mass, double b) {
  scale.validate();
  double bt = beta(scale.alpha2, plus_mass, minus_mass, b, scale.variant);
  if (bt == 0.0) return std::numeric_limits<double>::infinity();
  return (scale.alpha2 - scale.alpha1) / bt;
}

double time_horizon(const ScalePair& scale, const KernelPair& pair, double b) {
  return time_horizon(scale, pair.a_plus.l1_norm(), pair.a_minus.l1_norm(), b);
}

double q_norm_bound(double t, double horizon) {
  if (!(t >= 0.0)) throw PreconditionError("q_norm_bound needs t >= 0");
  if (!(t < horizon)) {
    std::ostringstream os;
    os << "t = " << t << " is at or beyond the existence horizon T = " << horizon;
    throw HorizonExceededError(os.str());
  }
  if (std::isinf(horizon)) return 1.0;
  return horizon / (horizon - t);
}

OperatorNormBounds a_norm_bounds(double alpha, double alpha_prime, const KernelPair& pair) {
  const double gap = alpha - alpha_prime;
  if (!(gap > 0.0)) throw PreconditionError("a_norm_bounds needs alpha > alpha'");
  const double e = std::exp(1.0);
  OperatorNormBounds out;
  out.a1 = pair.m / (e * gap) + 4.0 * pair.a_minus.sup_norm() / (e * e * gap * gap);
  out.a2 = std::exp(-alpha_prime) * 4.0 * pair.a_plus.sup_norm() / (e * e * gap * gap);
  out.b = (pair.a_plus.l1_norm() + pair.a_minus.l1_norm() * std::exp(alpha_prime)) / (e * gap);
  return out;
}

double power_exponential_bound(double p, double sigma) {
  if (!(p >= 1.0 && sigma > 0.0)) throw PreconditionError("needs p >= 1 and sigma > 0");
  return std::pow(p / (std::exp(1.0) * sigma), p);
}

ConvergenceSeries convergence_terms(int n_max, double horizon, double horizon_delta) {
  if (n_max < 0) throw PreconditionError("n_max must be >= 0");
  if (!(horizon >= 0.0 && horizon < horizon_delta)) throw PreconditionError("needs 0 <= T < T_delta");
  ConvergenceSeries s;
  s.ratio = horizon / horizon_delta;
  const double log_ratio = std::log(s.ratio);
  double sum = 0.0;
  for (int n = 0; n <= n_max; ++n) {
    double term;
    if (n == 0) {
      term = 1.0;
    } else if (s.ratio == 0.0) {
      term = 0.0;
    } else {
      const double dn = n;
      term = std::exp(dn * (std::log(dn) - 1.0) - std::lgamma(dn + 1.0) + dn * log_ratio);
    }
    sum += term;
    s.terms.push_back(term);
    s.partial_sums.push_back(sum);
  }
  return s;
}

GrowthConstants growth_constants(const KernelPair& pair, const StabilityCertificate& cert,
                                 double k0_sup_root, double delta) {
  const double plus = pair.a_plus.l1_norm();
  const double m = pair.m;
  if (!(plus > 0.0) || m > plus) throw PreconditionError("growth constants need <a+> > 0 and m <= <a+>");
  if (!(cert.theta > 0.0)) throw PreconditionError("certificate theta must be positive");
  if (!(k0_sup_root >= 0.0)) throw PreconditionError("k0_sup_root must be >= 0");
  GrowthConstants g;
  g.delta = delta;
  if (cert.b == 0.0) {
    if (delta > m) throw PreconditionError("with b = 0 the growth regime needs delta <= m");
    g.c_delta = std::max(k0_sup_root, 1.0 / cert.theta);
  } else {
    if (!(delta < m)) throw PreconditionError("with b > 0 the growth regime needs delta < m");
    g.c_delta = std::max(k0_sup_root, cert.b / ((m - delta) * cert.theta));
  }
  return g;
}

ExtinctionConstants extinction_constants(const KernelPair& pair, const StabilityCertificate& cert,
                                         double k0_sup_root, double epsilon) {
  const double plus = pair.a_plus.l1_norm();
  const double m = pair.m;
  if (!(plus > 0.0) || !(m > plus)) throw PreconditionError("extinction constants need m > <a+> > 0");
  if (!(epsilon > 0.0 && epsilon < m - plus))
    throw PreconditionError("epsilon must lie in the open interval (0, m - <a+>)");
  if (!(cert.theta > 0.0)) throw PreconditionError("certificate theta must be positive");
  ExtinctionConstants e;
  e.epsilon = epsilon;
  e.theta_epsilon = cert.theta * (1.0 - (epsilon + 2.0 * plus) / (2.0 * m));
  e.c_epsilon = std::max(k0_sup_root, 1.0 / e.theta_epsilon);
  return e;
}

double alpha_horizon(double c_delta, double delta, double plus_mass, double horizon) {
  if (!(c_delta > 0.0)) throw PreconditionError("C_delta must be positive");
  return std::log(c_delta) + (plus_mass - delta) * horizon;
}

// ---------------------------------------------------------------------------

Envelope Envelope::growth(const GrowthConstants& g, double plus_mass) {
  Envelope e;
  e.kind = Kind::Growth;
  e.c = g.c_delta;
  e.rate = plus_mass - g.delta;
  return e;
}

Envelope Envelope::extinction(const ExtinctionConstants& x) {
  Envelope e;
  e.kind = Kind::Extinction;
  e.c = x.c_epsilon;
  e.rate = x.epsilon;
  return e;
}

Envelope Envelope::pure_death(double m, double rho0, double k2_sup0) {
  Envelope e;
  e.kind = Kind::PureDeath;
  e.m = m;
  e.rho0 = rho0;
  e.k2_sup0 = k2_sup0;
  return e;
}

double Envelope::bound(int n, double t) const {
  if (n != 1 && n != 2) throw PreconditionError("envelopes are evaluated for n = 1, 2");
  switch (kind) {
    case Kind::Growth: return std::pow(c, n) * std::exp(n * rate * t);
    case Kind::Extinction: return std::pow(c, n) * std::exp(-rate * t);
    case Kind::PureDeath: return (n == 1 ? rho0 : k2_sup0) * std::exp(-n * m * t);
  }
  return 0.0;
}

std::string Envelope::formula_id() const {
  switch (kind) {
    case Kind::Growth: return "growth_envelope";
    case Kind::Extinction: return "extinction_envelope";
    case Kind::PureDeath: return "pure_death_bound";
  }
  return "unknown";
}

std::string to_string(CheckStatus s) {
  switch (s) {
    case CheckStatus::Pass: return "pass";
    case CheckStatus::Inconclusive: return "inconclusive";
    case CheckStatus::Fail: return "fail";
  }
  return "unknown";
}

namespace {

LedgerRecord make_record(const std::string& check, double t, double bound, double observed, double stderr_value,
                         bool negative_control) {
  LedgerRecord r;
  r.check = check;
  r.time = t;
  r.bound_value = bound;
  r.observed = observed;
  r.margin = bound - observed;
  r.negative_control = negative_control;
  if (observed <= bound)
    r.status = CheckStatus::Pass;
  else if (observed - 3.0 * stderr_value <= bound)
    r.status = CheckStatus::Inconclusive;
  else
    r.status = CheckStatus::Fail;
  return r;
}

}  // namespace

std::vector<LedgerRecord> check_envelope(std::span<const ObservedPoint> trajectory, const Envelope& envelope,
                                         const std::string& source, bool negative_control) {
  std::vector<LedgerRecord> out;
  const std::string id = envelope.formula_id();
  for (const auto& p : trajectory) {
    out.push_back(make_record(id + ":n=1:" + source, p.time, envelope.bound(1, p.time), p.rho, p.rho_stderr,
                              negative_control));
    if (p.k2_sup)
      out.push_back(make_record(id + ":n=2:" + source, p.time, envelope.bound(2, p.time), *p.k2_sup,
                                p.k2_stderr, negative_control));
  }
  return out;
}

bool BoundLedger::all_pass() const {
  for (const auto& r : records_)
    if (!r.negative_control && r.status == CheckStatus::Fail) return false;
  return true;
}

bool BoundLedger::negative_controls_tripped() const {
  for (const auto& r : records_)
    if (r.negative_control && r.status == CheckStatus::Fail) return true;
  return false;
}

void BoundLedger::write_csv(std::ostream& os) const {
  os << "check,time,bound_value,observed,margin,status\n";
  auto old = os.precision(17);
  for (const auto& r : records_) {
    os << r.check << (r.negative_control ? ":negative_control" : "") << ',' << r.time << ',' << r.bound_value
       << ',' << r.observed << ',' << r.margin << ',' << to_string(r.status) << '\n';
  }
  os.precision(old);
}

}  // namespace bdlp
