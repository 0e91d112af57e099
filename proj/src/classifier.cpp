#include "superlin/classifier.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <ostream>
#include <sstream>

#include "superlin/errors.hpp"
#include "superlin/numerics.hpp"

namespace superlin {

const char* to_string(Regime r) {
  switch (r) {
    case Regime::NonlinearityDominated: return "NonlinearityDominated";
    case Regime::SharedGrowth: return "SharedGrowth";
    case Regime::ForcingDominated: return "ForcingDominated";
    case Regime::Indeterminate: return "Indeterminate";
  }
  return "?";
}

const char* to_string(Trend t) {
  switch (t) {
    case Trend::increasing: return "increasing";
    case Trend::stable: return "stable";
    case Trend::decreasing: return "decreasing";
    case Trend::unclear: return "unclear";
  }
  return "?";
}

const char* to_string(GrowthLaw g) {
  switch (g) {
    case GrowthLaw::F_over_t_to_one: return "F_over_t_to_one";
    case GrowthLaw::F_over_t_to_K: return "F_over_t_to_K";
    case GrowthLaw::limsup_F_over_t_is_K: return "limsup_F_over_t_is_K";
    case GrowthLaw::x_over_H_to_one: return "x_over_H_to_one";
  }
  return "?";
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
/// Below this log x, f and F are evaluated on x itself.
constexpr double kLogDirect = 600.0;
/// Beyond this log H, log-differences such as log h - log H lose all digits.
constexpr double kLogExact = 1e12;

constexpr double kNonlinearityBound = 1.02;
constexpr double kSharedBound = 1.05;

/// log f(x) for x = e^L, with x clamped to the domain floor.
double log_f_at(const Nonlinearity& n, double L) {
  const double floor = std::max(0.0, n.domain_floor());
  if (L < kLogDirect) {
    const double x = std::max(L == -kInf ? 0.0 : std::exp(L), floor);
    return std::log(n.eval_f(x));
  }
  return n.log_f(L);
}

/// F(e^L), NaN below the domain.
double F_at(const Nonlinearity& n, double L) {
  if (L == -kInf) return kNaN;
  if (L < kLogDirect) {
    const double x = std::exp(L);
    if (x < n.domain_floor()) return kNaN;
    return n.compute_F(x);
  }
  return n.F_of_log(L);
}

std::string short_number(double v) {
  std::ostringstream os;
  os << std::setprecision(4) << v;
  return os.str();
}

/// Max and min of finite sample values with t in [lo, hi].
std::pair<double, double> extremes(const Samples& s, double lo, double hi) {
  double mx = -kInf, mn = kInf;
  for (const auto& [t, v] : s) {
    if (t < lo || t > hi || !std::isfinite(v)) continue;
    mx = std::max(mx, v);
    mn = std::min(mn, v);
  }
  return {mx, mn};
}

bool H_nondecreasing(const Forcing& fc, double horizon) {
  double prev = -kInf;
  for (int i = 0; i <= 2000; ++i) {
    const SignedLog H = fc.signed_log_H(horizon * i / 2000.0);
    const double v = H.sign > 0 ? H.log_abs : (H.sign == 0 ? -kInf : kNaN);
    if (std::isnan(v)) return false;
    if (v < prev - 1e-12 * std::max(1.0, std::abs(prev))) return false;
    prev = std::max(prev, v);
  }
  return true;
}

}  // namespace

bool RegimeReport::K_full_limit() const {
  if (K_infinite || !(K_hat > 0)) return false;
  return (K_hat - K_liminf) <= 0.1 * K_hat;
}

double F_of_H(const Nonlinearity& n, const Forcing& fc, double t) {
  const SignedLog H = fc.signed_log_H(t);
  return H.sign > 0 ? F_at(n, H.log_abs) : kNaN;
}

double forcing_rate(const Forcing& fc, double t) {
  if (const ScaledForm* sf = fc.scaled()) {
    const double r = sf->reference_rate(t);
    return sf->unit_shape ? r : r + sf->shape_derivative(t) / sf->shape(t);
  }
  const SignedLog h = fc.signed_log_h(t), H = fc.signed_log_H(t);
  if (H.sign == 0) return kNaN;
  if (std::max(std::abs(h.log_abs), std::abs(H.log_abs)) > kLogExact) return kNaN;
  return h.sign * H.sign * std::exp(h.log_abs - H.log_abs);
}

std::vector<double> log_growth_ratio(const Nonlinearity& n,
                                     const std::function<double(double)>& log_X,
                                     const std::function<double(double)>& rate, double K,
                                     std::span<const double> times) {
  const double logK = std::log(K);
  auto phi = [&](double s) { return log_f_at(n, logK + log_X(s)); };
  std::vector<double> out;
  out.reserve(times.size());
  double acc = -kInf, prev = 0.0;
  bool exact = true;
  for (double t : times) {
    if (t < prev) throw std::invalid_argument("times must be increasing");
    const double L = log_X(t);
    if (exact && L <= kLogExact) {
      acc = log_add_exp(acc, numerics::log_integral_exp(phi, prev, t));
      out.push_back(acc - L);
      prev = t;
      continue;
    }
    // ∫ e^phi ≈ e^{phi(t)} / phi'(t), phi' = (1 + eta) X'/X with eta = d log f1 / d log x.
    exact = false;
    const double r = rate ? rate(t) : kNaN;
    if (!(r > 0.0)) {
      out.push_back(kNaN);
      continue;
    }
    const double Lk = logK + L;
    const double d = 1e-3 * std::abs(Lk);
    const double eta = (n.log_f1(Lk + d) - n.log_f1(Lk - d)) / (2 * d);
    out.push_back(logK + n.log_f1(Lk) - std::log(r) - std::log1p(eta));
  }
  return out;
}

Trend tail_trend(const Samples& s, double t_from) {
  std::vector<double> v;
  for (const auto& [t, r] : s) {
    if (t >= t_from && std::isfinite(r)) v.push_back(r);
  }
  if (v.size() < 3) return Trend::unclear;
  bool down = true, up = true;
  for (std::size_t i = 1; i < v.size(); ++i) {
    const double slack = 1e-9 * std::max(std::abs(v[i]), std::abs(v[i - 1]));
    if (v[i] > v[i - 1] + slack) down = false;
    if (v[i] < v[i - 1] - slack) up = false;
  }
  if (down && up) return Trend::stable;
  if (down) return Trend::decreasing;
  if (up) return Trend::increasing;
  return Trend::unclear;
}

RegimeReport diagnostics(const Nonlinearity& n, const Forcing& fc, double horizon,
                         const DiagnosticsOptions& opts) {
  if (!(horizon > 0.0)) throw PreconditionError("horizon must be positive");
  if (!(opts.K_probe > 1.0)) throw PreconditionError("K_probe must exceed 1");
  RegimeReport rep;
  rep.K_probe = opts.K_probe;

  const double t_min = horizon * std::pow(10.0, -opts.decades);
  const auto count = static_cast<std::size_t>(std::lround(opts.decades * opts.points_per_decade)) + 1;
  const std::vector<double> grid = log_spaced(t_min, horizon, count);

  std::vector<double> uniform(401);
  for (int i = 0; i <= 400; ++i) uniform[i] = horizon * i / 400.0;
  rep.assumption_flags.push_back(check_assumption_f(n, log_spaced(1.0, 1e12, 60)));
  rep.assumption_flags.push_back(check_assumption_H(fc, uniform));

  // H~: H itself when nondecreasing, else its running maximum on a fine grid.
  rep.H_monotone = H_nondecreasing(fc, horizon);
  std::function<double(double)> log_Ht;
  if (rep.H_monotone) {
    log_Ht = [fc](double t) {
      const SignedLog H = fc.signed_log_H(t);
      return H.sign > 0 ? H.log_abs : -kInf;
    };
  } else {
    std::vector<double> fine(8001);
    for (int i = 0; i <= 8000; ++i) fine[i] = horizon * i / 8000.0;
    const Envelope maj = increasing_majorant(fc, fine);
    log_Ht = [maj](double t) { return maj.log_value(t); };
  }
  auto log_H_raw = [&fc](double t) {
    const SignedLog H = fc.signed_log_H(t);
    return H.sign > 0 ? H.log_abs : -kInf;
  };

  auto rate_H = [&fc](double t) { return forcing_rate(fc, t); };
  std::function<double(double)> rate_Ht;
  if (rep.H_monotone) rate_Ht = rate_H;
  const auto RK = log_growth_ratio(n, log_Ht, rate_Ht, opts.K_probe, grid);
  const auto R1 = log_growth_ratio(n, log_H_raw, rate_H, 1.0, grid);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double t = grid[i];
    const double LH = log_H_raw(t);
    rep.K_samples.emplace_back(t, F_at(n, LH) / t);
    rep.R_samples.emplace_back(t, std::exp(RK[i]));
    rep.R1_samples.emplace_back(t, std::exp(R1[i]));
    double hp = kNaN;
    if (std::isfinite(LH) && LH <= kLogExact) {
      const SignedLog h = fc.signed_log_h(t);
      hp = h.sign * std::exp(h.log_abs - log_f_at(n, LH));
    } else if (std::isfinite(LH)) {
      // h / f(H) = (H'/H) / f1(H).
      hp = rate_H(t) * std::exp(-n.log_f1(LH));
    }
    rep.hprime_ratio_samples.emplace_back(t, hp);
  }

  const double tail_start = std::sqrt(t_min * horizon);
  std::tie(rep.K_hat, rep.K_liminf) = extremes(rep.K_samples, tail_start, horizon);
  const double last = extremes(rep.K_samples, horizon / 10.0, horizon).first;
  const double prev = extremes(rep.K_samples, horizon / 100.0, horizon / 10.0 * (1 - 1e-12)).first;
  if (prev > 0 && last > 0 && std::isfinite(prev)) {
    const double r = last / prev;
    if (r > 1.5) {
      rep.K_trend = Trend::increasing;
      rep.K_infinite = true;
    } else if (std::abs(r - 1.0) < 0.1) {
      rep.K_trend = Trend::stable;
    } else if (r < 0.9) {
      rep.K_trend = Trend::decreasing;
    }
  }
  if (rep.K_infinite) rep.K_hat = kInf;

  // Regime.
  std::vector<std::string> violated;
  for (const auto& f : rep.assumption_flags) {
    if (f.fails()) violated.push_back(std::string(to_string(f.checked_property)) + ": " + f.detail);
  }
  if (!violated.empty()) {
    rep.regime = Regime::Indeterminate;
    for (const auto& v : violated) rep.explanation += (rep.explanation.empty() ? "" : "; ") + v;
    return rep;
  }
  std::vector<Regime> candidates;
  if (!rep.K_infinite && std::isfinite(rep.K_hat) && rep.K_hat <= kNonlinearityBound) {
    candidates.push_back(Regime::NonlinearityDominated);
  }
  if (!rep.K_infinite && rep.K_hat >= kSharedBound && rep.K_trend == Trend::stable) {
    candidates.push_back(Regime::SharedGrowth);
  }
  const double R_from = (1.0 - opts.tail_fraction) * horizon;
  const double R_max = extremes(rep.R_samples, R_from, horizon).first;
  if (tail_trend(rep.R_samples, R_from) == Trend::decreasing && R_max < opts.R_threshold) {
    candidates.push_back(Regime::ForcingDominated);
  }
  std::ostringstream why;
  why << "K_hat=" << short_number(rep.K_hat) << " trend=" << to_string(rep.K_trend)
      << " R_tail_max=" << short_number(R_max);
  if (candidates.size() == 1) {
    rep.regime = candidates.front();
  } else {
    rep.regime = Regime::Indeterminate;
    why << (candidates.empty() ? "; no regime condition met" : "; overlapping regime evidence");
  }
  rep.explanation = why.str();
  return rep;
}

Prediction predict(const RegimeReport& report) {
  Prediction p;
  switch (report.regime) {
    case Regime::NonlinearityDominated:
      p.law = GrowthLaw::F_over_t_to_one;
      p.K = 1.0;
      p.description = "F(x(t))/t -> 1";
      break;
    case Regime::SharedGrowth:
      p.K = report.K_hat;
      if (report.K_full_limit()) {
        p.law = GrowthLaw::F_over_t_to_K;
        p.description = "F(x(t))/t -> " + short_number(p.K);
      } else {
        p.law = GrowthLaw::limsup_F_over_t_is_K;
        p.description = "limsup F(x(t))/t = " + short_number(p.K);
      }
      break;
    case Regime::ForcingDominated:
      p.law = GrowthLaw::x_over_H_to_one;
      p.K = kInf;
      p.description = "x(t)/H(t) -> 1";
      break;
    case Regime::Indeterminate:
      throw PreconditionError("no prediction for an indeterminate regime: " + report.explanation);
  }
  return p;
}

VerificationReport verify_growth(const Trajectory& traj, const Nonlinearity& n, const Forcing& fc,
                                 const Prediction& prediction, const VerifyOptions& opts) {
  static_cast<void>(n);
  static_cast<void>(fc);
  VerificationReport v;
  v.predicted_limit = prediction.description;
  v.tolerance = opts.rel_tol;
  if (traj.empty() || traj.blew_up || opts.samples < 2) {
    v.inconclusive = true;
    v.detail = "trajectory has no tail to sample";
    return v;
  }
  const double t_end = traj.t_end();
  const double t_from = std::max(traj.t0, (1.0 - opts.tail_fraction) * t_end);
  if (!(t_from > 0.0) || !(t_end > t_from)) {
    v.inconclusive = true;
    v.detail = "insufficient tail samples";
    return v;
  }
  const double target = prediction.law == GrowthLaw::x_over_H_to_one ? 1.0 : prediction.K;
  bool ok = true;
  for (int i = 0; i < opts.samples; ++i) {
    const double t = t_from + (t_end - t_from) * i / (opts.samples - 1);
    double r;
    try {
      r = prediction.law == GrowthLaw::x_over_H_to_one ? traj.x_over_H_at(t) : traj.u_at(t) / t;
    } catch (const Error& e) {
      v.inconclusive = true;
      v.detail = std::string("ratio unavailable: ") + e.what();
      return v;
    }
    if (!std::isfinite(r)) {
      v.inconclusive = true;
      v.detail = "non-finite ratio at t = " + format_double(t);
      return v;
    }
    v.measured_tail.emplace_back(t, r);
    if (std::abs(r - target) > opts.rel_tol * std::abs(target)) ok = false;
  }
  v.pass = ok;
  std::ostringstream os;
  const auto [mx, mn] = extremes(v.measured_tail, t_from, t_end);
  os << "tail ratio in [" << short_number(mn) << ", " << short_number(mx) << "] vs "
     << short_number(target) << " +- " << short_number(100 * opts.rel_tol) << "%";
  v.detail = os.str();
  return v;
}

VerificationReport orv_equivalence_check(const Nonlinearity& n, const Forcing& fc, double horizon,
                                         const DiagnosticsOptions& opts) {
  const std::vector<double> lambdas{2.0, 4.0, 10.0};
  const auto orv = check_o_regular_variation(n, lambdas, log_spaced(1.0, 1e12, 60));
  if (!orv.holds()) {
    throw PreconditionError(n.name() + " is not O-regularly varying (" + orv.detail + ")");
  }
  const RegimeReport rep = diagnostics(n, fc, horizon, opts);
  const double from = (1.0 - opts.tail_fraction) * horizon;
  const Trend a = tail_trend(rep.R_samples, from);
  const Trend b = tail_trend(rep.R1_samples, from);
  VerificationReport v;
  v.predicted_limit = "R with K=" + short_number(opts.K_probe) + " and R with K=1 agree";
  for (const auto& s : rep.R1_samples) {
    if (s.first >= from) v.measured_tail.push_back(s);
  }
  const bool a_decays = a == Trend::decreasing, b_decays = b == Trend::decreasing;
  const bool decided = a != Trend::unclear && b != Trend::unclear;
  v.pass = decided && a_decays == b_decays;
  v.inconclusive = !v.pass;
  v.detail = std::string("R_K tail ") + to_string(a) + ", R_1 tail " + to_string(b);
  return v;
}

void write_regime_csv(std::ostream& os, const RegimeReport& report,
                      const std::optional<VerificationReport>& verification) {
  os << "t,K_of_t,R_of_t,hprime_ratio\n";
  for (std::size_t i = 0; i < report.K_samples.size(); ++i) {
    os << format_double(report.K_samples[i].first) << ',' << format_double(report.K_samples[i].second)
       << ',' << format_double(report.R_samples[i].second) << ','
       << format_double(report.hprime_ratio_samples[i].second) << '\n';
  }
  const bool pass = verification ? verification->pass : report.regime != Regime::Indeterminate;
  os << "# {regime:" << to_string(report.regime) << ", K_hat:" << format_double(report.K_hat)
     << ", pass:" << (pass ? "true" : "false") << "}\n";
}

}  // namespace superlin
