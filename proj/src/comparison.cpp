#include "superlin/comparison.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <sstream>

#include "superlin/errors.hpp"

namespace superlin {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kInf = std::numeric_limits<double>::infinity();
/// Minimum number of consecutive grid samples for T_switch and T1.
constexpr int kHoldSamples = 10;

void check_eps(double K, double eps) {
  if (!(eps > 0.0 && eps < 1.0)) {
    throw PreconditionError("eps must lie in (0, 1), got " + format_double(eps));
  }
  if (!(K >= 0.0) || !std::isfinite(K)) {
    throw PreconditionError("K must be finite and nonnegative, got " + format_double(K));
  }
}

/// K(1+eps), or eps when K = 0.
double growth_constant(double K, double eps) { return K > 0.0 ? K * (1.0 + eps) : eps; }

double grid_step(double horizon) { return std::max(0.01, horizon / 20000.0); }

std::vector<double> grid_from(double from, double horizon) {
  const double dt = grid_step(horizon);
  std::vector<double> g;
  for (long k = static_cast<long>(std::ceil(from / dt - 1e-9)); k * dt <= horizon + 1e-12; ++k) {
    if (k * dt > 0.0) g.push_back(k * dt);
  }
  return g;
}

/// First grid time after which `holds` is true at every remaining sample.
template <class Pred>
std::optional<double> first_persistent(const std::vector<double>& grid, Pred holds) {
  std::size_t start = 0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (!holds(grid[i])) start = i + 1;
  }
  if (grid.size() < start + kHoldSamples) return std::nullopt;
  return grid[start];
}

bool H_dominated(const Nonlinearity& n, const Forcing& fc, double c, double t) {
  const double FH = F_of_H(n, fc, t);
  return std::isnan(FH) || FH < c * t;
}

double log_x_or_nan(const Trajectory& tr, double t) {
  if (tr.empty() || t < tr.points.front().t || t > tr.t_end()) return kNaN;
  const auto [s, L] = tr.signed_log_x_at(t);
  return s > 0 ? L : kNaN;
}

double key_or_nan(const Nonlinearity& n, const Trajectory& tr, double t) {
  if (tr.empty() || t < tr.points.front().t || t > tr.t_end()) return kNaN;
  return n.blows_up() ? log_x_or_nan(tr, t) : tr.u_at(t);
}

}  // namespace

Trajectory lower_solution(const Nonlinearity& n, double psi, double horizon,
                          double start_factor) {
  if (!(psi > 0.0)) throw PreconditionError("lower solution needs psi > 0");
  const Forcing zero = forcing_catalog::zero();
  const double x0 = start_factor * psi;
  if (n.blows_up()) return integrate(n, zero, x0, horizon);
  return integrate_transformed(n, zero, x0, horizon);
}

Forcing upper_forcing(const Nonlinearity& n, double K, double eps) {
  check_eps(K, eps);
  const double c = growth_constant(K, eps);
  // G = F^{-1}(c t), H_+ = G - 1, h_+ = c f(G).
  auto log_G = [n, c](double t) { return n.log_invert_F(c * t); };
  auto slh = [n, c, log_G](double t) -> SignedLog {
    return {1, std::log(c) + n.log_f(log_G(t))};
  };
  auto slH = [log_G](double t) -> SignedLog {
    if (t <= 0.0) return {};
    const double L = log_G(t);
    if (!(L > 0.0)) return {};
    return {1, L + std::log(-std::expm1(-L))};
  };
  // H_+'/H_+ = c f1(G) G/(G-1); the log difference of h and H would lose every digit.
  auto rate = [n, c, log_G](double t) {
    const double L = log_G(t);
    return c * std::exp(n.log_f1(L)) / -std::expm1(-L);
  };
  ForcingDefinition d;
  d.name = "upper(" + format_double(c) + ")";
  d.h = [slh](double t) { return slh(t).value(); };
  d.H = [slH](double t) { return slH(t).value(); };
  d.signed_log_h = slh;
  d.signed_log_H = slH;
  ScaledForm sf;
  sf.log_reference = [slH](double t) { return slH(t).log_abs; };
  sf.reference_rate = rate;
  sf.shape = [](double) { return 1.0; };
  sf.shape_derivative = [](double) { return 0.0; };
  sf.unit_shape = true;
  d.scaled = sf;
  return Forcing(std::move(d));
}

double select_T_switch(const Nonlinearity& n, const Forcing& fc, double K, double eps,
                       double horizon) {
  check_eps(K, eps);
  const double c = growth_constant(K, eps);
  const auto T = first_persistent(grid_from(0.0, horizon),
                                  [&](double t) { return H_dominated(n, fc, c, t); });
  if (!T) {
    throw PreconditionError("F(H(t)) < " + format_double(c) +
                            " t does not persist up to the horizon " + format_double(horizon));
  }
  return *T;
}

Trajectory upper_solution(const Nonlinearity& n, const Forcing& fc, double K, double eps,
                          double T_switch, double x_star, double horizon,
                          const IntegrateOptions& opts) {
  check_eps(K, eps);
  if (!(x_star > 0.0)) throw PreconditionError("x_star must be positive");
  const double c = growth_constant(K, eps);
  if (!(c * horizon < n.F_infinity())) {
    throw PreconditionError("c * horizon = " + format_double(c * horizon) +
                            " lies outside the range of F^{-1}");
  }
  std::vector<double> grid{T_switch};
  for (double t : grid_from(T_switch, horizon)) {
    if (t > T_switch) grid.push_back(t);
  }
  if (grid.back() < horizon) grid.push_back(horizon);
  for (double t : grid) {
    if (t > 0.0 && !H_dominated(n, fc, c, t)) {
      throw PreconditionError("H(t) >= F^{-1}(" + format_double(c) + " t) at t=" + format_double(t));
    }
  }
  return integrate_from(n, upper_forcing(n, K, eps), T_switch, x_star, horizon, opts);
}

double select_T1(const Nonlinearity& n, double K, double eps, double T_switch, double horizon) {
  check_eps(K, eps);
  if (!(K > 0.0)) throw PreconditionError("T1 needs K > 0");
  const double c1 = K * (1.0 + eps), c2 = K * (1.0 + 2.0 * eps);
  const double bound = std::log(2.0 * eps / c1);
  std::vector<double> grid{T_switch};
  for (double t : grid_from(T_switch, horizon)) {
    if (t > T_switch) grid.push_back(t);
  }
  const auto T1 = first_persistent(grid, [&](double t) {
    return n.log_f(n.log_invert_F(c1 * t)) - n.log_f(n.log_invert_F(c2 * t)) < bound;
  });
  if (!T1) throw PreconditionError("no T1 before the horizon " + format_double(horizon));
  return *T1;
}

double F_star_rule(double F_x_bar, double K, double eps, double T1) {
  return 1.0 + std::max(F_x_bar, K * T1 * (1.0 + 2.0 * eps));
}

Magnitude explicit_upper(const Nonlinearity& n, double K, double eps, double T1, double F_star,
                         double t) {
  return n.invert_F(K * (1.0 + 2.0 * eps) * (t - T1) + F_star);
}

ComparisonBundle build_bundle(const Nonlinearity& n, const Forcing& fc, double psi,
                              double horizon, double K, double eps, const BundleOptions& opts) {
  ComparisonBundle b;
  b.base = integrate(n, fc, psi, horizon, opts.integrate);
  b.lower = lower_solution(n, psi, horizon, opts.lower_start_factor);
  b.scale = n.blows_up() ? "log" : "F";
  b.params.K = K;
  b.params.eps = eps;
  b.params.T_switch = kNaN;
  b.params.T1 = kNaN;
  b.params.F_star = kNaN;
  b.params.x_star = kNaN;

  double t_common = std::min(b.base.t_end(), b.lower.t_end());
  if (!std::isnan(K)) {
    auto& p = b.params;
    p.T_switch = select_T_switch(n, fc, K, eps, horizon);
    double log_sup = -kInf;
    for (const auto& pt : b.base.points) {
      if (pt.t <= p.T_switch && pt.sign > 0) log_sup = std::max(log_sup, pt.log_abs_x);
    }
    log_sup = std::max(log_sup, log_x_or_nan(b.base, p.T_switch));
    if (!(log_sup < kLogDirectBound)) {
      throw PreconditionError("sup x on [0, T_switch] exceeds the double range");
    }
    p.x_star = 1.0 + std::exp(log_sup);
    b.upper_ode = upper_solution(n, fc, K, eps, p.T_switch, p.x_star, horizon, opts.integrate);
    t_common = std::min(t_common, b.upper_ode->t_end());
    if (K > 1.0) {
      p.T1 = select_T1(n, K, eps, p.T_switch, t_common);
      p.x_bar = Magnitude::from_log(log_x_or_nan(*b.upper_ode, p.T1));
      p.F_star = F_star_rule(n.F_of(p.x_bar), K, eps, p.T1);
      b.has_explicit_upper = true;
    }
  }

  std::vector<double> times;
  auto add_times = [&](const Trajectory& tr) {
    for (const auto& pt : tr.points) {
      if (pt.t <= t_common) times.push_back(pt.t);
    }
  };
  add_times(b.base);
  add_times(b.lower);
  if (b.upper_ode) add_times(*b.upper_ode);
  std::sort(times.begin(), times.end());
  times.erase(std::unique(times.begin(), times.end()), times.end());

  const auto& p = b.params;
  for (double t : times) {
    BundleSample s;
    s.t = t;
    s.log_x[kBase] = log_x_or_nan(b.base, t);
    s.key[kBase] = key_or_nan(n, b.base, t);
    s.log_x[kLower] = log_x_or_nan(b.lower, t);
    s.key[kLower] = key_or_nan(n, b.lower, t);
    s.log_x[kUpper] = kNaN;
    s.key[kUpper] = kNaN;
    if (b.upper_ode && t >= p.T_switch) {
      s.log_x[kUpper] = log_x_or_nan(*b.upper_ode, t);
      s.key[kUpper] = key_or_nan(n, *b.upper_ode, t);
    }
    s.log_x[kUpperExplicit] = kNaN;
    s.key[kUpperExplicit] = kNaN;
    if (b.has_explicit_upper && t >= p.T1) {
      const double arg = K * (1.0 + 2.0 * eps) * (t - p.T1) + p.F_star;
      s.log_x[kUpperExplicit] = explicit_upper(n, K, eps, p.T1, p.F_star, t).log();
      s.key[kUpperExplicit] = n.blows_up() ? s.log_x[kUpperExplicit] : arg;
    }
    b.samples.push_back(s);
  }
  return b;
}

VerificationReport check_ordering(const ComparisonBundle& bundle) {
  VerificationReport r;
  r.predicted_limit = bundle.upper_ode ? (bundle.has_explicit_upper ? "x_- < x < x_+ < x_u"
                                                                    : "x_- < x < x_+")
                                       : "x_- < x";
  r.tolerance = 0.0;
  const auto& p = bundle.params;
  auto fail = [&r](double t, const char* what) {
    r.pass = false;
    r.detail = std::string("first violation at t=") + format_double(t) + ": " + what;
    return r;
  };
  long checked = 0;
  for (const auto& s : bundle.samples) {
    const auto& k = s.key;
    if (s.t > 0.0 && !std::isnan(k[kLower]) && !std::isnan(k[kBase])) {
      if (!(k[kLower] < k[kBase])) return fail(s.t, "x_- >= x");
      ++checked;
    }
    if (bundle.upper_ode && s.t >= p.T_switch && !std::isnan(k[kUpper])) {
      if (!(k[kBase] < k[kUpper])) return fail(s.t, "x >= x_+");
      ++checked;
    }
    if (bundle.has_explicit_upper && s.t >= p.T1 && !std::isnan(k[kUpperExplicit])) {
      if (!(k[kUpper] < k[kUpperExplicit])) return fail(s.t, "x_+ >= x_u");
      ++checked;
    }
    r.measured_tail.emplace_back(s.t, k[kBase] - k[kLower]);
  }
  if (checked == 0) {
    r.inconclusive = true;
    r.detail = "no shared samples";
    return r;
  }
  r.pass = true;
  r.detail = "ordering holds at " + std::to_string(bundle.samples.size()) + " shared samples";
  return r;
}

void write_bundle_csv(std::ostream& os, const ComparisonBundle& bundle,
                      const VerificationReport& verdict) {
  os << "t,x,x_lower,x_plus,x_u,scale\n";
  for (const auto& s : bundle.samples) {
    // Plain x while every member fits a double, else the ordering key.
    bool direct = true;
    for (double L : s.log_x) direct = direct && (std::isnan(L) || L < kLogDirectBound);
    os << format_double(s.t);
    for (int m = 0; m < kMemberCount; ++m) {
      const double v = direct ? (std::isnan(s.log_x[m]) ? kNaN : std::exp(s.log_x[m])) : s.key[m];
      os << ',' << (std::isnan(v) ? std::string() : format_double(v));
    }
    os << ',' << (direct ? std::string("x") : bundle.scale) << '\n';
  }
  const auto& p = bundle.params;
  os << "# ordering=" << (verdict.pass ? "pass" : "fail") << ", K=" << format_double(p.K)
     << ", eps=" << format_double(p.eps) << ", T_switch=" << format_double(p.T_switch)
     << ", T1=" << format_double(p.T1) << ", F_star=" << format_double(p.F_star)
     << ", detail=" << verdict.detail << '\n';
}

}  // namespace superlin
