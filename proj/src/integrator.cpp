#include "superlin/integrator.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <sstream>

#include "superlin/errors.hpp"
#include "superlin/numerics.hpp"

namespace superlin {

const char* to_string(Chart c) {
  switch (c) {
    case Chart::direct: return "direct";
    case Chart::F_transformed: return "F_transformed";
    case Chart::F_tail: return "F_tail";
    case Chart::H_relative: return "H_relative";
  }
  return "?";
}

const char* to_string(BlowupMethod m) {
  switch (m) {
    case BlowupMethod::threshold_extrapolation: return "threshold_extrapolation";
    case BlowupMethod::tail_integral: return "tail_integral";
  }
  return "?";
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kEps = std::numeric_limits<double>::epsilon();
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

/// Leave H-relative coordinates once x/G exceeds this.
constexpr double kRelativeExit = 1e12;
/// H counts as relevant to x when log H >= log x - this.
constexpr double kRelevantLogGap = 30.0;
/// Explicit stability limit of the 5(4) pair on the negative real axis, with margin.
constexpr double kStiffLimit = 3.0;

int sgn(double v) { return v > 0 ? 1 : (v < 0 ? -1 : 0); }

}  // namespace

struct ChartContext {
  std::optional<Nonlinearity> n;
  std::optional<SignedDrift> drift;
  Forcing fc;
  bool z_form = false;
  double x0 = 0.0;
  double H0 = 0.0;

  explicit ChartContext(Forcing f) : fc(std::move(f)) {}

  [[nodiscard]] double f(double x) const { return n ? n->eval_f(x) : drift->f(x); }

  /// f(x)/x for x = sign e^L.
  [[nodiscard]] SignedLog f1(int sign, double L) const {
    if (n) {
      if (sign <= 0) throw DomainError(n->name() + ": x must be positive");
      return {1, n->log_f1(L)};
    }
    return drift->ratio(sign, L);
  }

  [[nodiscard]] std::pair<int, double> to_x(double t, Chart c, double state) const {
    switch (c) {
      case Chart::direct: {
        const double x = z_form ? x0 + (fc.eval_H(t) - H0) + state : state;
        return {sgn(x), x == 0.0 ? -kInf : std::log(std::abs(x))};
      }
      case Chart::F_transformed: return {1, n->log_invert_F(state)};
      case Chart::F_tail: return {1, state > 0.0 ? n->log_tail_inverse(state) : kInf};
      case Chart::H_relative: {
        const ScaledForm& sf = *fc.scaled();
        const double v = sf.shape(t) + state;
        return {sgn(v), sf.log_reference(t) + (v == 0.0 ? -kInf : std::log(std::abs(v)))};
      }
    }
    return {0, -kInf};
  }

  [[nodiscard]] double u_of(double t, Chart c, double state, int sign, double L) const {
    if (!n || sign <= 0) return std::numeric_limits<double>::quiet_NaN();
    if (c == Chart::F_transformed) return state;
    if (c == Chart::F_tail) return n->F_infinity() - state;
    static_cast<void>(t);
    return n->F_of_log(L);
  }

  [[nodiscard]] TrajectoryPoint point(double t, Chart c, double state) const {
    TrajectoryPoint p;
    p.t = t;
    p.chart = c;
    p.state = state;
    const auto [s, L] = to_x(t, c, state);
    p.sign = s;
    p.log_abs_x = L;
    p.u = u_of(t, c, state, s, L);
    p.H = fc.signed_log_H(t);
    return p;
  }
};

namespace {

struct System {
  Chart chart;
  std::function<double(double, double)> g;
  std::function<double(double, double)> scale;
};

struct Attempt {
  double y = 0.0;
  double err = 0.0;
  double slope = std::numeric_limits<double>::quiet_NaN();  ///< g at the new point
  bool ok = false;
};

double slope_of(const System& s, double t, double y) {
  try {
    return s.g(t, y);
  } catch (const Error&) {
    return std::numeric_limits<double>::quiet_NaN();
  }
}

class Driver {
 public:
  Driver(std::shared_ptr<ChartContext> ctx, const IntegrateOptions& opts, double t0, double horizon)
      : ctx_(std::move(ctx)), opts_(opts), t0_(t0), horizon_(horizon) {
    h_max_ = opts.h_max > 0 ? opts.h_max : (horizon - t0) / 50.0;
  }

  Trajectory run(Chart chart, double y, double psi, double forced_switch_at) {
    // forced_switch_at: NaN, or the end of a direct lead-in before F coordinates.
    traj_.psi = psi;
    traj_.t0 = t0_;
    traj_.context = ctx_;
    double t = t0_;
    System sys = make_system(chart);
    traj_.points.push_back(ctx_->point(t, chart, y));
    traj_.points.back().slope = slope_of(sys, t, y);
    if (auto next = chart_exit(sys.chart, t, y)) {
      if (!enter(*next, t, y, sys)) return finish();
    }
    double h = std::min(h_max_, 1e-6 * std::max(horizon_ - t0_, 1e-3));
    double err_prev = 1.0;
    long steps = 0;
    while (t < horizon_) {
      if (++steps > opts_.max_steps) {
        throw IntegrationError("step budget exhausted at t = " + format_double(t));
      }
      double t_stop = horizon_;
      if (t < forced_switch_at) t_stop = forced_switch_at;
      h = std::min({h, h_max_, t_stop - t});
      const bool stiff = opts_.allow_implicit && h * stiffness(sys, t, y) > kStiffLimit;
      const Attempt a = stiff ? implicit_step(sys, t, y, h) : explicit_step(sys, t, y, h);
      double errn = kInf;
      if (a.ok) {
        errn = std::abs(a.err) / (opts_.abs_tol + opts_.rel_tol * std::max(sys.scale(t, y), sys.scale(t + h, a.y)));
      }
      if (a.ok && errn <= 1.0) {
        t = (t_stop - t) - h <= 4 * kEps * std::max(1.0, std::abs(t)) ? t_stop : t + h;
        y = a.y;
        ++traj_.stats.accepted;
        if (stiff) ++traj_.stats.implicit_steps;
        traj_.stats.min_step = std::min(traj_.stats.min_step, h);
        traj_.stats.max_step = std::max(traj_.stats.max_step, h);
        traj_.points.push_back(ctx_->point(t, sys.chart, y));
        // Slopes after implicit steps are dominated by the stiff rate; interpolate linearly there.
        traj_.points.back().slope = stiff ? kNaN : a.slope;
        std::optional<Chart> next;
        if (t >= forced_switch_at && sys.chart == Chart::direct) {
          next = Chart::F_transformed;
          forced_switch_at = std::numeric_limits<double>::quiet_NaN();
        } else {
          next = chart_exit(sys.chart, t, y);
        }
        if (next && !enter(*next, t, y, sys)) return finish();
        if (traj_.blew_up) return finish();
        const double e = std::max(errn, 1e-10);
        double fac = stiff ? 0.9 * std::pow(e, -0.5)
                           : 0.9 * std::pow(e, -0.7 / 5.0) * std::pow(err_prev, 0.4 / 5.0);
        h *= std::clamp(fac, 0.2, 5.0);
        err_prev = e;
      } else {
        ++traj_.stats.rejected;
        const double fac = a.ok ? std::max(0.2, 0.9 * std::pow(errn, stiff ? -0.5 : -0.2)) : 0.25;
        h *= fac;
        if (h < 4 * kEps * std::max(1.0, std::abs(t))) {
          const auto [s, L] = ctx_->to_x(t, sys.chart, y);
          if (ctx_->n && ctx_->n->blows_up() && s > 0 && L > std::log(1e10)) {
            traj_.blew_up = true;
            return finish();
          }
          std::ostringstream os;
          os << "step size underflow at t = " << format_double(t) << " in " << to_string(sys.chart)
             << " coordinates (state " << format_double(y) << ", log|x| = " << format_double(L)
             << ")";
          throw IntegrationError(os.str());
        }
      }
    }
    return finish();
  }

 private:
  Trajectory finish() {
    if (traj_.blew_up && ctx_->n) traj_.blowup = estimate_blowup_time(traj_, *ctx_->n);
    return std::move(traj_);
  }

  /// Next chart after an accepted step, if the current one should be left.
  std::optional<Chart> chart_exit(Chart c, double t, double y) {
    switch (c) {
      case Chart::direct: {
        const auto [s, L] = ctx_->to_x(t, c, y);
        if (opts_.direct_only) {
          if (L > kLogDirectBound) traj_.blew_up = true;
          return std::nullopt;
        }
        if (L <= std::log(opts_.switch_threshold)) return std::nullopt;
        if (ctx_->n && ctx_->n->blows_up() && s > 0) return Chart::F_tail;
        if (ctx_->fc.scaled()) {
          const SignedLog H = ctx_->fc.signed_log_H(t);
          if (H.sign != 0 && H.log_abs >= L - kRelevantLogGap) return Chart::H_relative;
        }
        if (ctx_->n && s > 0) return Chart::F_transformed;
        if (!std::isfinite(L) || L > kLogDirectBound) {
          throw OverflowError("x overflows and no transformed coordinates apply");
        }
        return std::nullopt;
      }
      case Chart::H_relative: {
        if (!ctx_->n) return std::nullopt;
        const double v = ctx_->fc.scaled()->shape(t) + y;
        if (v <= kRelativeExit) return std::nullopt;
        return ctx_->n->blows_up() ? Chart::F_tail : Chart::F_transformed;
      }
      case Chart::F_tail: {
        if (y <= 1e-12 * (1.0 + std::abs(t))) traj_.blew_up = true;
        return std::nullopt;
      }
      case Chart::F_transformed: return std::nullopt;
    }
    return std::nullopt;
  }

  /// Switches coordinates at time t; returns false when the trajectory ends there.
  bool enter(Chart next, double t, double& y, System& sys) {
    const auto [s, L] = ctx_->to_x(t, sys.chart, y);
    double state = 0.0;
    switch (next) {
      case Chart::F_tail: state = ctx_->n->tail_of_log(L); break;
      case Chart::F_transformed: state = ctx_->n->F_of_log(L); break;
      case Chart::H_relative: {
        const ScaledForm& sf = *ctx_->fc.scaled();
        state = s * std::exp(L - sf.log_reference(t)) - sf.shape(t);
        break;
      }
      case Chart::direct: state = s * std::exp(L); break;
    }
    y = state;
    sys = make_system(next);
    ++traj_.stats.chart_switches;
    traj_.points.push_back(ctx_->point(t, next, y));
    traj_.points.back().slope = slope_of(sys, t, y);
    if (auto again = chart_exit(next, t, y)) return enter(*again, t, y, sys);
    return !traj_.blew_up;
  }

  System make_system(Chart c) {
    const ChartContext& cx = *ctx_;
    System s;
    s.chart = c;
    switch (c) {
      case Chart::direct:
        if (cx.z_form) {
          s.g = [&cx](double t, double z) { return cx.f(cx.x0 + (cx.fc.eval_H(t) - cx.H0) + z); };
          s.scale = [&cx](double t, double z) {
            return std::abs(cx.x0 + (cx.fc.eval_H(t) - cx.H0) + z);
          };
        } else {
          s.g = [&cx](double t, double x) { return cx.f(x) + cx.fc.eval_h(t); };
          s.scale = [](double, double x) { return std::abs(x); };
        }
        break;
      case Chart::F_transformed:
        s.g = [&cx](double t, double u) {
          const SignedLog h = cx.fc.signed_log_h(t);
          if (h.sign == 0) return 1.0;
          const double L = cx.n->log_invert_F(u);
          return 1.0 + h.sign * std::exp(h.log_abs - cx.n->log_f(L));
        };
        s.scale = [](double, double u) { return std::max(1.0, std::abs(u)); };
        break;
      case Chart::F_tail:
        s.g = [&cx](double t, double w) {
          if (w <= 0.0) return -1.0;
          const SignedLog h = cx.fc.signed_log_h(t);
          if (h.sign == 0) return -1.0;
          const double L = cx.n->log_tail_inverse(w);
          return -(1.0 + h.sign * std::exp(h.log_abs - cx.n->log_f(L)));
        };
        s.scale = [](double, double w) { return std::abs(w); };
        break;
      case Chart::H_relative:
        s.g = [&cx](double t, double rho) {
          const ScaledForm& sf = *cx.fc.scaled();
          const double logG = sf.log_reference(t);
          const double v = sf.shape(t) + rho;
          const int sign = sgn(v);
          const double L = logG + std::log(std::abs(v));
          double drift;
          if (L < kLogDirectBound - 100.0) {
            drift = cx.f(sign * std::exp(L)) * std::exp(-logG);
          } else {
            const SignedLog r = cx.f1(sign, L);
            drift = v * r.sign * std::exp(r.log_abs);
          }
          return drift - sf.reference_rate(t) * rho;
        };
        s.scale = [&cx](double t, double rho) {
          return std::max(1.0, std::abs(cx.fc.scaled()->shape(t) + rho));
        };
        break;
    }
    return s;
  }

  double stiffness(const System& s, double t, double y) {
    try {
      const double d = 1e-7 * std::max({std::abs(y), s.scale(t, y), 1e-300});
      const double a = s.g(t, y), b = s.g(t, y + d);
      const double lam = std::abs(b - a) / d;
      return std::isfinite(lam) ? lam : kInf;
    } catch (const Error&) {
      return 0.0;
    }
  }

  static Attempt explicit_step(const System& s, double t, double y, double h) {
    // Dormand-Prince 5(4).
    static constexpr double a21 = 1.0 / 5;
    static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
    static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
    static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                            a54 = -212.0 / 729;
    static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                            a64 = 49.0 / 176, a65 = -5103.0 / 18656;
    static constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                            b5 = -2187.0 / 6784, b6 = 11.0 / 84;
    static constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                            e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;
    Attempt out;
    try {
      const double k1 = s.g(t, y);
      const double k2 = s.g(t + h / 5, y + h * a21 * k1);
      const double k3 = s.g(t + 3 * h / 10, y + h * (a31 * k1 + a32 * k2));
      const double k4 = s.g(t + 4 * h / 5, y + h * (a41 * k1 + a42 * k2 + a43 * k3));
      const double k5 = s.g(t + 8 * h / 9, y + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4));
      const double k6 =
          s.g(t + h, y + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5));
      const double y1 = y + h * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
      const double k7 = s.g(t + h, y1);
      out.y = y1;
      out.slope = k7;
      out.err = h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);
      out.ok = std::isfinite(y1) && std::isfinite(out.err);
    } catch (const Error&) {
      out.ok = false;
    }
    return out;
  }

  static double implicit_euler(const System& s, double t, double y, double h) {
    auto G = [&](double Y) { return Y - y - h * s.g(t + h, Y); };
    const double step = 1e-6 * std::max({1.0, std::abs(y), s.scale(t, y)});
    return numerics::solve_increasing(G, y, step);
  }

  /// Extrapolated implicit Euler: 2 IE(h/2)^2 - IE(h), error estimate |IE(h/2)^2 - IE(h)|.
  static Attempt implicit_step(const System& s, double t, double y, double h) {
    Attempt out;
    try {
      const double full = implicit_euler(s, t, y, h);
      const double half = implicit_euler(s, t + h / 2, implicit_euler(s, t, y, h / 2), h / 2);
      out.y = 2.0 * half - full;
      out.err = half - full;
      out.ok = std::isfinite(out.y) && std::isfinite(out.err);
    } catch (const Error&) {
      out.ok = false;
    }
    return out;
  }

  std::shared_ptr<ChartContext> ctx_;
  IntegrateOptions opts_;
  double t0_;
  double horizon_;
  double h_max_;
  Trajectory traj_;
};

void check_common(double psi, double t0, double horizon) {
  if (!(horizon > t0)) throw PreconditionError("horizon must exceed the start time");
  if (!std::isfinite(psi)) throw PreconditionError("initial value must be finite");
}

std::shared_ptr<ChartContext> positive_context(const Nonlinearity& n, const Forcing& fc,
                                               double t0, double x0) {
  auto ctx = std::make_shared<ChartContext>(fc);
  ctx->n = n;
  ctx->z_form = fc.has_closed_form_H();
  ctx->x0 = x0;
  ctx->H0 = fc.eval_H(t0);
  return ctx;
}

}  // namespace

Trajectory integrate_from(const Nonlinearity& n, const Forcing& fc, double t0, double x0,
                          double horizon, const IntegrateOptions& opts) {
  check_common(x0, t0, horizon);
  if (x0 < n.domain_floor()) throw DomainError("initial value below the domain floor");
  auto ctx = positive_context(n, fc, t0, x0);
  Driver d(ctx, opts, t0, horizon);
  if (opts.start_transformed) {
    if (n.blows_up()) {
      throw PreconditionError("transformed coordinates need F(inf) = inf; " + n.name() +
                              " blows up");
    }
    const SignedLog h0 = fc.signed_log_h(t0);
    if (std::isfinite(h0.log_abs) || h0.sign == 0 || !ctx->z_form) {
      return d.run(Chart::F_transformed, n.compute_F(x0), x0, kNaN);
    }
    // h singular at t0: short direct lead-in with x = x0 + H(t) - H(t0) + z.
    const double lead = std::min(1e-3, 0.5 * (horizon - t0));
    return d.run(Chart::direct, 0.0, x0, t0 + lead);
  }
  return d.run(Chart::direct, ctx->z_form ? 0.0 : x0, x0, kNaN);
}

Trajectory integrate(const Nonlinearity& n, const Forcing& fc, double psi, double horizon,
                     const IntegrateOptions& opts) {
  if (!(psi > 0.0)) throw PreconditionError("psi must be positive");
  return integrate_from(n, fc, 0.0, psi, horizon, opts);
}

Trajectory integrate_transformed(const Nonlinearity& n, const Forcing& fc, double psi,
                                 double horizon, IntegrateOptions opts) {
  opts.start_transformed = true;
  return integrate(n, fc, psi, horizon, opts);
}

Trajectory integrate_signed(const SignedDrift& f, const Forcing& fc, double psi, double horizon,
                            const IntegrateOptions& opts) {
  check_common(psi, 0.0, horizon);
  auto ctx = std::make_shared<ChartContext>(fc);
  ctx->drift = f;
  ctx->z_form = fc.has_closed_form_H();
  ctx->x0 = psi;
  ctx->H0 = 0.0;
  Driver d(ctx, opts, 0.0, horizon);
  return d.run(Chart::direct, ctx->z_form ? 0.0 : psi, psi, kNaN);
}

std::string Trajectory::mode() const {
  for (const auto& p : points) {
    if (p.chart != Chart::direct) return "F_transformed";
  }
  return "direct";
}

std::vector<double> Trajectory::times() const {
  std::vector<double> t;
  t.reserve(points.size());
  for (const auto& p : points) t.push_back(p.t);
  return t;
}

namespace {

/// Index i with points[i].t <= t <= points[i+1].t in the same chart.
std::size_t locate(const std::vector<TrajectoryPoint>& pts, double t) {
  if (pts.empty()) throw PreconditionError("empty trajectory");
  if (t < pts.front().t || t > pts.back().t) {
    throw DomainError("t = " + format_double(t) + " outside the trajectory range");
  }
  auto it = std::upper_bound(pts.begin(), pts.end(), t,
                             [](double v, const TrajectoryPoint& p) { return v < p.t; });
  std::size_t i = static_cast<std::size_t>(std::distance(pts.begin(), it));
  if (i == 0) return 0;
  if (i >= pts.size()) {
    // t equals the final time; step back over a trailing zero-length chart switch.
    i = pts.size() - 1;
    while (i > 0 && pts[i - 1].t == pts[i].t) --i;
    return i > 0 ? i - 1 : 0;
  }
  return i - 1;
}

/// Chart state at t in [a.t, b.t]: cubic Hermite when both slopes are known.
double interpolate_state(const TrajectoryPoint& a, const TrajectoryPoint& b, double t) {
  const double dt = b.t - a.t;
  const double s = (t - a.t) / dt;
  if (!std::isfinite(a.slope) || !std::isfinite(b.slope)) return a.state + s * (b.state - a.state);
  const double s2 = s * s, s3 = s2 * s;
  return (2 * s3 - 3 * s2 + 1) * a.state + (s3 - 2 * s2 + s) * dt * a.slope +
         (-2 * s3 + 3 * s2) * b.state + (s3 - s2) * dt * b.slope;
}

}  // namespace

std::pair<int, double> Trajectory::signed_log_x_at(double t) const {
  const std::size_t i = locate(points, t);
  const auto& a = points[i];
  if (i + 1 >= points.size() || a.t == t) return {a.sign, a.log_abs_x};
  const auto& b = points[i + 1];
  if (b.t == t) return {b.sign, b.log_abs_x};
  return context->to_x(t, a.chart, interpolate_state(a, b, t));
}

double Trajectory::log_x_at(double t) const { return signed_log_x_at(t).second; }

double Trajectory::u_at(double t) const {
  if (!context->n) throw PreconditionError("u = F(x) needs a positive nonlinearity");
  const std::size_t i = locate(points, t);
  const auto& a = points[i];
  if (i + 1 < points.size()) {
    const auto& b = points[i + 1];
    if (a.chart == Chart::F_transformed && b.chart == a.chart && b.t > a.t) {
      return interpolate_state(a, b, t);
    }
  }
  const auto [s, L] = signed_log_x_at(t);
  if (s <= 0) throw DomainError("F(x) needs x > 0");
  return context->n->F_of_log(L);
}

double Trajectory::x_over_H_at(double t) const {
  const std::size_t i = locate(points, t);
  const auto& a = points[i];
  const ScaledForm* sf = context->fc.scaled();
  if (a.chart == Chart::H_relative && sf) {
    double rho = a.state;
    if (i + 1 < points.size() && points[i + 1].chart == a.chart && points[i + 1].t > a.t) {
      rho = interpolate_state(a, points[i + 1], t);
    }
    const double s = sf->shape(t);
    return (s + rho) / s;
  }
  const auto [sx, Lx] = signed_log_x_at(t);
  const SignedLog H = context->fc.signed_log_H(t);
  if (H.sign == 0) return std::numeric_limits<double>::infinity();
  return sx * H.sign * std::exp(Lx - H.log_abs);
}

namespace {

/// ∫_{x}^∞ du/f at every point with finite positive x.
std::vector<std::pair<double, double>> tail_series(const Trajectory& traj, const Nonlinearity& n) {
  std::vector<std::pair<double, double>> out;
  for (const auto& p : traj.points) {
    if (p.sign <= 0) continue;
    double w = p.chart == Chart::F_tail ? p.state : n.tail_of_log(p.log_abs_x);
    if (!out.empty() && out.back().first == p.t) {
      out.back().second = w;
      continue;
    }
    out.emplace_back(p.t, w);
  }
  return out;
}

}  // namespace

BlowupEstimate estimate_blowup_time(const Trajectory& traj, const Nonlinearity& n) {
  if (!n.blows_up()) {
    throw PreconditionError(n.name() + " has F(inf) = inf: solutions exist globally");
  }
  if (!traj.blew_up) throw PreconditionError("trajectory did not terminate by blow-up");
  const auto w = tail_series(traj, n);
  if (w.size() < 2) throw PreconditionError("too few samples to estimate the blow-up time");

  BlowupEstimate est;
  est.T_tail = w.back().first + w.back().second;
  est.T_hat = est.T_tail;
  est.method = BlowupMethod::tail_integral;

  // Route (b): crossings of x = 10^k, located by linear interpolation in w, then a secant
  // through the last two well-resolved crossings.
  const double w_last = w.back().second;
  std::vector<std::pair<double, double>> crossings;  // (t_k, w_k)
  const double log10 = std::log(10.0);
  const int k_lo = static_cast<int>(std::ceil(traj.points.front().log_abs_x / log10));
  const int k_hi = static_cast<int>(std::floor(traj.back().log_abs_x / log10));
  for (int k = std::max(k_lo, 0); k <= k_hi; ++k) {
    const double wk = n.tail_of_log(k * log10);
    if (!(wk >= 100.0 * w_last)) continue;
    for (std::size_t i = 0; i + 1 < w.size(); ++i) {
      const auto& [ta, wa] = w[i];
      const auto& [tb, wb] = w[i + 1];
      if (wa >= wk && wb <= wk && wa > wb) {
        crossings.emplace_back(ta + (wa - wk) / (wa - wb) * (tb - ta), wk);
        break;
      }
    }
  }
  std::pair<double, double> a, b;
  if (crossings.size() >= 2) {
    a = crossings[crossings.size() - 2];
    b = crossings.back();
  } else {
    a = w[w.size() - 2];
    b = w.back();
  }
  est.T_threshold = b.first + b.second * (b.first - a.first) / (a.second - b.second);

  for (int k = 1; k <= 8; ++k) {
    const double gap = std::pow(10.0, -k);
    const double t = est.T_hat - gap;
    if (t < w.front().first || t > w.back().first) continue;
    est.tail_ratio_samples.emplace_back(t, tail_ratio_at(traj, n, est.T_hat, gap));
  }
  return est;
}

double tail_ratio_at(const Trajectory& traj, const Nonlinearity& n, double T_hat, double gap) {
  const auto w = tail_series(traj, n);
  const double t = T_hat - gap;
  for (std::size_t i = 0; i + 1 < w.size(); ++i) {
    if (w[i].first <= t && t <= w[i + 1].first && w[i + 1].first > w[i].first) {
      const double v =
          w[i].second + (t - w[i].first) / (w[i + 1].first - w[i].first) * (w[i + 1].second - w[i].second);
      return v / gap;
    }
  }
  throw DomainError("T_hat - gap lies outside the trajectory");
}

void write_trajectory_csv(std::ostream& os, const Trajectory& traj) {
  const auto& n = traj.context->n;
  os << "t,x_or_u,mode,H\n";
  for (const auto& p : traj.points) {
    os << format_double(p.t) << ',';
    if (p.chart == Chart::direct) {
      os << format_double(p.sign * std::exp(p.log_abs_x)) << ",direct," << format_double(p.H.value());
    } else if (n) {
      std::string FH = "nan";
      if (p.H.sign > 0) FH = format_double(n->F_of_log(p.H.log_abs));
      os << format_double(p.u) << ",F_transformed," << FH;
    } else {
      // Signed drift: x/G - s in the x_or_u column, s = H/G in the H column.
      os << format_double(p.state) << ",H_relative,"
         << format_double(traj.context->fc.scaled()->shape(p.t));
    }
    os << '\n';
  }
  if (traj.blowup) {
    os << "# T_hat=" << format_double(traj.blowup->T_hat)
       << " method=" << to_string(traj.blowup->method) << '\n';
  }
}

TimeRescaling rescale_time(const std::function<double(double)>& a, const Forcing& fc,
                           double horizon) {
  for (int i = 0; i <= 256; ++i) {
    const double t = horizon * i / 256.0;
    const double v = a(t);
    if (!(v > 0.0) || !std::isfinite(v)) {
      throw DomainError("time-rescaling rate a(t) must be positive; a(" + format_double(t) +
                        ") = " + format_double(v));
    }
  }
  auto A = [a](double t) {
    return numerics::integrate(a, 0.0, t, {1e-14, 1e-13}).value;
  };
  auto A_inv = [A, a](double s) {
    if (s == 0.0) return 0.0;
    auto g = [&](double t) { return A(t) - s; };
    return numerics::solve_increasing(g, s / a(0.0), std::max(1e-3, s / a(0.0)));
  };
  ForcingDefinition d;
  d.name = fc.name() + " rescaled";
  d.h = [fc, a, A_inv](double s) {
    const double t = A_inv(s);
    return fc.eval_h(t) / a(t);
  };
  d.H = [fc, A_inv](double s) { return fc.eval_H(A_inv(s)); };
  return {A, A_inv, Forcing(std::move(d))};
}

}  // namespace superlin
