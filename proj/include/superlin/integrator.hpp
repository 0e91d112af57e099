#pragma once

#include <functional>
#include <iosfwd>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "superlin/forcing.hpp"
#include "superlin/nonlinearity.hpp"

namespace superlin {

/// Coordinates in which the state is integrated.
///   direct:        x itself (x = x0 + H(t) - H(t0) + z with state z when H is known)
///   F_transformed: u = F(x)
///   F_tail:        w = ∫_x^∞ du/f(u), for blow-up nonlinearities
///   H_relative:    rho with x = G(t) (s(t) + rho), where H = G s is the forcing's scaled form
enum class Chart { direct, F_transformed, F_tail, H_relative };

[[nodiscard]] const char* to_string(Chart c);

struct TrajectoryPoint {
  double t = 0.0;
  Chart chart = Chart::direct;
  double state = 0.0;
  int sign = 1;  ///< sign of x
  double log_abs_x = 0.0;
  double u = std::numeric_limits<double>::quiet_NaN();  ///< F(x) when F applies
  double slope = std::numeric_limits<double>::quiet_NaN();  ///< d state / dt
  SignedLog H;
};

struct StepStats {
  long accepted = 0;
  long rejected = 0;
  long implicit_steps = 0;
  long chart_switches = 0;
  double min_step = std::numeric_limits<double>::infinity();
  double max_step = 0.0;
};

enum class BlowupMethod { threshold_extrapolation, tail_integral };

[[nodiscard]] const char* to_string(BlowupMethod m);

struct BlowupEstimate {
  double T_hat = 0.0;  ///< reported estimate (route a)
  BlowupMethod method = BlowupMethod::tail_integral;
  double T_tail = 0.0;       ///< route (a): t_last + ∫_{x(t_last)}^∞ du/f
  double T_threshold = 0.0;  ///< route (b): secant through threshold crossings
  /// (t, (T_hat - t)^{-1} ∫_{x(t)}^∞ du/f) at T_hat - t = 10^-1, ..., 10^-8 when covered.
  std::vector<std::pair<double, double>> tail_ratio_samples;
};

/// Right-hand side f that may change sign; |x| beyond 1e300 is handled through
/// log(|f(x)|/|x|).
struct SignedDrift {
  std::string name;
  std::function<double(double)> f;
  /// (sign of x, log|x|) -> sign and log of |f(x)/x|, i.e. f(x)/x as a SignedLog.
  std::function<SignedLog(int, double)> ratio;
};

struct ChartContext;

class Trajectory {
 public:
  std::vector<TrajectoryPoint> points;
  double psi = 0.0;
  double t0 = 0.0;
  StepStats stats;
  bool blew_up = false;
  std::optional<BlowupEstimate> blowup;
  std::shared_ptr<const ChartContext> context;

  [[nodiscard]] bool empty() const noexcept { return points.empty(); }
  [[nodiscard]] const TrajectoryPoint& back() const { return points.back(); }
  [[nodiscard]] double t_end() const { return points.back().t; }
  /// "direct" when every point is direct, else "F_transformed".
  [[nodiscard]] std::string mode() const;

  /// State interpolated (cubic Hermite) within the chart of the enclosing step, mapped to x.
  [[nodiscard]] std::pair<int, double> signed_log_x_at(double t) const;
  [[nodiscard]] double log_x_at(double t) const;
  /// u = F(x(t)); needs a positive nonlinearity.
  [[nodiscard]] double u_at(double t) const;
  /// x(t)/H(t) computed without forming x or H when both are huge.
  [[nodiscard]] double x_over_H_at(double t) const;
  [[nodiscard]] std::vector<double> times() const;
};

struct IntegrateOptions {
  double rel_tol = 1e-10;
  double abs_tol = 1e-12;
  double h_max = 0.0;  ///< 0: (horizon - t0) / 50
  long max_steps = 2'000'000;
  double switch_threshold = 1e15;  ///< leave direct coordinates beyond |x| = this
  bool direct_only = false;        ///< never switch; blow-up declared at |x| > 1e300
  bool allow_implicit = true;
  /// Start in F coordinates (after a short direct lead-in when h(t0) is singular).
  bool start_transformed = false;
};

/// x' = f(x) + h(t), x(0) = psi, on [0, horizon] or until blow-up.
[[nodiscard]] Trajectory integrate(const Nonlinearity& n, const Forcing& fc, double psi,
                                   double horizon, const IntegrateOptions& opts = {});

/// Same from x(t0) = x0.
[[nodiscard]] Trajectory integrate_from(const Nonlinearity& n, const Forcing& fc, double t0,
                                        double x0, double horizon,
                                        const IntegrateOptions& opts = {});

/// Integrates u = F(x): u' = 1 + h(t) / f(F^{-1}(u)). Requires F(inf) = inf.
[[nodiscard]] Trajectory integrate_transformed(const Nonlinearity& n, const Forcing& fc,
                                               double psi, double horizon,
                                               IntegrateOptions opts = {});

/// Direct and H-relative coordinates only.
[[nodiscard]] Trajectory integrate_signed(const SignedDrift& f, const Forcing& fc, double psi,
                                          double horizon, const IntegrateOptions& opts = {});

/// Blow-up time by the tail route and by threshold-crossing extrapolation.
[[nodiscard]] BlowupEstimate estimate_blowup_time(const Trajectory& traj, const Nonlinearity& n);

/// (T_hat - t)^{-1} ∫_{x(t)}^∞ du/f at t = T_hat - gap, x interpolated in the trajectory.
[[nodiscard]] double tail_ratio_at(const Trajectory& traj, const Nonlinearity& n, double T_hat,
                                   double gap);

/// CSV `t,x_or_u,mode,H`; in F modes the H column holds F(H). Footer with the blow-up estimate.
void write_trajectory_csv(std::ostream& os, const Trajectory& traj);

struct TimeRescaling {
  std::function<double(double)> A;
  std::function<double(double)> A_inverse;
  Forcing transformed;  ///< H_resc(t) = H(A^{-1}(t))
};

/// For z' = a(t) f(z) + h(t): x(t) = z(A^{-1}(t)) solves x' = f(x) + h_resc(t).
[[nodiscard]] TimeRescaling rescale_time(const std::function<double(double)>& a,
                                         const Forcing& fc, double horizon);

}  // namespace superlin
