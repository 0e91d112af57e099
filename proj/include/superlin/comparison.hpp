#pragma once

#include <array>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "superlin/classifier.hpp"
#include "superlin/forcing.hpp"
#include "superlin/integrator.hpp"
#include "superlin/magnitude.hpp"
#include "superlin/nonlinearity.hpp"

namespace superlin {

struct ComparisonParameters {
  double K = 0.0;
  double eps = 0.1;
  double T_switch = 0.0;
  double T1 = 0.0;
  double F_star = 0.0;
  double x_star = 0.0;
  Magnitude x_bar;  ///< x_+(T1)
};

/// Bundle members in column order.
enum BundleMember { kBase, kLower, kUpper, kUpperExplicit, kMemberCount };

/// One sample of the bundle on the shared grid. `key` holds F(x) for globally existing f
/// and log x otherwise; both arrays hold NaN where a member is undefined.
struct BundleSample {
  double t = 0.0;
  std::array<double, kMemberCount> key{};
  std::array<double, kMemberCount> log_x{};
};

struct ComparisonBundle {
  Trajectory base;
  Trajectory lower;
  std::optional<Trajectory> upper_ode;
  ComparisonParameters params;
  bool has_explicit_upper = false;
  /// "F" when samples hold F(x), "log" when they hold log x.
  std::string scale;
  std::vector<BundleSample> samples;
};

/// x_-' = f(x_-), x_-(0) = start_factor psi (1/2 by default).
[[nodiscard]] Trajectory lower_solution(const Nonlinearity& n, double psi, double horizon,
                                        double start_factor = 0.5);

/// The forcing h_+(t) = c (f∘F^{-1})(c t) with H_+(t) = F^{-1}(c t) - 1, c = K(1+eps)
/// (c = eps when K = 0).
[[nodiscard]] Forcing upper_forcing(const Nonlinearity& n, double K, double eps);

/// Smallest time on a 0.01 grid from which F(H(t)) < c t holds at every later grid point
/// up to the horizon (at least 10 samples). Throws PreconditionError when there is none.
[[nodiscard]] double select_T_switch(const Nonlinearity& n, const Forcing& fc, double K,
                                     double eps, double horizon);

/// x_+' = c (f∘F^{-1})(c t) + f(x_+) from x_+(T_switch) = x_star. Checks F(H) < c t on
/// [T_switch, horizon] and refuses with the violating t.
[[nodiscard]] Trajectory upper_solution(const Nonlinearity& n, const Forcing& fc, double K,
                                        double eps, double T_switch, double x_star,
                                        double horizon, const IntegrateOptions& opts = {});

/// Smallest 0.01-grid time >= T_switch from which
/// (f∘F^{-1})(K(1+eps)t) / (f∘F^{-1})(K(1+2eps)t) < 2 eps / (K(1+eps)) for every later sample.
[[nodiscard]] double select_T1(const Nonlinearity& n, double K, double eps, double T_switch,
                               double horizon);

/// F* = 1 + max(F(x_bar), K T1 (1 + 2 eps)).
[[nodiscard]] double F_star_rule(double F_x_bar, double K, double eps, double T1);

/// x_u(t) = F^{-1}(K(1+2eps)(t - T1) + F*).
[[nodiscard]] Magnitude explicit_upper(const Nonlinearity& n, double K, double eps, double T1,
                                       double F_star, double t);

struct BundleOptions {
  double lower_start_factor = 0.5;  ///< 2 gives the swapped negative control
  IntegrateOptions integrate;
};

/// Base solution and x_- on a shared grid. With finite K >= 0 also x_+ (from T_switch)
/// and, for K > 1, x_u (from T1). Pass K = NaN for the lower ordering only.
[[nodiscard]] ComparisonBundle build_bundle(const Nonlinearity& n, const Forcing& fc, double psi,
                                            double horizon, double K, double eps,
                                            const BundleOptions& opts = {});

/// Pass iff x_- < x on every shared t > 0, x < x_+ on every shared t >= T_switch and
/// x_+ < x_u on every shared t >= T1.
[[nodiscard]] VerificationReport check_ordering(const ComparisonBundle& bundle);

/// CSV `t,x,x_lower,x_plus,x_u,scale` and a `# ordering pass|fail ...` summary line.
void write_bundle_csv(std::ostream& os, const ComparisonBundle& bundle,
                      const VerificationReport& verdict);

}  // namespace superlin
