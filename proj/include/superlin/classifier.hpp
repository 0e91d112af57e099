#pragma once

#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "superlin/forcing.hpp"
#include "superlin/integrator.hpp"
#include "superlin/nonlinearity.hpp"

namespace superlin {

enum class Regime { NonlinearityDominated, SharedGrowth, ForcingDominated, Indeterminate };

[[nodiscard]] const char* to_string(Regime r);

/// Ratio of the last decade maximum of K(t) to the previous one.
enum class Trend { increasing, stable, decreasing, unclear };

[[nodiscard]] const char* to_string(Trend t);

using Samples = std::vector<std::pair<double, double>>;

struct RegimeReport {
  Samples K_samples;                ///< (t, F(H(t))/t)
  double K_hat = 0.0;               ///< max over the tail half
  double K_liminf = 0.0;            ///< min over the tail half
  bool K_infinite = false;          ///< decade maxima grow by more than 1.5x
  Trend K_trend = Trend::unclear;
  double K_probe = 1.5;
  Samples R_samples;                ///< (t, ∫_0^t f(K H~) ds / H~(t))
  Samples R1_samples;               ///< (t, ∫_0^t f(H) ds / H(t))
  Samples hprime_ratio_samples;     ///< (t, h(t) / f(H(t)))
  bool H_monotone = false;          ///< H~ = H on the sampled range
  Regime regime = Regime::Indeterminate;
  std::vector<AssumptionReport> assumption_flags;
  std::string explanation;

  /// K samples over the tail half of the grid are nearly constant.
  [[nodiscard]] bool K_full_limit() const;
};

struct DiagnosticsOptions {
  double K_probe = 1.5;
  int points_per_decade = 40;
  double decades = 2.0;            ///< grid spans [horizon / 10^decades, horizon]
  double tail_fraction = 0.25;     ///< R tail: t >= (1 - tail_fraction) horizon
  double R_threshold = 0.05;
};

/// Samples K(t), R(t) and h/f(H) and sets the regime.
[[nodiscard]] RegimeReport diagnostics(const Nonlinearity& n, const Forcing& fc, double horizon,
                                       const DiagnosticsOptions& opts = {});

/// log(∫_0^t f(K X(s)) ds / X(t)) at increasing times, X given by log X (-inf for X <= 0,
/// which contributes f(max(0, floor))). Beyond log X = 1e12 differences of log X carry no
/// digits, so the integral there comes from its endpoint asymptotics using the rate X'/X.
[[nodiscard]] std::vector<double> log_growth_ratio(const Nonlinearity& n,
                                                   const std::function<double(double)>& log_X,
                                                   const std::function<double(double)>& rate,
                                                   double K, std::span<const double> times);

/// F(H(t)); NaN when H(t) lies below the domain of F.
[[nodiscard]] double F_of_H(const Nonlinearity& n, const Forcing& fc, double t);

/// H'(t)/H(t) without forming H: from the scaled form when present.
[[nodiscard]] double forcing_rate(const Forcing& fc, double t);

enum class GrowthLaw { F_over_t_to_one, F_over_t_to_K, limsup_F_over_t_is_K, x_over_H_to_one };

[[nodiscard]] const char* to_string(GrowthLaw g);

struct Prediction {
  GrowthLaw law = GrowthLaw::F_over_t_to_one;
  double K = 1.0;
  std::string description;  ///< e.g. "F(x(t))/t -> 2"
};

/// Maps the regime to its growth law. Indeterminate reports throw PreconditionError.
[[nodiscard]] Prediction predict(const RegimeReport& report);

struct VerificationReport {
  std::string predicted_limit;
  Samples measured_tail;
  bool pass = false;
  bool inconclusive = false;
  double tolerance = 0.1;
  std::string detail;
};

struct VerifyOptions {
  double rel_tol = 0.1;
  double tail_fraction = 0.25;  ///< tail: t >= (1 - tail_fraction) t_end
  int samples = 20;
};

/// Measures the predicted ratio on the trajectory tail.
[[nodiscard]] VerificationReport verify_growth(const Trajectory& traj, const Nonlinearity& n,
                                               const Forcing& fc, const Prediction& prediction,
                                               const VerifyOptions& opts = {});

/// R with K = 1 and raw H against R with K_probe and H~: both decay or both do not.
/// Throws PreconditionError when n is not O-regularly varying.
[[nodiscard]] VerificationReport orv_equivalence_check(const Nonlinearity& n, const Forcing& fc,
                                                       double horizon,
                                                       const DiagnosticsOptions& opts = {});

/// Tail behaviour of a sampled ratio: decreasing, increasing or neither.
[[nodiscard]] Trend tail_trend(const Samples& s, double t_from);

/// CSV `t,K_of_t,R_of_t,hprime_ratio` with a `# {regime:..., K_hat:..., pass:...}` footer.
void write_regime_csv(std::ostream& os, const RegimeReport& report,
                      const std::optional<VerificationReport>& verification = std::nullopt);

}  // namespace superlin
