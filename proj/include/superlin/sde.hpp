#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <limits>
#include <string>
#include <vector>

#include "superlin/classifier.hpp"
#include "superlin/forcing.hpp"
#include "superlin/integrator.hpp"
#include "superlin/nonlinearity.hpp"

namespace superlin {

/// A drift f defined on the whole line together with the positive nonlinearity phi
/// with |f(x)| ~ phi(|x|) as |x| -> inf.
struct SignedNonlinearity {
  std::string name;
  std::function<double(double)> f;
  /// (sign of x, log|x|) -> f(x)/x as a SignedLog.
  std::function<SignedLog(int, double)> ratio;
  Nonlinearity phi;

  [[nodiscard]] SignedDrift drift() const { return {name, f, ratio}; }
};

/// Samples log|f(x)| - log phi(|x|) at x = ±e^L on a log grid; holds when it is within
/// 1e-2 at the top of the grid.
[[nodiscard]] AssumptionReport check_symmetry(const SignedNonlinearity& fs);

namespace sde_presets {

/// f(x) = x loglog(|x| + e^e), phi(x) = x loglog(x + e^e).
[[nodiscard]] SignedNonlinearity xloglog();
/// f = 0 (not superlinear); phi = x loglog(x + e^e) only to fill the slot.
[[nodiscard]] SignedNonlinearity zero_drift();
/// log sigma for sigma(s) = exp(e^s).
[[nodiscard]] LogSigma exp_exp_sigma();
/// log sigma for sigma = 1.
[[nodiscard]] LogSigma unit_sigma();

/// Window start for the fluctuation statistics of the exp(e^s) preset.
inline constexpr double kExpExpWindowStart = 2.0;

}  // namespace sde_presets

/// Philox4x32-10 counter-based generator.
class Philox {
 public:
  using Counter = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  explicit Philox(std::uint64_t seed)
      : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)} {}
  explicit Philox(Key key) : key_(key) {}

  [[nodiscard]] Counter operator()(Counter ctr) const;

  /// Standard normal from one block (Box-Muller on two 53-bit uniforms).
  [[nodiscard]] double normal(std::uint64_t path, std::uint32_t step, std::uint32_t sub) const;

 private:
  Key key_;
};

/// Time grid shared by every path of an ensemble, with the exact variance increments
/// log ∫_{t_k}^{t_{k+1}} sigma^2 and the running log ∫_0^{t_k} sigma^2.
struct SdeGrid {
  std::vector<double> t;
  std::vector<double> log_dV;  ///< size t.size() - 1
  std::vector<double> log_V;   ///< -inf at t = 0
};

struct SdeGridOptions {
  double dt_max = 0.01;
  /// Step cap: sigma^2(t) dt <= var_frac V(t) once V > 0.
  double var_frac = 0.01;
};

[[nodiscard]] SdeGrid make_sde_grid(const LogSigma& log_sigma, double horizon,
                                    const SdeGridOptions& opts = {});

struct SdePath {
  std::vector<double> x;
  std::vector<double> noise;  ///< M(t) = ∫_0^t sigma dB on the grid
  bool truncated = false;     ///< overflow; values after truncated_at are NaN
  double truncated_at = std::numeric_limits<double>::quiet_NaN();
};

struct SimulateOptions {
  /// Within a grid step, substeps keep dt |f(X)| <= drift_frac (1 + |X|).
  double drift_frac = 0.05;
  int max_substeps = 4096;
};

/// Euler-Maruyama X_{k+1} = X_k + f(X_k) dt + sqrt(dV) Z along the grid. Deterministic in
/// (seed, path index, grid).
[[nodiscard]] SdePath simulate_path(const SignedNonlinearity& fs, const SdeGrid& grid, double psi,
                                    std::uint64_t seed, std::uint64_t path_index,
                                    const SimulateOptions& opts = {});

struct SdeResult {
  SdeGrid grid;
  SdePath path;
};

/// Single path on a fresh grid with step bound dt_max.
[[nodiscard]] SdeResult simulate_sde(const SignedNonlinearity& fs, const LogSigma& log_sigma,
                                     double psi, double horizon, double dt_max,
                                     std::uint64_t seed);

struct PathEnsemble {
  std::uint64_t seed = 0;
  SdeGrid grid;
  std::vector<SdePath> paths;  ///< path i uses stream (seed, i)
  /// log Sigma on the grid; NaN where ∫ sigma^2 <= e.
  std::vector<double> log_envelope;
};

struct EnsembleOptions {
  std::size_t paths = 100;
  unsigned threads = 0;  ///< 0: hardware concurrency
  SdeGridOptions grid;
  SimulateOptions simulate;
};

[[nodiscard]] PathEnsemble run_ensemble(const SignedNonlinearity& fs, const LogSigma& log_sigma,
                                        double psi, double horizon, std::uint64_t seed,
                                        const EnsembleOptions& opts = {});

/// Quantile with linear interpolation between order statistics.
[[nodiscard]] double quantile(std::vector<double> v, double q);

struct FluctuationRow {
  double t = 0.0;
  double q05 = 0.0, q50 = 0.0, q95 = 0.0;  ///< of X/Sigma across paths
  double running_max_median = 0.0;         ///< median of running max X/Sigma
};

struct FluctuationSummary {
  double t0 = 0.0;
  double t1 = 0.0;
  std::vector<double> running_max;   ///< per path, over [t0, t1]
  std::vector<double> running_min;   ///< per path
  std::vector<double> max_abs_diff;  ///< per path, max |X - M| / Sigma
  std::array<double, 3> max_quartiles{};  ///< q25, q50, q75 of running_max
  std::array<double, 3> min_quartiles{};
  std::size_t truncated_paths = 0;
  std::vector<FluctuationRow> rows;
};

/// Running extrema of X/Sigma over [t0, end of grid]. Throws DomainError when Sigma is
/// undefined at t0.
[[nodiscard]] FluctuationSummary fluctuation_stats(const PathEnsemble& ensemble, double t0,
                                                   std::size_t max_rows = 1000);

/// CSV `t,q05,q50,q95,running_max_over_envelope`.
void write_ensemble_csv(std::ostream& os, const FluctuationSummary& s);

struct GammaOptions {
  double threshold = 0.05;
  std::size_t samples = 200;
  double tail_fraction = 0.25;
};

/// Samples ∫_0^t phi(K gamma(s)) ds / gamma(t) in the log domain; pass iff the tail is
/// decreasing and the value at the horizon is below the threshold. Refuses phi with finite ∫^∞ du/phi.
[[nodiscard]] VerificationReport check_gamma_condition(const Nonlinearity& phi,
                                                       const Envelope& gamma, double K,
                                                       double horizon,
                                                       const GammaOptions& opts = {});

struct FluctuationCheckOptions {
  double K = 2.0;
  double window_start = std::numeric_limits<double>::quiet_NaN();  ///< NaN: 2/3 horizon
  double diff_tol = 0.05;     ///< |(x - H)/gamma| at the horizon
  double extreme_tol = 0.1;   ///< running sup/inf of x/gamma against ±1
  IntegrateOptions integrate;
};

struct FluctuationCheckReport {
  VerificationReport verdict;
  double diff_at_end = 0.0;  ///< (x - H)/gamma at the horizon
  double sup_ratio = 0.0;    ///< sup x/gamma over the window
  double inf_ratio = 0.0;
  bool diff_ok = false;
  bool extremes_ok = false;
  Trajectory trajectory;
};

/// Integrates x' = f(x) + h and measures (x - H)/gamma and x/gamma. Requires sampled
/// sup/inf of H/gamma within 1e-2 of ±1 and a passing gamma condition.
[[nodiscard]] FluctuationCheckReport verify_fluctuation(const SignedNonlinearity& fs, const Forcing& fc,
                                             const Envelope& gamma, double psi, double horizon,
                                             const FluctuationCheckOptions& opts = {});

}  // namespace superlin
