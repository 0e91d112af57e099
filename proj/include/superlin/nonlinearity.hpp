#pragma once

#include <functional>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "superlin/magnitude.hpp"
#include "superlin/numerics.hpp"

namespace superlin {

enum class AssumptionProperty {
  positivity,
  monotonicity,
  f1_monotone,
  f1_divergent,
  H_nonnegative,
  orv,
  gamma_condition,
  symmetry,
};

enum class Verdict { holds, fails, inconclusive };

[[nodiscard]] const char* to_string(AssumptionProperty p);
[[nodiscard]] const char* to_string(Verdict v);

/// Outcome of a sampled assumption check. A failing verdict names a grid point.
struct AssumptionReport {
  AssumptionProperty checked_property = AssumptionProperty::positivity;
  std::vector<double> grid;
  Verdict verdict = Verdict::inconclusive;
  double failing_point = std::numeric_limits<double>::quiet_NaN();
  std::string detail;

  [[nodiscard]] bool holds() const noexcept { return verdict == Verdict::holds; }
  [[nodiscard]] bool fails() const noexcept { return verdict == Verdict::fails; }
};

/// Closed forms for F(x) = ∫_1^x du/f(u) and friends. Arguments that may overflow are
/// passed as L = log x.
struct ClosedFormF {
  std::function<double(double)> F_of_log;     ///< L -> F(e^L)
  std::function<double(double)> log_inverse;  ///< u -> log F^{-1}(u)
  double F_infinity = std::numeric_limits<double>::infinity();
  double F_lower = -std::numeric_limits<double>::infinity();  ///< F at the domain floor
  std::function<double(double)> tail_of_log;       ///< L -> ∫_{e^L}^∞ du/f(u), blow-up only
  std::function<double(double)> log_tail_inverse;  ///< w -> L with tail(e^L) = w
};

struct NonlinearityDefinition {
  std::string name;
  std::function<double(double)> f;
  /// L -> log(f(e^L) / e^L). Enables evaluation at magnitudes beyond 1e300.
  std::function<double(double)> log_f1;
  std::optional<ClosedFormF> closed_form;
  double domain_floor = 0.0;
  std::optional<double> f1_monotone_from;
};

enum class BlowupClass { global_existence, finite_time_blowup, inconclusive };

struct BlowupVerdict {
  BlowupClass kind = BlowupClass::inconclusive;
  double F_infinity = std::numeric_limits<double>::infinity();
  double partial_integral = 0.0;  ///< ∫_1^{e^S} du/f over the scanned range
  double tail_bound = std::numeric_limits<double>::infinity();
  std::string detail;
};

/// The superlinear right-hand side f together with f1 = f/x, F, F^{-1} and the tail
/// integral ∫_x^∞ du/f. Immutable; copies share state.
class Nonlinearity {
 public:
  explicit Nonlinearity(NonlinearityDefinition def);

  [[nodiscard]] const std::string& name() const noexcept;
  [[nodiscard]] double domain_floor() const noexcept;
  [[nodiscard]] std::optional<double> f1_monotone_from() const noexcept;
  [[nodiscard]] bool has_log_form() const noexcept;
  [[nodiscard]] bool has_closed_form_F() const noexcept;

  /// f(x); reports the result in log form once it leaves the direct range.
  [[nodiscard]] Magnitude eval_f(Magnitude x) const;
  [[nodiscard]] double eval_f(double x) const;
  [[nodiscard]] Magnitude eval_f1(Magnitude x) const;

  /// log f1(e^L) and log f(e^L).
  [[nodiscard]] double log_f1(double log_x) const;
  [[nodiscard]] double log_f(double log_x) const;

  [[nodiscard]] double compute_F(double x) const;
  [[nodiscard]] double F_of_log(double log_x) const;
  [[nodiscard]] double F_of(Magnitude x) const;

  [[nodiscard]] Magnitude invert_F(double u) const;
  [[nodiscard]] double log_invert_F(double u) const;

  /// lim F(x) as x -> inf; +inf for globally existing solutions.
  [[nodiscard]] double F_infinity() const noexcept;
  /// F at the domain floor (may be -inf).
  [[nodiscard]] double F_lower() const noexcept;
  [[nodiscard]] bool blows_up() const noexcept;
  /// Classification obtained at construction (catalog entries: analytic).
  [[nodiscard]] const BlowupVerdict& blowup_verdict() const noexcept;

  /// ∫_x^∞ du/f(u) for blow-up nonlinearities.
  [[nodiscard]] double tail_of_log(double log_x) const;
  [[nodiscard]] double log_tail_inverse(double w) const;

  /// Largest log x at which f can be evaluated.
  [[nodiscard]] double log_x_limit() const noexcept;

  struct Impl;

 private:
  std::shared_ptr<const Impl> impl_;
};

/// Decides between global existence and finite-time blow-up from ∫^∞ du/f(u).
[[nodiscard]] BlowupVerdict classify_blowup(const Nonlinearity& n);

/// Tail ∫_{e^L}^∞ du/f(u) by the v = 1/u substitution (log variable beyond 1e300).
[[nodiscard]] double tail_by_quadrature(const Nonlinearity& n, double log_x);

[[nodiscard]] AssumptionReport check_assumption_f(const Nonlinearity& n,
                                                  std::span<const double> grid);

[[nodiscard]] AssumptionReport check_o_regular_variation(const Nonlinearity& n,
                                                         std::span<const double> lambdas,
                                                         std::span<const double> grid);

/// (f∘F^{-1})((1-eps) t) / (f∘F^{-1})(t), evaluated in the log domain.
[[nodiscard]] double superexp_ratio(const Nonlinearity& n, double eps, double t);

/// `count` log-spaced points in [lo, hi].
[[nodiscard]] std::vector<double> log_spaced(double lo, double hi, std::size_t count);

namespace catalog {

/// f(x) = x^p.
[[nodiscard]] Nonlinearity power(double p);
/// f(x) = (x+e) log(x+e).
[[nodiscard]] Nonlinearity shifted_xlogx();
/// f(x) = x log(x+e).
[[nodiscard]] Nonlinearity xlog();
/// f(x) = x loglog(x+e^e).
[[nodiscard]] Nonlinearity xloglog();
/// f(x) = e^x.
[[nodiscard]] Nonlinearity exponential();

/// Catalog entries with F(inf) = inf.
[[nodiscard]] std::vector<Nonlinearity> global_entries();

/// Lookup by config name ("power", "shifted_xlogx", "xlog", "xloglog", "exp").
[[nodiscard]] Nonlinearity by_name(const std::string& name,
                                   const std::map<std::string, double>& params);

}  // namespace catalog

/// Wraps a user-supplied f; F, F^{-1} and the tail come from quadrature.
[[nodiscard]] Nonlinearity make_nonlinearity(std::string name, std::function<double(double)> f,
                                             std::function<double(double)> log_f1 = {},
                                             double domain_floor = 0.0,
                                             std::optional<double> f1_monotone_from = {});

}  // namespace superlin
