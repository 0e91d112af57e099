#pragma once

#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "superlin/magnitude.hpp"
#include "superlin/nonlinearity.hpp"

namespace superlin {

/// A real number as sign and log of its absolute value. sign == 0 encodes zero.
struct SignedLog {
  int sign = 0;
  double log_abs = -std::numeric_limits<double>::infinity();

  [[nodiscard]] static SignedLog of(double v) {
    if (v == 0.0) return {};
    return {v > 0 ? 1 : -1, std::log(std::abs(v))};
  }
  [[nodiscard]] double value() const { return sign == 0 ? 0.0 : sign * std::exp(log_abs); }
};

/// H(t) = G(t) s(t) with a positive reference scale G and a bounded shape s.
/// Lets the integrator follow x - H relative to G when H is astronomically large.
struct ScaledForm {
  std::function<double(double)> log_reference;     ///< log G(t)
  std::function<double(double)> reference_rate;    ///< G'(t)/G(t)
  std::function<double(double)> shape;             ///< s(t)
  std::function<double(double)> shape_derivative;  ///< s'(t)
  bool unit_shape = false;                         ///< s ≡ 1
};

struct ForcingDefinition {
  std::string name;
  std::function<double(double)> h;
  std::function<double(double)> H;  ///< closed form, empty when unknown
  std::function<SignedLog(double)> signed_log_h;
  std::function<SignedLog(double)> signed_log_H;
  std::optional<ScaledForm> scaled;
  bool identically_zero = false;
};

/// The forcing h with its running integral H(t) = ∫_0^t h(s) ds. Copies share the
/// (internally synchronized) checkpoint cache used when H has no closed form.
class Forcing {
 public:
  explicit Forcing(ForcingDefinition def);

  [[nodiscard]] const std::string& name() const noexcept;
  [[nodiscard]] bool is_zero() const noexcept;
  [[nodiscard]] bool has_closed_form_H() const noexcept;
  [[nodiscard]] const ScaledForm* scaled() const noexcept;

  [[nodiscard]] double eval_h(double t) const;
  [[nodiscard]] SignedLog signed_log_h(double t) const;

  /// H(t) for t >= 0; H(0) = 0. Overflowing closed forms return +-inf.
  [[nodiscard]] double eval_H(double t) const;
  [[nodiscard]] SignedLog signed_log_H(double t) const;

 private:
  struct Impl;
  std::shared_ptr<Impl> impl_;
};

[[nodiscard]] AssumptionReport check_assumption_H(const Forcing& fc, std::span<const double> grid);

namespace forcing_catalog {

[[nodiscard]] Forcing zero();
[[nodiscard]] Forcing constant(double c);
/// h(t) = c t^beta, beta > -1.
[[nodiscard]] Forcing power(double c, double beta);
/// h = cos t, H = sin t.
[[nodiscard]] Forcing cosine();
/// h(t) = 1 + cos t, H(t) = t + sin t.
[[nodiscard]] Forcing linear_plus_sine();
/// Piecewise-linear h through (times, values); constant extension beyond the last node.
[[nodiscard]] Forcing table(std::vector<double> times, std::vector<double> values);
/// H(t) = exp(exp(K t^alpha)) - e.
[[nodiscard]] Forcing exp_exp(double K, double alpha);

/// Lookup by config name ("zero", "constant", "power", "cos", "exp_exp", "sin_envelope").
[[nodiscard]] Forcing by_name(const std::string& name, const std::map<std::string, double>& params);

}  // namespace forcing_catalog

enum class EnvelopeKind { majorant, fluctuation, lil };

[[nodiscard]] const char* to_string(EnvelopeKind k);

/// Positive growth envelope stored by its logarithm.
class Envelope {
 public:
  Envelope(EnvelopeKind kind, std::string name, std::function<double(double)> log_value,
           std::function<double(double)> rate = {});

  [[nodiscard]] EnvelopeKind kind() const noexcept { return kind_; }
  [[nodiscard]] const std::string& name() const noexcept { return name_; }
  [[nodiscard]] double log_value(double t) const { return log_value_(t); }
  [[nodiscard]] double value(double t) const;
  [[nodiscard]] bool has_rate() const noexcept { return static_cast<bool>(rate_); }
  /// gamma'(t) / gamma(t).
  [[nodiscard]] double rate(double t) const;
  /// gamma'(t); may overflow to inf.
  [[nodiscard]] double derivative(double t) const;

 private:
  EnvelopeKind kind_;
  std::string name_;
  std::function<double(double)> log_value_;
  std::function<double(double)> rate_;
};

namespace envelope_catalog {

/// gamma(t) = exp(e^t).
[[nodiscard]] Envelope exp_exp();
/// gamma(t) = exp(e^{t^2}).
[[nodiscard]] Envelope exp_exp_square();
/// gamma(t) = t.
[[nodiscard]] Envelope linear();

}  // namespace envelope_catalog

/// H = gamma(t) sin t for a fluctuation envelope with known rate.
[[nodiscard]] Forcing sinusoidal_envelope(const Envelope& gamma);

/// Running maximum of H over the grid with monotone linear interpolation.
/// Samples are handled in the log domain, so astronomically large H is supported.
[[nodiscard]] Envelope increasing_majorant(const Forcing& fc, std::span<const double> grid);

/// Same, from precomputed log H samples (-inf for H <= 0).
[[nodiscard]] Envelope increasing_majorant_of_logs(std::vector<double> grid,
                                                   std::vector<double> log_H);

/// log |sigma(t)|.
using LogSigma = std::function<double(double)>;

/// log ∫_0^t sigma^2(s) ds, computed with the integrand shifted by its sampled maximum.
[[nodiscard]] double log_variance(const LogSigma& log_sigma, double t);

struct SigmaValue {
  Magnitude value;
  bool boundary = false;  ///< ∫σ² = e: loglog vanishes
};

/// Σ(t) = sqrt(2 V loglog V), V = ∫_0^t σ². Throws DomainError when V < e, naming the
/// smallest valid t.
[[nodiscard]] SigmaValue sigma_envelope(const LogSigma& log_sigma, double t);

/// Smallest t with ∫_0^t σ² = e.
[[nodiscard]] double sigma_domain_start(const LogSigma& log_sigma);

/// Σ as an Envelope of kind lil (valid for t > sigma_domain_start).
[[nodiscard]] Envelope lil_envelope(const LogSigma& log_sigma, std::string name);

}  // namespace superlin
