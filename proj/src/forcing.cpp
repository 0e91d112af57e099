#include "superlin/forcing.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "superlin/errors.hpp"
#include "superlin/numerics.hpp"

namespace superlin {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr numerics::QuadTolerance kHTol{1e-12, 1e-10};

/// First positive checkpoint and geometric ratio of the H cache.
constexpr double kFirstCheckpoint = 1.0 / 64.0;
const double kCheckpointRatio = std::sqrt(2.0);

/// log(e^y - 1) for y > 0 without overflow.
double log_expm1(double y) {
  if (y > 1.0) return y + std::log1p(-std::exp(-y));
  return std::log(std::expm1(y));
}

}  // namespace

struct Forcing::Impl {
  ForcingDefinition def;
  std::mutex mutex;
  std::vector<double> cp_t{0.0};
  std::vector<double> cp_H{0.0};

  double H_by_quadrature(double t) {
    auto h = [this](double s) { return def.h(s); };
    double t0 = 0.0, H0 = 0.0;
    {
      std::lock_guard<std::mutex> lock(mutex);
      while (cp_t.back() < t) {
        const double a = cp_t.back();
        const double b = a == 0.0 ? kFirstCheckpoint : a * kCheckpointRatio;
        cp_H.push_back(cp_H.back() + numerics::integrate(h, a, b, kHTol).value);
        cp_t.push_back(b);
      }
      auto it = std::upper_bound(cp_t.begin(), cp_t.end(), t);
      const std::size_t k = static_cast<std::size_t>(std::distance(cp_t.begin(), it)) - 1;
      t0 = cp_t[k];
      H0 = cp_H[k];
    }
    if (t == t0) return H0;
    return H0 + numerics::integrate(h, t0, t, kHTol).value;
  }
};

Forcing::Forcing(ForcingDefinition def) : impl_(std::make_shared<Impl>()) {
  if (!def.h) throw std::invalid_argument("forcing needs an evaluator for h");
  impl_->def = std::move(def);
}

const std::string& Forcing::name() const noexcept { return impl_->def.name; }
bool Forcing::is_zero() const noexcept { return impl_->def.identically_zero; }
bool Forcing::has_closed_form_H() const noexcept { return static_cast<bool>(impl_->def.H); }
const ScaledForm* Forcing::scaled() const noexcept {
  return impl_->def.scaled ? &*impl_->def.scaled : nullptr;
}

double Forcing::eval_h(double t) const { return impl_->def.h(t); }

SignedLog Forcing::signed_log_h(double t) const {
  if (impl_->def.signed_log_h) return impl_->def.signed_log_h(t);
  return SignedLog::of(impl_->def.h(t));
}

double Forcing::eval_H(double t) const {
  if (t < 0.0) throw DomainError(name() + ": H(t) needs t >= 0");
  if (t == 0.0) return 0.0;
  if (impl_->def.H) return impl_->def.H(t);
  return impl_->H_by_quadrature(t);
}

SignedLog Forcing::signed_log_H(double t) const {
  if (impl_->def.signed_log_H) return impl_->def.signed_log_H(t);
  return SignedLog::of(eval_H(t));
}

AssumptionReport check_assumption_H(const Forcing& fc, std::span<const double> grid) {
  AssumptionReport r;
  r.checked_property = AssumptionProperty::H_nonnegative;
  r.grid.assign(grid.begin(), grid.end());
  if (grid.empty()) {
    r.detail = "empty grid";
    return r;
  }
  for (double t : grid) {
    const SignedLog H = fc.signed_log_H(t);
    // Rounding noise around a zero of H is not a violation.
    if (H.sign < 0 && H.log_abs > std::log(1e-12)) {
      r.verdict = Verdict::fails;
      r.failing_point = t;
      r.detail = "H(t) < 0";
      return r;
    }
  }
  r.verdict = Verdict::holds;
  return r;
}

namespace forcing_catalog {

Forcing zero() {
  ForcingDefinition d;
  d.name = "zero";
  d.h = [](double) { return 0.0; };
  d.H = [](double) { return 0.0; };
  d.identically_zero = true;
  return Forcing(std::move(d));
}

Forcing constant(double c) {
  if (c == 0.0) return zero();
  ForcingDefinition d;
  std::ostringstream os;
  os << "constant(" << c << ")";
  d.name = os.str();
  d.h = [c](double) { return c; };
  d.H = [c](double t) { return c * t; };
  return Forcing(std::move(d));
}

Forcing power(double c, double beta) {
  if (!(beta > -1.0)) throw std::invalid_argument("power forcing needs beta > -1");
  ForcingDefinition d;
  std::ostringstream os;
  os << c << "*t^" << beta;
  d.name = os.str();
  d.h = [c, beta](double t) { return c * std::pow(t, beta); };
  d.H = [c, beta](double t) { return c * std::pow(t, beta + 1.0) / (beta + 1.0); };
  return Forcing(std::move(d));
}

Forcing cosine() {
  ForcingDefinition d;
  d.name = "cos";
  d.h = [](double t) { return std::cos(t); };
  d.H = [](double t) { return std::sin(t); };
  return Forcing(std::move(d));
}

Forcing linear_plus_sine() {
  ForcingDefinition d;
  d.name = "1+cos";
  d.h = [](double t) { return 1.0 + std::cos(t); };
  d.H = [](double t) { return t + std::sin(t); };
  return Forcing(std::move(d));
}

Forcing table(std::vector<double> times, std::vector<double> values) {
  if (times.size() != values.size() || times.empty()) {
    throw std::invalid_argument("forcing table needs matching, nonempty columns");
  }
  if (times.front() != 0.0) throw std::invalid_argument("forcing table must start at t = 0");
  for (std::size_t i = 1; i < times.size(); ++i) {
    if (!(times[i] > times[i - 1])) throw std::invalid_argument("forcing table times must increase");
  }
  // Cumulative trapezoid sums: exact for the piecewise-linear interpolant.
  std::vector<double> cum(times.size(), 0.0);
  for (std::size_t i = 1; i < times.size(); ++i) {
    cum[i] = cum[i - 1] + 0.5 * (values[i] + values[i - 1]) * (times[i] - times[i - 1]);
  }
  auto locate = [times](double t) {
    auto it = std::upper_bound(times.begin(), times.end(), t);
    return static_cast<std::size_t>(std::distance(times.begin(), it)) - 1;
  };
  ForcingDefinition d;
  d.name = "table";
  d.h = [times, values, locate](double t) {
    const std::size_t k = locate(t);
    if (k + 1 >= times.size()) return values.back();
    const double w = (t - times[k]) / (times[k + 1] - times[k]);
    return values[k] + w * (values[k + 1] - values[k]);
  };
  d.H = [times, values, cum, locate](double t) {
    const std::size_t k = locate(t);
    const double dt = t - times[k];
    if (k + 1 >= times.size()) return cum.back() + values.back() * dt;
    const double slope = (values[k + 1] - values[k]) / (times[k + 1] - times[k]);
    return cum[k] + values[k] * dt + 0.5 * slope * dt * dt;
  };
  return Forcing(std::move(d));
}

Forcing exp_exp(double K, double alpha) {
  if (!(K > 0.0) || !(alpha > 0.0)) throw std::invalid_argument("exp_exp forcing needs K, alpha > 0");
  // E(t) = exp(K t^alpha); H = e^E - e; h = e^E E K alpha t^(alpha-1).
  auto log_t_term = [alpha](double t) { return alpha == 1.0 ? 0.0 : (alpha - 1.0) * std::log(t); };
  auto log_E = [K, alpha](double t) { return K * std::pow(t, alpha); };
  auto slh = [=](double t) -> SignedLog {
    if (t == 0.0 && alpha > 1.0) return {};
    const double lE = log_E(t);
    return {1, std::exp(lE) + lE + std::log(K * alpha) + log_t_term(t)};
  };
  auto slH = [=](double t) -> SignedLog {
    if (t <= 0.0) return {};
    const double y = std::expm1(log_E(t));  // E - 1
    return {1, 1.0 + log_expm1(y)};
  };
  auto rate = [=](double t) {
    const double lE = log_E(t);
    const double E = std::exp(lE);
    return std::exp(lE + std::log(K * alpha) + log_t_term(t) - std::log(-std::expm1(1.0 - E)));
  };
  ForcingDefinition d;
  std::ostringstream os;
  os << "exp(exp(" << K << "t^" << alpha << "))-e";
  d.name = os.str();
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

namespace {

double param(const std::map<std::string, double>& p, const std::string& key, const std::string& who) {
  auto it = p.find(key);
  if (it == p.end()) throw std::invalid_argument(who + " forcing needs parameter " + key);
  return it->second;
}

}  // namespace

Forcing by_name(const std::string& name, const std::map<std::string, double>& params) {
  if (name == "zero") return zero();
  if (name == "constant") return constant(param(params, "c", name));
  if (name == "power") return power(param(params, "c", name), param(params, "beta", name));
  if (name == "cos") return cosine();
  if (name == "linear_plus_sine") return linear_plus_sine();
  if (name == "exp_exp") return exp_exp(param(params, "K", name), param(params, "alpha", name));
  if (name == "sin_envelope") return sinusoidal_envelope(envelope_catalog::exp_exp());
  throw std::invalid_argument("unknown forcing '" + name + "'");
}

}  // namespace forcing_catalog

const char* to_string(EnvelopeKind k) {
  switch (k) {
    case EnvelopeKind::majorant: return "majorant";
    case EnvelopeKind::fluctuation: return "fluctuation";
    case EnvelopeKind::lil: return "lil";
  }
  return "?";
}

Envelope::Envelope(EnvelopeKind kind, std::string name, std::function<double(double)> log_value,
                   std::function<double(double)> rate)
    : kind_(kind), name_(std::move(name)), log_value_(std::move(log_value)), rate_(std::move(rate)) {}

double Envelope::value(double t) const { return std::exp(log_value_(t)); }

double Envelope::rate(double t) const {
  if (!rate_) throw PreconditionError(name_ + ": envelope has no derivative");
  return rate_(t);
}

double Envelope::derivative(double t) const { return rate(t) * value(t); }

namespace envelope_catalog {

Envelope exp_exp() {
  return Envelope(
      EnvelopeKind::fluctuation, "exp(e^t)", [](double t) { return std::exp(t); },
      [](double t) { return std::exp(t); });
}

Envelope exp_exp_square() {
  return Envelope(
      EnvelopeKind::fluctuation, "exp(e^{t^2})", [](double t) { return std::exp(t * t); },
      [](double t) { return 2.0 * t * std::exp(t * t); });
}

Envelope linear() {
  return Envelope(
      EnvelopeKind::fluctuation, "t", [](double t) { return std::log(t); },
      [](double t) { return 1.0 / t; });
}

}  // namespace envelope_catalog

Forcing sinusoidal_envelope(const Envelope& gamma) {
  if (!gamma.has_rate()) throw PreconditionError("sinusoidal envelope forcing needs gamma'");
  ForcingDefinition d;
  d.name = gamma.name() + "*sin(t)";
  auto slh = [gamma](double t) -> SignedLog {
    const SignedLog shape = SignedLog::of(gamma.rate(t) * std::sin(t) + std::cos(t));
    if (shape.sign == 0) return {};
    return {shape.sign, gamma.log_value(t) + shape.log_abs};
  };
  auto slH = [gamma](double t) -> SignedLog {
    const SignedLog s = SignedLog::of(std::sin(t));
    if (s.sign == 0) return {};
    return {s.sign, gamma.log_value(t) + s.log_abs};
  };
  d.h = [slh](double t) { return slh(t).value(); };
  d.H = [slH](double t) { return slH(t).value(); };
  d.signed_log_h = slh;
  d.signed_log_H = slH;
  ScaledForm sf;
  sf.log_reference = [gamma](double t) { return gamma.log_value(t); };
  sf.reference_rate = [gamma](double t) { return gamma.rate(t); };
  sf.shape = [](double t) { return std::sin(t); };
  sf.shape_derivative = [](double t) { return std::cos(t); };
  d.scaled = sf;
  return Forcing(std::move(d));
}

Envelope increasing_majorant_of_logs(std::vector<double> grid, std::vector<double> log_H) {
  if (grid.empty() || grid.size() != log_H.size()) {
    throw std::invalid_argument("majorant needs matching, nonempty samples");
  }
  for (std::size_t i = 1; i < log_H.size(); ++i) log_H[i] = std::max(log_H[i], log_H[i - 1]);
  auto log_value = [grid = std::move(grid), lm = std::move(log_H)](double t) {
    if (t <= grid.front()) return lm.front();
    if (t >= grid.back()) return lm.back();
    auto it = std::upper_bound(grid.begin(), grid.end(), t);
    const std::size_t k = static_cast<std::size_t>(std::distance(grid.begin(), it)) - 1;
    const double w = (t - grid[k]) / (grid[k + 1] - grid[k]);
    if (w <= 0.0) return lm[k];
    if (w >= 1.0) return lm[k + 1];
    // Linear interpolation of the values, carried out on logarithms.
    return log_add_exp(std::log1p(-w) + lm[k], std::log(w) + lm[k + 1]);
  };
  return Envelope(EnvelopeKind::majorant, "running max of H", std::move(log_value));
}

Envelope increasing_majorant(const Forcing& fc, std::span<const double> grid) {
  std::vector<double> t(grid.begin(), grid.end());
  std::vector<double> lh;
  lh.reserve(t.size());
  for (double s : t) {
    const SignedLog H = fc.signed_log_H(s);
    lh.push_back(H.sign > 0 ? H.log_abs : -kInf);
  }
  return increasing_majorant_of_logs(std::move(t), std::move(lh));
}

double log_variance(const LogSigma& log_sigma, double t) {
  if (t <= 0.0) return -kInf;
  const double lv = numerics::log_integral_exp([&](double s) { return 2.0 * log_sigma(s); }, 0.0, t);
  if (!std::isfinite(lv)) throw DomainError("sigma vanishes or overflows on [0, t]");
  return lv;
}

double sigma_domain_start(const LogSigma& log_sigma) {
  // Increasing in log t.
  auto g = [&](double tau) { return log_variance(log_sigma, std::exp(tau)) - 1.0; };
  return std::exp(numerics::solve_increasing(g, 0.0, 1.0));
}

SigmaValue sigma_envelope(const LogSigma& log_sigma, double t) {
  const double lv = log_variance(log_sigma, t);
  constexpr double kBoundaryTol = 1e-10;
  if (std::abs(lv - 1.0) <= kBoundaryTol) {
    return {Magnitude::from_value(0.0), true};
  }
  if (lv < 1.0) {
    throw DomainError("Sigma(t) needs ∫σ² > e; smallest valid t = " +
                      format_double(sigma_domain_start(log_sigma)) + ", got t = " +
                      format_double(t));
  }
  // log Σ = (log 2 + log V + log loglog V) / 2.
  const double log_sigma_env = 0.5 * (std::log(2.0) + lv + std::log(std::log(lv)));
  return {Magnitude::from_log(log_sigma_env), false};
}

Envelope lil_envelope(const LogSigma& log_sigma, std::string name) {
  auto log_value = [log_sigma](double t) { return sigma_envelope(log_sigma, t).value.log(); };
  auto rate = [log_sigma](double t) {
    const double lv = log_variance(log_sigma, t);
    return 0.5 * std::exp(2.0 * log_sigma(t) - lv) * (1.0 + 1.0 / (lv * std::log(lv)));
  };
  return Envelope(EnvelopeKind::lil, std::move(name), std::move(log_value), std::move(rate));
}

}  // namespace superlin
