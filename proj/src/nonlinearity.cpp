#include "superlin/nonlinearity.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "superlin/errors.hpp"

namespace superlin {

const char* to_string(AssumptionProperty p) {
  switch (p) {
    case AssumptionProperty::positivity: return "positivity";
    case AssumptionProperty::monotonicity: return "monotonicity";
    case AssumptionProperty::f1_monotone: return "f1_monotone";
    case AssumptionProperty::f1_divergent: return "f1_divergent";
    case AssumptionProperty::H_nonnegative: return "H_nonnegative";
    case AssumptionProperty::orv: return "orv";
    case AssumptionProperty::gamma_condition: return "gamma_condition";
    case AssumptionProperty::symmetry: return "symmetry";
  }
  return "?";
}

const char* to_string(Verdict v) {
  switch (v) {
    case Verdict::holds: return "holds";
    case Verdict::fails: return "fails";
    case Verdict::inconclusive: return "inconclusive";
  }
  return "?";
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kE = std::numbers::e;

/// Log-variable quadrature tolerance used for the F checkpoint table.
constexpr numerics::QuadTolerance kTableTol{1e-15, 1e-12};
constexpr numerics::QuadTolerance kFTol{1e-12, 1e-11};

// Node layout of the F table in s = log x.
constexpr double kTableUniformStep = 0.25;
constexpr double kTableUniformHalfWidth = 40.0;
constexpr double kTableGeometricRatio = 1.05;
/// Upper end of the s = log x range when a log form of f exists.
constexpr double kLogFormLimit = 1e300;

}  // namespace

struct Nonlinearity::Impl {
  NonlinearityDefinition def;
  double log_x_limit = kLogDirectBound;
  BlowupVerdict verdict;
  double F_inf = kInf;
  double F_low = -kInf;

  // Checkpoints of F(e^s) for the quadrature-backed path.
  std::vector<double> nodes;
  std::vector<double> values;

  [[nodiscard]] double log_f1(double L) const {
    if (def.log_f1) return def.log_f1(L);
    if (L > log_x_limit) {
      throw OverflowError(def.name + ": f cannot be evaluated at log x = " + format_double(L) +
                          " without a log form");
    }
    const double x = std::exp(L);
    return std::log(def.f(x)) - L;
  }

  /// Integrand of F in the log variable: d F(e^s)/ds = 1/f1(e^s).
  [[nodiscard]] double integrand(double s) const { return std::exp(-log_f1(s)); }

  [[nodiscard]] double table_F(double L) const {
    if (L >= nodes.front() && L <= nodes.back()) {
      auto it = std::upper_bound(nodes.begin(), nodes.end(), L);
      const std::size_t k = static_cast<std::size_t>(std::distance(nodes.begin(), it)) - 1;
      if (L == nodes[k]) return values[k];
      return values[k] + numerics::integrate([this](double s) { return integrand(s); },
                                             nodes[k], L, kFTol)
                             .value;
    }
    if (L < nodes.front()) {
      if (L == -kInf) return F_low;
      return values.front() - numerics::integrate([this](double s) { return integrand(s); }, L,
                                                  nodes.front(), kFTol)
                                  .value;
    }
    if (verdict.kind == BlowupClass::finite_time_blowup) {
      return F_inf - tail_by_quadrature_impl(L);
    }
    throw OverflowError(def.name + ": F requested beyond the evaluable range, log x = " +
                        format_double(L));
  }

  [[nodiscard]] double tail_by_quadrature_impl(double L) const {
    if (L <= kLogDirectBound && L >= -kLogDirectBound) {
      // v = 1/u: ∫_x^∞ du/f(u) = ∫_0^{1/x} dv / (v f1(1/v)).
      auto g = [this](double v) { return std::exp(-std::log(v) - log_f1(-std::log(v))); };
      return numerics::integrate(g, 0.0, std::exp(-L), {1e-300, 1e-11}).value;
    }
    double total = 0.0;
    double a = L, width = 1.0;
    for (int i = 0; i < 4000; ++i) {
      const double piece =
          numerics::integrate([this](double s) { return integrand(s); }, a, a + width, {1e-300, 1e-11})
              .value;
      total += piece;
      a += width;
      width *= 2.0;
      if (piece <= 1e-17 * total || (total == 0.0 && piece == 0.0)) break;
    }
    return total;
  }

  [[nodiscard]] double table_inverse(double u) const {
    auto F_minus_u = [&](double L) { return table_F(L) - u; };
    if (u < values.front()) {
      return numerics::solve_increasing(F_minus_u, nodes.front(), 1.0);
    }
    if (u > values.back()) {
      if (verdict.kind == BlowupClass::finite_time_blowup) {
        return log_tail_inverse(F_inf - u);
      }
      throw RangeError(def.name + ": F^{-1}(" + format_double(u) +
                           ") lies beyond the evaluable range",
                       values.back());
    }
    auto it = std::upper_bound(values.begin(), values.end(), u);
    std::size_t k = static_cast<std::size_t>(std::distance(values.begin(), it));
    if (k == values.size()) k = values.size() - 1;
    const std::size_t j = k - 1;
    return numerics::solve_bracketed(F_minus_u, nodes[j], nodes[k], values[j] - u, values[k] - u);
  }

  [[nodiscard]] double log_tail_inverse(double w) const {
    if (def.closed_form && def.closed_form->log_tail_inverse) {
      return def.closed_form->log_tail_inverse(w);
    }
    auto g = [&](double L) { return w - tail_by_quadrature_impl(L); };
    return numerics::solve_increasing(g, 0.0, 1.0);
  }

  void build_table() {
    const double s_lo =
        def.domain_floor > 0 ? std::max(std::log(def.domain_floor), -kTableUniformHalfWidth)
                             : -kTableUniformHalfWidth;
    std::vector<double> down{0.0};
    while (down.back() - kTableUniformStep > s_lo) down.push_back(down.back() - kTableUniformStep);
    if (down.back() > s_lo) down.push_back(s_lo);
    std::vector<double> up{0.0};
    while (up.back() < log_x_limit) {
      const double step = up.back() < kTableUniformHalfWidth
                              ? kTableUniformStep
                              : up.back() * (kTableGeometricRatio - 1.0);
      up.push_back(std::min(up.back() + step, log_x_limit));
    }
    auto g = [this](double s) { return integrand(s); };
    nodes.assign(down.rbegin(), down.rend());
    values.assign(nodes.size(), 0.0);
    for (std::size_t i = nodes.size() - 1; i-- > 0;) {
      values[i] = values[i + 1] - numerics::integrate(g, nodes[i], nodes[i + 1], kTableTol).value;
    }
    for (std::size_t i = 1; i < up.size(); ++i) {
      nodes.push_back(up[i]);
      values.push_back(values.back() +
                       numerics::integrate(g, up[i - 1], up[i], kTableTol).value);
    }
    if (def.domain_floor > 0 && std::log(def.domain_floor) >= -kTableUniformHalfWidth) {
      F_low = values.front();
    } else {
      F_low = integrand(nodes.front()) > 1e-10 ? -kInf : values.front();
    }
  }
};

Nonlinearity::Nonlinearity(NonlinearityDefinition def) {
  auto impl = std::make_shared<Impl>();
  impl->def = std::move(def);
  if (!impl->def.f) throw std::invalid_argument("nonlinearity needs an evaluator");
  if (impl->def.log_f1) {
    impl->log_x_limit = kLogFormLimit;
  } else {
    // Largest L (up to log 1e300) at which f(e^L) is finite.
    double L = 0.0;
    while (L + 1.0 <= kLogDirectBound && std::isfinite(impl->def.f(std::exp(L + 1.0)))) L += 1.0;
    impl->log_x_limit = L;
  }
  if (impl->def.closed_form) {
    const ClosedFormF& cf = *impl->def.closed_form;
    impl->F_inf = cf.F_infinity;
    impl->F_low = cf.F_lower;
    impl->verdict.kind = std::isfinite(cf.F_infinity) ? BlowupClass::finite_time_blowup
                                                      : BlowupClass::global_existence;
    impl->verdict.F_infinity = cf.F_infinity;
    impl->verdict.detail = "closed form";
    impl_ = std::move(impl);
    return;
  }
  impl->build_table();
  impl_ = impl;
  // Classification reads F through the table only, so the partially built object suffices.
  BlowupVerdict v = classify_blowup(*this);
  impl->verdict = v;
  impl->F_inf = v.kind == BlowupClass::finite_time_blowup ? v.F_infinity : kInf;
}

const std::string& Nonlinearity::name() const noexcept { return impl_->def.name; }
double Nonlinearity::domain_floor() const noexcept { return impl_->def.domain_floor; }
std::optional<double> Nonlinearity::f1_monotone_from() const noexcept {
  return impl_->def.f1_monotone_from;
}
bool Nonlinearity::has_log_form() const noexcept { return static_cast<bool>(impl_->def.log_f1); }
bool Nonlinearity::has_closed_form_F() const noexcept {
  return impl_->def.closed_form.has_value();
}
double Nonlinearity::log_x_limit() const noexcept { return impl_->log_x_limit; }

double Nonlinearity::log_f1(double log_x) const { return impl_->log_f1(log_x); }
double Nonlinearity::log_f(double log_x) const { return log_x + impl_->log_f1(log_x); }

Magnitude Nonlinearity::eval_f(Magnitude x) const {
  if (!x.is_log_form()) {
    const double xv = x.value();
    if (xv < impl_->def.domain_floor) {
      throw DomainError(name() + ": x = " + format_double(xv) + " below the domain floor");
    }
    if (xv <= kDirectBound) {
      const double fx = impl_->def.f(xv);
      if (std::isfinite(fx) && fx <= kDirectBound) return Magnitude::from_value(fx);
    }
  }
  if (!impl_->def.log_f1) {
    throw OverflowError(name() + ": f(x) exceeds the double range and no log form exists");
  }
  return Magnitude::from_log(log_f(x.log()));
}

double Nonlinearity::eval_f(double x) const {
  const Magnitude m = eval_f(Magnitude::from_value(x));
  if (m.is_log_form()) {
    throw OverflowError(name() + ": f(" + format_double(x) + ") exceeds the double range");
  }
  return m.value();
}

Magnitude Nonlinearity::eval_f1(Magnitude x) const {
  if (!x.is_log_form() && x.value() <= 0.0) {
    throw DomainError(name() + ": f1 = f(x)/x needs x > 0");
  }
  const Magnitude fx = eval_f(x);
  if (!fx.is_log_form() && !x.is_log_form()) return Magnitude::from_value(fx.value() / x.value());
  return Magnitude::from_log(fx.log() - x.log());
}

double Nonlinearity::F_of_log(double log_x) const {
  if (impl_->def.closed_form) return impl_->def.closed_form->F_of_log(log_x);
  return impl_->table_F(log_x);
}

double Nonlinearity::compute_F(double x) const {
  if (x < impl_->def.domain_floor) {
    throw DomainError(name() + ": F(x) needs x >= domain floor, got " + format_double(x));
  }
  if (x == 0.0) return impl_->F_low;
  return F_of_log(std::log(x));
}

double Nonlinearity::F_of(Magnitude x) const {
  if (!x.is_log_form()) return compute_F(x.value());
  return F_of_log(x.log());
}

double Nonlinearity::log_invert_F(double u) const {
  if (std::isfinite(impl_->F_inf) && u >= impl_->F_inf) {
    throw RangeError(name() + ": u = " + format_double(u) + " is not below F(inf) = " +
                         format_double(impl_->F_inf),
                     impl_->F_inf);
  }
  if (u <= impl_->F_low) {
    throw RangeError(name() + ": u = " + format_double(u) + " is not above F(domain floor)",
                     impl_->F_low);
  }
  if (impl_->def.closed_form) return impl_->def.closed_form->log_inverse(u);
  return impl_->table_inverse(u);
}

Magnitude Nonlinearity::invert_F(double u) const { return Magnitude::from_log(log_invert_F(u)); }

double Nonlinearity::F_infinity() const noexcept { return impl_->F_inf; }
double Nonlinearity::F_lower() const noexcept { return impl_->F_low; }
bool Nonlinearity::blows_up() const noexcept { return std::isfinite(impl_->F_inf); }
const BlowupVerdict& Nonlinearity::blowup_verdict() const noexcept { return impl_->verdict; }

double Nonlinearity::tail_of_log(double log_x) const {
  if (!blows_up()) {
    throw PreconditionError(name() + ": tail integral diverges (global existence)");
  }
  if (impl_->def.closed_form && impl_->def.closed_form->tail_of_log) {
    return impl_->def.closed_form->tail_of_log(log_x);
  }
  return impl_->tail_by_quadrature_impl(log_x);
}

double Nonlinearity::log_tail_inverse(double w) const {
  if (!blows_up()) {
    throw PreconditionError(name() + ": tail integral diverges (global existence)");
  }
  if (w <= 0.0) return kInf;
  return impl_->log_tail_inverse(w);
}

double tail_by_quadrature(const Nonlinearity& n, double log_x) {
  if (log_x <= kLogDirectBound && log_x >= -kLogDirectBound) {
    auto g = [&n](double v) { return std::exp(-std::log(v) - n.log_f1(-std::log(v))); };
    return numerics::integrate(g, 0.0, std::exp(-log_x), {1e-300, 1e-11}).value;
  }
  auto g = [&n](double s) { return std::exp(-n.log_f1(s)); };
  double total = 0.0, a = log_x, width = 1.0;
  for (int i = 0; i < 4000; ++i) {
    const double piece = numerics::integrate(g, a, a + width, {1e-300, 1e-11}).value;
    total += piece;
    a += width;
    width *= 2.0;
    if (piece <= 1e-17 * total) break;
  }
  return total;
}

BlowupVerdict classify_blowup(const Nonlinearity& n) {
  constexpr double kDivergenceThreshold = 1e6;
  auto g = [&n](double s) { return std::exp(-n.log_f1(s)); };
  const double s_max = n.log_x_limit();

  BlowupVerdict out;
  std::vector<double> blocks;
  double partial = 0.0;
  double a = 0.0, b = 1.0;
  bool converged = false;
  while (b <= s_max) {
    const double c = numerics::integrate(g, a, b, {1e-300, 1e-12}).value;
    blocks.push_back(c);
    partial += c;
    if (partial > kDivergenceThreshold) {
      out.kind = BlowupClass::global_existence;
      out.partial_integral = partial;
      out.detail = "partial integral exceeded 1e6 at log x = " + format_double(b);
      return out;
    }
    const std::size_t m = blocks.size();
    if (m >= 4) {
      bool geometric = true;
      for (std::size_t i = m - 3; i < m; ++i) {
        if (!(blocks[i] <= 0.5 * blocks[i - 1])) geometric = false;
      }
      if (c == 0.0 || (geometric && 2.0 * c < 1e-12 * std::max(1.0, partial))) {
        converged = true;
        break;
      }
    }
    a = b;
    b *= 2.0;
  }
  out.partial_integral = partial;
  if (converged) {
    out.kind = BlowupClass::finite_time_blowup;
    out.F_infinity = tail_by_quadrature(n, 0.0);
    out.tail_bound = 2.0 * blocks.back();
    out.detail = "Cauchy tail: block contributions decay geometrically";
    return out;
  }
  // Raabe-type statistic on block contributions: k (1 - c_{k+1}/c_k) well below 1 means
  // the contributions do not decay fast enough to be summable.
  const std::size_t m = blocks.size();
  // Needs a long scan (log x beyond 2^64) to separate slow convergence from divergence.
  if (m >= 64) {
    bool nonincreasing = true;
    bool slow = true;
    for (std::size_t i = m - 6; i < m; ++i) {
      const double ratio = blocks[i] / blocks[i - 1];
      if (ratio > 1.0 + 1e-9) nonincreasing = false;
      if (static_cast<double>(i) * (1.0 - ratio) >= 0.5) slow = false;
    }
    if (nonincreasing && slow) {
      out.kind = BlowupClass::global_existence;
      out.detail = "non-Cauchy tail: block contributions do not decay (Raabe statistic < 0.5)";
      return out;
    }
    const double ratio = blocks[m - 1] / blocks[m - 2];
    if (ratio < 1.0) out.tail_bound = blocks[m - 1] * ratio / (1.0 - ratio);
  }
  out.kind = BlowupClass::inconclusive;
  out.detail = "neither divergence nor Cauchy convergence established within log x <= " +
               format_double(s_max);
  return out;
}

std::vector<double> log_spaced(double lo, double hi, std::size_t count) {
  std::vector<double> out(count);
  if (count == 1) {
    out[0] = lo;
    return out;
  }
  const double a = std::log(lo), b = std::log(hi);
  for (std::size_t i = 0; i < count; ++i) {
    out[i] = std::exp(a + (b - a) * static_cast<double>(i) / static_cast<double>(count - 1));
  }
  out.front() = lo;
  out.back() = hi;
  return out;
}

AssumptionReport check_assumption_f(const Nonlinearity& n, std::span<const double> grid) {
  AssumptionReport base;
  base.grid.assign(grid.begin(), grid.end());
  auto fail = [&](AssumptionProperty p, double x, std::string why) {
    AssumptionReport r = base;
    r.checked_property = p;
    r.verdict = Verdict::fails;
    r.failing_point = x;
    r.detail = std::move(why);
    return r;
  };
  if (grid.empty()) {
    base.detail = "empty grid";
    return base;
  }
  std::vector<double> xs, lf, lf1;
  for (double x : grid) {
    if (x <= n.domain_floor()) continue;
    const double L = std::log(x);
    const double v = n.log_f(L);
    if (!(v > -std::numeric_limits<double>::infinity()) || std::isnan(v)) {
      return fail(AssumptionProperty::positivity, x, "f(x) is not positive");
    }
    xs.push_back(x);
    lf.push_back(v);
    lf1.push_back(n.log_f1(L));
  }
  for (std::size_t i = 1; i < xs.size(); ++i) {
    if (lf[i] < lf[i - 1] - 1e-12 * std::abs(lf[i - 1])) {
      return fail(AssumptionProperty::monotonicity, xs[i], "f decreases");
    }
  }
  const auto x0 = n.f1_monotone_from();
  if (!x0) {
    base.checked_property = AssumptionProperty::f1_monotone;
    base.detail = "threshold beyond which f/x increases is unknown";
    return base;
  }
  std::size_t first = 0;
  while (first < xs.size() && xs[first] < *x0) ++first;
  if (xs.size() - first < 2) {
    base.checked_property = AssumptionProperty::f1_monotone;
    base.detail = "grid ends before f1_monotone_from = " + format_double(*x0);
    return base;
  }
  for (std::size_t i = first + 1; i < xs.size(); ++i) {
    if (lf1[i] < lf1[i - 1] - 1e-12 * std::max(1.0, std::abs(lf1[i - 1]))) {
      return fail(AssumptionProperty::f1_monotone, xs[i], "f/x decreases beyond its threshold");
    }
  }
  if (!(lf1.back() - lf1[first] > std::log1p(1e-3))) {
    return fail(AssumptionProperty::f1_divergent, xs.back(), "f/x does not grow along the grid");
  }
  base.checked_property = AssumptionProperty::f1_divergent;
  base.verdict = Verdict::holds;
  return base;
}

AssumptionReport check_o_regular_variation(const Nonlinearity& n,
                                           std::span<const double> lambdas,
                                           std::span<const double> grid) {
  AssumptionReport r;
  r.checked_property = AssumptionProperty::orv;
  r.grid.assign(grid.begin(), grid.end());
  if (grid.size() < 4 || lambdas.empty()) {
    r.detail = "too few samples";
    return r;
  }
  const std::size_t start = grid.size() / 2;
  const double kLog2 = std::log(2.0);
  bool all_stable = true;
  for (double lambda : lambdas) {
    if (!(lambda > 1.0)) throw std::invalid_argument("ORV check needs lambda > 1");
    std::vector<double> lr;
    for (std::size_t i = start; i < grid.size(); ++i) {
      const double L = std::log(grid[i]);
      const double v = n.log_f(L + std::log(lambda)) - n.log_f(L);
      if (!std::isfinite(v)) {
        r.verdict = Verdict::fails;
        r.failing_point = grid[i];
        r.detail = "ratio f(lambda x)/f(x) is 0 or infinite";
        return r;
      }
      lr.push_back(v);
    }
    bool up = true, down = true;
    for (std::size_t i = 1; i < lr.size(); ++i) {
      if (lr[i] < lr[i - 1] - 1e-12) up = false;
      if (lr[i] > lr[i - 1] + 1e-12) down = false;
    }
    const double drift = lr.back() - lr.front();
    if ((up || down) && std::abs(drift) > kLog2) {
      r.verdict = Verdict::fails;
      r.failing_point = grid.back();
      std::ostringstream os;
      os << "ratio drifts monotonically to " << (drift > 0 ? "infinity" : "zero")
         << " for lambda = " << lambda;
      r.detail = os.str();
      return r;
    }
    const auto [mn, mx] = std::minmax_element(lr.begin(), lr.end());
    if (*mx - *mn > kLog2) all_stable = false;
  }
  r.verdict = all_stable ? Verdict::holds : Verdict::inconclusive;
  if (!all_stable) r.detail = "ratios oscillate without a stable tail";
  return r;
}

double superexp_ratio(const Nonlinearity& n, double eps, double t) {
  if (!(eps > 0.0 && eps < 1.0)) throw std::invalid_argument("superexp_ratio needs eps in (0,1)");
  const double lo = (1.0 - eps) * t;
  const double a = n.log_f(n.log_invert_F(lo));
  const double b = n.log_f(n.log_invert_F(t));
  return std::exp(a - b);
}

namespace catalog {
namespace {

/// log(e^L + e).
double log_x_plus_e(double L) { return log_add_exp(L, 1.0); }

}  // namespace

Nonlinearity power(double p) {
  if (!(p > 0.0)) throw std::invalid_argument("power nonlinearity needs p > 0");
  NonlinearityDefinition d;
  std::ostringstream os;
  os << "x^" << p;
  d.name = os.str();
  d.f = [p](double x) { return std::pow(x, p); };
  d.log_f1 = [p](double L) { return (p - 1.0) * L; };
  if (p >= 1.0) d.f1_monotone_from = 0.0;
  ClosedFormF cf;
  if (p == 1.0) {
    cf.F_of_log = [](double L) { return L; };
    cf.log_inverse = [](double u) { return u; };
  } else {
    cf.F_of_log = [p](double L) { return -std::expm1((1.0 - p) * L) / (p - 1.0); };
    cf.log_inverse = [p](double u) { return std::log1p(-(p - 1.0) * u) / (1.0 - p); };
  }
  if (p > 1.0) {
    cf.F_infinity = 1.0 / (p - 1.0);
    cf.tail_of_log = [p](double L) { return std::exp((1.0 - p) * L) / (p - 1.0); };
    cf.log_tail_inverse = [p](double w) { return std::log((p - 1.0) * w) / (1.0 - p); };
  } else if (p < 1.0) {
    cf.F_lower = -1.0 / (1.0 - p);
  }
  d.closed_form = cf;
  return Nonlinearity(std::move(d));
}

Nonlinearity shifted_xlogx() {
  static const Nonlinearity instance = [] {
    const double c = std::log(std::log1p(kE));
    NonlinearityDefinition d;
    d.name = "(x+e)log(x+e)";
    d.f = [](double x) { return (x + kE) * std::log(x + kE); };
    d.log_f1 = [](double L) {
      // log((x+e)/x) without cancelling against L.
      const double shift = L > -600.0 ? std::log1p(std::exp(1.0 - L)) : 1.0 - L;
      return shift + std::log(log_x_plus_e(L));
    };
    // d/dx f(x)/x > 0 iff x > e log(x+e), i.e. beyond x ~ 5.85.
    d.f1_monotone_from = 6.0;
    ClosedFormF cf;
    cf.F_of_log = [c](double L) { return std::log(log_x_plus_e(L)) - c; };
    cf.log_inverse = [c](double u) {
      const double E = std::exp(u + c);
      return log_sub_exp(E, 1.0);
    };
    cf.F_lower = -c;
    d.closed_form = cf;
    return Nonlinearity(std::move(d));
  }();
  return instance;
}

Nonlinearity xlog() {
  static const Nonlinearity instance = [] {
    NonlinearityDefinition d;
    d.name = "x log(x+e)";
    d.f = [](double x) { return x * std::log(x + kE); };
    d.log_f1 = [](double L) { return std::log(log_x_plus_e(L)); };
    d.f1_monotone_from = 0.0;
    NonlinearityDefinition copy = d;
    Nonlinearity n(std::move(copy));
    return n;
  }();
  return instance;
}

Nonlinearity xloglog() {
  static const Nonlinearity instance = [] {
    NonlinearityDefinition d;
    d.name = "x loglog(x+e^e)";
    d.f = [](double x) { return x * std::log(std::log(x + std::exp(kE))); };
    d.log_f1 = [](double L) { return std::log(std::log(log_add_exp(L, kE))); };
    d.f1_monotone_from = 0.0;
    return Nonlinearity(std::move(d));
  }();
  return instance;
}

Nonlinearity exponential() {
  static const Nonlinearity instance = [] {
    NonlinearityDefinition d;
    d.name = "e^x";
    d.f = [](double x) { return std::exp(x); };
    d.log_f1 = [](double L) { return std::exp(L) - L; };
    d.f1_monotone_from = 1.0;
    ClosedFormF cf;
    const double inv_e = std::exp(-1.0);
    cf.F_of_log = [inv_e](double L) { return inv_e - std::exp(-std::exp(L)); };
    cf.log_inverse = [inv_e](double u) { return std::log(-std::log(inv_e - u)); };
    cf.F_infinity = inv_e;
    cf.F_lower = inv_e - 1.0;
    cf.tail_of_log = [](double L) { return std::exp(-std::exp(L)); };
    cf.log_tail_inverse = [](double w) { return std::log(-std::log(w)); };
    d.closed_form = cf;
    return Nonlinearity(std::move(d));
  }();
  return instance;
}

std::vector<Nonlinearity> global_entries() { return {shifted_xlogx(), xlog(), xloglog()}; }

Nonlinearity by_name(const std::string& name, const std::map<std::string, double>& params) {
  if (name == "power") {
    auto it = params.find("p");
    if (it == params.end()) throw std::invalid_argument("power nonlinearity needs parameter p");
    return power(it->second);
  }
  if (name == "shifted_xlogx") return shifted_xlogx();
  if (name == "xlog") return xlog();
  if (name == "xloglog") return xloglog();
  if (name == "exp") return exponential();
  throw std::invalid_argument("unknown nonlinearity '" + name + "'");
}

}  // namespace catalog

Nonlinearity make_nonlinearity(std::string name, std::function<double(double)> f,
                               std::function<double(double)> log_f1, double domain_floor,
                               std::optional<double> f1_monotone_from) {
  NonlinearityDefinition d;
  d.name = std::move(name);
  d.f = std::move(f);
  d.log_f1 = std::move(log_f1);
  d.domain_floor = domain_floor;
  d.f1_monotone_from = f1_monotone_from;
  return Nonlinearity(std::move(d));
}

}  // namespace superlin
