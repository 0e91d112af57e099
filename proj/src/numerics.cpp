#include "superlin/numerics.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <queue>
#include <string>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/tools/toms748_solve.hpp>

#include "superlin/errors.hpp"
#include "superlin/magnitude.hpp"

namespace superlin {

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

namespace numerics {
namespace {

using Rule = boost::math::quadrature::gauss_kronrod<double, 15>;

struct Segment {
  double a, b, value, error;
  bool operator<(const Segment& o) const { return error < o.error; }
};

Segment apply_rule(const ScalarFn& f, double a, double b) {
  // Map to [-1, 1] explicitly: the rule's error output is not rescaled by every Boost release.
  const double mean = 0.5 * (a + b), half = 0.5 * (b - a);
  double err = 0.0;
  auto mapped = [&](double s) { return f(mean + half * s); };
  const double v = half * Rule::integrate(mapped, -1.0, 1.0, 0, 0.0, &err);
  err *= half;
  if (!std::isfinite(v)) {
    throw QuadratureError("non-finite integrand on [" + format_double(a) + ", " +
                              format_double(b) + "]",
                          std::numeric_limits<double>::infinity());
  }
  return {a, b, v, err};
}

constexpr int kMaxSegments = 4000;

}  // namespace

QuadResult integrate_unchecked(const ScalarFn& f, double a, double b, QuadTolerance tol) {
  if (a == b) return {};
  if (a > b) {
    QuadResult r = integrate_unchecked(f, b, a, tol);
    return {-r.value, r.error};
  }
  std::priority_queue<Segment> heap;
  Segment first = apply_rule(f, a, b);
  double value = first.value;
  double error = first.error;
  heap.push(first);
  int count = 1;
  while (error > std::max(tol.abs, tol.rel * std::abs(value)) && count < kMaxSegments) {
    Segment worst = heap.top();
    const double mid = 0.5 * (worst.a + worst.b);
    if (!(mid > worst.a && mid < worst.b)) break;  // interval exhausted at double resolution
    heap.pop();
    Segment left = apply_rule(f, worst.a, mid);
    Segment right = apply_rule(f, mid, worst.b);
    value += left.value + right.value - worst.value;
    error += left.error + right.error - worst.error;
    heap.push(left);
    heap.push(right);
    ++count;
  }
  // Re-sum to shed accumulated cancellation in the running totals.
  double v = 0.0, e = 0.0;
  while (!heap.empty()) {
    v += heap.top().value;
    e += heap.top().error;
    heap.pop();
  }
  return {v, e};
}

QuadResult integrate(const ScalarFn& f, double a, double b, QuadTolerance tol) {
  QuadResult r = integrate_unchecked(f, a, b, tol);
  // Tolerance slack: the GK error estimate is pessimistic for smooth integrands.
  if (r.error > 10.0 * std::max(tol.abs, tol.rel * std::abs(r.value))) {
    throw QuadratureError("quadrature did not converge on [" + format_double(a) + ", " +
                              format_double(b) + "], error estimate " + format_double(r.error),
                          r.error);
  }
  return r;
}

QuadResult integrate_around(const ScalarFn& f, double a, double b, double center, double width,
                            QuadTolerance tol) {
  QuadResult total;
  auto sweep = [&](double from, double to) {
    const double dir = to > from ? 1.0 : -1.0;
    double w = width, x = from;
    while (dir * (to - x) > 0.0) {
      const double next = dir * (to - x) <= w ? to : x + dir * w;
      const QuadResult piece = integrate(f, std::min(x, next), std::max(x, next), tol);
      total.value += piece.value;
      total.error += piece.error;
      x = next;
      w *= 2.0;
    }
  };
  sweep(center, b);
  sweep(center, a);
  return total;
}

double log_integral_exp(const ScalarFn& phi, double a, double b, QuadTolerance tol) {
  constexpr double kInf = std::numeric_limits<double>::infinity();
  if (!(b > a)) return -kInf;
  constexpr int kSamples = 64;
  double m = -kInf, peak = a;
  int at = 0;
  for (int i = 0; i <= kSamples; ++i) {
    const double s = i == kSamples ? b : a + (b - a) * i / kSamples;
    const double v = phi(s);
    if (std::isnan(v)) throw DomainError("log integrand is NaN at s = " + format_double(s));
    if (v > m) m = v, peak = s, at = i;
  }
  if (m == -kInf) return -kInf;
  if (m == kInf) throw OverflowError("log integrand is infinite");
  // Slope at the peak: Richardson-corrected one-sided difference at an endpoint.
  const double d = 1e-6 * std::max(1.0, std::abs(peak));
  double slope;
  if (at == kSamples || at == 0) {
    const double dir = at == 0 ? 1.0 : -1.0;
    if (b - a < 2 * d) {
      slope = 0.0;
    } else {
      const double d1 = (phi(peak + dir * d) - m) / d;
      const double d2 = (phi(peak + dir * d / 2) - m) / (d / 2);
      slope = std::abs(2.0 * d2 - d1);
    }
  } else {
    const double lo = std::max(a, peak - d), hi = std::min(b, peak + d);
    slope = std::abs((phi(hi) - phi(lo)) / (hi - lo));
  }
  const double width = std::min(b - a, 1.0 / std::max(slope, 1e-300)) * 0.5;
  const double resolution = 1e-10 * std::max(1.0, std::abs(peak));
  if (width < resolution) {
    if (at != 0 && at != kSamples) {
      throw QuadratureError("interior peak narrower than the resolution of s", kInf);
    }
    return m - std::log(slope);
  }
  // phi carries absolute rounding error ~ eps |m|, which bounds the attainable accuracy.
  tol.rel = std::max(tol.rel, 64.0 * std::numeric_limits<double>::epsilon() * std::abs(m));
  tol.abs = std::max(tol.abs, 1e-13 * width);
  auto g = [&](double s) { return std::exp(phi(s) - m); };
  return m + std::log(integrate_around(g, a, b, peak, width, tol).value);
}

double solve_bracketed(const ScalarFn& g, double lo, double hi, double g_lo, double g_hi,
                       int max_iter) {
  if (g_lo == 0.0) return lo;
  if (g_hi == 0.0) return hi;
  if ((g_lo > 0) == (g_hi > 0)) {
    throw RangeError("root not bracketed", hi);
  }
  std::uintmax_t iters = static_cast<std::uintmax_t>(max_iter);
  auto tol = [](double a, double b) {
    return std::abs(b - a) <= 4.0 * std::numeric_limits<double>::epsilon() *
                                  std::max(std::abs(a), std::abs(b)) ||
           std::abs(b - a) <= std::numeric_limits<double>::min();
  };
  auto [a, b] = boost::math::tools::toms748_solve(g, lo, hi, g_lo, g_hi, tol, iters);
  return 0.5 * (a + b);
}

double solve_increasing(const ScalarFn& g, double guess, double step, int max_expansions) {
  double g0 = g(guess);
  if (g0 == 0.0) return guess;
  step = std::abs(step) > 0 ? std::abs(step) : 1.0;
  const double dir = g0 < 0 ? 1.0 : -1.0;
  double prev = guess, gprev = g0;
  for (int i = 0; i < max_expansions; ++i) {
    const double next = guess + dir * step;
    const double gn = g(next);
    if (std::isnan(gn)) throw RangeError("function undefined while bracketing", next);
    if ((gn > 0) != (gprev > 0) || gn == 0.0) {
      return dir > 0 ? solve_bracketed(g, prev, next, gprev, gn)
                     : solve_bracketed(g, next, prev, gn, gprev);
    }
    prev = next;
    gprev = gn;
    step *= 2.0;
    if (!std::isfinite(next)) break;
  }
  throw RangeError("no sign change found while bracketing", prev);
}

}  // namespace numerics
}  // namespace superlin
