#pragma once

#include <functional>

namespace superlin::numerics {

struct QuadTolerance {
  double abs = 1e-10;
  double rel = 1e-8;
};

struct QuadResult {
  double value = 0.0;
  double error = 0.0;
};

using ScalarFn = std::function<double(double)>;

/// Adaptive Gauss-Kronrod (7/15) on a finite interval.
/// Throws QuadratureError when the error estimate misses the tolerance.
[[nodiscard]] QuadResult integrate(const ScalarFn& f, double a, double b, QuadTolerance tol = {});

/// As `integrate`, but returns the best estimate instead of throwing.
[[nodiscard]] QuadResult integrate_unchecked(const ScalarFn& f, double a, double b,
                                             QuadTolerance tol = {});

/// ∫_a^b f for an integrand concentrated near `center` (a <= center <= b): pieces of
/// width w, 2w, 4w, ... on each side of the center, so a narrow peak is never straddled
/// by a coarse first rule.
[[nodiscard]] QuadResult integrate_around(const ScalarFn& f, double a, double b, double center,
                                          double width, QuadTolerance tol = {});

/// log ∫_a^b exp(phi(s)) ds for phi that may be astronomically large. The integrand is
/// shifted by its sampled maximum; a peak at an endpoint narrower than the floating-point
/// resolution of s is replaced by the endpoint Laplace term phi(p) - log|phi'(p)|.
[[nodiscard]] double log_integral_exp(const ScalarFn& phi, double a, double b,
                                      QuadTolerance tol = {1e-300, 1e-11});

/// Root of a function with a sign change on [lo, hi], bracket kept throughout
/// (TOMS 748). Stops when the bracket is within a few ulps or `max_iter` is hit.
[[nodiscard]] double solve_bracketed(const ScalarFn& g, double lo, double hi, double g_lo,
                                     double g_hi, int max_iter = 200);

/// Root of an increasing function. Starting at `guess`, expands a bracket
/// geometrically with initial width `step` before bracketed solving.
/// Throws RangeError when no sign change is found within `max_expansions`.
[[nodiscard]] double solve_increasing(const ScalarFn& g, double guess, double step,
                                      int max_expansions = 2000);

}  // namespace superlin::numerics
