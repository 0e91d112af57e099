#pragma once

// Independent reference computations used only by the tests: composite Simpson in
// long double, plain bisection, fixed-step RK4. Deliberately share no code with the library.

#include <cmath>
#include <functional>

namespace oracle {

using Real = long double;

inline Real simpson(const std::function<Real(Real)>& f, Real a, Real b, int n = 200000) {
  if (n % 2) ++n;
  const Real h = (b - a) / n;
  Real s = f(a) + f(b);
  for (int i = 1; i < n; ++i) s += f(a + i * h) * (i % 2 ? 4.0L : 2.0L);
  return s * h / 3.0L;
}

inline Real bisect(const std::function<Real(Real)>& g, Real lo, Real hi, int iters = 200) {
  Real glo = g(lo);
  for (int i = 0; i < iters; ++i) {
    const Real mid = 0.5L * (lo + hi);
    const Real gm = g(mid);
    if ((gm > 0) == (glo > 0)) {
      lo = mid;
      glo = gm;
    } else {
      hi = mid;
    }
  }
  return 0.5L * (lo + hi);
}

/// Fixed-step classical RK4 for y' = g(t, y) from (t0, y0) to t1.
inline Real rk4(const std::function<Real(Real, Real)>& g, Real t0, Real y0, Real t1, long n) {
  const Real h = (t1 - t0) / n;
  Real t = t0, y = y0;
  for (long i = 0; i < n; ++i) {
    const Real k1 = g(t, y);
    const Real k2 = g(t + h / 2, y + h * k1 / 2);
    const Real k3 = g(t + h / 2, y + h * k2 / 2);
    const Real k4 = g(t + h, y + h * k3);
    y += h * (k1 + 2 * k2 + 2 * k3 + k4) / 6;
    t = t0 + (i + 1) * h;
  }
  return y;
}

inline constexpr Real kE = 2.718281828459045235360287471352662498L;

/// F(x) = ∫_1^x du / ((u+e) log(u+e)) by Simpson.
inline Real shifted_F_by_quadrature(Real x) {
  return simpson([](Real u) { return 1.0L / ((u + kE) * std::log(u + kE)); }, 1.0L, x);
}

}  // namespace oracle
