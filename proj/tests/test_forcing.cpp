#include <cmath>
#include <numbers>
#include <random>
#include <thread>
#include <vector>

#include "doctest.h"
#include "oracles.hpp"
#include "superlin/errors.hpp"
#include "superlin/forcing.hpp"

using namespace superlin;
using doctest::Approx;

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kE = std::numbers::e;

/// t + 2 sin t through the quadrature path (no closed form).
Forcing wavy_quadrature() {
  ForcingDefinition d;
  d.name = "1+2cos";
  d.h = [](double t) { return 1.0 + 2.0 * std::cos(t); };
  return Forcing(std::move(d));
}

std::vector<double> uniform(double a, double b, int n) {
  std::vector<double> g(n + 1);
  for (int i = 0; i <= n; ++i) g[i] = a + (b - a) * i / n;
  return g;
}

}  // namespace

TEST_CASE("eval_H") {
  CHECK(forcing_catalog::constant(1.0).eval_H(3.0) == 3.0);
  const auto ex = forcing_catalog::exp_exp(2.0, 1.0);
  CHECK(ex.eval_H(0.0) == 0.0);
  // exp(exp(2 * 0.5)) - e = e^e - e.
  CHECK(ex.eval_H(0.5) == Approx(std::exp(kE) - kE).epsilon(1e-13));
  CHECK(ex.eval_H(0.5) == Approx(12.435).epsilon(1e-4));
  CHECK(forcing_catalog::cosine().eval_H(kPi) == Approx(0.0).epsilon(1e-15));
  CHECK_THROWS_AS(static_cast<void>(ex.eval_H(-1.0)), DomainError);

  // Log form far beyond the double range: log H = e^{2t} + log(1 - e^{1-e^{2t}}) ~ e^{2t}.
  const SignedLog big = ex.signed_log_H(30.0);
  CHECK(big.sign == 1);
  CHECK(big.log_abs == Approx(std::exp(60.0)).epsilon(1e-14));
}

TEST_CASE("quadrature H matches the closed form") {
  const auto f = wavy_quadrature();
  CHECK(!f.has_closed_form_H());
  for (double t : {0.001, 0.5, 1.0, 3.7, 10.0, 42.5}) {
    CHECK(f.eval_H(t) == Approx(t + 2.0 * std::sin(t)).epsilon(1e-10).scale(1.0));
  }
}

TEST_CASE("exp_exp forcing derivative agrees with H") {
  for (double alpha : {0.5, 1.0, 2.0}) {
    const auto f = forcing_catalog::exp_exp(2.0, alpha);
    for (double t : {0.3, 0.7, 1.1}) {
      const double dH = (f.eval_H(t + 1e-6) - f.eval_H(t - 1e-6)) / 2e-6;
      CHECK(f.eval_h(t) == Approx(dH).epsilon(1e-6));
      const ScaledForm* sf = f.scaled();
      REQUIRE(sf != nullptr);
      CHECK(sf->reference_rate(t) == Approx(f.eval_h(t) / f.eval_H(t)).epsilon(1e-12));
    }
  }
}

TEST_CASE("check_assumption_H") {
  CHECK(check_assumption_H(forcing_catalog::constant(1.0), uniform(0.0, 10.0, 20)).holds());
  const auto r = check_assumption_H(forcing_catalog::cosine(), uniform(0.0, 2.0 * kPi, 64));
  CHECK(r.fails());
  CHECK(r.failing_point > kPi);
  CHECK(r.failing_point < 2.0 * kPi);
  CHECK(check_assumption_H(forcing_catalog::exp_exp(2.0, 1.0), uniform(0.0, 30.0, 300)).holds());
}

TEST_CASE("increasing_majorant") {
  const auto grid = uniform(0.0, 3.0 * kPi / 2.0, 3000);
  const auto lin = increasing_majorant(forcing_catalog::constant(1.0), grid);
  for (double t : {0.5, 1.0, 4.0}) CHECK(lin.value(t) == Approx(t).epsilon(1e-12));

  const auto m = increasing_majorant(forcing_catalog::linear_plus_sine(), grid);
  CHECK(m.value(3.0 * kPi / 2.0) == Approx(3.0 * kPi / 2.0 - 1.0).epsilon(1e-9));

  // Brute-force running max of t + 2 sin t, which has decreasing stretches.
  const auto fine = uniform(0.0, 12.0, 12000);
  ForcingDefinition d;
  d.name = "t+2sin";
  d.h = [](double t) { return 1.0 + 2.0 * std::cos(t); };
  d.H = [](double t) { return t + 2.0 * std::sin(t); };
  const Forcing fw(std::move(d));
  const auto mw = increasing_majorant(fw, fine);
  double running = -1e300;
  for (double t : fine) {
    running = std::max(running, t + 2.0 * std::sin(t));
    CHECK(mw.value(t) == Approx(running).epsilon(1e-12));
    CHECK(mw.value(t) >= fw.eval_H(t) * (1 - 1e-12));
  }

  const auto z = increasing_majorant(forcing_catalog::zero(), grid);
  CHECK(z.value(2.0) == 0.0);
}

TEST_CASE("property: majorant is nondecreasing, dominates H, idempotent") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> amp(0.5, 3.0), freq(0.5, 4.0);
  for (int trial = 0; trial < 20; ++trial) {
    const double a = amp(rng), w = freq(rng);
    ForcingDefinition d;
    d.name = "random";
    d.h = [a, w](double t) { return 1.0 + a * w * std::cos(w * t); };
    d.H = [a, w](double t) { return t + a * std::sin(w * t); };
    const Forcing f(std::move(d));
    const auto grid = uniform(0.0, 20.0, 2000);
    const auto m = increasing_majorant(f, grid);
    std::vector<double> logs;
    bool ok = true;
    double prev = -std::numeric_limits<double>::infinity();
    for (double t : grid) {
      const double v = m.log_value(t);
      if (v < prev) ok = false;
      const double H = f.eval_H(t);
      if (H > 0 && v < std::log(H) - 1e-12) ok = false;
      prev = v;
      logs.push_back(v);
    }
    CHECK(ok);
    const auto again = increasing_majorant_of_logs(grid, logs);
    for (double t : grid) CHECK(again.log_value(t) == m.log_value(t));
  }
}

TEST_CASE("property: H additive across checkpoints") {
  const auto f = wavy_quadrature();
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 40.0);
  for (int i = 0; i < 50; ++i) {
    double t1 = u(rng), t2 = u(rng);
    if (t1 > t2) std::swap(t1, t2);
    const double ref = static_cast<double>(oracle::simpson(
        [](oracle::Real s) { return 1.0L + 2.0L * std::cos(s); }, t1, t2, 20000));
    CHECK(f.eval_H(t2) - f.eval_H(t1) == Approx(ref).epsilon(1e-9).scale(1.0));
  }
}

TEST_CASE("checkpoint cache under concurrent readers") {
  const auto f = wavy_quadrature();
  std::vector<double> results(8);
  std::vector<std::thread> pool;
  for (int i = 0; i < 8; ++i) {
    pool.emplace_back([&, i] { results[i] = f.eval_H(50.0 + i); });
  }
  for (auto& th : pool) th.join();
  for (int i = 0; i < 8; ++i) {
    const double t = 50.0 + i;
    CHECK(results[i] == Approx(t + 2.0 * std::sin(t)).epsilon(1e-10));
  }
}

TEST_CASE("sigma_envelope") {
  const LogSigma unit = [](double) { return 0.0; };
  const double tee = std::exp(kE);
  const auto s = sigma_envelope(unit, tee);
  CHECK(!s.boundary);
  CHECK(s.value.value() == Approx(std::sqrt(2.0 * tee)).epsilon(1e-10));
  CHECK(s.value.value() == Approx(5.5054).epsilon(1e-4));

  const auto b = sigma_envelope(unit, kE);
  CHECK(b.boundary);
  CHECK(b.value.value() == 0.0);

  try {
    static_cast<void>(sigma_envelope(unit, 1.0));
    FAIL("expected a domain error");
  } catch (const DomainError& e) {
    CHECK(std::string(e.what()).find("2.718281828") != std::string::npos);
  }
  CHECK(sigma_domain_start(unit) == Approx(kE).epsilon(1e-12));

  // σ = exp(e^s) at t = 2 against a long-double Simpson oracle.
  const LogSigma fast = [](double t) { return std::exp(t); };
  const oracle::Real shift = 2.0L * std::exp(2.0L);
  const oracle::Real I = oracle::simpson(
      [shift](oracle::Real u) { return std::exp(2.0L * std::exp(u) - shift); }, 0.0L, 2.0L,
      400000);
  const oracle::Real logV = shift + std::log(I);
  const double expected = static_cast<double>(0.5L * (std::log(2.0L) + logV + std::log(std::log(logV))));
  CHECK(log_variance(fast, 2.0) == Approx(static_cast<double>(logV)).epsilon(1e-12));
  CHECK(sigma_envelope(fast, 2.0).value.log() == Approx(expected).epsilon(1e-12));
}

TEST_CASE("property: sigma envelope increasing beyond its boundary") {
  for (const LogSigma& ls : {LogSigma([](double) { return 0.0; }),
                             LogSigma([](double t) { return std::exp(t); }),
                             LogSigma([](double t) { return 0.3 * std::sin(t); })}) {
    const double t0 = sigma_domain_start(ls);
    double prev = -std::numeric_limits<double>::infinity();
    bool ok = true;
    for (double t = t0 * 1.01; t < t0 + 10.0; t += 0.25) {
      const double v = sigma_envelope(ls, t).value.log();
      if (!(v > prev)) ok = false;
      prev = v;
    }
    CHECK(ok);
  }
}

TEST_CASE("sinusoidal envelope forcing") {
  const auto g = envelope_catalog::exp_exp();
  const auto f = sinusoidal_envelope(g);
  for (double t : {0.3, 1.0, 2.5, 4.0}) {
    const double dH = (f.eval_H(t + 1e-7) - f.eval_H(t - 1e-7)) / 2e-7;
    CHECK(f.eval_h(t) == Approx(dH).epsilon(1e-6));
  }
  // H/γ reaches ±1 at the grid points nearest π/2 + 2πk and 3π/2 + 2πk.
  for (int k = 0; k < 3; ++k) {
    const auto grid = uniform(2 * kPi * k, 2 * kPi * (k + 1), 4000);
    double hi = -2, lo = 2;
    for (double t : grid) {
      const SignedLog H = f.signed_log_H(t);
      const double r = H.sign * std::exp(H.log_abs - g.log_value(t));
      hi = std::max(hi, r);
      lo = std::min(lo, r);
    }
    const double res = 2 * kPi / 4000;
    CHECK(hi == Approx(1.0).epsilon(res * res));
    CHECK(lo == Approx(-1.0).epsilon(res * res));
  }
}

TEST_CASE("table forcing integrates its interpolant exactly") {
  const auto f = forcing_catalog::table({0.0, 1.0, 3.0}, {2.0, 0.0, 4.0});
  CHECK(f.eval_h(0.5) == Approx(1.0));
  CHECK(f.eval_H(1.0) == Approx(1.0));
  CHECK(f.eval_H(2.0) == Approx(1.0 + 1.0));
  CHECK(f.eval_H(3.0) == Approx(1.0 + 4.0));
  CHECK(f.eval_H(4.0) == Approx(5.0 + 4.0));
  CHECK_THROWS_AS(static_cast<void>(forcing_catalog::table({0.0, 0.0}, {1.0, 1.0})),
                  std::invalid_argument);
}
