#include <chrono>
#include <cmath>
#include <numbers>
#include <sstream>

#include "doctest.h"
#include "oracles.hpp"
#include "superlin/errors.hpp"
#include "superlin/integrator.hpp"

using namespace superlin;
using doctest::Approx;

namespace {

constexpr double kPi = std::numbers::pi;

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

/// Blow-up time of x' = x^3 + t, x(0) = 1, from dt/dw = -1 / (1 + t (2w)^{3/2}) on
/// w = 1/(2x^2) running from 1/2 to 0. Richardson-extrapolated RK4.
oracle::Real cubic_blowup_oracle() {
  auto g = [](oracle::Real w, oracle::Real t) {
    const oracle::Real ww = std::max(w, 0.0L);
    return -1.0L / (1.0L + t * std::pow(2.0L * ww, 1.5L));
  };
  // Integrate in w from 0.5 down to 0: reversed orientation handled by the sign of the step.
  const oracle::Real a = oracle::rk4(g, 0.5L, 0.0L, 0.0L, 40000);
  const oracle::Real b = oracle::rk4(g, 0.5L, 0.0L, 0.0L, 80000);
  return b + (b - a) / 15.0L;
}

}  // namespace

TEST_CASE("x^2 without forcing blows up at 1") {
  const auto start = std::chrono::steady_clock::now();
  const auto n = catalog::power(2.0);
  const auto traj = integrate(n, forcing_catalog::zero(), 1.0, 5.0);
  REQUIRE(traj.blew_up);
  REQUIRE(traj.blowup.has_value());
  CHECK(traj.blowup->T_hat == Approx(1.0).epsilon(1e-4));
  CHECK(std::abs(traj.blowup->T_hat - 1.0) < 1e-9);
  CHECK(traj.blowup->T_threshold == Approx(1.0).epsilon(1e-4));
  CHECK(std::abs(traj.blowup->T_tail - traj.blowup->T_threshold) < 1e-3);
  CHECK(std::exp(traj.log_x_at(0.5)) == Approx(2.0).epsilon(1e-7));
  CHECK(tail_ratio_at(traj, n, traj.blowup->T_hat, 1e-3) == Approx(1.0).epsilon(1e-2));
  CHECK(seconds_since(start) < 1.0);
}

TEST_CASE("x^2 + 1 blows up at pi/4") {
  const auto n = catalog::power(2.0);
  const auto traj = integrate(n, forcing_catalog::constant(1.0), 1.0, 5.0);
  REQUIRE(traj.blowup.has_value());
  CHECK(traj.blowup->T_hat == Approx(kPi / 4).epsilon(1e-4));
  CHECK(std::abs(traj.blowup->T_hat - kPi / 4) < 1e-9);
  CHECK(std::exp(traj.log_x_at(kPi / 8)) == Approx(2.414214).epsilon(1e-6));
  CHECK(std::exp(traj.log_x_at(kPi / 8)) == Approx(std::tan(3 * kPi / 8)).epsilon(1e-9));
  const double ratio = tail_ratio_at(traj, n, traj.blowup->T_hat, 1e-3);
  CHECK(ratio == Approx(1.0).epsilon(1e-2));
  for (const auto& [t, r] : traj.blowup->tail_ratio_samples) CHECK(r == Approx(1.0).epsilon(1e-2));

  std::ostringstream os;
  write_trajectory_csv(os, traj);
  const std::string csv = os.str();
  CHECK(csv.rfind("t,x_or_u,mode,H\n", 0) == 0);
  CHECK(csv.find("# T_hat=0.78539816") != std::string::npos);
  CHECK(csv.find("method=tail_integral") != std::string::npos);
}

TEST_CASE("x^3 + t against a Richardson RK4 oracle") {
  const auto traj = integrate(catalog::power(3.0), forcing_catalog::power(1.0, 1.0), 1.0, 2.0);
  REQUIRE(traj.blowup.has_value());
  const double T = static_cast<double>(cubic_blowup_oracle());
  CHECK(traj.blowup->T_hat == Approx(T).epsilon(1e-8));

  // Moderate x from a direct RK4 oracle.
  const double x02 = static_cast<double>(
      oracle::rk4([](oracle::Real t, oracle::Real x) { return x * x * x + t; }, 0.0L, 1.0L, 0.2L, 20000));
  CHECK(std::exp(traj.log_x_at(0.2)) == Approx(x02).epsilon(1e-8));
}

TEST_CASE("direct-only mode agrees with the tail chart") {
  IntegrateOptions o;
  o.direct_only = true;
  const auto n = catalog::power(2.0);
  const auto traj = integrate(n, forcing_catalog::constant(1.0), 1.0, 5.0, o);
  REQUIRE(traj.blowup.has_value());
  CHECK(traj.mode() == "direct");
  CHECK(traj.blowup->T_hat == Approx(kPi / 4).epsilon(1e-8));
  CHECK(std::abs(traj.blowup->T_hat - traj.blowup->T_threshold) < 1e-3);
}

TEST_CASE("autonomous identity in transformed coordinates") {
  const auto start = std::chrono::steady_clock::now();
  for (const auto& n : catalog::global_entries()) {
    for (double psi : {0.5, 2.0}) {
      CAPTURE(n.name());
      CAPTURE(psi);
      const auto traj = integrate_transformed(n, forcing_catalog::zero(), psi, 100.0);
      CHECK(traj.mode() == "F_transformed");
      const double F0 = n.compute_F(psi);
      double worst = 0;
      for (const auto& p : traj.points) worst = std::max(worst, std::abs(p.u - F0 - p.t));
      CHECK(worst <= 1e-6);
      CHECK(traj.u_at(37.3) == Approx(F0 + 37.3).epsilon(1e-10));
    }
  }
  CHECK(seconds_since(start) < 1.0);
  CHECK_THROWS_AS(static_cast<void>(integrate_transformed(catalog::power(2.0),
                                                          forcing_catalog::zero(), 1.0, 1.0)),
                  PreconditionError);
}

TEST_CASE("shifted x log x without forcing follows F^{-1}(F(psi) + t)") {
  const auto n = catalog::shifted_xlogx();
  const auto traj = integrate(n, forcing_catalog::zero(), 1.0, 40.0);
  CHECK(!traj.blew_up);
  // F(x) = log log(x+e) - log log(1+e), so x(t) = exp(e^t log(1+e)) - e.
  for (double t : {1.0, 3.0, 5.0}) {
    CHECK(traj.log_x_at(t) ==
          Approx(std::log(std::exp(std::exp(t) * std::log1p(std::numbers::e)) - std::numbers::e))
              .epsilon(1e-9));
    CHECK(traj.log_x_at(t) == Approx(n.log_invert_F(n.compute_F(1.0) + t)).epsilon(1e-9));
  }
  CHECK(traj.u_at(40.0) == Approx(40.0).epsilon(1e-9));
}

TEST_CASE("example family alpha = 1: x grows like H") {
  const auto n = catalog::shifted_xlogx();
  const auto fc = forcing_catalog::exp_exp(2.0, 1.0);
  const auto traj = integrate(n, fc, 1.0, 30.0);
  CHECK(!traj.blew_up);
  const double u30 = traj.u_at(30.0);
  CHECK(u30 / 30.0 >= 1.8);
  CHECK(u30 / 30.0 <= 2.2);
  // x/H stays bounded and exceeds 1.
  for (double t : {10.0, 20.0, 30.0}) {
    const double r = traj.x_over_H_at(t);
    CHECK(r > 1.0);
    CHECK(r < 3.0);
  }
  bool ever_relative = false;
  for (const auto& p : traj.points) ever_relative |= p.chart == Chart::H_relative;
  CHECK(ever_relative);
}

TEST_CASE("example family alpha = 0.5: F(x)/t tends to 1") {
  const auto n = catalog::shifted_xlogx();
  const auto fc = forcing_catalog::exp_exp(2.0, 0.5);
  const auto traj = integrate_transformed(n, fc, 1.0, 50.0);
  const double r = traj.u_at(50.0) / 50.0;
  CHECK(r >= 0.9);
  CHECK(r <= 1.1);
  const auto mixed = integrate(n, fc, 1.0, 50.0);
  CHECK(mixed.u_at(50.0) == Approx(traj.u_at(50.0)).epsilon(1e-6));
}

TEST_CASE("example family alpha = 2: x/H tends to 1") {
  const auto n = catalog::shifted_xlogx();
  const auto fc = forcing_catalog::exp_exp(2.0, 2.0);
  const auto traj = integrate(n, fc, 1.0, 18.0);
  for (double t : {16.2, 17.0, 18.0}) {
    CHECK(traj.x_over_H_at(t) == Approx(1.0).epsilon(0.02));
  }
  // x/H - 1 is about 1/(4t - 1) here.
  CHECK(traj.x_over_H_at(18.0) - 1.0 == Approx(1.0 / 71.0).epsilon(0.1));
}

TEST_CASE("property: x stays above psi and above H for nonnegative h") {
  const auto n = catalog::shifted_xlogx();
  for (const auto& fc : {forcing_catalog::zero(), forcing_catalog::constant(2.0),
                         forcing_catalog::power(1.0, 0.5), forcing_catalog::exp_exp(2.0, 1.0)}) {
    for (double psi : {0.25, 1.0, 3.0}) {
      CAPTURE(fc.name());
      CAPTURE(psi);
      const auto traj = integrate(n, fc, psi, 8.0);
      bool ok = true;
      for (const auto& p : traj.points) {
        if (p.t == 0.0) continue;
        if (p.sign <= 0 || p.log_abs_x <= std::log(psi)) ok = false;
        if (p.H.sign > 0 && p.log_abs_x <= p.H.log_abs) ok = false;
      }
      CHECK(ok);
    }
  }
}

TEST_CASE("tolerance halving converges") {
  const auto n = catalog::shifted_xlogx();
  for (double alpha : {0.5, 1.0, 2.0}) {
    CAPTURE(alpha);
    const auto fc = forcing_catalog::exp_exp(2.0, alpha);
    const double horizon = alpha == 2.0 ? 18.0 : 30.0;
    IntegrateOptions loose, tight;
    loose.rel_tol = 1e-8;
    tight.rel_tol = 0.5e-8;
    const auto a = integrate(n, fc, 1.0, horizon, loose);
    const auto b = integrate(n, fc, 1.0, horizon, tight);
    const auto c = integrate(n, fc, 1.0, horizon);
    // x/H where it stays finite, F(x)/t otherwise.
    auto metric = [&](const Trajectory& tr) {
      return alpha == 0.5 ? tr.u_at(horizon) / horizon : tr.x_over_H_at(horizon);
    };
    const double dab = std::abs(metric(a) - metric(c));
    const double dbc = std::abs(metric(b) - metric(c));
    CHECK(dab < 1e-5);
    CHECK(dbc <= dab + 1e-9);
  }
}

TEST_CASE("signed drift through the H-relative chart") {
  SignedDrift lin;
  lin.name = "x";
  lin.f = [](double x) { return x; };
  lin.ratio = [](int, double) { return SignedLog{1, 0.0}; };
  // x' = x + h with H = exp(exp(2t)) - e: compare at moderate t with direct integration.
  const auto fc = forcing_catalog::exp_exp(2.0, 1.0);
  const auto traj = integrate_signed(lin, fc, 1.0, 3.0);
  const double ref = static_cast<double>(oracle::rk4(
      [](oracle::Real t, oracle::Real x) {
        return x + 2.0L * std::exp(2.0L * t) * std::exp(std::exp(2.0L * t));
      },
      0.0L, 1.0L, 1.5L, 200000));
  CHECK(std::exp(traj.log_x_at(1.5)) == Approx(ref).epsilon(1e-7));
  CHECK(std::isfinite(traj.x_over_H_at(3.0)));
}

TEST_CASE("rescale_time") {
  const auto fc = forcing_catalog::constant(1.0);
  const auto two = rescale_time([](double) { return 2.0; }, fc, 10.0);
  CHECK(two.A(3.0) == Approx(6.0).epsilon(1e-12));
  CHECK(two.A_inverse(6.0) == Approx(3.0).epsilon(1e-10));
  CHECK(two.transformed.eval_h(6.0) == Approx(0.5).epsilon(1e-10));
  CHECK(two.transformed.eval_H(6.0) == Approx(3.0).epsilon(1e-10));

  const auto one = rescale_time([](double) { return 1.0; }, fc, 10.0);
  for (double t : {0.5, 2.0, 7.0}) {
    CHECK(one.transformed.eval_H(t) == Approx(fc.eval_H(t)).epsilon(1e-10));
    CHECK(one.transformed.eval_h(t) == Approx(fc.eval_h(t)).epsilon(1e-10));
  }
  const auto grow = rescale_time([](double t) { return 1.0 + t; }, fc, 10.0);
  CHECK(grow.A(2.0) == Approx(4.0).epsilon(1e-12));
  CHECK(grow.A_inverse(4.0) == Approx(2.0).epsilon(1e-10));

  CHECK_THROWS_AS(static_cast<void>(rescale_time([](double t) { return 1.0 - t; }, fc, 10.0)),
                  DomainError);
}

TEST_CASE("invalid inputs") {
  const auto n = catalog::power(2.0);
  CHECK_THROWS_AS(static_cast<void>(integrate(n, forcing_catalog::zero(), -1.0, 1.0)), PreconditionError);
  CHECK_THROWS_AS(static_cast<void>(integrate(n, forcing_catalog::zero(), 1.0, 0.0)), PreconditionError);
  const auto g = integrate(catalog::shifted_xlogx(), forcing_catalog::zero(), 1.0, 2.0);
  CHECK_THROWS_AS(static_cast<void>(estimate_blowup_time(g, catalog::shifted_xlogx())),
                  PreconditionError);
  CHECK_THROWS_AS(static_cast<void>(g.log_x_at(3.0)), DomainError);
}
