// Acceptance criteria. Usage: acceptance [id-prefix...], e.g. `acceptance 3` or `acceptance 6c`.
// Prints one PASS/FAIL line per criterion and exits 1 when any selected criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstring>
#include <functional>
#include <iostream>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "superlin/classifier.hpp"
#include "superlin/comparison.hpp"
#include "superlin/sde.hpp"

using namespace superlin;

namespace {

struct Line {
  bool pass;
  std::string text;
};

std::string fmt(double v, int digits = 6) {
  std::ostringstream os;
  os.precision(digits);
  os << v;
  return os.str();
}

class Clock {
 public:
  [[nodiscard]] double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

Line runtime(const Clock& c, double limit) {
  const double s = c.seconds();
  return {s < limit, "runtime " + fmt(s, 3) + " s (limit " + fmt(limit) + " s)"};
}

Forcing example(double alpha) { return forcing_catalog::exp_exp(2.0, alpha); }

// 1. Blow-up exactness.
std::vector<Line> blowup_exactness() {
  std::vector<Line> out;
  const auto sq = catalog::power(2.0);
  struct Case {
    const char* label;
    Forcing fc;
    double exact;
  };
  const std::vector<Case> cases{{"h = 0", forcing_catalog::zero(), 1.0},
                                {"h = 1", forcing_catalog::constant(1.0), std::numbers::pi / 4}};
  for (const auto& c : cases) {
    const Clock clock;
    const auto traj = integrate(sq, c.fc, 1.0, 2.0);
    const double secs = clock.seconds();
    if (!traj.blowup) {
      out.push_back({false, std::string("x^2, ") + c.label + ": no blow-up detected"});
      continue;
    }
    const double T = traj.blowup->T_hat;
    const double rel = std::abs(T - c.exact) / c.exact;
    const double ratio = tail_ratio_at(traj, sq, T, 1e-3);
    out.push_back({rel <= 1e-4, std::string("x^2, ") + c.label + ": T_hat = " + fmt(T, 10) +
                                    ", exact " + fmt(c.exact, 10) + ", rel err " + fmt(rel, 3) +
                                    " (tol 1e-4)"});
    out.push_back({std::abs(ratio - 1.0) <= 0.01, std::string("x^2, ") + c.label +
                                                      ": tail ratio at T_hat - t = 1e-3 is " +
                                                      fmt(ratio, 8) + " (tol 1%)"});
    out.push_back({secs < 1.0, std::string("x^2, ") + c.label + ": runtime " + fmt(secs, 3) +
                                   " s (limit 1 s)"});
  }
  return out;
}

// 2. Autonomous identity F(x(t)) - F(psi) = t.
std::vector<Line> autonomous_identity() {
  const Clock clock;
  double worst = 0.0;
  std::string where;
  for (const auto& n : catalog::global_entries()) {
    for (double psi : {0.5, 2.0}) {
      const auto traj = integrate_transformed(n, forcing_catalog::zero(), psi, 100.0);
      const double F0 = n.compute_F(psi);
      auto times = traj.times();
      for (int i = 0; i <= 1000; ++i) times.push_back(0.1 * i);
      for (double t : times) {
        const double d = std::abs(traj.u_at(t) - F0 - t);
        if (d > worst) {
          worst = d;
          where = n.name() + ", psi = " + fmt(psi) + ", t = " + fmt(t);
        }
      }
    }
  }
  return {{worst <= 1e-6, "max |F(x(t)) - F(psi) - t| over t <= 100 = " + fmt(worst, 3) +
                              " at " + where + " (tol 1e-6)"},
          runtime(clock, 1.0)};
}

// 3. The shifted x log x family with H = exp(exp(2 t^alpha)) - e.
std::vector<Line> examples_reproduction() {
  std::vector<Line> out;
  const Clock clock;
  const auto n = catalog::shifted_xlogx();

  {
    const auto fc = example(0.5);
    const auto traj = integrate_transformed(n, fc, 1.0, 50.0);
    const double ratio = traj.u_at(50.0) / 50.0;
    out.push_back({ratio >= 0.9 && ratio <= 1.1,
                   "3a alpha = 0.5: u(50)/50 = " + fmt(ratio) + " (band [0.9, 1.1])"});
    const auto rep = diagnostics(n, fc, 50.0);
    out.push_back({rep.K_trend == Trend::decreasing,
                   std::string("3a alpha = 0.5: K(t) trend ") + to_string(rep.K_trend) +
                       ", K(50) = " + fmt(rep.K_samples.back().second) + " (expect decreasing)"});
  }
  {
    const auto fc = example(1.0);
    const auto traj = integrate(n, fc, 1.0, 30.0);
    const double ratio = traj.u_at(30.0) / 30.0;
    out.push_back({ratio >= 1.8 && ratio <= 2.2,
                   "3b alpha = 1: u(30)/30 = " + fmt(ratio) + " (band [1.8, 2.2])"});
    const auto rep = diagnostics(n, fc, 30.0);
    out.push_back({rep.regime == Regime::SharedGrowth && rep.K_hat >= 1.9 && rep.K_hat <= 2.1,
                   std::string("3b alpha = 1: regime ") + to_string(rep.regime) + ", K_hat = " +
                       fmt(rep.K_hat) + " (expect SharedGrowth, [1.9, 2.1])"});
  }
  {
    const double h = 18.0;
    const auto fc = example(2.0);
    const auto rep = diagnostics(n, fc, h);
    double R_tail = 0.0;
    for (const auto& [t, R] : rep.R_samples) {
      if (t >= 0.75 * h) R_tail = std::max(R_tail, R);
    }
    out.push_back({rep.regime == Regime::ForcingDominated && R_tail < 0.05,
                   std::string("3c alpha = 2: regime ") + to_string(rep.regime) +
                       ", max R on [13.5, 18] = " + fmt(R_tail) +
                       " (expect ForcingDominated, < 0.05)"});
    const auto traj = integrate(n, fc, 1.0, h);
    double lo = INFINITY, hi = -INFINITY;
    for (int i = 0; i <= 400; ++i) {
      const double t = 0.75 * h + 0.25 * h * i / 400.0;
      const double r = traj.x_over_H_at(t);
      lo = std::min(lo, r);
      hi = std::max(hi, r);
    }
    out.push_back({lo >= 0.98 && hi <= 1.02, "3c alpha = 2: x/H on [13.5, 18] in [" + fmt(lo) +
                                                 ", " + fmt(hi) + "] (band [0.98, 1.02])"});
  }
  out.push_back(runtime(clock, 10.0));
  return out;
}

// 4. Comparison orderings.
std::vector<Line> comparison_orderings() {
  std::vector<Line> out;
  const Clock clock;
  int combos = 0, held = 0;
  std::string first_failure;
  for (const auto& n : {catalog::shifted_xlogx(), catalog::xlog(), catalog::xloglog(),
                        catalog::power(2.0)}) {
    for (const auto& fc : {forcing_catalog::zero(), forcing_catalog::constant(1.0),
                           forcing_catalog::power(1.0, 2.0)}) {
      ++combos;
      const auto b = build_bundle(n, fc, 1.0, 5.0, std::numeric_limits<double>::quiet_NaN(), 0.1, {});
      const auto v = check_ordering(b);
      if (v.pass) {
        ++held;
      } else if (first_failure.empty()) {
        first_failure = " first failure " + n.name() + " / " + fc.name() + ": " + v.detail;
      }
    }
  }
  out.push_back({combos >= 9 && held == combos, "x_- < x holds in " + std::to_string(held) + " of " +
                                                    std::to_string(combos) + " combinations" +
                                                    first_failure});

  const auto n = catalog::shifted_xlogx();
  const auto fc = example(1.0);
  for (double eps : {0.5, 0.1}) {
    const auto b = build_bundle(n, fc, 1.0, 12.0, 2.0, eps, {});
    const auto v = check_ordering(b);
    out.push_back({v.pass && b.has_explicit_upper,
                   "alpha = 1, eps = " + fmt(eps) + ": T1 = " + fmt(b.params.T1) + ", " + v.detail});
  }
  BundleOptions swapped;
  swapped.lower_start_factor = 2.0;
  const auto bad = check_ordering(build_bundle(n, fc, 1.0, 12.0, 2.0, 0.1, swapped));
  out.push_back({!bad.pass, "negative control (x_-(0) = 2 psi) rejected: " + bad.detail});
  out.push_back(runtime(clock, 5.0));
  return out;
}

// 5. Whenever x/H -> 1 is confirmed, ∫ f(H)/H decreases on the tail.
std::vector<Line> converse_property() {
  const auto n = catalog::shifted_xlogx();
  const auto fc = example(2.0);
  const double h = 18.0;
  const auto rep = diagnostics(n, fc, h);
  const auto traj = integrate(n, fc, 1.0, h);
  VerifyOptions tight;
  tight.rel_tol = 0.02;
  const auto v = verify_growth(traj, n, fc, predict(rep), tight);
  const Trend trend = tail_trend(rep.R1_samples, 0.75 * h);
  const bool ok = !v.pass || trend == Trend::decreasing;
  return {{ok && v.pass, std::string("alpha = 2: x/H -> 1 ") + (v.pass ? "confirmed" : "not confirmed") +
                             ", R1 tail " + to_string(trend) + ", R1(18) = " +
                             fmt(rep.R1_samples.back().second)}};
}

// 6. Fluctuating forcing H = exp(e^t) sin t.
std::vector<Line> fluctuation() {
  const Clock clock;
  const auto fs = sde_presets::xloglog();
  const auto gamma = envelope_catalog::exp_exp();
  const auto g = check_gamma_condition(fs.phi, gamma, 2.0, 6.0);
  FluctuationCheckOptions o;
  o.window_start = 4.0;
  const auto r = verify_fluctuation(fs, sinusoidal_envelope(gamma), gamma, 1.0, 6.0, o);
  const bool extremes = std::abs(r.sup_ratio - 1.0) <= 0.1 && std::abs(r.inf_ratio + 1.0) <= 0.1;
  return {{g.pass, "6a gamma condition at horizon 6: " + g.detail},
          {std::abs(r.diff_at_end) < 0.05,
           "6b |(x - H)/gamma|(6) = " + fmt(std::abs(r.diff_at_end)) + " (tol 0.05)"},
          {extremes, "6c sup x/gamma on [4, 6] = " + fmt(r.sup_ratio) + ", inf = " +
                         fmt(r.inf_ratio) + " (tol 0.1 of +1/-1; sin t <= sin 6 = " +
                         fmt(std::sin(6.0)) + " on [4, 6])"},
          runtime(clock, 5.0)};
}

// 7. Monte Carlo substitutes for the almost-sure statements.
std::vector<Line> sde_desk_scale() {
  std::vector<Line> out;
  const Clock clock;
  {
    EnsembleOptions o;
    o.paths = 200;
    o.grid.dt_max = 1.0;
    const auto e = run_ensemble(sde_presets::zero_drift(), sde_presets::unit_sigma(), 0.0, 1e4, 7, o);
    const auto s = fluctuation_stats(e, std::exp(std::numbers::e));
    const double med = s.max_quartiles[1];
    out.push_back({med >= 0.7 && med <= 1.1,
                   "7a Brownian baseline, 200 paths on [e^e, 1e4]: median running max X/Sigma = " +
                       fmt(med) + " (band [0.7, 1.1])"});
  }
  {
    const auto e = run_ensemble(sde_presets::xloglog(), sde_presets::exp_exp_sigma(), 0.0, 5.0, 42);
    const auto s = fluctuation_stats(e, sde_presets::kExpExpWindowStart);
    const auto& q = s.max_quartiles;
    out.push_back({q[0] >= 0.5 && q[2] <= 1.5 && s.truncated_paths == 0,
                   "7b x loglog x, sigma = exp(e^s), 100 paths on [2, 5]: running max X/Sigma q25 = " +
                       fmt(q[0]) + ", q50 = " + fmt(q[1]) + ", q75 = " + fmt(q[2]) +
                       ", truncated " + std::to_string(s.truncated_paths) + " (band [0.5, 1.5])"});
  }
  {
    bool same = true;
    std::vector<PathEnsemble> runs;
    for (unsigned threads : {1u, 3u, 8u}) {
      EnsembleOptions o;
      o.paths = 24;
      o.threads = threads;
      runs.push_back(run_ensemble(sde_presets::xloglog(), sde_presets::exp_exp_sigma(), 0.0, 5.0, 9, o));
    }
    for (std::size_t k = 1; k < runs.size(); ++k) {
      for (std::size_t i = 0; i < runs[0].paths.size(); ++i) {
        const auto& a = runs[0].paths[i].x;
        const auto& b = runs[k].paths[i].x;
        same &= a.size() == b.size() &&
                std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
      }
    }
    out.push_back({same, "7c seed 9, 24 paths: bit-identical under 1, 3 and 8 threads"});
  }
  out.push_back(runtime(clock, 60.0));
  return out;
}

// 8. Numerical self-consistency.
std::vector<Line> self_consistency() {
  std::vector<Line> out;
  const Clock clock;
  {
    std::mt19937_64 rng(3);
    const double c = std::log(std::log1p(std::numbers::e));
    struct Case {
      Nonlinearity n;
      double lo, hi;
    };
    const std::vector<Case> cases{{catalog::power(2.0), -20.0, 0.999},
                                  {catalog::power(3.0), -20.0, 0.4999},
                                  {catalog::shifted_xlogx(), -c + 1e-6, 60.0},
                                  {catalog::exponential(), -0.6, 0.3678}};
    double worst = 0.0;
    for (const auto& cs : cases) {
      std::uniform_real_distribution<double> dist(cs.lo, cs.hi);
      for (int i = 0; i < 200; ++i) {
        const double u = dist(rng);
        worst = std::max(worst, std::abs(cs.n.F_of_log(cs.n.log_invert_F(u)) - u));
      }
    }
    out.push_back({worst <= 1e-8, "8a closed-form F(F^-1(u)) round trip max error " + fmt(worst, 3) +
                                      " (tol 1e-8)"});
  }
  {
    const auto n = catalog::shifted_xlogx();
    bool ok = true;
    std::string detail;
    for (double alpha : {0.5, 1.0, 2.0}) {
      const auto fc = example(alpha);
      const double h = alpha == 2.0 ? 18.0 : alpha == 1.0 ? 30.0 : 50.0;
      // u(t)/t for alpha = 0.5 (x/H carries no digits there), x/H otherwise, on 50 times.
      auto metric = [&](double tol) {
        IntegrateOptions o;
        o.rel_tol = tol;
        const auto tr = alpha == 0.5 ? integrate_transformed(n, fc, 1.0, h, o) : integrate(n, fc, 1.0, h, o);
        std::vector<double> m;
        for (int i = 1; i <= 50; ++i) {
          const double t = h * i / 50.0;
          m.push_back(alpha == 0.5 ? tr.u_at(t) / t : tr.x_over_H_at(t));
        }
        return m;
      };
      const auto a = metric(1e-8), b = metric(0.5e-8), c = metric(1e-11);
      double dab = 0.0, dbc = 0.0;
      for (std::size_t i = 0; i < c.size(); ++i) {
        dab = std::max(dab, std::abs(a[i] - c[i]));
        dbc = std::max(dbc, std::abs(b[i] - c[i]));
      }
      ok &= dbc < dab || dab <= 1e-12;
      detail += " alpha=" + fmt(alpha) + ": " + fmt(dab, 2) + " -> " + fmt(dbc, 2) + ";";
    }
    out.push_back({ok, "8b tolerance halving 1e-8 -> 5e-9 shrinks the max distance to the 1e-11 run:" + detail});
  }
  {
    bool ok = true;
    std::string detail;
    for (const auto& n : catalog::global_entries()) {
      for (double eps : {0.1, 0.5}) {
        std::vector<double> r;
        for (double t = 1.0; t <= 200.0; t += 1.0) r.push_back(superexp_ratio(n, eps, t));
        const bool below = std::any_of(r.begin(), r.end(), [](double v) { return v < 1e-3; });
        bool decreasing = true;
        for (std::size_t i = r.size() / 2; i + 1 < r.size(); ++i) decreasing &= r[i + 1] <= r[i];
        ok &= below && decreasing;
        if (!(below && decreasing)) detail += " " + n.name() + " eps=" + fmt(eps) + " fails;";
      }
    }
    out.push_back({ok, "8c superexp ratio decreasing below 1e-3 for every global catalog f" + detail});
  }
  out.push_back(runtime(clock, 5.0));
  return out;
}

struct Criterion {
  std::string id;
  std::string title;
  std::function<std::vector<Line>()> run;
};

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> all{
      {"1", "blow-up exactness", blowup_exactness},
      {"2", "autonomous identity", autonomous_identity},
      {"3", "shifted x log x examples", examples_reproduction},
      {"4", "comparison orderings", comparison_orderings},
      {"5", "converse property on 3c", converse_property},
      {"6", "fluctuating forcing", fluctuation},
      {"7", "SDE desk scale", sde_desk_scale},
      {"8", "numerical self-consistency", self_consistency},
  };
  std::vector<std::string> select(argv + 1, argv + argc);
  bool all_pass = true;
  for (const auto& c : all) {
    std::vector<std::string> subs;
    bool wanted = select.empty();
    for (const auto& s : select) {
      if (s.substr(0, c.id.size()) == c.id) {
        wanted = true;
        if (s.size() > c.id.size()) subs.push_back(s);
      }
    }
    if (!wanted) continue;
    std::vector<Line> lines;
    try {
      lines = c.run();
    } catch (const std::exception& e) {
      lines = {{false, std::string("threw: ") + e.what()}};
    }
    for (const auto& l : lines) {
      // Sub-criterion selection keeps lines tagged with that id plus the runtime line.
      if (!subs.empty()) {
        const bool tagged = std::any_of(subs.begin(), subs.end(), [&](const std::string& s) {
          return l.text.rfind(s + " ", 0) == 0;
        });
        if (!tagged && l.text.rfind("runtime", 0) != 0) continue;
      }
      std::cout << (l.pass ? "PASS " : "FAIL ") << "criterion " << c.id << " (" << c.title
                << "): " << l.text << '\n';
      all_pass &= l.pass;
    }
  }
  return all_pass ? 0 : 1;
}
