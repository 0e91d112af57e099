#include "superlin/sde.hpp"

#include <algorithm>
#include <boost/math/quadrature/gauss.hpp>
#include <cmath>
#include <numbers>
#include <ostream>
#include <sstream>
#include <thread>

#include "superlin/errors.hpp"

namespace superlin {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr std::size_t kMaxGridSteps = 20'000'000;

/// log of Sigma = sqrt(2 V loglog V) from log V; NaN unless V > e.
double log_lil(double log_V) {
  if (!(log_V > 1.0)) return kNaN;
  return 0.5 * (std::log(2.0) + log_V + std::log(std::log(log_V)));
}

std::string brief(double v) {
  std::ostringstream os;
  os.precision(4);
  os << v;
  return os.str();
}

}  // namespace

AssumptionReport check_symmetry(const SignedNonlinearity& fs) {
  AssumptionReport r;
  r.checked_property = AssumptionProperty::symmetry;
  r.grid = log_spaced(1.0, 1e6, 40);
  double last = kNaN;
  for (double L : r.grid) {
    for (int sign : {1, -1}) {
      const SignedLog q = fs.ratio(sign, L);
      if (q.sign == 0) {
        r.verdict = Verdict::fails;
        r.failing_point = sign * L;
        r.detail = "f vanishes at x = " + std::string(sign > 0 ? "" : "-") + "e^" + brief(L);
        return r;
      }
      last = std::abs(q.log_abs - fs.phi.log_f1(L));
    }
  }
  if (last <= 1e-2) {
    r.verdict = Verdict::holds;
    r.detail = "|log|f(x)|/phi(|x|)| = " + brief(last) + " at |x| = e^1e6";
  } else {
    r.verdict = Verdict::fails;
    r.failing_point = r.grid.back();
    r.detail = "|f(x)|/phi(|x|) does not approach 1 (log ratio " + brief(last) + ")";
  }
  return r;
}

namespace sde_presets {

SignedNonlinearity xloglog() {
  const double e_e = std::exp(std::numbers::e);
  return {"x loglog(|x|+e^e)",
          [e_e](double x) { return x * std::log(std::log(std::abs(x) + e_e)); },
          [](int, double L) {
            return SignedLog{1, std::log(std::log(log_add_exp(L, std::numbers::e)))};
          },
          catalog::xloglog()};
}

SignedNonlinearity zero_drift() {
  return {"0", [](double) { return 0.0; }, [](int, double) { return SignedLog{}; },
          catalog::xloglog()};
}

LogSigma exp_exp_sigma() {
  return [](double s) { return std::exp(s); };
}

LogSigma unit_sigma() {
  return [](double) { return 0.0; };
}

}  // namespace sde_presets

Philox::Counter Philox::operator()(Counter ctr) const {
  constexpr std::uint32_t kM0 = 0xD2511F53, kM1 = 0xCD9E8D57;
  constexpr std::uint32_t kW0 = 0x9E3779B9, kW1 = 0xBB67AE85;
  Key k = key_;
  for (int round = 0; round < 10; ++round) {
    const std::uint64_t p0 = std::uint64_t{kM0} * ctr[0];
    const std::uint64_t p1 = std::uint64_t{kM1} * ctr[2];
    const auto hi0 = static_cast<std::uint32_t>(p0 >> 32), lo0 = static_cast<std::uint32_t>(p0);
    const auto hi1 = static_cast<std::uint32_t>(p1 >> 32), lo1 = static_cast<std::uint32_t>(p1);
    ctr = {hi1 ^ ctr[1] ^ k[0], lo1, hi0 ^ ctr[3] ^ k[1], lo0};
    k[0] += kW0;
    k[1] += kW1;
  }
  return ctr;
}

double Philox::normal(std::uint64_t path, std::uint32_t step, std::uint32_t sub) const {
  const Counter c = (*this)({step, sub, static_cast<std::uint32_t>(path),
                             static_cast<std::uint32_t>(path >> 32)});
  auto unit = [](std::uint32_t hi, std::uint32_t lo) {
    const std::uint64_t bits = ((std::uint64_t{hi} << 32) | lo) >> 11;
    return static_cast<double>(bits) * 0x1.0p-53;
  };
  const double u1 = 1.0 - unit(c[0], c[1]);  // (0, 1]
  const double u2 = unit(c[2], c[3]);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

SdeGrid make_sde_grid(const LogSigma& log_sigma, double horizon, const SdeGridOptions& opts) {
  if (!(horizon > 0.0)) throw PreconditionError("horizon must be positive");
  if (!(opts.dt_max > 0.0) || !(opts.var_frac > 0.0)) {
    throw PreconditionError("dt_max and var_frac must be positive");
  }
  SdeGrid g;
  g.t.push_back(0.0);
  g.log_V.push_back(-kInf);
  double t = 0.0;
  while (t < horizon) {
    if (g.t.size() > kMaxGridSteps) {
      throw PreconditionError("SDE grid exceeds " + std::to_string(kMaxGridSteps) +
                              " steps before t = " + format_double(horizon));
    }
    double dt = opts.dt_max;
    const double lV = g.log_V.back();
    if (lV > -kInf) dt = std::min(dt, opts.var_frac * std::exp(lV - 2.0 * log_sigma(t)));
    if (horizon - (t + dt) < 1e-9 * horizon) dt = horizon - t;
    const double a = t, b = t + dt;
    // ∫ sigma^2 over the step, shifted by the larger endpoint exponent.
    const double m = std::max(2.0 * log_sigma(a), 2.0 * log_sigma(b));
    const double I = boost::math::quadrature::gauss<double, 7>::integrate(
        [&](double s) { return std::exp(2.0 * log_sigma(s) - m); }, a, b);
    const double ldV = m + std::log(I);
    g.log_dV.push_back(ldV);
    g.log_V.push_back(log_add_exp(lV, ldV));
    t = b;
    g.t.push_back(t);
  }
  g.t.back() = horizon;
  return g;
}

SdePath simulate_path(const SignedNonlinearity& fs, const SdeGrid& grid, double psi,
                      std::uint64_t seed, std::uint64_t path_index, const SimulateOptions& opts) {
  const Philox rng(seed);
  const std::size_t n = grid.t.size();
  SdePath p;
  p.x.assign(n, kNaN);
  p.noise.assign(n, kNaN);
  double x = psi, M = 0.0;
  p.x[0] = x;
  p.noise[0] = 0.0;
  for (std::size_t k = 0; k + 1 < n; ++k) {
    const double dt = grid.t[k + 1] - grid.t[k];
    const double sd = std::exp(0.5 * grid.log_dV[k]);
    const auto step = static_cast<std::uint32_t>(k);
    const double fx = fs.f(x);
    int m = 1;
    const double load = std::abs(fx) * dt / (opts.drift_frac * (1.0 + std::abs(x)));
    if (load > 1.0) m = static_cast<int>(std::min<double>(std::ceil(load), opts.max_substeps));
    if (m == 1) {
      const double dM = sd * rng.normal(path_index, step, 0);
      x += fx * dt + dM;
      M += dM;
    } else {
      const double h = dt / m, s = sd / std::sqrt(static_cast<double>(m));
      for (int j = 0; j < m; ++j) {
        const double dM = s * rng.normal(path_index, step, static_cast<std::uint32_t>(j));
        x += fs.f(x) * h + dM;
        M += dM;
      }
    }
    if (!std::isfinite(x)) {
      p.truncated = true;
      p.truncated_at = grid.t[k + 1];
      return p;
    }
    p.x[k + 1] = x;
    p.noise[k + 1] = M;
  }
  return p;
}

SdeResult simulate_sde(const SignedNonlinearity& fs, const LogSigma& log_sigma, double psi,
                       double horizon, double dt_max, std::uint64_t seed) {
  SdeGridOptions go;
  go.dt_max = dt_max;
  SdeResult r;
  r.grid = make_sde_grid(log_sigma, horizon, go);
  r.path = simulate_path(fs, r.grid, psi, seed, 0);
  return r;
}

PathEnsemble run_ensemble(const SignedNonlinearity& fs, const LogSigma& log_sigma, double psi,
                          double horizon, std::uint64_t seed, const EnsembleOptions& opts) {
  PathEnsemble e;
  e.seed = seed;
  e.grid = make_sde_grid(log_sigma, horizon, opts.grid);
  e.log_envelope.reserve(e.grid.t.size());
  for (double lV : e.grid.log_V) e.log_envelope.push_back(log_lil(lV));
  e.paths.resize(opts.paths);

  unsigned threads = opts.threads ? opts.threads : std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, std::max<std::size_t>(opts.paths, 1)));
  // Each path depends only on (seed, index); the partition does not affect results.
  auto work = [&](unsigned w) {
    for (std::size_t i = w; i < opts.paths; i += threads) {
      e.paths[i] = simulate_path(fs, e.grid, psi, seed, i, opts.simulate);
    }
  };
  std::vector<std::thread> pool;
  for (unsigned w = 1; w < threads; ++w) pool.emplace_back(work, w);
  work(0);
  for (auto& th : pool) th.join();
  return e;
}

double quantile(std::vector<double> v, double q) {
  if (v.empty()) return kNaN;
  std::sort(v.begin(), v.end());
  const double pos = q * static_cast<double>(v.size() - 1);
  const auto i = static_cast<std::size_t>(std::floor(pos));
  if (i + 1 >= v.size()) return v.back();
  return v[i] + (pos - static_cast<double>(i)) * (v[i + 1] - v[i]);
}

FluctuationSummary fluctuation_stats(const PathEnsemble& ensemble, double t0,
                                     std::size_t max_rows) {
  const auto& t = ensemble.grid.t;
  const std::size_t k0 =
      static_cast<std::size_t>(std::lower_bound(t.begin(), t.end(), t0) - t.begin());
  if (k0 >= t.size()) throw DomainError("window start beyond the grid end");
  if (std::isnan(ensemble.log_envelope[k0])) {
    std::size_t k = k0;
    while (k < t.size() && std::isnan(ensemble.log_envelope[k])) ++k;
    throw DomainError("Sigma undefined at t0 = " + format_double(t0) + "; needs ∫σ² > e" +
                      (k < t.size() ? ", first valid grid time " + format_double(t[k]) : ""));
  }
  FluctuationSummary s;
  s.t0 = t[k0];
  s.t1 = t.back();
  const std::size_t np = ensemble.paths.size();
  std::vector<double> run_max(np, -kInf), run_min(np, kInf), diff(np, 0.0);
  const std::size_t count = t.size() - k0;
  const std::size_t stride = std::max<std::size_t>(1, (count + max_rows - 1) / std::max<std::size_t>(max_rows, 1));
  std::vector<double> ratios, maxima;
  for (std::size_t k = k0; k < t.size(); ++k) {
    const double inv = std::exp(-ensemble.log_envelope[k]);
    const bool row = (k - k0) % stride == 0 || k + 1 == t.size();
    ratios.clear();
    maxima.clear();
    for (std::size_t i = 0; i < np; ++i) {
      const auto& p = ensemble.paths[i];
      const double r = p.x[k] * inv;
      if (std::isnan(r)) continue;
      run_max[i] = std::max(run_max[i], r);
      run_min[i] = std::min(run_min[i], r);
      diff[i] = std::max(diff[i], std::abs(p.x[k] - p.noise[k]) * inv);
      if (row) {
        ratios.push_back(r);
        maxima.push_back(run_max[i]);
      }
    }
    if (row) {
      s.rows.push_back({t[k], quantile(ratios, 0.05), quantile(ratios, 0.5),
                        quantile(ratios, 0.95), quantile(maxima, 0.5)});
    }
  }
  for (std::size_t i = 0; i < np; ++i) {
    if (ensemble.paths[i].truncated) {
      ++s.truncated_paths;
      continue;
    }
    s.running_max.push_back(run_max[i]);
    s.running_min.push_back(run_min[i]);
    s.max_abs_diff.push_back(diff[i]);
  }
  for (int j = 0; j < 3; ++j) {
    const double q = 0.25 * (j + 1);
    s.max_quartiles[j] = quantile(s.running_max, q);
    s.min_quartiles[j] = quantile(s.running_min, q);
  }
  return s;
}

void write_ensemble_csv(std::ostream& os, const FluctuationSummary& s) {
  os << "t,q05,q50,q95,running_max_over_envelope\n";
  for (const auto& r : s.rows) {
    os << format_double(r.t) << ',' << format_double(r.q05) << ',' << format_double(r.q50) << ','
       << format_double(r.q95) << ',' << format_double(r.running_max_median) << '\n';
  }
  os << "# window=[" << format_double(s.t0) << ", " << format_double(s.t1)
     << "], paths=" << s.running_max.size() + s.truncated_paths
     << ", truncated=" << s.truncated_paths
     << ", running_max_q25=" << format_double(s.max_quartiles[0])
     << ", running_max_q50=" << format_double(s.max_quartiles[1])
     << ", running_max_q75=" << format_double(s.max_quartiles[2]) << '\n';
}

VerificationReport check_gamma_condition(const Nonlinearity& phi, const Envelope& gamma, double K,
                                         double horizon, const GammaOptions& opts) {
  if (classify_blowup(phi).kind != BlowupClass::global_existence) {
    throw PreconditionError(phi.name() + ": ∫^∞ du/phi must diverge");
  }
  if (!(K > 1.0)) throw PreconditionError("gamma condition needs K > 1");
  if (!(horizon > 0.0) || opts.samples < 4) throw PreconditionError("need horizon > 0");

  auto log_gamma = [&gamma](double t) {
    try {
      return gamma.log_value(t);
    } catch (const DomainError&) {
      return -kInf;
    }
  };
  std::vector<double> times(opts.samples);
  for (std::size_t i = 0; i < opts.samples; ++i) {
    times[i] = horizon * static_cast<double>(i + 1) / static_cast<double>(opts.samples);
  }
  double prev = -kInf;
  for (double t : times) {
    const double lg = log_gamma(t);
    if (lg < prev) {
      throw PreconditionError(gamma.name() + " decreases at t=" + format_double(t));
    }
    prev = lg;
  }
  std::function<double(double)> rate;
  if (gamma.has_rate()) {
    rate = [&gamma](double t) { return gamma.rate(t); };
  } else {
    rate = [&log_gamma](double t) {
      const double d = 1e-6 * std::max(1.0, t);
      return (log_gamma(t + d) - log_gamma(t - d)) / (2 * d);
    };
  }
  const auto lr = log_growth_ratio(phi, log_gamma, rate, K, times);

  VerificationReport r;
  r.predicted_limit = "∫_0^t phi(K gamma) ds / gamma(t) -> 0";
  r.tolerance = opts.threshold;
  Samples all;
  for (std::size_t i = 0; i < times.size(); ++i) all.emplace_back(times[i], std::exp(lr[i]));
  const double t_from = (1.0 - opts.tail_fraction) * horizon;
  double tail_max = -kInf;
  for (const auto& [t, v] : all) {
    if (t < t_from) continue;
    r.measured_tail.emplace_back(t, v);
    tail_max = std::max(tail_max, v);
  }
  const Trend trend = tail_trend(all, t_from);
  r.pass = trend == Trend::decreasing && all.back().second < opts.threshold;
  r.detail = std::string("tail ") + to_string(trend) + ", max " + brief(tail_max) + ", at " +
             format_double(horizon) + " " + brief(all.back().second);
  return r;
}

FluctuationCheckReport verify_fluctuation(const SignedNonlinearity& fs, const Forcing& fc,
                               const Envelope& gamma, double psi, double horizon,
                               const FluctuationCheckOptions& opts) {
  auto H_over_gamma = [&](double t) {
    const SignedLog H = fc.signed_log_H(t);
    return H.sign == 0 ? 0.0 : H.sign * std::exp(H.log_abs - gamma.log_value(t));
  };
  double sup = -kInf, inf = kInf;
  for (int i = 1; i <= 6000; ++i) {
    const double q = H_over_gamma(horizon * i / 6000.0);
    sup = std::max(sup, q);
    inf = std::min(inf, q);
  }
  if (std::abs(sup - 1.0) > 1e-2 || std::abs(inf + 1.0) > 1e-2) {
    throw PreconditionError("sampled sup/inf of H/gamma are " + brief(sup) + ", " + brief(inf) +
                            "; need +1 and -1");
  }
  const auto gc = check_gamma_condition(fs.phi, gamma, opts.K, horizon);
  if (!gc.pass) throw PreconditionError("gamma condition fails: " + gc.detail);

  FluctuationCheckReport rep;
  rep.trajectory = integrate_signed(fs.drift(), fc, psi, horizon, opts.integrate);
  const Trajectory& tr = rep.trajectory;
  auto x_over_gamma = [&](double t) {
    const auto [s, L] = tr.signed_log_x_at(t);
    return s == 0 ? 0.0 : s * std::exp(L - gamma.log_value(t));
  };
  const double t_end = tr.t_end();
  rep.diff_at_end = x_over_gamma(t_end) - H_over_gamma(t_end);
  const double ws = std::isnan(opts.window_start) ? 2.0 * horizon / 3.0 : opts.window_start;
  rep.sup_ratio = -kInf;
  rep.inf_ratio = kInf;
  for (int i = 0; i <= 2000; ++i) {
    const double t = ws + (t_end - ws) * i / 2000.0;
    const double q = x_over_gamma(t);
    rep.sup_ratio = std::max(rep.sup_ratio, q);
    rep.inf_ratio = std::min(rep.inf_ratio, q);
  }
  rep.diff_ok = t_end >= horizon && std::abs(rep.diff_at_end) < opts.diff_tol;
  rep.extremes_ok = std::abs(rep.sup_ratio - 1.0) <= opts.extreme_tol &&
                    std::abs(rep.inf_ratio + 1.0) <= opts.extreme_tol;
  auto& v = rep.verdict;
  v.predicted_limit = "(x-H)/gamma -> 0, limsup x/gamma = 1, liminf x/gamma = -1";
  v.tolerance = opts.diff_tol;
  v.measured_tail = {{t_end, rep.diff_at_end}};
  v.pass = rep.diff_ok && rep.extremes_ok;
  v.detail = "(x-H)/gamma at " + format_double(t_end) + " = " + brief(rep.diff_at_end) +
             "; x/gamma on [" + format_double(ws) + ", " + format_double(t_end) + "] in [" +
             brief(rep.inf_ratio) + ", " + brief(rep.sup_ratio) + "]";
  return rep;
}

}  // namespace superlin
