#include "superlin/cli.hpp"

#include <CLI11.hpp>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>

#include "superlin/classifier.hpp"
#include "superlin/comparison.hpp"
#include "superlin/forcing.hpp"
#include "superlin/integrator.hpp"
#include "superlin/sde.hpp"

namespace superlin::cli {

namespace fs = std::filesystem;
namespace pt = boost::property_tree;

ConfigError::ConfigError(const std::string& field, int line, const std::string& what)
    : Error(what), field_(field), line_(line) {}

const char* to_string(Experiment e) {
  switch (e) {
    case Experiment::classify: return "classify";
    case Experiment::simulate: return "simulate";
    case Experiment::blowup: return "blowup";
    case Experiment::compare: return "compare";
    case Experiment::fluctuate: return "fluctuate";
    case Experiment::sde: return "sde";
  }
  return "?";
}

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

/// Raw text kept for line numbers in diagnostics.
class Source {
 public:
  Source(std::string name, std::string text) : name_(std::move(name)) {
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) lines_.push_back(line);
  }

  [[nodiscard]] int line_of(const std::string& section, const std::string& key) const {
    std::string current;
    for (std::size_t i = 0; i < lines_.size(); ++i) {
      const std::string s = trim(lines_[i]);
      if (s.empty()) continue;
      if (s.front() == '[' && s.back() == ']') {
        current = trim(s.substr(1, s.size() - 2));
        continue;
      }
      const auto eq = s.find('=');
      if (eq != std::string::npos && current == section && trim(s.substr(0, eq)) == key) {
        return static_cast<int>(i + 1);
      }
    }
    return 0;
  }

  [[noreturn]] void fail(const std::string& section, const std::string& key,
                         const std::string& why) const {
    const int line = line_of(section, key);
    std::ostringstream os;
    os << name_;
    if (line > 0) os << ':' << line;
    os << ": " << section << '.' << key << ": " << why;
    throw ConfigError(section + "." + key, line, os.str());
  }

  static std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return {};
    const auto b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
  }

 private:
  std::string name_;
  std::vector<std::string> lines_;
};

double parse_number(const Source& src, const std::string& section, const std::string& key,
                    const std::string& text) {
  double v = 0.0;
  const std::string s = Source::trim(text);
  const char* first = s.data();
  const char* last = s.data() + s.size();
  if (!s.empty() && *first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last) src.fail(section, key, "expected a number, got '" + s + "'");
  return v;
}

bool parse_bool(const Source& src, const std::string& section, const std::string& key,
                const std::string& text) {
  const std::string s = Source::trim(text);
  if (s == "true" || s == "1" || s == "yes") return true;
  if (s == "false" || s == "0" || s == "no") return false;
  src.fail(section, key, "expected true or false, got '" + s + "'");
}

std::string choice(const Source& src, const std::string& section, const std::string& key,
                   const std::string& value, const std::set<std::string>& allowed) {
  const std::string v = Source::trim(value);
  if (!allowed.count(v)) {
    std::string list;
    for (const auto& a : allowed) list += (list.empty() ? "" : ", ") + a;
    src.fail(section, key, "unknown value '" + v + "' (expected one of " + list + ")");
  }
  return v;
}

const std::map<std::string, std::set<std::string>> kNonlinearityParams{
    {"power", {"p"}}, {"shifted_xlogx", {}}, {"xlog", {}}, {"xloglog", {}}, {"exp", {}}};

const std::map<std::string, std::set<std::string>> kForcingParams{
    {"zero", {}},         {"constant", {"c"}},        {"power", {"c", "beta"}},
    {"cos", {}},          {"exp_exp", {"K", "alpha"}}, {"sin_envelope", {}},
    {"linear_plus_sine", {}}};

std::vector<std::pair<double, double>> read_table(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot read table file '" + path + "'");
  std::vector<std::pair<double, double>> rows;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    line = Source::trim(line);
    if (line.empty() || line.front() == '#') continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) throw std::invalid_argument(path + ":" + std::to_string(lineno) + ": expected two columns");
    double a = 0.0, b = 0.0;
    const std::string sa = Source::trim(line.substr(0, comma)), sb = Source::trim(line.substr(comma + 1));
    const auto ra = std::from_chars(sa.data(), sa.data() + sa.size(), a);
    const auto rb = std::from_chars(sb.data(), sb.data() + sb.size(), b);
    if (ra.ec != std::errc() || rb.ec != std::errc()) {
      if (rows.empty()) continue;  // header
      throw std::invalid_argument(path + ":" + std::to_string(lineno) + ": not a number");
    }
    if (!std::isfinite(a) || !std::isfinite(b)) {
      throw std::invalid_argument(path + ":" + std::to_string(lineno) + ": values must be finite");
    }
    rows.emplace_back(a, b);
  }
  if (rows.size() < 2) throw std::invalid_argument(path + ": needs at least two rows");
  return rows;
}

/// f from a table (x, f(x)), linear in log-log coordinates and extended by the end slopes.
Nonlinearity table_nonlinearity(const std::string& path) {
  const auto rows = read_table(path);
  std::vector<double> lx, lf;
  for (const auto& [x, f] : rows) {
    if (!(x > 0.0) || !(f > 0.0)) throw std::invalid_argument(path + ": x and f must be positive");
    if (!lx.empty() && !(std::log(x) > lx.back())) throw std::invalid_argument(path + ": x must increase");
    lx.push_back(std::log(x));
    lf.push_back(std::log(f));
  }
  auto log_f = [lx, lf](double L) {
    std::size_t k = static_cast<std::size_t>(std::upper_bound(lx.begin(), lx.end(), L) - lx.begin());
    k = std::clamp<std::size_t>(k, 1, lx.size() - 1);
    const double slope = (lf[k] - lf[k - 1]) / (lx[k] - lx[k - 1]);
    return lf[k - 1] + slope * (L - lx[k - 1]);
  };
  auto f = [log_f](double x) { return std::exp(log_f(std::log(x))); };
  auto log_f1 = [log_f](double L) { return log_f(L) - L; };
  return make_nonlinearity("table:" + path, f, log_f1);
}

Envelope envelope_by_name(const std::string& name) {
  if (name == "exp_exp") return envelope_catalog::exp_exp();
  if (name == "exp_exp_square") return envelope_catalog::exp_exp_square();
  return envelope_catalog::linear();
}

Nonlinearity build_nonlinearity(const ExperimentConfig& c) {
  if (!c.nonlinearity_table.empty()) return table_nonlinearity(c.nonlinearity_table);
  return catalog::by_name(c.nonlinearity, c.nonlinearity_params);
}

Forcing build_forcing(const ExperimentConfig& c) {
  if (!c.forcing_table.empty()) {
    std::vector<double> t, h;
    for (const auto& [a, b] : read_table(c.forcing_table)) {
      t.push_back(a);
      h.push_back(b);
    }
    return forcing_catalog::table(std::move(t), std::move(h));
  }
  if (c.forcing == "sin_envelope") return sinusoidal_envelope(envelope_by_name(c.envelope));
  if (c.forcing == "linear_plus_sine") return forcing_catalog::linear_plus_sine();
  return forcing_catalog::by_name(c.forcing, c.forcing_params);
}

SignedNonlinearity build_drift(const ExperimentConfig& c) {
  return c.drift == "zero" ? sde_presets::zero_drift() : sde_presets::xloglog();
}

LogSigma build_sigma(const ExperimentConfig& c) {
  return c.sigma == "unit" ? sde_presets::unit_sigma() : sde_presets::exp_exp_sigma();
}

double sde_window_start(const ExperimentConfig& c) {
  if (!std::isnan(c.window_start)) return c.window_start;
  return c.sigma == "unit" ? std::exp(std::numbers::e) : sde_presets::kExpExpWindowStart;
}

std::string num(double v) { return format_double(v); }

std::string brief(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

/// Values in verdict lines must not contain spaces.
std::string token(std::string s) {
  for (char& ch : s) {
    if (ch == ' ') ch = '_';
  }
  return s;
}

class Writer {
 public:
  explicit Writer(const ExperimentConfig& c) : dir_(c.out_dir) { fs::create_directories(dir_); }

  template <class Fn>
  void csv(const std::string& name, Fn&& write) {
    const fs::path p = fs::path(dir_) / name;
    std::ofstream os(p);
    if (!os) throw std::runtime_error("cannot write " + p.string());
    write(os);
    files.push_back(p.string());
  }

  void plot_script(const std::vector<std::string>& csvs) {
    csv("plot.py", [&](std::ostream& os) {
      os << "import os\nimport numpy as np\nimport matplotlib\nmatplotlib.use('Agg')\n"
            "import matplotlib.pyplot as plt\n\n"
            "here = os.path.dirname(os.path.abspath(__file__))\n"
            "for name in [";
      for (std::size_t i = 0; i < csvs.size(); ++i) os << (i ? ", " : "") << "'" << csvs[i] << "'";
      os << "]:\n"
            "    data = np.genfromtxt(os.path.join(here, name), delimiter=',', names=True,\n"
            "                         comments='#', dtype=None, encoding='utf-8')\n"
            "    cols = [c for c in data.dtype.names[1:] if data.dtype[c].kind == 'f']\n"
            "    fig, ax = plt.subplots()\n"
            "    for c in cols:\n"
            "        ax.plot(data[data.dtype.names[0]], data[c], label=c)\n"
            "    ax.set_xlabel(data.dtype.names[0])\n"
            "    ax.legend()\n"
            "    fig.savefig(os.path.join(here, name.replace('.csv', '.png')))\n";
    });
  }

  std::vector<std::string> files;

 private:
  std::string dir_;
};

IntegrateOptions integrate_options(const ExperimentConfig& c) {
  IntegrateOptions o;
  o.rel_tol = c.rel_tol;
  return o;
}

Trajectory integrate_by_mode(const ExperimentConfig& c, const Nonlinearity& n, const Forcing& fc,
                             bool prefer_transformed) {
  const IntegrateOptions o = integrate_options(c);
  const bool transformed =
      c.mode == "transformed" || (c.mode == "auto" && prefer_transformed && !n.blows_up());
  return transformed ? integrate_transformed(n, fc, c.psi, c.horizon, o)
                     : integrate(n, fc, c.psi, c.horizon, o);
}

RunResult finish(const ExperimentConfig& c, Writer& w, bool pass, const std::string& keys,
                 int fail_code = kExitVerdictFail) {
  RunResult r;
  r.exit_code = pass ? kExitPass : fail_code;
  r.verdict = std::string("verdict ") + to_string(c.experiment) + (pass ? " pass" : " fail") +
              (keys.empty() ? "" : " " + keys);
  w.csv("verdict.txt", [&](std::ostream& os) { os << r.verdict << '\n'; });
  r.files = w.files;
  return r;
}

RunResult run_classify(const ExperimentConfig& c, Writer& w) {
  const auto n = build_nonlinearity(c);
  const auto fc = build_forcing(c);
  const auto rep = diagnostics(n, fc, c.horizon);
  if (rep.regime == Regime::Indeterminate) {
    w.csv("regime.csv", [&](std::ostream& os) { write_regime_csv(os, rep); });
    if (c.plots) w.plot_script({"regime.csv"});
    bool violated = false;
    for (const auto& a : rep.assumption_flags) violated |= a.fails();
    return finish(c, w, false,
                  "regime=Indeterminate reason=" + token(rep.explanation),
                  violated ? kExitAssumption : kExitVerdictFail);
  }
  const auto p = predict(rep);
  const auto traj = integrate_by_mode(c, n, fc, p.law == GrowthLaw::F_over_t_to_one);
  const auto v = verify_growth(traj, n, fc, p);
  w.csv("regime.csv", [&](std::ostream& os) { write_regime_csv(os, rep, v); });
  if (c.plots) w.plot_script({"regime.csv"});
  const double measured = v.measured_tail.empty() ? kNaN : v.measured_tail.back().second;
  return finish(c, w, v.pass,
                std::string("regime=") + to_string(rep.regime) + " K_hat=" + brief(rep.K_hat) +
                    " law=" + to_string(p.law) + " measured=" + brief(measured) +
                    " tolerance=" + brief(v.tolerance));
}

RunResult run_simulate(const ExperimentConfig& c, Writer& w) {
  const auto n = build_nonlinearity(c);
  const auto fc = build_forcing(c);
  const auto traj = integrate_by_mode(c, n, fc, false);
  w.csv("trajectory.csv", [&](std::ostream& os) { write_trajectory_csv(os, traj); });
  if (c.plots) w.plot_script({"trajectory.csv"});
  std::string keys = "t_end=" + num(traj.t_end()) + " blew_up=" + (traj.blew_up ? "true" : "false") +
                     " mode=" + traj.mode() + " steps=" + std::to_string(traj.stats.accepted);
  if (traj.blowup) keys += " T_hat=" + num(traj.blowup->T_hat);
  return finish(c, w, true, keys);
}

RunResult run_blowup(const ExperimentConfig& c, Writer& w) {
  const auto n = build_nonlinearity(c);
  const auto fc = build_forcing(c);
  const auto traj = integrate(n, fc, c.psi, c.horizon, integrate_options(c));
  w.csv("trajectory.csv", [&](std::ostream& os) { write_trajectory_csv(os, traj); });
  if (c.plots) w.plot_script({"trajectory.csv"});
  if (!traj.blew_up || !traj.blowup) {
    return finish(c, w, false, "blew_up=false t_end=" + num(traj.t_end()));
  }
  const auto& e = *traj.blowup;
  const bool agree = std::abs(e.T_tail - e.T_threshold) <= 1e-3 * e.T_hat;
  std::string keys = "T_hat=" + num(e.T_hat) + " T_threshold=" + num(e.T_threshold) +
                     " method=" + to_string(e.method);
  if (e.T_hat - traj.points.front().t > 1e-3) {
    keys += " tail_ratio_1e-3=" + brief(tail_ratio_at(traj, n, e.T_hat, 1e-3));
  }
  return finish(c, w, agree, keys);
}

RunResult run_compare(const ExperimentConfig& c, Writer& w) {
  const auto n = build_nonlinearity(c);
  const auto fc = build_forcing(c);
  double K = c.K;
  if (std::isnan(K)) {
    const auto rep = diagnostics(n, fc, c.horizon);
    if (rep.regime == Regime::SharedGrowth) K = rep.K_hat;
    if (rep.regime == Regime::NonlinearityDominated) K = 0.0;
  }
  BundleOptions bo;
  bo.lower_start_factor = c.lower_start_factor;
  bo.integrate = integrate_options(c);
  const auto b = build_bundle(n, fc, c.psi, c.horizon, K, c.eps, bo);
  const auto v = check_ordering(b);
  w.csv("bundle.csv", [&](std::ostream& os) { write_bundle_csv(os, b, v); });
  if (c.plots) w.plot_script({"bundle.csv"});
  const auto& p = b.params;
  return finish(c, w, v.pass,
                "K=" + brief(K) + " eps=" + num(c.eps) + " T_switch=" + num(p.T_switch) +
                    " T1=" + num(p.T1) + " F_star=" + brief(p.F_star) + " samples=" +
                    std::to_string(b.samples.size()) + " detail=" + token(v.detail));
}

RunResult run_fluctuate(const ExperimentConfig& c, Writer& w) {
  if (c.forcing != "sin_envelope") {
    throw ConfigError("forcing.name", 0, "fluctuate needs forcing.name = sin_envelope");
  }
  const auto gamma = envelope_by_name(c.envelope);
  FluctuationCheckOptions o;
  o.K = c.gamma_K;
  o.window_start = c.window_start;
  o.integrate = integrate_options(c);
  const auto r = verify_fluctuation(build_drift(c), build_forcing(c), gamma, c.psi, c.horizon, o);
  w.csv("trajectory.csv", [&](std::ostream& os) { write_trajectory_csv(os, r.trajectory); });
  if (c.plots) w.plot_script({"trajectory.csv"});
  const double ws = std::isnan(c.window_start) ? 2.0 * c.horizon / 3.0 : c.window_start;
  return finish(c, w, r.verdict.pass,
                "diff_at_end=" + brief(r.diff_at_end) + " sup=" + brief(r.sup_ratio) +
                    " inf=" + brief(r.inf_ratio) + " window=[" + num(ws) + "," +
                    num(r.trajectory.t_end()) + "]");
}

RunResult run_sde(const ExperimentConfig& c, Writer& w) {
  const auto fs = build_drift(c);
  const auto sigma = build_sigma(c);
  if (c.drift != "zero") {
    const auto gc = check_gamma_condition(fs.phi, lil_envelope(sigma, "Sigma"), c.gamma_K,
                                          c.gamma_horizon);
    if (!gc.pass) throw PreconditionError("gamma condition with gamma = Sigma fails: " + gc.detail);
  }
  EnsembleOptions o;
  o.paths = c.paths;
  o.threads = c.threads;
  o.grid.dt_max = c.dt_max;
  const auto e = run_ensemble(fs, sigma, c.psi, c.horizon, c.seed, o);
  const auto s = fluctuation_stats(e, sde_window_start(c));
  w.csv("ensemble.csv", [&](std::ostream& os) { write_ensemble_csv(os, s); });
  if (c.plots) w.plot_script({"ensemble.csv"});
  const auto& q = s.max_quartiles;
  const bool pass = c.band_statistic == "median" ? q[1] >= c.band_lo && q[1] <= c.band_hi
                                                 : q[0] >= c.band_lo && q[2] <= c.band_hi;
  return finish(c, w, pass,
                "running_max_q25=" + brief(s.max_quartiles[0]) + " running_max_q50=" +
                    brief(s.max_quartiles[1]) + " running_max_q75=" + brief(s.max_quartiles[2]) +
                    " paths=" + std::to_string(c.paths) + " truncated=" +
                    std::to_string(s.truncated_paths) + " seed=" + std::to_string(c.seed));
}

}  // namespace

ExperimentConfig parse_config(std::istream& in, const std::string& source) {
  std::stringstream raw;
  raw << in.rdbuf();
  const std::string text = raw.str();
  const Source src(source, text);

  // Comments are cut in place so line numbers stay aligned.
  std::istringstream lines(text);
  std::ostringstream cleaned;
  std::string line;
  while (std::getline(lines, line)) {
    cleaned << line.substr(0, line.find_first_of("#;")) << '\n';
  }
  pt::ptree tree;
  try {
    std::istringstream cin(cleaned.str());
    pt::read_ini(cin, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError("", static_cast<int>(e.line()),
                      source + ":" + std::to_string(e.line()) + ": " + e.message());
  }

  ExperimentConfig c;
  c.source = source;
  bool have_type = false;
  for (const auto& [section, body] : tree) {
    if (body.empty() && !body.data().empty()) {
      src.fail("", section, "key outside any section");
    }
    if (section != "nonlinearity" && section != "forcing" && section != "experiment" &&
        section != "output") {
      throw ConfigError(section, 0, source + ": unknown section [" + section + "]");
    }
    for (const auto& [key, node] : body) {
      const std::string v = node.data();
      auto number = [&] { return parse_number(src, section, key, v); };
      if (section == "nonlinearity") {
        if (key == "name") {
          c.nonlinearity = Source::trim(v);
          if (!kNonlinearityParams.count(c.nonlinearity)) {
            src.fail(section, key, "unknown nonlinearity '" + c.nonlinearity + "'");
          }
        } else if (key == "table") {
          c.nonlinearity_table = Source::trim(v);
        } else {
          c.nonlinearity_params[key] = number();
        }
      } else if (section == "forcing") {
        if (key == "name") {
          c.forcing = Source::trim(v);
          if (!kForcingParams.count(c.forcing)) src.fail(section, key, "unknown forcing '" + c.forcing + "'");
        } else if (key == "table") {
          c.forcing_table = Source::trim(v);
        } else if (key == "envelope") {
          c.envelope = choice(src, section, key, v, {"exp_exp", "exp_exp_square", "linear"});
        } else {
          c.forcing_params[key] = number();
        }
      } else if (section == "experiment") {
        if (key == "type") {
          const std::string t = choice(src, section, key, v,
                                       {"classify", "simulate", "blowup", "compare", "fluctuate", "sde"});
          for (auto e : {Experiment::classify, Experiment::simulate, Experiment::blowup,
                         Experiment::compare, Experiment::fluctuate, Experiment::sde}) {
            if (t == to_string(e)) c.experiment = e;
          }
          have_type = true;
        } else if (key == "psi") {
          c.psi = number();
        } else if (key == "horizon") {
          c.horizon = number();
        } else if (key == "rel_tol") {
          c.rel_tol = number();
        } else if (key == "mode") {
          c.mode = choice(src, section, key, v, {"auto", "direct", "transformed"});
        } else if (key == "eps") {
          c.eps = number();
        } else if (key == "K") {
          c.K = number();
        } else if (key == "lower_start_factor") {
          c.lower_start_factor = number();
        } else if (key == "seed") {
          const double s = number();
          if (!(s >= 0.0) || s != std::floor(s)) src.fail(section, key, "must be a nonnegative integer");
          c.seed = static_cast<std::uint64_t>(s);
        } else if (key == "paths") {
          const double p = number();
          if (!(p >= 1.0) || p != std::floor(p)) src.fail(section, key, "must be a positive integer");
          c.paths = static_cast<std::size_t>(p);
        } else if (key == "threads") {
          const double p = number();
          if (!(p >= 0.0) || p != std::floor(p)) src.fail(section, key, "must be a nonnegative integer");
          c.threads = static_cast<unsigned>(p);
        } else if (key == "dt_max") {
          c.dt_max = number();
          if (!(c.dt_max > 0.0)) src.fail(section, key, "must be positive");
        } else if (key == "window_start") {
          c.window_start = number();
        } else if (key == "sigma") {
          c.sigma = choice(src, section, key, v, {"unit", "exp_exp"});
        } else if (key == "drift") {
          c.drift = choice(src, section, key, v, {"xloglog", "zero"});
        } else if (key == "gamma_K") {
          c.gamma_K = number();
        } else if (key == "gamma_horizon") {
          c.gamma_horizon = number();
        } else if (key == "band_lo") {
          c.band_lo = number();
        } else if (key == "band_hi") {
          c.band_hi = number();
        } else if (key == "band_statistic") {
          c.band_statistic = choice(src, section, key, v, {"quartiles", "median"});
        } else {
          src.fail(section, key, "unknown key");
        }
      } else {
        if (key == "dir") {
          c.out_dir = Source::trim(v);
        } else if (key == "plots") {
          c.plots = parse_bool(src, section, key, v);
        } else {
          src.fail(section, key, "unknown key");
        }
      }
    }
  }

  if (!have_type) throw ConfigError("experiment.type", 0, source + ": experiment.type is required");
  if (c.nonlinearity_table.empty()) {
    const auto& allowed = kNonlinearityParams.at(c.nonlinearity);
    for (const auto& [k, _] : c.nonlinearity_params) {
      if (!allowed.count(k)) src.fail("nonlinearity", k, "not a parameter of " + c.nonlinearity);
    }
    for (const auto& k : allowed) {
      if (!c.nonlinearity_params.count(k)) src.fail("nonlinearity", k, "missing parameter of " + c.nonlinearity);
    }
  }
  if (c.forcing_table.empty()) {
    const auto& allowed = kForcingParams.at(c.forcing);
    for (const auto& [k, _] : c.forcing_params) {
      if (!allowed.count(k)) src.fail("forcing", k, "not a parameter of " + c.forcing);
    }
    for (const auto& k : allowed) {
      if (!c.forcing_params.count(k)) src.fail("forcing", k, "missing parameter of " + c.forcing);
    }
  }
  if (c.experiment == Experiment::sde) {
    if (!std::isfinite(c.psi)) src.fail("experiment", "psi", "must be finite");
  } else if (!(c.psi > 0.0) || !std::isfinite(c.psi)) {
    src.fail("experiment", "psi", "must be positive, got " + format_double(c.psi));
  }
  if (!(c.horizon > 0.0) || !std::isfinite(c.horizon)) {
    src.fail("experiment", "horizon", "must be positive, got " + format_double(c.horizon));
  }
  if (!(c.rel_tol > 0.0 && c.rel_tol < 0.1)) src.fail("experiment", "rel_tol", "must lie in (0, 0.1)");
  if (!(c.eps > 0.0 && c.eps < 1.0)) src.fail("experiment", "eps", "must lie in (0, 1)");
  if (!(c.band_lo < c.band_hi)) src.fail("experiment", "band_hi", "must exceed band_lo");
  if (!(c.gamma_K > 1.0)) src.fail("experiment", "gamma_K", "must exceed 1");
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("", 0, "cannot read config file '" + path + "'");
  ExperimentConfig c = parse_config(in, path);
  // Table files are relative to the config file.
  const fs::path base = fs::path(path).parent_path();
  for (std::string* t : {&c.nonlinearity_table, &c.forcing_table}) {
    if (!t->empty() && fs::path(*t).is_relative()) *t = (base / *t).string();
  }
  return c;
}

RunResult run(const ExperimentConfig& cfg) {
  Writer w(cfg);
  switch (cfg.experiment) {
    case Experiment::classify: return run_classify(cfg, w);
    case Experiment::simulate: return run_simulate(cfg, w);
    case Experiment::blowup: return run_blowup(cfg, w);
    case Experiment::compare: return run_compare(cfg, w);
    case Experiment::fluctuate: return run_fluctuate(cfg, w);
    case Experiment::sde: return run_sde(cfg, w);
  }
  return {};
}

std::vector<Diagnostic> validate(const ExperimentConfig& cfg) {
  std::vector<Diagnostic> out;
  auto add = [&out](const AssumptionReport& r, const std::string& name) {
    std::string detail = r.detail;
    if (r.fails() && std::isfinite(r.failing_point)) detail += " at " + brief(r.failing_point);
    out.push_back({name, r.verdict, detail.empty() ? "-" : detail});
  };
  const bool fluct = cfg.experiment == Experiment::fluctuate || cfg.experiment == Experiment::sde;
  const Nonlinearity n = fluct ? build_drift(cfg).phi : build_nonlinearity(cfg);
  const auto f_grid = log_spaced(1.0, 1e12, 60);
  add(check_assumption_f(n, f_grid), "f");
  const auto bv = classify_blowup(n);
  out.push_back({"blowup_class", Verdict::holds,
                 bv.kind == BlowupClass::finite_time_blowup ? "finite-time blow-up"
                 : bv.kind == BlowupClass::global_existence ? "global existence"
                                                            : "inconclusive"});
  if (fluct) {
    const auto fs = build_drift(cfg);
    add(check_symmetry(fs), "symmetry");
    const bool sde = cfg.experiment == Experiment::sde;
    if (!sde || cfg.drift != "zero") {
      const Envelope gamma = sde ? lil_envelope(build_sigma(cfg), "Sigma") : envelope_by_name(cfg.envelope);
      try {
        const auto g = check_gamma_condition(n, gamma, cfg.gamma_K, cfg.gamma_horizon);
        out.push_back({"gamma", g.pass ? Verdict::holds : Verdict::fails, g.detail});
      } catch (const PreconditionError& e) {
        out.push_back({"gamma", Verdict::fails, e.what()});
      }
    }
  }
  if (cfg.experiment != Experiment::sde) {
    const auto fc = build_forcing(cfg);
    if (cfg.experiment != Experiment::fluctuate) {
      std::vector<double> grid(401);
      for (int i = 0; i <= 400; ++i) grid[i] = cfg.horizon * i / 400.0;
      add(check_assumption_H(fc, grid), "H");
    }
    if (cfg.experiment == Experiment::classify || cfg.experiment == Experiment::compare) {
      const std::vector<double> lambdas{2.0, 4.0, 10.0};
      add(check_o_regular_variation(n, lambdas, f_grid), "orv");
    }
  }
  return out;
}

int main_entry(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Growth rates and blow-up of x' = f(x) + h(t)"};
  std::string config_path, out_dir;
  bool plots = false, validate_only = false;
  std::optional<std::uint64_t> seed;
  std::optional<double> tol;
  app.add_option("--config", config_path, "experiment config file")->required();
  app.add_option("--out", out_dir, "output directory (overrides [output] dir)");
  app.add_flag("--plots", plots, "write plot.py next to the CSVs");
  app.add_option("--seed", seed, "random seed (overrides [experiment] seed)");
  app.add_option("--tol", tol, "integrator relative tolerance");
  app.add_flag("--validate-only", validate_only, "run the assumption checks only");
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitPass : kExitConfig;
  }

  ExperimentConfig cfg;
  try {
    cfg = load_config(config_path);
    if (!out_dir.empty()) cfg.out_dir = out_dir;
    if (plots) cfg.plots = true;
    if (seed) cfg.seed = *seed;
    if (tol) {
      if (!(*tol > 0.0 && *tol < 0.1)) throw ConfigError("--tol", 0, "--tol must lie in (0, 0.1)");
      cfg.rel_tol = *tol;
    }
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  }

  const std::string exp = to_string(cfg.experiment);
  auto failure = [&](int code, const std::string& kind, const std::string& what) {
    err << kind << ": " << what << '\n';
    out << "verdict " << exp << " fail error=" << kind << '\n';
    return code;
  };
  try {
    if (validate_only) {
      bool failed = false;
      for (const auto& d : validate(cfg)) {
        out << "check " << d.check << ' ' << to_string(d.verdict) << ' ' << d.detail << '\n';
        failed |= d.verdict == Verdict::fails;
      }
      return failed ? kExitAssumption : kExitPass;
    }
    const RunResult r = run(cfg);
    out << r.verdict << '\n';
    return r.exit_code;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::invalid_argument& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const PreconditionError& e) {
    return failure(kExitAssumption, "assumption", e.what());
  } catch (const DomainError& e) {
    return failure(kExitAssumption, "assumption", e.what());
  } catch (const Error& e) {
    return failure(kExitNumerical, "numerical", e.what());
  } catch (const std::exception& e) {
    return failure(kExitNumerical, "numerical", e.what());
  }
}

}  // namespace superlin::cli
