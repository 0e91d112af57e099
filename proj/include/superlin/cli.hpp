#pragma once

#include <cstdint>
#include <iosfwd>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "superlin/errors.hpp"
#include "superlin/nonlinearity.hpp"

namespace superlin::cli {

enum ExitCode : int {
  kExitPass = 0,
  kExitConfig = 1,
  kExitVerdictFail = 2,
  kExitAssumption = 3,
  kExitNumerical = 4,
};

/// Config problem; `field` is "section.key", `line` is 0 when unknown.
class ConfigError : public Error {
 public:
  ConfigError(const std::string& field, int line, const std::string& what);
  [[nodiscard]] const std::string& field() const noexcept { return field_; }
  [[nodiscard]] int line() const noexcept { return line_; }

 private:
  std::string field_;
  int line_;
};

enum class Experiment { classify, simulate, blowup, compare, fluctuate, sde };

[[nodiscard]] const char* to_string(Experiment e);

struct ExperimentConfig {
  std::string source = "<config>";

  std::string nonlinearity = "shifted_xlogx";
  std::map<std::string, double> nonlinearity_params;
  std::string nonlinearity_table;  ///< CSV `x,f`; overrides the catalog name

  std::string forcing = "zero";
  std::map<std::string, double> forcing_params;
  std::string forcing_table;  ///< CSV `t,h`
  std::string envelope = "exp_exp";  ///< gamma for sin_envelope forcing

  Experiment experiment = Experiment::simulate;
  double psi = 1.0;
  double horizon = 10.0;
  double rel_tol = 1e-10;
  std::string mode = "auto";  ///< auto | direct | transformed
  double eps = 0.1;
  double K = std::numeric_limits<double>::quiet_NaN();  ///< compare: NaN takes K_hat
  double lower_start_factor = 0.5;
  std::uint64_t seed = 42;
  std::size_t paths = 100;
  unsigned threads = 0;
  double dt_max = 0.01;
  double window_start = std::numeric_limits<double>::quiet_NaN();
  std::string sigma = "exp_exp";  ///< unit | exp_exp
  std::string drift = "xloglog";  ///< xloglog | zero
  double gamma_K = 2.0;
  double gamma_horizon = 6.0;
  double band_lo = 0.5;
  double band_hi = 1.5;
  std::string band_statistic = "quartiles";  ///< quartiles: q25..q75 in band; median: q50 in band

  std::string out_dir = ".";
  bool plots = false;
};

/// Parses the sectioned key-value format ([nonlinearity], [forcing], [experiment], [output]).
[[nodiscard]] ExperimentConfig parse_config(std::istream& in, const std::string& source);
/// Table paths in the file are resolved against its directory.
[[nodiscard]] ExperimentConfig load_config(const std::string& path);

struct RunResult {
  int exit_code = kExitPass;
  std::string verdict;  ///< `verdict <experiment> <pass|fail> key=value...`
  std::vector<std::string> files;
};

/// Executes the experiment and writes its CSVs (and plot script) to cfg.out_dir.
[[nodiscard]] RunResult run(const ExperimentConfig& cfg);

struct Diagnostic {
  std::string check;
  Verdict verdict = Verdict::inconclusive;
  std::string detail;
};

/// Assumption checks without integration.
[[nodiscard]] std::vector<Diagnostic> validate(const ExperimentConfig& cfg);

/// Command-line entry: flags --config, --out, --plots, --seed, --tol, --validate-only.
[[nodiscard]] int main_entry(int argc, const char* const* argv, std::ostream& out,
                             std::ostream& err);

}  // namespace superlin::cli
