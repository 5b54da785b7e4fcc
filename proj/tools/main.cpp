#include <exception>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include <wspec/error.hpp>

#include "cli/commands.hpp"
#include "cli/config.hpp"

namespace {

using wspec::cli::AnalysisConfig;

// CLI11 cannot bind std::optional of containers directly; collect raw strings
// and push them through the config-file parser so both paths share validation.
struct RawFlags {
  std::vector<std::string> inputs;
  std::string config_path;
  std::map<std::string, std::string> values;
  bool fast = false;
};

void add_value(CLI::App* app, RawFlags& raw, const std::string& flag, const std::string& key,
               const std::string& help) {
  app->add_option_function<std::string>(
      flag, [&raw, key](const std::string& v) { raw.values[key] = v; }, help);
}

void add_analysis_flags(CLI::App* app, RawFlags& raw, bool grid) {
  add_value(app, raw, "--method,-m", "method", "LS, IM, DM, DV or PO (default DM)");
  add_value(app, raw, "--level", "level", "band level (default 0.95)");
  add_value(app, raw, "--lambda", "lambda", "fixed smoothing parameter instead of selection");
  add_value(app, raw, "--sampling-rate", "sampling_rate", "samples per second, for the Hz axis");
  add_value(app, raw, "--column", "column", "zero-based channel column (default 0)");
  add_value(app, raw, "--seed", "seed", "random seed (default 1)");
  if (grid) {
    add_value(app, raw, "--theta", "theta", "fixed theta1,theta2,theta3,theta4 (with --lambda)");
    add_value(app, raw, "--K", "grid.K", "number of grid frequencies");
    add_value(app, raw, "--J", "grid.J", "number of time blocks");
    add_value(app, raw, "--freqs", "grid.freqs", "explicit comma-separated grid frequencies");
    add_value(app, raw, "--blocks", "grid.blocks", "explicit comma-separated block boundaries");
    add_value(app, raw, "--grid", "grid.preset", "named grid preset (eeg)");
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Smoothing-spline spectral estimation for stationary and locally stationary series",
               "wspec"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(WSPEC_VERSION));

  RawFlags raw;
  auto common = [&](CLI::App* sub) {
    sub->add_option("--config,-c", raw.config_path, "flat key = value config file");
    add_value(sub, raw, "--out,-o", "out", "output directory (default $WSPEC_OUT_DIR or ./wspec-output)");
  };

  auto* estimate = app.add_subcommand("estimate", "smooth log-spectrum of a stationary series");
  estimate->add_option("input", raw.inputs, "CSV file")->expected(0, 1);
  add_analysis_flags(estimate, raw, false);
  common(estimate);

  auto* tv = app.add_subcommand("estimate-tv", "time-varying log-spectrum on a frequency x time grid");
  tv->add_option("input", raw.inputs, "CSV file")->expected(0, 1);
  add_analysis_flags(tv, raw, true);
  common(tv);

  auto* test = app.add_subcommand("test-stationarity", "block permutation test of stationarity");
  test->add_option("input", raw.inputs, "CSV file")->expected(0, 1);
  add_analysis_flags(test, raw, true);
  add_value(test, raw, "--n-perm", "n_perm", "number of permutations (>= 99, default 199)");
  test->add_flag("--fast", raw.fast, "keep smoothing parameters fixed across permutations");
  common(test);

  auto* compare = app.add_subcommand("compare", "difference map between two segments (pre minus base)");
  compare->add_option("inputs", raw.inputs, "pre and base CSV files")->expected(0, 2);
  add_analysis_flags(compare, raw, true);
  common(compare);

  auto* simulate = app.add_subcommand("simulate", "Monte Carlo comparison of selection methods");
  add_value(simulate, raw, "--process", "process", "AR3, MA4, LS1, LS2 or WN");
  add_value(simulate, raw, "--T", "T", "series length");
  add_value(simulate, raw, "--K", "grid.K", "grid frequencies (LS processes)");
  add_value(simulate, raw, "--J", "grid.J", "time blocks (LS processes)");
  add_value(simulate, raw, "--reps", "reps", "replicates");
  add_value(simulate, raw, "--methods", "methods", "comma-separated methods");
  add_value(simulate, raw, "--seed", "seed", "base seed");
  common(simulate);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : wspec::cli::kExitUsage;
  }

  try {
    AnalysisConfig flags;
    for (auto* sub : {estimate, tv, test, compare, simulate}) {
      if (sub->parsed()) flags.command = sub->get_name();
    }
    std::string text;
    for (const auto& [k, v] : raw.values) text += k + " = " + v + "\n";
    AnalysisConfig parsed = wspec::cli::parse_config_text(text, "command line");
    parsed.command = flags.command;
    parsed.inputs = raw.inputs;
    if (raw.fast) parsed.fast = true;

    AnalysisConfig file;
    if (!raw.config_path.empty()) file = wspec::cli::parse_config_file(raw.config_path);
    const wspec::cli::Settings settings = wspec::cli::resolve(wspec::cli::merge(file, parsed));
    return wspec::cli::run(settings, std::cout, std::cerr);
  } catch (const wspec::cli::UsageError& e) {
    std::cerr << "wspec: " << e.what() << "\n";
    return wspec::cli::kExitUsage;
  } catch (const wspec::InvalidInput& e) {
    std::cerr << "wspec: invalid input: " << e.what() << "\n";
    return wspec::cli::kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "wspec: " << e.what() << "\n";
    return wspec::cli::kExitFailure;
  }
}
