#include "cli/commands.hpp"

#include <cmath>
#include <fstream>
#include <ostream>

#include <wspec/error.hpp>
#include <wspec/wspec.hpp>

#include "cli/csv.hpp"
#include "cli/serialize.hpp"

namespace wspec::cli {

namespace {

// Input loading and grid construction count as validation: failures here
// are usage errors and nothing is written.
TimeSeries load_channel(const std::filesystem::path& path, const Settings& s) {
  ChannelTable table = read_channels(path, s.sampling_rate);
  if (s.column >= table.channels.size()) {
    throw UsageError("column " + std::to_string(s.column) + " not present in " + path.string() +
                     " (" + std::to_string(table.channels.size()) + " columns)");
  }
  try {
    return normalize_series(table.channels)[s.column];
  } catch (const InvalidInput& e) {
    throw UsageError(e.what());
  }
}

GridOptions grid_options(const Settings& s) {
  if (s.grid_preset == "eeg") return eeg_grid_options();
  GridOptions g;
  g.num_freqs = s.K;
  g.num_blocks = s.J;
  g.freqs = s.grid_freqs;
  g.blocks = s.grid_blocks;
  return g;
}

LocalPeriodogramGrid load_grid(const std::filesystem::path& path, const Settings& s) {
  const TimeSeries x = load_channel(path, s);
  try {
    const GridOptions g = resolve_grid(x.size(), grid_options(s));
    if (g.num_blocks < 4) {
      throw UsageError("locally stationary estimation needs at least 4 time blocks, got " +
                       std::to_string(g.num_blocks));
    }
    return local_periodograms(x.values, g);
  } catch (const InvalidInput& e) {
    throw UsageError(e.what());
  }
}

SelectionOptions selection_options() { return SelectionOptions{}; }

std::vector<double> half_band(std::size_t T) {
  std::vector<double> w;
  for (std::size_t k = 0; k <= T / 2; ++k) w.push_back(static_cast<double>(k) / static_cast<double>(T));
  return w;
}

StationarySelection fit_fixed(const PeriodogramSet& pgram, double lambda, const SelectionOptions& opts) {
  StationarySelection sel;
  sel.best_lambda = lambda;
  sel.fit = fit_stationary(pgram, lambda, opts.irpls);
  sel.nonconverged = !sel.fit.converged;
  if (sel.nonconverged) sel.diagnostic = "IRPLS did not converge at the requested lambda";
  return sel;
}

SsanovaSelection fit_fixed(const LocalPeriodogramGrid& grid, double lambda, const Theta& theta,
                           const SelectionOptions& opts) {
  SsanovaSelection sel;
  sel.best_lambda = lambda;
  sel.best_theta = theta;
  sel.fit = fit_ssanova(grid, lambda, theta, opts.irpls);
  sel.nonconverged = !sel.fit.converged;
  if (sel.nonconverged) sel.diagnostic = "IRPLS did not converge at the requested (lambda, theta)";
  return sel;
}

SsanovaSelection tv_selection(const LocalPeriodogramGrid& grid, const Settings& s) {
  const SelectionOptions opts = selection_options();
  if (s.lambda) return fit_fixed(grid, *s.lambda, *s.theta, opts);
  return estimate_ssanova(grid, s.method, opts);
}

std::string status_of(bool failed) { return failed ? "nonconverged" : "ok"; }

Json grid_json(const LocalPeriodogramGrid& grid, double rate) {
  std::vector<double> hz;
  for (double w : grid.freqs) hz.push_back(w * rate);
  Json bounds = Json::array();
  for (std::size_t b : grid.block_bounds) bounds.push_back(b);
  return {{"K", grid.num_freqs()},
          {"J", grid.num_times()},
          {"freqs", numbers(grid.freqs)},
          {"freqs_hz", numbers(hz)},
          {"times", numbers(grid.times)},
          {"block_bounds", std::move(bounds)}};
}

// Long-format rows (omega, hz, u, value...) with omega fastest.
std::string surface_csv(const std::vector<double>& omegas, const std::vector<double>& us, double rate,
                        const std::vector<std::string>& value_names,
                        const std::vector<const Eigen::VectorXd*>& columns) {
  std::vector<std::string> header{"omega", "hz", "u"};
  header.insert(header.end(), value_names.begin(), value_names.end());
  std::vector<std::vector<std::string>> rows;
  for (std::size_t j = 0; j < us.size(); ++j) {
    for (std::size_t k = 0; k < omegas.size(); ++k) {
      const auto i = static_cast<Eigen::Index>(k + omegas.size() * j);
      std::vector<std::string> row{format_double(omegas[k]), format_double(omegas[k] * rate),
                                   format_double(us[j])};
      for (const auto* c : columns) row.push_back(format_double((*c)[i]));
      rows.push_back(std::move(row));
    }
  }
  return csv_text(header, rows);
}

}  // namespace

std::string config_text(const Settings& s) {
  std::string out;
  for (const auto& [k, v] : echo(s)) out += k + " = " + v + "\n";
  return out;
}

Outcome cmd_estimate(const Settings& s) {
  const TimeSeries x = load_channel(s.inputs.at(0), s);
  if (x.size() < kMinStationaryLength) {
    throw UsageError("series has " + std::to_string(x.size()) + " samples; at least 8 are needed");
  }
  const PeriodogramSet pgram = drop_zero_frequency(periodogram(x));
  const SelectionOptions opts = selection_options();

  Outcome o;
  StationarySelection sel;
  std::string diagnostic;
  bool failed = false;
  try {
    sel = s.lambda ? fit_fixed(pgram, *s.lambda, opts) : estimate_stationary(pgram, s.method, opts);
    failed = sel.nonconverged || !sel.fit.converged;
    diagnostic = sel.diagnostic;
  } catch (const ConvergenceError& e) {
    failed = true;
    diagnostic = e.what();
  }

  Json payload = {{"method", std::string(method_name(s.method))},
                  {"T", x.size()},
                  {"sampling_rate", s.sampling_rate}};
  if (!failed) {
    const std::vector<double> omegas = half_band(x.size());
    const ConfidenceBand band = bayesian_ci(sel.fit, omegas, s.level);
    payload["selection"] = selection_json(sel);
    payload["band_level"] = s.level;
    payload["omega"] = numbers(omegas);
    payload["ghat"] = numbers(band.center);
    payload["lower"] = numbers(band.lower);
    payload["upper"] = numbers(band.upper);

    std::vector<std::vector<std::string>> two, full;
    for (std::size_t k = 0; k < omegas.size(); ++k) {
      const auto i = static_cast<Eigen::Index>(k);
      two.push_back({format_double(omegas[k]), format_double(band.center[i])});
      full.push_back({format_double(omegas[k]), format_double(omegas[k] * s.sampling_rate),
                      format_double(band.center[i]), format_double(band.lower[i]),
                      format_double(band.upper[i]), format_double(band.sd[i])});
    }
    o.files["spectrum.csv"] = csv_text({"omega", "ghat"}, two);
    o.files["band.csv"] = csv_text({"omega", "hz", "ghat", "lower", "upper", "sd"}, full);
    o.summary = "selected lambda " + format_double(sel.best_lambda);
  } else {
    payload["selection"] = {{"lambda", number(sel.best_lambda)},
                            {"criterion_trace", trace_json(sel.criterion_trace)}};
    o.exit_code = kExitFailure;
    o.summary = "estimation failed: " + diagnostic;
  }
  o.files["estimate.json"] = dump(bundle(s, status_of(failed), diagnostic, std::move(payload)));
  return o;
}

Outcome cmd_estimate_tv(const Settings& s) {
  const LocalPeriodogramGrid grid = load_grid(s.inputs.at(0), s);
  Outcome o;
  SsanovaSelection sel;
  std::string diagnostic;
  bool failed = false;
  try {
    sel = tv_selection(grid, s);
    failed = sel.nonconverged || !sel.fit.converged;
    diagnostic = sel.diagnostic;
  } catch (const ConvergenceError& e) {
    failed = true;
    diagnostic = e.what();
  }
  Json payload = {{"method", std::string(method_name(s.method))},
                  {"sampling_rate", s.sampling_rate},
                  {"grid", grid_json(grid, s.sampling_rate)}};
  if (!failed) {
    const ConfidenceBand band = bayesian_ci(sel.fit, grid.freqs, grid.times, s.level);
    payload["selection"] = selection_json(sel);
    payload["band_level"] = s.level;
    o.files["surface.csv"] = surface_csv(grid.freqs, grid.times, s.sampling_rate,
                                         {"value", "lower", "upper"},
                                         {&band.center, &band.lower, &band.upper});
    o.summary = "selected lambda " + format_double(sel.best_lambda);
  } else {
    o.exit_code = kExitFailure;
    o.summary = "estimation failed: " + diagnostic;
  }
  o.files["estimate_tv.json"] = dump(bundle(s, status_of(failed), diagnostic, std::move(payload)));
  return o;
}

Outcome cmd_test_stationarity(const Settings& s) {
  const LocalPeriodogramGrid grid = load_grid(s.inputs.at(0), s);
  StationarityTestOptions opts;
  opts.fast = s.fast;
  opts.method = s.method;
  opts.selection = selection_options();
  Outcome o;
  Json payload = {{"method", std::string(method_name(s.method))},
                  {"grid", grid_json(grid, s.sampling_rate)}};
  try {
    const StationarityTestResult res = stationarity_test(grid, s.n_perm, s.seed, opts);
    payload["test"] = test_json(res);
    o.summary = "p-values: S1 " + format_double(res.p1) + ", S2 " + format_double(res.p2);
    o.files["stationarity.json"] = dump(bundle(s, "ok", "", std::move(payload)));
  } catch (const ConvergenceError& e) {
    o.exit_code = kExitFailure;
    o.summary = std::string("stationarity test failed: ") + e.what();
    o.files["stationarity.json"] = dump(bundle(s, "nonconverged", e.what(), std::move(payload)));
  }
  return o;
}

Outcome cmd_compare(const Settings& s) {
  const LocalPeriodogramGrid pre = load_grid(s.inputs.at(0), s);
  const LocalPeriodogramGrid base = load_grid(s.inputs.at(1), s);
  if (pre.freqs != base.freqs || pre.times != base.times) {
    throw UsageError("the two inputs give incompatible grids (series lengths differ?)");
  }
  Outcome o;
  Json payload = {{"method", std::string(method_name(s.method))},
                  {"grid", grid_json(pre, s.sampling_rate)}};
  std::string diagnostic;
  SsanovaSelection a, b;
  try {
    a = tv_selection(pre, s);
    if (a.nonconverged || !a.fit.converged) throw ConvergenceError("pre segment: " + a.diagnostic);
    b = tv_selection(base, s);
    if (b.nonconverged || !b.fit.converged) throw ConvergenceError("base segment: " + b.diagnostic);
  } catch (const ConvergenceError& e) {
    o.exit_code = kExitFailure;
    o.summary = std::string("comparison failed: ") + e.what();
    o.files["compare.json"] = dump(bundle(s, "nonconverged", e.what(), std::move(payload)));
    return o;
  }
  const DifferenceMap map = segment_difference(a.fit, b.fit, s.level);
  const Eigen::Index n = map.delta.size();
  const Eigen::VectorXd delta = Eigen::Map<const Eigen::VectorXd>(map.delta.data(), n);
  Eigen::VectorXd sig(n), sign(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    sig[i] = map.significant.data()[i] ? 1.0 : 0.0;
    sign[i] = map.sign.data()[i];
  }
  std::size_t positive = 0, negative = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    positive += sign[i] > 0;
    negative += sign[i] < 0;
  }
  payload["pre"] = selection_json(a);
  payload["base"] = selection_json(b);
  payload["level"] = s.level;
  payload["significant_positive"] = positive;
  payload["significant_negative"] = negative;
  o.files["difference.csv"] = surface_csv(map.omegas, map.us, s.sampling_rate,
                                          {"delta", "significant", "sign"}, {&delta, &sig, &sign});
  o.files["compare.json"] = dump(bundle(s, "ok", "", std::move(payload)));
  o.summary = std::to_string(positive) + " cells significantly higher, " + std::to_string(negative) +
              " lower";
  return o;
}

Outcome cmd_simulate(const Settings& s) {
  BenchmarkConfig config;
  config.process = s.process;
  config.T = s.T;
  config.K = s.K;
  config.J = s.J;
  config.methods = s.methods;
  config.reps = s.reps;
  config.base_seed = s.seed;
  config.selection = selection_options();
  const SimulationReport report = benchmark(config);
  Outcome o;
  const std::string table = format_report_table(report);
  o.files["simulation.json"] = dump(bundle(s, "ok", "", report_json(report)));
  o.files["simulation.txt"] = table;
  o.summary = table;
  return o;
}

int run(const Settings& s, std::ostream& out, std::ostream& err) {
  Outcome o;
  if (s.command == "estimate") {
    o = cmd_estimate(s);
  } else if (s.command == "estimate-tv") {
    o = cmd_estimate_tv(s);
  } else if (s.command == "test-stationarity") {
    o = cmd_test_stationarity(s);
  } else if (s.command == "compare") {
    o = cmd_compare(s);
  } else if (s.command == "simulate") {
    o = cmd_simulate(s);
  } else {
    throw UsageError("unknown command '" + s.command + "'");
  }
  o.files["config.txt"] = config_text(s);

  std::filesystem::create_directories(s.out_dir);
  for (const auto& [name, text] : o.files) {
    std::ofstream f(s.out_dir / name, std::ios::binary);
    f << text;
    if (!f) {
      err << "wspec: cannot write " << (s.out_dir / name).string() << "\n";
      return kExitFailure;
    }
  }
  (o.exit_code == kExitOk ? out : err) << o.summary << (o.summary.ends_with('\n') ? "" : "\n");
  out << "wrote " << o.files.size() << " file(s) to " << s.out_dir.string() << "\n";
  return o.exit_code;
}

}  // namespace wspec::cli
