#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

#include "wspec/error.hpp"
#include "wspec/simulation.hpp"

namespace wspec {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double run_stationary(const PeriodogramSet& pgram, Method m, const SelectionOptions& opts,
                      const Eigen::VectorXd& truth) {
  const StationarySelection sel = estimate_stationary(pgram, m, opts);
  if (sel.nonconverged || !sel.fit.converged) return kNaN;
  return mse(sel.fit.fitted, truth);
}

double run_ssanova(const LocalPeriodogramGrid& grid, Method m, const SelectionOptions& opts,
                   const Eigen::VectorXd& truth) {
  const SsanovaSelection sel = estimate_ssanova(grid, m, opts);
  if (sel.nonconverged || !sel.fit.converged) return kNaN;
  return mse(sel.fit.fitted, truth);
}

}  // namespace

const MethodSummary* SimulationReport::find(Method m) const {
  for (const auto& s : methods) {
    if (s.method == m) return &s;
  }
  return nullptr;
}

double median(std::vector<double> values) {
  std::erase_if(values, [](double v) { return std::isnan(v); });
  if (values.empty()) return kNaN;
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  return n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

SimulationReport benchmark(const BenchmarkConfig& config) {
  if (config.reps == 0) throw InvalidInput("reps must be positive");
  if (config.methods.empty()) throw InvalidInput("at least one method is required");
  const ProcessSpec probe = process_by_name(config.process, config.T, config.base_seed);
  const bool tv = probe.kind == ProcessKind::kLocallyStationary;
  if (tv && (config.K == 0 || config.J == 0)) throw InvalidInput("locally stationary benchmarks need K and J");
  if (tv && std::find(config.methods.begin(), config.methods.end(), Method::kPO) != config.methods.end()) {
    throw InvalidInput("PO is defined for stationary processes only");
  }

  const auto start = std::chrono::steady_clock::now();
  SimulationReport report;
  report.config = config;
  std::vector<Method> methods = config.methods;
  if (std::find(methods.begin(), methods.end(), Method::kDM) == methods.end()) methods.push_back(Method::kDM);
  for (Method m : methods) {
    MethodSummary s;
    s.method = m;
    s.mse.assign(config.reps, kNaN);
    report.methods.push_back(std::move(s));
  }

  for (std::size_t r = 0; r < config.reps; ++r) {
    const ProcessSpec spec = process_by_name(config.process, config.T, config.base_seed + r);
    const TimeSeries x = simulate(spec, config.generator);
    if (tv) {
      const LocalPeriodogramGrid grid = local_periodograms(x.values, config.K, config.J);
      const Eigen::VectorXd truth = true_log_spectrum(spec, grid);
      for (auto& s : report.methods) {
        try {
          s.mse[r] = run_ssanova(grid, s.method, config.selection, truth);
        } catch (const ConvergenceError&) {
          s.mse[r] = kNaN;
        }
      }
    } else {
      const PeriodogramSet pgram = periodogram(x);
      const Eigen::VectorXd truth = true_log_spectrum(spec);
      for (auto& s : report.methods) {
        try {
          s.mse[r] = run_stationary(pgram, s.method, config.selection, truth);
        } catch (const ConvergenceError&) {
          s.mse[r] = kNaN;
        }
      }
    }
  }

  const MethodSummary* dm = report.find(Method::kDM);
  const std::vector<double> dm_mse = dm->mse;
  for (auto& s : report.methods) {
    s.failures = static_cast<std::size_t>(std::count_if(s.mse.begin(), s.mse.end(),
                                                        [](double v) { return !std::isfinite(v); }));
    for (std::size_t r = 0; r < config.reps; ++r) {
      if (std::isfinite(s.mse[r]) && std::isfinite(dm_mse[r]) && dm_mse[r] > 0.0) {
        s.relative_efficiency.push_back(s.mse[r] / dm_mse[r]);
      }
    }
    s.median_re = median(s.relative_efficiency);
    double total = 0.0;
    for (double v : s.relative_efficiency) total += v;
    s.mean_re = s.relative_efficiency.empty() ? kNaN : total / static_cast<double>(s.relative_efficiency.size());
  }
  report.wall_clock_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

std::string format_report_table(const SimulationReport& report) {
  std::ostringstream os;
  const auto& c = report.config;
  os << "process " << c.process << ", T = " << c.T;
  if (c.K != 0) os << ", (K, J) = (" << c.K << ", " << c.J << ")";
  os << ", reps = " << c.reps << ", base seed = " << c.base_seed << "\n";
  os << "relative efficiency MSE_m / MSE_DM (failures in parentheses)\n";
  char line[128];
  std::snprintf(line, sizeof line, "%-6s %10s %10s %9s\n", "method", "median", "mean", "failures");
  os << line;
  for (const auto& s : report.methods) {
    std::snprintf(line, sizeof line, "%-6s %10.3f %10.3f %9zu\n", std::string(method_name(s.method)).c_str(),
                  s.median_re, s.mean_re, s.failures);
    os << line;
  }
  return os.str();
}

}  // namespace wspec
