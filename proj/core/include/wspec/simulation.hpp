#pragma once

#include <complex>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "wspec/periodogram.hpp"
#include "wspec/selection.hpp"
#include "wspec/whittle.hpp"

namespace wspec {

/// Log-spectrum g(omega, u); stationary processes ignore u.
using LogSpectrum = std::function<double(double, double)>;

enum class ProcessKind { kArma, kLocallyStationary };

struct ProcessSpec {
  ProcessKind kind = ProcessKind::kArma;
  std::string name;
  std::vector<double> ar;  // X_t = sum ar_i X_{t-i} + e_t + sum ma_j e_{t-j}
  std::vector<double> ma;
  LogSpectrum g_true;      // locally stationary only
  std::size_t T = 0;
  std::uint64_t seed = 0;
};

ProcessSpec ar3_process(std::size_t T, std::uint64_t seed);
ProcessSpec ma4_process(std::size_t T, std::uint64_t seed);
ProcessSpec ls1_process(std::size_t T, std::uint64_t seed);
ProcessSpec ls2_process(std::size_t T, std::uint64_t seed);
/// AR3, MA4, LS1, LS2 or WN (unit white noise); throws InvalidInput otherwise.
ProcessSpec process_by_name(const std::string& name, std::size_t T, std::uint64_t seed);

/// Normal innovations from a generator seeded by (seed, stream).
std::vector<double> normal_draws(std::size_t n, std::uint64_t seed, std::uint64_t stream = 0);

TimeSeries gen_arma(const ProcessSpec& spec);
double true_arma_spectrum(const ProcessSpec& spec, double omega);
/// Largest modulus among the roots of z^p - ar_1 z^{p-1} - ... - ar_p.
double ar_companion_radius(const std::vector<double>& ar);

double ls1_g(double omega, double u);
double ls2_g(double omega, double u);

enum class Amplitude {
  kHalfLog,  // exp(g/2): blocked periodograms are unbiased for exp(g)
  kFullLog   // exp(g), the literal reading
};

struct GeneratorOptions {
  Amplitude amplitude = Amplitude::kHalfLog;
  double interpolation_tolerance = 1e-12;
  std::size_t initial_nodes = 16;
  std::size_t max_nodes = 512;
};

/// Hermitian-symmetric complex normals Z_0..Z_{T-1} with E|Z_k|^2 = 1/T.
std::vector<std::complex<double>> hermitian_normals(std::size_t T, std::uint64_t seed);

/// Time-varying synthesis through FFTs at Chebyshev nodes in u.
TimeSeries gen_locally_stationary(const LogSpectrum& g, std::size_t T, std::uint64_t seed,
                                  const GeneratorOptions& opts = {});
/// O(T^2) direct sum with the same random stream.
TimeSeries gen_locally_stationary_reference(const LogSpectrum& g, std::size_t T, std::uint64_t seed,
                                            const GeneratorOptions& opts = {});

TimeSeries simulate(const ProcessSpec& spec, const GeneratorOptions& opts = {});

double mse(const Eigen::VectorXd& fitted, const Eigen::VectorXd& truth);
/// Against log f at the fit's frequencies.
double mse(const StationaryFit& fit, const std::function<double(double)>& g_true);
/// Against g on the fit's K x J grid.
double mse(const SsanovaFit& fit, const LogSpectrum& g_true);

/// True log-spectrum on the T Fourier frequencies.
Eigen::VectorXd true_log_spectrum(const ProcessSpec& spec);
/// True log-spectrum on a K x J grid, frequency fastest.
Eigen::VectorXd true_log_spectrum(const ProcessSpec& spec, const LocalPeriodogramGrid& grid);

struct BenchmarkConfig {
  std::string process = "AR3";
  std::size_t T = 128;
  std::size_t K = 0;  // locally stationary processes only
  std::size_t J = 0;
  std::vector<Method> methods{Method::kLS, Method::kIM, Method::kDM, Method::kDV, Method::kPO};
  std::size_t reps = 20;
  std::uint64_t base_seed = 1;
  SelectionOptions selection;
  GeneratorOptions generator;
};

struct MethodSummary {
  Method method = Method::kDM;
  std::vector<double> mse;  // NaN where the method failed
  std::size_t failures = 0;
  std::vector<double> relative_efficiency;  // MSE_m / MSE_DM, pairwise complete
  double median_re = 0.0;
  double mean_re = 0.0;
};

struct SimulationReport {
  BenchmarkConfig config;
  std::vector<MethodSummary> methods;
  double wall_clock_seconds = 0.0;

  const MethodSummary* find(Method m) const;
};

/// Median of the non-NaN entries; NaN when none remain.
double median(std::vector<double> values);

SimulationReport benchmark(const BenchmarkConfig& config);
/// Plain-text summary table of median relative efficiencies.
std::string format_report_table(const SimulationReport& report);

}  // namespace wspec
