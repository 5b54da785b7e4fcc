#include "wspec/simulation.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <mutex>
#include <numbers>
#include <random>
#include <string>

#include <Eigen/Eigenvalues>
#include <fftw3.h>

#include "wspec/error.hpp"

namespace wspec {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

std::mt19937_64 make_rng(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed & 0xffffffffu), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream & 0xffffffffu),
                    static_cast<std::uint32_t>(stream >> 32)};
  return std::mt19937_64(seq);
}

double amplitude(const LogSpectrum& g, double w, double u, Amplitude a) {
  const double v = g(w, u);
  return a == Amplitude::kHalfLog ? std::exp(0.5 * v) : std::exp(v);
}

std::mutex& fftw_mutex() {
  static std::mutex m;
  return m;
}

struct FftwFree {
  void operator()(void* p) const noexcept { fftw_free(p); }
};

}  // namespace

// ----------------------------------------------------------------- processes

ProcessSpec ar3_process(std::size_t T, std::uint64_t seed) {
  ProcessSpec s;
  s.name = "AR3";
  s.ar = {1.4256, -0.7344, 0.1296};
  s.T = T;
  s.seed = seed;
  return s;
}

ProcessSpec ma4_process(std::size_t T, std::uint64_t seed) {
  ProcessSpec s;
  s.name = "MA4";
  s.ma = {-0.3, -0.6, -0.3, 0.6};
  s.T = T;
  s.seed = seed;
  return s;
}

ProcessSpec ls1_process(std::size_t T, std::uint64_t seed) {
  ProcessSpec s;
  s.kind = ProcessKind::kLocallyStationary;
  s.name = "LS1";
  s.g_true = ls1_g;
  s.T = T;
  s.seed = seed;
  return s;
}

ProcessSpec ls2_process(std::size_t T, std::uint64_t seed) {
  ProcessSpec s = ls1_process(T, seed);
  s.name = "LS2";
  s.g_true = ls2_g;
  return s;
}

ProcessSpec process_by_name(const std::string& name, std::size_t T, std::uint64_t seed) {
  if (name == "AR3") return ar3_process(T, seed);
  if (name == "MA4") return ma4_process(T, seed);
  if (name == "LS1") return ls1_process(T, seed);
  if (name == "LS2") return ls2_process(T, seed);
  if (name == "WN") {
    ProcessSpec s;
    s.name = "WN";
    s.T = T;
    s.seed = seed;
    return s;
  }
  throw InvalidInput("unknown process '" + name + "' (expected AR3, MA4, LS1, LS2 or WN)");
}

std::vector<double> normal_draws(std::size_t n, std::uint64_t seed, std::uint64_t stream) {
  auto rng = make_rng(seed, stream);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> out(n);
  for (double& v : out) v = normal(rng);
  return out;
}

double ar_companion_radius(const std::vector<double>& ar) {
  if (ar.empty()) return 0.0;
  const auto p = static_cast<Eigen::Index>(ar.size());
  Eigen::MatrixXd comp = Eigen::MatrixXd::Zero(p, p);
  for (Eigen::Index i = 0; i < p; ++i) comp(0, i) = ar[static_cast<std::size_t>(i)];
  for (Eigen::Index i = 1; i < p; ++i) comp(i, i - 1) = 1.0;
  Eigen::EigenSolver<Eigen::MatrixXd> es(comp, false);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

TimeSeries gen_arma(const ProcessSpec& spec) {
  if (spec.kind != ProcessKind::kArma) throw InvalidInput("not an ARMA process");
  if (spec.T == 0) throw InvalidInput("series length must be positive");
  if (ar_companion_radius(spec.ar) >= 1.0) throw InvalidInput("AR coefficients are not stationary");
  const std::size_t order = std::max(spec.ar.size(), spec.ma.size());
  const std::size_t burn = 10 * order + 100;
  const std::size_t total = spec.T + burn;
  const std::vector<double> e = normal_draws(total, spec.seed);
  std::vector<double> x(total, 0.0);
  for (std::size_t t = 0; t < total; ++t) {
    double v = e[t];
    for (std::size_t j = 0; j < spec.ma.size() && j < t; ++j) v += spec.ma[j] * e[t - j - 1];
    for (std::size_t i = 0; i < spec.ar.size() && i < t; ++i) v += spec.ar[i] * x[t - i - 1];
    x[t] = v;
  }
  TimeSeries out;
  out.values.assign(x.begin() + static_cast<std::ptrdiff_t>(burn), x.end());
  return out;
}

double true_arma_spectrum(const ProcessSpec& spec, double omega) {
  const std::complex<double> z = std::polar(1.0, -kTwoPi * omega);
  std::complex<double> num = 1.0;
  std::complex<double> den = 1.0;
  std::complex<double> zp = 1.0;
  for (double m : spec.ma) {
    zp *= z;
    num += m * zp;
  }
  zp = 1.0;
  for (double a : spec.ar) {
    zp *= z;
    den -= a * zp;
  }
  return std::norm(num) / std::norm(den);
}

double ls1_g(double omega, double u) {
  return 4.0 + std::sin(kTwoPi * u) + std::log(1.25 - std::cos(kTwoPi * omega));
}

double ls2_g(double omega, double u) {
  const double h = (omega - 0.5) * (omega - 0.5);
  const double s = std::sin(kTwoPi * std::exp(u));
  return 5.0 - 8.0 * h + s + 0.01 * h * s;
}

// ----------------------------------------------------------------- locally stationary generator

std::vector<std::complex<double>> hermitian_normals(std::size_t T, std::uint64_t seed) {
  if (T == 0) throw InvalidInput("series length must be positive");
  const std::vector<double> draws = normal_draws(T + 2, seed, 1);
  const double full = std::sqrt(1.0 / static_cast<double>(T));
  const double half = std::sqrt(0.5 / static_cast<double>(T));
  std::vector<std::complex<double>> z(T);
  std::size_t next = 0;
  for (std::size_t k = 0; 2 * k <= T; ++k) {
    if (k == 0 || 2 * k == T) {
      z[k] = {full * draws[next++], 0.0};
    } else {
      z[k] = {half * draws[next], half * draws[next + 1]};
      next += 2;
      z[T - k] = std::conj(z[k]);
    }
  }
  return z;
}

TimeSeries gen_locally_stationary_reference(const LogSpectrum& g, std::size_t T, std::uint64_t seed,
                                            const GeneratorOptions& opts) {
  const auto z = hermitian_normals(T, seed);
  std::vector<std::complex<double>> twiddle(T);
  for (std::size_t m = 0; m < T; ++m) twiddle[m] = std::polar(1.0, kTwoPi * static_cast<double>(m) / static_cast<double>(T));
  TimeSeries out;
  out.values.resize(T);
  const double tn = static_cast<double>(T);
  for (std::size_t t = 0; t < T; ++t) {
    const double u = static_cast<double>(t) / tn;
    std::complex<double> acc = 0.0;
    for (std::size_t k = 0; k < T; ++k) {
      acc += amplitude(g, static_cast<double>(k) / tn, u, opts.amplitude) * twiddle[(k * t) % T] * z[k];
    }
    if (std::abs(acc.imag()) > 1e-8) {
      throw ConvergenceError("generator output has an imaginary residual of " + std::to_string(acc.imag()));
    }
    out.values[t] = acc.real();
  }
  return out;
}

namespace {

struct ChebyshevNodes {
  std::vector<double> nodes;
  std::vector<double> weights;
};

ChebyshevNodes chebyshev(std::size_t m) {
  ChebyshevNodes c;
  c.nodes.resize(m);
  c.weights.resize(m);
  for (std::size_t j = 0; j < m; ++j) {
    const double angle = (2.0 * static_cast<double>(j) + 1.0) * std::numbers::pi / (2.0 * static_cast<double>(m));
    c.nodes[j] = 0.5 - 0.5 * std::cos(angle);
    c.weights[j] = ((j % 2 == 0) ? 1.0 : -1.0) * std::sin(angle);
  }
  return c;
}

// Barycentric basis values l_j(u).
void barycentric(const ChebyshevNodes& c, double u, std::vector<double>& basis) {
  const std::size_t m = c.nodes.size();
  basis.assign(m, 0.0);
  for (std::size_t j = 0; j < m; ++j) {
    if (u == c.nodes[j]) {
      basis[j] = 1.0;
      return;
    }
  }
  double total = 0.0;
  for (std::size_t j = 0; j < m; ++j) {
    basis[j] = c.weights[j] / (u - c.nodes[j]);
    total += basis[j];
  }
  for (double& b : basis) b /= total;
}

// Largest interpolation error of A(k/T, .) over a set of check points.
double interpolation_error(const LogSpectrum& g, std::size_t T, const ChebyshevNodes& c,
                           const std::vector<std::vector<double>>& node_amp, Amplitude a) {
  const double tn = static_cast<double>(T);
  double worst = 0.0;
  std::vector<double> basis;
  constexpr std::size_t kChecks = 37;
  const std::size_t stride = std::max<std::size_t>(1, T / 64);
  for (std::size_t i = 0; i < kChecks; ++i) {
    const double u = (static_cast<double>(i) + 0.37) / static_cast<double>(kChecks);
    barycentric(c, u, basis);
    for (std::size_t k = 0; k < T; k += stride) {
      double interp = 0.0;
      for (std::size_t j = 0; j < basis.size(); ++j) interp += basis[j] * node_amp[j][k];
      worst = std::max(worst, std::abs(interp - amplitude(g, static_cast<double>(k) / tn, u, a)));
    }
  }
  return worst;
}

}  // namespace

TimeSeries gen_locally_stationary(const LogSpectrum& g, std::size_t T, std::uint64_t seed,
                                  const GeneratorOptions& opts) {
  if (T < 2) throw InvalidInput("series length must be at least 2");
  const double tn = static_cast<double>(T);

  ChebyshevNodes cheb;
  std::vector<std::vector<double>> node_amp;
  bool resolved = false;
  for (std::size_t m = std::max<std::size_t>(2, opts.initial_nodes); m <= opts.max_nodes && m <= T; m *= 2) {
    cheb = chebyshev(m);
    node_amp.assign(m, std::vector<double>(T));
    double scale = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
      for (std::size_t k = 0; k < T; ++k) {
        node_amp[j][k] = amplitude(g, static_cast<double>(k) / tn, cheb.nodes[j], opts.amplitude);
        scale = std::max(scale, std::abs(node_amp[j][k]));
      }
    }
    if (interpolation_error(g, T, cheb, node_amp, opts.amplitude) <= opts.interpolation_tolerance * std::max(1.0, scale)) {
      resolved = true;
      break;
    }
  }
  if (!resolved) return gen_locally_stationary_reference(g, T, seed, opts);

  const auto z = hermitian_normals(T, seed);
  const std::size_t m = cheb.nodes.size();
  std::unique_ptr<fftw_complex, FftwFree> buf(static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * T)));
  fftw_plan plan;
  {
    std::lock_guard lock(fftw_mutex());
    plan = fftw_plan_dft_1d(static_cast<int>(T), buf.get(), buf.get(), FFTW_BACKWARD, FFTW_ESTIMATE);
  }
  std::vector<std::vector<std::complex<double>>> node_series(m, std::vector<std::complex<double>>(T));
  for (std::size_t j = 0; j < m; ++j) {
    for (std::size_t k = 0; k < T; ++k) {
      const std::complex<double> v = node_amp[j][k] * z[k];
      buf.get()[k][0] = v.real();
      buf.get()[k][1] = v.imag();
    }
    fftw_execute(plan);
    for (std::size_t t = 0; t < T; ++t) node_series[j][t] = {buf.get()[t][0], buf.get()[t][1]};
  }
  {
    std::lock_guard lock(fftw_mutex());
    fftw_destroy_plan(plan);
  }

  TimeSeries out;
  out.values.resize(T);
  std::vector<double> basis;
  for (std::size_t t = 0; t < T; ++t) {
    barycentric(cheb, static_cast<double>(t) / tn, basis);
    std::complex<double> acc = 0.0;
    for (std::size_t j = 0; j < m; ++j) acc += basis[j] * node_series[j][t];
    if (std::abs(acc.imag()) > 1e-8) {
      throw ConvergenceError("generator output has an imaginary residual of " + std::to_string(acc.imag()));
    }
    out.values[t] = acc.real();
  }
  return out;
}

TimeSeries simulate(const ProcessSpec& spec, const GeneratorOptions& opts) {
  if (spec.kind == ProcessKind::kArma) return gen_arma(spec);
  if (!spec.g_true) throw InvalidInput("locally stationary process without a log-spectrum");
  return gen_locally_stationary(spec.g_true, spec.T, spec.seed, opts);
}

// ----------------------------------------------------------------- error measures

double mse(const Eigen::VectorXd& fitted, const Eigen::VectorXd& truth) {
  if (fitted.size() != truth.size() || fitted.size() == 0) throw InvalidInput("size mismatch in mse");
  return (fitted - truth).squaredNorm() / static_cast<double>(fitted.size());
}

double mse(const StationaryFit& fit, const std::function<double(double)>& g_true) {
  if (!fit.converged) throw ConvergenceError("mse of an unconverged fit");
  Eigen::VectorXd truth(fit.fitted.size());
  for (Eigen::Index k = 0; k < truth.size(); ++k) truth(k) = g_true(fit.freqs[static_cast<std::size_t>(k)]);
  return mse(fit.fitted, truth);
}

double mse(const SsanovaFit& fit, const LogSpectrum& g_true) {
  if (!fit.converged) throw ConvergenceError("mse of an unconverged fit");
  const std::size_t K = fit.num_freqs();
  Eigen::VectorXd truth(fit.fitted.size());
  for (Eigen::Index i = 0; i < truth.size(); ++i) {
    const auto idx = static_cast<std::size_t>(i);
    truth(i) = g_true(fit.freqs[idx % K], fit.times[idx / K]);
  }
  return mse(fit.fitted, truth);
}

Eigen::VectorXd true_log_spectrum(const ProcessSpec& spec) {
  Eigen::VectorXd g(static_cast<Eigen::Index>(spec.T));
  for (std::size_t k = 0; k < spec.T; ++k) {
    const double w = static_cast<double>(k) / static_cast<double>(spec.T);
    g(static_cast<Eigen::Index>(k)) = spec.kind == ProcessKind::kArma ? std::log(true_arma_spectrum(spec, w))
                                                                       : spec.g_true(w, 0.5);
  }
  return g;
}

Eigen::VectorXd true_log_spectrum(const ProcessSpec& spec, const LocalPeriodogramGrid& grid) {
  const std::size_t K = grid.num_freqs();
  Eigen::VectorXd g(static_cast<Eigen::Index>(grid.size()));
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double w = grid.freqs[i % K];
    const double u = grid.times[i / K];
    g(static_cast<Eigen::Index>(i)) = spec.kind == ProcessKind::kArma ? std::log(true_arma_spectrum(spec, w))
                                                                       : spec.g_true(w, u);
  }
  return g;
}

}  // namespace wspec
