#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "wspec/kernels.hpp"
#include "wspec/penalty_system.hpp"
#include "wspec/periodogram.hpp"

namespace wspec {

struct IrplsOptions {
  double tolerance = 1e-6;
  int max_iterations = 50;
  int max_halvings = 30;
  int anderson_depth = 5;  // 0 gives plain scoring
  double init_epsilon = 1e-10;
};

struct IrplsResult {
  Eigen::VectorXd c;
  Eigen::VectorXd d;
  Eigen::VectorXd fitted;
  bool converged = false;
  int iterations = 0;
  double objective = 0.0;
  double initial_objective = 0.0;
  std::string failure;  // empty unless something went wrong
};

/// sum_i {g_i + y_i exp(-g_i)} + (n_lambda / 2) c' Sigma c.
double penalized_whittle(const Eigen::VectorXd& y, const Eigen::VectorXd& g,
                         const Eigen::VectorXd& c, const Eigen::VectorXd& sigma_c,
                         double n_lambda);

/// Gradient of penalized_whittle with respect to (c, d), stacked.
Eigen::VectorXd penalized_whittle_gradient(const Eigen::VectorXd& y, const PenaltySystem& sys,
                                           const Eigen::VectorXd& c, const Eigen::VectorXd& d,
                                           double n_lambda);

/// Fisher-scoring IRPLS with unit weights; n_lambda multiplies the penalty.
IrplsResult irpls_solve(const Eigen::VectorXd& y, const PenaltySystem& sys, double n_lambda,
                        const IrplsOptions& opts = {});

/// Same with an explicit basis and Gram matrix; lambda is scaled by n.
IrplsResult irpls_solve(const Eigen::VectorXd& y, const Eigen::MatrixXd& basis,
                        const GramMatrix& sigma, double lambda, const IrplsOptions& opts = {});

struct StationaryFit {
  double d = 0.0;
  Eigen::VectorXd c;
  double lambda = 0.0;
  Eigen::VectorXd fitted;
  std::vector<double> freqs;
  Eigen::VectorXd y;
  std::shared_ptr<const DenseSystem> decomp;
  bool converged = false;
  int iterations = 0;
  double objective = 0.0;
  double initial_objective = 0.0;
  /// Penalty multiplier actually used, normally T * lambda.
  double n_lambda = 0.0;
};

struct SsanovaFit {
  double d1 = 0.0;
  double d2 = 0.0;
  Eigen::VectorXd c;
  double lambda = 0.0;
  Theta theta{1.0, 1.0, 1.0, 1.0};
  Eigen::VectorXd fitted;  // frequency index fastest
  std::vector<double> freqs;
  std::vector<double> times;
  Eigen::VectorXd y;
  std::shared_ptr<const TensorSystem> decomp;
  bool converged = false;
  int iterations = 0;
  double objective = 0.0;
  double initial_objective = 0.0;

  std::size_t num_freqs() const noexcept { return freqs.size(); }
  std::size_t num_times() const noexcept { return times.size(); }
  /// fitted as a K x J matrix.
  Eigen::MatrixXd fitted_matrix() const;
};

/// Frequency-only model beta_1 + s_1(omega) fitted to all J replicates per frequency.
struct ReducedFit {
  double d1 = 0.0;
  Eigen::VectorXd c;  // one per frequency
  double lambda = 0.0;
  Eigen::VectorXd fitted;  // K x J, frequency fastest; constant across J
  std::vector<double> freqs;
  std::vector<double> times;
  std::shared_ptr<const DenseSystem> decomp;
  bool converged = false;
  int iterations = 0;
  double objective = 0.0;
  /// Fit on the pooled row means, one value per frequency.
  StationaryFit pooled;
};

StationaryFit fit_stationary(const PeriodogramSet& pgram, double lambda,
                             const IrplsOptions& opts = {});
/// Fit on an explicit system; n_lambda is the penalty multiplier.
StationaryFit fit_stationary(std::span<const double> freqs, const Eigen::VectorXd& y,
                             std::shared_ptr<const DenseSystem> sys, double n_lambda,
                             const IrplsOptions& opts = {});

std::shared_ptr<const TensorGeometry> make_geometry(const LocalPeriodogramGrid& grid);
Eigen::VectorXd grid_vector(const LocalPeriodogramGrid& grid);

SsanovaFit fit_ssanova(const LocalPeriodogramGrid& grid, double lambda, const Theta& theta,
                       const IrplsOptions& opts = {});
SsanovaFit fit_ssanova(const LocalPeriodogramGrid& grid, std::shared_ptr<const TensorSystem> sys,
                       double lambda, const IrplsOptions& opts = {});

ReducedFit fit_reduced(const LocalPeriodogramGrid& grid, double lambda,
                       const IrplsOptions& opts = {});
ReducedFit fit_reduced(const LocalPeriodogramGrid& grid, std::shared_ptr<const DenseSystem> sys,
                       double lambda, const IrplsOptions& opts = {});

double evaluate_spectrum(const StationaryFit& fit, double omega);
double evaluate_tvs(const SsanovaFit& fit, double omega, double u);
double evaluate_reduced(const ReducedFit& fit, double omega, double u);

/// ghat on the lattice omegas x us; rows follow omegas.
Eigen::MatrixXd evaluate_lattice(const SsanovaFit& fit, std::span<const double> omegas,
                                 std::span<const double> us);
Eigen::MatrixXd evaluate_lattice(const ReducedFit& fit, std::span<const double> omegas,
                                 std::span<const double> us);
Eigen::VectorXd evaluate_spectrum(const StationaryFit& fit, std::span<const double> omegas);

/// n equally spaced points covering [0,1] inclusive.
std::vector<double> unit_lattice(std::size_t n);

}  // namespace wspec
