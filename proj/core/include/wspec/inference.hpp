#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "wspec/kernels.hpp"
#include "wspec/periodogram.hpp"
#include "wspec/selection.hpp"
#include "wspec/whittle.hpp"

namespace wspec {

struct ConfidenceBand {
  std::vector<GridPoint> points;  // u is 0 for stationary bands
  Eigen::VectorXd center;
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;
  Eigen::VectorXd sd;
  double level = 0.95;
};

/// Points of omegas x us with omega varying fastest.
std::vector<GridPoint> lattice_points(std::span<const double> omegas, std::span<const double> us);

/// Average number of times each distinct ordinate enters the likelihood. Ordinates at
/// omega and 1 - omega within a block are merged when their values agree, as they do for
/// real data. `y` holds num_blocks columns of freqs.size() values, frequency fastest.
double ordinate_multiplicity(std::span<const double> freqs, const Eigen::VectorXd& y, std::size_t num_blocks = 1);

/// Posterior standard deviations of ghat under the Gaussian approximation
/// with the converged (unit) weights, inflated by the ordinate multiplicity so that
/// mirrored ordinates are not counted as independent information.
Eigen::VectorXd posterior_sd(const StationaryFit& fit, std::span<const double> omegas);
Eigen::VectorXd posterior_sd(const SsanovaFit& fit, std::span<const GridPoint> points);

ConfidenceBand bayesian_ci(const StationaryFit& fit, std::span<const double> omegas, double level);
ConfidenceBand bayesian_ci(const SsanovaFit& fit, std::span<const double> omegas,
                           std::span<const double> us, double level);

struct DifferenceMap {
  std::vector<double> omegas;
  std::vector<double> us;
  Eigen::MatrixXd delta;  // pre - base, rows follow omegas
  Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> significant;
  Eigen::MatrixXi sign;   // +1 / -1 where significant, 0 elsewhere
  double level = 0.95;
};

/// Difference of two fits on a shared lattice; a cell is significant when
/// the baseline estimate falls outside the pre-segment band.
DifferenceMap segment_difference(const SsanovaFit& fit_pre, const SsanovaFit& fit_base, double level,
                                 std::span<const double> omegas, std::span<const double> us);
/// Same on the fits' own grid points.
DifferenceMap segment_difference(const SsanovaFit& fit_pre, const SsanovaFit& fit_base, double level);

struct StationarityTestOptions {
  /// Select (lambda, theta) once on a seeded random block shuffle and reuse them for the
  /// observed grid and every replicate. The shuffle makes the choice independent of the
  /// observed block order, so the test stays exact under the null.
  bool fast = false;
  std::size_t lattice = 64;
  double max_drop_fraction = 0.2;
  /// DM or DV.
  Method method = Method::kDM;
  SelectionOptions selection;
};

struct StationarityTestResult {
  double s1 = 0.0;
  double s2 = 0.0;
  double p1 = 1.0;
  double p2 = 1.0;
  std::size_t n_perm = 0;
  std::size_t dropped = 0;
  std::vector<double> perm_s1;  // NaN marks a dropped replicate
  std::vector<double> perm_s2;
  std::uint64_t seed = 0;
  bool fast = false;
  double lambda = 0.0;
  Theta theta{};
  double lambda_reduced = 0.0;
};

struct TestStatistics {
  double s1 = 0.0;
  double s2 = 0.0;
};

/// S1 = D_R - D_F and the L2 distance S2 (trapezoid rule on a lattice x lattice grid).
TestStatistics test_statistics(const SsanovaFit& full, const ReducedFit& reduced,
                               std::size_t lattice = 64);

/// Grid with its time-block columns reordered: column j of the result is column perm[j].
LocalPeriodogramGrid permute_blocks(const LocalPeriodogramGrid& grid, std::span<const std::size_t> perm);

/// Add-one permutation p-value over the finite replicates.
double permutation_p_value(double observed, std::span<const double> replicates);

StationarityTestResult stationarity_test(const LocalPeriodogramGrid& grid, std::size_t n_perm,
                                         std::uint64_t seed, const StationarityTestOptions& opts = {});

}  // namespace wspec
