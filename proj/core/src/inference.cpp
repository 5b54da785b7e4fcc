#include "wspec/inference.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <string>

#include <boost/math/distributions/normal.hpp>
#include <Eigen/Cholesky>

#include "wspec/error.hpp"

namespace wspec {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double normal_quantile(double level) {
  if (!(level > 0.0 && level < 1.0)) throw InvalidInput("confidence level must lie in (0, 1)");
  return boost::math::quantile(boost::math::normal(), 0.5 * (1.0 + level));
}

// Posterior variance from kernel sections xi (n x m), their diagonal R(x,x)
// and null-space values phi (p x m).
Eigen::VectorXd posterior_variance(const RegularizedSystem& reg, const Eigen::MatrixXd& xi,
                                   const Eigen::VectorXd& rxx, const Eigen::MatrixXd& phi) {
  const Eigen::MatrixXd& s = reg.base().null_basis();
  const Eigen::MatrixXd minv_xi = reg.solve_m(xi);
  const Eigen::MatrixXd minv_s = reg.solve_m(s);
  Eigen::LLT<Eigen::MatrixXd> k(s.transpose() * minv_s);
  const Eigen::MatrixXd r = phi - minv_s.transpose() * xi;
  const Eigen::MatrixXd kr = k.solve(r);
  Eigen::VectorXd var = rxx - xi.cwiseProduct(minv_xi).colwise().sum().transpose() +
                        r.cwiseProduct(kr).colwise().sum().transpose();
  var /= reg.n_lambda();
  return var.cwiseMax(0.0);
}

ConfidenceBand make_band(std::vector<GridPoint> points, Eigen::VectorXd center, Eigen::VectorXd sd,
                         double level) {
  const double z = normal_quantile(level);
  ConfidenceBand band;
  band.points = std::move(points);
  band.lower = center - z * sd;
  band.upper = center + z * sd;
  band.center = std::move(center);
  band.sd = std::move(sd);
  band.level = level;
  return band;
}

}  // namespace

std::vector<GridPoint> lattice_points(std::span<const double> omegas, std::span<const double> us) {
  std::vector<GridPoint> pts;
  pts.reserve(omegas.size() * us.size());
  for (double u : us) {
    for (double w : omegas) pts.push_back({w, u});
  }
  return pts;
}

double ordinate_multiplicity(std::span<const double> freqs, const Eigen::VectorXd& y, std::size_t num_blocks) {
  const std::size_t K = freqs.size();
  if (K == 0 || num_blocks == 0 || static_cast<std::size_t>(y.size()) != K * num_blocks) {
    throw InvalidInput("ordinate_multiplicity: size mismatch");
  }
  constexpr double kFreqTol = 1e-12;
  constexpr double kValueTol = 1e-9;
  std::size_t classes = 0;
  for (std::size_t j = 0; j < num_blocks; ++j) {
    for (std::size_t k = 0; k < K; ++k) {
      const double yk = y(static_cast<Eigen::Index>(j * K + k));
      bool merged = false;
      for (std::size_t m = 0; m < k && !merged; ++m) {
        const double mirror = freqs[m] == 0.0 ? 0.0 : 1.0 - freqs[m];
        const double ym = y(static_cast<Eigen::Index>(j * K + m));
        merged = std::abs(freqs[k] - mirror) <= kFreqTol &&
                 std::abs(yk - ym) <= kValueTol * std::max({1.0, std::abs(yk), std::abs(ym)});
      }
      if (!merged) ++classes;
    }
  }
  return static_cast<double>(K * num_blocks) / static_cast<double>(classes);
}

Eigen::VectorXd posterior_sd(const StationaryFit& fit, std::span<const double> omegas) {
  if (!fit.converged) throw ConvergenceError("cannot build a band from an unconverged fit");
  const auto reg = fit.decomp->regularize(fit.n_lambda);
  const Eigen::MatrixXd xi = cross_r1(fit.freqs, omegas);
  const auto m = static_cast<Eigen::Index>(omegas.size());
  const Eigen::VectorXd rxx = Eigen::VectorXd::Constant(m, 1.0 / 720.0);
  const Eigen::MatrixXd phi = Eigen::MatrixXd::Ones(1, m);
  const double multiplicity = ordinate_multiplicity(fit.freqs, fit.y);
  return (multiplicity * posterior_variance(*reg, xi, rxx, phi)).cwiseSqrt();
}

Eigen::VectorXd posterior_sd(const SsanovaFit& fit, std::span<const GridPoint> points) {
  if (!fit.converged) throw ConvergenceError("cannot build a band from an unconverged fit");
  const auto reg = fit.decomp->regularize(static_cast<double>(fit.y.size()) * fit.lambda);
  const auto n = static_cast<Eigen::Index>(fit.y.size());
  const auto m = static_cast<Eigen::Index>(points.size());
  const auto K = fit.num_freqs();
  const auto p = static_cast<Eigen::Index>(fit.decomp->null_dim());
  Eigen::MatrixXd xi(n, m);
  Eigen::VectorXd rxx(m);
  Eigen::MatrixXd phi(p, m);
  for (Eigen::Index col = 0; col < m; ++col) {
    const GridPoint x = points[static_cast<std::size_t>(col)];
    for (Eigen::Index i = 0; i < n; ++i) {
      const auto k = static_cast<std::size_t>(i) % K;
      const auto j = static_cast<std::size_t>(i) / K;
      xi(i, col) = rk_theta(x, {fit.freqs[k], fit.times[j]}, fit.theta);
    }
    rxx(col) = rk_theta(x, x, fit.theta);
    phi(0, col) = 1.0;
    if (p > 1) phi(1, col) = x.u - 0.5;
  }
  const double multiplicity = ordinate_multiplicity(fit.freqs, fit.y, fit.num_times());
  return (multiplicity * posterior_variance(*reg, xi, rxx, phi)).cwiseSqrt();
}

ConfidenceBand bayesian_ci(const StationaryFit& fit, std::span<const double> omegas, double level) {
  normal_quantile(level);
  Eigen::VectorXd center = evaluate_spectrum(fit, omegas);
  Eigen::VectorXd sd = posterior_sd(fit, omegas);
  std::vector<GridPoint> pts;
  for (double w : omegas) pts.push_back({w, 0.0});
  return make_band(std::move(pts), std::move(center), std::move(sd), level);
}

ConfidenceBand bayesian_ci(const SsanovaFit& fit, std::span<const double> omegas,
                           std::span<const double> us, double level) {
  normal_quantile(level);
  const Eigen::MatrixXd lat = evaluate_lattice(fit, omegas, us);
  Eigen::VectorXd center = Eigen::Map<const Eigen::VectorXd>(lat.data(), lat.size());
  std::vector<GridPoint> pts = lattice_points(omegas, us);
  Eigen::VectorXd sd = posterior_sd(fit, pts);
  return make_band(std::move(pts), std::move(center), std::move(sd), level);
}

DifferenceMap segment_difference(const SsanovaFit& fit_pre, const SsanovaFit& fit_base, double level,
                                 std::span<const double> omegas, std::span<const double> us) {
  if (fit_pre.freqs != fit_base.freqs || fit_pre.times != fit_base.times) {
    throw InvalidInput("fits were estimated on incompatible time-frequency grids");
  }
  const ConfidenceBand band = bayesian_ci(fit_pre, omegas, us, level);
  const Eigen::MatrixXd base = evaluate_lattice(fit_base, omegas, us);
  const auto lw = static_cast<Eigen::Index>(omegas.size());
  const auto lu = static_cast<Eigen::Index>(us.size());
  DifferenceMap map;
  map.omegas.assign(omegas.begin(), omegas.end());
  map.us.assign(us.begin(), us.end());
  map.level = level;
  map.delta = Eigen::Map<const Eigen::MatrixXd>(band.center.data(), lw, lu) - base;
  map.significant.resize(lw, lu);
  map.sign = Eigen::MatrixXi::Zero(lw, lu);
  for (Eigen::Index j = 0; j < lu; ++j) {
    for (Eigen::Index i = 0; i < lw; ++i) {
      const Eigen::Index idx = i + lw * j;
      const double b = base(i, j);
      const bool sig = b < band.lower(idx) || b > band.upper(idx);
      map.significant(i, j) = sig;
      if (sig) map.sign(i, j) = map.delta(i, j) > 0.0 ? 1 : -1;
    }
  }
  return map;
}

DifferenceMap segment_difference(const SsanovaFit& fit_pre, const SsanovaFit& fit_base, double level) {
  return segment_difference(fit_pre, fit_base, level, fit_pre.freqs, fit_pre.times);
}

// ----------------------------------------------------------------- permutation test

TestStatistics test_statistics(const SsanovaFit& full, const ReducedFit& reduced, std::size_t lattice) {
  if (full.fitted.size() != reduced.fitted.size()) throw InvalidInput("fits disagree in size");
  const Eigen::ArrayXd y = full.y.array();
  const Eigen::ArrayXd gf = full.fitted.array();
  const Eigen::ArrayXd gr = reduced.fitted.array();
  TestStatistics st;
  st.s1 = ((gr + y * (-gr).exp()) - (gf + y * (-gf).exp())).sum();

  const std::vector<double> axis = unit_lattice(lattice);
  const Eigen::MatrixXd diff = evaluate_lattice(full, axis, axis) - evaluate_lattice(reduced, axis, axis);
  Eigen::VectorXd w = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(lattice),
                                                1.0 / static_cast<double>(lattice - 1));
  w(0) *= 0.5;
  w(w.size() - 1) *= 0.5;
  st.s2 = w.dot(diff.cwiseAbs2() * w);
  return st;
}

LocalPeriodogramGrid permute_blocks(const LocalPeriodogramGrid& grid, std::span<const std::size_t> perm) {
  if (perm.size() != grid.num_times()) throw InvalidInput("permutation length must equal J");
  std::vector<bool> seen(perm.size(), false);
  for (std::size_t p : perm) {
    if (p >= perm.size() || seen[p]) throw InvalidInput("block order is not a permutation");
    seen[p] = true;
  }
  LocalPeriodogramGrid out = grid;
  for (std::size_t j = 0; j < perm.size(); ++j) {
    out.values.col(static_cast<Eigen::Index>(j)) = grid.values.col(static_cast<Eigen::Index>(perm[j]));
  }
  return out;
}

double permutation_p_value(double observed, std::span<const double> replicates) {
  std::size_t kept = 0;
  std::size_t exceed = 0;
  for (double r : replicates) {
    if (!std::isfinite(r)) continue;
    ++kept;
    if (r >= observed) ++exceed;
  }
  return static_cast<double>(1 + exceed) / static_cast<double>(kept + 1);
}

StationarityTestResult stationarity_test(const LocalPeriodogramGrid& grid, std::size_t n_perm,
                                         std::uint64_t seed, const StationarityTestOptions& opts) {
  if (n_perm < 99) throw InvalidInput("at least 99 permutations are required");
  if (grid.num_times() < 2) throw InvalidInput("the stationarity test needs at least two time blocks");
  if (opts.method != Method::kDM && opts.method != Method::kDV) {
    throw InvalidInput("the stationarity test selects smoothing by DM or DV only");
  }

  const std::size_t J = grid.num_times();
  auto shuffle_for = [&](std::uint32_t stream) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed & 0xffffffffu), static_cast<std::uint32_t>(seed >> 32), stream};
    std::mt19937_64 rng(seq);
    std::vector<std::size_t> perm(J);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    std::shuffle(perm.begin(), perm.end(), rng);
    return perm;
  };

  // Fast mode selects on a shuffled copy: selecting on the observed order would tune the
  // smoothing to that order and inflate the observed statistic relative to the replicates.
  constexpr std::uint32_t kSelectionStream = 0xffffffffu;
  const SsanovaSelection full =
      opts.fast ? select_ssanova(permute_blocks(grid, shuffle_for(kSelectionStream)), opts.method, opts.selection)
                : select_ssanova(grid, opts.method, opts.selection);
  if (full.nonconverged) throw ConvergenceError("full model fit failed: " + full.diagnostic);
  const SsanovaFit observed_fit =
      opts.fast ? fit_ssanova(grid, full.fit.decomp, full.best_lambda, opts.selection.irpls) : full.fit;
  if (!observed_fit.converged) throw ConvergenceError("full model fit did not converge");
  const ReducedSelection reduced = select_reduced(grid, opts.selection);
  if (reduced.nonconverged) throw ConvergenceError("reduced model fit failed: " + reduced.diagnostic);

  StationarityTestResult res;
  res.n_perm = n_perm;
  res.seed = seed;
  res.fast = opts.fast;
  res.lambda = full.best_lambda;
  res.theta = full.fit.theta;
  res.lambda_reduced = reduced.best_lambda;
  const TestStatistics observed = test_statistics(observed_fit, reduced.fit, opts.lattice);
  res.s1 = observed.s1;
  res.s2 = observed.s2;

  // The reduced model only sees per-frequency means, which block shuffling leaves unchanged.
  const ReducedFit& reduced_fit = reduced.fit;
  res.perm_s1.assign(n_perm, kNaN);
  res.perm_s2.assign(n_perm, kNaN);
  for (std::size_t b = 0; b < n_perm; ++b) {
    const LocalPeriodogramGrid shuffled = permute_blocks(grid, shuffle_for(static_cast<std::uint32_t>(b)));
    try {
      SsanovaFit fit;
      if (opts.fast) {
        fit = fit_ssanova(shuffled, full.fit.decomp, full.best_lambda, opts.selection.irpls);
      } else {
        SsanovaSelection sel = select_ssanova(shuffled, opts.method, opts.selection);
        if (sel.nonconverged) throw ConvergenceError(sel.diagnostic);
        fit = std::move(sel.fit);
      }
      if (!fit.converged) throw ConvergenceError("replicate fit did not converge");
      const TestStatistics st = test_statistics(fit, reduced_fit, opts.lattice);
      res.perm_s1[b] = st.s1;
      res.perm_s2[b] = st.s2;
    } catch (const ConvergenceError&) {
      ++res.dropped;
    }
  }
  if (static_cast<double>(res.dropped) > opts.max_drop_fraction * static_cast<double>(n_perm)) {
    throw ConvergenceError("stationarity test aborted: " + std::to_string(res.dropped) + " of " +
                           std::to_string(n_perm) + " permutation fits failed");
  }
  res.p1 = permutation_p_value(res.s1, res.perm_s1);
  res.p2 = permutation_p_value(res.s2, res.perm_s2);
  return res;
}

}  // namespace wspec
