#include "wspec/whittle.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <string>

#include <Eigen/QR>

#include "wspec/error.hpp"

namespace wspec {

namespace {

void check_observations(const Eigen::VectorXd& y, std::size_t n) {
  if (static_cast<std::size_t>(y.size()) != n) throw InvalidInput("observation count mismatch");
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    if (!(y(i) >= 0.0) || !std::isfinite(y(i))) {
      throw InvalidInput("periodogram ordinates must be finite and nonnegative");
    }
  }
}

double whittle_sum(const Eigen::VectorXd& y, const Eigen::VectorXd& g) {
  return (g.array() + y.array() * (-g.array()).exp()).sum();
}

}  // namespace

double penalized_whittle(const Eigen::VectorXd& y, const Eigen::VectorXd& g,
                         const Eigen::VectorXd& c, const Eigen::VectorXd& sigma_c,
                         double n_lambda) {
  return whittle_sum(y, g) + 0.5 * n_lambda * c.dot(sigma_c);
}

Eigen::VectorXd penalized_whittle_gradient(const Eigen::VectorXd& y, const PenaltySystem& sys,
                                           const Eigen::VectorXd& c, const Eigen::VectorXd& d,
                                           double n_lambda) {
  const Eigen::VectorXd sigma_c = sys.apply_sigma(c);
  const Eigen::VectorXd g = sys.null_basis() * d + sigma_c;
  const Eigen::VectorXd u = (1.0 - y.array() * (-g.array()).exp()).matrix();
  Eigen::VectorXd grad(c.size() + d.size());
  grad.head(c.size()) = sys.apply_sigma(u) + n_lambda * sigma_c;
  grad.tail(d.size()) = sys.null_basis().transpose() * u;
  return grad;
}

IrplsResult irpls_solve(const Eigen::VectorXd& y, const PenaltySystem& sys, double n_lambda,
                        const IrplsOptions& opts) {
  check_observations(y, sys.size());
  const auto reg = sys.regularize(n_lambda);
  const Eigen::Index n = y.size();

  IrplsResult r;
  const double start = std::log(y.mean() + opts.init_epsilon);
  Eigen::VectorXd g = Eigen::VectorXd::Constant(n, start);
  Eigen::VectorXd c = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd sigma_c = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd d = sys.null_coefficients(g);
  double obj = penalized_whittle(y, g, c, sigma_c, n_lambda);
  r.initial_objective = obj;
  std::vector<std::array<Eigen::VectorXd, 4>> hist_out;  // fitted, c, sigma c, d
  std::vector<Eigen::VectorXd> hist_res;

  for (int it = 1; it <= opts.max_iterations; ++it) {
    r.iterations = it;
    const Eigen::VectorXd z = (g.array() + y.array() * (-g.array()).exp() - 1.0).matrix();
    if (!z.allFinite()) {
      r.failure = "non-finite working response";
      break;
    }
    const PenalizedSolution sol = reg->solve(z);
    const Eigen::VectorXd sigma_new = sol.fitted - sys.null_basis() * sol.d;

    // A full step that moves g by less than the tolerance is the fixed point.
    const double full_change = (sol.fitted - g).cwiseAbs().maxCoeff();

    // Step-halving keeps the penalized likelihood monotone.
    double step = 1.0;
    Eigen::VectorXd g_try, c_try, s_try, d_try;
    double obj_try = 0.0;
    bool accepted = false;
    for (int h = 0; h <= opts.max_halvings; ++h) {
      g_try = g + step * (sol.fitted - g);
      c_try = c + step * (sol.c - c);
      s_try = sigma_c + step * (sigma_new - sigma_c);
      d_try = d + step * (sol.d - d);
      obj_try = penalized_whittle(y, g_try, c_try, s_try, n_lambda);
      if (std::isfinite(obj_try) && obj_try <= obj + 1e-12 * std::max(1.0, std::abs(obj))) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) {
      r.failure = "step-halving failed to decrease the objective";
      break;
    }
    if (step == 1.0 && full_change < opts.tolerance) {
      g = std::move(g_try);
      c = std::move(c_try);
      sigma_c = std::move(s_try);
      d = std::move(d_try);
      obj = obj_try;
      r.converged = true;
      break;
    }
    // Scoring with unit weights contracts slowly at moderate lambda. Anderson
    // mixing of past scoring outputs is tried after each full step and kept
    // only if it lowers the objective further.
    if (step == 1.0 && opts.anderson_depth > 0) {
      hist_out.push_back({sol.fitted, sol.c, sigma_new, sol.d});
      hist_res.push_back(sol.fitted - g);
      if (static_cast<int>(hist_res.size()) > opts.anderson_depth + 1) {
        hist_out.erase(hist_out.begin());
        hist_res.erase(hist_res.begin());
      }
      const auto m = static_cast<Eigen::Index>(hist_res.size()) - 1;
      if (m >= 1) {
        Eigen::MatrixXd df(n, m);
        for (Eigen::Index j = 0; j < m; ++j) df.col(j) = hist_res[j + 1] - hist_res[j];
        const Eigen::VectorXd gamma = df.colPivHouseholderQr().solve(hist_res.back());
        if (gamma.allFinite()) {
          std::array<Eigen::VectorXd, 4> mix = hist_out.back();
          for (Eigen::Index j = 0; j < m; ++j) {
            for (std::size_t v = 0; v < 4; ++v) mix[v] -= gamma(j) * (hist_out[j + 1][v] - hist_out[j][v]);
          }
          const double o = penalized_whittle(y, mix[0], mix[1], mix[2], n_lambda);
          if (std::isfinite(o) && o < obj_try) {
            g_try = std::move(mix[0]);
            c_try = std::move(mix[1]);
            s_try = std::move(mix[2]);
            d_try = std::move(mix[3]);
            obj_try = o;
          }
        }
      }
    } else {
      hist_out.clear();
      hist_res.clear();
    }
    g = std::move(g_try);
    c = std::move(c_try);
    sigma_c = std::move(s_try);
    d = std::move(d_try);
    obj = obj_try;
  }
  if (!r.converged && r.failure.empty()) r.failure = "iteration limit reached";
  r.c = std::move(c);
  r.d = std::move(d);
  r.fitted = std::move(g);
  r.objective = obj;
  return r;
}

IrplsResult irpls_solve(const Eigen::VectorXd& y, const Eigen::MatrixXd& basis,
                        const GramMatrix& sigma, double lambda, const IrplsOptions& opts) {
  auto sys = std::make_shared<DenseSystem>(sigma.entries, basis);
  return irpls_solve(y, *sys, static_cast<double>(y.size()) * lambda, opts);
}

// ---------------------------------------------------------------- stationary

StationaryFit fit_stationary(std::span<const double> freqs, const Eigen::VectorXd& y,
                             std::shared_ptr<const DenseSystem> sys, double n_lambda,
                             const IrplsOptions& opts) {
  IrplsResult r = irpls_solve(y, *sys, n_lambda, opts);
  StationaryFit fit;
  fit.d = r.d(0);
  fit.c = std::move(r.c);
  fit.n_lambda = n_lambda;
  fit.lambda = n_lambda / static_cast<double>(y.size());
  fit.fitted = std::move(r.fitted);
  fit.freqs.assign(freqs.begin(), freqs.end());
  fit.y = y;
  fit.decomp = std::move(sys);
  fit.converged = r.converged;
  fit.iterations = r.iterations;
  fit.objective = r.objective;
  fit.initial_objective = r.initial_objective;
  return fit;
}

StationaryFit fit_stationary(const PeriodogramSet& pgram, double lambda, const IrplsOptions& opts) {
  const std::size_t T = pgram.length();
  if (T < kMinStationaryLength) throw InvalidInput("periodogram too short");
  if (!(lambda > 0.0)) throw InvalidInput("lambda must be positive");
  const Eigen::VectorXd y = Eigen::Map<const Eigen::VectorXd>(pgram.values.data(),
                                                              static_cast<Eigen::Index>(T));
  return fit_stationary(pgram.freqs, y, system_for(pgram.freqs), static_cast<double>(T) * lambda, opts);
}

double evaluate_spectrum(const StationaryFit& fit, double omega) {
  const double w[1] = {omega};
  return evaluate_spectrum(fit, std::span<const double>(w, 1))(0);
}

Eigen::VectorXd evaluate_spectrum(const StationaryFit& fit, std::span<const double> omegas) {
  if (!fit.converged) throw ConvergenceError("cannot evaluate an unconverged fit");
  Eigen::VectorXd out = cross_r1(omegas, fit.freqs) * fit.c;
  out.array() += fit.d;
  return out;
}

// ---------------------------------------------------------------- ss anova

Eigen::MatrixXd SsanovaFit::fitted_matrix() const {
  return Eigen::Map<const Eigen::MatrixXd>(fitted.data(), static_cast<Eigen::Index>(num_freqs()),
                                           static_cast<Eigen::Index>(num_times()));
}

std::shared_ptr<const TensorGeometry> make_geometry(const LocalPeriodogramGrid& grid) {
  return std::make_shared<TensorGeometry>(grid.freqs, grid.times);
}

Eigen::VectorXd grid_vector(const LocalPeriodogramGrid& grid) {
  const auto n = static_cast<Eigen::Index>(grid.size());
  if (grid.values.rows() != static_cast<Eigen::Index>(grid.num_freqs()) ||
      grid.values.cols() != static_cast<Eigen::Index>(grid.num_times())) {
    throw InvalidInput("grid values do not match its axes");
  }
  return Eigen::Map<const Eigen::VectorXd>(grid.values.data(), n);
}

SsanovaFit fit_ssanova(const LocalPeriodogramGrid& grid, std::shared_ptr<const TensorSystem> sys,
                       double lambda, const IrplsOptions& opts) {
  if (!(lambda > 0.0)) throw InvalidInput("lambda must be positive");
  const Eigen::VectorXd y = grid_vector(grid);
  const double n = static_cast<double>(y.size());
  IrplsResult r = irpls_solve(y, *sys, n * lambda, opts);
  SsanovaFit fit;
  fit.d1 = r.d(0);
  fit.d2 = r.d.size() > 1 ? r.d(1) : 0.0;
  fit.c = std::move(r.c);
  fit.lambda = lambda;
  fit.theta = sys->theta();
  fit.fitted = std::move(r.fitted);
  fit.freqs = grid.freqs;
  fit.times = grid.times;
  fit.y = y;
  fit.decomp = std::move(sys);
  fit.converged = r.converged;
  fit.iterations = r.iterations;
  fit.objective = r.objective;
  fit.initial_objective = r.initial_objective;
  return fit;
}

SsanovaFit fit_ssanova(const LocalPeriodogramGrid& grid, double lambda, const Theta& theta,
                       const IrplsOptions& opts) {
  auto sys = std::make_shared<TensorSystem>(make_geometry(grid), theta);
  return fit_ssanova(grid, std::move(sys), lambda, opts);
}

Eigen::MatrixXd evaluate_lattice(const SsanovaFit& fit, std::span<const double> omegas,
                                 std::span<const double> us) {
  if (!fit.converged) throw ConvergenceError("cannot evaluate an unconverged fit");
  const auto K = static_cast<Eigen::Index>(fit.num_freqs());
  const auto J = static_cast<Eigen::Index>(fit.num_times());
  const auto lw = static_cast<Eigen::Index>(omegas.size());
  const auto lu = static_cast<Eigen::Index>(us.size());
  const Eigen::Map<const Eigen::MatrixXd> cm(fit.c.data(), K, J);
  const Eigen::MatrixXd ew = cross_r1(omegas, fit.freqs);
  const Eigen::MatrixXd eu = cross_r2(us, fit.times);
  Eigen::VectorXd v(J);
  for (Eigen::Index j = 0; j < J; ++j) v(j) = fit.times[static_cast<std::size_t>(j)] - 0.5;
  Eigen::RowVectorXd vl(lu);
  for (Eigen::Index j = 0; j < lu; ++j) vl(j) = us[static_cast<std::size_t>(j)] - 0.5;

  const Theta& th = fit.theta;
  const Eigen::MatrixXd ewc = ew * cm;  // lw x J
  Eigen::MatrixXd out = th[3] * (ewc * eu.transpose());
  out.colwise() += th[0] * ewc.rowwise().sum();
  out += th[2] * (ewc * v) * vl;
  out.rowwise() += th[1] * (cm.colwise().sum() * eu.transpose()) + fit.d2 * vl;
  out.array() += fit.d1;
  (void)lw;
  return out;
}

double evaluate_tvs(const SsanovaFit& fit, double omega, double u) {
  const double w[1] = {omega};
  const double t[1] = {u};
  return evaluate_lattice(fit, std::span<const double>(w, 1), std::span<const double>(t, 1))(0, 0);
}

// ---------------------------------------------------------------- reduced

ReducedFit fit_reduced(const LocalPeriodogramGrid& grid, std::shared_ptr<const DenseSystem> sys,
                       double lambda, const IrplsOptions& opts) {
  if (!(lambda > 0.0)) throw InvalidInput("lambda must be positive");
  const auto K = static_cast<Eigen::Index>(grid.num_freqs());
  const auto J = static_cast<Eigen::Index>(grid.num_times());
  grid_vector(grid);
  ReducedFit fit;
  fit.freqs = grid.freqs;
  fit.times = grid.times;
  fit.lambda = lambda;
  const Eigen::VectorXd ybar = grid.values.rowwise().mean();
  if (K == 1) {
    // Only the constant survives: the Whittle MLE is the log of the mean.
    StationaryFit p;
    p.d = std::log(ybar(0) + opts.init_epsilon);
    p.c = Eigen::VectorXd::Zero(1);
    p.fitted = Eigen::VectorXd::Constant(1, p.d);
    p.freqs = grid.freqs;
    p.y = ybar;
    p.lambda = lambda;
    p.n_lambda = lambda;
    p.converged = true;
    p.iterations = 1;
    p.objective = p.d + ybar(0) * std::exp(-p.d);
    fit.pooled = std::move(p);
  } else {
    fit.pooled = fit_stationary(grid.freqs, ybar, std::move(sys), static_cast<double>(K) * lambda, opts);
    fit.pooled.lambda = lambda;
  }
  fit.decomp = fit.pooled.decomp;
  fit.d1 = fit.pooled.d;
  fit.c = fit.pooled.c;
  fit.converged = fit.pooled.converged;
  fit.iterations = fit.pooled.iterations;
  fit.objective = static_cast<double>(J) * fit.pooled.objective;
  fit.fitted.resize(K * J);
  for (Eigen::Index j = 0; j < J; ++j) fit.fitted.segment(j * K, K) = fit.pooled.fitted;
  return fit;
}

ReducedFit fit_reduced(const LocalPeriodogramGrid& grid, double lambda, const IrplsOptions& opts) {
  std::shared_ptr<const DenseSystem> sys;
  if (grid.num_freqs() > 1) sys = stationary_system(grid.freqs);
  return fit_reduced(grid, std::move(sys), lambda, opts);
}

Eigen::MatrixXd evaluate_lattice(const ReducedFit& fit, std::span<const double> omegas,
                                 std::span<const double> us) {
  if (!fit.converged) throw ConvergenceError("cannot evaluate an unconverged fit");
  for (double u : us) {
    if (!(u >= 0.0 && u <= 1.0)) throw InvalidInput("evaluation time outside [0, 1]");
  }
  Eigen::VectorXd col = cross_r1(omegas, fit.freqs) * fit.c;
  col.array() += fit.d1;
  return col.replicate(1, static_cast<Eigen::Index>(us.size()));
}

double evaluate_reduced(const ReducedFit& fit, double omega, double u) {
  const double w[1] = {omega};
  const double t[1] = {u};
  return evaluate_lattice(fit, std::span<const double>(w, 1), std::span<const double>(t, 1))(0, 0);
}

std::vector<double> unit_lattice(std::size_t n) {
  if (n < 2) throw InvalidInput("lattice needs at least two points");
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = static_cast<double>(i) / static_cast<double>(n - 1);
  out.back() = 1.0;
  return out;
}

}  // namespace wspec
