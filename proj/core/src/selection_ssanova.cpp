#include <algorithm>
#include <cmath>
#include <limits>

#include "selection_internal.hpp"
#include "wspec/error.hpp"
#include "wspec/selection.hpp"

namespace wspec {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kLogFloor = 1e-12;
constexpr double kEulerGamma = 0.57721;

void check_grid(const LocalPeriodogramGrid& grid) {
  if (grid.size() < 4) throw InvalidInput("time-frequency grid is too small");
  grid_vector(grid);
}

Eigen::VectorXd x_vector(double l, double t2, double t3, double t4) {
  Eigen::VectorXd x(4);
  x << l, t2, t3, t4;
  return x;
}

// Shared driver: prescan log10 lambda at theta = 1, then three simplex starts.
template <class Eval>
void ssanova_search(const Eval& eval, const SelectionOptions& opts) {
  const int m = opts.coarse_points;
  double best_l = 0.5 * (opts.log10_lambda_min + opts.log10_lambda_max);
  double best_v = kInf;
  for (int i = 0; i < m; ++i) {
    const double l = opts.log10_lambda_min + (opts.log10_lambda_max - opts.log10_lambda_min) * i / (m - 1);
    const double v = eval(x_vector(l, 0.0, 0.0, 0.0));
    if (std::isfinite(v) && v < best_v) {
      best_v = v;
      best_l = l;
    }
  }
  Eigen::VectorXd lower(4), upper(4);
  lower << opts.log10_lambda_min, opts.log10_theta_min, opts.log10_theta_min, opts.log10_theta_min;
  upper << opts.log10_lambda_max, opts.log10_theta_max, opts.log10_theta_max, opts.log10_theta_max;
  NelderMeadOptions nm;
  nm.initial_step = opts.simplex_step;
  nm.max_evaluations = opts.simplex_evaluations;
  nm.size_tolerance = opts.simplex_size_tolerance;
  for (const Eigen::VectorXd& start :
       {x_vector(best_l, 0, 0, 0), x_vector(best_l, 2, -2, -2), x_vector(best_l, -2, 2, 2)}) {
    nelder_mead(eval, start, lower, upper, nm);
  }
}

}  // namespace

Theta theta_from_log10(const Eigen::VectorXd& x) {
  if (x.size() != 4) throw InvalidInput("expected (log10 lambda, log10 theta_2..4)");
  return Theta{1.0, std::pow(10.0, x(1)), std::pow(10.0, x(2)), std::pow(10.0, x(3))};
}

// ----------------------------------------------------------------- criteria

CriterionEval gml_ssanova(const SsanovaFit& fit) {
  CriterionEval ev;
  if (fit.converged) {
    const double n = static_cast<double>(fit.y.size());
    ev = detail::gml_core(fit.y, fit.fitted, *fit.decomp->regularize(n * fit.lambda), 1.0);
  } else {
    ev.value = kNaN;
  }
  ev.lambda = fit.lambda;
  ev.theta = fit.theta;
  ev.method = Method::kDM;
  return ev;
}

CriterionEval gml_ssanova(double lambda, const Theta& theta, const LocalPeriodogramGrid& grid,
                          const IrplsOptions& opts) {
  return gml_ssanova(fit_ssanova(grid, lambda, theta, opts));
}

CriterionEval gacv_ssanova(const SsanovaFit& fit, const GacvOptions& opts) {
  CriterionEval ev;
  if (fit.converged) {
    const double n_lambda = static_cast<double>(fit.y.size()) * fit.lambda;
    const Eigen::VectorXd inv = detail::gacv_inverse_diag(fit.y, fit.fitted, *fit.decomp, n_lambda, opts);
    ev = detail::gacv_from_inverse_diag(fit.y, fit.fitted, inv, opts);
  } else {
    ev.value = kNaN;
  }
  ev.lambda = fit.lambda;
  ev.theta = fit.theta;
  ev.method = Method::kDV;
  return ev;
}

CriterionEval gacv_ssanova(double lambda, const Theta& theta, const LocalPeriodogramGrid& grid,
                           const GacvOptions& gopts, const IrplsOptions& opts) {
  return gacv_ssanova(fit_ssanova(grid, lambda, theta, opts), gopts);
}

CriterionEval gml_reduced(const ReducedFit& fit) {
  CriterionEval ev;
  ev.lambda = fit.lambda;
  ev.method = Method::kDM;
  if (!fit.converged) {
    ev.value = kNaN;
    return ev;
  }
  const double weight = static_cast<double>(fit.times.size());
  const StationaryFit& p = fit.pooled;
  if (!p.decomp) {
    // Single frequency: only the unpenalized constant remains.
    ev.value = weight * (p.fitted.array() + p.y.array() * (-p.fitted.array()).exp()).sum();
    ev.ok = std::isfinite(ev.value);
    return ev;
  }
  ev = detail::gml_core(p.y, p.fitted, *p.decomp->regularize(p.n_lambda), weight);
  ev.lambda = fit.lambda;
  return ev;
}

// ----------------------------------------------------------------- selection

SsanovaSelection select_ssanova(const LocalPeriodogramGrid& grid, Method method,
                                const SelectionOptions& opts) {
  if (method != Method::kDM && method != Method::kDV) {
    throw InvalidInput("direct selection supports DM and DV only");
  }
  check_grid(grid);
  const auto geo = make_geometry(grid);
  SsanovaSelection out;
  double best = kInf;
  auto eval = [&](const Eigen::VectorXd& x) {
    const double lambda = detail::lambda_from_log10(x(0));
    const Theta theta = theta_from_log10(x);
    SsanovaFit fit;
    CriterionEval ev;
    try {
      fit = fit_ssanova(grid, std::make_shared<TensorSystem>(geo, theta), lambda, opts.irpls);
      ev = method == Method::kDM ? gml_ssanova(fit) : gacv_ssanova(fit, opts.gacv);
    } catch (const ConvergenceError&) {
      ev.lambda = lambda;
      ev.theta = theta;
      ev.method = method;
    }
    ev.ok = ev.ok && fit.converged;
    const double v = ev.ok ? ev.value : kNaN;
    ev.z.resize(0);
    ev.u_c.resize(0);
    out.criterion_trace.push_back(std::move(ev));
    if (std::isfinite(v) && v < best) {
      best = v;
      out.best_lambda = lambda;
      out.best_theta = theta;
      out.fit = std::move(fit);
    }
    return v;
  };
  ssanova_search(eval, opts);
  if (!std::isfinite(best)) {
    out.nonconverged = true;
    out.diagnostic = "no smoothing parameters produced a converged fit";
  }
  return out;
}

ReducedSelection select_reduced(const LocalPeriodogramGrid& grid, const SelectionOptions& opts) {
  check_grid(grid);
  std::shared_ptr<const DenseSystem> sys;
  if (grid.num_freqs() > 1) sys = stationary_system(grid.freqs);
  ReducedSelection out;
  double best = kInf;
  auto eval = [&](double x) {
    const double lambda = detail::lambda_from_log10(x);
    ReducedFit fit = fit_reduced(grid, sys, lambda, opts.irpls);
    CriterionEval ev = gml_reduced(fit);
    ev.ok = ev.ok && fit.converged;
    const double v = ev.ok ? ev.value : kNaN;
    out.criterion_trace.push_back(std::move(ev));
    if (std::isfinite(v) && v < best) {
      best = v;
      out.best_lambda = lambda;
      out.fit = std::move(fit);
    }
    return v;
  };
  grid_golden_search(eval, opts.log10_lambda_min, opts.log10_lambda_max, opts.coarse_points,
                     opts.golden_tolerance);
  if (!std::isfinite(best)) {
    out.nonconverged = true;
    out.diagnostic = "no smoothing parameter produced a converged reduced fit";
  }
  return out;
}

namespace {

// Minimizes the Gaussian GML of z over (lambda, theta); returns the best x.
Eigen::VectorXd gaussian_ssanova_search(const std::shared_ptr<const TensorGeometry>& geo,
                                        const Eigen::VectorXd& z, const SelectionOptions& opts,
                                        const Eigen::VectorXd* warm, double* best_value) {
  const double n = static_cast<double>(z.size());
  Eigen::VectorXd best_x = x_vector(0, 0, 0, 0);
  double best = kInf;
  auto eval = [&](const Eigen::VectorXd& x) {
    double v = kNaN;
    try {
      auto sys = std::make_shared<TensorSystem>(geo, theta_from_log10(x));
      v = gaussian_gml(*sys->regularize(n * detail::lambda_from_log10(x(0))), z);
    } catch (const ConvergenceError&) {
      v = kNaN;
    }
    if (std::isfinite(v) && v < best) {
      best = v;
      best_x = x;
    }
    return v;
  };
  if (warm == nullptr) {
    ssanova_search(eval, opts);
  } else {
    Eigen::VectorXd lower(4), upper(4);
    lower << opts.log10_lambda_min, opts.log10_theta_min, opts.log10_theta_min, opts.log10_theta_min;
    upper << opts.log10_lambda_max, opts.log10_theta_max, opts.log10_theta_max, opts.log10_theta_max;
    NelderMeadOptions nm;
    nm.initial_step = 0.5 * opts.simplex_step;
    nm.max_evaluations = opts.simplex_evaluations;
    nm.size_tolerance = opts.simplex_size_tolerance;
    nelder_mead(eval, *warm, lower, upper, nm);
  }
  if (best_value != nullptr) *best_value = best;
  return best_x;
}

SsanovaFit gaussian_ssanova_fit(const LocalPeriodogramGrid& grid,
                                const std::shared_ptr<const TensorGeometry>& geo,
                                const Eigen::VectorXd& z, const Eigen::VectorXd& x,
                                PenalizedSolution* sol_out) {
  const double lambda = detail::lambda_from_log10(x(0));
  auto sys = std::make_shared<TensorSystem>(geo, theta_from_log10(x));
  const PenalizedSolution sol = sys->regularize(static_cast<double>(z.size()) * lambda)->solve(z);
  SsanovaFit fit;
  fit.d1 = sol.d(0);
  fit.d2 = sol.d.size() > 1 ? sol.d(1) : 0.0;
  fit.c = sol.c;
  fit.lambda = lambda;
  fit.theta = sys->theta();
  fit.fitted = sol.fitted;
  fit.freqs = grid.freqs;
  fit.times = grid.times;
  fit.y = grid_vector(grid);
  fit.decomp = std::move(sys);
  fit.converged = true;
  fit.iterations = 1;
  if (sol_out != nullptr) *sol_out = sol;
  return fit;
}

}  // namespace

SsanovaSelection indirect_gml_fit(const LocalPeriodogramGrid& grid, const SelectionOptions& opts) {
  check_grid(grid);
  const auto geo = make_geometry(grid);
  const Eigen::VectorXd y = grid_vector(grid);
  SsanovaSelection out;
  Eigen::VectorXd g = Eigen::VectorXd::Constant(y.size(), std::log(y.mean() + opts.irpls.init_epsilon));
  Eigen::VectorXd x_prev;
  bool converged = false;
  for (int it = 1; it <= opts.indirect_max_iterations; ++it) {
    out.iterations = it;
    const Eigen::VectorXd z = (g.array() + y.array() * (-g.array()).exp() - 1.0).matrix();
    if (!z.allFinite()) {
      out.diagnostic = "non-finite working response";
      break;
    }
    double value = kNaN;
    const Eigen::VectorXd x =
        gaussian_ssanova_search(geo, z, opts, x_prev.size() ? &x_prev : nullptr, &value);
    if (!std::isfinite(value)) {
      out.diagnostic = "Gaussian GML undefined on the working response";
      break;
    }
    SsanovaFit fit = gaussian_ssanova_fit(grid, geo, z, x, nullptr);
    CriterionEval ev;
    ev.lambda = fit.lambda;
    ev.theta = fit.theta;
    ev.value = value;
    ev.ok = true;
    ev.method = Method::kIM;
    out.criterion_trace.push_back(std::move(ev));
    const double change = (fit.fitted - g).cwiseAbs().maxCoeff();
    const bool stable =
        x_prev.size() && (x - x_prev).cwiseAbs().maxCoeff() < opts.indirect_simplex_tolerance;
    g = fit.fitted;
    x_prev = x;
    out.fit = std::move(fit);
    out.best_lambda = out.fit.lambda;
    out.best_theta = out.fit.theta;
    if (change < opts.irpls.tolerance && stable) {
      converged = true;
      break;
    }
  }
  out.fit.y = y;
  out.fit.converged = converged;
  out.fit.iterations = out.iterations;
  if (out.fit.decomp) {
    out.fit.objective = penalized_whittle(y, out.fit.fitted, out.fit.c,
                                          out.fit.decomp->apply_sigma(out.fit.c),
                                          static_cast<double>(y.size()) * out.fit.lambda);
  }
  out.nonconverged = !converged;
  if (!converged && out.diagnostic.empty()) out.diagnostic = "indirect GML did not stabilize";
  return out;
}

SsanovaSelection ls_fit(const LocalPeriodogramGrid& grid, const SelectionOptions& opts) {
  check_grid(grid);
  const auto geo = make_geometry(grid);
  const Eigen::VectorXd y = grid_vector(grid);
  const Eigen::VectorXd z = (y.array().max(kLogFloor).log() + kEulerGamma).matrix();
  SsanovaSelection out;
  double value = kNaN;
  const Eigen::VectorXd x = gaussian_ssanova_search(geo, z, opts, nullptr, &value);
  if (!std::isfinite(value)) {
    out.nonconverged = true;
    out.diagnostic = "Gaussian GML undefined";
    return out;
  }
  out.fit = gaussian_ssanova_fit(grid, geo, z, x, nullptr);
  out.best_lambda = out.fit.lambda;
  out.best_theta = out.fit.theta;
  CriterionEval ev;
  ev.lambda = out.fit.lambda;
  ev.theta = out.fit.theta;
  ev.value = value;
  ev.ok = true;
  ev.method = Method::kLS;
  out.criterion_trace.push_back(std::move(ev));
  return out;
}

SsanovaSelection estimate_ssanova(const LocalPeriodogramGrid& grid, Method method,
                                  const SelectionOptions& opts) {
  switch (method) {
    case Method::kDM:
    case Method::kDV: return select_ssanova(grid, method, opts);
    case Method::kIM: return indirect_gml_fit(grid, opts);
    case Method::kLS: return ls_fit(grid, opts);
    case Method::kPO: throw InvalidInput("PO is defined for stationary data only");
  }
  throw InvalidInput("unknown method");
}

}  // namespace wspec
