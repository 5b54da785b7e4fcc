#include "wspec/selection.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/QR>

#include "selection_internal.hpp"
#include "wspec/error.hpp"

namespace wspec {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kLogFloor = 1e-12;
constexpr double kEulerGamma = 0.57721;
constexpr double kEndpointShift = 0.30135;

Eigen::VectorXd as_vector(const std::vector<double>& v) {
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

}  // namespace

std::string_view method_name(Method m) noexcept {
  switch (m) {
    case Method::kDM: return "DM";
    case Method::kDV: return "DV";
    case Method::kIM: return "IM";
    case Method::kPO: return "PO";
    case Method::kLS: return "LS";
  }
  return "?";
}

Method parse_method(std::string_view name) {
  for (Method m : {Method::kDM, Method::kDV, Method::kIM, Method::kPO, Method::kLS}) {
    if (name == method_name(m)) return m;
  }
  throw InvalidInput("unknown method '" + std::string(name) + "' (expected DM, DV, IM, PO or LS)");
}

namespace detail {

CriterionEval gml_core(const Eigen::VectorXd& y, const Eigen::VectorXd& g,
                       const RegularizedSystem& reg, double weight) {
  CriterionEval ev;
  ev.method = Method::kDM;
  const Eigen::ArrayXd ye = y.array() * (-g.array()).exp();
  ev.u_c = (1.0 - ye).matrix();
  const Eigen::VectorXd yc = g - ev.u_c;
  const double quad = yc.dot(reg.apply_p(yc));
  ev.log_det_ratio = reg.log_det_ratio();
  ev.value = weight * (g.array() + ye).sum() - 0.5 * weight * ev.u_c.squaredNorm() +
             0.5 * (ev.log_det_ratio + weight * reg.n_lambda() * quad);
  ev.ok = std::isfinite(ev.value);
  return ev;
}

CriterionEval gacv_from_inverse_diag(const Eigen::VectorXd& y, const Eigen::VectorXd& g,
                                     const Eigen::VectorXd& inv_diag, const GacvOptions& opts) {
  CriterionEval ev;
  ev.method = Method::kDV;
  const auto n = static_cast<double>(y.size());
  const Eigen::ArrayXd eg = g.array().exp();
  const Eigen::ArrayXd h = inv_diag.array() * 0.5 / eg;  // H_ii = [(W + n lambda Omega)^{-1}]_ii V_ii
  ev.trace_h = h.sum();
  const double w0_trace = opts.denominator == GacvDenominator::kSymmetric ? (eg * h).sum() : ev.trace_h;
  ev.denominator = n - w0_trace;
  const Eigen::ArrayXd ye = y.array() / eg;
  ev.u_c = (1.0 - ye).matrix();
  const double resid = (ye * (y.array() - eg)).sum();
  ev.value = (ye + g.array()).sum() + ev.trace_h / ev.denominator * resid;
  ev.ok = ev.denominator > 0.0 && std::isfinite(ev.value) && inv_diag.allFinite();
  return ev;
}

Eigen::VectorXd gacv_inverse_diag_omega(const Eigen::VectorXd& y, const Eigen::VectorXd& g,
                                        const PenaltySystem& sys, double n_lambda) {
  Eigen::MatrixXd m = n_lambda * sys.omega();
  m.diagonal().array() += 0.5 * y.array() * (-g.array()).exp();
  Eigen::LDLT<Eigen::MatrixXd> ldlt(m);
  if (ldlt.info() != Eigen::Success) {
    return Eigen::VectorXd::Constant(y.size(), kNaN);
  }
  const Eigen::MatrixXd inv = ldlt.solve(Eigen::MatrixXd::Identity(m.rows(), m.cols()));
  return inv.diagonal();
}

Eigen::VectorXd gacv_inverse_diag_weighted(const Eigen::VectorXd& y, const Eigen::VectorXd& g,
                                           const PenaltySystem& sys, double n_lambda) {
  const Eigen::VectorXd w = (0.5 * y.array() * (-g.array()).exp()).matrix();
  Eigen::MatrixXd m = sys.dense_sigma();
  m.diagonal().array() += n_lambda / w.array();
  Eigen::LLT<Eigen::MatrixXd> llt(m);
  if (llt.info() != Eigen::Success) return Eigen::VectorXd::Constant(y.size(), kNaN);
  const auto n = m.rows();
  Eigen::MatrixXd linv = Eigen::MatrixXd::Identity(n, n);
  llt.matrixL().solveInPlace(linv);
  const Eigen::VectorXd minv_diag = linv.colwise().squaredNorm().transpose();
  const Eigen::MatrixXd& s = sys.null_basis();
  const Eigen::MatrixXd ls = linv.triangularView<Eigen::Lower>() * s;
  const Eigen::MatrixXd ms = linv.transpose().triangularView<Eigen::Upper>() * ls;  // M^{-1} S
  Eigen::LLT<Eigen::MatrixXd> k(s.transpose() * ms);
  const Eigen::MatrixXd kinv_mst = k.solve(ms.transpose());
  const Eigen::VectorXd corr = ms.cwiseProduct(kinv_mst.transpose()).rowwise().sum();
  const Eigen::ArrayXd p_diag = minv_diag - corr;
  return (1.0 / w.array() - n_lambda * p_diag / w.array().square()).matrix();
}

Eigen::VectorXd gacv_inverse_diag(const Eigen::VectorXd& y, const Eigen::VectorXd& g,
                                  const PenaltySystem& sys, double n_lambda, const GacvOptions& opts) {
  // Below this ratio min(W)/max(W) the weighted form loses accuracy.
  constexpr double kWeightRatioFloor = 1e-8;
  const Eigen::ArrayXd w = y.array() * (-g.array()).exp();
  const bool weighted = opts.weighted_form && w.minCoeff() > kWeightRatioFloor * w.maxCoeff();
  // The fit penalizes (n lambda / 2) c' Sigma c, so its Hessian is 2 (W + (n lambda / 2) Omega)
  // with the half weights W. Using the same multiplier keeps H equal to d g / d y.
  const double penalty = 0.5 * n_lambda;
  return weighted ? gacv_inverse_diag_weighted(y, g, sys, penalty)
                  : gacv_inverse_diag_omega(y, g, sys, penalty);
}

double lambda_from_log10(double x) { return std::pow(10.0, x); }

}  // namespace detail

using detail::gml_core;

double gaussian_gml(const RegularizedSystem& reg, const Eigen::VectorXd& z) {
  const double n = static_cast<double>(reg.base().size());
  const double p = static_cast<double>(reg.base().null_dim());
  const double rss = reg.n_lambda() * z.dot(reg.apply_p(z));
  if (!(rss > 0.0)) return kNaN;
  return std::log(rss) + reg.log_det_ratio() / (n - p);
}

double smoother_trace(const PenaltySystem& sys, double n_lambda) {
  return sys.regularize(n_lambda)->smoother_trace();
}

// ----------------------------------------------------------------- stationary criteria

CriterionEval gml_stationary(const StationaryFit& fit, double weight) {
  if (!fit.converged) {
    CriterionEval ev;
    ev.lambda = fit.lambda;
    ev.value = kNaN;
    return ev;
  }
  const auto reg = fit.decomp->regularize(fit.n_lambda);
  CriterionEval ev = gml_core(fit.y, fit.fitted, *reg, weight);
  ev.lambda = fit.lambda;
  ev.z = fit.decomp->rotated_basis().transpose() * (fit.fitted - ev.u_c);
  return ev;
}

CriterionEval gml_stationary(double lambda, const PeriodogramSet& pgram, const IrplsOptions& opts) {
  return gml_stationary(fit_stationary(pgram, lambda, opts));
}

double gml_stationary_uncached(const StationaryFit& fit) {
  const auto n = static_cast<Eigen::Index>(fit.y.size());
  const Eigen::MatrixXd sigma = gram_matrix(fit.freqs, static_cast<std::size_t>(n)).entries;
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(Eigen::MatrixXd::Ones(n, 1));
  const Eigen::MatrixXd q = qr.householderQ();
  const Eigen::MatrixXd q2 = q.rightCols(n - 1);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(q2.transpose() * sigma * q2);
  const Eigen::ArrayXd ye = fit.y.array() * (-fit.fitted.array()).exp();
  const Eigen::VectorXd u = (1.0 - ye).matrix();
  const Eigen::VectorXd z = es.eigenvectors().transpose() * (q2.transpose() * (fit.fitted - u));
  double value = (fit.fitted.array() + ye).sum() - 0.5 * u.squaredNorm();
  for (Eigen::Index v = 0; v < z.size(); ++v) {
    const double ratio = std::max(es.eigenvalues()(v), 0.0) / fit.n_lambda + 1.0;
    value += 0.5 * (std::log(ratio) + z(v) * z(v) / ratio);
  }
  return value;
}

CriterionEval gacv_stationary(const StationaryFit& fit, const GacvOptions& opts) {
  CriterionEval ev;
  if (fit.converged) {
    const Eigen::VectorXd inv =
        detail::gacv_inverse_diag(fit.y, fit.fitted, *fit.decomp, fit.n_lambda, opts);
    ev = detail::gacv_from_inverse_diag(fit.y, fit.fitted, inv, opts);
  } else {
    ev.value = kNaN;
  }
  ev.method = Method::kDV;
  ev.lambda = fit.lambda;
  return ev;
}

CriterionEval gacv_stationary(double lambda, const PeriodogramSet& pgram, const GacvOptions& gopts,
                              const IrplsOptions& opts) {
  return gacv_stationary(fit_stationary(pgram, lambda, opts), gopts);
}

double loocv_ckl(double lambda, const PeriodogramSet& pgram, const IrplsOptions& opts) {
  const std::size_t T = pgram.length();
  if (T > 64) throw InvalidInput("exact leave-one-out CV is an oracle for T <= 64");
  const StationaryFit full = fit_stationary(pgram, lambda, opts);
  if (!full.converged) throw ConvergenceError("full fit did not converge");
  const double n_lambda = static_cast<double>(T) * lambda;
  double total = 0.0;
  for (std::size_t i = 0; i < T; ++i) {
    std::vector<double> freqs;
    Eigen::VectorXd y(static_cast<Eigen::Index>(T - 1));
    for (std::size_t k = 0, m = 0; k < T; ++k) {
      if (k == i) continue;
      freqs.push_back(pgram.freqs[k]);
      y(static_cast<Eigen::Index>(m++)) = pgram.values[k];
    }
    const StationaryFit sub = fit_stationary(freqs, y, stationary_system(freqs), n_lambda, opts);
    if (!sub.converged) throw ConvergenceError("leave-one-out fit did not converge");
    const double gi = evaluate_spectrum(sub, pgram.freqs[i]);
    total += pgram.values[i] * std::exp(-gi) + full.fitted(static_cast<Eigen::Index>(i));
  }
  return 2.0 * total / static_cast<double>(T);
}

// ----------------------------------------------------------------- stationary selection

StationarySelection select_stationary(const PeriodogramSet& pgram, Method method,
                                      const SelectionOptions& opts) {
  if (method != Method::kDM && method != Method::kDV) {
    throw InvalidInput("direct selection supports DM and DV only");
  }
  const std::size_t T = pgram.length();
  if (T < kMinStationaryLength) throw InvalidInput("periodogram too short");
  const auto sys = system_for(pgram.freqs);
  const Eigen::VectorXd y = as_vector(pgram.values);

  StationarySelection out;
  double best = std::numeric_limits<double>::infinity();
  auto objective = [&](double x) {
    const double lambda = detail::lambda_from_log10(x);
    StationaryFit fit = fit_stationary(pgram.freqs, y, sys, static_cast<double>(T) * lambda, opts.irpls);
    CriterionEval ev = method == Method::kDM ? gml_stationary(fit) : gacv_stationary(fit, opts.gacv);
    ev.lambda = lambda;
    ev.method = method;
    ev.ok = ev.ok && fit.converged;
    const double v = ev.ok ? ev.value : kNaN;
    out.criterion_trace.push_back(std::move(ev));
    if (std::isfinite(v) && v < best) {
      best = v;
      out.fit = std::move(fit);
      out.best_lambda = lambda;
    }
    return v;
  };
  const auto search = grid_golden_search(objective, opts.log10_lambda_min, opts.log10_lambda_max,
                                         opts.coarse_points, opts.golden_tolerance);
  if (!search.found) {
    out.nonconverged = true;
    out.diagnostic = "no smoothing parameter produced a converged fit";
    return out;
  }
  out.nonconverged = !out.fit.converged;
  return out;
}

// ----------------------------------------------------------------- indirect GML

StationarySelection indirect_gml_fit(const PeriodogramSet& pgram, const SelectionOptions& opts) {
  const std::size_t T = pgram.length();
  if (T < kMinStationaryLength) throw InvalidInput("periodogram too short");
  const auto sys = system_for(pgram.freqs);
  const Eigen::VectorXd y = as_vector(pgram.values);
  const double n = static_cast<double>(T);

  StationarySelection out;
  Eigen::VectorXd g = Eigen::VectorXd::Constant(y.size(), std::log(y.mean() + opts.irpls.init_epsilon));
  double prev_x = kNaN;
  bool converged = false;
  PenalizedSolution sol;
  double lambda = 0.0;
  for (int it = 1; it <= opts.indirect_max_iterations; ++it) {
    out.iterations = it;
    const Eigen::VectorXd z = (g.array() + y.array() * (-g.array()).exp() - 1.0).matrix();
    if (!z.allFinite()) {
      out.diagnostic = "non-finite working response";
      break;
    }
    auto crit = [&](double x) { return gaussian_gml(*sys->regularize(n * detail::lambda_from_log10(x)), z); };
    const auto search = grid_golden_search(crit, opts.log10_lambda_min, opts.log10_lambda_max,
                                           opts.coarse_points, opts.golden_tolerance);
    if (!search.found) {
      out.diagnostic = "Gaussian GML undefined on the working response";
      break;
    }
    lambda = detail::lambda_from_log10(search.x);
    CriterionEval ev;
    ev.lambda = lambda;
    ev.value = search.value;
    ev.method = Method::kIM;
    ev.ok = true;
    out.criterion_trace.push_back(std::move(ev));
    sol = sys->regularize(n * lambda)->solve(z);
    const double change = (sol.fitted - g).cwiseAbs().maxCoeff();
    const bool stable = std::isfinite(prev_x) && std::abs(search.x - prev_x) < opts.indirect_lambda_tolerance;
    g = sol.fitted;
    prev_x = search.x;
    if (change < opts.irpls.tolerance && stable) {
      converged = true;
      break;
    }
  }
  out.best_lambda = lambda;
  StationaryFit& fit = out.fit;
  fit.freqs = pgram.freqs;
  fit.y = y;
  fit.decomp = sys;
  fit.lambda = lambda;
  fit.n_lambda = n * lambda;
  fit.fitted = g;
  if (sol.c.size() > 0) {
    fit.c = sol.c;
    fit.d = sol.d(0);
  }
  fit.converged = converged;
  fit.iterations = out.iterations;
  if (sol.c.size() > 0) {
    fit.objective = penalized_whittle(y, g, fit.c, sys->apply_sigma(fit.c), fit.n_lambda);
  }
  out.nonconverged = !converged;
  if (!converged && out.diagnostic.empty()) out.diagnostic = "indirect GML did not stabilize";
  return out;
}

// ----------------------------------------------------------------- PO

StationarySelection po_risk_fit(const PeriodogramSet& pgram, const SelectionOptions& opts) {
  const std::size_t T = pgram.length();
  if (T < kMinStationaryLength) throw InvalidInput("periodogram too short");
  const auto sys = system_for(pgram.freqs);
  const Eigen::VectorXd y = as_vector(pgram.values);
  const double n = static_cast<double>(T);

  StationarySelection out;
  auto log_grid = [&](int count) {
    std::vector<double> v(static_cast<std::size_t>(count));
    for (int i = 0; i < count; ++i) {
      v[static_cast<std::size_t>(i)] =
          opts.po_log_lambda_min + (opts.po_log_lambda_max - opts.po_log_lambda_min) * i / (count - 1);
    }
    return v;
  };
  auto working = [&](const Eigen::VectorXd& g) {
    return (g.array() + y.array() * (-g.array()).exp() - 1.0).matrix().eval();
  };
  auto record = [&](double lambda, double value, bool ok, double tr) {
    CriterionEval ev;
    ev.lambda = lambda;
    ev.value = value;
    ev.ok = ok;
    ev.method = Method::kPO;
    ev.trace_h = tr;
    out.criterion_trace.push_back(std::move(ev));
  };

  // Step 1: v from each candidate's own fit.
  double best1 = std::numeric_limits<double>::infinity();
  StationaryFit pilot;
  for (double ll : log_grid(opts.po_first_step)) {
    const double lambda = std::exp(ll);
    StationaryFit fit = fit_stationary(pgram.freqs, y, sys, n * lambda, opts.irpls);
    const double tr = smoother_trace(*sys, n * lambda);
    const double re = (fit.fitted - working(fit.fitted)).squaredNorm() + 2.0 * tr;
    const bool ok = fit.converged && std::isfinite(re);
    record(lambda, re, ok, tr);
    if (ok && re < best1) {
      best1 = re;
      pilot = std::move(fit);
    }
  }
  if (!std::isfinite(best1)) {
    out.nonconverged = true;
    out.diagnostic = "no pilot fit converged";
    return out;
  }

  // Step 2: v frozen at the pilot fit.
  const Eigen::VectorXd v = working(pilot.fitted);
  double best2 = std::numeric_limits<double>::infinity();
  for (double ll : log_grid(opts.po_second_step)) {
    const double lambda = std::exp(ll);
    StationaryFit fit = fit_stationary(pgram.freqs, y, sys, n * lambda, opts.irpls);
    const double tr = smoother_trace(*sys, n * lambda);
    const double re = (fit.fitted - v).squaredNorm() + 2.0 * tr;
    const bool ok = fit.converged && std::isfinite(re);
    record(lambda, re, ok, tr);
    if (ok && re < best2) {
      best2 = re;
      out.best_lambda = lambda;
      out.fit = std::move(fit);
    }
  }
  out.nonconverged = !std::isfinite(best2);
  if (out.nonconverged) out.diagnostic = "no second-step fit converged";
  return out;
}

// ----------------------------------------------------------------- LS baseline

StationarySelection ls_fit(const PeriodogramSet& pgram, const SelectionOptions& opts) {
  const std::size_t T = pgram.length();
  if (T < kMinStationaryLength) throw InvalidInput("periodogram too short");
  const auto sys = system_for(pgram.freqs);
  const double n = static_cast<double>(T);
  Eigen::VectorXd z(static_cast<Eigen::Index>(T));
  for (std::size_t k = 0; k < T; ++k) {
    const bool endpoint = pgram.freqs[k] == 0.0 || pgram.freqs[k] == 0.5;
    z(static_cast<Eigen::Index>(k)) =
        std::log(std::max(pgram.values[k], kLogFloor)) + (endpoint ? kEndpointShift : kEulerGamma);
  }
  StationarySelection out;
  auto crit = [&](double x) {
    const double lambda = detail::lambda_from_log10(x);
    const double v = gaussian_gml(*sys->regularize(n * lambda), z);
    CriterionEval ev;
    ev.lambda = lambda;
    ev.value = v;
    ev.ok = std::isfinite(v);
    ev.method = Method::kLS;
    out.criterion_trace.push_back(std::move(ev));
    return v;
  };
  const auto search = grid_golden_search(crit, opts.log10_lambda_min, opts.log10_lambda_max,
                                         opts.coarse_points, opts.golden_tolerance);
  if (!search.found) {
    out.nonconverged = true;
    out.diagnostic = "Gaussian GML undefined";
    return out;
  }
  out.best_lambda = detail::lambda_from_log10(search.x);
  const PenalizedSolution sol = sys->regularize(n * out.best_lambda)->solve(z);
  StationaryFit& fit = out.fit;
  fit.freqs = pgram.freqs;
  fit.y = as_vector(pgram.values);
  fit.decomp = sys;
  fit.lambda = out.best_lambda;
  fit.n_lambda = n * out.best_lambda;
  fit.c = sol.c;
  fit.d = sol.d(0);
  fit.fitted = sol.fitted;
  fit.converged = true;
  fit.iterations = 1;
  return out;
}

StationarySelection estimate_stationary(const PeriodogramSet& pgram, Method method,
                                        const SelectionOptions& opts) {
  switch (method) {
    case Method::kDM:
    case Method::kDV: return select_stationary(pgram, method, opts);
    case Method::kIM: return indirect_gml_fit(pgram, opts);
    case Method::kPO: return po_risk_fit(pgram, opts);
    case Method::kLS: return ls_fit(pgram, opts);
  }
  throw InvalidInput("unknown method");
}

}  // namespace wspec
