#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "wspec/optimize.hpp"
#include "wspec/periodogram.hpp"
#include "wspec/whittle.hpp"

namespace wspec {

/// DM: direct GML, DV: GACV, IM: indirect GML, PO: two-step risk, LS: log-periodogram baseline.
enum class Method { kDM, kDV, kIM, kPO, kLS };

std::string_view method_name(Method m) noexcept;
/// Throws InvalidInput on unknown names.
Method parse_method(std::string_view name);

enum class GacvDenominator {
  kSymmetric,  // n - tr(W0^{1/2} H W0^{1/2}); invariant under rescaling the data
  kTrace       // n - tr(W0^{1/2} H W0^{-1/2}) = n - tr H
};

struct CriterionEval {
  double lambda = 0.0;
  std::optional<Theta> theta;
  double value = 0.0;
  Method method = Method::kDM;
  bool ok = false;
  // Diagnostics. z = U'Q2'y_c for stationary GML; u_c = 1 - y exp(-ghat).
  Eigen::VectorXd z;
  Eigen::VectorXd u_c;
  double log_det_ratio = 0.0;
  double trace_h = 0.0;
  double denominator = 0.0;
};

template <class Fit>
struct SelectionResult {
  double best_lambda = 0.0;
  std::optional<Theta> best_theta;
  std::vector<CriterionEval> criterion_trace;
  Fit fit;
  bool nonconverged = false;
  int iterations = 0;  // outer iterations for IM
  std::string diagnostic;
};

using StationarySelection = SelectionResult<StationaryFit>;
using SsanovaSelection = SelectionResult<SsanovaFit>;
using ReducedSelection = SelectionResult<ReducedFit>;

struct GacvOptions {
  GacvDenominator denominator = GacvDenominator::kSymmetric;
  /// Use the weighted Cholesky form unless W is nearly singular; the Omega
  /// form thresholds small eigenvalues and drifts when Sigma is ill-conditioned.
  bool weighted_form = true;
};

struct SelectionOptions {
  double log10_lambda_min = -9.0;
  double log10_lambda_max = 1.0;
  int coarse_points = 13;
  double golden_tolerance = 1e-3;
  double log10_theta_min = -6.0;
  double log10_theta_max = 6.0;
  int simplex_evaluations = 150;  // per start
  double simplex_step = 1.0;
  double simplex_size_tolerance = 1e-2;  // log10 units
  GacvOptions gacv;
  IrplsOptions irpls;
  // Indirect GML
  int indirect_max_iterations = 50;
  double indirect_lambda_tolerance = 1e-3;
  double indirect_simplex_tolerance = 1e-2;
  // PO grid, natural log of lambda
  double po_log_lambda_min = -25.0;
  double po_log_lambda_max = -1.0;
  int po_first_step = 5;
  int po_second_step = 50;
};

// ----------------------------------------------------------------- criteria

/// Laplace-approximated GML at a converged fit. `weight` is the Fisher
/// information per observation (J for pooled reduced data).
CriterionEval gml_stationary(const StationaryFit& fit, double weight = 1.0);
CriterionEval gml_stationary(double lambda, const PeriodogramSet& pgram,
                             const IrplsOptions& opts = {});
/// Same criterion from scratch: a fresh QR/eigendecomposition, no cache.
double gml_stationary_uncached(const StationaryFit& fit);

CriterionEval gacv_stationary(const StationaryFit& fit, const GacvOptions& opts = {});
CriterionEval gacv_stationary(double lambda, const PeriodogramSet& pgram,
                              const GacvOptions& gopts = {}, const IrplsOptions& opts = {});

/// Exact leave-one-out CV of the CKL loss; refits T times (oracle, T <= 64).
double loocv_ckl(double lambda, const PeriodogramSet& pgram, const IrplsOptions& opts = {});

CriterionEval gml_ssanova(const SsanovaFit& fit);
CriterionEval gml_ssanova(double lambda, const Theta& theta, const LocalPeriodogramGrid& grid,
                          const IrplsOptions& opts = {});
CriterionEval gacv_ssanova(const SsanovaFit& fit, const GacvOptions& opts = {});
CriterionEval gacv_ssanova(double lambda, const Theta& theta, const LocalPeriodogramGrid& grid,
                           const GacvOptions& gopts = {}, const IrplsOptions& opts = {});

CriterionEval gml_reduced(const ReducedFit& fit);

/// Gaussian-data GML: ln(n lambda z'Pz) + log_det_ratio / (n - p).
double gaussian_gml(const RegularizedSystem& reg, const Eigen::VectorXd& z);

/// Trace of the IRPLS smoother matrix (unit weights) at n*lambda.
double smoother_trace(const PenaltySystem& sys, double n_lambda);

// ----------------------------------------------------------------- selection

/// Direct selection, method DM or DV.
StationarySelection select_stationary(const PeriodogramSet& pgram, Method method,
                                      const SelectionOptions& opts = {});
SsanovaSelection select_ssanova(const LocalPeriodogramGrid& grid, Method method,
                                const SelectionOptions& opts = {});
ReducedSelection select_reduced(const LocalPeriodogramGrid& grid, const SelectionOptions& opts = {});

StationarySelection indirect_gml_fit(const PeriodogramSet& pgram, const SelectionOptions& opts = {});
SsanovaSelection indirect_gml_fit(const LocalPeriodogramGrid& grid, const SelectionOptions& opts = {});

StationarySelection po_risk_fit(const PeriodogramSet& pgram, const SelectionOptions& opts = {});

StationarySelection ls_fit(const PeriodogramSet& pgram, const SelectionOptions& opts = {});
SsanovaSelection ls_fit(const LocalPeriodogramGrid& grid, const SelectionOptions& opts = {});

/// Dispatch on any of the five methods.
StationarySelection estimate_stationary(const PeriodogramSet& pgram, Method method,
                                        const SelectionOptions& opts = {});
/// Dispatch on DM, DV, IM or LS (PO is stationary only).
SsanovaSelection estimate_ssanova(const LocalPeriodogramGrid& grid, Method method,
                                  const SelectionOptions& opts = {});

/// log10 of (lambda, theta_2, theta_3, theta_4) with theta_1 = 1.
Theta theta_from_log10(const Eigen::VectorXd& x);

}  // namespace wspec
