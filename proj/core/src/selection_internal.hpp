#pragma once

#include <Eigen/Core>

#include "wspec/penalty_system.hpp"
#include "wspec/selection.hpp"

namespace wspec::detail {

CriterionEval gml_core(const Eigen::VectorXd& y, const Eigen::VectorXd& g,
                       const RegularizedSystem& reg, double weight);

/// GACV from the diagonal of (W + n lambda Omega)^{-1}.
CriterionEval gacv_from_inverse_diag(const Eigen::VectorXd& y, const Eigen::VectorXd& g,
                                     const Eigen::VectorXd& inv_diag, const GacvOptions& opts);

/// diag (W + n lambda Omega)^{-1} through an explicit Omega.
Eigen::VectorXd gacv_inverse_diag_omega(const Eigen::VectorXd& y, const Eigen::VectorXd& g,
                                        const PenaltySystem& sys, double n_lambda);

/// Same quantity via M_w = Sigma + n lambda W^{-1}; needs W > 0.
Eigen::VectorXd gacv_inverse_diag_weighted(const Eigen::VectorXd& y, const Eigen::VectorXd& g,
                                           const PenaltySystem& sys, double n_lambda);

/// Weighted form when every W_i is safely positive, otherwise the Omega form.
Eigen::VectorXd gacv_inverse_diag(const Eigen::VectorXd& y, const Eigen::VectorXd& g,
                                  const PenaltySystem& sys, double n_lambda, const GacvOptions& opts);

double lambda_from_log10(double x);

}  // namespace wspec::detail
