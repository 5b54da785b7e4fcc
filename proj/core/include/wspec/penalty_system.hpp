#pragma once

#include <cstddef>
#include <memory>
#include <mutex>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "wspec/kernels.hpp"

namespace wspec {

class RegularizedSystem;

/// Penalized least-squares geometry: kernel matrix Sigma (possibly implicit)
/// and null-space basis S. Regularizing at a given n*lambda yields the
/// solver for  min ||z - S d - Sigma c||^2 + n*lambda c' Sigma c.
class PenaltySystem : public std::enable_shared_from_this<PenaltySystem> {
 public:
  virtual ~PenaltySystem() = default;

  std::size_t size() const noexcept { return static_cast<std::size_t>(basis_.rows()); }
  std::size_t null_dim() const noexcept { return static_cast<std::size_t>(basis_.cols()); }
  const Eigen::MatrixXd& null_basis() const noexcept { return basis_; }

  virtual Eigen::VectorXd apply_sigma(const Eigen::VectorXd& c) const = 0;
  virtual Eigen::MatrixXd dense_sigma() const = 0;
  virtual std::shared_ptr<const RegularizedSystem> regularize(double n_lambda) const = 0;

  /// Omega = Q2 (Q2' Sigma Q2)^+ Q2'. Expensive for implicit systems.
  virtual const Eigen::MatrixXd& omega() const = 0;

  /// (S'S)^{-1} S' x.
  Eigen::VectorXd null_coefficients(const Eigen::VectorXd& x) const;

 protected:
  explicit PenaltySystem(Eigen::MatrixXd basis);

 private:
  Eigen::MatrixXd basis_;
  Eigen::MatrixXd basis_pinv_;
};

struct PenalizedSolution {
  Eigen::VectorXd c;
  Eigen::VectorXd d;
  Eigen::VectorXd fitted;
};

/// Solver for one value of n*lambda. With M = Sigma + n*lambda*I and
/// P = M^{-1} - M^{-1} S (S'M^{-1}S)^{-1} S' M^{-1}, the solution is c = P z
/// and z - fitted = n*lambda*c.
class RegularizedSystem {
 public:
  virtual ~RegularizedSystem() = default;

  double n_lambda() const noexcept { return n_lambda_; }
  const PenaltySystem& base() const noexcept { return *base_; }

  virtual Eigen::VectorXd apply_p(const Eigen::VectorXd& z) const = 0;
  /// M^{-1} R, column by column.
  virtual Eigen::MatrixXd solve_m(const Eigen::MatrixXd& rhs) const = 0;
  /// sum over the penalized eigenvalues of ln(delta/(n lambda) + 1).
  virtual double log_det_ratio() const = 0;
  /// trace of P.
  virtual double trace_p() const = 0;

  /// Trace of the smoother (hat) matrix, n - n*lambda*tr(P).
  double smoother_trace() const;
  PenalizedSolution solve(const Eigen::VectorXd& z) const;

 protected:
  RegularizedSystem(std::shared_ptr<const PenaltySystem> base, double n_lambda);

 private:
  std::shared_ptr<const PenaltySystem> base_;
  double n_lambda_;
};

/// Explicit Sigma, solved in the eigenbasis of Q2' Sigma Q2.
class DenseSystem final : public PenaltySystem {
 public:
  DenseSystem(Eigen::MatrixXd sigma, Eigen::MatrixXd basis);

  Eigen::VectorXd apply_sigma(const Eigen::VectorXd& c) const override;
  Eigen::MatrixXd dense_sigma() const override { return sigma_; }
  std::shared_ptr<const RegularizedSystem> regularize(double n_lambda) const override;
  const Eigen::MatrixXd& omega() const override;

  const Eigen::VectorXd& eigenvalues() const noexcept { return delta_; }
  /// Q2 U, so that z_nu = (Q2 U)' y.
  const Eigen::MatrixXd& rotated_basis() const noexcept { return qu_; }

 private:
  Eigen::MatrixXd sigma_;
  Eigen::VectorXd delta_;
  Eigen::MatrixXd qu_;
  mutable std::once_flag omega_once_;
  mutable Eigen::MatrixXd omega_;
};

/// Gram matrices of the time-frequency grid that do not depend on theta.
struct TensorGeometry {
  std::vector<double> freqs;
  std::vector<double> times;
  Eigen::MatrixXd a_gram;        // r1 on freqs
  Eigen::MatrixXd b_gram;        // r2 on times
  Eigen::VectorXd centered;      // u_j - 1/2
  Eigen::MatrixXd a_vectors;     // eigenvectors of a_gram
  Eigen::VectorXd a_values;
  Eigen::VectorXd a_ones;        // a_vectors' * 1

  TensorGeometry(std::vector<double> freqs, std::vector<double> times);
  std::size_t num_freqs() const noexcept { return freqs.size(); }
  std::size_t num_times() const noexcept { return times.size(); }
  std::size_t size() const noexcept { return freqs.size() * times.size(); }
};

/// SS ANOVA Sigma_theta on a K x J product grid, ordered with frequency fastest.
/// Sigma_theta = M_theta (x) A + theta_2 B (x) 11', solved through the
/// eigenbases of A and M_theta plus a rank-J Woodbury correction.
class TensorSystem final : public PenaltySystem {
 public:
  TensorSystem(std::shared_ptr<const TensorGeometry> geometry, const Theta& theta);

  Eigen::VectorXd apply_sigma(const Eigen::VectorXd& c) const override;
  Eigen::MatrixXd dense_sigma() const override;
  std::shared_ptr<const RegularizedSystem> regularize(double n_lambda) const override;
  const Eigen::MatrixXd& omega() const override;

  const TensorGeometry& geometry() const noexcept { return *geometry_; }
  const Theta& theta() const noexcept { return theta_; }
  const Eigen::MatrixXd& m_theta() const noexcept { return m_theta_; }
  const Eigen::MatrixXd& m_vectors() const noexcept { return m_vectors_; }
  const Eigen::VectorXd& m_values() const noexcept { return m_values_; }
  /// theta_2 V' B V.
  const Eigen::MatrixXd& coupling() const noexcept { return coupling_; }

 private:
  std::shared_ptr<const TensorGeometry> geometry_;
  Theta theta_;
  Eigen::MatrixXd m_theta_;
  Eigen::MatrixXd m_vectors_;
  Eigen::VectorXd m_values_;
  Eigen::MatrixXd coupling_;
  mutable std::once_flag dense_once_;
  mutable std::shared_ptr<const DenseSystem> dense_;
};

/// Null-space basis [1, u - 1/2] of the SS ANOVA model; just [1] when all u agree.
Eigen::MatrixXd ssanova_null_basis(std::span<const double> freqs, std::span<const double> times);

/// Shared stationary system on the T Fourier frequencies k/T (cached per T).
std::shared_ptr<const DenseSystem> fourier_system(std::size_t T);
/// The cached Fourier system when freqs are exactly k/T, k = 0..T-1; a fresh one otherwise.
std::shared_ptr<const DenseSystem> system_for(std::span<const double> freqs);

/// Stationary system on arbitrary frequencies with constant null space.
std::shared_ptr<const DenseSystem> stationary_system(std::span<const double> freqs);

}  // namespace wspec
