#include "wspec/penalty_system.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <string>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/LU>
#include <Eigen/QR>

#include "wspec/error.hpp"

namespace wspec {

namespace {

constexpr double kPinvTolerance = 1e-10;

Eigen::MatrixXd pseudo_inverse_basis(const Eigen::MatrixXd& s) {
  Eigen::MatrixXd gram = s.transpose() * s;
  Eigen::LLT<Eigen::MatrixXd> llt(gram);
  if (llt.info() != Eigen::Success || gram.diagonal().minCoeff() <= 0.0) {
    throw InvalidInput("singular null-space basis");
  }
  // Reject nearly collinear columns too.
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(s);
  const auto& sv = svd.singularValues();
  if (sv(sv.size() - 1) <= 1e-10 * sv(0)) throw InvalidInput("singular null-space basis");
  return llt.solve(s.transpose());
}

}  // namespace

// ---------------------------------------------------------------- base

PenaltySystem::PenaltySystem(Eigen::MatrixXd basis) : basis_(std::move(basis)) {
  if (basis_.rows() == 0 || basis_.cols() == 0 || basis_.cols() >= basis_.rows()) {
    throw InvalidInput("null-space basis has invalid shape");
  }
  basis_pinv_ = pseudo_inverse_basis(basis_);
}

Eigen::VectorXd PenaltySystem::null_coefficients(const Eigen::VectorXd& x) const {
  return basis_pinv_ * x;
}

RegularizedSystem::RegularizedSystem(std::shared_ptr<const PenaltySystem> base, double n_lambda)
    : base_(std::move(base)), n_lambda_(n_lambda) {
  if (!(n_lambda > 0.0) || !std::isfinite(n_lambda)) {
    throw InvalidInput("smoothing parameter must be positive and finite");
  }
}

double RegularizedSystem::smoother_trace() const {
  return static_cast<double>(base_->size()) - n_lambda_ * trace_p();
}

PenalizedSolution RegularizedSystem::solve(const Eigen::VectorXd& z) const {
  PenalizedSolution out;
  out.c = apply_p(z);
  out.fitted = z - n_lambda_ * out.c;
  out.d = base_->null_coefficients(out.fitted - base_->apply_sigma(out.c));
  return out;
}

// ---------------------------------------------------------------- dense

namespace {

class DenseRegularized final : public RegularizedSystem {
 public:
  DenseRegularized(std::shared_ptr<const DenseSystem> base, double n_lambda)
      : RegularizedSystem(base, n_lambda), dense_(std::move(base)) {
    const Eigen::VectorXd& delta = dense_->eigenvalues();
    inv_.resize(delta.size());
    for (Eigen::Index v = 0; v < delta.size(); ++v) {
      const double dv = std::max(delta(v), 0.0);
      inv_(v) = 1.0 / (dv + n_lambda);
      log_det_ += std::log1p(dv / n_lambda);
    }
  }

  Eigen::VectorXd apply_p(const Eigen::VectorXd& z) const override {
    const Eigen::MatrixXd& qu = dense_->rotated_basis();
    Eigen::VectorXd w = (qu.transpose() * z).cwiseProduct(inv_);
    return qu * w;
  }

  Eigen::MatrixXd solve_m(const Eigen::MatrixXd& rhs) const override {
    std::call_once(llt_once_, [this] {
      Eigen::MatrixXd m = dense_->dense_sigma();
      m.diagonal().array() += n_lambda();
      llt_.compute(m);
    });
    return llt_.solve(rhs);
  }

  double log_det_ratio() const override { return log_det_; }
  double trace_p() const override { return inv_.sum(); }

 private:
  std::shared_ptr<const DenseSystem> dense_;
  Eigen::VectorXd inv_;
  double log_det_ = 0.0;
  mutable std::once_flag llt_once_;
  mutable Eigen::LLT<Eigen::MatrixXd> llt_;
};

}  // namespace

DenseSystem::DenseSystem(Eigen::MatrixXd sigma, Eigen::MatrixXd basis)
    : PenaltySystem(std::move(basis)), sigma_(std::move(sigma)) {
  const Eigen::Index n = sigma_.rows();
  const Eigen::Index p = static_cast<Eigen::Index>(null_dim());
  if (sigma_.cols() != n || n != static_cast<Eigen::Index>(size())) {
    throw InvalidInput("kernel matrix and null-space basis disagree in size");
  }
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(null_basis());
  Eigen::MatrixXd q = qr.householderQ();
  const Eigen::MatrixXd q2 = q.rightCols(n - p);
  const Eigen::MatrixXd reduced = q2.transpose() * sigma_ * q2;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(reduced);
  if (es.info() != Eigen::Success) throw ConvergenceError("eigendecomposition failed");
  delta_ = es.eigenvalues();
  qu_ = q2 * es.eigenvectors();
}

Eigen::VectorXd DenseSystem::apply_sigma(const Eigen::VectorXd& c) const { return sigma_ * c; }

std::shared_ptr<const RegularizedSystem> DenseSystem::regularize(double n_lambda) const {
  auto self = std::static_pointer_cast<const DenseSystem>(shared_from_this());
  return std::make_shared<DenseRegularized>(std::move(self), n_lambda);
}

const Eigen::MatrixXd& DenseSystem::omega() const {
  std::call_once(omega_once_, [this] {
    const double cutoff = kPinvTolerance * std::max(delta_.maxCoeff(), 0.0);
    Eigen::VectorXd inv(delta_.size());
    for (Eigen::Index v = 0; v < delta_.size(); ++v) {
      inv(v) = delta_(v) > cutoff ? 1.0 / delta_(v) : 0.0;
    }
    omega_ = qu_ * inv.asDiagonal() * qu_.transpose();
  });
  return omega_;
}

std::shared_ptr<const DenseSystem> stationary_system(std::span<const double> freqs) {
  if (freqs.size() < 2) throw InvalidInput("need at least two frequencies");
  GramMatrix g = gram_matrix(freqs, std::max(kDefaultGramLimit, freqs.size()));
  Eigen::MatrixXd s = Eigen::MatrixXd::Ones(static_cast<Eigen::Index>(freqs.size()), 1);
  return std::make_shared<DenseSystem>(std::move(g.entries), std::move(s));
}

std::shared_ptr<const DenseSystem> fourier_system(std::size_t T) {
  static std::mutex mutex;
  static std::map<std::size_t, std::shared_ptr<const DenseSystem>> cache;
  {
    std::lock_guard lock(mutex);
    if (auto it = cache.find(T); it != cache.end()) return it->second;
  }
  std::vector<double> freqs(T);
  for (std::size_t k = 0; k < T; ++k) freqs[k] = static_cast<double>(k) / static_cast<double>(T);
  auto sys = stationary_system(freqs);
  std::lock_guard lock(mutex);
  return cache.emplace(T, std::move(sys)).first->second;
}

// ---------------------------------------------------------------- tensor

TensorGeometry::TensorGeometry(std::vector<double> f, std::vector<double> t)
    : freqs(std::move(f)), times(std::move(t)) {
  if (freqs.empty() || times.empty()) throw InvalidInput("empty time-frequency grid");
  a_gram = gram_matrix(freqs, std::max(kDefaultGramLimit, freqs.size())).entries;
  b_gram = cross_r2(times, times);
  centered.resize(static_cast<Eigen::Index>(times.size()));
  for (std::size_t j = 0; j < times.size(); ++j) centered(static_cast<Eigen::Index>(j)) = times[j] - 0.5;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(a_gram);
  a_vectors = es.eigenvectors();
  a_values = es.eigenvalues().cwiseMax(0.0);
  a_ones = a_vectors.transpose() * Eigen::VectorXd::Ones(a_gram.rows());
}

Eigen::MatrixXd ssanova_null_basis(std::span<const double> freqs, std::span<const double> times) {
  const auto K = static_cast<Eigen::Index>(freqs.size());
  const auto J = static_cast<Eigen::Index>(times.size());
  const bool varying = std::any_of(times.begin(), times.end(),
                                   [&](double u) { return u != times.front(); });
  Eigen::MatrixXd s(K * J, varying ? 2 : 1);
  for (Eigen::Index j = 0; j < J; ++j) {
    for (Eigen::Index k = 0; k < K; ++k) {
      s(k + K * j, 0) = 1.0;
      if (varying) s(k + K * j, 1) = times[static_cast<std::size_t>(j)] - 0.5;
    }
  }
  return s;
}

namespace {

class TensorRegularized final : public RegularizedSystem {
 public:
  TensorRegularized(std::shared_ptr<const TensorSystem> base, double n_lambda)
      : RegularizedSystem(base, n_lambda), sys_(std::move(base)) {
    const TensorGeometry& geo = sys_->geometry();
    const auto K = static_cast<Eigen::Index>(geo.num_freqs());
    const auto J = static_cast<Eigen::Index>(geo.num_times());
    diag_ = geo.a_values * sys_->m_values().transpose();
    diag_.array() += n_lambda;

    const Eigen::ArrayXd a2 = geo.a_ones.array().square();
    col_weights_.resize(J);
    for (Eigen::Index j = 0; j < J; ++j) col_weights_(j) = (a2 / diag_.col(j).array()).sum();

    const Eigen::MatrixXd& g = sys_->coupling();
    Eigen::MatrixXd core = Eigen::MatrixXd::Identity(J, J) + g * col_weights_.asDiagonal();
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(core);
    woodbury_ = lu.solve(g);
    const double det_core = lu.determinant();
    if (!(det_core > 0.0)) throw ConvergenceError("tensor system is not positive definite");
    double log_det_m = diag_.array().log().sum() + std::log(det_core);

    const Eigen::MatrixXd& s = sys_->null_basis();
    minv_s_ = solve_m(s);
    const Eigen::MatrixXd k_mat = s.transpose() * minv_s_;
    k_llt_.compute(k_mat);
    if (k_llt_.info() != Eigen::Success) throw ConvergenceError("S'M^{-1}S is not positive definite");
    Eigen::LLT<Eigen::MatrixXd> sts(s.transpose() * s);
    const double log_det_k = 2.0 * k_llt_.matrixLLT().diagonal().array().log().sum();
    const double log_det_sts = 2.0 * sts.matrixLLT().diagonal().array().log().sum();
    const double penalized = static_cast<double>(K * J - s.cols());
    log_det_ratio_ = log_det_m + log_det_k - log_det_sts - penalized * std::log(n_lambda);

    // tr M^{-1} = tr D^{-1} - sum_j X_jj sum_k a_k^2 / D_kj^2
    double tr_minv = diag_.cwiseInverse().sum();
    for (Eigen::Index j = 0; j < J; ++j) {
      tr_minv -= woodbury_(j, j) * (a2 / diag_.col(j).array().square()).sum();
    }
    const Eigen::MatrixXd kinv_sms = k_llt_.solve(minv_s_.transpose() * minv_s_);
    trace_p_ = tr_minv - kinv_sms.trace();
  }

  Eigen::MatrixXd solve_m(const Eigen::MatrixXd& rhs) const override {
    const TensorGeometry& geo = sys_->geometry();
    const auto K = static_cast<Eigen::Index>(geo.num_freqs());
    const auto J = static_cast<Eigen::Index>(geo.num_times());
    const Eigen::MatrixXd& p = geo.a_vectors;
    const Eigen::MatrixXd& v = sys_->m_vectors();
    Eigen::MatrixXd out(rhs.rows(), rhs.cols());
    for (Eigen::Index col = 0; col < rhs.cols(); ++col) {
      Eigen::Map<const Eigen::MatrixXd> r(rhs.col(col).data(), K, J);
      Eigen::MatrixXd y = (p.transpose() * r * v).cwiseQuotient(diag_);
      const Eigen::VectorXd s = woodbury_ * (y.transpose() * geo.a_ones);
      y -= (geo.a_ones * s.transpose()).cwiseQuotient(diag_);
      Eigen::Map<Eigen::MatrixXd>(out.col(col).data(), K, J) = p * y * v.transpose();
    }
    return out;
  }

  Eigen::VectorXd apply_p(const Eigen::VectorXd& z) const override {
    Eigen::VectorXd mz = solve_m(z);
    const Eigen::VectorXd coef = k_llt_.solve(sys_->null_basis().transpose() * mz);
    return mz - minv_s_ * coef;
  }

  double log_det_ratio() const override { return log_det_ratio_; }
  double trace_p() const override { return trace_p_; }

 private:
  std::shared_ptr<const TensorSystem> sys_;
  Eigen::MatrixXd diag_;
  Eigen::VectorXd col_weights_;
  Eigen::MatrixXd woodbury_;
  Eigen::MatrixXd minv_s_;
  Eigen::LLT<Eigen::MatrixXd> k_llt_;
  double log_det_ratio_ = 0.0;
  double trace_p_ = 0.0;
};

}  // namespace

TensorSystem::TensorSystem(std::shared_ptr<const TensorGeometry> geometry, const Theta& theta)
    : PenaltySystem(ssanova_null_basis(geometry->freqs, geometry->times)),
      geometry_(std::move(geometry)),
      theta_(theta) {
  bool any = false;
  for (double t : theta_) {
    if (!(t >= 0.0) || !std::isfinite(t)) throw InvalidInput("theta components must be finite and >= 0");
    any = any || t > 0.0;
  }
  if (!any) throw InvalidInput("at least one theta component must be positive");
  const auto J = static_cast<Eigen::Index>(geometry_->num_times());
  const Eigen::VectorXd& v = geometry_->centered;
  m_theta_ = theta_[0] * Eigen::MatrixXd::Ones(J, J) + theta_[2] * v * v.transpose() +
             theta_[3] * geometry_->b_gram;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m_theta_);
  m_vectors_ = es.eigenvectors();
  m_values_ = es.eigenvalues().cwiseMax(0.0);
  coupling_ = theta_[1] * (m_vectors_.transpose() * geometry_->b_gram * m_vectors_);
  coupling_ = 0.5 * (coupling_ + coupling_.transpose()).eval();
}

Eigen::VectorXd TensorSystem::apply_sigma(const Eigen::VectorXd& c) const {
  const auto K = static_cast<Eigen::Index>(geometry_->num_freqs());
  const auto J = static_cast<Eigen::Index>(geometry_->num_times());
  Eigen::Map<const Eigen::MatrixXd> cm(c.data(), K, J);
  Eigen::MatrixXd out = geometry_->a_gram * cm * m_theta_;
  if (theta_[1] != 0.0) {
    const Eigen::RowVectorXd col_sums = cm.colwise().sum() * geometry_->b_gram;
    out.rowwise() += theta_[1] * col_sums;
  }
  return Eigen::Map<Eigen::VectorXd>(out.data(), K * J);
}

Eigen::MatrixXd TensorSystem::dense_sigma() const {
  const auto K = static_cast<Eigen::Index>(geometry_->num_freqs());
  const auto J = static_cast<Eigen::Index>(geometry_->num_times());
  Eigen::MatrixXd s(K * J, K * J);
  for (Eigen::Index j2 = 0; j2 < J; ++j2) {
    for (Eigen::Index j1 = 0; j1 < J; ++j1) {
      s.block(j1 * K, j2 * K, K, K) = m_theta_(j1, j2) * geometry_->a_gram;
      s.block(j1 * K, j2 * K, K, K).array() += theta_[1] * geometry_->b_gram(j1, j2);
    }
  }
  return s;
}

std::shared_ptr<const RegularizedSystem> TensorSystem::regularize(double n_lambda) const {
  auto self = std::static_pointer_cast<const TensorSystem>(shared_from_this());
  return std::make_shared<TensorRegularized>(std::move(self), n_lambda);
}

const Eigen::MatrixXd& TensorSystem::omega() const {
  std::call_once(dense_once_, [this] {
    dense_ = std::make_shared<DenseSystem>(dense_sigma(), null_basis());
  });
  return dense_->omega();
}

std::shared_ptr<const DenseSystem> system_for(std::span<const double> freqs) {
  const std::size_t T = freqs.size();
  for (std::size_t k = 0; k < T; ++k) {
    if (freqs[k] != static_cast<double>(k) / static_cast<double>(T)) return stationary_system(freqs);
  }
  return fourier_system(T);
}

}  // namespace wspec
