#include "wspec/kernels.hpp"

#include <cmath>
#include <string>

#include <Eigen/Eigenvalues>

#include "wspec/error.hpp"

namespace wspec {

namespace {

void require_unit(double x, const char* what) {
  if (!(x >= 0.0 && x <= 1.0)) {
    throw InvalidInput(std::string(what) + " argument " + std::to_string(x) + " outside [0, 1]");
  }
}

// Unchecked polynomial bodies; arguments produced by frac() are already in [0,1).
inline double b2_raw(double u) noexcept {
  const double h = u - 0.5;
  return h * h - 1.0 / 12.0;
}

inline double b4_raw(double u) noexcept {
  const double h2 = (u - 0.5) * (u - 0.5);
  return h2 * h2 - 0.5 * h2 + 7.0 / 240.0;
}

inline double r1_raw(double w1, double w2) noexcept { return -b4_raw(frac(w1 - w2)) / 24.0; }

inline double r2_raw(double u1, double u2) noexcept {
  return 0.25 * b2_raw(u1) * b2_raw(u2) - b4_raw(frac(u1 - u2)) / 24.0;
}

void check_limit(std::size_t n, std::size_t limit) {
  if (n > limit) {
    throw InvalidInput("Gram matrix of order " + std::to_string(n) + " exceeds the limit of " +
                       std::to_string(limit));
  }
}

}  // namespace

double frac(double x) noexcept { return x - std::floor(x); }

double b2(double u) {
  require_unit(u, "b2");
  return b2_raw(u);
}

double b4(double u) {
  require_unit(u, "b4");
  return b4_raw(u);
}

double r1(double w1, double w2) {
  require_unit(w1, "r1");
  require_unit(w2, "r1");
  return r1_raw(w1, w2);
}

double r2(double u1, double u2) {
  require_unit(u1, "r2");
  require_unit(u2, "r2");
  return r2_raw(u1, u2);
}

double r3(GridPoint a, GridPoint b) { return r1(a.omega, b.omega) * (a.u - 0.5) * (b.u - 0.5); }

double r4(GridPoint a, GridPoint b) { return r1(a.omega, b.omega) * r2(a.u, b.u); }

double rk_theta(GridPoint a, GridPoint b, const Theta& theta) {
  require_unit(a.omega, "kernel");
  require_unit(a.u, "kernel");
  require_unit(b.omega, "kernel");
  require_unit(b.u, "kernel");
  const double k1 = r1_raw(a.omega, b.omega);
  const double k2 = r2_raw(a.u, b.u);
  return theta[0] * k1 + theta[1] * k2 + theta[2] * k1 * (a.u - 0.5) * (b.u - 0.5) +
         theta[3] * k1 * k2;
}

GramMatrix gram_matrix(std::span<const double> omegas, std::size_t limit) {
  const std::size_t n = omegas.size();
  check_limit(n, limit);
  for (double w : omegas) require_unit(w, "gram");
  GramMatrix g{Eigen::MatrixXd(n, n), GramKind::kStationary};
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t i = j; i < n; ++i) {
      const double v = r1_raw(omegas[i], omegas[j]);
      g.entries(i, j) = v;
      g.entries(j, i) = v;
    }
  }
  return g;
}

GramMatrix gram_matrix(std::span<const GridPoint> points, const Theta& theta, std::size_t limit) {
  const std::size_t n = points.size();
  check_limit(n, limit);
  for (double t : theta) {
    if (!(t >= 0.0) || !std::isfinite(t)) throw InvalidInput("theta components must be finite and >= 0");
  }
  GramMatrix g{Eigen::MatrixXd(n, n), GramKind::kSsanova};
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t i = j; i < n; ++i) {
      const double v = rk_theta(points[i], points[j], theta);
      g.entries(i, j) = v;
      g.entries(j, i) = v;
    }
  }
  return g;
}

Eigen::MatrixXd cross_r1(std::span<const double> a, std::span<const double> b) {
  Eigen::MatrixXd m(a.size(), b.size());
  for (std::size_t j = 0; j < b.size(); ++j) {
    require_unit(b[j], "r1");
    for (std::size_t i = 0; i < a.size(); ++i) m(i, j) = r1_raw(a[i], b[j]);
  }
  for (double x : a) require_unit(x, "r1");
  return m;
}

Eigen::MatrixXd cross_r2(std::span<const double> a, std::span<const double> b) {
  Eigen::MatrixXd m(a.size(), b.size());
  for (std::size_t j = 0; j < b.size(); ++j) {
    require_unit(b[j], "r2");
    for (std::size_t i = 0; i < a.size(); ++i) m(i, j) = r2_raw(a[i], b[j]);
  }
  for (double x : a) require_unit(x, "r2");
  return m;
}

double min_eigenvalue(const Eigen::MatrixXd& m) {
  if (m.size() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m, Eigen::EigenvaluesOnly);
  return es.eigenvalues()(0);
}

}  // namespace wspec
