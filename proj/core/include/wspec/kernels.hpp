#pragma once

#include <array>
#include <cstddef>
#include <span>

#include <Eigen/Core>

namespace wspec {

/// A point of the time-frequency plane: frequency omega and rescaled time u, both in [0,1].
struct GridPoint {
  double omega = 0.0;
  double u = 0.0;
};

/// Component weights theta_1..theta_4 of the SS ANOVA kernel
/// (frequency main effect, time main effect, linear-smooth and smooth-smooth interactions).
using Theta = std::array<double, 4>;

inline constexpr std::size_t kDefaultGramLimit = 4096;

/// x - floor(x); exact integers map to 0.
double frac(double x) noexcept;

/// (u - 1/2)^2 - 1/12 on [0,1].
double b2(double u);
/// (u - 1/2)^4 - (u - 1/2)^2 / 2 + 7/240 on [0,1].
double b4(double u);

/// Periodic cubic-spline kernel -B4(frac(w1 - w2))/24.
double r1(double w1, double w2);
/// Smooth time main-effect kernel B2(u1)B2(u2)/4 - B4(frac(u1 - u2))/24.
double r2(double u1, double u2);
/// Linear-smooth interaction r1(w1, w2)(u1 - 1/2)(u2 - 1/2).
double r3(GridPoint a, GridPoint b);
/// Smooth-smooth interaction r1(w1, w2) r2(u1, u2).
double r4(GridPoint a, GridPoint b);
/// sum_r theta_r R_r(a, b).
double rk_theta(GridPoint a, GridPoint b, const Theta& theta);

enum class GramKind { kStationary, kSsanova };

struct GramMatrix {
  Eigen::MatrixXd entries;
  GramKind kind = GramKind::kStationary;
};

/// {r1(w_i, w_j)}.
GramMatrix gram_matrix(std::span<const double> omegas, std::size_t limit = kDefaultGramLimit);
/// {sum_r theta_r R_r(g_i, g_j)}.
GramMatrix gram_matrix(std::span<const GridPoint> points, const Theta& theta,
                       std::size_t limit = kDefaultGramLimit);

/// Rectangular r1 / r2 cross-kernels, rows indexed by `a`, columns by `b`.
Eigen::MatrixXd cross_r1(std::span<const double> a, std::span<const double> b);
Eigen::MatrixXd cross_r2(std::span<const double> a, std::span<const double> b);

/// Smallest eigenvalue of a symmetric matrix.
double min_eigenvalue(const Eigen::MatrixXd& m);

}  // namespace wspec
