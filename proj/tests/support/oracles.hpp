#pragma once

// Straightforward reference implementations used as test oracles. They share
// no code with the library beyond plain data types.

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

namespace oracle {

/// |sum_t x_t exp(2 pi i k t / T)|^2 / T by direct summation in long double.
std::vector<double> periodogram(const std::vector<double>& x);

/// Local periodogram of x[begin, end) at frequency w after removing the block mean.
double block_periodogram(const std::vector<double>& x, std::size_t begin, std::size_t end, double w);

/// Periodic cubic-spline kernel from its Fourier series, truncated at `terms`.
double r1_series(double w1, double w2, int terms = 20000);

/// Bernoulli polynomials from their textbook monomial form.
double bernoulli2(double x);
double bernoulli4(double x);

struct KktSolution {
  Eigen::VectorXd c;
  Eigen::VectorXd d;
};

/// Solves (Sigma + nl I) c + S d = z, S'c = 0 as one bordered linear system.
KktSolution kkt_solve(const Eigen::MatrixXd& sigma, const Eigen::MatrixXd& s, double nl,
                      const Eigen::VectorXd& z);

/// sum log(1 + delta/nl) over the spectrum of P Sigma P, P the projector off span(S).
double log_det_ratio(const Eigen::MatrixXd& sigma, const Eigen::MatrixXd& s, double nl);

/// sum (g + y e^{-g}) + (nl/2) c' Sigma c.
double penalized_whittle(const Eigen::VectorXd& y, const Eigen::VectorXd& g, const Eigen::MatrixXd& sigma,
                         const Eigen::VectorXd& c, double nl);

/// Posterior variance of g(x) under the diffuse-prior Gaussian model with unit noise:
/// (1/nl)[R(x,x) - xi'M^{-1}xi + e'(S'M^{-1}S)^{-1}e], e = phi - S'M^{-1}xi.
double posterior_variance(const Eigen::MatrixXd& sigma, const Eigen::MatrixXd& s, double nl,
                          const Eigen::VectorXd& xi, double rxx, const Eigen::VectorXd& phi);

/// ARMA spectral density |1 + sum ma_j z^j|^2 / |1 - sum ar_i z^i|^2, z = e^{-2 pi i w}.
double arma_spectrum(const std::vector<double>& ar, const std::vector<double>& ma, double w);

/// Spearman rank correlation (average ranks for ties).
double spearman(const std::vector<double>& a, const std::vector<double>& b);

/// Index of the smallest element.
std::size_t argmin(const std::vector<double>& v);

/// Seeded standard normal draws independent of the library's generators.
std::vector<double> normals(std::size_t n, std::uint64_t seed);

}  // namespace oracle
