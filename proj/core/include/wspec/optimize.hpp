#pragma once

#include <functional>
#include <vector>

#include <Eigen/Core>

namespace wspec {

/// Objective returning a non-finite value where it is undefined.
using ScalarObjective = std::function<double(double)>;
using VectorObjective = std::function<double(const Eigen::VectorXd&)>;

struct SearchPoint {
  double x = 0.0;
  double value = 0.0;
};

struct ScalarSearchResult {
  bool found = false;
  double x = 0.0;
  double value = 0.0;
  std::vector<SearchPoint> trace;
};

/// Coarse grid over [lo, hi] followed by golden-section refinement inside
/// the bracket around the best grid point. The best point seen wins.
ScalarSearchResult grid_golden_search(const ScalarObjective& f, double lo, double hi,
                                      int coarse_points = 13, double tolerance = 1e-3);

struct NelderMeadOptions {
  double initial_step = 1.0;
  int max_evaluations = 250;
  double value_tolerance = 1e-7;
  double size_tolerance = 1e-3;
};

struct NelderMeadResult {
  bool found = false;
  Eigen::VectorXd x;
  double value = 0.0;
  int evaluations = 0;
};

/// Derivative-free simplex search; trial points are clamped to the box.
NelderMeadResult nelder_mead(const VectorObjective& f, const Eigen::VectorXd& start,
                             const Eigen::VectorXd& lower, const Eigen::VectorXd& upper,
                             const NelderMeadOptions& opts = {});

}  // namespace wspec
