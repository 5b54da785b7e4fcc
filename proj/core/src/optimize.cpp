#include "wspec/optimize.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "wspec/error.hpp"

namespace wspec {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double sanitize(double v) { return std::isfinite(v) ? v : kInf; }

}  // namespace

ScalarSearchResult grid_golden_search(const ScalarObjective& f, double lo, double hi,
                                      int coarse_points, double tolerance) {
  if (!(hi > lo) || coarse_points < 3) throw InvalidInput("invalid search interval");
  ScalarSearchResult res;
  auto eval = [&](double x) {
    const double v = sanitize(f(x));
    res.trace.push_back({x, v});
    if (v < kInf && (!res.found || v < res.value)) {
      res.found = true;
      res.x = x;
      res.value = v;
    }
    return v;
  };

  const double step = (hi - lo) / static_cast<double>(coarse_points - 1);
  std::vector<double> values(static_cast<std::size_t>(coarse_points));
  for (int i = 0; i < coarse_points; ++i) values[static_cast<std::size_t>(i)] = eval(lo + step * i);
  if (!res.found) return res;

  const auto best = static_cast<int>(std::min_element(values.begin(), values.end()) - values.begin());
  double a = lo + step * std::max(best - 1, 0);
  double b = lo + step * std::min(best + 1, coarse_points - 1);

  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double x1 = b - inv_phi * (b - a);
  double x2 = a + inv_phi * (b - a);
  double f1 = eval(x1);
  double f2 = eval(x2);
  while (b - a > tolerance) {
    if (f1 <= f2) {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - inv_phi * (b - a);
      f1 = eval(x1);
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + inv_phi * (b - a);
      f2 = eval(x2);
    }
  }
  return res;
}

NelderMeadResult nelder_mead(const VectorObjective& f, const Eigen::VectorXd& start,
                             const Eigen::VectorXd& lower, const Eigen::VectorXd& upper,
                             const NelderMeadOptions& opts) {
  const Eigen::Index dim = start.size();
  if (dim == 0 || lower.size() != dim || upper.size() != dim) {
    throw InvalidInput("Nelder-Mead bounds do not match the start point");
  }
  NelderMeadResult res;
  auto clamp = [&](Eigen::VectorXd x) { return x.cwiseMax(lower).cwiseMin(upper).eval(); };
  auto eval = [&](const Eigen::VectorXd& x) {
    ++res.evaluations;
    const double v = sanitize(f(x));
    if (v < kInf && (!res.found || v < res.value)) {
      res.found = true;
      res.x = x;
      res.value = v;
    }
    return v;
  };

  std::vector<Eigen::VectorXd> simplex(static_cast<std::size_t>(dim + 1));
  std::vector<double> fv(simplex.size());
  simplex[0] = clamp(start);
  for (Eigen::Index i = 0; i < dim; ++i) {
    Eigen::VectorXd x = simplex[0];
    // Step away from the nearer bound so the vertex stays distinct.
    x(i) += (x(i) + opts.initial_step <= upper(i)) ? opts.initial_step : -opts.initial_step;
    simplex[static_cast<std::size_t>(i + 1)] = clamp(x);
  }
  for (std::size_t i = 0; i < simplex.size(); ++i) fv[i] = eval(simplex[i]);

  std::vector<std::size_t> order(simplex.size());
  while (res.evaluations < opts.max_evaluations) {
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return fv[a] < fv[b]; });
    const std::size_t best = order.front();
    const std::size_t worst = order.back();
    const std::size_t second = order[order.size() - 2];

    double size = 0.0;
    for (const auto& x : simplex) size = std::max(size, (x - simplex[best]).cwiseAbs().maxCoeff());
    const bool flat = std::isfinite(fv[worst]) &&
                      std::abs(fv[worst] - fv[best]) <= opts.value_tolerance * (1.0 + std::abs(fv[best]));
    if (size < opts.size_tolerance || (flat && size < 10 * opts.size_tolerance)) break;

    Eigen::VectorXd centroid = Eigen::VectorXd::Zero(dim);
    for (std::size_t i = 0; i < simplex.size(); ++i) {
      if (i != worst) centroid += simplex[i];
    }
    centroid /= static_cast<double>(dim);

    const Eigen::VectorXd xr = clamp(centroid + (centroid - simplex[worst]));
    const double fr = eval(xr);
    if (fr < fv[best]) {
      const Eigen::VectorXd xe = clamp(centroid + 2.0 * (centroid - simplex[worst]));
      const double fe = eval(xe);
      if (fe < fr) {
        simplex[worst] = xe;
        fv[worst] = fe;
      } else {
        simplex[worst] = xr;
        fv[worst] = fr;
      }
      continue;
    }
    if (fr < fv[second]) {
      simplex[worst] = xr;
      fv[worst] = fr;
      continue;
    }
    const bool outside = fr < fv[worst];
    const Eigen::VectorXd xc = outside ? clamp(centroid + 0.5 * (xr - centroid))
                                       : clamp(centroid + 0.5 * (simplex[worst] - centroid));
    const double fc = eval(xc);
    if (fc < (outside ? fr : fv[worst])) {
      simplex[worst] = xc;
      fv[worst] = fc;
      continue;
    }
    for (std::size_t i = 0; i < simplex.size(); ++i) {
      if (i == best) continue;
      simplex[i] = clamp(simplex[best] + 0.5 * (simplex[i] - simplex[best]));
      fv[i] = eval(simplex[i]);
    }
  }
  return res;
}

}  // namespace wspec
