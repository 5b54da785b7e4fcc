#include <gtest/gtest.h>

#include <cmath>

#include <Eigen/Dense>

#include <wspec/error.hpp>
#include <wspec/kernels.hpp>
#include <wspec/periodogram.hpp>
#include <wspec/selection.hpp>
#include <wspec/simulation.hpp>

#include "oracles.hpp"

using namespace wspec;

namespace {

PeriodogramSet ar3_pgram(std::size_t T, std::uint64_t seed) { return periodogram(simulate(ar3_process(T, seed))); }

PeriodogramSet constant_pgram(std::size_t T, double level) {
  PeriodogramSet p;
  for (std::size_t k = 0; k < T; ++k) {
    p.freqs.push_back(static_cast<double>(k) / static_cast<double>(T));
    p.values.push_back(level);
  }
  return p;
}

// Dense GACV straight from the formula, with Omega as a pseudo-inverse.
double gacv_oracle(const StationaryFit& fit, bool symmetric) {
  const auto n = fit.y.size();
  const Eigen::MatrixXd g = gram_matrix(fit.freqs).entries;
  const Eigen::MatrixXd proj = Eigen::MatrixXd::Identity(n, n) - Eigen::MatrixXd::Constant(n, n, 1.0 / n);
  const Eigen::MatrixXd omega = (proj * g * proj).completeOrthogonalDecomposition().pseudoInverse();
  const Eigen::ArrayXd eg = fit.fitted.array().exp();
  const Eigen::VectorXd w = (0.5 * fit.y.array() / eg).matrix();
  const Eigen::VectorXd v = (0.5 / eg).matrix();
  // The fit's penalty is (n lambda / 2) c' Sigma c, which pairs with the half weights.
  const Eigen::MatrixXd h =
      (Eigen::MatrixXd(w.asDiagonal()) + 0.5 * fit.n_lambda * omega).inverse() * v.asDiagonal();
  const Eigen::VectorXd s0 = eg.sqrt().matrix();
  const Eigen::MatrixXd w0h = symmetric ? Eigen::MatrixXd(s0.asDiagonal() * h * s0.asDiagonal())
                                        : Eigen::MatrixXd(s0.asDiagonal() * h * s0.cwiseInverse().asDiagonal());
  double first = 0.0, resid = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    first += fit.y(i) / eg(i) + fit.fitted(i);
    resid += fit.y(i) / eg(i) * (fit.y(i) - eg(i));
  }
  return first + h.trace() / (static_cast<double>(n) - w0h.trace()) * resid;
}

}  // namespace

TEST(Methods, NamesRoundTrip) {
  for (Method m : {Method::kDM, Method::kDV, Method::kIM, Method::kPO, Method::kLS}) {
    EXPECT_EQ(parse_method(method_name(m)), m);
  }
  EXPECT_THROW(parse_method("XX"), InvalidInput);
}

TEST(Gml, ConstantDataReducesToLogDeterminant) {
  const std::size_t T = 32;
  const double c = 0.7;
  const auto p = constant_pgram(T, std::exp(c));
  const Eigen::MatrixXd g = gram_matrix(p.freqs).entries;
  double previous = std::numeric_limits<double>::infinity();
  for (double lambda : {1e-8, 1e-6, 1e-4, 1e-2, 1.0}) {
    const CriterionEval ev = gml_stationary(lambda, p);
    ASSERT_TRUE(ev.ok);
    const double expected = T * (c + 1.0) + 0.5 * oracle::log_det_ratio(g, Eigen::MatrixXd::Ones(T, 1), T * lambda);
    EXPECT_NEAR(ev.value, expected, 1e-7 * std::abs(expected));
    EXPECT_LT(ev.u_c.cwiseAbs().maxCoeff(), 1e-10);
    EXPECT_LT(ev.value, previous);
    previous = ev.value;
  }
  const auto sel = select_stationary(p, Method::kDM);
  EXPECT_NEAR(std::log10(sel.best_lambda), 1.0, 1e-6);
}

TEST(Gml, CachedAndUncachedAgree) {
  const auto p = ar3_pgram(64, 2);
  const StationaryFit fit = fit_stationary(p, 1e-5);
  EXPECT_NEAR(gml_stationary(fit).value, gml_stationary_uncached(fit), 1e-8 * std::abs(gml_stationary(fit).value));
}

TEST(Gml, ScalingLeavesArgminUnchanged) {
  auto p = ar3_pgram(128, 3);
  const auto a = select_stationary(p, Method::kDM);
  const double va1 = gml_stationary(1e-5, p).value, va2 = gml_stationary(1e-3, p).value;
  for (auto& v : p.values) v *= 10.0;
  const auto b = select_stationary(p, Method::kDM);
  EXPECT_NEAR(std::log10(a.best_lambda), std::log10(b.best_lambda), 1e-3);
  const double vb1 = gml_stationary(1e-5, p).value, vb2 = gml_stationary(1e-3, p).value;
  EXPECT_NEAR(vb1 - va1, vb2 - va2, 1e-6);
}

TEST(Gacv, MatchesDenseFormula) {
  const auto p = ar3_pgram(32, 4);
  for (double lambda : {1e-6, 1e-4, 1e-2}) {
    const StationaryFit fit = fit_stationary(p, lambda);
    ASSERT_TRUE(fit.converged);
    GacvOptions sym, trace;
    trace.denominator = GacvDenominator::kTrace;
    EXPECT_NEAR(gacv_stationary(fit, sym).value, gacv_oracle(fit, true), 1e-6 * std::abs(gacv_oracle(fit, true)));
    EXPECT_NEAR(gacv_stationary(fit, trace).value, gacv_oracle(fit, false),
                1e-6 * std::abs(gacv_oracle(fit, false)));
    GacvOptions omega_route;
    omega_route.weighted_form = false;
    EXPECT_NEAR(gacv_stationary(fit, omega_route).value, gacv_stationary(fit, sym).value,
                1e-6 * std::abs(gacv_stationary(fit, sym).value));
  }
}

TEST(Gacv, TraceMatchesFiniteDifferenceSensitivity) {
  // H is the sensitivity d g_i / d y_i of the converged fit; check it by refitting.
  const auto p = ar3_pgram(32, 4);
  IrplsOptions tight;
  tight.tolerance = 1e-12;
  tight.max_iterations = 200;
  for (double lambda : {1e-6, 1e-4, 1e-2}) {
    const StationaryFit fit = fit_stationary(p, lambda, tight);
    ASSERT_TRUE(fit.converged);
    double trace = 0.0;
    for (std::size_t i = 0; i < p.length(); ++i) {
      const double eps = 1e-5 * p.values[i];
      auto up = p, down = p;
      up.values[i] += eps;
      down.values[i] -= eps;
      const auto i_ = static_cast<Eigen::Index>(i);
      trace += (fit_stationary(up, lambda, tight).fitted(i_) - fit_stationary(down, lambda, tight).fitted(i_)) /
               (2.0 * eps);
    }
    EXPECT_NEAR(gacv_stationary(fit).trace_h, trace, 1e-5 * trace) << "lambda " << lambda;
  }
}

TEST(Gacv, ConstantDataHasNoResidualTerm) {
  const auto p = constant_pgram(16, 3.0);
  const CriterionEval ev = gacv_stationary(1e-3, p);
  EXPECT_NEAR(ev.value, 16.0 * (1.0 + std::log(3.0)), 1e-8);
}

TEST(Gacv, SymmetricDenominatorIsScaleInvariant) {
  auto p = ar3_pgram(64, 5);
  const double a1 = gacv_stationary(1e-5, p).value, a2 = gacv_stationary(1e-3, p).value;
  for (auto& v : p.values) v *= 7.0;
  const double b1 = gacv_stationary(1e-5, p).value, b2 = gacv_stationary(1e-3, p).value;
  EXPECT_NEAR(b1 - a1, b2 - a2, 1e-6);
  EXPECT_NEAR(b1 - a1, 64.0 * std::log(7.0), 1e-6);
}

TEST(Loocv, HeavyPenaltyMatchesConstantModel) {
  const auto p = ar3_pgram(16, 6);
  const double lambda = 1e6;
  double total = 0.0, sum = 0.0;
  for (double v : p.values) sum += v;
  for (std::size_t i = 0; i < 16; ++i) {
    const double loo = (sum - p.values[i]) / 15.0;
    total += p.values[i] / loo + std::log(sum / 16.0);
  }
  EXPECT_NEAR(loocv_ckl(lambda, p), 2.0 * total / 16.0, 1e-3);
  EXPECT_EQ(loocv_ckl(1e-3, p), loocv_ckl(1e-3, p));
  EXPECT_THROW(loocv_ckl(1e-3, ar3_pgram(128, 1)), InvalidInput);
}

TEST(SelectStationary, DeterministicAndConverged) {
  const auto p = ar3_pgram(128, 7);
  const auto a = select_stationary(p, Method::kDM);
  const auto b = select_stationary(p, Method::kDM);
  EXPECT_EQ(a.best_lambda, b.best_lambda);
  EXPECT_TRUE(a.fit.converged);
  EXPECT_FALSE(a.nonconverged);
  ASSERT_FALSE(a.criterion_trace.empty());
  double best = std::numeric_limits<double>::infinity();
  for (const auto& e : a.criterion_trace)
    if (e.ok) best = std::min(best, e.value);
  EXPECT_NEAR(gml_stationary(a.fit).value, best, 1e-9 * std::abs(best));
  EXPECT_THROW(select_stationary(p, Method::kLS), InvalidInput);
}

TEST(SelectStationary, WhiteNoiseIsSmoothedHeavily) {
  int heavy = 0;
  for (int s = 0; s < 20; ++s) {
    const auto p = periodogram(simulate(process_by_name("WN", 128, 300 + s)));
    // The log periodogram of white noise has standard deviation near 1.28.
    const auto fit = select_stationary(p, Method::kDM).fit;
    if (fit.fitted.maxCoeff() - fit.fitted.minCoeff() <= 0.5) ++heavy;
  }
  EXPECT_GE(heavy, 16);
}

TEST(OtherMethods, AllProduceFits) {
  const auto p = ar3_pgram(128, 8);
  for (Method m : {Method::kLS, Method::kIM, Method::kPO, Method::kDV}) {
    const auto sel = estimate_stationary(p, m);
    EXPECT_GT(sel.best_lambda, 0.0) << method_name(m);
    if (!sel.nonconverged) {
      EXPECT_TRUE(sel.fit.fitted.allFinite());
      EXPECT_EQ(sel.fit.fitted.size(), 128);
    }
  }
}

TEST(OtherMethods, LsOnConstantDataIsFlat) {
  const auto sel = ls_fit(constant_pgram(64, 1.0));
  ASSERT_FALSE(sel.nonconverged);
  const double spread = sel.fit.fitted.maxCoeff() - sel.fit.fitted.minCoeff();
  EXPECT_LT(spread, 0.3);  // only the endpoint offsets differ
}

TEST(SmootherTrace, BetweenNullDimensionAndN) {
  const auto sys = fourier_system(64);
  const double t = smoother_trace(*sys, 64 * 1e-4);
  EXPECT_GT(t, 1.0);
  EXPECT_LT(t, 64.0);
  EXPECT_GT(smoother_trace(*sys, 64 * 1e-6), t);
}

TEST(Ssanova, ConstantGridGmlDecreases) {
  auto grid = local_periodograms(oracle::normals(512, 9), 8, 8);
  grid.values.setConstant(2.0);
  double previous = std::numeric_limits<double>::infinity();
  for (double lambda : {1e-6, 1e-4, 1e-2}) {
    const auto ev = gml_ssanova(lambda, Theta{1, 1, 1, 1}, grid);
    ASSERT_TRUE(ev.ok);
    EXPECT_LT(ev.value, previous);
    previous = ev.value;
  }
}

TEST(Ssanova, SingleBlockMatchesStationaryGml) {
  const auto x = oracle::normals(256, 10);
  GridOptions opts;
  opts.freqs.resize(15);
  for (int k = 0; k < 15; ++k) opts.freqs[k] = (k + 1) / 16.0;
  opts.blocks = {0, 256};
  const auto grid = local_periodograms(x, opts);
  const auto ev = gml_ssanova(1e-3, Theta{1, 0, 0, 0}, grid);
  const Eigen::VectorXd y = grid.values.col(0);
  const StationaryFit sf = fit_stationary(grid.freqs, y, stationary_system(grid.freqs), 15 * 1e-3);
  EXPECT_NEAR(ev.value, gml_stationary(sf).value, 1e-6 * std::abs(ev.value));
}

TEST(Ssanova, GacvMatchesDenseRoute) {
  const auto grid = local_periodograms(simulate(ls1_process(512, 11)).values, 8, 8);
  const Theta theta{1, 0.3, 2.0, 0.5};
  const SsanovaFit fit = fit_ssanova(grid, 1e-3, theta);
  GacvOptions weighted, omega;
  omega.weighted_form = false;
  const double a = gacv_ssanova(fit, weighted).value;
  const double b = gacv_ssanova(fit, omega).value;
  EXPECT_NEAR(a, b, 1e-6 * std::abs(a));
}

TEST(Ssanova, StationaryInputGivesFlatSurface) {
  // The linear u term is unpenalized, so small spurious trends survive.
  std::vector<double> worst_ranges;
  for (int s = 0; s < 5; ++s) {
    const auto grid = local_periodograms(simulate(ar3_process(1024, 40 + s)).values, 16, 16);
    const auto sel = select_ssanova(grid, Method::kDM);
    ASSERT_FALSE(sel.nonconverged);
    const Eigen::MatrixXd m = sel.fit.fitted_matrix();
    double worst = 0.0;
    for (Eigen::Index k = 0; k < m.rows(); ++k) worst = std::max(worst, m.row(k).maxCoeff() - m.row(k).minCoeff());
    EXPECT_LE(worst, 1.0) << "seed " << 40 + s;
    worst_ranges.push_back(worst);
  }
  EXPECT_LE(median(worst_ranges), 0.5);
}

TEST(Ssanova, PoIsStationaryOnly) {
  const auto grid = local_periodograms(oracle::normals(256, 12), 4, 4);
  EXPECT_THROW(estimate_ssanova(grid, Method::kPO), InvalidInput);
}

TEST(Ssanova, ThetaFromLog10FixesFirstComponent) {
  Eigen::VectorXd x(4);
  x << -3, 1, 0, -1;
  const Theta t = theta_from_log10(x);
  EXPECT_DOUBLE_EQ(t[0], 1.0);
  EXPECT_NEAR(t[1], 10.0, 1e-12);
  EXPECT_NEAR(t[2], 1.0, 1e-12);
  EXPECT_NEAR(t[3], 0.1, 1e-12);
}

TEST(Reduced, SelectionConverges) {
  const auto grid = local_periodograms(simulate(ls1_process(1024, 13)).values, 16, 16);
  const auto sel = select_reduced(grid);
  ASSERT_FALSE(sel.nonconverged);
  EXPECT_TRUE(gml_reduced(sel.fit).ok);
}
