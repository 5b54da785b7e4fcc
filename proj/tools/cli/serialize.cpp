#include "cli/serialize.hpp"

#include <cmath>

#ifndef WSPEC_VERSION
#define WSPEC_VERSION "unknown"
#endif

namespace wspec::cli {

Json number(double x) { return std::isfinite(x) ? Json(x) : Json(nullptr); }

Json numbers(const Eigen::VectorXd& v) {
  Json a = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(number(v[i]));
  return a;
}

Json numbers(const std::vector<double>& v) {
  Json a = Json::array();
  for (double x : v) a.push_back(number(x));
  return a;
}

Json theta_json(const Theta& t) { return Json::array({t[0], t[1], t[2], t[3]}); }

Json trace_json(const std::vector<CriterionEval>& trace) {
  Json a = Json::array();
  for (const auto& e : trace) {
    Json row = {{"lambda", number(e.lambda)}, {"value", number(e.value)}, {"ok", e.ok}};
    if (e.theta) row["theta"] = theta_json(*e.theta);
    a.push_back(std::move(row));
  }
  return a;
}

Json selection_json(const StationarySelection& sel) {
  return {{"lambda", number(sel.best_lambda)},
          {"converged", sel.fit.converged && !sel.nonconverged},
          {"irpls_iterations", sel.fit.iterations},
          {"outer_iterations", sel.iterations},
          {"objective", number(sel.fit.objective)},
          {"d", number(sel.fit.d)},
          {"criterion_trace", trace_json(sel.criterion_trace)}};
}

Json selection_json(const SsanovaSelection& sel) {
  return {{"lambda", number(sel.best_lambda)},
          {"theta", theta_json(sel.best_theta.value_or(sel.fit.theta))},
          {"converged", sel.fit.converged && !sel.nonconverged},
          {"irpls_iterations", sel.fit.iterations},
          {"outer_iterations", sel.iterations},
          {"objective", number(sel.fit.objective)},
          {"d1", number(sel.fit.d1)},
          {"d2", number(sel.fit.d2)},
          {"criterion_evaluations", sel.criterion_trace.size()},
          {"criterion_trace", trace_json(sel.criterion_trace)}};
}

Json test_json(const StationarityTestResult& res) {
  return {{"s1", number(res.s1)},
          {"s2", number(res.s2)},
          {"p1", number(res.p1)},
          {"p2", number(res.p2)},
          {"n_perm", res.n_perm},
          {"dropped", res.dropped},
          {"seed", res.seed},
          {"fast", res.fast},
          {"lambda", number(res.lambda)},
          {"theta", theta_json(res.theta)},
          {"lambda_reduced", number(res.lambda_reduced)},
          {"perm_s1", numbers(res.perm_s1)},
          {"perm_s2", numbers(res.perm_s2)}};
}

Json report_json(const SimulationReport& report) {
  const auto& c = report.config;
  Json methods = Json::array();
  for (const auto& m : report.methods) {
    methods.push_back({{"method", std::string(method_name(m.method))},
                       {"failures", m.failures},
                       {"median_re", number(m.median_re)},
                       {"mean_re", number(m.mean_re)},
                       {"median_mse", number(median(m.mse))},
                       {"mse", numbers(m.mse)},
                       {"relative_efficiency", numbers(m.relative_efficiency)}});
  }
  return {{"process", c.process},
          {"T", c.T},
          {"K", c.K},
          {"J", c.J},
          {"reps", c.reps},
          {"base_seed", c.base_seed},
          {"methods", std::move(methods)}};
}

Json bundle(const Settings& s, const std::string& status, const std::string& diagnostic,
            Json payload) {
  Json config = Json::object();
  for (const auto& [k, v] : echo(s)) config[k] = v;
  return {{"tool", "wspec"},
          {"version", WSPEC_VERSION},
          {"command", s.command},
          {"config", std::move(config)},
          {"status", status},
          {"diagnostic", diagnostic},
          {"payload", std::move(payload)}};
}

std::string dump(const Json& j) { return j.dump(2) + "\n"; }

}  // namespace wspec::cli
