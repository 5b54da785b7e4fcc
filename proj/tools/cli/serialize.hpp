#pragma once

#include <string>

#include <json.hpp>

#include <wspec/inference.hpp>
#include <wspec/selection.hpp>
#include <wspec/simulation.hpp>

#include "cli/config.hpp"

namespace wspec::cli {

using Json = nlohmann::ordered_json;

/// Non-finite doubles become null.
Json number(double x);
Json numbers(const Eigen::VectorXd& v);
Json numbers(const std::vector<double>& v);
Json theta_json(const Theta& t);

Json trace_json(const std::vector<CriterionEval>& trace);
Json selection_json(const StationarySelection& sel);
Json selection_json(const SsanovaSelection& sel);
Json test_json(const StationarityTestResult& res);
Json report_json(const SimulationReport& report);

/// Top-level bundle: tool metadata, resolved config, status and payload.
/// Carries no timestamps so identical runs give identical bytes.
Json bundle(const Settings& s, const std::string& status, const std::string& diagnostic,
            Json payload);

std::string dump(const Json& j);

}  // namespace wspec::cli
