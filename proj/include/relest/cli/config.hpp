#pragma once

#include <nlohmann/json.hpp>
#include <string>

#include "relest/setup.hpp"

namespace relest::cli {

using json = nlohmann::json;

struct McOptions {
  int L = 6;
  long long N = 65000;
  double epsilon = 1e-2;
  double delta = 1e-2;
  uint64_t seed = 12345;
};

struct SolverConfig {
  double tol = 1e-9;
  int max_iter = 200;
};

struct ProblemConfig {
  EstimationSetup setup;
  std::string problem;  // "h2" | "hinf-nominal" | "hinf-robust"
  std::string synthesis_kind = "minimax";  // "minimax" | "aw"
  double alpha = 0.0;
  McOptions mc;
  SolverConfig solver;
  json raw;  // the config document as parsed
};

// Throws std::invalid_argument with a descriptive message on schema errors.
ProblemConfig parse_config(const json& doc);
ProblemConfig load_config_file(const std::string& path);

lti::StateSpace parse_system(const json& j, const std::string& name);
json system_to_json(const lti::StateSpace& sys);
lti::StateSpace system_from_json(const json& j);

}  // namespace relest::cli
