#pragma once

#include <nlohmann/json.hpp>
#include <string>
#include <vector>

#include "relest/cli/config.hpp"

namespace relest::cli {

// The worked example configurations shipped with the tool.
json builtin_config(const std::string& name);
std::vector<std::string> builtin_names();

}  // namespace relest::cli
