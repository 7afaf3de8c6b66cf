#pragma once

#include <filesystem>
#include <optional>

#include "relest/cli/config.hpp"

namespace relest::cli {

struct CommandOptions {
  std::filesystem::path out_dir = "out";
  uint64_t seed_override = 0;
  bool has_seed_override = false;
  int threads = 1;
  double solver_tol = 0.0;  // 0 -> default
};

int cmd_synth(const ProblemConfig& pc, const CommandOptions& opts);
int cmd_eval(const ProblemConfig& pc, const std::string& estimator_file,
             const std::optional<std::string>& reference_file, const CommandOptions& opts);
int cmd_mc(const ProblemConfig& pc, const CommandOptions& opts);
int cmd_repro(const std::string& example, const CommandOptions& opts);

extern const char* kVersion;

}  // namespace relest::cli
