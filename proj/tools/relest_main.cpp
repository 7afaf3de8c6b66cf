#include <CLI11.hpp>
#include <cstdlib>
#include <iostream>
#include <nlohmann/json.hpp>

#include "relest/cli/builtin.hpp"
#include "relest/cli/commands.hpp"

using namespace relest::cli;

int main(int argc, char** argv) {
  CLI::App app{"relest: robust linear estimator synthesis and evaluation"};
  app.set_version_flag("--version", std::string(kVersion));

  std::string config_path, estimator_file, reference_file, example;
  CommandOptions opts;
  uint64_t seed = 0;
  double solver_tol = 0.0;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--out-dir", opts.out_dir, "output directory")->capture_default_str();
    cmd->add_option("--seed", seed, "Monte-Carlo seed override");
    cmd->add_option("--threads", opts.threads, "worker threads for Monte Carlo")->capture_default_str();
    cmd->add_option("--solver-tol", solver_tol, "SDP solver relative tolerance");
  };

  CLI::App* synth = app.add_subcommand("synth", "synthesize estimators from a configuration");
  synth->add_option("--config", config_path, "JSON problem configuration")->required();
  add_common(synth);

  CLI::App* evalc = app.add_subcommand("eval", "evaluate a fixed estimator against a configuration");
  evalc->add_option("--config", config_path, "JSON problem configuration")->required();
  evalc->add_option("--estimator", estimator_file, "estimator JSON file")->required();
  evalc->add_option("--reference", reference_file, "reference (minimax) estimator JSON file");
  add_common(evalc);

  CLI::App* mc = app.add_subcommand("mc", "Monte-Carlo improvement experiment");
  mc->add_option("--config", config_path, "JSON problem configuration")->required();
  add_common(mc);

  CLI::App* repro = app.add_subcommand("repro", "reproduce a worked example");
  repro->add_option("example", example, "one of: siso, mimo1, mimo2, siso-hinf")->required();
  add_common(repro);

  app.require_subcommand(1);
  CLI11_PARSE(app, argc, argv);

  if (const char* env = std::getenv("RELEST_THREADS")) opts.threads = std::max(1, std::atoi(env));
  for (auto* cmd : {synth, evalc, mc, repro}) {
    if (cmd->parsed()) {
      if (cmd->count("--seed")) {
        opts.seed_override = seed;
        opts.has_seed_override = true;
      }
      if (cmd->count("--solver-tol")) opts.solver_tol = solver_tol;
    }
  }

  try {
    if (synth->parsed()) return cmd_synth(load_config_file(config_path), opts);
    if (evalc->parsed()) {
      std::optional<std::string> ref;
      if (!reference_file.empty()) ref = reference_file;
      return cmd_eval(load_config_file(config_path), estimator_file, ref, opts);
    }
    if (mc->parsed()) return cmd_mc(load_config_file(config_path), opts);
    if (repro->parsed()) return cmd_repro(example, opts);
  } catch (const std::invalid_argument& e) {
    nlohmann::json err{{"error", e.what()}, {"kind", "config"}};
    std::cerr << err.dump() << std::endl;
    return 2;
  } catch (const std::exception& e) {
    nlohmann::json err{{"error", e.what()}, {"kind", "runtime"}};
    std::cerr << err.dump() << std::endl;
    return 1;
  }
  return 1;
}
