#include "relest/cli/commands.hpp"

#include <fstream>
#include <iomanip>
#include <iostream>
#include <nlohmann/json.hpp>
#include <sstream>

#include "relest/cli/builtin.hpp"
#include "relest/evaluate/evaluate.hpp"
#include "relest/lti/lyap.hpp"
#include "relest/lti/minreal.hpp"
#include "relest/synth/average.hpp"
#include "relest/synth/minimax.hpp"

namespace relest::cli {

const char* kVersion = "relest 1.0.0";

namespace fs = std::filesystem;
using lti::StateSpace;

namespace {

struct Bundle {
  json metrics;
  std::vector<std::string> table;  // csv lines
  std::ostringstream log;
  std::map<std::string, std::string> plot_files;

  void flush(const fs::path& dir) {
    fs::create_directories(dir);
    {
      std::ofstream f(dir / "metrics.json");
      f << metrics.dump(2) << "\n";
    }
    if (!table.empty()) {
      std::ofstream f(dir / "table.csv");
      f << "estimator,worst_case,average,nominal,eta_RW\n";
      for (const auto& line : table) f << line << "\n";
    }
    {
      std::ofstream f(dir / "solver.log");
      f << log.str();
    }
    for (const auto& [name, content] : plot_files) {
      std::ofstream f(dir / name);
      f << content;
    }
  }
};

std::string fmt6(double v) {
  std::ostringstream os;
  os << std::setprecision(6) << v;
  return os.str();
}

void log_solve(Bundle& b, const std::string& name, const lmi::SDPSolution& d) {
  b.log << name << ": status=" << static_cast<int>(d.status) << " iters=" << d.iterations
        << " gap=" << d.gap << " dual_residual=" << d.dual_residual << " violation=" << d.max_violation
        << " msg=" << d.message << "\n";
}

struct SynthesisOutcome {
  synth::SynthesisReport minimax;
  std::optional<synth::SynthesisReport> aw;
  std::optional<synth::EstimatorBasis> basis;  // h2 problems
};

SynthesisOutcome run_synthesis(const ProblemConfig& pc, Bundle& b) {
  SynthesisOutcome out;
  const EstimationSetup& s = pc.setup;
  if (pc.problem == "h2") {
    out.basis = synth::make_nominal_basis(s);
    out.minimax = synth::solve_prob1(s, *out.basis);
    log_solve(b, "prob1", out.minimax.diagnostics);
    if (pc.synthesis_kind == "aw") {
      out.aw = synth::solve_prob4(s, *out.basis, pc.alpha, out.minimax);
      log_solve(b, "prob4", out.aw->diagnostics);
    }
  } else if (pc.problem == "hinf-nominal") {
    out.minimax = synth::solve_prob2(s);
    log_solve(b, "prob2", out.minimax.diagnostics);
    if (pc.synthesis_kind == "aw") {
      out.aw = synth::solve_prob5(s, pc.alpha, out.minimax);
      log_solve(b, "prob5", out.aw->diagnostics);
    }
  } else {
    out.minimax = synth::solve_prob3(s);
    log_solve(b, "prob3", out.minimax.diagnostics);
    if (pc.synthesis_kind == "aw") {
      out.aw = synth::solve_prob6(s, pc.alpha, out.minimax);
      log_solve(b, "prob6", out.aw->diagnostics);
    }
  }
  return out;
}

json report_json(const synth::SynthesisReport& r) {
  json j;
  j["value"] = r.optimal_value;
  j["multipliers"] = r.multipliers;
  j["estimator"] = system_to_json(r.estimator);
  j["solver"] = {{"iterations", r.diagnostics.iterations},
                 {"gap", r.diagnostics.gap},
                 {"dual_residual", r.diagnostics.dual_residual},
                 {"violation", r.diagnostics.max_violation}};
  return j;
}

// Table rows + improvement metrics for an (G, G_M) pair.
void emit_pair_metrics(const ProblemConfig& pc, const StateSpace& G_aw, const StateSpace& G_M, Bundle& b,
                       const CommandOptions& opts) {
  const EstimationSetup& s = pc.setup;
  json& m = b.metrics["metrics"];
  if (pc.problem == "h2") {
    const double wc_aw = eval::worst_case_mse(G_aw, s);
    const double wc_m = eval::worst_case_mse(G_M, s);
    const double nom_aw = eval::mse(G_aw, s.H0, s);
    const double nom_m = eval::mse(G_M, s.H0, s);
    const double avN_aw = synth::eta_finite_N(G_aw, s, pc.mc.L);
    const double avN_m = synth::eta_finite_N(G_M, s, pc.mc.L);
    m["eta_av"] = {{"G_aw", synth::eta_av(G_aw, s).value}, {"G_M", synth::eta_av(G_M, s).value}};
    m["eta_N"] = {{"L", pc.mc.L}, {"G_aw", avN_aw}, {"G_M", avN_m}};
    m["delta_Jo"] = nom_aw - nom_m;
    eval::ImprovementMetrics im = eval::mu_I_lower(G_aw, G_M, s);
    if (im.applicable) {
      m["mu_I_lower"] = im.mu_I_lower;
      m["nu_a"] = im.nu_a;
      m["nu_c"] = im.nu_c;
      m["nu_beta"] = im.nu_beta;
      m["delta_l_bar"] = im.delta_l_bar;
      m["delta_q_bar"] = im.delta_q_bar;
    } else {
      m["mu_I_lower"] = nullptr;
    }
    double rw;
    if (s.m_y() == 1 && s.m_v() == 1) {
      rw = eval::eta_RW(G_aw, G_M, s, 0.01);
      m["eta_RW"] = {{"value", rw}, {"method", "sdp-bisection"}, {"tol", 0.01}};
    } else {
      eval::MCResult mini = eval::mc_improvement(G_aw, G_M, s, pc.mc.L, 20000, 5e-2, 1e-1,
                                                 pc.mc.seed + 7, opts.threads);
      rw = mini.min_ratio;
      m["eta_RW"] = {{"value", rw}, {"method", "sampled-min-ratio"}, {"L", pc.mc.L}};
    }
    b.table.push_back("G_av," + fmt6(wc_aw) + "," + fmt6(avN_aw) + "," + fmt6(nom_aw) + "," + fmt6(rw));
    b.table.push_back("G_M," + fmt6(wc_m) + "," + fmt6(avN_m) + "," + fmt6(nom_m) + ",1");
  } else {
    const bool robust = pc.problem == "hinf-robust";
    const double wc_aw = robust ? eval::robust_hinf(G_aw, s) : eval::nominal_hinf(G_aw, s);
    const double wc_m = robust ? eval::robust_hinf(G_M, s) : eval::nominal_hinf(G_M, s);
    auto crit = [&](const StateSpace& g) { return robust ? synth::eta_b(g, s).value : synth::eta_a(g, s).value; };
    const double av_aw = crit(G_aw), av_m = crit(G_M);
    auto bounds = eval::hinf_improvement_bounds(G_aw, G_M, s, 4096);
    m["eta_P_inf_lower"] = bounds.eta_P_lower;
    m["eta_R_inf_upper"] = bounds.eta_R_upper;
    m["grid"] = bounds.grid;
    m["eta_average"] = {{"G_aw", av_aw}, {"G_M", av_m}};
    b.table.push_back("G_av," + fmt6(wc_aw) + "," + fmt6(av_aw) + ",," + fmt6(bounds.eta_R_upper));
    b.table.push_back("G_M," + fmt6(wc_m) + "," + fmt6(av_m) + ",,1");
  }
}

void emit_mc(const ProblemConfig& pc, const StateSpace& G_aw, const StateSpace& G_M,
             const std::vector<int>& lengths, Bundle& b, const CommandOptions& opts) {
  json rows = json::array();
  for (int L : lengths) {
    eval::MCResult mc = eval::mc_improvement(G_aw, G_M, pc.setup, L, pc.mc.N, pc.mc.epsilon, pc.mc.delta,
                                             pc.mc.seed, opts.threads);
    rows.push_back({{"L", L},
                    {"N_x", mc.N_x},
                    {"i_N", mc.i_N},
                    {"i_fN", mc.i_fN},
                    {"epsilon", mc.epsilon},
                    {"delta", mc.delta},
                    {"min_ratio", mc.min_ratio},
                    {"seed", mc.seed}});
  }
  b.metrics["mc"] = rows;

  eval::PathProfile path = eval::path_profile(G_aw, G_M, pc.setup, pc.mc.L, 21, pc.mc.seed);
  std::ostringstream pg, pm;
  for (size_t k = 0; k < path.J_G.size(); ++k) {
    pg << k + 1 << " " << std::setprecision(17) << path.J_G[k] << "\n";
    pm << k + 1 << " " << std::setprecision(17) << path.J_GM[k] << "\n";
  }
  b.plot_files["path_G.dat"] = pg.str();
  b.plot_files["path_GM.dat"] = pm.str();
  b.plot_files["plot.gp"] =
      "set xlabel 'path point'\nset ylabel 'MSE'\n"
      "plot 'path_G.dat' with linespoints title 'a/w estimator', \\\n"
      "     'path_GM.dat' with linespoints title 'minimax estimator'\n";
}

void apply_options(ProblemConfig& pc, const CommandOptions& opts) {
  if (opts.has_seed_override) pc.mc.seed = opts.seed_override;
}

}  // namespace

int cmd_synth(const ProblemConfig& pc_in, const CommandOptions& opts) {
  ProblemConfig pc = pc_in;
  apply_options(pc, opts);
  Bundle b;
  b.metrics["version"] = kVersion;
  b.metrics["problem"] = pc.problem;
  b.metrics["config"] = pc.raw;
  SynthesisOutcome out = run_synthesis(pc, b);
  b.metrics["minimax"] = report_json(out.minimax);
  if (out.aw) {
    b.metrics["aw"] = report_json(*out.aw);
    b.metrics["aw"]["alpha"] = pc.alpha;
    emit_pair_metrics(pc, out.aw->estimator, out.minimax.estimator, b, opts);
  }
  b.flush(opts.out_dir);
  return 0;
}

int cmd_eval(const ProblemConfig& pc_in, const std::string& estimator_file,
             const std::optional<std::string>& reference_file, const CommandOptions& opts) {
  ProblemConfig pc = pc_in;
  apply_options(pc, opts);
  Bundle b;
  b.metrics["version"] = kVersion;
  b.metrics["problem"] = pc.problem;
  std::ifstream ef(estimator_file);
  if (!ef) throw std::invalid_argument("cannot open estimator file '" + estimator_file + "'");
  json ej;
  ef >> ej;
  StateSpace G = system_from_json(ej.contains("estimator") ? ej.at("estimator") : ej);
  G.require_stable("estimator");

  StateSpace G_M;
  if (reference_file) {
    std::ifstream rf(*reference_file);
    if (!rf) throw std::invalid_argument("cannot open reference file '" + *reference_file + "'");
    json rj;
    rf >> rj;
    G_M = system_from_json(rj.contains("estimator") ? rj.at("estimator") : rj);
  } else {
    SynthesisOutcome out = run_synthesis(pc, b);
    G_M = out.minimax.estimator;
    b.metrics["minimax"] = report_json(out.minimax);
  }
  emit_pair_metrics(pc, G, G_M, b, opts);
  b.flush(opts.out_dir);
  return 0;
}

int cmd_mc(const ProblemConfig& pc_in, const CommandOptions& opts) {
  ProblemConfig pc = pc_in;
  apply_options(pc, opts);
  if (pc.problem != "h2")
    throw std::invalid_argument("cmd_mc: Monte-Carlo improvement experiments apply to the h2 problem");
  if (pc.synthesis_kind != "aw")
    throw std::invalid_argument("cmd_mc: needs an a/w synthesis configuration (synthesis.kind = aw)");
  Bundle b;
  b.metrics["version"] = kVersion;
  b.metrics["problem"] = pc.problem;
  b.metrics["config"] = pc.raw;
  SynthesisOutcome out = run_synthesis(pc, b);
  b.metrics["minimax"] = report_json(out.minimax);
  b.metrics["aw"] = report_json(*out.aw);
  emit_mc(pc, out.aw->estimator, out.minimax.estimator, {pc.mc.L}, b, opts);
  b.flush(opts.out_dir);
  return 0;
}

int cmd_repro(const std::string& example, const CommandOptions& opts) {
  ProblemConfig pc = parse_config(builtin_config(example));
  apply_options(pc, opts);
  Bundle b;
  b.metrics["version"] = kVersion;
  b.metrics["example"] = example;
  b.metrics["config"] = pc.raw;
  {
    fs::create_directories(opts.out_dir);
    std::ofstream f(opts.out_dir / (example + ".json"));
    f << pc.raw.dump(2) << "\n";
  }
  SynthesisOutcome out = run_synthesis(pc, b);
  b.metrics["minimax"] = report_json(out.minimax);
  if (out.aw) {
    b.metrics["aw"] = report_json(*out.aw);
    emit_pair_metrics(pc, out.aw->estimator, out.minimax.estimator, b, opts);
    if (pc.problem == "h2") {
      std::vector<int> lengths = pc.mc.L == 6 ? std::vector<int>{6, 9, 13} : std::vector<int>{4, 8, 10};
      emit_mc(pc, out.aw->estimator, out.minimax.estimator, lengths, b, opts);
    }
  }
  b.flush(opts.out_dir);
  return 0;
}

}  // namespace relest::cli
