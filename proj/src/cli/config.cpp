#include "relest/cli/config.hpp"

#include <fstream>
#include <nlohmann/json.hpp>

#include "relest/lti/lyap.hpp"
#include "relest/lti/minreal.hpp"

namespace relest::cli {

using lti::Mat;
using lti::StateSpace;

namespace {

Mat parse_matrix(const json& j, const std::string& name) {
  if (!j.is_array() || j.empty() || !j[0].is_array())
    throw std::invalid_argument("config: " + name + " must be a 2-D array");
  const int r = static_cast<int>(j.size());
  const int c = static_cast<int>(j[0].size());
  Mat M(r, c);
  for (int i = 0; i < r; ++i) {
    if (static_cast<int>(j[i].size()) != c) throw std::invalid_argument("config: ragged matrix in " + name);
    for (int k = 0; k < c; ++k) M(i, k) = j[i][k].get<double>();
  }
  return M;
}

json matrix_to_json(const Mat& M) {
  json rows = json::array();
  for (int i = 0; i < M.rows(); ++i) {
    json row = json::array();
    for (int j = 0; j < M.cols(); ++j) row.push_back(M(i, j));
    rows.push_back(row);
  }
  return rows;
}

}  // namespace

StateSpace parse_system(const json& j, const std::string& name) {
  if (!j.is_object() || !j.contains("type"))
    throw std::invalid_argument("config: system '" + name + "' needs a type");
  const std::string type = j.at("type").get<std::string>();
  if (type == "identity") return StateSpace::identity(j.at("size").get<int>());
  if (type == "gain") return StateSpace::gain(parse_matrix(j.at("value"), name));
  if (type == "fir") {
    const json& taps = j.at("taps");
    if (!taps.is_array() || taps.empty()) throw std::invalid_argument("config: " + name + ": empty taps");
    lti::FIR f;
    if (taps[0].is_number()) {
      for (const auto& t : taps) f.taps.push_back(Mat::Constant(1, 1, t.get<double>()));
    } else {
      for (const auto& t : taps) f.taps.push_back(parse_matrix(t, name));
    }
    return f.to_ss();
  }
  if (type == "ss") {
    Mat A = parse_matrix(j.at("A"), name + ".A");
    Mat B = parse_matrix(j.at("B"), name + ".B");
    Mat C = parse_matrix(j.at("C"), name + ".C");
    Mat D = parse_matrix(j.at("D"), name + ".D");
    return StateSpace(A, B, C, D);
  }
  throw std::invalid_argument("config: system '" + name + "': unknown type '" + type + "'");
}

json system_to_json(const StateSpace& sys) {
  json j;
  j["type"] = "ss";
  j["A"] = matrix_to_json(sys.A());
  j["B"] = matrix_to_json(sys.B());
  j["C"] = matrix_to_json(sys.C());
  j["D"] = matrix_to_json(sys.D());
  return j;
}

StateSpace system_from_json(const json& j) { return parse_system(j, "estimator"); }

ProblemConfig parse_config(const json& doc) {
  ProblemConfig pc;
  pc.raw = doc;
  if (!doc.is_object()) throw std::invalid_argument("config: top level must be an object");
  pc.problem = doc.at("problem").get<std::string>();
  const json& sys = doc.at("systems");
  EstimationSetup& s = pc.setup;
  s.H0 = parse_system(sys.at("H0"), "H0");
  s.H_I = parse_system(sys.at("HI"), "HI");

  if (pc.problem == "h2") {
    s.kind = ProblemKind::H2Ball;
    StateSpace phi_y = parse_system(sys.at("phi_y"), "phi_y");
    s.phi_y = lti::SpectralFactorForm{phi_y};
    if (sys.contains("W")) s.W = parse_system(sys.at("W"), "W");
  } else if (pc.problem == "hinf-nominal" || pc.problem == "hinf-robust") {
    s.kind = pc.problem == "hinf-robust" ? ProblemKind::HinfRobust : ProblemKind::HinfNominal;
    if (sys.contains("W_y")) s.W_y = parse_system(sys.at("W_y"), "W_y");
    if (sys.contains("W_v")) s.W_v = parse_system(sys.at("W_v"), "W_v");
    if (sys.contains("W_H")) s.W_H = parse_system(sys.at("W_H"), "W_H");
  } else {
    throw std::invalid_argument("config: unknown problem '" + pc.problem + "'");
  }

  // radius reference scales
  const json& radii = doc.at("radii");
  const std::string mode = radii.value("mode", "absolute");
  double ref = 1.0;
  if (mode == "relative") {
    const std::string reference = radii.value("reference", "H0_phi_y");
    if (reference == "H0") {
      ref = lti::h2_norm(s.H0);
    } else if (reference == "H0_phi_y") {
      if (!s.phi_y) throw std::invalid_argument("config: relative radius needs phi_y");
      ref = lti::h2_norm(lti::series(s.H0, s.phi_y->factor));
    } else {
      throw std::invalid_argument("config: unknown radius reference '" + reference + "'");
    }
  } else if (mode != "absolute") {
    throw std::invalid_argument("config: radii.mode must be absolute or relative");
  }

  if (pc.problem == "h2") {
    s.gamma = radii.at("gamma").get<double>() * ref;
    // noise spectrum may be tied to the same reference
    if (sys.contains("phi_v")) {
      const json& pv = sys.at("phi_v");
      if (pv.is_object() && pv.value("type", "") == "scaled-identity-relative") {
        const double f = pv.at("factor").get<double>();
        double r2 = lti::h2_norm(lti::series(s.H0, s.phi_y->factor));
        s.phi_v = lti::SpectralFactorForm::constant(f * r2 * Mat::Identity(s.m_v(), s.m_v()));
      } else {
        s.phi_v = lti::SpectralFactorForm{parse_system(pv, "phi_v")};
      }
    }
  } else {
    s.gamma_y = radii.at("gamma_y").get<double>() * ref;
    s.gamma_v = radii.at("gamma_v").get<double>() * ref;
    if (pc.problem == "hinf-robust") s.gamma_H = radii.at("gamma_H").get<double>() * ref;
  }
  s.validate();

  if (doc.contains("synthesis")) {
    pc.synthesis_kind = doc.at("synthesis").value("kind", "minimax");
    pc.alpha = doc.at("synthesis").value("alpha", 0.0);
    if (pc.synthesis_kind != "minimax" && pc.synthesis_kind != "aw")
      throw std::invalid_argument("config: synthesis.kind must be minimax or aw");
    if (pc.synthesis_kind == "aw" && pc.alpha <= 0)
      throw std::invalid_argument("config: a/w synthesis needs alpha > 0");
  }
  if (doc.contains("mc")) {
    const json& mc = doc.at("mc");
    pc.mc.L = mc.value("L", pc.mc.L);
    pc.mc.N = mc.value("N", pc.mc.N);
    pc.mc.epsilon = mc.value("epsilon", pc.mc.epsilon);
    pc.mc.delta = mc.value("delta", pc.mc.delta);
    pc.mc.seed = mc.value("seed", pc.mc.seed);
  }
  if (doc.contains("solver")) {
    pc.solver.tol = doc.at("solver").value("tol", pc.solver.tol);
    pc.solver.max_iter = doc.at("solver").value("max_iter", pc.solver.max_iter);
  }
  return pc;
}

ProblemConfig load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("config: cannot open '" + path + "'");
  json doc;
  try {
    in >> doc;
  } catch (const std::exception& e) {
    throw std::invalid_argument(std::string("config: JSON parse error: ") + e.what());
  }
  return parse_config(doc);
}

}  // namespace relest::cli
