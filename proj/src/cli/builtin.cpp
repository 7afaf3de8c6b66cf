#include "relest/cli/builtin.hpp"

#include <Eigen/LU>
#include <nlohmann/json.hpp>

namespace relest::cli {

using lti::Mat;

namespace {

json matrix_json(const Mat& M) {
  json rows = json::array();
  for (int i = 0; i < M.rows(); ++i) {
    json row = json::array();
    for (int j = 0; j < M.cols(); ++j) row.push_back(M(i, j));
    rows.push_back(row);
  }
  return rows;
}

json mimo_phi_y() {
  json j;
  j["type"] = "ss";
  j["A"] = json::array({{0.6, 0.0}, {0.0, 0.4}});
  j["B"] = json::array({{1.0, 0.0}, {0.0, 1.0}});
  j["C"] = json::array({{1.0, 0.2}, {0.0, 1.3}});
  j["D"] = json::array({{1.0, 0.3}, {0.0, 0.8}});
  return j;
}

}  // namespace

json builtin_config(const std::string& name) {
  if (name == "siso") {
    json j;
    j["problem"] = "h2";
    j["systems"]["H0"] = {{"type", "fir"},
                          {"taps", {2.0, -2.7926, 1.9276, -1.7426, 1.1186, -0.2778}}};
    j["systems"]["HI"] = {{"type", "identity"}, {"size", 1}};
    j["systems"]["phi_y"] = {{"type", "gain"}, {"value", {{5.0}}}};
    j["systems"]["phi_v"] = {{"type", "gain"}, {"value", {{0.5}}}};
    j["radii"] = {{"gamma", 0.3}, {"mode", "relative"}, {"reference", "H0"}};
    j["synthesis"] = {{"kind", "aw"}, {"alpha", 0.15}};
    j["mc"] = {{"L", 6}, {"N", 65000}, {"epsilon", 1e-2}, {"delta", 1e-2}, {"seed", 12345}};
    return j;
  }
  if (name == "mimo1") {
    json j;
    j["problem"] = "h2";
    json taps = json::array();
    taps.push_back(json::array({{1.0, 0.8540}, {0.0, 1.0}}));
    taps.push_back(json::array({{-1.3963, 0.5593}, {-0.1770, 0.1795}}));
    taps.push_back(json::array({{0.9638, -0.1389}, {-0.5893, -0.1013}}));
    taps.push_back(json::array({{-0.8713, 0.0815}, {0.1982, 0.0543}}));
    j["systems"]["H0"] = {{"type", "fir"}, {"taps", taps}};
    j["systems"]["HI"] = {{"type", "identity"}, {"size", 2}};
    j["systems"]["phi_y"] = mimo_phi_y();
    j["systems"]["phi_v"] = {{"type", "scaled-identity-relative"}, {"factor", 0.2}};
    j["radii"] = {{"gamma", 0.2}, {"mode", "relative"}, {"reference", "H0_phi_y"}};
    j["synthesis"] = {{"kind", "aw"}, {"alpha", 0.10}};
    j["mc"] = {{"L", 4}, {"N", 65000}, {"epsilon", 1e-2}, {"delta", 1e-2}, {"seed", 12345}};
    return j;
  }
  if (name == "mimo2") {
    json j;
    j["problem"] = "h2";
    Mat V(5, 5);
    V << 1.0, 1.3, 0.7, 1.8, 0.8,  //
        0.0, 1.2, 0.4, 1.6, 0.6,   //
        0.0, 0.0, 1.4, 1.1, 1.5,   //
        0.0, 0.0, 0.0, 2.0, 1.9,   //
        0.0, 0.0, 0.0, 0.0, 1.7;
    Mat lam = Mat::Zero(5, 5);
    lam.diagonal() << 0.65, 0.43, 0.32, 0.27, 0.12;
    Mat Vinv = V.inverse();
    Mat A = V * lam * Vinv;
    Mat Ba(5, 2);
    Ba << 1.0, 0.7, 0.8, 1.5, 1.3, 1.1, 2.1, 0.7, 0.9, 1.2;
    Mat B = V * Ba;
    Mat Ca(2, 5);
    Ca << 0.9638, -0.8713, 0.5593, -0.4389, 0.4015,  //
        -0.5893, 0.1982, 0.6795, -0.4413, 0.5043;
    Mat C = 0.45 * Ca * Vinv;
    Mat D(2, 2);
    D << 1.0, 0.8540, 0.0, 0.8;
    j["systems"]["H0"] = {{"type", "ss"},
                          {"A", matrix_json(A)},
                          {"B", matrix_json(B)},
                          {"C", matrix_json(C)},
                          {"D", matrix_json(D)}};
    j["problem"] = "h2";
    j["systems"]["HI"] = {{"type", "identity"}, {"size", 2}};
    j["systems"]["phi_y"] = mimo_phi_y();
    j["systems"]["phi_v"] = {{"type", "scaled-identity-relative"}, {"factor", 0.2}};
    j["radii"] = {{"gamma", 0.3}, {"mode", "relative"}, {"reference", "H0_phi_y"}};
    j["synthesis"] = {{"kind", "aw"}, {"alpha", 0.10}};
    j["mc"] = {{"L", 4}, {"N", 65000}, {"epsilon", 1e-2}, {"delta", 1e-2}, {"seed", 12345}};
    return j;
  }
  if (name == "siso-hinf") {
    json j;
    j["problem"] = "hinf-nominal";
    j["systems"]["H0"] = {{"type", "fir"},
                          {"taps", {1.0, -1.3963, 0.9638, -0.8713, 0.5593, -0.1389}}};
    j["systems"]["HI"] = {{"type", "identity"}, {"size", 1}};
    j["radii"] = {{"gamma_y", 5.0}, {"gamma_v", 0.5}, {"mode", "absolute"}};
    j["synthesis"] = {{"kind", "aw"}, {"alpha", 0.10}};
    return j;
  }
  throw std::invalid_argument("unknown built-in config '" + name + "'");
}

std::vector<std::string> builtin_names() { return {"siso", "mimo1", "mimo2", "siso-hinf"}; }

}  // namespace relest::cli
