#pragma once

#include <map>

#include "relest/lmi/solver.hpp"
#include "relest/synth/h2_lq.hpp"

namespace relest::synth {

struct SynthesisReport {
  lti::StateSpace estimator;
  double optimal_value = 0;
  std::map<std::string, double> multipliers;
  std::map<std::string, lti::Mat> certificates;
  lmi::SDPSolution diagnostics;
};

// Estimator class built on the nominal Wiener solution (A_G, B_G) = (A_o, B_o).
EstimatorBasis make_nominal_basis(const EstimationSetup& setup);

// ---- Prob. 1: minimax H2 MSE over the H2 channel ball ----

struct Prob1Program {
  lmi::LMIProgram prog;
  lmi::DecisionVar beta, P, lambda;
  LqRealization lq;
  H2BallContext ctx;
};

Prob1Program build_prob1(const EstimationSetup& setup, const EstimatorBasis& basis);
SynthesisReport solve_prob1(const EstimationSetup& setup, const EstimatorBasis& basis);

// ---- Prob. 2: nominal H-infinity with independent signal balls ----

// Realization data shared by the nominal H-infinity programs.
struct HinfNominalData {
  lti::StateSpace H_Iy, H_oz;  // minimal realizations
  lti::Mat A_az, B_az, C_az, Chat_o, D_Iy, D_oz;
  int n_az = 0, m_y = 0, m_v = 0, m_e = 0;
  int m_z() const { return m_y + m_v; }
};
HinfNominalData make_hinf_nominal_data(const EstimationSetup& setup);

struct Prob2Program {
  lmi::LMIProgram prog;
  lmi::DecisionVar sy, sv, S, R;
  HinfNominalData data;
};

Prob2Program build_prob2d(const EstimationSetup& setup);

// P° = [[S_o, Q_SR V X^{1/2}],[.., X]] with X = I, V = I.
lti::Mat reconstruct_P(const lti::Mat& S_o, const lti::Mat& R_o);

// Solves the theta-recovery LMI of the elimination step; returns the
// estimator realization and re-certifies the bounded-real LMI at (P°, σ°).
lti::StateSpace recover_theta_nominal(const lti::Mat& P0, double sy, double sv,
                                      const HinfNominalData& data);

SynthesisReport solve_prob2(const EstimationSetup& setup);

// ---- Prob. 3: robust H-infinity over the H-infinity channel ball ----

struct HinfRobustData {
  HinfNominalData nom;
  lti::StateSpace W_Hy, H_Ia, H_oa;  // minimal
  lti::Mat A_a1, B_a1, B_a1z;
  lti::Mat C_a1W, D_azW;   // gamma_H-weighted W_Hy rows
  lti::Mat C_a1I, D_a1I;   // H_Ia rows restricted to z-inputs
  lti::Mat Chat_oa, D_oaz, D_oa;
  int n_W = 0, n_I = 0, n_o = 0;
  int n_a1() const { return n_W + n_I + n_o; }
};
HinfRobustData make_hinf_robust_data(const EstimationSetup& setup);

struct Prob3Program {
  lmi::LMIProgram prog;
  lmi::DecisionVar sy, sv, S, R;
  double sigma_w = 1.0;
};
Prob3Program build_prob3a(const EstimationSetup& setup, const HinfRobustData& data, double sigma_w);

lti::StateSpace recover_theta_robust(const lti::Mat& P0, double sy, double sv, double sw,
                                     const HinfRobustData& data);

SynthesisReport solve_prob3(const EstimationSetup& setup);

// Composed error realization F_G = H_Iy - G H_oz over states [x_az; x_G].
lti::StateSpace compose_error_nominal(const HinfNominalData& d, const lti::StateSpace& G);
// Composed [sqrt(sw) gamma_H W_Hy^a ; H_Ia - G H_oa] over states [x_a1; x_G].
lti::StateSpace compose_error_robust(const HinfRobustData& d, const lti::StateSpace& G, double sw);

// Eigenvalue check of the bounded-real LMI Q_BR(P; Sigma, M_sigma) < 0.
bool brl_check(const lti::StateSpace& F, const lti::Mat& P, const lti::Mat& M_sigma, double tol = 1e-9);

}  // namespace relest::synth
