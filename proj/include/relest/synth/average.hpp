#pragma once

#include "relest/synth/minimax.hpp"

namespace relest::synth {

enum class AverageKind { EtaAv, EtaA, EtaB };

struct AverageCriterion {
  AverageKind kind;
  double value = 0;
  double nominal = 0;      // nominal-cost part
  double uncertainty = 0;  // nonnegative uncertainty part (EtaAv, EtaB)
};

// Average MSE over the H2 channel ball (limit of FIR-ball averages).
AverageCriterion eta_av(const lti::StateSpace& G, const EstimationSetup& setup);
// Average squared error over the H2 signal balls, at the nominal channel.
AverageCriterion eta_a(const lti::StateSpace& G, const EstimationSetup& setup);
// Signal-ball average plus the H-infinity-ball channel term.
AverageCriterion eta_b(const lti::StateSpace& G, const EstimationSetup& setup);

// Finite-length FIR-ball average (exact formula; oracle for the limit).
double eta_finite_N(const lti::StateSpace& G, const EstimationSetup& setup, int N);

// Gramian matrices of the linearized average costs:
// Qc   = (1/2pi) \int [H_I; -Y H0] Gy [..]^* + [0; Y] Gv [0; Y]^*,
// QGc  = (1/2pi) \int (Y ⊗ phi^T)(Y ⊗ phi^T)^*.
lti::Mat build_Qc(const lti::StateSpace& H_I, const lti::StateSpace& H0, const lti::StateSpace& Y_a,
                  const lti::StateSpace& phi_y_stack, const lti::StateSpace& phi_v_stack);
lti::Mat build_QGc(const lti::StateSpace& Y_a, const lti::StateSpace& phi);

// Scalar spectral factor phi_yW of tr{ [W_H^{-1} phi_y^a]^* [W_H^{-1} phi_y^a] }.
lti::SpectralFactorForm phi_yW_factor(const EstimationSetup& setup);

// ---- Prob. 4: average MSE under the worst-case budget (1+alpha) J_o1 ----

struct Prob4Program {
  lmi::LMIProgram prog;
  lmi::DecisionVar beta, P, lambda, P_J, P_eta;
  LqRealization lq;
  H2BallContext ctx;
};
Prob4Program build_prob4(const EstimationSetup& setup, const EstimatorBasis& basis, double alpha,
                         double J_o1);
SynthesisReport solve_prob4(const EstimationSetup& setup, const EstimatorBasis& basis, double alpha,
                            const SynthesisReport& minimax_report);

// ---- Prob. 5: average signal-ball cost under the nominal Hinf budget ----

SynthesisReport solve_prob5(const EstimationSetup& setup, double alpha, const SynthesisReport& prob2_report);

// ---- Prob. 6: eta_b under the robust Hinf budget ----

SynthesisReport solve_prob6(const EstimationSetup& setup, double alpha, const SynthesisReport& prob3_report);

}  // namespace relest::synth
