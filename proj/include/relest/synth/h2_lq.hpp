#pragma once

#include "relest/lmi/program.hpp"
#include "relest/lti/state_space.hpp"
#include "relest/setup.hpp"

namespace relest::synth {

// Shared data for the worst-case-MSE quadratic programs over the H2 channel
// ball: the perturbation enters through X = (H - H0) W with ||X||_2 <= gamma.
struct H2BallContext {
  lti::StateSpace Fy;      // [W^{-1} phi_y , 0]   (m_y x m_yz)
  lti::StateSpace Fv;      // [0 , phi_v]          (m_v x m_yz)
  lti::StateSpace H0WFy;   // [H0 phi_y , 0]       (m_v x m_yz)
  lti::StateSpace HIWFy;   // [H_I phi_y , 0]      (m_e x m_yz)
  int m_y = 0, m_v = 0, m_e = 0;
  int m_yz() const { return m_y + m_v; }
};

H2BallContext make_h2_context(const EstimationSetup& setup);

// Data of the LQ matrix inequality of the worst-case dual: a realization
// (A_a, [B_a b_a], C_all, [D_all d_all]) with the augmented pair
// A = [[A_a, b_a],[0,0]], B = [B_a; 0] and the constant row block R1.
struct LqRealization {
  lti::Mat A, B;        // augmented: (n+1) x (n+1), (n+1) x (m_v m_y)
  lti::Mat C_all;       // outputs x (n+1+m_v m_y), columns [C | d | D]
  int n_aug = 0;        // n + 1
  int top_rows = 0;     // rows multiplied by (beta ⊗ I) when beta-parametrized
};

// F_X^o of the beta-parametrized problem (top block (n_G+m_v)*m_yz rows) or
// F_X(G) of a fixed estimator (top_rows = 0).
LqRealization lq_data_for_basis(const EstimationSetup& setup, const EstimatorBasis& basis);
LqRealization lq_data_for_estimator(const EstimationSetup& setup, const lti::StateSpace& G);

// Adds  -Q_JX(P, lambda, beta) - margin*I >= 0  to prog. beta may be invalid
// (id < 0) when the realization is for a fixed estimator. Returns nothing;
// objective contributions are left to the caller.
void add_qjx_constraint(lmi::LMIProgram& prog, const LqRealization& lq, const H2BallContext& ctx,
                        lmi::DecisionVar P, lmi::DecisionVar lambda, lmi::DecisionVar beta, int n_basis,
                        const std::string& name);

// Index of x0^T P x0 inside the sym variable P (the last diagonal entry).
inline int x0_index(const LqRealization& lq) { return lq.n_aug - 1; }

}  // namespace relest::synth
