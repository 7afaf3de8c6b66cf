#include "relest/synth/h2_lq.hpp"

#include "relest/lti/minreal.hpp"

namespace relest::synth {

using namespace lti;

H2BallContext make_h2_context(const EstimationSetup& setup) {
  H2BallContext c;
  c.m_y = setup.m_y();
  c.m_v = setup.m_v();
  c.m_e = setup.m_e();
  StateSpace Wi = setup.W ? setup.W->inverse() : StateSpace::identity(c.m_y);
  StateSpace Wphi = minimal_realization(series(Wi, setup.phi_y->factor), 1e-10);
  c.Fy = hcat(Wphi, StateSpace::zero(c.m_y, c.m_v));
  c.Fv = hcat(StateSpace::zero(c.m_v, c.m_y), setup.phi_v_ss());
  c.H0WFy = hcat(minimal_realization(series(setup.H0, setup.phi_y->factor), 1e-10), StateSpace::zero(c.m_v, c.m_v));
  c.HIWFy = hcat(minimal_realization(series(setup.H_I, setup.phi_y->factor), 1e-10), StateSpace::zero(c.m_e, c.m_v));
  return c;
}

namespace {

LqRealization finish_realization(const StateSpace& fxo, int top_rows) {
  StateSpace mr = minimal_realization(fxo, 1e-8);
  const int n = mr.order();
  const int m_in = mr.inputs() - 1;  // last input is the constant channel
  LqRealization lq;
  lq.n_aug = n + 1;
  lq.top_rows = top_rows;
  lq.A = Mat::Zero(n + 1, n + 1);
  lq.A.topLeftCorner(n, n) = mr.A();
  lq.A.topRightCorner(n, 1) = mr.B().rightCols(1);
  lq.B = Mat::Zero(n + 1, m_in);
  lq.B.topRows(n) = mr.B().leftCols(m_in);
  lq.C_all = Mat(mr.outputs(), n + 1 + m_in);
  lq.C_all.leftCols(n) = mr.C();
  lq.C_all.middleCols(n, 1) = mr.D().rightCols(1);
  lq.C_all.rightCols(m_in) = mr.D().leftCols(m_in);
  return lq;
}

}  // namespace

LqRealization lq_data_for_basis(const EstimationSetup& setup, const EstimatorBasis& basis) {
  H2BallContext c = make_h2_context(setup);
  const int myz = c.m_yz();
  StateSpace Y = basis.Y_a();
  StateSpace YkI = kron_right_identity(Y, myz);
  // inner block [ I_{m_v} ⊗ F_y^T | rvec(H0 W F_y - F_v) ]
  StateSpace left = kron_left_identity(c.m_v, c.Fy.transpose());
  StateSpace rv = rvec_ss(minimal_realization(parallel(c.H0WFy, scale(c.Fv, -1.0)), 1e-10));
  StateSpace inner = hcat(left, minimal_realization(rv, 1e-9));
  StateSpace top = series(YkI, inner);
  StateSpace xiw = scale(rvec_ss(c.HIWFy), -1.0);
  StateSpace bottom = hcat(StateSpace::zero(c.m_e * myz, c.m_v * c.m_y), minimal_realization(xiw, 1e-9));
  const int top_rows = (basis.n_G() + c.m_v) * myz;
  return finish_realization(vcat(top, bottom), top_rows);
}

LqRealization lq_data_for_estimator(const EstimationSetup& setup, const lti::StateSpace& G) {
  H2BallContext c = make_h2_context(setup);
  StateSpace GkF = kron_ss(G, c.Fy.transpose());
  // X0(G) F_y + G F_v = H_I W F_y - G (H0 W F_y - F_v)
  StateSpace col = parallel(c.HIWFy, scale(series(G, parallel(c.H0WFy, scale(c.Fv, -1.0))), -1.0));
  StateSpace rv = scale(rvec_ss(minimal_realization(col, 1e-10)), -1.0);
  return finish_realization(hcat(minimal_realization(GkF, 1e-9), minimal_realization(rv, 1e-9)), 0);
}

void add_qjx_constraint(lmi::LMIProgram& prog, const LqRealization& lq, const H2BallContext& ctx,
                        lmi::DecisionVar P, lmi::DecisionVar lambda, lmi::DecisionVar beta, int n_basis,
                        const std::string& name) {
  const int myz = ctx.m_yz();
  const int n0 = lq.n_aug;                       // sym dimension of P
  const int n1 = n0 + ctx.m_v * ctx.m_y;         // rows of Q_J block
  const int nr2 = ctx.m_e * myz;                 // rows of R_2
  const int N = n1 + nr2;

  lmi::AffineMatrixExpr e(N);

  // -Q_J(P) = -[A B]^T P [A B] + blkdiag(P, 0)
  Mat SAB(n0, n1);
  SAB << lq.A, lq.B;
  Mat Lq = Mat::Zero(N, n0);
  Lq.topRows(n1) = -SAB.transpose();
  Mat Rq = Mat::Zero(n0, N);
  Rq.leftCols(n1) = SAB;
  e.add_term(P, Lq, Rq);
  Mat Lp = Mat::Zero(N, n0);
  Lp.topLeftCorner(n0, n0).setIdentity();
  e.add_term(P, Lp, Lp.transpose());

  // + lambda * diag over the Z-input slots (R_1^T R_1 = I there)
  Mat Lsel = Mat::Zero(N, ctx.m_v * ctx.m_y);
  Lsel.block(n0, 0, ctx.m_v * ctx.m_y, ctx.m_v * ctx.m_y).setIdentity();
  e.add_term(lambda, Lsel, Lsel.transpose());

  // -R_2(beta) bottom-left block and its transpose
  Mat bot_embed = Mat::Zero(N, nr2);
  bot_embed.bottomRows(nr2).setIdentity();
  if (lq.top_rows > 0) {
    Mat Ctop = lq.C_all.topRows(lq.top_rows);
    Mat Cbot = lq.C_all.bottomRows(nr2);
    Mat R = Mat::Zero(lq.top_rows, N);
    R.leftCols(n1) = Ctop;
    if ((n_basis + ctx.m_v) * myz != lq.top_rows)
      throw std::logic_error("add_qjx_constraint: basis width mismatch");
    e.add_sym_pair(beta, -bot_embed, R, /*kron_q=*/myz);
    e.constant.block(n1, 0, nr2, n1) -= Cbot;
    e.constant.block(0, n1, n1, nr2) -= Cbot.transpose();
  } else {
    const Mat& Cbot = lq.C_all;
    e.constant.block(n1, 0, nr2, n1) -= Cbot;
    e.constant.block(0, n1, n1, nr2) -= Cbot.transpose();
  }
  e.constant.bottomRightCorner(nr2, nr2) += Mat::Identity(nr2, nr2);

  prog.add_strict(std::move(e), name);
}

}  // namespace relest::synth
