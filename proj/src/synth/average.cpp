#include "relest/synth/average.hpp"

#include "relest/evaluate/evaluate.hpp"
#include "relest/lti/lyap.hpp"
#include "relest/lti/minreal.hpp"

namespace relest::synth {

using namespace lti;

namespace {

StateSpace phi_y1_of(const EstimationSetup& setup) {
  StateSpace Wi = setup.W ? setup.W->inverse() : StateSpace::identity(setup.m_y());
  return minimal_realization(series(Wi, setup.phi_y->factor), 1e-10);
}

StateSpace err_sys(const StateSpace& G, const EstimationSetup& setup) {
  return parallel(setup.H_I, scale(series(G, setup.H0), -1.0));
}

}  // namespace

AverageCriterion eta_av(const StateSpace& G, const EstimationSetup& setup) {
  AverageCriterion c{AverageKind::EtaAv};
  c.nominal = eval::mse(G, setup.H0, setup);
  StateSpace K = kron_ss(G, phi_y1_of(setup).transpose());
  const double w = setup.gamma * setup.gamma / (setup.m_v() * setup.m_y());
  c.uncertainty = w * h2_inner(K, K);
  c.value = c.nominal + c.uncertainty;
  return c;
}

AverageCriterion eta_a(const StateSpace& G, const EstimationSetup& setup) {
  AverageCriterion c{AverageKind::EtaA};
  StateSpace Wyi = setup.W_y ? setup.W_y->inverse() : StateSpace::identity(setup.m_y());
  StateSpace Wvi = setup.W_v ? setup.W_v->inverse() : StateSpace::identity(setup.m_v());
  StateSpace Ay = minimal_realization(series(err_sys(G, setup), Wyi), 1e-10);
  StateSpace Av = series(G, Wvi);
  const double ty = setup.gamma_y * setup.gamma_y / setup.m_y() * h2_inner(Ay, Ay);
  const double tv = setup.gamma_v * setup.gamma_v / setup.m_v() * h2_inner(Av, Av);
  c.nominal = ty + tv;
  c.uncertainty = 0;
  c.value = c.nominal;
  return c;
}

SpectralFactorForm phi_yW_factor(const EstimationSetup& setup) {
  StateSpace Wyi = setup.W_y ? setup.W_y->inverse() : StateSpace::identity(setup.m_y());
  StateSpace WHi = setup.W_H ? setup.W_H->inverse() : StateSpace::identity(setup.m_y());
  StateSpace phi_ya = scale(Wyi, setup.gamma_y / std::sqrt(double(setup.m_y())));
  StateSpace T = minimal_realization(series(WHi, phi_ya), 1e-10);
  // scalar spectrum sum_ij |T_ij|^2: stack every entry as a 1 x (m^2) row
  StateSpace row = StateSpace::zero(1, 0);
  bool first = true;
  for (int i = 0; i < T.outputs(); ++i)
    for (int j = 0; j < T.inputs(); ++j) {
      StateSpace e = T.row(i).col(j);
      row = first ? e : hcat(row, e);
      first = false;
    }
  return spectral_factor_of_outer(minimal_realization(row, 1e-10), Mat::Zero(1, 1));
}

AverageCriterion eta_b(const StateSpace& G, const EstimationSetup& setup) {
  AverageCriterion c{AverageKind::EtaB};
  c.nominal = eta_a(G, setup).value;
  if (setup.gamma_H > 0) {
    SpectralFactorForm pyw = phi_yW_factor(setup);
    StateSpace Gw = series(G, kron_left_identity(setup.m_v(), pyw.factor));
    c.uncertainty = setup.gamma_H * setup.gamma_H / setup.m_v() * h2_inner(Gw, Gw);
  }
  c.value = c.nominal + c.uncertainty;
  return c;
}

double eta_finite_N(const StateSpace& G, const EstimationSetup& setup, int N) {
  eval::QuadraticMseForm q = eval::quad_mse_form(G, setup, N);
  const int n = q.dim();
  return q.c0 + setup.gamma * setup.gamma / (n + 2) * q.PJ.trace();
}

Mat build_Qc(const StateSpace& H_I, const StateSpace& H0, const StateSpace& Y_a,
             const StateSpace& phi_y_stack, const StateSpace& phi_v_stack) {
  StateSpace top = vcat(H_I, scale(series(Y_a, H0), -1.0));
  StateSpace left = series(top, phi_y_stack);
  StateSpace right = series(vcat(StateSpace::zero(H_I.outputs(), Y_a.inputs()), Y_a), phi_v_stack);
  StateSpace V = minimal_realization(hcat(left, right), 1e-9);
  return outer_gramian(V);
}

Mat build_QGc(const StateSpace& Y_a, const StateSpace& phi) {
  StateSpace K = minimal_realization(kron_ss(Y_a, phi.transpose()), 1e-9);
  return outer_gramian(K);
}

namespace {

// [[P, M(beta) Qh],[Qh M(beta)^T, I]] >= 0 with M = [I | beta] (kron_q = 1)
// or M = beta ⊗ I_q (kron_q = q, with_identity = false).
void add_qjq_constraint(lmi::LMIProgram& prog, lmi::DecisionVar Pvar, int p_rows, lmi::DecisionVar beta,
                        bool with_identity, int kron_q, const Mat& Q, const std::string& name) {
  Mat Qh = sqrtm_psd(Q);
  const int qn = static_cast<int>(Q.rows());
  const int N = p_rows + qn;
  lmi::AffineMatrixExpr e(N);
  Mat Lp = Mat::Zero(N, p_rows);
  Lp.topRows(p_rows).setIdentity();
  e.add_term(Pvar, Lp, Lp.transpose());
  e.constant.bottomRightCorner(qn, qn).setIdentity();
  if (with_identity) {
    // M = [I_p | beta]: constant part I_p picks the first p rows of Qh
    e.constant.block(0, p_rows, p_rows, qn) += Qh.topRows(p_rows);
    e.constant.block(p_rows, 0, qn, p_rows) += Qh.topRows(p_rows).transpose();
    Mat Lb = Mat::Zero(N, p_rows);
    Lb.topRows(p_rows).setIdentity();
    Mat Rb = Mat::Zero(qn - p_rows, N);
    Rb.rightCols(qn) = Qh.bottomRows(qn - p_rows);
    e.add_sym_pair(beta, Lb, Rb);
  } else {
    Mat Lb = Mat::Zero(N, p_rows);
    Lb.topRows(p_rows).setIdentity();
    Mat Rb = Mat::Zero(qn, N);
    Rb.rightCols(qn) = Qh;
    e.add_sym_pair(beta, Lb, Rb, kron_q);
  }
  prog.add_constraint(std::move(e), 0.0, name);
}

}  // namespace

Prob4Program build_prob4(const EstimationSetup& setup, const EstimatorBasis& basis, double alpha,
                         double J_o1) {
  if (alpha <= 1e-6) throw std::invalid_argument("build_prob4: alpha must exceed the solver tolerance");
  Prob4Program p;
  p.ctx = make_h2_context(setup);
  p.lq = lq_data_for_basis(setup, basis);
  const int me = p.ctx.m_e;
  p.beta = p.prog.add_rect("beta", me, basis.n_G() + p.ctx.m_v);
  p.P = p.prog.add_sym("P", p.lq.n_aug);
  p.lambda = p.prog.add_scalar("lambda", 1e-12);
  p.P_J = p.prog.add_sym("P_J", me);
  p.P_eta = p.prog.add_sym("P_eta", me * p.ctx.m_y);

  add_qjx_constraint(p.prog, p.lq, p.ctx, p.P, p.lambda, p.beta, basis.n_G(), "QJX");

  StateSpace Y = basis.Y_a();
  Mat QoG = build_Qc(setup.H_I, setup.H0, Y, setup.phi_y->factor, setup.phi_v_ss());
  add_qjq_constraint(p.prog, p.P_J, me, p.beta, true, 1, QoG, "QJq_nominal");
  StateSpace phi_y1 = phi_y1_of(setup);
  const double w = setup.gamma * setup.gamma / (setup.m_v() * setup.m_y());
  Mat QGy = w * build_QGc(Y, phi_y1);
  add_qjq_constraint(p.prog, p.P_eta, me * p.ctx.m_y, p.beta, false, p.ctx.m_y, QGy, "QJq_kron");

  // budget (1+alpha) J_o1 - lambda gamma^2 - x0' P x0 >= 0
  lmi::AffineMatrixExpr budget(1);
  budget.constant(0, 0) = (1.0 + alpha) * J_o1;
  budget.add_scalar_term(p.lambda, Mat::Identity(1, 1), -(setup.gamma * setup.gamma));
  Mat sel = Mat::Zero(1, p.lq.n_aug);
  sel(0, x0_index(p.lq)) = 1.0;
  budget.add_term(p.P, sel, sel.transpose(), false, 1, -1.0);
  p.prog.add_constraint(std::move(budget), 0.0, "budget");

  p.prog.obj_trace(p.P_J);
  p.prog.obj_trace(p.P_eta);
  return p;
}

SynthesisReport solve_prob4(const EstimationSetup& setup, const EstimatorBasis& basis, double alpha,
                            const SynthesisReport& minimax_report) {
  Prob4Program p = build_prob4(setup, basis, alpha, minimax_report.optimal_value);
  lmi::SDPSolution sol = lmi::minimize(p.prog);
  if (!sol.usable()) throw std::runtime_error("solve_prob4: SDP failed: " + sol.message);
  SynthesisReport rep;
  rep.estimator = basis.realize(p.prog.value(p.beta, sol.x));
  rep.optimal_value = sol.objective;
  rep.multipliers["lambda"] = p.prog.scalar_value(p.lambda, sol.x);
  rep.certificates["P"] = p.prog.value(p.P, sol.x);
  rep.diagnostics = sol;

  const double budget = (1.0 + alpha) * minimax_report.optimal_value;
  const double wc = eval::worst_case_mse(rep.estimator, setup);
  if (wc > budget * (1.0 + 1e-4) + 1e-9)
    throw std::runtime_error("solve_prob4: budget constraint violated at re-evaluation");
  return rep;
}

SynthesisReport solve_prob5(const EstimationSetup& setup, double alpha, const SynthesisReport& prob2_report) {
  if (alpha <= 1e-6) throw std::invalid_argument("solve_prob5: alpha must exceed the solver tolerance");
  HinfNominalData d = make_hinf_nominal_data(setup);
  StateSpace GM = minimal_realization(prob2_report.estimator, 1e-9);
  EstimatorBasis basis{GM.A(), GM.B()};
  basis.validate();
  StateSpace Y = basis.Y_a();

  StateSpace K = minimal_realization(vcat(d.H_Iy, scale(series(Y, d.H_oz), -1.0)), 1e-8);
  const int nK = K.order(), mz = d.m_z(), me = d.m_e;
  const int brows = K.outputs() - me;  // (n_G + m_v) rows scaled by beta

  lmi::LMIProgram prog;
  auto beta = prog.add_rect("beta", me, basis.n_G() + d.m_v);
  auto P = prog.add_sym("P", nK);
  auto sy = prog.add_scalar("sigma_y", 1e-10);
  auto sv = prog.add_scalar("sigma_v", 1e-10);
  auto R_a = prog.add_sym("R_a", me);

  // Qcheck_a(P, sigma, beta) > 0
  {
    const int N = nK + mz + me;
    lmi::AffineMatrixExpr e(N);
    Mat Lp = Mat::Zero(N, nK);
    Lp.topRows(nK).setIdentity();
    e.add_term(P, Lp, Lp.transpose());
    Mat AB(nK, nK + mz);
    AB << K.A(), K.B();
    Mat Lq = Mat::Zero(N, nK);
    Lq.topRows(nK + mz) = AB.transpose();
    e.add_term(P, -Lq, Lq.transpose());
    Mat Sy = Mat::Zero(N, d.m_y);
    Sy.block(nK, 0, d.m_y, d.m_y).setIdentity();
    e.add_term(sy, Sy, Sy.transpose());
    Mat Sv = Mat::Zero(N, d.m_v);
    Sv.block(nK + d.m_y, 0, d.m_v, d.m_v).setIdentity();
    e.add_term(sv, Sv, Sv.transpose());
    Mat CDhat(K.outputs(), nK + mz);
    CDhat << K.C(), K.D();
    e.constant.block(nK + mz, 0, me, nK + mz) += CDhat.topRows(me);
    e.constant.block(0, nK + mz, nK + mz, me) += CDhat.topRows(me).transpose();
    Mat Lb = Mat::Zero(N, me);
    Lb.bottomRows(me).setIdentity();
    Mat Rb = Mat::Zero(brows, N);
    Rb.leftCols(nK + mz) = CDhat.bottomRows(brows);
    e.add_sym_pair(beta, Lb, Rb);
    e.constant.bottomRightCorner(me, me).setIdentity();
    prog.add_strict(std::move(e), "Qcheck_a");
  }

  // Gamma_eta and its Q_Jq block
  StateSpace Wyi = setup.W_y ? setup.W_y->inverse() : StateSpace::identity(d.m_y);
  StateSpace Wvi = setup.W_v ? setup.W_v->inverse() : StateSpace::identity(d.m_v);
  StateSpace phi_ya = scale(Wyi, setup.gamma_y / std::sqrt(double(d.m_y)));
  StateSpace phi_va = scale(Wvi, setup.gamma_v / std::sqrt(double(d.m_v)));
  Mat Geta = build_Qc(setup.H_I, setup.H0, Y, phi_ya, phi_va);
  add_qjq_constraint(prog, R_a, me, beta, true, 1, Geta, "QJq_eta");

  // budget
  lmi::AffineMatrixExpr budget(1);
  budget.constant(0, 0) = (1.0 + alpha) * prob2_report.optimal_value;
  budget.add_scalar_term(sy, Mat::Identity(1, 1), -(setup.gamma_y * setup.gamma_y));
  budget.add_scalar_term(sv, Mat::Identity(1, 1), -(setup.gamma_v * setup.gamma_v));
  prog.add_constraint(std::move(budget), 0.0, "budget");

  prog.obj_trace(R_a);
  lmi::SDPSolution sol = lmi::minimize(prog);
  if (!sol.usable()) throw std::runtime_error("solve_prob5: SDP failed: " + sol.message);

  SynthesisReport rep;
  rep.estimator = basis.realize(prog.value(beta, sol.x));
  rep.optimal_value = sol.objective;
  rep.multipliers["sigma_y"] = prog.scalar_value(sy, sol.x);
  rep.multipliers["sigma_v"] = prog.scalar_value(sv, sol.x);
  rep.certificates["P"] = prog.value(P, sol.x);
  rep.diagnostics = sol;

  const double achieved = eval::nominal_hinf(rep.estimator, setup);
  if (achieved > (1.0 + alpha) * prob2_report.optimal_value * (1.0 + 1e-3) + 1e-9)
    throw std::runtime_error("solve_prob5: budget constraint violated at re-evaluation");
  return rep;
}

SynthesisReport solve_prob6(const EstimationSetup& setup, double alpha, const SynthesisReport& prob3_report) {
  if (alpha <= 1e-6) throw std::invalid_argument("solve_prob6: alpha must exceed the solver tolerance");
  if (setup.gamma_H == 0.0) {
    EstimationSetup reduced = setup;
    reduced.kind = ProblemKind::HinfNominal;
    return solve_prob5(reduced, alpha, prob3_report);
  }
  HinfRobustData d = make_hinf_robust_data(setup);
  StateSpace GM = minimal_realization(prob3_report.estimator, 1e-9);
  EstimatorBasis basis{GM.A(), GM.B()};
  basis.validate();
  StateSpace Y = basis.Y_a();
  const int my = d.nom.m_y, mv = d.nom.m_v, me = d.nom.m_e;
  const int ma = my + 2 * mv;

  StateSpace WHa = hcat(d.W_Hy, StateSpace::zero(my, 2 * mv));
  StateSpace Kb =
      minimal_realization(vcat(vcat(WHa, d.H_Ia), scale(series(Y, d.H_oa), -1.0)), 1e-8);
  const int nK = Kb.order();
  const int brows = Kb.outputs() - my - me;

  lmi::LMIProgram prog;
  auto beta = prog.add_rect("beta", me, basis.n_G() + mv);
  auto P = prog.add_sym("P", nK);
  auto sy = prog.add_scalar("sigma_y", 1e-10);
  auto sv = prog.add_scalar("sigma_v", 1e-10);
  auto sw = prog.add_scalar("sigma_w", 1e-10);
  auto R = prog.add_sym("R", me);

  {
    const int N = nK + ma + me;
    lmi::AffineMatrixExpr e(N);
    Mat Lp = Mat::Zero(N, nK);
    Lp.topRows(nK).setIdentity();
    e.add_term(P, Lp, Lp.transpose());
    Mat AB(nK, nK + ma);
    AB << Kb.A(), Kb.B();
    Mat Lq = Mat::Zero(N, nK);
    Lq.topRows(nK + ma) = AB.transpose();
    e.add_term(P, -Lq, Lq.transpose());
    Mat Sy = Mat::Zero(N, my);
    Sy.block(nK, 0, my, my).setIdentity();
    e.add_term(sy, Sy, Sy.transpose());
    Mat Sv = Mat::Zero(N, mv);
    Sv.block(nK + my, 0, mv, mv).setIdentity();
    e.add_term(sv, Sv, Sv.transpose());
    Mat Sw = Mat::Zero(N, mv);
    Sw.block(nK + my + mv, 0, mv, mv).setIdentity();
    e.add_term(sw, Sw, Sw.transpose());
    Mat CDall(Kb.outputs(), nK + ma);
    CDall << Kb.C(), Kb.D();
    Mat Ty = CDall.topRows(my);
    // - sigma_w gamma_H^2 Ty' Ty
    Mat TyN = Mat::Zero(my, N);
    TyN.leftCols(nK + ma) = setup.gamma_H * Ty;
    e.add_term(sw, -TyN.transpose(), TyN);
    Mat Te0 = CDall.middleRows(my, me);
    e.constant.block(nK + ma, 0, me, nK + ma) += Te0;
    e.constant.block(0, nK + ma, nK + ma, me) += Te0.transpose();
    Mat Lb = Mat::Zero(N, me);
    Lb.bottomRows(me).setIdentity();
    Mat Rb = Mat::Zero(brows, N);
    Rb.leftCols(nK + ma) = CDall.bottomRows(brows);
    e.add_sym_pair(beta, Lb, Rb);
    e.constant.bottomRightCorner(me, me).setIdentity();
    prog.add_strict(std::move(e), "Qcheck_b");
  }

  StateSpace Wyi = setup.W_y ? setup.W_y->inverse() : StateSpace::identity(my);
  StateSpace Wvi = setup.W_v ? setup.W_v->inverse() : StateSpace::identity(mv);
  StateSpace phi_ya = scale(Wyi, setup.gamma_y / std::sqrt(double(my)));
  StateSpace phi_va = scale(Wvi, setup.gamma_v / std::sqrt(double(mv)));
  SpectralFactorForm pyw = phi_yW_factor(setup);
  StateSpace pywI = scale(kron_left_identity(mv, pyw.factor), setup.gamma_H / std::sqrt(double(mv)));
  StateSpace phi_vb = hcat(phi_va, pywI);
  Mat Getab = build_Qc(setup.H_I, setup.H0, Y, phi_ya, phi_vb);
  add_qjq_constraint(prog, R, me, beta, true, 1, Getab, "QJq_eta_b");

  lmi::AffineMatrixExpr budget(1);
  budget.constant(0, 0) = (1.0 + alpha) * prob3_report.optimal_value;
  budget.add_scalar_term(sy, Mat::Identity(1, 1), -(setup.gamma_y * setup.gamma_y));
  budget.add_scalar_term(sv, Mat::Identity(1, 1), -(setup.gamma_v * setup.gamma_v));
  prog.add_constraint(std::move(budget), 0.0, "budget");

  prog.obj_trace(R);
  lmi::SDPSolution sol = lmi::minimize(prog);
  if (!sol.usable()) throw std::runtime_error("solve_prob6: SDP failed: " + sol.message);

  SynthesisReport rep;
  rep.estimator = basis.realize(prog.value(beta, sol.x));
  rep.optimal_value = sol.objective;
  rep.multipliers["sigma_y"] = prog.scalar_value(sy, sol.x);
  rep.multipliers["sigma_v"] = prog.scalar_value(sv, sol.x);
  rep.multipliers["sigma_w"] = prog.scalar_value(sw, sol.x);
  rep.diagnostics = sol;

  const double achieved = eval::robust_hinf(rep.estimator, setup);
  if (achieved > (1.0 + alpha) * prob3_report.optimal_value * (1.0 + 1e-3) + 1e-9)
    throw std::runtime_error("solve_prob6: budget constraint violated at re-evaluation");
  return rep;
}

}  // namespace relest::synth
