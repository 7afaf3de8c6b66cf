#include "relest/setup.hpp"

#include <Eigen/Eigenvalues>

#include "relest/lti/lyap.hpp"

namespace relest {

void EstimationSetup::validate() const {
  H_I.require_stable("EstimationSetup.H_I");
  H0.require_stable("EstimationSetup.H0");
  if (H_I.inputs() != m_y()) throw std::invalid_argument("EstimationSetup: H_I/H0 input mismatch");
  if (kind == ProblemKind::H2Ball) {
    // Signal spectra only need stable factors; causal invertibility is an
    // invariant of factorization outputs, not of problem data.
    if (!phi_y) throw std::invalid_argument("EstimationSetup: H2 problem needs phi_y");
    phi_y->factor.require_stable("EstimationSetup.phi_y");
    if (phi_y->dim() != m_y()) throw std::invalid_argument("EstimationSetup: phi_y dimension");
    if (phi_v) {
      phi_v->factor.require_stable("EstimationSetup.phi_v");
      if (phi_v->dim() != m_v()) throw std::invalid_argument("EstimationSetup: phi_v dimension");
    }
    if (W) {
      if (W->outputs() != m_y() || W->inputs() != m_y()) throw std::invalid_argument("EstimationSetup: W dimension");
      W->require_stable("EstimationSetup.W");
      W->inverse().require_stable("EstimationSetup.W inverse");
    }
    if (gamma < 0) throw std::invalid_argument("EstimationSetup: gamma < 0");
  } else {
    auto check_weight = [](const std::optional<lti::StateSpace>& w, int m, const char* name) {
      if (!w) return;
      if (w->outputs() != m || w->inputs() != m) throw std::invalid_argument(std::string("EstimationSetup: ") + name + " dimension");
      w->require_stable(name);
      w->inverse().require_stable(name);
    };
    check_weight(W_y, m_y(), "W_y");
    check_weight(W_v, m_v(), "W_v");
    if (gamma_y < 0 || gamma_v < 0) throw std::invalid_argument("EstimationSetup: negative signal radius");
    if (kind == ProblemKind::HinfRobust) {
      check_weight(W_H, m_y(), "W_H");
      if (gamma_H < 0) throw std::invalid_argument("EstimationSetup: gamma_H < 0");
    }
  }
}

namespace synth {

lti::StateSpace EstimatorBasis::Y_a() const {
  const int n = n_G(), m = m_v();
  lti::Mat C = lti::Mat::Zero(n + m, n);
  C.topRows(n).setIdentity();
  lti::Mat D = lti::Mat::Zero(n + m, m);
  D.bottomRows(m).setIdentity();
  return lti::StateSpace(A_G, B_G, C, D);
}

lti::StateSpace EstimatorBasis::realize(const lti::Mat& beta) const {
  const int n = n_G(), m = m_v();
  if (beta.cols() != n + m) throw std::invalid_argument("EstimatorBasis: beta width mismatch");
  return lti::StateSpace(A_G, B_G, beta.leftCols(n), beta.rightCols(m));
}

void EstimatorBasis::validate() const {
  const int n = n_G();
  if (n == 0) return;
  Eigen::EigenSolver<lti::Mat> es(A_G, false);
  if (es.eigenvalues().cwiseAbs().maxCoeff() >= 1.0 - 1e-9)
    throw std::invalid_argument("EstimatorBasis: A_G not stable");
  // Controllability via the Gramian spectrum (numerically robust for the
  // balanced realizations this is fed from).
  lti::Mat Wc = lti::dlyap(A_G, (B_G * B_G.transpose()).eval());
  Eigen::SelfAdjointEigenSolver<lti::Mat> esg(Wc, Eigen::EigenvaluesOnly);
  const double emax = esg.eigenvalues().maxCoeff();
  if (!(emax > 0) || esg.eigenvalues().minCoeff() < 1e-10 * emax)
    throw std::invalid_argument("EstimatorBasis: (A_G, B_G) not controllable");
}

}  // namespace synth
}  // namespace relest
