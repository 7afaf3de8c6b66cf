#include "relest/lti/spectral.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include "relest/lti/lyap.hpp"
#include "relest/lti/minreal.hpp"

namespace relest::lti {

namespace {

double dare_residual(const Mat& A, const Mat& B, const Mat& Q, const Mat& R, const Mat& S, const Mat& X) {
  Mat U = A.transpose() * X * B + S;
  Mat V = R + B.transpose() * X * B;
  Mat F = A.transpose() * X * A - U * V.ldlt().solve(U.transpose()) + Q - X;
  return F.norm();
}

Mat dare_step(const Mat& A, const Mat& B, const Mat& Q, const Mat& R, const Mat& S, const Mat& X) {
  Mat U = A.transpose() * X * B + S;
  Mat V = R + B.transpose() * X * B;
  return sym(A.transpose() * X * A - U * V.ldlt().solve(U.transpose()) + Q);
}

}  // namespace

Mat dare(const Mat& A, const Mat& B, const Mat& Q, const Mat& R, const Mat& S) {
  const int n = static_cast<int>(A.rows());
  if (n == 0) return Mat(0, 0);
  Eigen::LDLT<Mat> Rf(R);
  if (Rf.info() != Eigen::Success) throw std::runtime_error("dare: R factorization failed");
  // Remove the cross term, then run SDA on X = At'X(I+GX)^{-1}At + Qt.
  Mat At = A - B * Rf.solve(S.transpose());
  Mat Qt = sym(Q - S * Rf.solve(S.transpose()));
  Mat G = B * Rf.solve(B.transpose());

  Mat Ak = At;
  Mat Gk = G;
  Mat Hk = Qt;
  const Mat I = Mat::Identity(n, n);
  for (int it = 0; it < 120; ++it) {
    Eigen::PartialPivLU<Mat> W((I + Gk * Hk).eval());
    Mat V1 = W.solve(Ak);
    Mat V2 = W.solve(Gk.transpose()).transpose();
    Mat Hn = sym(Hk + Ak.transpose() * Hk * V1);
    Gk = sym(Gk + Ak * V2 * Ak.transpose());
    Mat An = Ak * V1;
    const double dH = (Hn - Hk).norm();
    Hk = Hn;
    Ak = An;
    if (dH <= 1e-14 * (1.0 + Hk.norm()) && it > 2) break;
  }
  Mat X = Hk;
  // Polish with fixed-point sweeps until the required residual is met.
  double res = dare_residual(A, B, Q, R, S, X);
  for (int it = 0; it < 60 && res > 1e-13 * (1.0 + X.norm()); ++it) {
    X = dare_step(A, B, Q, R, S, X);
    res = dare_residual(A, B, Q, R, S, X);
  }
  if (!(res <= 1e-12 * (1.0 + X.norm()))) throw std::runtime_error("dare: doubling iteration did not converge");
  return X;
}

void SpectralFactorForm::validate() const {
  if (factor.outputs() != factor.inputs()) throw std::invalid_argument("SpectralFactorForm: factor must be square");
  Eigen::JacobiSVD<Mat> svd(factor.D());
  if (svd.singularValues().size() == 0 || svd.singularValues().minCoeff() <= 1e-9)
    throw std::invalid_argument("SpectralFactorForm: D must be invertible");
  factor.require_stable("SpectralFactorForm");
  StateSpace inv = factor.inverse();
  inv.require_stable("SpectralFactorForm inverse");
}

SpectralFactorForm SpectralFactorForm::constant(const Mat& sigma) {
  SpectralFactorForm f{StateSpace::gain(sigma)};
  f.validate();
  return f;
}

SpectralFactorForm spectral_factor_of_outer(const StateSpace& G, const Mat& R0) {
  G.require_stable("spectral_factor");
  const int p = G.outputs();
  if (R0.rows() != p || R0.cols() != p) throw std::invalid_argument("spectral_factor: R0 dimension mismatch");

  // Causal representation Gamma = E + E^* with
  // E = C (zI-A)^{-1} Bbar + Lam0 / 2, Bbar = A Wc C^T + B D^T,
  // Lam0 = C Wc C^T + D D^T + R0.
  const int n = G.order();
  Mat Bbar, Lam0;
  if (n > 0) {
    Mat Wc = gramian_ctrl(G);
    Bbar = G.A() * Wc * G.C().transpose() + G.B() * G.D().transpose();
    Lam0 = sym(G.C() * Wc * G.C().transpose() + G.D() * G.D().transpose() + R0);
  } else {
    Bbar = Mat(0, p);
    Lam0 = sym(G.D() * G.D().transpose() + R0);
  }

  // Coercivity check on a 1024-point grid.
  for (int k = 0; k < 1024; ++k) {
    const double th = 2.0 * M_PI * k / 1024;
    CMat g = G.freq_response(th);
    CMat Gam = g * g.adjoint() + R0.cast<std::complex<double>>();
    Eigen::SelfAdjointEigenSolver<CMat> es(Gam, Eigen::EigenvaluesOnly);
    if (es.eigenvalues().minCoeff() <= 1e-8)
      throw std::runtime_error("spectral_factor: density not coercive on the unit circle");
  }

  Mat L2;  // Lam0 - C P C^T at the solution
  StateSpace psi;
  if (n == 0) {
    Eigen::LLT<Mat> llt(Lam0);
    if (llt.info() != Eigen::Success) throw std::runtime_error("spectral_factor: constant density not PD");
    psi = StateSpace::gain(Mat(llt.matrixL()));
  } else {
    // Filter Riccati P = A P A^T + (Bbar - A P C^T)(Lam0 - C P C^T)^{-1}(...)^T
    // as the control DARE for X = -P with (A^T, C^T, 0, Lam0, Bbar).
    Mat X = dare(G.A().transpose(), G.C().transpose(), Mat::Zero(n, n), Lam0, Bbar);
    Mat P = -X;
    L2 = sym(Lam0 - G.C() * P * G.C().transpose());
    Eigen::LLT<Mat> llt(L2);
    if (llt.info() != Eigen::Success) throw std::runtime_error("spectral_factor: innovations covariance not PD");
    Mat L = llt.matrixL();
    Mat K = (Bbar - G.A() * P * G.C().transpose()) * L2.ldlt().solve(Mat::Identity(p, p));
    psi = StateSpace(G.A(), K * L, G.C(), L);
  }
  SpectralFactorForm out{minimal_realization(psi, 1e-10)};
  out.validate();
  return out;
}

SpectralFactorForm spectral_factor(const std::vector<SpectralTerm>& terms, const Mat& R0) {
  if (terms.empty()) {
    Eigen::LLT<Mat> llt(sym(R0));
    if (llt.info() != Eigen::Success) throw std::runtime_error("spectral_factor: R0 not PD");
    return SpectralFactorForm{StateSpace::gain(Mat(llt.matrixL()))};
  }
  StateSpace stacked;
  bool first = true;
  for (const auto& t : terms) {
    StateSpace contrib;
    if (std::holds_alternative<SpectralFactorForm>(t.weight)) {
      contrib = series(t.front, std::get<SpectralFactorForm>(t.weight).factor);
    } else {
      const Mat& M = std::get<Mat>(t.weight);
      Eigen::SelfAdjointEigenSolver<Mat> es(sym(M));
      if (es.eigenvalues().minCoeff() < -1e-10) throw std::invalid_argument("spectral_factor: constant weight not PSD");
      Mat half = es.eigenvectors() * es.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal();
      contrib = right_mul(t.front, half);
    }
    stacked = first ? contrib : hcat(stacked, contrib);
    first = false;
  }
  return spectral_factor_of_outer(minimal_realization(stacked, 1e-10), R0);
}

}  // namespace relest::lti
