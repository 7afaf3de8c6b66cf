#include "relest/lti/lyap.hpp"

#include <Eigen/Eigenvalues>

namespace relest::lti {

namespace {

// Solves T1 X T2^ - X + Q = 0 with T1, T2 upper triangular complex (T2^ is the
// plain triangular matrix, no adjoint taken here). Columns are computed last
// to first; X(:,j) satisfies (T2(j,j) T1 - I) X(:,j) = -Q(:,j) - T1 * w_j with
// w_j = sum_{l>j} X(:,l) T2(j,l).
CMat triangular_dsylv(const CMat& T1, const CMat& T2, const CMat& Q) {
  const int n = static_cast<int>(T1.rows());
  const int m = static_cast<int>(T2.rows());
  CMat X = CMat::Zero(n, m);
  for (int j = m - 1; j >= 0; --j) {
    Eigen::VectorXcd w = Eigen::VectorXcd::Zero(n);
    for (int l = j + 1; l < m; ++l) w += X.col(l) * T2(j, l);
    Eigen::VectorXcd rhs = -Q.col(j) - T1 * w;
    // (T2(j,j) T1 - I) is upper triangular; back substitution.
    const std::complex<double> t = T2(j, j);
    for (int i = n - 1; i >= 0; --i) {
      std::complex<double> s = rhs(i);
      for (int k = i + 1; k < n; ++k) s -= t * T1(i, k) * X(k, j);
      const std::complex<double> d = t * T1(i, i) - 1.0;
      if (std::abs(d) < 1e-300) throw std::runtime_error("dsylv: singular (eigenvalue product at 1)");
      X(i, j) = s / d;
    }
  }
  return X;
}

}  // namespace

Mat dsylv(const Mat& A, const Mat& A2, const Mat& Q) {
  const int n = static_cast<int>(A.rows());
  const int m = static_cast<int>(A2.rows());
  if (Q.rows() != n || Q.cols() != m) throw std::invalid_argument("dsylv: Q dimension mismatch");
  if (n == 0 || m == 0) return Q;
  Eigen::ComplexSchur<Mat> s1(A, true);
  Eigen::ComplexSchur<Mat> s2(A2.transpose(), true);
  if (s1.info() != Eigen::Success || s2.info() != Eigen::Success)
    throw std::runtime_error("dsylv: Schur decomposition failed");
  // A = U1 T1 U1^*, A2^T = U2 T2 U2^*. With X = U1 Y U2^T (note transpose):
  // A X A2 - X + Q = 0  =>  T1 Y T2^T' ... work it in transformed coordinates:
  // U1^* (A X A2 - X + Q) conj(U2) = T1 Y T2^c - Y + Qt = 0 where
  // Y = U1^* X conj(U2), T2^c = (U2^* A2^T U2)^T-free form: A2 = conj(U2) T2^T U2^T.
  const CMat& T1 = s1.matrixT();
  const CMat& T2 = s2.matrixT();
  const CMat& U1 = s1.matrixU();
  const CMat& U2 = s2.matrixU();
  CMat Qt = U1.adjoint() * Q.cast<std::complex<double>>() * U2.conjugate();
  // Now solve T1 Y T2^T - Y + Qt = 0; triangular_dsylv handles
  // T1 Y S - Y + Qt = 0 with S upper triangular accessed as S(j,l)=T2(j,l)
  // representing right-multiplication by S^T... Define S = T2 so that
  // (Y S^T)(:,j) = sum_l Y(:,l) S(j,l).
  CMat Y = triangular_dsylv(T1, T2, Qt);
  CMat X = U1 * Y * U2.transpose();
  Mat Xr = X.real();
  const double imag_norm = X.imag().norm();
  if (imag_norm > 1e-8 * (1.0 + Xr.norm())) throw std::runtime_error("dsylv: significant imaginary residue");
  return Xr;
}

Mat dlyap(const Mat& A, const Mat& Q) {
  if (!is_symmetric(Q, 1e-9)) throw std::invalid_argument("dlyap: Q must be symmetric");
  const int n = static_cast<int>(A.rows());
  if (n == 0) return Q;
  Eigen::EigenSolver<Mat> es(A, false);
  if (es.eigenvalues().cwiseAbs().maxCoeff() >= 1.0 - 1e-12)
    throw std::runtime_error("dlyap: A is not stable");
  return sym(dsylv(A, A.transpose(), Q));
}

Mat gramian_ctrl(const StateSpace& F) {
  F.require_stable("gramian_ctrl");
  if (F.order() == 0) return Mat(0, 0);
  return dlyap(F.A(), F.B() * F.B().transpose());
}

Mat gramian_obs(const StateSpace& F) {
  F.require_stable("gramian_obs");
  if (F.order() == 0) return Mat(0, 0);
  return dlyap(F.A().transpose(), F.C().transpose() * F.C());
}

Mat sqrtm_psd(const Mat& M, double clip) {
  if (M.rows() == 0) return M;
  Eigen::SelfAdjointEigenSolver<Mat> es(sym(M));
  Vec d = es.eigenvalues();
  const double scale = std::max(1.0, d.cwiseAbs().maxCoeff());
  if (d.minCoeff() < clip * scale)
    throw std::runtime_error("sqrtm_psd: matrix has a significantly negative eigenvalue");
  return es.eigenvectors() * d.cwiseMax(0.0).cwiseSqrt().asDiagonal() * es.eigenvectors().transpose();
}

Mat outer_gramian(const StateSpace& F) {
  Mat Q = F.D() * F.D().transpose();
  if (F.order() > 0) {
    Mat Wc = gramian_ctrl(F);
    Q += F.C() * Wc * F.C().transpose();
  }
  return sym(Q);
}

double h2_inner(const StateSpace& F, const StateSpace& G) {
  if (F.outputs() != G.outputs() || F.inputs() != G.inputs())
    throw std::invalid_argument("h2_inner: dimension mismatch");
  F.require_stable("h2_inner");
  G.require_stable("h2_inner");
  double val = (F.D().transpose() * G.D()).trace();
  if (F.order() > 0 && G.order() > 0) {
    // Y = sum_k (A_F^k)^T C_F^T C_G A_G^k solves A_F^T Y A_G - Y + C_F^T C_G = 0.
    Mat Y = dsylv(F.A().transpose(), G.A(), F.C().transpose() * G.C());
    val += (F.B().transpose() * Y * G.B()).trace();
  }
  return val;
}

double h2_norm(const StateSpace& F) { return std::sqrt(std::max(0.0, h2_inner(F, F))); }

std::vector<Mat> lag_grams(const StateSpace& T, const StateSpace& S, int max_lag) {
  if (T.outputs() != S.outputs()) throw std::invalid_argument("lag_grams: output mismatch");
  T.require_stable("lag_grams");
  S.require_stable("lag_grams");
  std::vector<Mat> out;
  out.reserve(max_lag + 1);
  const bool tn = T.order() > 0, sn = S.order() > 0;
  Mat X;
  if (tn && sn) X = dsylv(T.A().transpose(), S.A(), T.C().transpose() * S.C());
  // M(0) = D_T^T D_S + B_T^T X B_S
  Mat M0 = T.D().transpose() * S.D();
  if (tn && sn) M0 += T.B().transpose() * X * S.B();
  out.push_back(M0);
  // M(l) = D_T^T C_S A_S^{l-1} B_S + B_T^T X A_S^l B_S for l >= 1.
  Mat AlB = sn ? Mat(S.B()) : Mat();
  for (int l = 1; l <= max_lag; ++l) {
    Mat Ml = Mat::Zero(T.inputs(), S.inputs());
    if (sn) {
      Ml += T.D().transpose() * (S.C() * AlB);
      if (tn) Ml += T.B().transpose() * X * (S.A() * AlB);
      AlB = S.A() * AlB;
    }
    out.push_back(Ml);
  }
  return out;
}

}  // namespace relest::lti
