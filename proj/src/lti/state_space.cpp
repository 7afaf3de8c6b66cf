#include "relest/lti/state_space.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/LU>

namespace relest::lti {

double StateSpace::spectral_radius() const {
  if (order() == 0) return 0.0;
  Eigen::EigenSolver<Mat> es(A_, /*computeEigenvectors=*/false);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

void StateSpace::require_stable(const char* who) const {
  if (!is_stable()) throw std::runtime_error(std::string(who) + ": realization is not stable");
}

CMat StateSpace::freq_response(double theta) const {
  const std::complex<double> z(std::cos(theta), std::sin(theta));
  if (order() == 0) return D_.cast<std::complex<double>>();
  CMat R = z * CMat::Identity(order(), order()) - A_.cast<std::complex<double>>();
  Eigen::PartialPivLU<CMat> lu(R);
  CMat X = lu.solve(B_.cast<std::complex<double>>());
  // Cheap singularity guard: the resolvent blows up at a unit-circle pole.
  if (!X.allFinite() || X.norm() > 1e14 * (1.0 + B_.norm()))
    throw std::runtime_error("freq_response: resolvent singular at requested angle");
  return C_.cast<std::complex<double>>() * X + D_.cast<std::complex<double>>();
}

std::vector<Mat> StateSpace::impulse(int n_terms) const {
  std::vector<Mat> out;
  out.reserve(n_terms);
  if (n_terms <= 0) return out;
  out.push_back(D_);
  Mat AkB = B_;
  for (int k = 1; k < n_terms; ++k) {
    out.push_back(C_ * AkB);
    AkB = A_ * AkB;
  }
  return out;
}

StateSpace StateSpace::inverse() const {
  if (D_.rows() != D_.cols()) throw std::invalid_argument("inverse: D must be square");
  Eigen::FullPivLU<Mat> lu(D_);
  if (!lu.isInvertible()) throw std::runtime_error("inverse: D is singular");
  Mat Dinv = lu.inverse();
  return StateSpace(A_ - B_ * Dinv * C_, B_ * Dinv, -Dinv * C_, Dinv);
}

StateSpace StateSpace::col(int j) const { return StateSpace(A_, B_.col(j), C_, D_.col(j)); }
StateSpace StateSpace::row(int i) const { return StateSpace(A_, B_, C_.row(i), D_.row(i)); }

StateSpace series(const StateSpace& G, const StateSpace& H) {
  if (G.inputs() != H.outputs()) throw std::invalid_argument("series: dimension mismatch");
  const int ng = G.order(), nh = H.order();
  Mat A = Mat::Zero(ng + nh, ng + nh);
  A.topLeftCorner(ng, ng) = G.A();
  A.topRightCorner(ng, nh) = G.B() * H.C();
  A.bottomRightCorner(nh, nh) = H.A();
  Mat B(ng + nh, H.inputs());
  B.topRows(ng) = G.B() * H.D();
  B.bottomRows(nh) = H.B();
  Mat C(G.outputs(), ng + nh);
  C.leftCols(ng) = G.C();
  C.rightCols(nh) = G.D() * H.C();
  return StateSpace(A, B, C, G.D() * H.D());
}

StateSpace parallel(const StateSpace& F, const StateSpace& G) {
  if (F.outputs() != G.outputs() || F.inputs() != G.inputs())
    throw std::invalid_argument("parallel: dimension mismatch");
  const int nf = F.order(), ng = G.order();
  Mat A = Mat::Zero(nf + ng, nf + ng);
  A.topLeftCorner(nf, nf) = F.A();
  A.bottomRightCorner(ng, ng) = G.A();
  Mat B(nf + ng, F.inputs());
  B.topRows(nf) = F.B();
  B.bottomRows(ng) = G.B();
  Mat C(F.outputs(), nf + ng);
  C.leftCols(nf) = F.C();
  C.rightCols(ng) = G.C();
  return StateSpace(A, B, C, F.D() + G.D());
}

StateSpace hcat(const StateSpace& F, const StateSpace& G) {
  if (F.outputs() != G.outputs()) throw std::invalid_argument("hcat: output mismatch");
  const int nf = F.order(), ng = G.order();
  Mat A = Mat::Zero(nf + ng, nf + ng);
  A.topLeftCorner(nf, nf) = F.A();
  A.bottomRightCorner(ng, ng) = G.A();
  Mat B = Mat::Zero(nf + ng, F.inputs() + G.inputs());
  B.topLeftCorner(nf, F.inputs()) = F.B();
  B.bottomRightCorner(ng, G.inputs()) = G.B();
  Mat C(F.outputs(), nf + ng);
  C.leftCols(nf) = F.C();
  C.rightCols(ng) = G.C();
  Mat D(F.outputs(), F.inputs() + G.inputs());
  D << F.D(), G.D();
  return StateSpace(A, B, C, D);
}

StateSpace vcat(const StateSpace& F, const StateSpace& G) {
  if (F.inputs() != G.inputs()) throw std::invalid_argument("vcat: input mismatch");
  const int nf = F.order(), ng = G.order();
  Mat A = Mat::Zero(nf + ng, nf + ng);
  A.topLeftCorner(nf, nf) = F.A();
  A.bottomRightCorner(ng, ng) = G.A();
  Mat B(nf + ng, F.inputs());
  B.topRows(nf) = F.B();
  B.bottomRows(ng) = G.B();
  Mat C = Mat::Zero(F.outputs() + G.outputs(), nf + ng);
  C.topLeftCorner(F.outputs(), nf) = F.C();
  C.bottomRightCorner(G.outputs(), ng) = G.C();
  Mat D(F.outputs() + G.outputs(), F.inputs());
  D << F.D(), G.D();
  return StateSpace(A, B, C, D);
}

StateSpace scale(const StateSpace& F, double c) { return StateSpace(F.A(), F.B(), c * F.C(), c * F.D()); }

StateSpace left_mul(const Mat& M, const StateSpace& F) {
  if (M.cols() != F.outputs()) throw std::invalid_argument("left_mul: dimension mismatch");
  return StateSpace(F.A(), F.B(), M * F.C(), M * F.D());
}

StateSpace right_mul(const StateSpace& F, const Mat& M) {
  if (F.inputs() != M.rows()) throw std::invalid_argument("right_mul: dimension mismatch");
  return StateSpace(F.A(), F.B() * M, F.C(), F.D() * M);
}

StateSpace append_states(const StateSpace& F, int extra) {
  const int n = F.order();
  Mat A = Mat::Zero(n + extra, n + extra);
  A.topLeftCorner(n, n) = F.A();
  A.bottomRightCorner(extra, extra) = 0.5 * Mat::Identity(extra, extra);
  Mat B = Mat::Zero(n + extra, F.inputs());
  B.topRows(n) = F.B();
  Mat C = Mat::Zero(F.outputs(), n + extra);
  C.leftCols(n) = F.C();
  return StateSpace(A, B, C, F.D());
}

StateSpace delay(const StateSpace& F, int k) {
  if (k <= 0) return F;
  const int m = F.inputs();
  // shift register of k*m states feeding F
  Mat A = Mat::Zero(k * m, k * m);
  for (int i = 1; i < k; ++i) A.block(i * m, (i - 1) * m, m, m).setIdentity();
  Mat B = Mat::Zero(k * m, m);
  B.topRows(m).setIdentity();
  Mat C = Mat::Zero(m, k * m);
  C.rightCols(m).setIdentity();
  StateSpace shift(A, B, C, Mat::Zero(m, m));
  return series(F, shift);
}

StateSpace kron_right_identity(const StateSpace& F, int q) {
  auto kr = [q](const Mat& M) {
    Mat out(M.rows() * q, M.cols() * q);
    out.setZero();
    for (int i = 0; i < M.rows(); ++i)
      for (int j = 0; j < M.cols(); ++j)
        out.block(i * q, j * q, q, q) = M(i, j) * Mat::Identity(q, q);
    return out;
  };
  return StateSpace(kr(F.A()), kr(F.B()), kr(F.C()), kr(F.D()));
}

StateSpace kron_left_identity(int p, const StateSpace& F) {
  auto kl = [p](const Mat& M) {
    Mat out = Mat::Zero(p * M.rows(), p * M.cols());
    for (int i = 0; i < p; ++i) out.block(i * M.rows(), i * M.cols(), M.rows(), M.cols()) = M;
    return out;
  };
  return StateSpace(kl(F.A()), kl(F.B()), kl(F.C()), kl(F.D()));
}

StateSpace kron_ss(const StateSpace& F, const StateSpace& G) {
  // F ⊗ G = (F ⊗ I_{pG}) (I_{mF} ⊗ G)
  return series(kron_right_identity(F, G.outputs()), kron_left_identity(F.inputs(), G));
}

StateSpace rvec_ss(const StateSpace& F) {
  const int p = F.outputs(), m = F.inputs(), n = F.order();
  if (m == 0) return StateSpace::gain(Mat::Zero(p * m, 1));
  Mat A = Mat::Zero(n * m, n * m);
  Mat B = Mat::Zero(n * m, 1);
  for (int j = 0; j < m; ++j) {
    A.block(j * n, j * n, n, n) = F.A();
    B.block(j * n, 0, n, 1) = F.B().col(j);
  }
  Mat C = Mat::Zero(p * m, n * m);
  Mat D = Mat::Zero(p * m, 1);
  for (int i = 0; i < p; ++i)
    for (int j = 0; j < m; ++j) {
      C.block(i * m + j, j * n, 1, n) = F.C().row(i);
      D(i * m + j, 0) = F.D()(i, j);
    }
  return StateSpace(A, B, C, D);
}

StateSpace FIR::to_ss() const {
  if (taps.empty()) throw std::invalid_argument("FIR: empty tap list");
  const int p = outputs(), m = inputs();
  const int L = static_cast<int>(taps.size()) - 1;
  if (L == 0) return StateSpace::gain(taps[0]);
  const int n = L * m;
  Mat A = Mat::Zero(n, n);
  for (int i = 1; i < L; ++i) A.block(i * m, (i - 1) * m, m, m).setIdentity();
  Mat B = Mat::Zero(n, m);
  B.topRows(m).setIdentity();
  Mat C(p, n);
  for (int k = 1; k <= L; ++k) C.middleCols((k - 1) * m, m) = taps[k];
  return StateSpace(A, B, C, taps[0]);
}

double FIR::h2_norm_sq() const {
  double s = 0;
  for (const auto& T : taps) s += T.squaredNorm();
  return s;
}

FIR fir_from_scalar_taps(const std::vector<double>& taps) {
  FIR f;
  for (double t : taps) f.taps.push_back(Mat::Constant(1, 1, t));
  return f;
}

bool is_symmetric(const Mat& M, double rel_tol) {
  if (M.rows() != M.cols()) return false;
  return (M - M.transpose()).norm() <= rel_tol * std::max(1.0, M.norm());
}

Mat sym(const Mat& M) { return 0.5 * (M + M.transpose()); }

}  // namespace relest::lti
