#include "relest/lti/norms.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

namespace relest::lti {

double sigma_max_on_grid(const StateSpace& F, int grid) {
  double m = 0.0;
  for (int k = 0; k < grid; ++k) {
    const double th = 2.0 * M_PI * k / grid;
    Eigen::JacobiSVD<CMat> svd(F.freq_response(th));
    m = std::max(m, svd.singularValues()(0));
  }
  return m;
}

namespace {

// True iff gamma^2 I - F~(z) F(z) is singular somewhere on the unit circle,
// i.e. the pencil M v = z N v has a generalized eigenvalue with |z| = 1.
bool level_reached(const StateSpace& F, double gamma, double eig_tol) {
  const Mat& A = F.A();
  const Mat& B = F.B();
  const Mat& C = F.C();
  const Mat& D = F.D();
  const int n = F.order();
  Mat R = gamma * gamma * Mat::Identity(F.inputs(), F.inputs()) - D.transpose() * D;
  Eigen::LLT<Mat> llt(R);
  if (llt.info() != Eigen::Success) return true;  // gamma <= sigma_max(D)
  Mat Rinv_DtC = llt.solve(D.transpose() * C);
  Mat Ahat = A + B * Rinv_DtC;
  Mat G = B * llt.solve(B.transpose());
  Mat DRD = D * llt.solve(D.transpose());
  Mat H = C.transpose() * (Mat::Identity(F.outputs(), F.outputs()) + DRD) * C;

  Mat M = Mat::Zero(2 * n, 2 * n);
  M.topLeftCorner(n, n) = Ahat;
  M.topRightCorner(n, n) = G;
  M.bottomRightCorner(n, n).setIdentity();
  Mat N = Mat::Zero(2 * n, 2 * n);
  N.topLeftCorner(n, n).setIdentity();
  N.bottomLeftCorner(n, n) = H;
  N.bottomRightCorner(n, n) = Ahat.transpose();

  Eigen::GeneralizedEigenSolver<Mat> ges;
  ges.compute(M, N, /*computeEigenvectors=*/false);
  auto alphas = ges.alphas();
  auto betas = ges.betas();
  for (int i = 0; i < alphas.size(); ++i) {
    const double b = std::abs(betas(i));
    if (b < 1e-12 * (1.0 + std::abs(alphas(i)))) continue;  // eigenvalue at infinity
    const double mod = std::abs(alphas(i)) / b;
    if (std::abs(mod - 1.0) < eig_tol) return true;
  }
  return false;
}

}  // namespace

double hinf_norm(const StateSpace& F, double tol) {
  F.require_stable("hinf_norm");
  if (F.order() == 0) {
    if (F.D().size() == 0) return 0.0;
    Eigen::JacobiSVD<Mat> svd(F.D());
    return svd.singularValues()(0);
  }
  double lo = std::max(sigma_max_on_grid(F, 128), 1e-300);
  double hi = 2.0 * lo + 1.0;
  while (level_reached(F, hi, 1e-8)) {
    lo = hi;
    hi *= 4.0;
    if (hi > 1e50) throw std::runtime_error("hinf_norm: bisection upper bound diverged");
  }
  while (hi - lo > tol * std::max(1.0, lo)) {
    const double mid = 0.5 * (lo + hi);
    if (level_reached(F, mid, 1e-8))
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace relest::lti
