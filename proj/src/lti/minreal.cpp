#include "relest/lti/minreal.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include "relest/lti/lyap.hpp"

namespace relest::lti {

namespace {

// Square-root factor of a symmetric PSD matrix, small negative eigenvalues clipped.
Mat psd_factor(const Mat& W) {
  Eigen::SelfAdjointEigenSolver<Mat> es(sym(W));
  Vec d = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * d.asDiagonal();
}

}  // namespace

StateSpace minimal_realization(const StateSpace& sys, double tol) {
  sys.require_stable("minimal_realization");
  const int n = sys.order();
  if (n == 0) return sys;
  Mat Lc = psd_factor(gramian_ctrl(sys));
  Mat Lo = psd_factor(gramian_obs(sys));
  Eigen::JacobiSVD<Mat> svd(Lo.transpose() * Lc, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vec& s = svd.singularValues();
  const double smax = s.size() ? s(0) : 0.0;
  // A response that is zero to machine precision reduces to its feedthrough;
  // balancing such systems only amplifies rounding noise.
  if (smax <= 1e-14 * (1.0 + sys.D().norm())) return StateSpace::gain(sys.D());
  for (double t = tol;; t *= 10.0) {
    int r = 0;
    while (r < s.size() && s(r) > t * smax) ++r;
    if (r == 0) return StateSpace::gain(sys.D());
    Vec sr_inv_sqrt = s.head(r).cwiseSqrt().cwiseInverse();
    Mat T = Lc * svd.matrixV().leftCols(r) * sr_inv_sqrt.asDiagonal();
    Mat Tinv = sr_inv_sqrt.asDiagonal() * svd.matrixU().leftCols(r).transpose() * Lo.transpose();
    StateSpace red(Tinv * sys.A() * T, Tinv * sys.B(), sys.C() * T, sys.D());
    if (red.is_stable()) return red;
    if (t > 1e-4) return sys;  // keep the (stable) original rather than junk
  }
}

}  // namespace relest::lti
