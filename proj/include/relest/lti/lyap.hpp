#pragma once

#include "relest/lti/state_space.hpp"

namespace relest::lti {

// Solves A X A2 - X + Q = 0 for X (discrete Sylvester, Bartels-Stewart on
// complex Schur forms). Requires rho(A)*rho(A2) < 1.
Mat dsylv(const Mat& A, const Mat& A2, const Mat& Q);

// Solves A P A^T - P + Q = 0, Q symmetric; P is symmetrized on return.
Mat dlyap(const Mat& A, const Mat& Q);

// Controllability and observability Gramians of a stable realization.
Mat gramian_ctrl(const StateSpace& F);
Mat gramian_obs(const StateSpace& F);

// <F,G> = (1/2pi) \int tr{F(e^{jt})^* G(e^{jt})} dt for stable causal F, G.
double h2_inner(const StateSpace& F, const StateSpace& G);
double h2_norm(const StateSpace& F);

// Lagged Gram matrices of two stable causal systems with matching output
// dimension: M(l) = sum_t T_t^T S_{t+l} for l = 0..max_lag (sizes mT x mS).
std::vector<Mat> lag_grams(const StateSpace& T, const StateSpace& S, int max_lag);

// Symmetric PSD square root; eigenvalues in [clip, 0) are clipped to zero and
// anything below clip is an error.
Mat sqrtm_psd(const Mat& M, double clip = -1e-10);

// (1/2pi) \int F F^* dtheta = D D^T + C Wc C^T for a stable realization.
Mat outer_gramian(const StateSpace& F);

}  // namespace relest::lti
