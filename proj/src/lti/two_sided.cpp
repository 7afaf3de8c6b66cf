#include "relest/lti/two_sided.hpp"

#include <Eigen/Eigenvalues>

#include "relest/lti/lyap.hpp"
#include "relest/lti/minreal.hpp"

namespace relest::lti {

namespace {

StateSpace tidy(const StateSpace& F) {
  if (F.order() == 0) return F;
  return minimal_realization(F, 1e-11);
}

// Splits F * G^* (F p×k causal, G m×k causal) into causal (p×m) plus the
// adjoint of a strictly causal source (m×p). Uses the partial-fraction
// identity (zI-A)^{-1} M (z^{-1}I-N)^{-1} = (zI-A)^{-1} A R + R N (z^{-1}I-N)^{-1} + R
// with R - A R N = M.
TwoSided split_causal_times_adjoint(const StateSpace& F, const StateSpace& G) {
  if (F.inputs() != G.inputs()) throw std::invalid_argument("ts_mul: adjoint dimension mismatch");
  F.require_stable("ts_mul");
  G.require_stable("ts_mul");
  const int nf = F.order(), ng = G.order();
  Mat R;
  if (nf > 0 && ng > 0) R = dsylv(F.A(), G.A().transpose(), F.B() * G.B().transpose());

  // Causal half: (A_F, A_F R C_G^T + B_F D_G^T, C_F, C_F R C_G^T + D_F D_G^T).
  Mat Bc = F.B() * G.D().transpose();
  Mat Dc = F.D() * G.D().transpose();
  if (nf > 0 && ng > 0) {
    Bc += F.A() * R * G.C().transpose();
    Dc += F.C() * R * G.C().transpose();
  }
  StateSpace caus = (nf > 0) ? StateSpace(F.A(), Bc, F.C(), Dc) : StateSpace::gain(Dc);

  // Anticausal half: ((C_F R A_G^T + D_F B_G^T)(z^{-1}I - A_G^T)^{-1} C_G^T),
  // i.e. the adjoint of H = (A_G, A_G R^T C_F^T + B_G D_F^T, C_G, 0).
  StateSpace acaus = StateSpace::gain(Mat::Zero(G.outputs(), F.outputs()));
  if (ng > 0) {
    Mat Bh = G.B() * F.D().transpose();
    if (nf > 0) Bh += G.A() * R.transpose() * F.C().transpose();
    acaus = StateSpace(G.A(), Bh, G.C(), Mat::Zero(G.outputs(), F.outputs()));
  }
  return TwoSided{caus, acaus};
}

}  // namespace

TwoSided ts_causal(const StateSpace& F) {
  return TwoSided{F, StateSpace::gain(Mat::Zero(F.inputs(), F.outputs()))};
}

TwoSided adjoint(const StateSpace& F) {
  F.require_stable("adjoint");
  return TwoSided{StateSpace::gain(Mat::Zero(F.inputs(), F.outputs())), F};
}

TwoSided ts_add(const TwoSided& F, const TwoSided& G) {
  return TwoSided{tidy(parallel(F.causal, G.causal)), tidy(parallel(F.acausal_src, G.acausal_src))};
}

TwoSided ts_sub(const TwoSided& F, const TwoSided& G) { return ts_add(F, ts_scale(G, -1.0)); }

TwoSided ts_scale(const TwoSided& F, double c) { return TwoSided{scale(F.causal, c), scale(F.acausal_src, c)}; }

TwoSided ts_mul(const StateSpace& F, const TwoSided& G) {
  // F G_c is causal; F G_a^* splits.
  TwoSided crossed = split_causal_times_adjoint(F, G.acausal_src);
  return TwoSided{tidy(parallel(series(F, G.causal), crossed.causal)), tidy(crossed.acausal_src)};
}

TwoSided ts_mul(const TwoSided& F, const StateSpace& G) {
  // F_a^* G = (G^T (F_a^T)^*)^T, reuse the causal×adjoint split on transposes.
  TwoSided crossed = split_causal_times_adjoint(G.transpose(), F.acausal_src.transpose());
  return TwoSided{tidy(parallel(series(F.causal, G), crossed.causal.transpose())),
                  tidy(crossed.acausal_src.transpose())};
}

TwoSided ts_mul(const TwoSided& F, const TwoSided& G) {
  TwoSided fc_g = ts_mul(F.causal, TwoSided{StateSpace::zero(G.outputs(), G.inputs()), G.acausal_src});
  TwoSided fa_gc = ts_mul(TwoSided{StateSpace::zero(F.outputs(), F.inputs()), F.acausal_src}, G.causal);
  StateSpace cc = series(F.causal, G.causal);
  StateSpace aa = series(G.acausal_src, F.acausal_src);  // (G_a F_a)^* = F_a^* G_a^*
  TwoSided out{tidy(parallel(parallel(cc, fc_g.causal), fa_gc.causal)),
               tidy(parallel(aa, parallel(fc_g.acausal_src, fa_gc.acausal_src)))};
  return out;
}

StateSpace causal_part(const TwoSided& F) {
  F.causal.require_stable("causal_part");
  F.acausal_src.require_stable("causal_part");
  Mat lag0 = F.acausal_src.D().transpose();
  return parallel(F.causal, StateSpace::gain(lag0));
}

double lambda_max_inf(const TwoSided& E, int grid) {
  if (E.outputs() != E.inputs()) throw std::invalid_argument("lambda_max_inf: non-square response");
  double m = -std::numeric_limits<double>::infinity();
  for (int k = 0; k < grid; ++k) {
    const double th = 2.0 * M_PI * k / grid;
    CMat M = E.freq_response(th);
    CMat H = 0.5 * (M + M.adjoint());
    Eigen::SelfAdjointEigenSolver<CMat> es(H, Eigen::EigenvaluesOnly);
    m = std::max(m, es.eigenvalues().maxCoeff());
  }
  return m;
}

}  // namespace relest::lti
