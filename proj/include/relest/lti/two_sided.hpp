#pragma once

#include "relest/lti/state_space.hpp"

namespace relest::lti {

// A p×m frequency response F = F_c + F_a^* where F_c (p×m) and F_a (m×p) are
// causal and stable; F_a^*(e^{jt}) = F_a(e^{-jt})^T. Anticausal content never
// leaves this type: it is consumed by causal_part and inner products.
struct TwoSided {
  StateSpace causal;       // p×m
  StateSpace acausal_src;  // m×p, contributes acausal_src^*

  int outputs() const { return causal.outputs(); }
  int inputs() const { return causal.inputs(); }

  CMat freq_response(double theta) const {
    return causal.freq_response(theta) + acausal_src.freq_response(-theta).transpose();
  }
};

TwoSided ts_causal(const StateSpace& F);
// Descriptor for F^*; evaluates to F(e^{-jt})^T, used only inside the algebra.
TwoSided adjoint(const StateSpace& F);

TwoSided ts_add(const TwoSided& F, const TwoSided& G);
TwoSided ts_sub(const TwoSided& F, const TwoSided& G);
TwoSided ts_scale(const TwoSided& F, double c);

TwoSided ts_mul(const StateSpace& F, const TwoSided& G);
TwoSided ts_mul(const TwoSided& F, const StateSpace& G);
TwoSided ts_mul(const TwoSided& F, const TwoSided& G);

// {F}_ca: the causal half plus the lag-0 matrix of the anticausal half.
StateSpace causal_part(const TwoSided& F);

// sup over the grid of lambda_max of the (Hermitian) response.
double lambda_max_inf(const TwoSided& E, int grid);

}  // namespace relest::lti
