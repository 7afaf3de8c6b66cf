#pragma once

#include <optional>
#include <variant>

#include "relest/lti/state_space.hpp"

namespace relest::lti {

// Stabilizing solution of X = A'XA - (A'XB + S)(R + B'XB)^{-1}(B'XA + S') + Q
// via the structure-preserving doubling algorithm, residual <= 1e-12 scaled.
Mat dare(const Mat& A, const Mat& B, const Mat& Q, const Mat& R, const Mat& S);

// Causal, causally invertible spectral factor: density Gamma = factor * factor^*.
struct SpectralFactorForm {
  StateSpace factor;

  int dim() const { return factor.outputs(); }
  CMat density(double theta) const {
    CMat f = factor.freq_response(theta);
    return f * f.adjoint();
  }
  StateSpace inverse() const { return factor.inverse(); }
  void validate() const;

  static SpectralFactorForm constant(const Mat& sigma);  // factor = chol(sigma*sigma^T)? no: factor = sigma itself
};

// One additive contribution F * Gamma * F^* to a spectral density, with Gamma
// given either through its own factor or as a constant PSD matrix.
struct SpectralTerm {
  StateSpace front;                                // F
  std::variant<SpectralFactorForm, Mat> weight;    // Gamma = phi phi^* or constant
};

// Factor Gamma(e^{jt}) = sum_i F_i Gamma_i F_i^* + R0 with R0 >= 0 constant.
// Requires Gamma > 0 on the unit circle (checked on a 1024-point grid).
SpectralFactorForm spectral_factor(const std::vector<SpectralTerm>& terms, const Mat& R0);

// Convenience: factor of G G^* + R0 for a stacked causal G.
SpectralFactorForm spectral_factor_of_outer(const StateSpace& G, const Mat& R0);

}  // namespace relest::lti
