#pragma once

#include "relest/setup.hpp"

namespace relest::lti {

// Innovations factor psi_o of Gamma_v + H0 Gamma_y H0^*.
SpectralFactorForm output_spectral_factor(const EstimationSetup& setup);

// Unconstrained nominal MSE-optimal estimator
// G_o = { H_I Gamma_y H0^* (psi_o^*)^{-1} }_ca psi_o^{-1}, returned minimal.
StateSpace wiener_nominal(const EstimationSetup& setup);

}  // namespace relest::lti
