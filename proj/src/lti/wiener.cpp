#include "relest/lti/wiener.hpp"

#include "relest/lti/lyap.hpp"
#include "relest/lti/minreal.hpp"
#include "relest/lti/two_sided.hpp"

namespace relest::lti {

SpectralFactorForm output_spectral_factor(const EstimationSetup& setup) {
  std::vector<SpectralTerm> terms;
  terms.push_back({setup.H0, *setup.phi_y});
  if (setup.phi_v) terms.push_back({StateSpace::identity(setup.m_v()), *setup.phi_v});
  return spectral_factor(terms, Mat::Zero(setup.m_v(), setup.m_v()));
}

StateSpace wiener_nominal(const EstimationSetup& setup) {
  SpectralFactorForm psi_o = output_spectral_factor(setup);
  StateSpace psi_inv = psi_o.inverse();
  // H_I Gamma_y H0^* (psi_o^*)^{-1} = (H_I phi_y) (psi_o^{-1} H0 phi_y)^*.
  StateSpace E1 = minimal_realization(series(setup.H_I, setup.phi_y->factor), 1e-10);
  StateSpace E2 = minimal_realization(series(psi_inv, series(setup.H0, setup.phi_y->factor)), 1e-10);
  TwoSided T = ts_mul(E1, adjoint(E2));
  StateSpace Go = series(causal_part(T), psi_inv);
  Go = minimal_realization(Go, 1e-9);
  Go.require_stable("wiener_nominal");
  return Go;
}

}  // namespace relest::lti
