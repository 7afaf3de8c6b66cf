#pragma once

#include "relest/lti/state_space.hpp"

namespace relest::lti {

// Largest singular value of the response on a uniform grid.
double sigma_max_on_grid(const StateSpace& F, int grid);

// H-infinity norm of a stable system, via bisection with a symplectic-pencil
// unit-circle eigenvalue test per candidate level.
double hinf_norm(const StateSpace& F, double tol = 1e-8);

}  // namespace relest::lti
