#pragma once

#include "relest/lti/state_space.hpp"

namespace relest::lti {

// Balanced truncation down to the numerically minimal part of a stable
// realization. Hankel singular values below tol * (largest) are discarded.
StateSpace minimal_realization(const StateSpace& sys, double tol = 1e-8);

}  // namespace relest::lti
