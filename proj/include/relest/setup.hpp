#pragma once

#include <optional>

#include "relest/lti/spectral.hpp"
#include "relest/lti/state_space.hpp"

namespace relest {

enum class ProblemKind { H2Ball, HinfNominal, HinfRobust };

// One estimation problem instance. H2 problems use (phi_y, phi_v, W, gamma);
// the H-infinity problems use (W_y, W_v, gamma_y, gamma_v) and, when robust,
// (W_H, gamma_H). A missing phi_v means noise-free observations.
struct EstimationSetup {
  ProblemKind kind = ProblemKind::H2Ball;
  lti::StateSpace H_I;
  lti::StateSpace H0;

  std::optional<lti::SpectralFactorForm> phi_y;
  std::optional<lti::SpectralFactorForm> phi_v;
  std::optional<lti::StateSpace> W;  // defaults to identity
  double gamma = 0.0;

  std::optional<lti::StateSpace> W_y, W_v;
  double gamma_y = 0.0, gamma_v = 0.0;
  std::optional<lti::StateSpace> W_H;
  double gamma_H = 0.0;

  int m_y() const { return H0.inputs(); }
  int m_v() const { return H0.outputs(); }
  int m_e() const { return H_I.outputs(); }

  lti::StateSpace weight_W() const {
    return W ? *W : lti::StateSpace::identity(m_y());
  }
  lti::StateSpace phi_v_ss() const {
    return phi_v ? phi_v->factor : lti::StateSpace::zero(m_v(), m_v());
  }
  lti::StateSpace weight_or_identity(const std::optional<lti::StateSpace>& w, int m) const {
    return w ? *w : lti::StateSpace::identity(m);
  }

  void validate() const;
};

namespace synth {

// Linear estimator class G(beta) = beta * [ (zI - A_G)^{-1} B_G ; I ].
struct EstimatorBasis {
  lti::Mat A_G;  // n_G x n_G, stable (n_G may be 0)
  lti::Mat B_G;  // n_G x m_v

  int n_G() const { return static_cast<int>(A_G.rows()); }
  int m_v() const { return static_cast<int>(B_G.cols()); }

  // [ (zI-A_G)^{-1} B_G ; I ], an (n_G + m_v) x m_v system.
  lti::StateSpace Y_a() const;
  lti::StateSpace realize(const lti::Mat& beta) const;  // beta is m_e x (n_G + m_v)
  void validate() const;  // stability + controllability (staircase test)
};

}  // namespace synth
}  // namespace relest
