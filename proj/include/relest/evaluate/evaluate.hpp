#pragma once

#include <optional>

#include "relest/evaluate/rng.hpp"
#include "relest/lti/state_space.hpp"
#include "relest/setup.hpp"

namespace relest::eval {

using lti::Mat;
using lti::StateSpace;
using lti::Vec;

// Steady-state MSE J(G; H) for the H2 setup's spectra.
double mse(const StateSpace& G, const StateSpace& H, const EstimationSetup& setup);

// sup over the H2 channel ball of J(G; .), by the worst-case dual SDP.
double worst_case_mse(const StateSpace& G, const EstimationSetup& setup);

// J_inf(G; H0) and its robust upper bound J_inf^a(G) for fixed G.
double nominal_hinf(const StateSpace& G, const EstimationSetup& setup);
double robust_hinf(const StateSpace& G, const EstimationSetup& setup);

// J_X(G; X_L(theta)) = c0 - 2 xi . theta + theta^T PJ theta over the
// orthonormal FIR perturbation basis of length L (L+1 taps per entry).
struct QuadraticMseForm {
  double c0 = 0;  // J(G; H0)
  Vec xi;
  Mat PJ;
  int L = 0, m_y = 0, m_v = 0;
  int dim() const { return static_cast<int>(xi.size()); }
  double operator()(const Vec& theta) const { return c0 - 2.0 * xi.dot(theta) + theta.dot(PJ * theta); }
  double linear(const Vec& theta) const { return xi.dot(theta); }      // l_X(X;G)
  double quadratic(const Vec& theta) const { return theta.dot(PJ * theta); }
};
QuadraticMseForm quad_mse_form(const StateSpace& G, const EstimationSetup& setup, int L);

// FIR channel perturbation from packed coordinates (row-major entry, then tap).
lti::FIR fir_from_coords(const Vec& theta, int m_v, int m_y, int L);

struct ImprovementMetrics {
  double delta_Jo = 0;
  double delta_l_bar = 0, delta_q_bar = 0;
  double nu_a = 0, nu_c = 0, nu_beta = 0;
  double mu_I_lower = 0;
  bool applicable = false;  // requires delta_Jo < 0
};
ImprovementMetrics mu_I_lower(const StateSpace& G, const StateSpace& G_M, const EstimationSetup& setup);

// Smallest lambda with inf_H { J(G;H) - lambda J(G_M;H) } <= 0, bracketing
// certificate f(l - tol) > 0 >= f(l + tol).
double eta_RW(const StateSpace& G, const StateSpace& G_M, const EstimationSetup& setup, double tol = 0.01);
// The dual value f_RW(lambda) itself (exposed for oracle tests).
double f_RW(const StateSpace& G, const StateSpace& G_M, const EstimationSetup& setup, double lambda);

struct HinfImprovementBounds {
  double eta_P_lower = 0;  // lower bound on the largest pointwise improvement
  double eta_R_upper = 1;  // upper bound on the smallest error ratio
  int grid = 4096;         // resolution caveat
};
HinfImprovementBounds hinf_improvement_bounds(const StateSpace& G, const StateSpace& G_M,
                                              const EstimationSetup& setup, int grid = 4096);

struct MCResult {
  long long N_x = 0;
  long long i_N = 0;
  double i_fN = 0;
  double epsilon = 0, delta = 0;
  double min_ratio = std::numeric_limits<double>::infinity();
  uint64_t seed = 0;
  int L = 0;
};

// Hoeffding sample-size gate: N >= log(2/delta) / (2 eps^2).
long long required_samples(double epsilon, double delta);

MCResult mc_improvement(const StateSpace& G, const StateSpace& G_M, const EstimationSetup& setup, int L,
                        long long N_x, double epsilon, double delta, uint64_t seed, int threads = 1);

// Pointwise MSE pairs along a path through the FIR ball from the most
// favourable to the most unfavourable perturbation for G, middle = nominal.
struct PathProfile {
  std::vector<double> J_G, J_GM;
};
PathProfile path_profile(const StateSpace& G, const StateSpace& G_M, const EstimationSetup& setup, int L,
                         int n_points, uint64_t seed);

}  // namespace relest::eval
