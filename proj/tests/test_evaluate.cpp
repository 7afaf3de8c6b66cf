#include <doctest.h>

#include <random>

#include "relest/evaluate/evaluate.hpp"
#include "relest/lti/lyap.hpp"
#include "relest/lti/norms.hpp"
#include "relest/lti/wiener.hpp"
#include "relest/synth/average.hpp"
#include "relest/synth/minimax.hpp"
#include "test_helpers.hpp"

using namespace relest;
using namespace relest::lti;
using relest::synth::EstimatorBasis;

namespace {

const std::vector<double> kH0Taps = {2.0, -2.7926, 1.9276, -1.7426, 1.1186, -0.2778};

EstimationSetup siso_setup() {
  EstimationSetup s;
  s.kind = ProblemKind::H2Ball;
  s.H_I = StateSpace::identity(1);
  s.H0 = fir_from_scalar_taps(kH0Taps).to_ss();
  s.phi_y = SpectralFactorForm::constant(Mat::Constant(1, 1, 5.0));
  s.phi_v = SpectralFactorForm::constant(Mat::Constant(1, 1, 0.5));
  s.gamma = 0.3 * h2_norm(s.H0);
  return s;
}

// Measured improvement-segment length from the quadratic root analysis.
double segment_length(double dJo, double dl_abs, double dq) {
  auto p = [&](double b) { return dJo + 2.0 * b * dl_abs + b * b * dq; };
  if (std::abs(dq) < 1e-14) {
    if (dl_abs < 1e-14) return p(0) < 0 ? 2.0 : 0.0;
    const double root = -dJo / (2.0 * dl_abs);  // p < 0 for b < root
    return std::min(1.0, root) - (-1.0);
  }
  const double disc = dl_abs * dl_abs - dq * dJo;
  if (disc < 0) return dq > 0 ? 0.0 : 2.0;  // definite sign everywhere
  const double r1 = (-dl_abs - std::sqrt(disc)) / dq;
  const double r2 = (-dl_abs + std::sqrt(disc)) / dq;
  const double lo = std::min(r1, r2), hi = std::max(r1, r2);
  if (dq > 0) {
    return std::max(0.0, std::min(1.0, hi) - std::max(-1.0, lo));  // inside roots
  }
  // concave: negative outside [lo, hi]
  return 2.0 - std::max(0.0, std::min(1.0, hi) - std::max(-1.0, lo));
}

}  // namespace

TEST_CASE("mse: trivial limits and white-noise simulation oracle") {
  EstimationSetup s = siso_setup();
  StateSpace Gz = StateSpace::zero(1, 1);
  StateSpace HIy = series(s.H_I, s.phi_y->factor);
  CHECK(eval::mse(Gz, s.H0, s) == doctest::Approx(h2_inner(HIy, HIy)).epsilon(1e-12));

  // scalar invertible channel without noise: G = H_I / H -> zero error
  EstimationSetup inv;
  inv.H_I = StateSpace::identity(1);
  inv.H0 = StateSpace::gain(Mat::Constant(1, 1, 2.5));
  inv.phi_y = SpectralFactorForm::constant(Mat::Constant(1, 1, 1.7));
  CHECK(eval::mse(StateSpace::gain(Mat::Constant(1, 1, 1.0 / 2.5)), inv.H0, inv) ==
        doctest::Approx(0.0).epsilon(1e-14));

  // simulation oracle
  StateSpace G = wiener_nominal(s);
  const double exact = eval::mse(G, s.H0, s);
  StateSpace err = parallel(s.H_I, scale(series(G, s.H0), -1.0));
  StateSpace Fe = hcat(series(err, s.phi_y->factor), series(G, s.phi_v->factor));
  std::mt19937 rng(7);
  std::normal_distribution<double> gauss;
  Vec x = Vec::Zero(Fe.order());
  double acc = 0;
  const int N = 100000;
  for (int t = 0; t < N; ++t) {
    Vec u(Fe.inputs());
    for (int i = 0; i < u.size(); ++i) u(i) = gauss(rng);
    Vec e = Fe.C() * x + Fe.D() * u;
    acc += e.squaredNorm();
    x = Fe.A() * x + Fe.B() * u;
  }
  CHECK(std::abs(acc / N - exact) < 0.03 * exact);
}

TEST_CASE("sample_ball statistics") {
  eval::CounterRng rng(11, 0);
  // dim 1: uniform on [-g, g]: mean |x| = g/2, mean x^2 = g^2/3
  double m1 = 0, m2 = 0;
  const int N = 100000;
  for (int i = 0; i < N; ++i) {
    Vec x = eval::sample_ball(1, 2.0, rng);
    m1 += std::abs(x(0));
    m2 += x(0) * x(0);
  }
  CHECK(m1 / N == doctest::Approx(1.0).epsilon(0.02));
  CHECK(m2 / N == doctest::Approx(4.0 / 3.0).epsilon(0.02));

  // dim 2: E||x||^2 = g^2 * 2/4 = g^2/2
  double s2 = 0;
  for (int i = 0; i < N; ++i) s2 += eval::sample_ball(2, 1.5, rng).squaredNorm();
  CHECK(s2 / N == doctest::Approx(1.5 * 1.5 / 2.0).epsilon(0.02));

  // dim 7 moment: E||x||^2 = g^2 * 7/9, within 3 sigma
  double s7 = 0, s7sq = 0;
  for (int i = 0; i < N; ++i) {
    double v = eval::sample_ball(7, 1.0, rng).squaredNorm();
    s7 += v;
    s7sq += v * v;
  }
  const double mean = s7 / N, sd = std::sqrt((s7sq / N - mean * mean) / N);
  CHECK(std::abs(mean - 7.0 / 9.0) < 3 * sd + 1e-6);
}

TEST_CASE("eta_RW: identical estimators, scalar grid oracle") {
  EstimationSetup s = siso_setup();
  StateSpace G = wiener_nominal(s);
  CHECK(eval::eta_RW(G, G, s) == doctest::Approx(1.0));

  // static scalar oracle over the (x0, r) ball with r the off-DC budget
  EstimationSetup st;
  st.H_I = StateSpace::identity(1);
  st.H0 = StateSpace::gain(Mat::Constant(1, 1, 1.2));
  st.phi_y = SpectralFactorForm::constant(Mat::Constant(1, 1, 2.0));
  st.phi_v = SpectralFactorForm::constant(Mat::Constant(1, 1, 0.5));
  st.gamma = 0.6;
  const double g1 = 0.5, g2 = 0.75;
  StateSpace G1 = StateSpace::gain(Mat::Constant(1, 1, g1));
  StateSpace G2 = StateSpace::gain(Mat::Constant(1, 1, g2));
  auto J = [&](double g, double x0, double r2) {
    const double sy2 = 4.0, sv2 = 0.25, h0 = 1.2;
    return sy2 * std::pow(1 - g * (h0 + x0), 2) + g * g * sy2 * r2 + g * g * sv2;
  };
  auto f_oracle = [&](double lam) {
    double best = 1e300;
    const int K = 1200;
    for (int i = 0; i <= K; ++i) {
      double x0 = -st.gamma + 2 * st.gamma * i / K;
      double r2max = st.gamma * st.gamma - x0 * x0;
      for (double r2 : {0.0, r2max}) {  // objective affine in r2
        best = std::min(best, J(g1, x0, r2) - lam * J(g2, x0, r2));
      }
    }
    return best;
  };
  const double lam_hat = eval::eta_RW(G1, G2, st, 0.005);
  // oracle bisection on the same bracket
  double lo = 0, hi = 4;
  while (f_oracle(hi) > 0) hi *= 2;
  for (int it = 0; it < 60; ++it) {
    double mid = 0.5 * (lo + hi);
    (f_oracle(mid) > 0 ? lo : hi) = mid;
  }
  CHECK(lam_hat == doctest::Approx(0.5 * (lo + hi)).epsilon(0.02));
}

TEST_CASE("improvement metrics and bounds on the worked SISO pair") {
  EstimationSetup s = siso_setup();
  EstimatorBasis b = synth::make_nominal_basis(s);
  synth::SynthesisReport rm = synth::solve_prob1(s, b);
  synth::SynthesisReport r4 = synth::solve_prob4(s, b, 0.15, rm);

  eval::ImprovementMetrics m = eval::mu_I_lower(r4.estimator, rm.estimator, s);
  REQUIRE(m.applicable);
  CHECK(m.delta_Jo == doctest::Approx(-6.7966).epsilon(0.03));
  CHECK(m.mu_I_lower == doctest::Approx(1.4684).epsilon(0.02));
  CHECK(m.mu_I_lower >= 0);
  CHECK(m.mu_I_lower <= 2);

  // measured segment lengths dominate the bound for 200 random directions
  eval::QuadraticMseForm qG = eval::quad_mse_form(r4.estimator, s, 8);
  eval::QuadraticMseForm qM = eval::quad_mse_form(rm.estimator, s, 8);
  eval::CounterRng rng(5, 1);
  for (int i = 0; i < 200; ++i) {
    Vec th = eval::sample_ball(qG.dim(), 1.0, rng);
    th *= s.gamma / th.norm();  // on the sphere
    double dl = qG.linear(th) - qM.linear(th);
    if (dl > 0) {
      th = -th;
      dl = -dl;
    }
    const double dq = qG.quadratic(th) - qM.quadratic(th);
    const double len = segment_length(m.delta_Jo, std::abs(dl), dq);
    CHECK(len >= m.mu_I_lower - 1e-6);
  }

  // eta_RW on the worked pair: ~0.25 within the spec's bracket
  const double rw = eval::eta_RW(r4.estimator, rm.estimator, s, 0.01);
  CHECK(rw >= 0.20);
  CHECK(rw <= 0.30);

  // bracketing soundness on sampled models: J_G > (lam - tol) J_GM in-ball
  const double lam_lo = rw - 0.01;
  for (int i = 0; i < 200; ++i) {
    Vec th = eval::sample_ball(qG.dim(), s.gamma, rng);
    CHECK(qG(th) >= lam_lo * qM(th) - 1e-7);
  }

  // mu_I not applicable for identical estimators
  CHECK_FALSE(eval::mu_I_lower(rm.estimator, rm.estimator, s).applicable);
}

TEST_CASE("mc_improvement: trivial cases, determinism, CI consistency, sample gate") {
  EstimationSetup s = siso_setup();
  EstimatorBasis b = synth::make_nominal_basis(s);
  synth::SynthesisReport rm = synth::solve_prob1(s, b);
  synth::SynthesisReport r4 = synth::solve_prob4(s, b, 0.15, rm);

  CHECK(eval::required_samples(1e-2, 1e-2) >= 16505);
  CHECK_THROWS(eval::mc_improvement(r4.estimator, rm.estimator, s, 6, 100, 1e-2, 1e-2, 1));

  // identical estimators: strict improvement never happens
  eval::MCResult same = eval::mc_improvement(rm.estimator, rm.estimator, s, 6, 30000, 1e-2, 1e-1, 3);
  CHECK(same.i_fN == 0.0);

  // tiny ball with delta_Jo < 0: improvement everywhere
  EstimationSetup s_small = s;
  s_small.gamma = 1e-6;
  eval::MCResult all = eval::mc_improvement(r4.estimator, rm.estimator, s_small, 6, 30000, 1e-2, 1e-1, 3);
  CHECK(all.i_fN == 1.0);

  // worked SISO frequency, deterministic across runs and thread counts
  eval::MCResult mc1 = eval::mc_improvement(r4.estimator, rm.estimator, s, 6, 65000, 1e-2, 1e-2, 17, 1);
  eval::MCResult mc2 = eval::mc_improvement(r4.estimator, rm.estimator, s, 6, 65000, 1e-2, 1e-2, 17, 2);
  CHECK(mc1.i_N == mc2.i_N);
  CHECK(mc1.min_ratio == doctest::Approx(mc2.min_ratio).epsilon(1e-14));
  CHECK(mc1.i_fN >= 0.955);
  CHECK(mc1.i_fN <= 0.980);

  // seed-splitting consistency: two halves within 2 epsilon
  eval::MCResult h1 = eval::mc_improvement(r4.estimator, rm.estimator, s, 6, 32500, 1e-2, 1e-1, 101);
  eval::MCResult h2 = eval::mc_improvement(r4.estimator, rm.estimator, s, 6, 32500, 1e-2, 1e-1, 202);
  CHECK(std::abs(h1.i_fN - h2.i_fN) < 2e-2);

  // monotone over L per Table 2
  eval::MCResult l9 = eval::mc_improvement(r4.estimator, rm.estimator, s, 9, 65000, 1e-2, 1e-2, 17);
  eval::MCResult l13 = eval::mc_improvement(r4.estimator, rm.estimator, s, 13, 65000, 1e-2, 1e-2, 17);
  CHECK(l9.i_fN > mc1.i_fN);
  CHECK(l13.i_fN > l9.i_fN);
}

TEST_CASE("path_profile endpoints and shape") {
  EstimationSetup s = siso_setup();
  EstimatorBasis b = synth::make_nominal_basis(s);
  synth::SynthesisReport rm = synth::solve_prob1(s, b);
  synth::SynthesisReport r4 = synth::solve_prob4(s, b, 0.15, rm);

  eval::PathProfile single = eval::path_profile(r4.estimator, rm.estimator, s, 6, 1, 42);
  CHECK(single.J_G.size() == 1);
  CHECK(single.J_G[0] == doctest::Approx(eval::mse(r4.estimator, s.H0, s)).epsilon(1e-9));

  eval::PathProfile flat = eval::path_profile(rm.estimator, rm.estimator, s, 6, 11, 42);
  for (size_t i = 0; i < flat.J_G.size(); ++i)
    CHECK(flat.J_G[i] == doctest::Approx(flat.J_GM[i]).epsilon(1e-9));

  eval::PathProfile p = eval::path_profile(r4.estimator, rm.estimator, s, 6, 21, 42);
  const size_t mid = p.J_G.size() / 2;
  CHECK(p.J_G[mid] == doctest::Approx(eval::mse(r4.estimator, s.H0, s)).epsilon(1e-9));
  CHECK(p.J_G.front() < p.J_GM.front());  // most favourable end
  CHECK(p.J_G.back() > p.J_GM.back());    // most unfavourable end
}

TEST_CASE("hinf improvement bounds: trivial and worked values") {
  EstimationSetup s;
  s.kind = ProblemKind::HinfNominal;
  s.H_I = StateSpace::identity(1);
  std::vector<double> taps = kH0Taps;
  for (auto& t : taps) t *= 0.5;
  s.H0 = fir_from_scalar_taps(taps).to_ss();
  s.gamma_y = 5.0;
  s.gamma_v = 0.5;

  synth::SynthesisReport r2 = synth::solve_prob2(s);
  auto trivial = eval::hinf_improvement_bounds(r2.estimator, r2.estimator, s, 1024);
  CHECK(trivial.eta_P_lower == doctest::Approx(0.0).epsilon(1e-9));
  CHECK(trivial.eta_R_upper == doctest::Approx(1.0).epsilon(1e-6));

  synth::SynthesisReport r5 = synth::solve_prob5(s, 0.10, r2);
  auto bounds = eval::hinf_improvement_bounds(r5.estimator, r2.estimator, s, 4096);
  CHECK(bounds.eta_P_lower >= 8.0);
  CHECK(bounds.eta_R_upper <= 0.20);
}
