#include <doctest.h>

#include <random>

#include "relest/evaluate/evaluate.hpp"
#include "relest/lti/lyap.hpp"
#include "relest/lti/minreal.hpp"
#include "relest/lti/norms.hpp"
#include "relest/lti/wiener.hpp"
#include "relest/synth/minimax.hpp"
#include "test_helpers.hpp"

using namespace relest;
using namespace relest::lti;
using namespace relest::synth;
using relest::test::random_mat;

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

EstimationSetup static_scalar_setup(double h0, double sy, double sv, double gamma) {
  EstimationSetup s;
  s.kind = ProblemKind::H2Ball;
  s.H_I = StateSpace::identity(1);
  s.H0 = StateSpace::gain(Mat::Constant(1, 1, h0));
  s.phi_y = SpectralFactorForm::constant(Mat::Constant(1, 1, sy));
  s.phi_v = SpectralFactorForm::constant(Mat::Constant(1, 1, sv));
  s.gamma = gamma;
  return s;
}

// 1-D dual oracle for the static scalar problem: for fixed g,
// Jbar(g) = inf_{lam > lam0} lam*gamma^2 + phi_D(lam; g); minimized over g by
// nested golden search.
double static_prob1_oracle(double h0, double sy, double sv, double gamma) {
  auto phiD = [&](double lam, double g) {
    const double lam0 = g * g * sy * sy;
    const double a = sy * (1.0 - g * h0);
    return lam * gamma * gamma + a * a + (a * g * sy * gamma == 0 ? 0 : 0) +
           (lam > lam0 ? (a * a * g * g * sy * sy) / (lam - lam0) : 1e300) + g * g * sv * sv;
  };
  auto golden = [](auto f, double lo, double hi, int iters) {
    const double gr = (std::sqrt(5.0) - 1.0) / 2.0;
    double c = hi - gr * (hi - lo), d = lo + gr * (hi - lo);
    double fc = f(c), fd = f(d);
    for (int i = 0; i < iters; ++i) {
      if (fc < fd) {
        hi = d;
        d = c;
        fd = fc;
        c = hi - gr * (hi - lo);
        fc = f(c);
      } else {
        lo = c;
        c = d;
        fc = fd;
        d = lo + gr * (hi - lo);
        fd = f(d);
      }
    }
    return 0.5 * (lo + hi);
  };
  auto Jbar = [&](double g) {
    const double lam0 = g * g * sy * sy;
    double lam = golden([&](double l) { return phiD(l, g); }, lam0 + 1e-12, lam0 + 1e4, 200);
    return phiD(lam, g);
  };
  double gstar = golden(Jbar, -2.0, 2.0, 200);
  return Jbar(gstar);
}

}  // namespace

TEST_CASE("make_nominal_basis contains the Wiener solution") {
  EstimationSetup s = siso_setup();
  StateSpace Go = wiener_nominal(s);
  EstimatorBasis b = make_nominal_basis(s);
  Mat beta(1, b.n_G() + 1);
  beta << Go.C(), Go.D();
  CHECK(relest::test::grid_gap(b.realize(beta), Go) < 1e-8);

  // static scalar setup: basis reduces to the scalar gain class
  EstimationSetup st = static_scalar_setup(1.3, 2.0, 0.3, 0.0);
  EstimatorBasis bs = make_nominal_basis(st);
  CHECK(bs.n_G() == 0);
}

TEST_CASE("prob1 at gamma 0 equals the class-restricted nominal MSE") {
  EstimationSetup s = siso_setup();
  s.gamma = 0.0;
  EstimatorBasis b = make_nominal_basis(s);
  SynthesisReport rep = solve_prob1(s, b);
  // the Wiener solution is in the class, and is optimal for gamma = 0
  StateSpace Go = wiener_nominal(s);
  double Jnom = eval::mse(Go, s.H0, s);
  CHECK(rep.optimal_value == doctest::Approx(Jnom).epsilon(1e-6));
  CHECK(eval::mse(rep.estimator, s.H0, s) == doctest::Approx(Jnom).epsilon(1e-5));
}

TEST_CASE("prob1 static scalar matches the 1-D dual oracle") {
  const double h0 = 1.4, sy = 2.0, sv = 0.6, gamma = 0.5;
  EstimationSetup s = static_scalar_setup(h0, sy, sv, gamma);
  EstimatorBasis b = make_nominal_basis(s);
  SynthesisReport rep = solve_prob1(s, b);
  const double oracle = static_prob1_oracle(h0, sy, sv, gamma);
  CHECK(rep.optimal_value == doctest::Approx(oracle).epsilon(1e-4));
}

TEST_CASE("worst_case_mse: gamma 0, static closed form, monotonicity in gamma") {
  EstimationSetup s0 = static_scalar_setup(1.4, 2.0, 0.6, 0.0);
  StateSpace G = StateSpace::gain(Mat::Constant(1, 1, 0.55));
  CHECK(eval::worst_case_mse(G, s0) == doctest::Approx(eval::mse(G, s0.H0, s0)).epsilon(1e-6));

  // closed form: sup over |x| <= gamma of sy^2 (|1 - g h0| + |g| gamma)^2 + g^2 sv^2
  const double h0 = 1.4, sy = 2.0, sv = 0.6, gamma = 0.5, g = 0.55;
  EstimationSetup s = static_scalar_setup(h0, sy, sv, gamma);
  const double direct = sy * sy * std::pow(std::abs(1 - g * h0) + std::abs(g) * gamma, 2) + g * g * sv * sv;
  CHECK(eval::worst_case_mse(G, s) == doctest::Approx(direct).epsilon(1e-5));

  EstimationSetup s2 = s;
  s2.gamma = 0.8;
  CHECK(eval::worst_case_mse(G, s2) >= eval::worst_case_mse(G, s) - 1e-9);
}

TEST_CASE("prob1 SISO example reproduces the worked worst-case value") {
  EstimationSetup s = siso_setup();
  EstimatorBasis b = make_nominal_basis(s);
  SynthesisReport rep = solve_prob1(s, b);
  CHECK(rep.optimal_value == doctest::Approx(23.3569).epsilon(0.03));
  // certificate property on sampled in-ball models
  eval::QuadraticMseForm q = eval::quad_mse_form(rep.estimator, s, 6);
  eval::CounterRng rng(42, 0);
  double worst_seen = 0;
  for (int i = 0; i < 1000; ++i) {
    Vec th = eval::sample_ball(q.dim(), s.gamma, rng);
    worst_seen = std::max(worst_seen, q(th));
  }
  CHECK(worst_seen <= rep.optimal_value * (1 + 1e-4) + 1e-4);
}

TEST_CASE("quadratic MSE form agrees with direct evaluation") {
  EstimationSetup s = siso_setup();
  EstimatorBasis b = make_nominal_basis(s);
  Mat beta = Mat::Zero(1, b.n_G() + 1);
  beta(0, b.n_G()) = 0.4;
  beta(0, 0) = 0.15;
  StateSpace G = b.realize(beta);
  eval::QuadraticMseForm q = eval::quad_mse_form(G, s, 4);
  eval::CounterRng rng(7, 3);
  for (int t = 0; t < 5; ++t) {
    Vec th = eval::sample_ball(q.dim(), s.gamma, rng);
    FIR X = eval::fir_from_coords(th, 1, 1, 4);
    StateSpace H = parallel(s.H0, X.to_ss());  // W = 1
    CHECK(q(th) == doctest::Approx(eval::mse(G, H, s)).epsilon(1e-8));
  }
}

// ---- nominal H-infinity ----

namespace {

EstimationSetup hinf_setup() {
  EstimationSetup s;
  s.kind = ProblemKind::HinfNominal;
  s.H_I = StateSpace::identity(1);
  std::vector<double> taps = kH0Taps;
  for (auto& t : taps) t *= 0.5;
  s.H0 = fir_from_scalar_taps(taps).to_ss();
  s.gamma_y = 5.0;
  s.gamma_v = 0.5;
  return s;
}

}  // namespace

TEST_CASE("prob2: degenerate zero setup and radius scaling") {
  EstimationSetup z = hinf_setup();
  z.H_I = StateSpace::zero(1, 1);
  z.H0 = StateSpace::zero(1, 1);
  // H_oz has D = [0, 1]; G = 0 is feasible and optimal with value 0
  SynthesisReport rz = solve_prob2(z);
  CHECK(rz.optimal_value <= 1e-4);

  EstimationSetup s = hinf_setup();
  Prob2Program p1 = build_prob2d(s);
  auto sol1 = lmi::minimize(p1.prog);
  REQUIRE(sol1.usable());
  EstimationSetup s2 = s;
  s2.gamma_y *= 3.0;
  s2.gamma_v *= 3.0;
  Prob2Program p2 = build_prob2d(s2);
  auto sol2 = lmi::minimize(p2.prog);
  REQUIRE(sol2.usable());
  CHECK(sol2.objective == doctest::Approx(9.0 * sol1.objective).epsilon(2e-4));
}

TEST_CASE("reconstruct_P identities") {
  std::mt19937 rng(5);
  Mat T = random_mat(rng, 2, 2);
  Mat R_o = sym(T * T.transpose()) + 0.5 * Mat::Identity(2, 2);
  Mat S_o = R_o.inverse();
  Mat P = reconstruct_P(S_o, R_o);
  CHECK((P.topRightCorner(2, 2)).norm() < 1e-7);

  Mat Madd = random_mat(rng, 2, 2);
  Mat S2 = S_o + Madd * Madd.transpose();
  Mat P2 = reconstruct_P(S2, R_o);
  Eigen::SelfAdjointEigenSolver<Mat> es(P2);
  CHECK(es.eigenvalues().minCoeff() > 0);
  // top-left block of P2^{-1} equals R_o
  Mat P2inv = P2.inverse();
  CHECK((P2inv.topLeftCorner(2, 2) - R_o).norm() < 1e-8 * (1 + R_o.norm()));
}

TEST_CASE("prob2 SISO worked example stays below the reported bound") {
  EstimationSetup s = hinf_setup();
  SynthesisReport rep = solve_prob2(s);
  CHECK(rep.optimal_value <= 18.40);
  CHECK(rep.optimal_value > 10.0);  // sanity: nondegenerate
  CHECK(rep.estimator.is_stable());
  const double achieved = eval::nominal_hinf(rep.estimator, s);
  CHECK(achieved <= 18.3903 * 1.001 + 1e-6);
}

TEST_CASE("prob3 at gamma_H 0 matches prob2 on the reduced setup") {
  EstimationSetup s = hinf_setup();
  s.kind = ProblemKind::HinfRobust;
  s.gamma_H = 0.0;
  SynthesisReport r3 = solve_prob3(s);
  EstimationSetup s2 = s;
  s2.kind = ProblemKind::HinfNominal;
  Prob2Program p2 = build_prob2d(s2);
  auto sol2 = lmi::minimize(p2.prog);
  REQUIRE(sol2.usable());
  CHECK(r3.optimal_value == doctest::Approx(sol2.objective).epsilon(1e-3));
}

TEST_CASE("prob3 robust toy: value dominates sampled lower bounds") {
  EstimationSetup s = hinf_setup();
  s.kind = ProblemKind::HinfRobust;
  s.gamma_H = 0.2;
  SynthesisReport r3 = solve_prob3(s);
  CHECK(r3.estimator.is_stable());
  const double jinf_a = eval::robust_hinf(r3.estimator, s);
  CHECK(jinf_a <= r3.optimal_value * (1 + 1e-3) + 1e-6);

  // sampled lower bound: random FIR H_delta with ||H_delta W_H||_inf <= gamma_H
  // and FIR signals on the balls
  std::mt19937 rng(99);
  double best = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    FIR hd;
    for (int k = 0; k < 3; ++k) hd.taps.push_back(random_mat(rng, 1, 1));
    StateSpace Hd = hd.to_ss();
    double hn = lti::hinf_norm(Hd, 1e-6);
    Hd = scale(Hd, s.gamma_H / hn * 0.999);
    StateSpace H = parallel(s.H0, Hd);
    // error system rows for signals [ybar; vbar]: (H_I - G H) , -G
    StateSpace err = hcat(parallel(s.H_I, scale(series(r3.estimator, H), -1.0)), scale(r3.estimator, -1.0));
    // worst FIR signals on the balls via the Gramian of the error system
    FIR ys, vs;
    for (int k = 0; k < 4; ++k) {
      ys.taps.push_back(random_mat(rng, 1, 1));
      vs.taps.push_back(random_mat(rng, 1, 1));
    }
    double yn = std::sqrt(ys.h2_norm_sq()), vn = std::sqrt(vs.h2_norm_sq());
    StateSpace zsig = vcat(scale(ys.to_ss(), s.gamma_y / yn), scale(vs.to_ss(), s.gamma_v / vn));
    double val = lti::h2_inner(series(err, zsig), series(err, zsig));
    best = std::max(best, val);
  }
  CHECK(best <= r3.optimal_value * (1 + 1e-3) + 1e-6);
}
