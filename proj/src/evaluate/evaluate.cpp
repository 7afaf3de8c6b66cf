#include "relest/evaluate/evaluate.hpp"

#include <Eigen/Eigenvalues>
#include <thread>

#include "relest/lmi/solver.hpp"
#include "relest/lti/lyap.hpp"
#include "relest/lti/minreal.hpp"
#include "relest/lti/norms.hpp"
#include "relest/lti/two_sided.hpp"
#include "relest/synth/h2_lq.hpp"
#include "relest/synth/minimax.hpp"

namespace relest::eval {

using namespace lti;

Eigen::VectorXd sample_ball(int dim, double radius, CounterRng& rng) {
  Vec x(dim);
  double n2 = 0;
  do {
    for (int i = 0; i < dim; ++i) x(i) = rng.next_gaussian();
    n2 = x.squaredNorm();
  } while (n2 == 0);
  const double u = rng.next_uniform();
  return x * (radius * std::pow(u, 1.0 / dim) / std::sqrt(n2));
}

double mse(const StateSpace& G, const StateSpace& H, const EstimationSetup& setup) {
  StateSpace err = parallel(setup.H_I, scale(series(G, H), -1.0));
  StateSpace Ey = series(err, setup.phi_y->factor);
  double v = h2_inner(Ey, Ey);
  if (setup.phi_v) {
    StateSpace Gv = series(G, setup.phi_v->factor);
    v += h2_inner(Gv, Gv);
  }
  return v;
}

double worst_case_mse(const StateSpace& G, const EstimationSetup& setup) {
  if (setup.gamma == 0.0) return mse(G, setup.H0, setup);
  synth::H2BallContext ctx = synth::make_h2_context(setup);
  synth::LqRealization lq = synth::lq_data_for_estimator(setup, G);
  lmi::LMIProgram prog;
  auto P = prog.add_sym("Q", lq.n_aug);
  auto lambda = prog.add_scalar("lambda", 1e-12);
  synth::add_qjx_constraint(prog, lq, ctx, P, lambda, lmi::DecisionVar{}, 0, "QJa");
  prog.obj_scalar(lambda, setup.gamma * setup.gamma + 1e-9);
  prog.obj_entry(P, synth::x0_index(lq), synth::x0_index(lq), 1.0);
  lmi::SDPSolution sol = lmi::minimize(prog);
  if (!sol.usable()) throw std::runtime_error("worst_case_mse: SDP failed: " + sol.message);
  return sol.objective;
}

namespace {

// [[blkdiag(P, Msig(sig)) - [A B]^T P [A B] - extra_quad, [Ce De]^T],[[Ce De], I]] > 0
// with Msig affine in the sigma variables; minimizes sum_i w_i sig_i.
double hinf_eval_sdp(const StateSpace& F, const std::vector<int>& sig_sizes, const std::vector<double>& weights,
                     int e_rows, const Mat& quad_rows, int quad_weight_index_sigma,
                     std::vector<double>* sig_out) {
  // F: stacked realization; the last e_rows outputs are the error rows; the
  // leading rows (if any) enter through sigma_w * quad term (quad_rows).
  const int n = F.order();
  const int min = F.inputs();
  lmi::LMIProgram prog;
  std::vector<lmi::DecisionVar> sig;
  for (size_t i = 0; i < sig_sizes.size(); ++i)
    sig.push_back(prog.add_scalar("sigma_" + std::to_string(i), 1e-10));
  auto P = prog.add_sym("P", n);

  const int N = n + min + e_rows;
  lmi::AffineMatrixExpr e(N);
  Mat L = Mat::Zero(N, n);
  L.topRows(n).setIdentity();
  e.add_term(P, L, L.transpose());
  Mat AB(n, n + min);
  AB << F.A(), F.B();
  Mat Lq = Mat::Zero(N, n);
  Lq.topRows(n + min) = AB.transpose();
  e.add_term(P, -Lq, Lq.transpose());
  int off = n;
  for (size_t i = 0; i < sig_sizes.size(); ++i) {
    Mat Ls = Mat::Zero(N, sig_sizes[i]);
    Ls.block(off, 0, sig_sizes[i], sig_sizes[i]).setIdentity();
    e.add_term(sig[i], Ls, Ls.transpose());
    off += sig_sizes[i];
  }
  if (quad_rows.size() > 0) {
    // - sigma_w * quad_rows^T quad_rows over the [state | input] columns
    Mat Qr = Mat::Zero(static_cast<int>(quad_rows.rows()), N);
    Qr.leftCols(n + min) = quad_rows;
    e.add_term(sig[quad_weight_index_sigma], -Qr.transpose(), Qr);
  }
  Mat CD(e_rows, n + min);
  CD << F.C().bottomRows(e_rows), F.D().bottomRows(e_rows);
  e.constant.block(n + min, 0, e_rows, n + min) = CD;
  e.constant.block(0, n + min, n + min, e_rows) = CD.transpose();
  e.constant.bottomRightCorner(e_rows, e_rows).setIdentity();
  prog.add_strict(std::move(e), "hinf_eval");
  for (size_t i = 0; i < sig_sizes.size(); ++i) prog.obj_scalar(sig[i], weights[i]);
  lmi::SDPSolution sol = lmi::minimize(prog);
  if (!sol.usable()) throw std::runtime_error("hinf evaluation SDP failed: " + sol.message);
  if (sig_out) {
    sig_out->clear();
    for (auto& s : sig) sig_out->push_back(prog.scalar_value(s, sol.x));
  }
  return sol.objective;
}

}  // namespace

double nominal_hinf(const StateSpace& G, const EstimationSetup& setup) {
  synth::HinfNominalData d = synth::make_hinf_nominal_data(setup);
  StateSpace F = minimal_realization(parallel(d.H_Iy, scale(series(G, d.H_oz), -1.0)), 1e-9);
  return hinf_eval_sdp(F, {d.m_y, d.m_v}, {setup.gamma_y * setup.gamma_y, setup.gamma_v * setup.gamma_v},
                       d.m_e, Mat(), 0, nullptr);
}

double robust_hinf(const StateSpace& G, const EstimationSetup& setup) {
  synth::HinfRobustData d = synth::make_hinf_robust_data(setup);
  const int my = d.nom.m_y, mv = d.nom.m_v, me = d.nom.m_e;
  StateSpace WHa = hcat(d.W_Hy, StateSpace::zero(my, 2 * mv));
  StateSpace FGa = parallel(d.H_Ia, scale(series(G, d.H_oa), -1.0));
  StateSpace V = minimal_realization(vcat(WHa, FGa), 1e-9);
  // quad rows: gamma_H * [C_w D_w]
  Mat quad(my, V.order() + V.inputs());
  quad << V.C().topRows(my), V.D().topRows(my);
  quad *= setup.gamma_H;
  return hinf_eval_sdp(V, {my, mv, mv},
                       {setup.gamma_y * setup.gamma_y, setup.gamma_v * setup.gamma_v, 0.0}, me, quad, 2,
                       nullptr);
}

lti::FIR fir_from_coords(const Vec& theta, int m_v, int m_y, int L) {
  FIR f;
  f.taps.assign(L + 1, Mat::Zero(m_v, m_y));
  for (int r = 0; r < m_v; ++r)
    for (int c = 0; c < m_y; ++c)
      for (int k = 0; k <= L; ++k) f.taps[k](r, c) = theta(((r * m_y) + c) * (L + 1) + k);
  return f;
}

QuadraticMseForm quad_mse_form(const StateSpace& G, const EstimationSetup& setup, int L) {
  QuadraticMseForm q;
  q.L = L;
  q.m_y = setup.m_y();
  q.m_v = setup.m_v();
  const int taps = L + 1;
  const int dim = q.m_v * q.m_y * taps;
  q.c0 = mse(G, setup.H0, setup);
  q.xi = Vec::Zero(dim);
  q.PJ = Mat::Zero(dim, dim);

  StateSpace Wi = setup.W ? setup.W->inverse() : StateSpace::identity(q.m_y);
  StateSpace phi_y1 = minimal_realization(series(Wi, setup.phi_y->factor), 1e-10);
  StateSpace Bsys = minimal_realization(
      series(parallel(setup.H_I, scale(series(G, setup.H0), -1.0)), setup.phi_y->factor), 1e-10);

  std::vector<StateSpace> atoms;
  atoms.reserve(q.m_v * q.m_y);
  for (int r = 0; r < q.m_v; ++r)
    for (int c = 0; c < q.m_y; ++c)
      atoms.push_back(minimal_realization(series(G.col(r), phi_y1.row(c)), 1e-10));

  for (int a = 0; a < static_cast<int>(atoms.size()); ++a) {
    auto ms = lag_grams(atoms[a], Bsys, L);
    for (int k = 0; k <= L; ++k) q.xi(a * taps + k) = ms[k].trace();
    for (int b = a; b < static_cast<int>(atoms.size()); ++b) {
      auto mg = lag_grams(atoms[a], atoms[b], L);   // M(l) = sum_t A_t^T B_{t+l}
      auto mg2 = lag_grams(atoms[b], atoms[a], L);  // for the other sign of the lag
      for (int k = 0; k <= L; ++k)
        for (int kp = 0; kp <= L; ++kp) {
          // <A z^{-k}, B z^{-kp}> = sum_t tr(A_{t-k}^T B_{t-kp})
          const int l = k - kp;
          const double v = (l >= 0) ? mg[l].trace() : mg2[-l].trace();
          q.PJ(a * taps + k, b * taps + kp) = v;
          q.PJ(b * taps + kp, a * taps + k) = v;
        }
    }
  }
  q.PJ = 0.5 * (q.PJ + q.PJ.transpose()).eval();
  return q;
}

ImprovementMetrics mu_I_lower(const StateSpace& G, const StateSpace& G_M, const EstimationSetup& setup) {
  ImprovementMetrics m;
  m.delta_Jo = mse(G, setup.H0, setup) - mse(G_M, setup.H0, setup);
  if (m.delta_Jo >= 0) {
    m.applicable = false;
    return m;
  }
  m.applicable = true;
  StateSpace W = setup.weight_W();
  StateSpace Wi = W.inverse();
  StateSpace phi_y1 = minimal_realization(series(Wi, setup.phi_y->factor), 1e-10);
  auto X0 = [&](const StateSpace& g) {
    return minimal_realization(series(parallel(setup.H_I, scale(series(g, setup.H0), -1.0)), W), 1e-10);
  };
  TwoSided gamma_y1 = ts_mul(ts_causal(phi_y1), adjoint(phi_y1));
  TwoSided term = ts_sub(ts_mul(adjoint(G), ts_causal(X0(G))), ts_mul(adjoint(G_M), ts_causal(X0(G_M))));
  term = ts_mul(term, gamma_y1);
  m.delta_l_bar = setup.gamma * h2_norm(causal_part(term));

  TwoSided diff = ts_sub(ts_mul(adjoint(G), ts_causal(G)), ts_mul(adjoint(G_M), ts_causal(G_M)));
  const double lam = lambda_max_inf(diff, 4096);
  const double phinorm = hinf_norm(phi_y1, 1e-8);
  m.delta_q_bar = lam * phinorm * phinorm * setup.gamma * setup.gamma;

  m.nu_a = 0.5 * std::abs(m.delta_Jo) / m.delta_l_bar;
  m.nu_c = std::abs(m.delta_Jo) / m.delta_q_bar;
  const double rat = m.delta_l_bar / m.delta_q_bar;
  m.nu_beta = 0.5 * m.nu_c / std::sqrt(rat * rat + m.nu_c);
  m.mu_I_lower = std::min({2.0, 1.0 + m.nu_a, 1.0 + m.nu_beta, 2.0 * std::sqrt(m.nu_c)});
  return m;
}

double f_RW(const StateSpace& G, const StateSpace& G_M, const EstimationSetup& setup, double lambda) {
  synth::H2BallContext ctx = synth::make_h2_context(setup);
  auto block = [&](const StateSpace& g) {
    StateSpace GkF = kron_ss(g, ctx.Fy.transpose());
    StateSpace col = parallel(ctx.HIWFy, scale(series(g, parallel(ctx.H0WFy, scale(ctx.Fv, -1.0))), -1.0));
    return hcat(minimal_realization(GkF, 1e-9), scale(minimal_realization(rvec_ss(col), 1e-9), -1.0));
  };
  StateSpace V = minimal_realization(vcat(block(G), block(G_M)), 1e-8);
  const int n = V.order();
  const int mz = ctx.m_v * ctx.m_y;  // free perturbation coordinates
  const int rows = ctx.m_e * ctx.m_yz();

  // Augmented LQ data with the constant channel as an extra state.
  Mat A = Mat::Zero(n + 1, n + 1);
  A.topLeftCorner(n, n) = V.A();
  A.topRightCorner(n, 1) = V.B().rightCols(1);
  Mat B = Mat::Zero(n + 1, mz);
  B.topRows(n) = V.B().leftCols(mz);
  Mat Call(V.outputs(), n + 1 + mz);
  Call.leftCols(n) = V.C();
  Call.middleCols(n, 1) = V.D().rightCols(1);
  Call.rightCols(mz) = V.D().leftCols(mz);
  Mat RG = Call.topRows(rows);
  Mat RM = Call.bottomRows(rows);

  lmi::LMIProgram prog;
  auto P = prog.add_sym("P", n + 1);
  auto muv = prog.add_scalar("mu", 1e-12);
  const int N = n + 1 + mz;
  lmi::AffineMatrixExpr e(N);
  Mat SAB(n + 1, N);
  SAB << A, B;
  Mat Lt = Mat::Zero(N, n + 1);
  Lt.topRows(n + 1).setIdentity();
  e.add_term(P, SAB.transpose(), SAB);
  e.add_term(P, -Lt, Lt.transpose());
  Mat Lmu = Mat::Zero(N, mz);
  Lmu.bottomRows(mz).setIdentity();
  e.add_term(muv, Lmu, Lmu.transpose());
  e.constant = RG.transpose() * RG - lambda * (RM.transpose() * RM);
  prog.add_strict(std::move(e), "Q_LQ");
  prog.obj_scalar(muv, setup.gamma * setup.gamma + 1e-9);
  prog.obj_entry(P, n, n, -1.0);
  lmi::SDPSolution sol = lmi::minimize(prog);
  if (!sol.usable()) throw std::runtime_error("f_RW: SDP failed: " + sol.message);
  return -sol.objective;
}

double eta_RW(const StateSpace& G, const StateSpace& G_M, const EstimationSetup& setup, double tol) {
  // G responses equal -> the ratio is identically 1.
  bool same = true;
  for (int k = 0; k < 64 && same; ++k) {
    double th = 2.0 * M_PI * k / 64;
    if ((G.freq_response(th) - G_M.freq_response(th)).norm() > 1e-10) same = false;
  }
  if (same) return 1.0;
  double lo = 0.0, hi = 1.0;
  double fhi = f_RW(G, G_M, setup, hi);
  while (fhi > 0) {
    lo = hi;
    hi *= 2.0;
    if (hi > 1e3) throw std::runtime_error("eta_RW: no crossing below 1e3");
    fhi = f_RW(G, G_M, setup, hi);
  }
  while (hi - lo > tol * 0.5) {
    const double mid = 0.5 * (lo + hi);
    if (f_RW(G, G_M, setup, mid) > 0)
      lo = mid;
    else
      hi = mid;
  }
  const double lam = 0.5 * (lo + hi);
  if (!(f_RW(G, G_M, setup, std::max(0.0, lam - tol)) > 0 && f_RW(G, G_M, setup, lam + tol) <= 0))
    throw std::runtime_error("eta_RW: bracketing certificate failed");
  return lam;
}

HinfImprovementBounds hinf_improvement_bounds(const StateSpace& G, const StateSpace& G_M,
                                              const EstimationSetup& setup, int grid) {
  synth::HinfNominalData d = synth::make_hinf_nominal_data(setup);
  StateSpace E0 = minimal_realization(parallel(d.H_Iy, scale(series(G_M, d.H_oz), -1.0)), 1e-9);
  StateSpace E1 = minimal_realization(parallel(d.H_Iy, scale(series(G, d.H_oz), -1.0)), 1e-9);
  Mat Mg = Mat::Zero(d.m_z(), d.m_z());
  Mg.topLeftCorner(d.m_y, d.m_y) = setup.gamma_y * Mat::Identity(d.m_y, d.m_y);
  Mg.bottomRightCorner(d.m_v, d.m_v) = setup.gamma_v * Mat::Identity(d.m_v, d.m_v);
  std::vector<CMat> g0(grid), g1(grid);
  for (int k = 0; k < grid; ++k) {
    const double th = 2.0 * M_PI * k / grid;
    CMat e0 = E0.freq_response(th), e1 = E1.freq_response(th);
    g0[k] = Mg * (e0.adjoint() * e0) * Mg;
    g1[k] = Mg * (e1.adjoint() * e1) * Mg;
  }
  auto lmax = [&](double mu0, double mu1) {  // sup lambda_max(mu0*g0 - mu1*g1)
    double m = -std::numeric_limits<double>::infinity();
    for (int k = 0; k < grid; ++k) {
      CMat H = mu0 * g0[k] - mu1 * g1[k];
      Eigen::SelfAdjointEigenSolver<CMat> es(0.5 * (H + H.adjoint()), Eigen::EigenvaluesOnly);
      m = std::max(m, es.eigenvalues().maxCoeff());
    }
    return m;
  };
  HinfImprovementBounds out;
  out.grid = grid;
  out.eta_P_lower = std::max(0.0, lmax(1.0, 1.0));
  // rank-deficient spectra make lambda-bar >= 0 vacuous at the null space;
  // demand strict positivity at a level far below the data scale
  double scale0 = 0;
  for (int k = 0; k < grid; ++k) scale0 = std::max(scale0, g0[k].norm());
  const double tol_pos = 1e-10 * (1.0 + scale0);
  double lo = 0.0, hi = 1.0;
  while (lmax(hi, 1.0) < tol_pos && hi < 1e6) hi *= 2.0;
  for (int it = 0; it < 60; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (lmax(mid, 1.0) >= tol_pos)
      hi = mid;
    else
      lo = mid;
  }
  out.eta_R_upper = hi;
  return out;
}

long long required_samples(double epsilon, double delta) {
  return static_cast<long long>(std::ceil(std::log(2.0 / delta) / (2.0 * epsilon * epsilon)));
}

MCResult mc_improvement(const StateSpace& G, const StateSpace& G_M, const EstimationSetup& setup, int L,
                        long long N_x, double epsilon, double delta, uint64_t seed, int threads) {
  if (N_x < required_samples(epsilon, delta))
    throw std::invalid_argument("mc_improvement: N_x below the confidence-interval sample bound");
  QuadraticMseForm qG = quad_mse_form(G, setup, L);
  QuadraticMseForm qM = quad_mse_form(G_M, setup, L);
  const int dim = qG.dim();

  threads = std::max(1, threads);
  std::vector<long long> counts(threads, 0);
  std::vector<double> minr(threads, std::numeric_limits<double>::infinity());
  auto work = [&](int t) {
    long long cnt = 0;
    double mr = std::numeric_limits<double>::infinity();
    for (long long i = t; i < N_x; i += threads) {
      CounterRng rng(seed, static_cast<uint64_t>(i));
      Vec th = sample_ball(dim, setup.gamma, rng);
      const double j1 = qG(th), j2 = qM(th);
      if (j1 < j2) ++cnt;
      if (j2 > 0) mr = std::min(mr, j1 / j2);
    }
    counts[t] = cnt;
    minr[t] = mr;
  };
  if (threads == 1) {
    work(0);
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(work, t);
    for (auto& th : pool) th.join();
  }
  MCResult res;
  res.N_x = N_x;
  res.L = L;
  res.epsilon = epsilon;
  res.delta = delta;
  res.seed = seed;
  for (int t = 0; t < threads; ++t) {
    res.i_N += counts[t];
    res.min_ratio = std::min(res.min_ratio, minr[t]);
  }
  res.i_fN = static_cast<double>(res.i_N) / static_cast<double>(N_x);
  return res;
}

PathProfile path_profile(const StateSpace& G, const StateSpace& G_M, const EstimationSetup& setup, int L,
                         int n_points, uint64_t seed) {
  QuadraticMseForm qG = quad_mse_form(G, setup, L);
  QuadraticMseForm qM = quad_mse_form(G_M, setup, L);
  const int dim = qG.dim();
  // Delta(theta) = J(G_M) - J(G): maximize for the most favourable point,
  // minimize for the most unfavourable one.
  const Vec b = -2.0 * (qM.xi - qG.xi);
  const Mat Mq = qM.PJ - qG.PJ;
  auto delta = [&](const Vec& th) { return b.dot(th) + th.dot(Mq * th); };
  auto search = [&](double sign) {
    Vec best = Vec::Zero(dim);
    double bestv = 0;
    for (int i = 0; i < 10000; ++i) {
      CounterRng rng(seed ^ 0xABCDEF12345ULL, static_cast<uint64_t>(i));
      Vec th = sample_ball(dim, setup.gamma, rng);
      const double v = sign * delta(th);
      if (v > bestv) {
        bestv = v;
        best = th;
      }
    }
    // projected-gradient ascent refinement
    double step = 0.1 * setup.gamma;
    for (int it = 0; it < 400; ++it) {
      Vec gvec = sign * (b + 2.0 * (Mq * best));
      Vec cand = best + step * gvec / std::max(1e-300, gvec.norm());
      if (cand.norm() > setup.gamma) cand *= setup.gamma / cand.norm();
      if (sign * delta(cand) > bestv) {
        bestv = sign * delta(cand);
        best = cand;
      } else {
        step *= 0.5;
        if (step < 1e-12 * setup.gamma) break;
      }
    }
    return best;
  };
  Vec fav = search(+1.0), unf = search(-1.0);
  if (n_points < 1) n_points = 1;
  if (n_points % 2 == 0) ++n_points;
  PathProfile out;
  const int half = n_points / 2;
  for (int k = 0; k < n_points; ++k) {
    Vec th;
    if (k < half)
      th = fav * (1.0 - static_cast<double>(k) / half);
    else if (k == half)
      th = Vec::Zero(dim);
    else
      th = unf * (static_cast<double>(k - half) / half);
    out.J_G.push_back(qG(th));
    out.J_GM.push_back(qM(th));
  }
  return out;
}

}  // namespace relest::eval
