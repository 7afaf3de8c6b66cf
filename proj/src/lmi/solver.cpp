#include "relest/lmi/solver.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <cmath>
#include <iostream>
#include <sstream>

namespace relest::lmi {

namespace {

int svec_dim(int n) { return n * (n + 1) / 2; }

void svec_into(const Mat& M, Eigen::Ref<Vec> out) {
  const int n = static_cast<int>(M.rows());
  const double s2 = std::sqrt(2.0);
  int k = 0;
  for (int j = 0; j < n; ++j) {
    out(k++) = M(j, j);
    for (int i = j + 1; i < n; ++i) out(k++) = s2 * 0.5 * (M(i, j) + M(j, i));
  }
}

Mat unsvec(const Eigen::Ref<const Vec>& v, int n) {
  Mat M(n, n);
  const double inv_s2 = 1.0 / std::sqrt(2.0);
  int k = 0;
  for (int j = 0; j < n; ++j) {
    M(j, j) = v(k++);
    for (int i = j + 1; i < n; ++i) {
      M(i, j) = M(j, i) = inv_s2 * v(k++);
    }
  }
  return M;
}

struct Block {
  int n = 0;
  std::vector<int> cols;  // global packed-x indices; last one is the slack xi
  Mat G;                  // svec(n) x cols.size()
  Vec f0;
};

// Accumulates the derivative of one term w.r.t. one component into scratch.
void add_component(const Term& t, const VarInfo& info, int comp, Mat& scratch) {
  const int q = t.kron_q;
  auto outer = [&](int li, int rj, double w) {
    scratch.noalias() += (w * t.coeff) * (t.L.col(li) * t.R.row(rj));
  };
  if (info.kind == VarKind::Scalar) {
    scratch.noalias() += t.coeff * (t.L * t.R);
    return;
  }
  if (info.kind == VarKind::Rect) {
    int i = comp / info.cols, j = comp % info.cols;
    if (t.transpose_var) std::swap(i, j);
    for (int u = 0; u < q; ++u) outer(i * q + u, j * q + u, 1.0);
    return;
  }
  // Sym variable: basis E_ii or (E_ij + E_ji)/sqrt(2).
  int i, j;
  sym_component(info.rows, comp, i, j);
  if (i == j) {
    for (int u = 0; u < q; ++u) outer(i * q + u, i * q + u, 1.0);
  } else {
    const double w = 1.0 / std::sqrt(2.0);
    for (int u = 0; u < q; ++u) {
      outer(i * q + u, j * q + u, w);
      outer(j * q + u, i * q + u, w);
    }
  }
}

struct Scaling {
  Vec col;  // x_true = x_scaled / col
};

std::vector<Block> assemble(const LMIProgram& prog, int& m_total, Vec& c_full, double penalty) {
  const auto& vars = prog.vars();
  const int m = prog.dim_x();
  m_total = m + 1;  // + slack xi
  c_full = Vec::Zero(m_total);
  c_full.head(m) = prog.objective();
  c_full(m) = penalty;

  std::vector<Block> blocks;
  for (const auto& con : prog.constraints()) {
    const auto& e = con.expr;
    if (e.dim == 0) continue;  // vacuous constraint from a degenerate setup
    Block b;
    b.n = e.dim;
    // collect participating global columns
    std::vector<char> touched(m, 0);
    for (const auto& t : e.terms) {
      const VarInfo& info = vars.at(t.var);
      for (int k = 0; k < info.size; ++k) touched[info.offset + k] = 1;
    }
    for (int g = 0; g < m; ++g)
      if (touched[g]) b.cols.push_back(g);
    b.cols.push_back(m);  // xi
    b.G = Mat::Zero(svec_dim(b.n), static_cast<int>(b.cols.size()));
    std::vector<int> local(m, -1);
    for (size_t lc = 0; lc < b.cols.size() - 1; ++lc) local[b.cols[lc]] = static_cast<int>(lc);

    Mat scratch(b.n, b.n);
    std::vector<Mat> per_col(b.cols.size() - 1, Mat::Zero(b.n, b.n));
    for (const auto& t : e.terms) {
      const VarInfo& info = vars.at(t.var);
      // dimension audit
      const int q = t.kron_q;
      if (t.L.rows() != e.dim || t.R.cols() != e.dim)
        throw std::invalid_argument("LMI term outer dimension mismatch in constraint '" + con.name + "'");
      if (info.kind == VarKind::Scalar) {
        if (t.L.cols() != t.R.rows())
          throw std::invalid_argument("LMI scalar term inner dimension mismatch in constraint '" + con.name + "'");
      } else {
        const int vr = t.transpose_var ? info.cols : info.rows;
        const int vc = t.transpose_var ? info.rows : info.cols;
        if (t.L.cols() != vr * q || t.R.rows() != vc * q)
          throw std::invalid_argument("LMI term dimension mismatch in constraint '" + con.name + "'");
      }
      if (info.kind == VarKind::Scalar) {
        scratch.setZero();
        add_component(t, info, 0, scratch);
        per_col[local[info.offset]] += scratch;
      } else {
        for (int k = 0; k < info.size; ++k) {
          scratch.setZero();
          add_component(t, info, k, scratch);
          per_col[local[info.offset + k]] += scratch;
        }
      }
    }
    for (size_t lc = 0; lc + 1 < b.cols.size(); ++lc) {
      Mat S = 0.5 * (per_col[lc] + per_col[lc].transpose());
      svec_into(S, b.G.col(static_cast<int>(lc)));
    }
    svec_into(Mat::Identity(b.n, b.n), b.G.col(static_cast<int>(b.cols.size()) - 1));
    Mat F0 = 0.5 * (e.constant + e.constant.transpose()) - con.strict_margin * Mat::Identity(b.n, b.n);
    b.f0 = Vec(svec_dim(b.n));
    svec_into(F0, b.f0);
    blocks.push_back(std::move(b));
  }
  // xi >= 0 as its own 1x1 block (only the xi column). Its position is
  // recorded implicitly: it is the first 1x1 block with a single column.
  Block bx;
  bx.n = 1;
  bx.cols = {m};
  bx.G = Mat::Ones(1, 1);
  bx.f0 = Vec::Zero(1);
  blocks.push_back(std::move(bx));

  // scalar lower bounds x - lb (+ xi) >= 0
  for (int v = 0; v < prog.num_vars(); ++v) {
    const VarInfo& info = vars[v];
    if (info.kind == VarKind::Scalar && info.lower) {
      Block bb;
      bb.n = 1;
      bb.cols = {info.offset, m};
      bb.G = Mat::Ones(1, 2);
      bb.f0 = Vec::Constant(1, -*info.lower);
      blocks.push_back(std::move(bb));
    }
  }
  return blocks;
}

// Equilibration: scale each block to unit data norm and each packed variable
// column to unit norm across blocks. x_true = x_scaled / col_scale.
Scaling equilibrate(std::vector<Block>& blocks, Vec& c, int m) {
  for (auto& b : blocks) {
    double bn = std::max(b.f0.template lpNorm<Eigen::Infinity>(),
                         b.G.cwiseAbs().maxCoeff());
    bn = std::max(bn, 1e-8);
    b.f0 /= bn;
    b.G /= bn;
  }
  Scaling sc;
  sc.col = Vec::Ones(m);
  for (int i = 0; i < m; ++i) {
    double s = 0;
    for (const auto& b : blocks)
      for (size_t lc = 0; lc < b.cols.size(); ++lc)
        if (b.cols[lc] == i) s = std::max(s, b.G.col(static_cast<int>(lc)).template lpNorm<Eigen::Infinity>());
    if (s <= 0) s = 1.0;
    sc.col(i) = s;
  }
  for (auto& b : blocks)
    for (size_t lc = 0; lc < b.cols.size(); ++lc) b.G.col(static_cast<int>(lc)) /= sc.col(b.cols[lc]);
  for (int i = 0; i < m; ++i) c(i) /= sc.col(i);
  return sc;
}

Mat block_value(const Block& b, const Vec& x_full) {
  Vec v = b.f0;
  for (size_t lc = 0; lc < b.cols.size(); ++lc) v += b.G.col(static_cast<int>(lc)) * x_full(b.cols[lc]);
  return unsvec(v, b.n);
}

double min_eig(const Mat& S) {
  if (S.rows() == 0) return std::numeric_limits<double>::infinity();
  if (S.rows() == 1) return S(0, 0);
  Eigen::SelfAdjointEigenSolver<Mat> es(S, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

// Largest alpha with X + alpha D > 0 (X > 0), via lambda_min(L^-1 D L^-T).
double max_step(const Mat& X, const Mat& D) {
  Eigen::LLT<Mat> llt(X);
  if (llt.info() != Eigen::Success) {
    Mat Xj = X;
    Xj.diagonal().array() += 1e-12 * (1.0 + X.trace() / X.rows());
    llt.compute(Xj);
    if (llt.info() != Eigen::Success) return 0.0;
  }
  Mat M1 = llt.matrixL().solve(D);
  Mat M2 = llt.matrixL().solve(M1.transpose().eval());
  Mat M = M2.transpose();
  const double lmin = min_eig(0.5 * (M + M.transpose()));
  if (lmin >= -1e-14) return 1e30;
  return -1.0 / lmin;
}

// NT scaling V with V X V = Z, and its application helpers.
Mat nt_scaling(const Mat& X, const Mat& Zin) {
  Mat Z = Zin;
  Eigen::LLT<Mat> lz(Z);
  if (lz.info() != Eigen::Success) {
    // nudge away from the boundary; the magnitude is far below solver tolerances
    Z.diagonal().array() += 1e-13 * (1.0 + Z.trace() / Z.rows());
    lz.compute(Z);
    if (lz.info() != Eigen::Success) throw std::runtime_error("sdp: Z lost definiteness");
  }
  Mat Lz = lz.matrixL();
  Mat M = Lz.transpose() * X * Lz;
  Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (M + M.transpose()));
  Vec d = es.eigenvalues();
  const double floor_ev = 1e-15 * std::max(1.0, d.cwiseAbs().maxCoeff());
  if (d.maxCoeff() <= 0) throw std::runtime_error("sdp: scaling matrix lost definiteness");
  d = d.cwiseMax(floor_ev);
  Mat Mi = es.eigenvectors() * d.cwiseInverse().cwiseSqrt().asDiagonal() * es.eigenvectors().transpose();
  return Lz * Mi * Lz.transpose();
}

}  // namespace

namespace {

SDPSolution minimize_once(const LMIProgram& prog, const SolverOptions& opts, double K, bool* dual_capped) {
  *dual_capped = false;

  int m = 0;
  Vec c;
  std::vector<Block> blocks = assemble(prog, m, c, K);
  Scaling sc = equilibrate(blocks, c, m);
  const int nb = static_cast<int>(blocks.size());
  int xi_block = -1;
  for (int k = 0; k < nb; ++k)
    if (blocks[k].n == 1 && blocks[k].cols.size() == 1 && blocks[k].cols[0] == m - 1) xi_block = k;

  // initial point: x = 0, xi large enough for strict feasibility (xi has been
  // column-scaled, but its block columns are G-scaled identities, so compute
  // in scaled terms directly)
  Vec x = Vec::Zero(m);
  double xi0 = 1.0;
  {
    Vec z = Vec::Zero(m);
    for (const auto& b : blocks) {
      const int lxi = static_cast<int>(b.cols.size()) - 1;
      if (b.cols[lxi] != m - 1) continue;
      const double gd = b.G.col(lxi).cwiseAbs().maxCoeff();
      if (gd <= 0) continue;
      xi0 = std::max(xi0, (1.1 * (-min_eig(block_value(b, z))) + 0.1) / gd);
    }
  }
  x(m - 1) = xi0;

  std::vector<Mat> X(nb), Z(nb);
  int ncone = 0;
  for (int k = 0; k < nb; ++k) ncone += blocks[k].n;
  const double z0 = std::max(1.0, K / ncone);
  for (int k = 0; k < nb; ++k) {
    X[k] = block_value(blocks[k], x);
    Z[k] = z0 * Mat::Identity(blocks[k].n, blocks[k].n);
  }

  SDPSolution out;
  auto finish = [&](SolveStatus st, const std::string& msg, int iters) {
    out.status = st;
    std::string msg_used = msg;
    out.x = x.head(m - 1).cwiseQuotient(sc.col.head(m - 1));
    out.objective = prog.objective().dot(out.x);
    double gap = 0;
    for (int k = 0; k < nb; ++k) gap += (X[k].cwiseProduct(Z[k])).sum();
    out.gap = gap;
    out.dual_bound = out.objective - std::abs(gap);
    double viol = x(m - 1) / sc.col(m - 1);  // X = F(x) + xi I exactly (unscaled)
    // also account for any numerical asymmetry
    out.max_violation = std::max(0.0, viol);
    Vec r = c;
    for (int k = 0; k < nb; ++k) {
      Vec zk(svec_dim(blocks[k].n));
      svec_into(Z[k], zk);
      Vec atz = blocks[k].G.transpose() * zk;
      for (size_t lc = 0; lc < blocks[k].cols.size(); ++lc) r(blocks[k].cols[lc]) -= atz(static_cast<int>(lc));
    }
    out.dual_residual = r.cwiseAbs().maxCoeff();
    out.iterations = iters;
    // a stalled run that still meets the accuracy contract counts as solved
    if (st == SolveStatus::MaxIter && out.gap >= 0 && out.gap <= 1e-8 * (1.0 + std::abs(out.objective)) &&
        out.max_violation <= 1e-8 && x(m - 1) <= 1e-6 * (1.0 + xi0)) {
      out.status = SolveStatus::Optimal;
      msg_used = msg + " (within tolerance)";
    }
    out.message = msg_used;
    // The slack's own dual ~ 0 while the slack itself vanished: the penalty
    // capped the dual norm and the primal may have stalled short of optimal.
    if (opts.log)
      std::cerr << " [cap?] xi_block " << xi_block << " zxi " << (xi_block >= 0 ? Z[xi_block](0, 0) : -1)
                << " z0 " << z0 << " xi " << x(m - 1) << " xi0 " << xi0 << "\n";
    if (xi_block >= 0 && Z[xi_block](0, 0) < 1e-7 * z0 && x(m - 1) < 1e-6 * (1.0 + xi0))
      *dual_capped = true;
    return out;
  };

  double prev_gap = std::numeric_limits<double>::infinity();
  int stall = 0;
  int dual_restarts = 0;
  for (int iter = 0; iter < opts.max_iter; ++iter) {
    // residual of <F_i, Z> = c_i
    Vec r = c;
    for (int k = 0; k < nb; ++k) {
      Vec zk(svec_dim(blocks[k].n));
      svec_into(Z[k], zk);
      Vec atz = blocks[k].G.transpose() * zk;
      for (size_t lc = 0; lc < blocks[k].cols.size(); ++lc) r(blocks[k].cols[lc]) -= atz(static_cast<int>(lc));
    }
    double gap = 0;
    for (int k = 0; k < nb; ++k) gap += (X[k].cwiseProduct(Z[k])).sum();
    const double mu = gap / ncone;
    const double pobj = c.dot(x);
    const double rel_gap = gap / (1.0 + std::abs(pobj));
    // scale the dual residual by the true objective, not the feasibility penalty
    const double cs = (m > 1) ? c.head(m - 1).cwiseAbs().maxCoeff() : 0.0;
    const double rel_res = std::max(r.head(m - 1).cwiseAbs().maxCoeff() / (1.0 + cs),
                                    std::abs(r(m - 1)) / (1.0 + std::abs(c(m - 1))));

    if (opts.log) {
      std::cerr << "  it " << iter << " gap " << gap << " res " << rel_res << " xi " << x(m - 1)
                << " mu " << mu << " rhead "
                << r.head(m - 1).cwiseAbs().maxCoeff() << " ztr";
      {
        double ztot = 0;
        for (int k = 0; k < nb; ++k) ztot += Z[k].trace();
        std::cerr << " " << ztot << " zxi " << Z[nb - 1 - (int)0](0, 0);
      }
      std::cerr << "\n";
    }

    if (rel_gap < opts.tol && rel_res < 10 * opts.tol) {
      if (x(m - 1) > 1e-6 * (1.0 + xi0) && x(m - 1) * K > 1e-4 * (1.0 + std::abs(pobj)))
        return finish(SolveStatus::Infeasible, "slack did not vanish", iter);
      return finish(SolveStatus::Optimal, "converged", iter);
    }
    if (x.head(m - 1).cwiseAbs().maxCoeff() > 1e13)
      return finish(SolveStatus::Unbounded, "iterates diverged", iter);
    if (gap < prev_gap * 0.9999)
      stall = 0;
    else
      ++stall;
    if (stall > 40) return finish(SolveStatus::MaxIter, "progress stalled", iter);
    prev_gap = std::min(prev_gap, gap);
    const bool force_center = (stall > 0 && stall % 8 == 0);

    // NT scalings and Schur complement H = sum G^T (V . V) G
    std::vector<Mat> V(nb);
    Mat H = Mat::Zero(m, m);
    std::vector<Mat> Gt(nb);  // svec(V F_i V) columns
    Vec g = Vec::Zero(m);     // <F_i, X^{-1}>
    for (int k = 0; k < nb; ++k) {
      V[k] = nt_scaling(X[k], Z[k]);
      const Block& b = blocks[k];
      const int nc = static_cast<int>(b.cols.size());
      Gt[k] = Mat(svec_dim(b.n), nc);
      for (int lc = 0; lc < nc; ++lc) {
        Mat Fi = unsvec(b.G.col(lc), b.n);
        Mat S = V[k] * Fi * V[k];
        svec_into(0.5 * (S + S.transpose()), Gt[k].col(lc));
      }
      Mat Hk = b.G.transpose() * Gt[k];
      for (int a = 0; a < nc; ++a)
        for (int bcol = 0; bcol < nc; ++bcol) H(b.cols[a], b.cols[bcol]) += Hk(a, bcol);
      // g entries
      Eigen::LLT<Mat> lx(X[k]);
      Mat Xinv = lx.solve(Mat::Identity(b.n, b.n));
      Vec xv(svec_dim(b.n));
      svec_into(0.5 * (Xinv + Xinv.transpose()), xv);
      Vec gk = b.G.transpose() * xv;
      for (int a = 0; a < nc; ++a) g(b.cols[a]) += gk(a);
    }
    Mat Hs = 0.5 * (H + H.transpose());
    H = Hs;
    // multiplicative ridge: keeps the perturbation proportional to each entry
    H.diagonal().array() = H.diagonal().array() * (1.0 + 1e-14) + 1e-300;
    Eigen::LDLT<Mat> Hf(H);
    if (Hf.info() != Eigen::Success) return finish(SolveStatus::MaxIter, "Schur factorization failed", iter);
    auto refine_solve = [&](const Vec& rhs) {
      Vec sol_v = Hf.solve(rhs);
      for (int rep = 0; rep < 2; ++rep) {
        Vec resid = rhs - H * sol_v;
        sol_v += Hf.solve(resid);
      }
      if (opts.log) {
        const double hres = (rhs - H * sol_v).norm() / (1.0 + rhs.norm());
        if (hres > 1e-10) std::cerr << "    [H] solve relres " << hres << "\n";
      }
      return sol_v;
    };

    // VEV[k] holds V_k E_k V_k for the Mehrotra correction (empty -> none).
    auto solve_direction = [&](double sigma_mu, const std::vector<Mat>& VEV, std::vector<Mat>& dX,
                               std::vector<Mat>& dZ, Vec& dx) {
      Vec corr = Vec::Zero(m);
      if (!VEV.empty()) {
        for (int k = 0; k < nb; ++k) {
          Vec sv(svec_dim(blocks[k].n));
          svec_into(VEV[k], sv);
          Vec ck = blocks[k].G.transpose() * sv;
          for (size_t a = 0; a < blocks[k].cols.size(); ++a) corr(blocks[k].cols[a]) += ck(static_cast<int>(a));
        }
      }
      Vec rhs = sigma_mu * g - c - corr;
      dx = refine_solve(rhs);
      dX.assign(nb, Mat());
      dZ.assign(nb, Mat());
      for (int k = 0; k < nb; ++k) {
        const Block& b = blocks[k];
        const int nc = static_cast<int>(b.cols.size());
        Vec dloc(nc);
        for (int a = 0; a < nc; ++a) dloc(a) = dx(b.cols[a]);
        dX[k] = unsvec(Vec(b.G * dloc), b.n);
        Eigen::LLT<Mat> lx(X[k]);
        Mat Xinv = lx.solve(Mat::Identity(b.n, b.n));
        dZ[k] = sigma_mu * 0.5 * (Xinv + Xinv.transpose()) - Z[k] - unsvec(Vec(Gt[k] * dloc), b.n);
        if (!VEV.empty()) dZ[k] -= VEV[k];
      }
    };

    // predictor
    std::vector<Mat> dXa, dZa;
    Vec dxa;
    solve_direction(0.0, {}, dXa, dZa, dxa);
    double ap = 1e30, ad = 1e30;
    for (int k = 0; k < nb; ++k) {
      ap = std::min(ap, max_step(X[k], dXa[k]));
      ad = std::min(ad, max_step(Z[k], dZa[k]));
    }
    if (ad <= 0.0 && dual_restarts < 5) {
      // dual iterate pinned to the boundary: push it back inside and retry
      ++dual_restarts;
      for (int k = 0; k < nb; ++k)
        Z[k].diagonal().array() += 1e-8 * (1.0 + Z[k].trace() / blocks[k].n) + mu / (1.0 + Z[k].trace());
      continue;
    }
    const double tau = 0.98;
    double ap_t = std::min(1.0, tau * ap), ad_t = std::min(1.0, tau * ad);
    double gap_aff = 0;
    for (int k = 0; k < nb; ++k)
      gap_aff += ((X[k] + ap_t * dXa[k]).cwiseProduct(Z[k] + ad_t * dZa[k])).sum();
    double sigma = std::pow(std::max(gap_aff, 0.0) / gap, 3.0);
    sigma = std::min(0.99, std::max(1e-6, sigma));
    if (force_center) sigma = 1.0;

    // corrector with second-order term sym(dXa dZa Z^{-1}), scaled into VEV form
    std::vector<Mat> VEV(nb);
    for (int k = 0; k < nb; ++k) {
      Eigen::LLT<Mat> lzk(Z[k]);
      Mat E0 = dXa[k] * lzk.solve(dZa[k].transpose()).transpose();
      Mat E = 0.5 * (E0 + E0.transpose());
      Mat S = V[k] * E * V[k];
      VEV[k] = 0.5 * (S + S.transpose());
    }
    std::vector<Mat> dX, dZ;
    Vec dx;
    solve_direction(sigma * mu, VEV, dX, dZ, dx);
    double ap2 = 1e30, ad2 = 1e30;
    for (int k = 0; k < nb; ++k) {
      ap2 = std::min(ap2, max_step(X[k], dX[k]));
      ad2 = std::min(ad2, max_step(Z[k], dZ[k]));
    }
    if (std::min(std::min(ap2, ad2), 1.0) < 0.7 * std::min(std::min(ap, ad), 1.0)) {
      // corrector hurt; fall back to a pure centering-damped predictor
      solve_direction(sigma * mu, {}, dX, dZ, dx);
      ap2 = ad2 = 1e30;
      for (int k = 0; k < nb; ++k) {
        ap2 = std::min(ap2, max_step(X[k], dX[k]));
        ad2 = std::min(ad2, max_step(Z[k], dZ[k]));
      }
    }
    double alpha_p = std::min(1.0, tau * ap2);
    double alpha_d = std::min(1.0, tau * ad2);
    if (opts.log)
      std::cerr << "    sigma " << sigma << " ap " << ap << " ad " << ad << " ap2 " << ap2 << " ad2 " << ad2 << "\n";
    // verified steps: back off until strict definiteness survives rounding
    auto pd_ok = [&](double apv, double adv) {
      Vec xt = x + apv * dx;
      for (int k = 0; k < nb; ++k) {
        Mat Xc = block_value(blocks[k], xt);
        Mat Zc = 0.5 * ((Z[k] + adv * dZ[k]) + (Z[k] + adv * dZ[k]).transpose()).eval();
        const double ex = min_eig(Xc), ez = min_eig(Zc);
        if (!(ex > 0) || !(ez > 0)) return false;
        Eigen::LLT<Mat> lx(Xc), lz(Zc);
        if (lx.info() != Eigen::Success || lz.info() != Eigen::Success) return false;
      }
      return true;
    };
    int guard = 0;
    while (!pd_ok(alpha_p, alpha_d) && guard++ < 40) {
      alpha_p *= 0.7;
      alpha_d *= 0.7;
    }
    if (guard >= 40) return finish(SolveStatus::MaxIter, "no admissible step", iter);
    x += alpha_p * dx;
    for (int k = 0; k < nb; ++k) {
      X[k] = block_value(blocks[k], x);
      Mat Znew = Z[k] + alpha_d * dZ[k];
      Z[k] = 0.5 * (Znew + Znew.transpose());
    }
  }
  return finish(SolveStatus::MaxIter, "iteration cap reached", opts.max_iter);
}

}  // namespace

SDPSolution minimize(const LMIProgram& prog, const SolverOptions& opts) {
  prog.check_well_formed();
  const double cscale = prog.objective().size() ? prog.objective().cwiseAbs().maxCoeff() : 0.0;
  double K = opts.feas_penalty > 0 ? opts.feas_penalty : 1e3 * (1.0 + cscale);
  SDPSolution best;
  bool have_best = false;
  for (int attempt = 0; attempt < 4; ++attempt) {
    bool capped = false;
    SDPSolution sol = minimize_once(prog, opts, K, &capped);
    if (opts.log)
      std::cerr << " attempt " << attempt << " K " << K << " obj " << sol.objective << " status "
                << static_cast<int>(sol.status) << " capped " << capped << "\n";
    const bool better = !have_best || (sol.status == SolveStatus::Optimal && best.status != SolveStatus::Optimal) ||
                        (sol.status == best.status && sol.objective < best.objective);
    if (better) {
      best = sol;
      have_best = true;
    }
    if (!capped) return best;
    K *= 100.0;
  }
  return best;
}

FeasiblePointResult feasible_point(const LMIProgram& prog, double margin_cap, const SolverOptions& opts) {
  // Rebuild: same variables, new margin variable t, objective max t.
  LMIProgram fresh;
  std::vector<DecisionVar> map;
  for (const auto& v : prog.vars()) {
    if (v.kind == VarKind::Scalar)
      map.push_back(fresh.add_scalar(v.name, v.lower));
    else if (v.kind == VarKind::Rect)
      map.push_back(fresh.add_rect(v.name, v.rows, v.cols));
    else
      map.push_back(fresh.add_sym(v.name, v.rows));
  }
  DecisionVar t = fresh.add_scalar("margin_t");
  for (const auto& con : prog.constraints()) {
    AffineMatrixExpr e = con.expr;
    // expr - t I >= 0
    Mat I = Mat::Identity(e.dim, e.dim);
    e.add_scalar_term(t, I, -1.0);
    fresh.add_constraint(std::move(e), 0.0, con.name);
  }
  // t <= margin_cap
  AffineMatrixExpr cap(1);
  cap.constant(0, 0) = margin_cap;
  cap.add_scalar_term(t, Mat::Constant(1, 1, -1.0));
  fresh.add_constraint(std::move(cap), 0.0, "margin_cap");
  fresh.obj_scalar(t, -1.0);  // maximize t
  // box every original component so the margin supremum is attained
  const double box = 1e6;
  for (size_t v = 0; v < prog.vars().size(); ++v) {
    const VarInfo& info = prog.vars()[v];
    for (int compi = 0; compi < info.rows; ++compi)
      for (int compj = 0; compj < (info.kind == VarKind::Scalar ? 1 : info.cols); ++compj) {
        if (info.kind == VarKind::Sym && compj > compi) continue;
        AffineMatrixExpr lo(1), hi(1);
        lo.constant(0, 0) = box;
        hi.constant(0, 0) = box;
        if (info.kind == VarKind::Scalar) {
          lo.add_scalar_term(map[v], Mat::Identity(1, 1), 1.0);
          hi.add_scalar_term(map[v], Mat::Identity(1, 1), -1.0);
        } else {
          Mat L = Mat::Zero(1, info.rows), R = Mat::Zero(info.cols, 1);
          L(0, compi) = 1;
          R(compj, 0) = 1;
          lo.add_term(map[v], L, R, false, 1, 1.0);
          hi.add_term(map[v], L, R, false, 1, -1.0);
        }
        fresh.add_constraint(std::move(lo));
        fresh.add_constraint(std::move(hi));
      }
  }

  SDPSolution sol = minimize(fresh, opts);
  FeasiblePointResult res;
  res.margin = sol.x.size() ? fresh.scalar_value(t, sol.x) : -1.0;
  res.sol = std::move(sol);
  res.sol.x.conservativeResize(prog.dim_x());  // strip t
  if (res.sol.status == SolveStatus::Optimal && res.margin <= 0)
    res.sol.status = SolveStatus::Infeasible;
  return res;
}

std::string LMIProgram::dump_sdpa() const {
  // SDPA sparse style: min c^T x s.t. sum_i x_i F_i - F0 >= 0 per block,
  // so F0^{dump} = -constant. Entries are upper-triangle nonzeros.
  std::ostringstream os;
  os << dim_x_ << " = mdim\n";
  os << constraints_.size() << " = nblocks\n";
  for (const auto& c : constraints_) os << c.expr.dim << " ";
  os << "\n";
  for (int i = 0; i < dim_x_; ++i) os << c_(i) << (i + 1 < dim_x_ ? " " : "\n");
  auto emit = [&os](int mat, int blk, const Mat& M) {
    for (int i = 0; i < M.rows(); ++i)
      for (int j = i; j < M.cols(); ++j) {
        const double v = 0.5 * (M(i, j) + M(j, i));
        if (std::abs(v) > 0) os << mat << " " << blk << " " << i + 1 << " " << j + 1 << " " << v << "\n";
      }
  };
  for (size_t k = 0; k < constraints_.size(); ++k) {
    const auto& e = constraints_[k].expr;
    Mat F0 = -(e.constant - constraints_[k].strict_margin * Mat::Identity(e.dim, e.dim));
    emit(0, static_cast<int>(k) + 1, F0);
  }
  // per-component matrices
  for (int v = 0; v < num_vars(); ++v) {
    const VarInfo& info = vars_[v];
    for (int comp = 0; comp < info.size; ++comp) {
      const int gidx = info.offset + comp;
      for (size_t k = 0; k < constraints_.size(); ++k) {
        const auto& e = constraints_[k].expr;
        Mat acc = Mat::Zero(e.dim, e.dim);
        for (const auto& t : e.terms)
          if (t.var == v) add_component(t, info, comp, acc);
        acc = 0.5 * (acc + acc.transpose());
        if (acc.cwiseAbs().maxCoeff() > 0) emit(gidx + 1, static_cast<int>(k) + 1, acc);
      }
    }
  }
  return os.str();
}

}  // namespace relest::lmi
