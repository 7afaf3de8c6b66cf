#include <doctest.h>

#include <random>

#include "relest/lmi/solver.hpp"
#include "test_helpers.hpp"

using namespace relest::lmi;

TEST_CASE("min t s.t. tI - A >= 0 recovers lambda_max") {
  Mat A(3, 3);
  A << 2, 1, 0, 1, -1, 0.5, 0, 0.5, 0.3;
  A = 0.5 * (A + A.transpose());
  Eigen::SelfAdjointEigenSolver<Mat> es(A);
  const double lmax = es.eigenvalues().maxCoeff();

  LMIProgram p;
  auto t = p.add_scalar("t");
  p.obj_scalar(t, 1.0);
  AffineMatrixExpr e(3);
  e.constant = -A;
  e.add_scalar_term(t, Mat::Identity(3, 3));
  p.add_constraint(std::move(e));
  auto sol = minimize(p);
  REQUIRE(sol.optimal());
  CHECK(sol.objective == doctest::Approx(lmax).epsilon(1e-7));
  CHECK(sol.gap <= 1e-8 * (1 + std::abs(sol.objective)));
  CHECK(sol.max_violation <= 1e-8);
}

TEST_CASE("min x s.t. [[x,1],[1,x]] >= 0 gives x = 1") {
  LMIProgram p;
  auto xv = p.add_scalar("x");
  p.obj_scalar(xv, 1.0);
  AffineMatrixExpr e(2);
  e.constant << 0, 1, 1, 0;
  e.add_scalar_term(xv, Mat::Identity(2, 2));
  p.add_constraint(std::move(e));
  auto sol = minimize(p);
  REQUIRE(sol.optimal());
  CHECK(sol.objective == doctest::Approx(1.0).epsilon(1e-7));
}

TEST_CASE("diagonal LMI encoding an LP matches vertex enumeration") {
  // min c.x s.t. G x <= h encoded as diag 1x1 blocks; oracle enumerates the
  // vertices of the 3-variable polytope.
  std::mt19937 rng(7);
  const int n = 3, mcon = 7;
  Mat G = relest::test::random_mat(rng, mcon, n);
  Vec h = Vec::Ones(mcon) + relest::test::random_mat(rng, mcon, 1).cwiseAbs();
  // box to keep it bounded
  Mat Gb(2 * n + mcon, n);
  Vec hb(2 * n + mcon);
  Gb.topRows(mcon) = G;
  hb.head(mcon) = h;
  Gb.middleRows(mcon, n) = Mat::Identity(n, n);
  Gb.bottomRows(n) = -Mat::Identity(n, n);
  hb.tail(2 * n).setConstant(5.0);
  Vec cobj(3);
  cobj << 1.0, -2.0, 0.5;

  LMIProgram p;
  auto xv = p.add_rect("x", n, 1);
  for (int i = 0; i < n; ++i) p.obj_entry(xv, i, 0, cobj(i));
  for (int i = 0; i < Gb.rows(); ++i) {
    AffineMatrixExpr e(1);
    e.constant(0, 0) = hb(i);
    e.add_term(xv, Mat::Constant(1, 1, -1.0) * Gb.row(i), Mat::Identity(1, 1));
    p.add_constraint(std::move(e));
  }
  auto sol = minimize(p);
  REQUIRE(sol.optimal());

  // oracle: enumerate all triples of active constraints
  double best = std::numeric_limits<double>::infinity();
  const int rows = static_cast<int>(Gb.rows());
  for (int a = 0; a < rows; ++a)
    for (int b = a + 1; b < rows; ++b)
      for (int cIdx = b + 1; cIdx < rows; ++cIdx) {
        Mat M(3, 3);
        M << Gb.row(a), Gb.row(b), Gb.row(cIdx);
        Eigen::FullPivLU<Mat> lu(M);
        if (!lu.isInvertible()) continue;
        Vec v(3);
        v << hb(a), hb(b), hb(cIdx);
        Vec xx = lu.solve(v);
        if (((Gb * xx).array() <= hb.array() + 1e-9).all()) best = std::min(best, cobj.dot(xx));
      }
  CHECK(sol.objective == doctest::Approx(best).epsilon(1e-6));

  // scaling invariance of the argmin
  LMIProgram p2;
  auto xv2 = p2.add_rect("x", n, 1);
  for (int i = 0; i < n; ++i) p2.obj_entry(xv2, i, 0, 37.0 * cobj(i));
  for (int i = 0; i < Gb.rows(); ++i) {
    AffineMatrixExpr e(1);
    e.constant(0, 0) = hb(i);
    e.add_term(xv2, Mat::Constant(1, 1, -1.0) * Gb.row(i), Mat::Identity(1, 1));
    p2.add_constraint(std::move(e));
  }
  auto sol2 = minimize(p2);
  REQUIRE(sol2.optimal());
  CHECK((p.value(xv, sol.x) - p2.value(xv2, sol2.x)).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("sym variable round-trip and constraint satisfaction at the optimum") {
  // min tr(P) s.t. P >= A A^T (Schur form) -> P = A A^T.
  std::mt19937 rng(17);
  Mat A = relest::test::random_mat(rng, 4, 4);
  LMIProgram p;
  auto P = p.add_sym("P", 4);
  p.obj_trace(P);
  AffineMatrixExpr e(8);
  e.constant.bottomRightCorner(4, 4) = Mat::Identity(4, 4);
  e.constant.topRightCorner(4, 4) = A;
  e.constant.bottomLeftCorner(4, 4) = A.transpose();
  Mat L = Mat::Zero(8, 4);
  L.topRows(4) = Mat::Identity(4, 4);
  e.add_term(P, L, L.transpose());
  p.add_constraint(std::move(e));
  auto sol = minimize(p);
  REQUIRE(sol.optimal());
  Mat Pv = p.value(P, sol.x);
  CHECK((Pv - A * A.transpose()).norm() < 1e-6 * (1 + A.norm() * A.norm()));
  Eigen::SelfAdjointEigenSolver<Mat> chk(Pv - A * A.transpose());
  CHECK(chk.eigenvalues().minCoeff() > -1e-8);
}

TEST_CASE("feasible_point: strict interior, infeasible pair, margin semantics") {
  // [[th,1],[1,2]] > 0 needs th > 1/2.
  LMIProgram p;
  auto th = p.add_scalar("theta");
  AffineMatrixExpr e(2);
  e.constant << 0, 1, 1, 2;
  Mat L = Mat::Zero(2, 1);
  L(0, 0) = 1;
  e.add_term(th, L, L.transpose());
  p.add_constraint(std::move(e));
  auto fp = feasible_point(p);
  REQUIRE(fp.sol.optimal());
  CHECK(fp.margin > 0);
  CHECK(p.scalar_value(th, fp.sol.x) > 0.5);

  // x >= 1 and -x >= 0 simultaneously is infeasible.
  LMIProgram q;
  auto xv = q.add_scalar("x");
  AffineMatrixExpr a(1), b(1);
  a.constant(0, 0) = -1;
  a.add_scalar_term(xv, Mat::Identity(1, 1));
  b.add_scalar_term(xv, Mat::Identity(1, 1), -1.0);
  q.add_constraint(std::move(a));
  q.add_constraint(std::move(b));
  auto fq = feasible_point(q);
  CHECK(fq.sol.status == SolveStatus::Infeasible);
}

TEST_CASE("kron-with-identity terms enter correctly") {
  // Constraint [[P, (b ⊗ I2)],[(b ⊗ I2)^T, I]] >= 0 with scalar-entry b: the
  // optimum of min tr(P) is tr(b b^T ⊗ I2) = 2 b^2 at fixed b.
  LMIProgram p;
  auto P = p.add_sym("P", 2);
  auto bvar = p.add_rect("b", 1, 1);
  p.obj_trace(P);
  AffineMatrixExpr e(4);
  e.constant.bottomRightCorner(2, 2) = Mat::Identity(2, 2);
  Mat L = Mat::Zero(4, 2);
  L.topRows(2).setIdentity();
  e.add_term(P, L, L.transpose());
  Mat Lk = Mat::Zero(4, 2);
  Lk.topRows(2).setIdentity();
  Mat Rk = Mat::Zero(2, 4);
  Rk.rightCols(2).setIdentity();
  e.add_sym_pair(bvar, Lk, Rk, /*kron_q=*/2);
  p.add_constraint(std::move(e));
  // pin b = 3 via two 1x1 blocks
  AffineMatrixExpr lo(1), hi(1);
  lo.constant(0, 0) = -3.0;
  lo.add_term(bvar, Mat::Identity(1, 1), Mat::Identity(1, 1));
  hi.constant(0, 0) = 3.0;
  hi.add_term(bvar, Mat::Identity(1, 1), Mat::Identity(1, 1), false, 1, -1.0);
  p.add_constraint(std::move(lo));
  p.add_constraint(std::move(hi));
  auto sol = minimize(p);
  REQUIRE(sol.optimal());
  CHECK(sol.objective == doctest::Approx(18.0).epsilon(1e-5));
}

TEST_CASE("sdpa dump smoke") {
  LMIProgram p;
  auto t = p.add_scalar("t");
  p.obj_scalar(t, 1.0);
  AffineMatrixExpr e(2);
  e.constant << 0, 1, 1, 0;
  e.add_scalar_term(t, Mat::Identity(2, 2));
  p.add_constraint(std::move(e));
  std::string s = p.dump_sdpa();
  CHECK(s.find("mdim") != std::string::npos);
  CHECK(s.find("1 1 1 1 1") != std::string::npos);
}
