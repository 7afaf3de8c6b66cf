#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

namespace relest::lmi {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

enum class VarKind { Scalar, Rect, Sym };

struct DecisionVar {
  int id = -1;
};

// One affine term  coeff * L * op(var ⊗ I_q) * R  of a matrix expression,
// with op either the variable itself or its transpose.
struct Term {
  int var = -1;
  Mat L, R;
  bool transpose_var = false;
  int kron_q = 1;
  double coeff = 1.0;
};

struct AffineMatrixExpr {
  int dim = 0;
  Mat constant;  // dim x dim, symmetric
  std::vector<Term> terms;

  explicit AffineMatrixExpr(int n) : dim(n), constant(Mat::Zero(n, n)) {}

  void add_term(DecisionVar v, Mat L, Mat R, bool transpose_var = false, int kron_q = 1, double coeff = 1.0) {
    terms.push_back(Term{v.id, std::move(L), std::move(R), transpose_var, kron_q, coeff});
  }
  // L var R + (L var R)^T
  void add_sym_pair(DecisionVar v, const Mat& L, const Mat& R, int kron_q = 1, double coeff = 1.0) {
    add_term(v, L, R, false, kron_q, coeff);
    add_term(v, R.transpose(), L.transpose(), true, kron_q, coeff);
  }
  // coeff * x * M for scalar x (M symmetric).
  void add_scalar_term(DecisionVar v, const Mat& M, double coeff = 1.0);
};

struct VarInfo {
  VarKind kind;
  int rows = 1, cols = 1;
  int offset = 0;  // position in the packed x vector
  int size = 1;
  std::optional<double> lower;
  std::string name;
};

struct Constraint {
  AffineMatrixExpr expr;
  double strict_margin = 0.0;  // realized as expr - margin*I >= 0
  std::string name;
};

class LMIProgram {
 public:
  DecisionVar add_scalar(std::string name, std::optional<double> lower = std::nullopt);
  DecisionVar add_rect(std::string name, int rows, int cols);
  DecisionVar add_sym(std::string name, int n);

  void obj_scalar(DecisionVar v, double coeff);
  void obj_trace(DecisionVar v, double coeff = 1.0);
  void obj_entry(DecisionVar v, int i, int j, double coeff);

  int add_constraint(AffineMatrixExpr expr, double strict_margin = 0.0, std::string name = {});
  // Convenience default per the strictness convention: margin 1e-7*(1+|const|).
  int add_strict(AffineMatrixExpr expr, std::string name = {});

  int num_vars() const { return static_cast<int>(vars_.size()); }
  int dim_x() const { return dim_x_; }
  const std::vector<VarInfo>& vars() const { return vars_; }
  const std::vector<Constraint>& constraints() const { return constraints_; }
  const Vec& objective() const { return c_; }

  // Unpack solver vector into matrices.
  double scalar_value(DecisionVar v, const Vec& x) const;
  Mat value(DecisionVar v, const Vec& x) const;

  void check_well_formed() const;  // every variable referenced somewhere

  // Plain-text dump in an SDPA-like sparse format (see docs/sdpa_dump.md).
  std::string dump_sdpa() const;

 private:
  std::vector<VarInfo> vars_;
  std::vector<Constraint> constraints_;
  Vec c_ = Vec::Zero(0);
  int dim_x_ = 0;
  friend class SdpSolver;
};

// Packs a symmetric matrix basis index: component k of a sym(n) variable maps
// to (i, j) with i >= j, column-major over the lower triangle; off-diagonal
// basis matrices are (E_ij + E_ji)/sqrt(2).
void sym_component(int n, int k, int& i, int& j);
int sym_dim(int n);

}  // namespace relest::lmi
