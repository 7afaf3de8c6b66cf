#include "relest/lmi/program.hpp"

#include <set>
#include <sstream>
#include <stdexcept>

namespace relest::lmi {

void AffineMatrixExpr::add_scalar_term(DecisionVar v, const Mat& M, double coeff) {
  add_term(v, M, Mat::Identity(M.cols(), M.cols()), false, 1, coeff);
}

int sym_dim(int n) { return n * (n + 1) / 2; }

void sym_component(int n, int k, int& i, int& j) {
  // column-major lower triangle: (0,0),(1,0),...,(n-1,0),(1,1),...
  int col = 0, base = 0;
  while (k >= base + (n - col)) {
    base += n - col;
    ++col;
  }
  j = col;
  i = col + (k - base);
}

DecisionVar LMIProgram::add_scalar(std::string name, std::optional<double> lower) {
  VarInfo v;
  v.kind = VarKind::Scalar;
  v.offset = dim_x_;
  v.size = 1;
  v.lower = lower;
  v.name = std::move(name);
  vars_.push_back(v);
  dim_x_ += 1;
  c_.conservativeResize(dim_x_);
  c_(dim_x_ - 1) = 0;
  return DecisionVar{static_cast<int>(vars_.size()) - 1};
}

DecisionVar LMIProgram::add_rect(std::string name, int rows, int cols) {
  VarInfo v;
  v.kind = VarKind::Rect;
  v.rows = rows;
  v.cols = cols;
  v.offset = dim_x_;
  v.size = rows * cols;
  v.name = std::move(name);
  vars_.push_back(v);
  c_.conservativeResize(dim_x_ + v.size);
  c_.tail(v.size).setZero();
  dim_x_ += v.size;
  return DecisionVar{static_cast<int>(vars_.size()) - 1};
}

DecisionVar LMIProgram::add_sym(std::string name, int n) {
  VarInfo v;
  v.kind = VarKind::Sym;
  v.rows = n;
  v.cols = n;
  v.offset = dim_x_;
  v.size = sym_dim(n);
  v.name = std::move(name);
  vars_.push_back(v);
  c_.conservativeResize(dim_x_ + v.size);
  c_.tail(v.size).setZero();
  dim_x_ += v.size;
  return DecisionVar{static_cast<int>(vars_.size()) - 1};
}

void LMIProgram::obj_scalar(DecisionVar v, double coeff) {
  const VarInfo& info = vars_.at(v.id);
  if (info.kind != VarKind::Scalar) throw std::invalid_argument("obj_scalar: not a scalar variable");
  c_(info.offset) += coeff;
}

void LMIProgram::obj_trace(DecisionVar v, double coeff) {
  const VarInfo& info = vars_.at(v.id);
  if (info.kind != VarKind::Sym) throw std::invalid_argument("obj_trace: not a sym variable");
  for (int k = 0; k < info.size; ++k) {
    int i, j;
    sym_component(info.rows, k, i, j);
    if (i == j) c_(info.offset + k) += coeff;
  }
}

void LMIProgram::obj_entry(DecisionVar v, int i, int j, double coeff) {
  const VarInfo& info = vars_.at(v.id);
  if (info.kind == VarKind::Rect) {
    c_(info.offset + i * info.cols + j) += coeff;
  } else if (info.kind == VarKind::Sym) {
    for (int k = 0; k < info.size; ++k) {
      int a, b;
      sym_component(info.rows, k, a, b);
      if ((a == i && b == j) || (a == j && b == i)) {
        c_(info.offset + k) += (a == b) ? coeff : coeff / std::sqrt(2.0);
        return;
      }
    }
  } else {
    throw std::invalid_argument("obj_entry: scalar variable");
  }
}

int LMIProgram::add_constraint(AffineMatrixExpr expr, double strict_margin, std::string name) {
  if (expr.constant.rows() != expr.dim || expr.constant.cols() != expr.dim)
    throw std::invalid_argument("add_constraint: constant dimension mismatch");
  constraints_.push_back(Constraint{std::move(expr), strict_margin, std::move(name)});
  return static_cast<int>(constraints_.size()) - 1;
}

int LMIProgram::add_strict(AffineMatrixExpr expr, std::string name) {
  const double margin = 1e-7 * (1.0 + expr.constant.norm());
  return add_constraint(std::move(expr), margin, std::move(name));
}

double LMIProgram::scalar_value(DecisionVar v, const Vec& x) const {
  const VarInfo& info = vars_.at(v.id);
  if (info.kind != VarKind::Scalar) throw std::invalid_argument("scalar_value: not scalar");
  return x(info.offset);
}

Mat LMIProgram::value(DecisionVar v, const Vec& x) const {
  const VarInfo& info = vars_.at(v.id);
  if (info.kind == VarKind::Scalar) return Mat::Constant(1, 1, x(info.offset));
  if (info.kind == VarKind::Rect) {
    Mat M(info.rows, info.cols);
    for (int i = 0; i < info.rows; ++i)
      for (int j = 0; j < info.cols; ++j) M(i, j) = x(info.offset + i * info.cols + j);
    return M;
  }
  Mat M = Mat::Zero(info.rows, info.rows);
  for (int k = 0; k < info.size; ++k) {
    int i, j;
    sym_component(info.rows, k, i, j);
    const double val = x(info.offset + k);
    if (i == j)
      M(i, i) = val;
    else
      M(i, j) = M(j, i) = val / std::sqrt(2.0);
  }
  return M;
}

void LMIProgram::check_well_formed() const {
  std::set<int> referenced;
  for (const auto& con : constraints_)
    for (const auto& t : con.expr.terms) referenced.insert(t.var);
  for (int v = 0; v < num_vars(); ++v) {
    const VarInfo& info = vars_[v];
    if (info.size == 0) continue;
    bool in_obj = c_.segment(info.offset, info.size).cwiseAbs().maxCoeff() > 0;
    if (!in_obj && !referenced.count(v))
      throw std::logic_error("LMIProgram: variable '" + info.name + "' unused");
  }
}

}  // namespace relest::lmi
