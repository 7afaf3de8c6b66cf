#pragma once

#include "relest/lmi/program.hpp"

namespace relest::lmi {

enum class SolveStatus { Optimal, Infeasible, Unbounded, MaxIter };

struct SolverOptions {
  double tol = 1e-9;          // relative gap / residual target
  int max_iter = 200;
  double feas_penalty = 0.0;  // 0 -> automatic
  bool log = false;
};

struct SDPSolution {
  SolveStatus status = SolveStatus::MaxIter;
  Vec x;                 // packed variable values
  double objective = 0;  // c^T x
  double dual_bound = 0;
  double gap = 0;             // <X, Z> at exit
  double max_violation = 0;   // max over blocks of (-lambda_min(F_k(x)))_+
  double dual_residual = 0;   // ||c - A^T(Z)||_inf
  int iterations = 0;
  std::string message;

  bool optimal() const { return status == SolveStatus::Optimal; }
  // Optimal, or stopped with a certified small gap and a clean primal: the
  // value is then accurate to rel_gap and safe for downstream use.
  bool usable(double rel_gap = 1e-4) const {
    if (status == SolveStatus::Optimal) return true;
    return status == SolveStatus::MaxIter && gap >= 0 && gap <= rel_gap * (1.0 + std::abs(objective)) &&
           max_violation <= 1e-8;
  }
};

SDPSolution minimize(const LMIProgram& prog, const SolverOptions& opts = {});

// Maximizes the smallest margin t with expr_k - t I >= 0 over all constraints
// of `prog` (whose objective is ignored). Optimal with t > 0 means every
// constraint holds strictly; t <= 0 is reported as Infeasible.
struct FeasiblePointResult {
  SDPSolution sol;
  double margin = 0;
};
FeasiblePointResult feasible_point(const LMIProgram& prog, double margin_cap = 1e3,
                                   const SolverOptions& opts = {});

}  // namespace relest::lmi
