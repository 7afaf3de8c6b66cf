#pragma once

#include <Eigen/Dense>
#include <complex>
#include <stdexcept>
#include <vector>

namespace relest::lti {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;
using CMat = Eigen::MatrixXcd;

// Discrete-time realization y = C (zI - A)^{-1} B u + D u. All data real.
// A may be 0x0, in which case the system is a static gain D.
class StateSpace {
 public:
  StateSpace() : A_(0, 0), B_(0, 0), C_(0, 0), D_(0, 0) {}

  StateSpace(Mat A, Mat B, Mat C, Mat D)
      : A_(std::move(A)), B_(std::move(B)), C_(std::move(C)), D_(std::move(D)) {
    if (A_.rows() != A_.cols()) throw std::invalid_argument("StateSpace: A must be square");
    if (B_.rows() != A_.rows()) throw std::invalid_argument("StateSpace: A/B row mismatch");
    if (C_.cols() != A_.rows()) throw std::invalid_argument("StateSpace: A/C col mismatch");
    if (D_.rows() != C_.rows() || D_.cols() != B_.cols())
      throw std::invalid_argument("StateSpace: D dimension mismatch");
  }

  // Static gain.
  static StateSpace gain(const Mat& D) {
    return StateSpace(Mat(0, 0), Mat(0, D.cols()), Mat(D.rows(), 0), D);
  }
  static StateSpace identity(int m) { return gain(Mat::Identity(m, m)); }
  static StateSpace zero(int p, int m) { return gain(Mat::Zero(p, m)); }

  const Mat& A() const { return A_; }
  const Mat& B() const { return B_; }
  const Mat& C() const { return C_; }
  const Mat& D() const { return D_; }

  int order() const { return static_cast<int>(A_.rows()); }
  int outputs() const { return static_cast<int>(C_.rows()); }
  int inputs() const { return static_cast<int>(B_.cols()); }

  double spectral_radius() const;
  bool is_stable(double margin = 1e-9) const { return order() == 0 || spectral_radius() < 1.0 - margin; }
  void require_stable(const char* who) const;

  // C (e^{j*theta} I - A)^{-1} B + D. Throws if the resolvent is singular.
  CMat freq_response(double theta) const;

  // Impulse response terms F_0 = D, F_k = C A^{k-1} B.
  std::vector<Mat> impulse(int n_terms) const;

  StateSpace transpose() const { return StateSpace(A_.transpose(), C_.transpose(), B_.transpose(), D_.transpose()); }

  // Standard inverse realization; requires square invertible D.
  StateSpace inverse() const;

  StateSpace col(int j) const;  // single input column
  StateSpace row(int i) const;  // single output row

 private:
  Mat A_, B_, C_, D_;
};

// Realization assembly.
StateSpace series(const StateSpace& G, const StateSpace& H);    // G*H (H acts first)
StateSpace parallel(const StateSpace& F, const StateSpace& G);  // F+G
StateSpace hcat(const StateSpace& F, const StateSpace& G);      // [F G]
StateSpace vcat(const StateSpace& F, const StateSpace& G);      // [F; G]
StateSpace scale(const StateSpace& F, double c);
StateSpace left_mul(const Mat& M, const StateSpace& F);   // constant M * F
StateSpace right_mul(const StateSpace& F, const Mat& M);  // F * constant M
StateSpace append_states(const StateSpace& F, int extra);  // pad with unreachable states (test helper)

// Delay by k samples: z^{-k} F.
StateSpace delay(const StateSpace& F, int k);

// F ⊗ I_q and I_p ⊗ F.
StateSpace kron_right_identity(const StateSpace& F, int q);
StateSpace kron_left_identity(int p, const StateSpace& F);
// Frequency-wise Kronecker product F(e^{jθ}) ⊗ G(e^{jθ}).
StateSpace kron_ss(const StateSpace& F, const StateSpace& G);

// Row-major vectorization: stacks the rows of the p×m response into a pm×1 column,
// i.e. output (i-1)*m + j carries entry (i,j). Realized with one state copy per input column.
StateSpace rvec_ss(const StateSpace& F);

// FIR tap sequence F_0 ... F_L, all p×m.
struct FIR {
  std::vector<Mat> taps;
  int outputs() const { return taps.empty() ? 0 : static_cast<int>(taps.front().rows()); }
  int inputs() const { return taps.empty() ? 0 : static_cast<int>(taps.front().cols()); }
  StateSpace to_ss() const;
  double h2_norm_sq() const;
};

FIR fir_from_scalar_taps(const std::vector<double>& taps);

bool is_symmetric(const Mat& M, double rel_tol = 1e-12);
Mat sym(const Mat& M);

}  // namespace relest::lti
