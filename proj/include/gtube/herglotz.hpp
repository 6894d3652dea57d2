#pragma once

#include "gtube/flow.hpp"

#include <Eigen/Dense>

#include <complex>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace gtube {

using Complex = std::complex<double>;
using CMat = Eigen::MatrixXcd;

/// f(zeta) = tan(sqrt(c) zeta)/sqrt(c) Id (c > 0), zeta Id (c = 0),
/// tanh(sqrt(-c) zeta)/sqrt(-c) Id (c < 0); (n-1) x (n-1).
CMat f_constant_curvature(double c, int n, Complex zeta);
/// G = -f^{-1} in closed form: -sqrt(c) cot(sqrt(c) zeta), -1/zeta, -sqrt(-c) coth(sqrt(-c) zeta).
CMat g_constant_curvature(double c, int n, Complex zeta);

/// Xi(sigma)^{-1} H(sigma) on the real axis.
Eigen::MatrixXd f_real_axis_numeric(const JacobiSystem& js, double sigma);

/// -F^{-1}. Checks afterwards that Im of the result is positive definite
/// whenever F is symmetric with positive definite imaginary part.
CMat neg_inverse(const CMat& F);

enum class HerglotzSource { closed_form, real_axis_numeric, custom };
std::string to_string(HerglotzSource source);

/// Matrix-valued function on the upper half plane with its known real poles.
class HerglotzMatrix {
 public:
  using Evaluator = std::function<CMat(Complex)>;
  using PoleLocator = std::function<std::vector<double>(double, double)>;

  /// f for constant curvature c.
  static HerglotzMatrix closed_form(double c, int n);
  /// G = -f^{-1} for constant curvature c.
  static HerglotzMatrix closed_form_neg_inverse(double c, int n);
  /// f = Xi^{-1} H from a propagated Jacobi system; real arguments only.
  static HerglotzMatrix real_axis(std::shared_ptr<const JacobiSystem> js);
  static HerglotzMatrix custom(int dimension, Evaluator evaluator, PoleLocator poles = {},
                               std::string label = "custom");

  CMat operator()(Complex zeta) const { return evaluator_(zeta); }
  /// Real poles in [a, b], ascending.
  std::vector<double> poles(double a, double b) const;
  bool has_pole_locator() const noexcept { return static_cast<bool>(poles_); }
  int dimension() const noexcept { return dimension_; }
  HerglotzSource source() const noexcept { return source_; }
  bool complex_domain() const noexcept { return source_ != HerglotzSource::real_axis_numeric; }
  const std::string& label() const noexcept { return label_; }

 private:
  HerglotzMatrix(int dimension, HerglotzSource source, Evaluator evaluator, PoleLocator poles,
                 std::string label);

  int dimension_;
  HerglotzSource source_;
  Evaluator evaluator_;
  PoleLocator poles_;
  std::string label_;
};

struct FatouAtom {
  double t = 0.0;
  Eigen::MatrixXd mass;
};

/// Measure data of F(zeta) = B + A zeta + (1/pi) int (1/(t - zeta) - t/(1 + t^2)) dmu(t)
/// recovered on an interval.
struct FatouData {
  Eigen::MatrixXd A;
  std::vector<FatouAtom> atoms;
  double a = 0.0;
  double b = 0.0;
  std::vector<double> tau_schedule;
  double continuous_mass = 0.0;   ///< trace mass outside the atom windows, tau -> 0
  bool continuous_flag = false;   ///< continuous_mass > 1e-3 (b - a)
  bool pole_set_consistent = true;  ///< atoms match the known poles within 1e-4
};

struct StieltjesOptions {
  std::vector<double> tau_schedule = {1e-1, 1e-2, 1e-3};
  double atom_threshold = 0.1;
};

FatouData stieltjes_invert(const HerglotzMatrix& F, double a, double b,
                           const StieltjesOptions& options = {});

/// A + (1/pi) sum_j mu_j / (zeta - t_j)^2, the derivative F'(zeta) rebuilt from the measure.
CMat fatou_reconstruct(const FatouData& fd, Complex zeta);

struct NiceReport {
  double symmetry_defect = 0.0;   ///< max |F - F^T| over samples and 0
  double value_at_zero = 0.0;     ///< |F(0)|
  double derivative_defect = 0.0; ///< |F'(0) - Id|
  std::optional<double> min_im_eigenvalue;  ///< over samples; empty for real-only sources
};

/// Normalization, symmetry and positivity of Im F at the given points (Im zeta >= 0).
NiceReport check_theorem_nice(const HerglotzMatrix& F, const std::vector<Complex>& samples);

/// Smallest eigenvalue of the symmetric part of Im F over the samples.
double min_im_eigenvalue(const HerglotzMatrix& F, const std::vector<Complex>& samples);

/// |det(H^T H) det(G') - 1| with G = -f^{-1}, G' by a five-point difference.
double check_key1(const JacobiEvaluator& jacobi, double sigma);
double check_key1(const JacobiSystem& js, double sigma);
/// |Xi^T Xi f' - Id| (max entry), f' by a five-point difference.
double check_xi_identity(const JacobiEvaluator& jacobi, double sigma);
double check_xi_identity(const JacobiSystem& js, double sigma);

struct IdentityChain {
  double key1 = 0.0;
  double xi = 0.0;
  bool key1_ok = false;
  bool xi_ok = false;
  /// Both identities hold or both fail; a split points at a frame defect.
  bool consistent() const noexcept { return key1_ok == xi_ok; }
};

IdentityChain check_identity_chain(const JacobiEvaluator& jacobi, double sigma, double tolerance);

struct MinkowskiMargin {
  double margin = 0.0;  ///< det(A1 + A2) - det A1 - det A2
  double scale = 0.0;   ///< (|A1| + |A2|)^k, spectral norms
  bool ok() const noexcept { return margin >= -1e-12 * scale; }
};

MinkowskiMargin minkowski_det_lower_bound(const Eigen::MatrixXd& A1, const Eigen::MatrixXd& A2);

struct DetGrowthBound {
  double lhs = 0.0;  ///< 1 / det G'(sigma)
  double rhs = 0.0;  ///< sigma^{2n-2}
  bool ok = false;
  bool equality = false;
};

DetGrowthBound det_growth_bound(double c, int n, double sigma);

/// Smallest eigenvalue of G'(sigma) - Id / sigma^2 for the closed forms.
double b_decomposition_min_eigenvalue(double c, int n, double sigma);

struct ComplexStructure {
  Eigen::MatrixXd J;  ///< basis (xi_1..xi_{n-1}, eta_1..eta_{n-1})
  double square_defect = 0.0;  ///< |J^2 + Id| (max entry)
};

/// J from X = Re F(i), Y = Im F(i), e = Y^{-1}:
/// J xi_h = sum_k e_kh (eta_k - sum_j X_jk xi_j).
ComplexStructure adapted_complex_structure_at(const HerglotzMatrix& F);

}  // namespace gtube
