#pragma once

#include "gtube/numerics.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace gtube {

/// Closed-form warp functions for rotationally symmetric metrics
/// dr^2 + f(r)^2 g_{S^{n-1}}. Derivatives are exact.
///
/// Catalog ids (see `parse`):
///   poly:a0,a1,...              f = sum a_k r^k
///   sin:A,w,phi,B               f = A sin(w r + phi) + B
///   sinh:A,w,phi,B              f = A sinh(w r + phi) + B
///   cosh:A,w,phi,B              f = A cosh(w r + phi) + B
class WarpFunction {
 public:
  enum class Family { polynomial, sine, hyperbolic_sine, hyperbolic_cosine };

  struct Jet {
    Real f;
    Real df;
    Real ddf;
  };

  static WarpFunction polynomial(std::vector<double> coeffs, Interval domain);
  static WarpFunction sine(double amplitude, double frequency, double phase, double offset,
                           Interval domain);
  static WarpFunction hyperbolic_sine(double amplitude, double frequency, double phase,
                                      double offset, Interval domain);
  static WarpFunction hyperbolic_cosine(double amplitude, double frequency, double phase,
                                        double offset, Interval domain);
  static WarpFunction parse(std::string_view id, Interval domain);

  /// Throws DomainError outside the open domain.
  Jet operator()(Real r) const;

  Family family() const noexcept { return family_; }
  const Interval& domain() const noexcept { return domain_; }
  std::string id() const;

 private:
  WarpFunction(Family family, std::vector<double> params, Interval domain);

  Family family_;
  std::vector<double> params_;
  Interval domain_;
};

struct ConstantCurvature {
  double c;
  int n;
};

struct FlatTorus {
  /// Rows are the lattice generators.
  Eigen::MatrixXd basis;
};

struct WarpedProduct {
  WarpFunction warp;
  int n;
};

/// A model Riemannian manifold.
///
/// Point conventions:
///  - constant curvature c > 0: sphere of radius 1/sqrt(c) in R^{n+1}
///  - c = 0: R^n
///  - c < 0: hyperboloid <x,x> = 1/c in Minkowski R^{n,1}, x_0 > 0
///  - flat torus: R^n, reduced to the fundamental cell {t * basis : t in [0,1)^n}
///  - warped product: (r, p) in R x S^{n-1} subset of R^{n+1}; tangent
///    vectors are (v_r, v_p) with v_p orthogonal to p
class ManifoldSpec {
 public:
  using Kind = std::variant<ConstantCurvature, FlatTorus, WarpedProduct>;

  /// `entire_tube` defaults to true exactly when the curvature is nonnegative.
  static ManifoldSpec constant_curvature(double c, int n,
                                         std::optional<bool> entire_tube = std::nullopt);
  static ManifoldSpec flat_torus(Eigen::MatrixXd basis,
                                 std::optional<bool> entire_tube = std::nullopt);
  static ManifoldSpec warped_product(WarpFunction warp, int n,
                                     std::optional<bool> entire_tube = std::nullopt);

  const Kind& kind() const noexcept { return kind_; }
  int dimension() const noexcept;
  int ambient_dimension() const noexcept;
  bool entire_tube() const noexcept { return entire_tube_; }

  /// Riemannian volume; empty for non-compact kinds.
  std::optional<double> volume() const;

  /// True when every geodesic has the same Jacobi data (constant curvature, flat).
  bool homogeneous() const noexcept;

  /// Short human-readable tag, e.g. "constant_curvature(c=1,n=2)".
  std::string tag() const;

  /// A canonical point on the manifold.
  Eigen::VectorXd base_point() const;

  /// Columns form an orthonormal basis of T_x M (in ambient/chart coordinates).
  Eigen::MatrixXd tangent_basis(const Eigen::VectorXd& x) const;

  /// Metric inner product g_x(u, v).
  double inner(const Eigen::VectorXd& x, const Eigen::VectorXd& u,
               const Eigen::VectorXd& v) const;

  /// Throws InputError unless x lies on M and theta is a unit tangent vector at x.
  void validate_initial(const Eigen::VectorXd& x, const Eigen::VectorXd& theta) const;

 private:
  ManifoldSpec(Kind kind, bool entire_tube);

  Kind kind_;
  bool entire_tube_;
};

/// Jacobi operator v -> R(v, gamma')gamma' on the normal space, in a parallel
/// orthonormal frame, as a function of arc length.
class CurvatureFrameOperator {
 public:
  using Evaluator = std::function<Eigen::MatrixXd(double)>;

  CurvatureFrameOperator(int dim, Evaluator evaluator, bool constant)
      : dim_(dim), evaluator_(std::move(evaluator)), constant_(constant) {}

  Eigen::MatrixXd operator()(double sigma) const { return evaluator_(sigma); }
  int dimension() const noexcept { return dim_; }
  bool constant() const noexcept { return constant_; }

 private:
  int dim_;
  Evaluator evaluator_;
  bool constant_;
};

/// For non-homogeneous kinds the geodesic is integrated up front over
/// [0, horizon]; evaluating beyond it raises DomainError.
CurvatureFrameOperator curvature_along(const ManifoldSpec& spec, const Eigen::VectorXd& x,
                                       const Eigen::VectorXd& theta, double horizon = 10.0,
                                       double step = 1e-3);

enum class QuadratureScheme { product_gauss, monte_carlo };

struct SphereQuadrature {
  int dimension = 0;  ///< ambient dimension n; nodes lie on S^{n-1}
  std::vector<Eigen::VectorXd> nodes;
  std::vector<double> weights;

  double total_weight() const;
};

/// Product Gauss rules exist for n <= 4; Monte Carlo for any n >= 2.
SphereQuadrature unit_sphere_quadrature(int n, QuadratureScheme scheme, int order_or_samples,
                                        std::uint64_t seed = 0);

QuadratureScheme parse_quadrature_scheme(std::string_view name);
std::string to_string(QuadratureScheme scheme);

}  // namespace gtube
