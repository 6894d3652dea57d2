#pragma once

#include "gtube/manifolds.hpp"
#include "gtube/numerics.hpp"

#include <Eigen/Dense>

#include <functional>
#include <iosfwd>
#include <memory>
#include <vector>

namespace gtube {

namespace detail {
class GeodesicModel;
}

/// Default RK4 step for geodesic and Jacobi integration.
inline constexpr double kDefaultStep = 1e-3;

/// Unit-speed geodesic sampled on a uniform grid 0 = s_0 < ... < s_m = T.
struct GeodesicTrajectory {
  ManifoldSpec spec;
  Eigen::VectorXd x;
  Eigen::VectorXd theta;
  double step = 0.0;  ///< actual grid spacing T / m
  std::vector<double> sigma;
  std::vector<Eigen::VectorXd> position;
  std::vector<Eigen::VectorXd> velocity;
  std::vector<Eigen::MatrixXd> frame;  ///< columns: parallel normal frame
  double max_speed_defect = 0.0;
  double max_frame_defect = 0.0;

  double length() const { return sigma.empty() ? 0.0 : sigma.back(); }
};

GeodesicTrajectory integrate_geodesic(const ManifoldSpec& spec, const Eigen::VectorXd& x,
                                      const Eigen::VectorXd& theta, double T,
                                      double step = kDefaultStep);

/// Matrix Jacobi data at one arc length, in the parallel normal frame.
/// Xi has Xi(0) = Id, Xi'(0) = 0; H has H(0) = 0, H'(0) = Id.
struct JacobiSample {
  MatR xi;
  MatR xi_prime;
  MatR eta;
  MatR eta_prime;
};

using JacobiEvaluator = std::function<JacobiSample(double)>;

/// Solutions (Xi, H) of Y'' + K Y = 0 along a geodesic.
class JacobiSystem {
 public:
  int dimension() const noexcept { return m_; }
  double length() const { return grid_.back(); }
  double step() const noexcept { return step_; }
  const std::vector<double>& grid() const noexcept { return grid_; }

  JacobiSample at_index(std::size_t i) const;

  /// Jacobi data at any sigma in [0, T]: one partial RK4 step from the grid
  /// point below sigma.
  JacobiSample sample(double sigma) const;
  JacobiEvaluator evaluator() const;

  double det_xi(std::size_t i) const { return det_xi_[i]; }
  double det_eta(std::size_t i) const { return det_eta_[i]; }

  /// Zeros of det Xi (where f has poles) and of det H (conjugate points,
  /// always including 0), refined to 1e-10 in sigma.
  const std::vector<double>& xi_singular() const noexcept { return xi_singular_; }
  const std::vector<double>& eta_singular() const noexcept { return eta_singular_; }
  std::vector<double> singular_set() const;

  /// Distance from sigma to the nearest detected zero of det Xi or det H.
  double distance_to_xi_singular(double sigma) const;
  double distance_to_eta_singular(double sigma) const;

  /// max over the grid of |Xi'^T H - Xi^T H' + Id|, in extended precision.
  double wronskian_drift() const;
  /// Largest relative residual of Y'' + K Y on the grid (fourth-order stencil).
  double max_residual() const noexcept { return max_residual_; }
  /// det [[Xi, H], [Xi', H']] at grid index i; identically 1 in exact arithmetic.
  double fundamental_determinant(std::size_t i) const;

  /// Position along the geodesic at grid index i.
  Eigen::VectorXd position(std::size_t i) const;

 private:
  friend JacobiSystem propagate_jacobi(const ManifoldSpec&, const GeodesicTrajectory&, double);

  JacobiSample sample_state(const VecR& y) const;
  VecR state_at(double sigma) const;
  /// Hadamard-normalized det: |det Y| / prod_j |(Y, Y') e_j| lies in [0, 1].
  Real normalized_det(double sigma, int which) const;
  std::vector<double> find_zeros(int which, const std::vector<Real>& d) const;

  std::shared_ptr<const detail::GeodesicModel> model_;
  int m_ = 0;
  double step_ = 0.0;
  std::vector<double> grid_;
  std::vector<VecR> states_;
  std::vector<double> det_xi_;
  std::vector<double> det_eta_;
  std::vector<double> xi_singular_;
  std::vector<double> eta_singular_;
  double max_residual_ = 0.0;
};

/// Integrates the coupled geodesic/frame/Jacobi system along `traj`. The grid
/// coincides with the trajectory's when `step` equals its step.
JacobiSystem propagate_jacobi(const ManifoldSpec& spec, const GeodesicTrajectory& traj,
                              double step = kDefaultStep);

/// Exact constant-curvature solutions: cos/cosh/linear for Xi, sin/sinh/sigma for H.
JacobiSample closed_form_jacobi(double c, double sigma, int n);
JacobiEvaluator closed_form_evaluator(double c, int n);

/// Columns: sigma, position..., det_xi, det_eta. 17 significant digits.
void write_jacobi_csv(std::ostream& out, const GeodesicTrajectory& traj, const JacobiSystem& js);

}  // namespace gtube
