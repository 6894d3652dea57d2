#pragma once

// Geodesic + parallel frame dynamics for each manifold kind. Internal to the
// library; the flow module couples these with the matrix Jacobi equation.

#include "gtube/manifolds.hpp"
#include "gtube/numerics.hpp"

#include <memory>

namespace gtube::detail {

class GeodesicModel {
 public:
  explicit GeodesicModel(int n) : n_(n) {}
  virtual ~GeodesicModel() = default;

  int dimension() const noexcept { return n_; }
  int normal_dimension() const noexcept { return n_ - 1; }

  /// Number of leading state entries owned by the geodesic + frame.
  virtual int state_size() const = 0;

  virtual VecR initial_state(const Eigen::VectorXd& x, const Eigen::VectorXd& theta) const = 0;

  /// Writes d/dsigma of the first state_size() entries of y into dy.
  virtual void derivative(const Real* y, Real* dy) const = 0;

  /// Jacobi operator in the parallel normal frame at state y.
  virtual MatR curvature(const Real* y) const = 0;

  virtual Eigen::VectorXd position(const Real* y) const = 0;
  virtual Eigen::VectorXd velocity(const Real* y) const = 0;
  /// Columns are the parallel normal frame vectors e_1..e_{n-1}.
  virtual Eigen::MatrixXd frame(const Real* y) const = 0;

  /// |g(v, v) - 1|
  virtual double speed_defect(const Real* y) const = 0;
  /// max |g(e_i, e_j) - delta_ij| together with |g(e_i, v)|.
  virtual double frame_defect(const Real* y) const = 0;

 private:
  int n_;
};

std::shared_ptr<const GeodesicModel> make_model(const ManifoldSpec& spec);

}  // namespace gtube::detail
