#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <limits>
#include <span>
#include <vector>

namespace gtube {

// Integrator state is carried in extended precision. Products such as
// cosh(s)^2 - sinh(s)^2 lose ~8 digits at s = 10, which would swamp the
// Wronskian tolerance in plain double.
using Real = long double;
using VecR = Eigen::Matrix<Real, Eigen::Dynamic, 1>;
using MatR = Eigen::Matrix<Real, Eigen::Dynamic, Eigen::Dynamic>;

struct Interval {
  double lo = -std::numeric_limits<double>::infinity();
  double hi = std::numeric_limits<double>::infinity();

  bool contains(double x) const noexcept { return x > lo && x < hi; }
  bool bounded() const noexcept;
};

/// Pairwise (cascade) summation with a fixed tree, so the result depends only
/// on the order of `values`.
double pairwise_sum(std::span<const double> values) noexcept;

/// One classical Runge-Kutta step for an autonomous system y' = f(y).
template <class Rhs>
void rk4_step(const Rhs& rhs, VecR& y, Real h) {
  const VecR k1 = rhs(y);
  const VecR k2 = rhs(VecR(y + (h / 2) * k1));
  const VecR k3 = rhs(VecR(y + (h / 2) * k2));
  const VecR k4 = rhs(VecR(y + h * k3));
  y += (h / 6) * (k1 + 2 * k2 + 2 * k3 + k4);
}

/// Fourth-order centered difference f'(x) ~ [-f(x+2h) + 8f(x+h) - 8f(x-h) + f(x-2h)] / 12h.
template <class F>
auto centered_derivative(const F& f, Real x, Real h) {
  return ((f(x - 2 * h) - f(x + 2 * h)) + 8 * (f(x + h) - f(x - h))) / (12 * h);
}

/// Step used for finite-difference derivatives of f: 1e-5 scaled by |x|.
inline Real derivative_step(Real x) noexcept {
  return Real(1e-5) * std::max(Real(1), x < 0 ? -x : x);
}

/// Smallest eigenvalue of the symmetric part of a real square matrix.
double min_symmetric_eigenvalue(const Eigen::MatrixXd& m);

/// Largest absolute entry.
template <class Derived>
double max_abs(const Eigen::MatrixBase<Derived>& m) {
  return m.size() == 0 ? 0.0 : static_cast<double>(m.cwiseAbs().maxCoeff());
}

/// Surface measure of the unit sphere S^{d-1} in R^d.
double unit_sphere_area(int d);

}  // namespace gtube
