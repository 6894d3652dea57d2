#include "gtube/error.hpp"
#include "gtube/flow.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>
#include <sstream>

using namespace gtube;
using std::numbers::pi;

namespace {

Eigen::VectorXd vec(std::initializer_list<double> v) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

ManifoldSpec bumpy(int n) {
  return ManifoldSpec::warped_product(WarpFunction::parse("sin:0.5,1,0,2", Interval{}), n);
}

// Unit direction at (r, e_1) with radial component `radial`.
std::pair<Eigen::VectorXd, Eigen::VectorXd> bumpy_initial(int n, double r, double radial) {
  const auto warp = WarpFunction::parse("sin:0.5,1,0,2", Interval{});
  Eigen::VectorXd x = Eigen::VectorXd::Zero(n + 1);
  x[0] = r;
  x[1] = 1.0;
  Eigen::VectorXd theta = Eigen::VectorXd::Zero(n + 1);
  theta[0] = radial;
  theta[2] = std::sqrt(1 - radial * radial) / static_cast<double>(warp(r).f);
  return {x, theta};
}

double max_entry_error(const MatR& a, const MatR& b) {
  return static_cast<double>((a - b).cwiseAbs().maxCoeff());
}

}  // namespace

TEST_CASE("integrate_geodesic: flat torus wraps") {
  const auto torus = ManifoldSpec::flat_torus(Eigen::MatrixXd::Identity(2, 2));
  const auto traj = integrate_geodesic(torus, vec({0, 0}), vec({1, 0}), 2.5);
  CHECK((traj.position.back() - vec({0.5, 0})).norm() <= 1e-12);
  CHECK(traj.sigma.back() == 2.5);
}

TEST_CASE("integrate_geodesic: great circle reaches the antipode") {
  const auto sphere = ManifoldSpec::constant_curvature(1.0, 2);
  const auto traj = integrate_geodesic(sphere, vec({1, 0, 0}), vec({0, 1, 0}), pi);
  CHECK((traj.position.back() - vec({-1, 0, 0})).norm() <= 1e-8 * pi);
  CHECK((traj.velocity.back() - vec({0, -1, 0})).norm() <= 1e-8 * pi);
  // The normal frame along a great circle is constant in ambient coordinates.
  CHECK((traj.frame.back() - traj.frame.front()).norm() <= 1e-8);
}

TEST_CASE("integrate_geodesic: closed forms on space forms") {
  for (double c : {0.25, 1.0, 4.0, -1.0}) {
    const auto spec = ManifoldSpec::constant_curvature(c, 3);
    const Eigen::VectorXd x = spec.base_point();
    const Eigen::VectorXd theta = spec.tangent_basis(x).col(1);
    const double T = 6.0;
    const auto traj = integrate_geodesic(spec, x, theta, T, 1e-3);
    const double k = std::sqrt(std::fabs(c));
    for (std::size_t i = 0; i < traj.sigma.size(); i += 500) {
      const double s = traj.sigma[i];
      const Eigen::VectorXd expected =
          c > 0 ? Eigen::VectorXd(std::cos(k * s) * x + std::sin(k * s) / k * theta)
                : Eigen::VectorXd(std::cosh(k * s) * x + std::sinh(k * s) / k * theta);
      const double scale = c > 0 ? 1.0 : std::cosh(k * s);
      CHECK((traj.position[i] - expected).norm() <= 1e-8 * std::max(1.0, s) * scale);
    }
    CHECK(traj.max_speed_defect <= 1e-8);
    CHECK(traj.max_frame_defect <= 1e-8);
  }
}

TEST_CASE("integrate_geodesic: warp = identity is a straight line") {
  const auto flat =
      ManifoldSpec::warped_product(WarpFunction::parse("poly:0,1", {0.0, INFINITY}), 2);
  const double a = 0.7;
  // At r = 1 the fiber tangent vector equals the Cartesian one.
  const Eigen::VectorXd x = vec({1.0, 1.0, 0.0});
  const Eigen::VectorXd theta = vec({std::cos(a), 0.0, std::sin(a)});
  const double T = 2.0;
  const auto traj = integrate_geodesic(flat, x, theta, T);
  const Eigen::Vector2d start(1.0, 0.0), dir(std::cos(a), std::sin(a));
  for (std::size_t i = 0; i < traj.sigma.size(); i += 250) {
    const auto& p = traj.position[i];
    const Eigen::Vector2d cart = p[0] * Eigen::Vector2d(p[1], p[2]);
    CHECK((cart - (start + traj.sigma[i] * dir)).norm() <= 1e-8 * T);
  }
}

TEST_CASE("integrate_geodesic: warped product conserves speed and frame") {
  for (int n : {2, 3, 4}) {
    const auto [x, theta] = bumpy_initial(n, 1.0, 0.5);
    const auto traj = integrate_geodesic(bumpy(n), x, theta, 10.0);
    CHECK(traj.max_speed_defect <= 1e-8);
    CHECK(traj.max_frame_defect <= 1e-8);
  }
}

TEST_CASE("integrate_geodesic: errors") {
  const auto sphere = ManifoldSpec::constant_curvature(1.0, 2);
  const Eigen::VectorXd x = vec({1, 0, 0});
  CHECK_THROWS_AS(integrate_geodesic(sphere, x, vec({0, 1, 0}), 1.0, 0.0), InputError);
  CHECK_THROWS_AS(integrate_geodesic(sphere, x, vec({0, 1, 0}), 0.0, 1e-3), InputError);
  CHECK_THROWS_AS(integrate_geodesic(sphere, x, vec({0, 1, 0}), 1.0, 2.0), InputError);
  CHECK_THROWS_AS(integrate_geodesic(sphere, x, vec({0, 1.1, 0}), 1.0), InputError);
  // A huge step breaks speed conservation and names the offending sigma.
  try {
    integrate_geodesic(sphere, x, vec({0, 1, 0}), 50.0, 1.5);
    FAIL("expected an integration failure");
  } catch (const IntegrationFailure& e) {
    CHECK(e.sigma() > 0.0);
  }
}

TEST_CASE("closed_form_jacobi examples") {
  const auto quarter = closed_form_jacobi(1.0, pi / 2, 3);
  CHECK(max_entry_error(quarter.xi, MatR::Zero(2, 2)) <= 1e-15);
  CHECK(max_entry_error(quarter.eta, MatR::Identity(2, 2)) <= 1e-15);
  const auto flat = closed_form_jacobi(0.0, 3.0, 3);
  CHECK(max_entry_error(flat.xi, MatR::Identity(2, 2)) == 0.0);
  CHECK(max_entry_error(flat.eta, 3 * MatR::Identity(2, 2)) == 0.0);
  for (double c : {-2.0, 0.0, 0.5}) {
    const auto zero = closed_form_jacobi(c, 0.0, 4);
    CHECK(max_entry_error(zero.xi, MatR::Identity(3, 3)) == 0.0);
    CHECK(max_entry_error(zero.eta, MatR::Zero(3, 3)) == 0.0);
  }
}

TEST_CASE("propagate_jacobi matches closed forms and conserves the Wronskian") {
  for (double c : {-1.0, 0.0, 1.0}) {
    const auto spec = ManifoldSpec::constant_curvature(c, 3);
    const Eigen::VectorXd x = spec.base_point();
    const auto traj = integrate_geodesic(spec, x, spec.tangent_basis(x).col(0), 10.0, 1e-3);
    const auto js = propagate_jacobi(spec, traj, 1e-3);
    REQUIRE(js.grid().size() == traj.sigma.size());
    double worst = 0.0;
    for (std::size_t i = 0; i < js.grid().size(); ++i) {
      const auto got = js.at_index(i);
      const auto want = closed_form_jacobi(c, js.grid()[i], 3);
      worst = std::max({worst, max_entry_error(got.xi, want.xi), max_entry_error(got.eta, want.eta)});
    }
    CAPTURE(c);
    CHECK(worst <= 1e-6);
    CHECK(js.wronskian_drift() <= 1e-8);
    CHECK(js.fundamental_determinant(js.grid().size() - 1) == doctest::Approx(1.0).epsilon(1e-9));
  }
}

TEST_CASE("propagate_jacobi on warped products") {
  for (int n : {2, 3}) {
    const auto [x, theta] = bumpy_initial(n, 1.0, 0.3);
    const auto traj = integrate_geodesic(bumpy(n), x, theta, 8.0);
    const auto js = propagate_jacobi(bumpy(n), traj);
    CHECK(js.wronskian_drift() <= 1e-8);
    CHECK(js.max_residual() <= 1e-4 * js.step());
    // det H > 0 just after the start, where H ~ sigma Id.
    for (double s = 1e-3; s <= 0.01 + 1e-12; s += 1e-3) {
      CHECK(static_cast<double>(js.sample(s).eta.determinant()) > 0.0);
    }
  }
}

TEST_CASE("det H is positive near the start on every kind") {
  std::vector<std::pair<ManifoldSpec, std::pair<Eigen::VectorXd, Eigen::VectorXd>>> cases;
  for (double c : {-1.0, 0.0, 1.0}) {
    const auto spec = ManifoldSpec::constant_curvature(c, 3);
    cases.push_back({spec, {spec.base_point(), spec.tangent_basis(spec.base_point()).col(0)}});
  }
  const auto torus = ManifoldSpec::flat_torus(Eigen::MatrixXd::Identity(3, 3));
  cases.push_back({torus, {vec({0, 0, 0}), vec({0, 0, 1})}});
  cases.push_back({bumpy(3), bumpy_initial(3, 2.0, -0.8)});
  for (const auto& [spec, init] : cases) {
    const auto traj = integrate_geodesic(spec, init.first, init.second, 0.02, 1e-3);
    const auto js = propagate_jacobi(spec, traj, 1e-3);
    for (std::size_t i = 1; i < js.grid().size() && js.grid()[i] <= 0.01 + 1e-12; ++i) {
      CHECK(js.det_eta(i) > 0.0);
    }
  }
}

TEST_CASE("singular sets on the round sphere") {
  for (int n : {2, 3}) {
    const auto spec = ManifoldSpec::constant_curvature(1.0, n);
    const Eigen::VectorXd x = spec.base_point();
    const auto traj = integrate_geodesic(spec, x, spec.tangent_basis(x).col(0), 10.0);
    const auto js = propagate_jacobi(spec, traj);
    CAPTURE(n);
    // Conjugate points at k pi (det H) and poles of tan at pi/2 + k pi (det Xi).
    REQUIRE(js.eta_singular().size() == 4);
    REQUIRE(js.xi_singular().size() == 3);
    const double tol = n == 2 ? 1e-9 : 1e-7;
    for (int k = 0; k < 4; ++k) CHECK(std::fabs(js.eta_singular()[k] - k * pi) <= tol);
    for (int k = 0; k < 3; ++k) CHECK(std::fabs(js.xi_singular()[k] - (k + 0.5) * pi) <= tol);
    CHECK(js.distance_to_eta_singular(3.0) == doctest::Approx(pi - 3.0).epsilon(1e-6));
  }
}

TEST_CASE("flat and hyperbolic kinds have no conjugate points beyond 0") {
  for (double c : {-1.0, 0.0}) {
    const auto spec = ManifoldSpec::constant_curvature(c, 2);
    const Eigen::VectorXd x = spec.base_point();
    const auto traj = integrate_geodesic(spec, x, spec.tangent_basis(x).col(0), 5.0);
    const auto js = propagate_jacobi(spec, traj);
    REQUIRE(js.eta_singular().size() == 1);
    CHECK(js.eta_singular()[0] == 0.0);
    CHECK(js.xi_singular().empty());
  }
}

TEST_CASE("propagate_jacobi regrids and samples between grid points") {
  const auto spec = ManifoldSpec::constant_curvature(1.0, 2);
  const Eigen::VectorXd x = spec.base_point();
  const auto traj = integrate_geodesic(spec, x, spec.tangent_basis(x).col(0), 3.0, 1e-2);
  const auto js = propagate_jacobi(spec, traj, 1e-3);
  CHECK(js.grid().size() == 3001);
  const auto s = js.sample(1.23456);
  CHECK(static_cast<double>(s.eta(0, 0)) == doctest::Approx(std::sin(1.23456)).epsilon(1e-13));
  CHECK_THROWS_AS(js.sample(3.5), DomainError);
  const auto other = ManifoldSpec::constant_curvature(2.0, 2);
  CHECK_THROWS_AS(propagate_jacobi(other, traj), InputError);
}

TEST_CASE("write_jacobi_csv layout") {
  const auto spec = ManifoldSpec::constant_curvature(1.0, 2);
  const Eigen::VectorXd x = spec.base_point();
  const auto traj = integrate_geodesic(spec, x, spec.tangent_basis(x).col(0), 0.01);
  const auto js = propagate_jacobi(spec, traj);
  std::ostringstream out;
  write_jacobi_csv(out, traj, js);
  std::istringstream in(out.str());
  std::string header, row;
  std::getline(in, header);
  CHECK(header == "sigma,x0,x1,x2,det_xi,det_eta");
  int rows = 0;
  while (std::getline(in, row)) ++rows;
  CHECK(rows == 11);
  CHECK(out.str().find("0,1,0,0,1,0\n") != std::string::npos);
}
