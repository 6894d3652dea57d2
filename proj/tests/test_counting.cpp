#include "gtube/counting.hpp"
#include "gtube/error.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>

using namespace gtube;
using std::numbers::pi;

namespace {

// 2 pi int_0^T |sin s| ds, summing whole half-periods exactly.
double sphere_total(double T) {
  const double half = std::floor(T / pi);
  return 2 * pi * (2 * half + (1 - std::cos(T - half * pi)));
}

CountingCurve synthetic(std::function<double(double)> f, int count, double t0 = 1.0,
                        double dt = 1.0) {
  CountingCurve c;
  for (int i = 0; i < count; ++i) {
    c.T.push_back(t0 + dt * i);
    c.values.push_back(f(c.T.back()));
  }
  c.method = CountingMethod::oracle;
  return c;
}

JacobiSystem jacobi_for(const ManifoldSpec& spec, double T) {
  const Eigen::VectorXd x = spec.base_point();
  const auto traj = integrate_geodesic(spec, x, spec.tangent_basis(x).col(0), T);
  return propagate_jacobi(spec, traj);
}

}  // namespace

TEST_CASE("berger_bott_integrand examples") {
  const auto sphere = ManifoldSpec::constant_curvature(1.0, 2);
  const auto js = jacobi_for(sphere, 4.0);
  CHECK(berger_bott_integrand(js, pi / 2) == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(berger_bott_integrand(js, 0.0) == 0.0);
  CHECK(std::fabs(berger_bott_integrand(js, pi)) <= 1e-3);
  CHECK_THROWS_AS(berger_bott_integrand(js, 4.5), DomainError);

  const auto flat = ManifoldSpec::constant_curvature(0.0, 3);
  CHECK(berger_bott_integrand(jacobi_for(flat, 3.0), 2.0) == doctest::Approx(4.0).epsilon(1e-10));
}

TEST_CASE("berger_bott_total: round sphere and flat torus") {
  const auto sphere = ManifoldSpec::constant_curvature(1.0, 2);
  const auto quad = unit_sphere_quadrature(2, QuadratureScheme::product_gauss, 16);
  CHECK(std::fabs(berger_bott_total(sphere, sphere.base_point(), pi, quad) - 4 * pi) <= 1e-4);
  CHECK(berger_bott_total(sphere, sphere.base_point(), 0.0, quad) == 0.0);
  for (double T : {0.7, 4.0, 9.5}) {
    CHECK(std::fabs(berger_bott_total(sphere, sphere.base_point(), T, quad) - sphere_total(T)) <=
          1e-4);
  }

  const auto torus = ManifoldSpec::flat_torus(Eigen::MatrixXd::Identity(2, 2));
  CHECK(berger_bott_total(torus, Eigen::VectorXd::Zero(2), 5.0, quad) ==
        doctest::Approx(25 * pi).epsilon(1e-10));

  const auto quad3 = unit_sphere_quadrature(3, QuadratureScheme::product_gauss, 4);
  CHECK_THROWS_AS(berger_bott_total(sphere, sphere.base_point(), 1.0, quad3), InputError);
}

TEST_CASE("berger_bott_total is bit-identical across thread counts") {
  const auto spec =
      ManifoldSpec::warped_product(WarpFunction::parse("sin:0.5,1,0,2", Interval{}), 3);
  const auto quad = unit_sphere_quadrature(3, QuadratureScheme::product_gauss, 3);
  Eigen::VectorXd x = spec.base_point();
  const double one = berger_bott_total(spec, x, 3.0, quad, 1e-2, 1);
  for (int threads : {2, 3, 7, 64}) CHECK(berger_bott_total(spec, x, 3.0, quad, 1e-2, threads) == one);
}

TEST_CASE("berger_bott_curve agrees with single totals on the grid") {
  const auto sphere = ManifoldSpec::constant_curvature(1.0, 2);
  const auto quad = unit_sphere_quadrature(2, QuadratureScheme::product_gauss, 8);
  const auto curve = berger_bott_curve(sphere, sphere.base_point(), {1.0, 2.0, 3.0, 10.0}, quad);
  CHECK(curve.method == CountingMethod::berger_bott);
  CHECK_NOTHROW(curve.validate());
  for (std::size_t i = 0; i < curve.size(); ++i) {
    CHECK(std::fabs(curve.values[i] - sphere_total(curve.T[i])) <= 1e-4);
  }
  CHECK_THROWS_AS(berger_bott_curve(sphere, sphere.base_point(), {2.0, 1.0}, quad), InputError);
}

TEST_CASE("count_sphere_arcs") {
  CHECK(count_sphere_arcs(pi / 2, 2 * pi) == 2);
  CHECK(count_sphere_arcs(1.0, 0.5) == 0);
  CHECK(count_sphere_arcs(1.0, 100.0) == 32);
  CHECK_THROWS_AS(count_sphere_arcs(0.0, 1.0), InputError);
  CHECK_THROWS_AS(count_sphere_arcs(pi, 1.0), InputError);
  // Brute force over arc lengths 2k pi +- d.
  for (double d : {0.1, 1.0, 2.9}) {
    for (double T : {0.05, 3.0, 17.0, 60.0}) {
      std::int64_t brute = 0;
      for (int k = 0; k < 100; ++k) {
        if (2 * k * pi + d <= T) ++brute;
        if (k >= 1 && 2 * k * pi - d <= T) ++brute;
      }
      CHECK(count_sphere_arcs(d, T) == brute);
    }
  }
}

TEST_CASE("count_torus_lattice") {
  const Eigen::MatrixXd unit = Eigen::MatrixXd::Identity(2, 2);
  const Eigen::VectorXd origin = Eigen::VectorXd::Zero(2);
  CHECK(count_torus_lattice(unit, origin, origin, 1.0) == 5);
  CHECK(count_torus_lattice(unit, origin, origin, 2.0) == 13);
  CHECK(count_torus_lattice(unit, origin, Eigen::Vector2d(0.5, 0), 0.4) == 0);

  // Skewed lattice against a wide brute-force sweep.
  Eigen::MatrixXd skew(2, 2);
  skew << 1.0, 0.0, 0.7, 0.4;
  const Eigen::Vector2d x(0.1, 0.2), y(0.9, -0.3);
  for (double T : {0.3, 1.0, 2.5}) {
    std::int64_t brute = 0;
    for (int i = -40; i <= 40; ++i)
      for (int j = -40; j <= 40; ++j) {
        const Eigen::Vector2d v = i * skew.row(0).transpose() + j * skew.row(1).transpose();
        if ((y - x + v).norm() <= T) ++brute;
      }
    CHECK(count_torus_lattice(skew, x, y, T) == brute);
  }
}

TEST_CASE("torus_count_integral_oracle") {
  const Eigen::MatrixXd unit = Eigen::MatrixXd::Identity(2, 2);
  CHECK(torus_count_integral_oracle(unit, 5.0, 100000, 1) == doctest::Approx(25 * pi).epsilon(0.01));
  CHECK(torus_count_integral_oracle(unit, 1.0, 100000, 1) == doctest::Approx(pi).epsilon(0.02));
  CHECK(torus_count_integral_oracle(unit, 1e-6, 1000, 1) <= 1e-2);
  CHECK(torus_count_integral_oracle(unit, 2.0, 500, 9) == torus_count_integral_oracle(unit, 2.0, 500, 9));
  CHECK_THROWS_AS(torus_count_integral_oracle(unit, 2.0, 0, 9), InputError);

  const Eigen::MatrixXd skew = (Eigen::MatrixXd(2, 2) << 1.0, 0.0, 0.4, 1.3).finished();
  const std::vector<double> Ts = {0.5, 1.5, 3.0, 4.0};
  const auto shared = torus_count_integral_oracle(skew, Ts, 2000, 4);
  REQUIRE(shared.size() == Ts.size());
  for (std::size_t i = 0; i < Ts.size(); ++i) {
    CHECK(shared[i] == torus_count_integral_oracle(skew, Ts[i], 2000, 4));
  }

  const auto torus = ManifoldSpec::flat_torus(unit);
  const auto quad = unit_sphere_quadrature(2, QuadratureScheme::product_gauss, 16);
  for (double T : {1.0, 2.0, 5.0, 10.0}) {
    const double bb = berger_bott_total(torus, Eigen::VectorXd::Zero(2), T, quad);
    const double oracle = torus_count_integral_oracle(unit, T, 20000, 3);
    CHECK(std::fabs(bb - oracle) / std::max(1.0, oracle) <= 0.02);
  }
}

TEST_CASE("classify_growth examples") {
  const auto square = classify_growth(synthetic([](double T) { return pi * T * T; }, 30));
  CHECK(square.cls == GrowthClass::polynomial);
  CHECK(square.degree == 2);
  CHECK(square.window_lo == 16.0);
  CHECK(square.window_hi == 30.0);

  const auto hyper = classify_growth(synthetic([](double T) { return 2 * pi * (std::cosh(T) - 1); }, 30));
  CHECK(hyper.cls == GrowthClass::exponential);
  CHECK(hyper.rate == doctest::Approx(1.0).epsilon(1e-3));

  const auto sphere = ManifoldSpec::constant_curvature(1.0, 2);
  const auto quad = unit_sphere_quadrature(2, QuadratureScheme::product_gauss, 4);
  std::vector<double> Ts;
  for (int i = 1; i <= 30; ++i) Ts.push_back(i);
  const auto round = classify_growth(berger_bott_curve(sphere, sphere.base_point(), Ts, quad, 1e-2));
  CHECK(round.cls == GrowthClass::polynomial);
  CHECK(round.degree == 1);

  CHECK_THROWS_AS(classify_growth(synthetic([](double T) { return T; }, 7, 1.0, 10.0)), InputError);
  CHECK_THROWS_AS(classify_growth(synthetic([](double T) { return T; }, 10, 1.0, 0.5)), InputError);
}

TEST_CASE("classify_growth is invariant under scaling") {
  const std::vector<CountingCurve> curves = {
      synthetic([](double T) { return T * T * T; }, 30),
      synthetic([](double T) { return 4 * T + std::sin(T); }, 30),
      synthetic([](double T) { return std::exp(0.5 * T); }, 30),
  };
  for (const auto& c : curves) {
    const auto base = classify_growth(c);
    for (double factor : {0.1, 10.0}) {
      const auto scaled = classify_growth(c.scaled(factor));
      CHECK(scaled.same_class(base));
      CHECK(scaled.slope == doctest::Approx(base.slope).epsilon(1e-9));
    }
  }
}

TEST_CASE("curve validation") {
  CountingCurve c{{1.0, 2.0}, {1.0, 0.5}, "x", CountingMethod::oracle};
  CHECK_THROWS_AS(c.validate(), InputError);
  c.values = {0.5, 1.0};
  CHECK_NOTHROW(c.validate());
  c.T = {1.0, 1.0};
  CHECK_THROWS_AS(c.validate(), InputError);
}

TEST_CASE("loop space Betti partial sums") {
  CHECK(loop_space_betti_partial_sums(2, 5) == 5);
  CHECK(loop_space_betti_partial_sums(3, 5) == 3);
  for (int n : {2, 3, 7}) CHECK(loop_space_betti_partial_sums(n, 1) == 1);
  // Brute count of degrees j < k divisible by n - 1.
  for (int n = 2; n <= 6; ++n)
    for (int k = 1; k <= 40; ++k) {
      int brute = 0;
      for (int j = 0; j < k; ++j) brute += j % (n - 1) == 0;
      CHECK(loop_space_betti_partial_sums(n, k) == brute);
    }
  CHECK_THROWS_AS(loop_space_betti_partial_sums(1, 3), InputError);
  CHECK(loop_space_betti_partial_sums(ManifoldSpec::constant_curvature(2.0, 4), 7) == 3);
  CHECK_THROWS_AS(loop_space_betti_partial_sums(ManifoldSpec::constant_curvature(0.0, 2), 3),
                  OutOfCatalogError);
}

TEST_CASE("Gromov inequality on the round 2-sphere") {
  const auto big = check_gromov_inequality(2, 20, 10.0);
  CHECK(big.holds);
  CHECK_FALSE(big.first_failure.has_value());
  REQUIRE(big.rhs.size() == 20);
  // RHS = (1/4pi) * 2pi int_0^{10k} |sin|.
  CHECK(big.rhs[4] == doctest::Approx(sphere_total(50.0) / (4 * pi)).epsilon(1e-5));

  const auto tiny = check_gromov_inequality(2, 20, 0.001);
  CHECK_FALSE(tiny.holds);
  CHECK(tiny.first_failure == 1);

  CHECK(check_gromov_inequality(2, 1, 1e3).holds);
  CHECK_THROWS_AS(check_gromov_inequality(2, 5, 0.0), InputError);

  const auto search = find_gromov_constant(2, 20, {0.5, 1, 2, 5, 10});
  REQUIRE(search.minimal_C.has_value());
  CHECK(*search.minimal_C == 5.0);
}
