#pragma once

#include "gtube/flow.hpp"
#include "gtube/manifolds.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace gtube {

enum class CountingMethod { berger_bott, oracle };
std::string to_string(CountingMethod method);

/// Sampled total counting function T -> int_M n_T(x, y) dy.
struct CountingCurve {
  std::vector<double> T;
  std::vector<double> values;
  std::string manifold_tag;
  CountingMethod method = CountingMethod::berger_bott;

  std::size_t size() const noexcept { return T.size(); }
  /// Throws InputError unless T is strictly increasing and positive and the
  /// values are finite, nonnegative and nondecreasing.
  void validate() const;
  CountingCurve scaled(double factor) const;
};

enum class GrowthClass { polynomial, exponential };
std::string to_string(GrowthClass cls);

struct GrowthReport {
  GrowthClass cls = GrowthClass::polynomial;
  int degree = 0;       ///< polynomial only
  double rate = 0.0;    ///< exponential only
  double slope = 0.0;   ///< fitted slope of the chosen model
  double residual = 0.0;  ///< RMS residual on held-out tail points
  double polynomial_residual = 0.0;
  double exponential_residual = 0.0;
  double window_lo = 0.0;
  double window_hi = 0.0;

  bool same_class(const GrowthReport& other) const {
    return cls == other.cls && (cls == GrowthClass::exponential || degree == other.degree);
  }
};

/// |det H(sigma)|, linearly interpolated between grid samples.
double berger_bott_integrand(const JacobiSystem& js, double sigma);

/// int_0^T dsigma int_S |det H| dtheta by quadrature over initial directions
/// and the composite trapezoid rule in sigma. Bit-identical for any thread count.
double berger_bott_total(const ManifoldSpec& spec, const Eigen::VectorXd& x, double T,
                         const SphereQuadrature& quad, double step = kDefaultStep,
                         int threads = 1);

/// Totals at every T of `Ts` from one integration to max(Ts) per direction.
CountingCurve berger_bott_curve(const ManifoldSpec& spec, const Eigen::VectorXd& x,
                                const std::vector<double>& Ts, const SphereQuadrature& quad,
                                double step = kDefaultStep, int threads = 1);

/// Arcs of length <= T between two points at distance d on the unit round sphere.
std::int64_t count_sphere_arcs(double d, double T);

/// #{v in lattice : |y - x + v| <= T}; lattice generators are the rows of `basis`.
std::int64_t count_torus_lattice(const Eigen::MatrixXd& basis, const Eigen::VectorXd& x,
                                 const Eigen::VectorXd& y, double T);

/// |det basis| * mean of count_torus_lattice(0, y, T) over uniform y in the cell.
double torus_count_integral_oracle(const Eigen::MatrixXd& basis, double T, int samples,
                                   std::uint64_t seed);
/// Same estimate for every T at once, from one shared set of samples.
std::vector<double> torus_count_integral_oracle(const Eigen::MatrixXd& basis,
                                                const std::vector<double>& Ts, int samples,
                                                std::uint64_t seed);

/// Fits log v against log T and against T on the upper half of the samples,
/// holding out the last third of that window, and keeps the better model.
GrowthReport classify_growth(const CountingCurve& curve);

/// sum_{j<k} dim H_j(Omega S^n; Q).
std::int64_t loop_space_betti_partial_sums(int sphere_dimension, std::int64_t k);
/// Same for a manifold from the catalog; only round spheres are supported.
std::int64_t loop_space_betti_partial_sums(const ManifoldSpec& spec, std::int64_t k);

struct GromovOptions {
  QuadratureScheme scheme = QuadratureScheme::product_gauss;
  int order = 16;
  double step = 1e-2;
  std::uint64_t seed = 0;
  int threads = 1;
};

struct GromovReport {
  int sphere_dimension = 0;
  int K = 0;
  double C = 0.0;
  bool holds = false;
  std::optional<int> first_failure;
  std::vector<std::int64_t> betti;  ///< index k-1
  std::vector<double> rhs;          ///< (1/Vol) * total at T = C k
};

GromovReport check_gromov_inequality(int sphere_dimension, int K, double C,
                                     const GromovOptions& options = {});

struct GromovSearch {
  std::vector<GromovReport> reports;  ///< one per grid value, in grid order
  std::optional<double> minimal_C;
};

GromovSearch find_gromov_constant(int sphere_dimension, int K, std::vector<double> grid,
                                  const GromovOptions& options = {});

}  // namespace gtube
