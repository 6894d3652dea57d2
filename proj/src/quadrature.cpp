#include "gtube/error.hpp"
#include "gtube/manifolds.hpp"
#include "gtube/random.hpp"

#include <fmt/format.h>
#include <gsl/gsl_integration.h>

#include <cmath>
#include <numbers>

namespace gtube {
namespace {

SphereQuadrature circle_rule(int m) {
  SphereQuadrature q;
  q.dimension = 2;
  const double w = 2.0 * std::numbers::pi / m;
  for (int k = 0; k < m; ++k) {
    const double a = w * k;
    Eigen::VectorXd node(2);
    node << std::cos(a), std::sin(a);
    q.nodes.push_back(std::move(node));
    q.weights.push_back(w);
  }
  return q;
}

// S^{d-1} as (t, sqrt(1 - t^2) y) with y in S^{d-2}; the measure is
// (1 - t^2)^{(d-3)/2} dt dy, so `t_rule` must be Gauss for that weight.
SphereQuadrature lift(const SphereQuadrature& lower, const std::vector<double>& t_nodes,
                      const std::vector<double>& t_weights) {
  SphereQuadrature q;
  q.dimension = lower.dimension + 1;
  for (std::size_t i = 0; i < t_nodes.size(); ++i) {
    const double t = t_nodes[i];
    const double s = std::sqrt(std::max(0.0, 1.0 - t * t));
    for (std::size_t j = 0; j < lower.nodes.size(); ++j) {
      Eigen::VectorXd node(q.dimension);
      node[0] = t;
      node.tail(lower.dimension) = s * lower.nodes[j];
      q.nodes.push_back(std::move(node));
      q.weights.push_back(t_weights[i] * lower.weights[j]);
    }
  }
  return q;
}

void gauss_legendre(int m, std::vector<double>& nodes, std::vector<double>& weights) {
  gsl_integration_glfixed_table* table = gsl_integration_glfixed_table_alloc(m);
  if (table == nullptr) throw ConfigurationError("quadrature: Gauss-Legendre table allocation failed");
  nodes.resize(m);
  weights.resize(m);
  for (int i = 0; i < m; ++i) {
    gsl_integration_glfixed_point(-1.0, 1.0, i, &nodes[i], &weights[i], table);
  }
  gsl_integration_glfixed_table_free(table);
}

// Gauss rule for the weight sqrt(1 - t^2) on [-1, 1] (Chebyshev, second kind).
void gauss_chebyshev_u(int m, std::vector<double>& nodes, std::vector<double>& weights) {
  nodes.resize(m);
  weights.resize(m);
  for (int k = 1; k <= m; ++k) {
    const double a = k * std::numbers::pi / (m + 1);
    nodes[k - 1] = std::cos(a);
    weights[k - 1] = std::numbers::pi / (m + 1) * std::sin(a) * std::sin(a);
  }
}

SphereQuadrature product_gauss(int n, int m) {
  if (n == 2) return circle_rule(m);
  std::vector<double> t, w;
  if (n == 3) {
    gauss_legendre(m, t, w);
    return lift(circle_rule(2 * m), t, w);
  }
  if (n == 4) {
    gauss_chebyshev_u(m, t, w);
    return lift(product_gauss(3, m), t, w);
  }
  throw ConfigurationError(
      fmt::format("quadrature: product_gauss is available for n <= 4 (got n={}); use monte_carlo",
                  n));
}

SphereQuadrature monte_carlo(int n, int samples, std::uint64_t seed) {
  SphereQuadrature q;
  q.dimension = n;
  Rng rng(seed);
  const double w = unit_sphere_area(n) / samples;
  q.nodes.reserve(samples);
  for (int s = 0; s < samples; ++s) {
    Eigen::VectorXd v(n);
    double norm = 0.0;
    do {
      for (int i = 0; i < n; ++i) v[i] = rng.normal();
      norm = v.norm();
    } while (norm < 1e-12);
    q.nodes.push_back(v / norm);
  }
  q.weights.assign(samples, w);
  return q;
}

}  // namespace

double SphereQuadrature::total_weight() const { return pairwise_sum(weights); }

SphereQuadrature unit_sphere_quadrature(int n, QuadratureScheme scheme, int order_or_samples,
                                        std::uint64_t seed) {
  if (n < 2) throw InputError(fmt::format("quadrature: dimension n={} < 2", n));
  if (order_or_samples < 1) throw InputError("quadrature: order/samples must be >= 1");
  switch (scheme) {
    case QuadratureScheme::product_gauss: return product_gauss(n, order_or_samples);
    case QuadratureScheme::monte_carlo: return monte_carlo(n, order_or_samples, seed);
  }
  throw ConfigurationError("quadrature: unknown scheme");
}

QuadratureScheme parse_quadrature_scheme(std::string_view name) {
  if (name == "product_gauss") return QuadratureScheme::product_gauss;
  if (name == "monte_carlo") return QuadratureScheme::monte_carlo;
  throw ConfigurationError(fmt::format("unknown quadrature scheme '{}'", name));
}

std::string to_string(QuadratureScheme scheme) {
  return scheme == QuadratureScheme::product_gauss ? "product_gauss" : "monte_carlo";
}

}  // namespace gtube
