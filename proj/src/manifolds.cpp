#include "gtube/manifolds.hpp"

#include "gtube/error.hpp"
#include "model.hpp"

#include <fmt/format.h>
#include <gsl/gsl_integration.h>

#include <cmath>
#include <numbers>

namespace gtube {
namespace {

constexpr double kUnitTolerance = 1e-9;

// Minimum sectional curvature sampled over the (capped) warp domain.
double min_warp_curvature(const WarpFunction& warp) {
  const double lo = std::isfinite(warp.domain().lo) ? warp.domain().lo : -50.0;
  const double hi = std::isfinite(warp.domain().hi) ? warp.domain().hi : 50.0;
  double worst = std::numeric_limits<double>::infinity();
  constexpr int kSamples = 2000;
  for (int i = 1; i < kSamples; ++i) {
    const double r = lo + (hi - lo) * i / kSamples;
    const auto [f, df, ddf] = warp(r);
    worst = std::min(worst, static_cast<double>(-ddf / f));
    worst = std::min(worst, static_cast<double>((1 - df * df) / (f * f)));
  }
  return worst;
}

}  // namespace

ManifoldSpec::ManifoldSpec(Kind kind, bool entire_tube)
    : kind_(std::move(kind)), entire_tube_(entire_tube) {}

ManifoldSpec ManifoldSpec::constant_curvature(double c, int n, std::optional<bool> entire_tube) {
  if (n < 2) throw InputError(fmt::format("constant_curvature: dimension n={} < 2", n));
  if (!std::isfinite(c)) throw InputError("constant_curvature: non-finite c");
  const bool tube = entire_tube.value_or(c >= 0.0);
  if (tube && c < 0.0) {
    throw InputError("constant_curvature: entire_tube requires nonnegative curvature");
  }
  return ManifoldSpec(ConstantCurvature{c, n}, tube);
}

ManifoldSpec ManifoldSpec::flat_torus(Eigen::MatrixXd basis, std::optional<bool> entire_tube) {
  if (basis.rows() < 2 || basis.rows() != basis.cols()) {
    throw InputError("flat_torus: basis must be square with n >= 2");
  }
  if (!basis.allFinite()) throw InputError("flat_torus: non-finite basis entry");
  const double det = basis.determinant();
  if (!(std::fabs(det) > 1e-12 * std::pow(basis.norm(), basis.rows()))) {
    throw InputError("flat_torus: lattice basis is not invertible");
  }
  return ManifoldSpec(FlatTorus{std::move(basis)}, entire_tube.value_or(true));
}

ManifoldSpec ManifoldSpec::warped_product(WarpFunction warp, int n,
                                          std::optional<bool> entire_tube) {
  if (n < 2) throw InputError(fmt::format("warped_product: dimension n={} < 2", n));
  const bool tube = entire_tube.value_or(false);
  if (tube && min_warp_curvature(warp) < -1e-12) {
    throw InputError(fmt::format(
        "warped_product: entire_tube declared but warp {} has negative curvature", warp.id()));
  }
  return ManifoldSpec(WarpedProduct{std::move(warp), n}, tube);
}

int ManifoldSpec::dimension() const noexcept {
  return std::visit(
      [](const auto& k) -> int {
        using K = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<K, FlatTorus>) {
          return static_cast<int>(k.basis.rows());
        } else {
          return k.n;
        }
      },
      kind_);
}

int ManifoldSpec::ambient_dimension() const noexcept {
  const int n = dimension();
  if (const auto* cc = std::get_if<ConstantCurvature>(&kind_)) return cc->c == 0.0 ? n : n + 1;
  if (std::holds_alternative<WarpedProduct>(kind_)) return n + 1;
  return n;
}

bool ManifoldSpec::homogeneous() const noexcept {
  return !std::holds_alternative<WarpedProduct>(kind_);
}

std::optional<double> ManifoldSpec::volume() const {
  if (const auto* cc = std::get_if<ConstantCurvature>(&kind_)) {
    if (cc->c <= 0.0) return std::nullopt;
    return unit_sphere_area(cc->n + 1) * std::pow(cc->c, -0.5 * cc->n);
  }
  if (const auto* torus = std::get_if<FlatTorus>(&kind_)) {
    return std::fabs(torus->basis.determinant());
  }
  const auto& wp = std::get<WarpedProduct>(kind_);
  if (!wp.warp.domain().bounded()) return std::nullopt;
  // Vol(S^{n-1}) * int f^{n-1} dr over the domain.
  gsl_integration_glfixed_table* table = gsl_integration_glfixed_table_alloc(64);
  gsl_function fn;
  struct Ctx {
    const WarpFunction* warp;
    int n;
  } ctx{&wp.warp, wp.n};
  fn.function = [](double r, void* p) {
    const auto* c = static_cast<Ctx*>(p);
    return std::pow(static_cast<double>((*c->warp)(r).f), c->n - 1);
  };
  fn.params = &ctx;
  const double integral =
      gsl_integration_glfixed(&fn, wp.warp.domain().lo, wp.warp.domain().hi, table);
  gsl_integration_glfixed_table_free(table);
  return unit_sphere_area(wp.n) * integral;
}

std::string ManifoldSpec::tag() const {
  return std::visit(
      [](const auto& k) -> std::string {
        using K = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<K, ConstantCurvature>) {
          return fmt::format("constant_curvature(c={},n={})", k.c, k.n);
        } else if constexpr (std::is_same_v<K, FlatTorus>) {
          return fmt::format("flat_torus(n={},vol={})", k.basis.rows(),
                             std::fabs(k.basis.determinant()));
        } else {
          return fmt::format("warped_product(warp={},n={})", k.warp.id(), k.n);
        }
      },
      kind_);
}

Eigen::VectorXd ManifoldSpec::base_point() const {
  const int d = ambient_dimension();
  Eigen::VectorXd x = Eigen::VectorXd::Zero(d);
  if (const auto* cc = std::get_if<ConstantCurvature>(&kind_)) {
    if (cc->c != 0.0) x[0] = 1.0 / std::sqrt(std::fabs(cc->c));
  } else if (const auto* wp = std::get_if<WarpedProduct>(&kind_)) {
    const Interval& dom = wp->warp.domain();
    double r = 1.0;
    if (!dom.contains(r)) {
      if (dom.bounded()) {
        r = 0.5 * (dom.lo + dom.hi);
      } else if (std::isfinite(dom.lo)) {
        r = dom.lo + 1.0;
      } else {
        r = dom.hi - 1.0;
      }
    }
    x[0] = r;
    x[1] = 1.0;
  }
  return x;
}

double ManifoldSpec::inner(const Eigen::VectorXd& x, const Eigen::VectorXd& u,
                           const Eigen::VectorXd& v) const {
  if (const auto* cc = std::get_if<ConstantCurvature>(&kind_)) {
    double s = u.dot(v);
    if (cc->c < 0.0) s -= 2 * u[0] * v[0];
    return s;
  }
  if (const auto* wp = std::get_if<WarpedProduct>(&kind_)) {
    const double f = static_cast<double>(wp->warp(x[0]).f);
    const int n = wp->n;
    return u[0] * v[0] + f * f * u.tail(n).dot(v.tail(n));
  }
  return u.dot(v);
}

Eigen::MatrixXd ManifoldSpec::tangent_basis(const Eigen::VectorXd& x) const {
  const int n = dimension();
  const int d = ambient_dimension();
  if (x.size() != d) {
    throw InputError(fmt::format("{}: point has {} coordinates, expected {}", tag(), x.size(), d));
  }
  if (const auto* cc = std::get_if<ConstantCurvature>(&kind_); cc && cc->c != 0.0) {
    Eigen::MatrixXd out(d, n);
    int found = 0;
    const double xx = inner(x, x, x);
    for (int axis = 0; axis < d && found < n; ++axis) {
      Eigen::VectorXd w = Eigen::VectorXd::Unit(d, axis);
      w -= (inner(x, w, x) / xx) * x;
      for (int pass = 0; pass < 2; ++pass)
        for (int j = 0; j < found; ++j) w -= inner(x, w, out.col(j)) * out.col(j);
      const double norm2 = inner(x, w, w);
      if (norm2 < 1e-6) continue;
      out.col(found++) = w / std::sqrt(norm2);
    }
    return out;
  }
  if (const auto* wp = std::get_if<WarpedProduct>(&kind_)) {
    const Eigen::VectorXd p = x.tail(n).normalized();
    const double f = static_cast<double>(wp->warp(x[0]).f);
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(d, n);
    out(0, 0) = 1.0;
    std::vector<Eigen::VectorXd> fiber{p};
    for (int axis = 0; axis < n && static_cast<int>(fiber.size()) < n; ++axis) {
      Eigen::VectorXd w = Eigen::VectorXd::Unit(n, axis);
      for (int pass = 0; pass < 2; ++pass)
        for (const auto& b : fiber) w -= w.dot(b) * b;
      if (w.norm() < 1e-6) continue;
      fiber.push_back(w.normalized());
    }
    for (int j = 1; j < n; ++j) out.col(j).tail(n) = fiber[j] / f;
    return out;
  }
  return Eigen::MatrixXd::Identity(n, n);
}

void ManifoldSpec::validate_initial(const Eigen::VectorXd& x, const Eigen::VectorXd& theta) const {
  const int d = ambient_dimension();
  if (x.size() != d || theta.size() != d) {
    throw InputError(fmt::format("{}: expected {}-dimensional point and direction", tag(), d));
  }
  if (!x.allFinite() || !theta.allFinite()) throw InputError(tag() + ": non-finite input");
  if (const auto* cc = std::get_if<ConstantCurvature>(&kind_); cc && cc->c != 0.0) {
    const double xx = inner(x, x, x);
    if (std::fabs(xx * cc->c - 1.0) > kUnitTolerance || (cc->c < 0.0 && x[0] <= 0.0)) {
      throw InputError(tag() + ": point is not on the model space");
    }
    if (std::fabs(inner(x, x, theta)) > kUnitTolerance * std::sqrt(std::fabs(xx))) {
      throw InputError(tag() + ": direction is not tangent at the point");
    }
  }
  if (const auto* wp = std::get_if<WarpedProduct>(&kind_)) {
    const int n = wp->n;
    if (!wp->warp.domain().contains(x[0])) {
      throw DomainError(fmt::format("{}: radius {} outside warp domain", tag(), x[0]));
    }
    if (std::fabs(x.tail(n).norm() - 1.0) > kUnitTolerance) {
      throw InputError(tag() + ": fiber coordinate is not a unit vector");
    }
    if (std::fabs(theta.tail(n).dot(x.tail(n))) > kUnitTolerance) {
      throw InputError(tag() + ": direction is not tangent to the fiber sphere");
    }
  }
  const double norm2 = inner(x, theta, theta);
  if (std::fabs(norm2 - 1.0) > kUnitTolerance) {
    throw InputError(fmt::format("{}: direction has metric norm^2 {} (expected 1)", tag(), norm2));
  }
}

CurvatureFrameOperator curvature_along(const ManifoldSpec& spec, const Eigen::VectorXd& x,
                                       const Eigen::VectorXd& theta, double horizon,
                                       double step) {
  spec.validate_initial(x, theta);
  const int m = spec.dimension() - 1;
  auto model = detail::make_model(spec);
  if (spec.homogeneous()) {
    const VecR y0 = model->initial_state(x, theta);
    const Eigen::MatrixXd k = model->curvature(y0.data()).cast<double>();
    return CurvatureFrameOperator(m, [k](double) { return k; }, true);
  }
  if (!(horizon > 0.0) || !(step > 0.0)) {
    throw InputError("curvature_along: horizon and step must be positive");
  }
  const int steps = static_cast<int>(std::ceil(horizon / step - 1e-9));
  const Real h = Real(horizon) / steps;
  auto rhs = [model](const VecR& y) {
    VecR dy(y.size());
    model->derivative(y.data(), dy.data());
    return dy;
  };
  std::vector<VecR> states;
  states.reserve(steps + 1);
  VecR y = model->initial_state(x, theta);
  states.push_back(y);
  for (int i = 0; i < steps; ++i) {
    rk4_step(rhs, y, h);
    states.push_back(y);
  }
  auto evaluator = [model, rhs, states = std::move(states), h, horizon, steps](double sigma) {
    if (!(sigma >= 0.0 && sigma <= horizon)) {
      throw DomainError(fmt::format("curvature_along: sigma={} outside [0, {}]", sigma, horizon));
    }
    const int i = std::min(static_cast<int>(std::floor(sigma / h)), steps);
    VecR y = states[i];
    const Real rest = Real(sigma) - i * h;
    if (rest > 0) rk4_step(rhs, y, rest);
    return Eigen::MatrixXd(model->curvature(y.data()).cast<double>());
  };
  return CurvatureFrameOperator(m, std::move(evaluator), false);
}

}  // namespace gtube
