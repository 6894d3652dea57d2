#include "gtube/flow.hpp"

#include "coupled.hpp"
#include "gtube/error.hpp"
#include "model.hpp"

#include <boost/math/tools/minima.hpp>
#include <boost/math/tools/roots.hpp>
#include <fmt/format.h>
#include <fmt/ostream.h>

#include <algorithm>
#include <cmath>
#include <ostream>

namespace gtube {
namespace {

constexpr double kDriftLimit = 1e-6;
constexpr double kZeroWidth = 1e-10;
constexpr Real kZeroThreshold = 1e-8;
constexpr Real kCandidateThreshold = 1e-2;

int grid_steps(double T, double step) {
  return std::max(1, static_cast<int>(std::ceil(T / step - 1e-9)));
}

void validate_lengths(double T, double step) {
  if (!(T > 0.0) || !std::isfinite(T)) throw InputError(fmt::format("length T={} must be positive", T));
  if (!(step > 0.0) || !std::isfinite(step)) {
    throw InputError(fmt::format("step={} must be positive", step));
  }
  if (step > T) throw InputError(fmt::format("step={} exceeds length T={}", step, T));
}

void check_conservation(const detail::GeodesicModel& model, const Real* y, double sigma) {
  const double speed = model.speed_defect(y);
  const double frame = model.frame_defect(y);
  if (!(speed <= kDriftLimit)) {
    throw IntegrationFailure(
        fmt::format("geodesic speed drifted by {:.3e} at sigma={}", speed, sigma), sigma);
  }
  if (!(frame <= kDriftLimit)) {
    throw IntegrationFailure(
        fmt::format("parallel frame lost orthonormality by {:.3e} at sigma={}", frame, sigma),
        sigma);
  }
}

double distance_to(const std::vector<double>& points, double sigma) {
  double best = std::numeric_limits<double>::infinity();
  for (double p : points) best = std::min(best, std::fabs(p - sigma));
  return best;
}

}  // namespace

GeodesicTrajectory integrate_geodesic(const ManifoldSpec& spec, const Eigen::VectorXd& x,
                                      const Eigen::VectorXd& theta, double T, double step) {
  validate_lengths(T, step);
  spec.validate_initial(x, theta);
  const auto model = detail::make_model(spec);
  const int steps = grid_steps(T, step);
  const Real h = Real(T) / steps;

  GeodesicTrajectory traj{.spec = spec, .x = x, .theta = theta, .step = 0.0, .sigma = {}, .position = {}, .velocity = {}, .frame = {}};
  traj.step = static_cast<double>(h);
  traj.sigma.reserve(steps + 1);
  auto rhs = [&model](const VecR& y) {
    VecR dy(y.size());
    model->derivative(y.data(), dy.data());
    return dy;
  };
  VecR y = model->initial_state(x, theta);
  for (int i = 0; i <= steps; ++i) {
    if (i > 0) rk4_step(rhs, y, h);
    const double sigma = i == steps ? T : static_cast<double>(i * h);
    check_conservation(*model, y.data(), sigma);
    traj.sigma.push_back(sigma);
    traj.position.push_back(model->position(y.data()));
    traj.velocity.push_back(model->velocity(y.data()));
    traj.frame.push_back(model->frame(y.data()));
    traj.max_speed_defect = std::max(traj.max_speed_defect, model->speed_defect(y.data()));
    traj.max_frame_defect = std::max(traj.max_frame_defect, model->frame_defect(y.data()));
  }
  return traj;
}

JacobiSystem propagate_jacobi(const ManifoldSpec& spec, const GeodesicTrajectory& traj,
                              double step) {
  if (traj.sigma.size() < 2) throw InputError("propagate_jacobi: empty trajectory");
  if (spec.tag() != traj.spec.tag()) {
    throw InputError("propagate_jacobi: trajectory belongs to a different manifold");
  }
  const double T = traj.length();
  validate_lengths(T, step);

  const bool same_grid = std::fabs(step - traj.step) <= 1e-12 * step;
  const int steps = same_grid ? static_cast<int>(traj.sigma.size()) - 1 : grid_steps(T, step);
  const Real h = Real(T) / steps;

  detail::CoupledFlow flow(detail::make_model(spec));
  JacobiSystem js;
  js.model_ = flow.model_ptr();
  js.m_ = flow.normal_dimension();
  js.step_ = static_cast<double>(h);
  js.grid_.reserve(steps + 1);
  js.states_.reserve(steps + 1);

  VecR y = flow.initial_state(traj.x, traj.theta);
  for (int i = 0; i <= steps; ++i) {
    if (i > 0) flow.step(y, h);
    const double sigma = i == steps ? T : static_cast<double>(i * h);
    check_conservation(flow.model(), y.data(), sigma);
    js.grid_.push_back(sigma);
    js.states_.push_back(y);
    js.det_xi_.push_back(static_cast<double>(flow.block(y, 0).determinant()));
    js.det_eta_.push_back(static_cast<double>(flow.block(y, 2).determinant()));
  }

  // Y'' + K Y on the grid, with Y'' from the fourth-order five-point stencil.
  const double tolerance = 1e-4 * step;
  double worst_sigma = 0.0;
  for (int i = 2; i + 2 <= steps; ++i) {
    const MatR k = flow.model().curvature(js.states_[i].data());
    const Real k_scale = std::max(Real(1), k.cwiseAbs().maxCoeff());
    for (int b : {0, 2}) {
      const MatR second = (-flow.block(js.states_[i + 2], b) + 16 * flow.block(js.states_[i + 1], b) -
                           30 * flow.block(js.states_[i], b) + 16 * flow.block(js.states_[i - 1], b) -
                           flow.block(js.states_[i - 2], b)) /
                          (12 * h * h);
      const MatR y_i = flow.block(js.states_[i], b);
      const Real scale = std::max(Real(1), y_i.cwiseAbs().maxCoeff()) * k_scale;
      const double r = static_cast<double>((second + k * y_i).cwiseAbs().maxCoeff() / scale);
      if (r > js.max_residual_) {
        js.max_residual_ = r;
        worst_sigma = js.grid_[i];
      }
    }
  }
  if (js.max_residual_ > tolerance) {
    throw IntegrationFailure(fmt::format("Jacobi residual {:.3e} exceeds {:.3e} at sigma={}",
                                         js.max_residual_, tolerance, worst_sigma),
                             worst_sigma);
  }

  for (int which : {0, 2}) {
    std::vector<Real> d;
    d.reserve(js.grid_.size());
    for (const auto& s : js.states_) {
      const MatR yb = flow.block(s, which);
      const MatR yp = flow.block(s, which + 1);
      Real scale = 1;
      for (int j = 0; j < js.m_; ++j) {
        scale *= std::sqrt(yb.col(j).squaredNorm() + yp.col(j).squaredNorm());
      }
      d.push_back(yb.determinant() / scale);
    }
    (which == 0 ? js.xi_singular_ : js.eta_singular_) = js.find_zeros(which, d);
  }
  return js;
}

VecR JacobiSystem::state_at(double sigma) const {
  const double T = grid_.back();
  if (!(sigma >= -1e-12 && sigma <= T + 1e-12)) {
    throw DomainError(fmt::format("Jacobi system sampled at sigma={} outside [0, {}]", sigma, T));
  }
  const int steps = static_cast<int>(grid_.size()) - 1;
  const Real h = Real(T) / steps;
  const int i = std::clamp(static_cast<int>(std::floor(Real(sigma) / h)), 0, steps);
  VecR y = states_[i];
  const Real rest = Real(sigma) - (i == steps ? Real(T) : i * h);
  if (rest != 0) {
    detail::CoupledFlow flow(model_);
    flow.step(y, rest);
  }
  return y;
}

JacobiSample JacobiSystem::sample_state(const VecR& y) const {
  return detail::CoupledFlow(model_).sample(y);
}

JacobiSample JacobiSystem::at_index(std::size_t i) const { return sample_state(states_.at(i)); }

JacobiSample JacobiSystem::sample(double sigma) const { return sample_state(state_at(sigma)); }

JacobiEvaluator JacobiSystem::evaluator() const {
  return [self = *this](double sigma) { return self.sample(sigma); };
}

Eigen::VectorXd JacobiSystem::position(std::size_t i) const {
  return model_->position(states_.at(i).data());
}

Real JacobiSystem::normalized_det(double sigma, int which) const {
  const JacobiSample s = sample(sigma);
  const MatR& y = which == 0 ? s.xi : s.eta;
  const MatR& yp = which == 0 ? s.xi_prime : s.eta_prime;
  Real scale = 1;
  for (int j = 0; j < m_; ++j) scale *= std::sqrt(y.col(j).squaredNorm() + yp.col(j).squaredNorm());
  return y.determinant() / scale;
}

std::vector<double> JacobiSystem::find_zeros(int which, const std::vector<Real>& d) const {
  std::vector<double> zeros;
  const std::size_t count = d.size();
  for (std::size_t k = 0; k < count; ++k) {
    if (d[k] == 0) zeros.push_back(grid_[k]);
  }
  // Odd-multiplicity zeros: sign changes, refined by bisection.
  auto signed_det = [&](Real s) { return normalized_det(static_cast<double>(s), which); };
  auto narrow = [](Real a, Real b) { return b - a < Real(kZeroWidth); };
  for (std::size_t k = 0; k + 1 < count; ++k) {
    if (d[k] * d[k + 1] < 0) {
      const auto [a, b] = boost::math::tools::bisect(signed_det, Real(grid_[k]), Real(grid_[k + 1]),
                                                     narrow);
      zeros.push_back(static_cast<double>((a + b) / 2));
    }
  }
  // Even-multiplicity zeros: small local minima of |d| without a sign change.
  for (std::size_t k = 1; k + 1 < count; ++k) {
    const Real a = std::fabs(d[k - 1]), b = std::fabs(d[k]), c = std::fabs(d[k + 1]);
    if (b == 0 || b > a || b > c || b > kCandidateThreshold) continue;
    if (d[k - 1] * d[k] <= 0 || d[k] * d[k + 1] <= 0) continue;
    auto abs_det = [&](Real s) { return std::fabs(signed_det(s)); };
    const auto [where, value] = boost::math::tools::brent_find_minima(
        abs_det, Real(grid_[k - 1]), Real(grid_[k + 1]), std::numeric_limits<Real>::digits / 2);
    if (value < kZeroThreshold) zeros.push_back(static_cast<double>(where));
  }
  std::sort(zeros.begin(), zeros.end());
  zeros.erase(std::unique(zeros.begin(), zeros.end(),
                          [](double a, double b) { return std::fabs(a - b) < 1e-9; }),
              zeros.end());
  return zeros;
}

std::vector<double> JacobiSystem::singular_set() const {
  std::vector<double> all = xi_singular_;
  all.insert(all.end(), eta_singular_.begin(), eta_singular_.end());
  std::sort(all.begin(), all.end());
  return all;
}

double JacobiSystem::distance_to_xi_singular(double sigma) const {
  return distance_to(xi_singular_, sigma);
}

double JacobiSystem::distance_to_eta_singular(double sigma) const {
  return distance_to(eta_singular_, sigma);
}

double JacobiSystem::wronskian_drift() const {
  const detail::CoupledFlow flow(model_);
  const MatR id = MatR::Identity(m_, m_);
  Real worst = 0;
  for (const auto& y : states_) {
    const MatR w = flow.block(y, 1).transpose() * flow.block(y, 2) -
                   flow.block(y, 0).transpose() * flow.block(y, 3);
    worst = std::max(worst, (w + id).cwiseAbs().maxCoeff());
  }
  return static_cast<double>(worst);
}

double JacobiSystem::fundamental_determinant(std::size_t i) const {
  const JacobiSample s = at_index(i);
  MatR big(2 * m_, 2 * m_);
  big << s.xi, s.eta, s.xi_prime, s.eta_prime;
  return static_cast<double>(big.determinant());
}

JacobiSample closed_form_jacobi(double c, double sigma, int n) {
  const int m = n - 1;
  const MatR id = MatR::Identity(m, m);
  const Real s = sigma;
  Real xi = 1, xi_p = 0, eta = s, eta_p = 1;
  if (c > 0.0) {
    const Real k = std::sqrt(Real(c));
    xi = std::cos(k * s);
    xi_p = -k * std::sin(k * s);
    eta = std::sin(k * s) / k;
    eta_p = std::cos(k * s);
  } else if (c < 0.0) {
    const Real k = std::sqrt(Real(-c));
    xi = std::cosh(k * s);
    xi_p = k * std::sinh(k * s);
    eta = std::sinh(k * s) / k;
    eta_p = std::cosh(k * s);
  }
  return JacobiSample{xi * id, xi_p * id, eta * id, eta_p * id};
}

JacobiEvaluator closed_form_evaluator(double c, int n) {
  return [c, n](double sigma) { return closed_form_jacobi(c, sigma, n); };
}

void write_jacobi_csv(std::ostream& out, const GeodesicTrajectory& traj, const JacobiSystem& js) {
  const auto d = traj.position.empty() ? 0 : traj.position.front().size();
  out << "sigma";
  for (Eigen::Index i = 0; i < d; ++i) out << ",x" << i;
  out << ",det_xi,det_eta\n";
  for (std::size_t i = 0; i < js.grid().size(); ++i) {
    fmt::print(out, "{:.17g}", js.grid()[i]);
    const Eigen::VectorXd p = js.position(i);
    for (Eigen::Index k = 0; k < p.size(); ++k) fmt::print(out, ",{:.17g}", p[k]);
    fmt::print(out, ",{:.17g},{:.17g}\n", js.det_xi(i), js.det_eta(i));
  }
}

}  // namespace gtube
