#include "gtube/counting.hpp"

#include "coupled.hpp"
#include "gtube/error.hpp"
#include "gtube/random.hpp"
#include "model.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <exception>
#include <thread>

namespace gtube {
namespace {

constexpr double kDriftLimit = 1e-6;

int grid_steps(double T, double step) {
  return std::max(1, static_cast<int>(std::ceil(T / step - 1e-9)));
}

// Cumulative trapezoid integrals of |det H| along one geodesic, read off at
// each (sorted, positive) length in Ts.
std::vector<double> direction_integrals(const detail::CoupledFlow& flow, const Eigen::VectorXd& x,
                                        const Eigen::VectorXd& theta,
                                        const std::vector<double>& Ts, double step,
                                        std::size_t direction) {
  const double t_max = Ts.back();
  const int steps = grid_steps(t_max, step);
  const Real h = Real(t_max) / steps;
  const auto& model = flow.model();

  std::vector<double> out(Ts.size());
  VecR y = flow.initial_state(x, theta);
  Real prev = 0.0L;  // |det H(0)|
  Real acc = 0.0L;
  std::size_t j = 0;
  for (int i = 1; i <= steps && j < Ts.size(); ++i) {
    flow.step(y, h);
    const Real s0 = (i - 1) * h;
    const Real s1 = i == steps ? Real(t_max) : i * h;
    const Real cur = std::fabs(flow.block(y, 2).determinant());
    const double speed = model.speed_defect(y.data());
    const double frame = model.frame_defect(y.data());
    if (!(speed <= kDriftLimit && frame <= kDriftLimit)) {
      throw IntegrationFailure(
          fmt::format("direction {}: conservation drift {:.3e} at sigma={}", direction,
                      std::max(speed, frame), static_cast<double>(s1)),
          static_cast<double>(s1));
    }
    const Real width = s1 - s0;
    while (j < Ts.size() && Real(Ts[j]) <= s1 + 1e-12L * std::max<Real>(1, s1)) {
      const Real t = std::min<Real>(Real(Ts[j]) - s0, width);
      const Real end = prev + (cur - prev) * (t / width);
      out[j++] = static_cast<double>(acc + t * (prev + end) / 2);
    }
    acc += width * (prev + cur) / 2;
    prev = cur;
  }
  return out;
}

// Per-direction integrals for every node, computed on `threads` workers over
// contiguous index ranges. Failures are rethrown for the lowest failing index.
std::vector<std::vector<double>> all_directions(const ManifoldSpec& spec,
                                                const Eigen::VectorXd& x,
                                                const std::vector<double>& Ts,
                                                const SphereQuadrature& quad, double step,
                                                int threads) {
  if (quad.dimension != spec.dimension()) {
    throw InputError(fmt::format("quadrature dimension {} does not match manifold dimension {}",
                                 quad.dimension, spec.dimension()));
  }
  if (!(step > 0.0) || !std::isfinite(step)) {
    throw InputError(fmt::format("step={} must be positive", step));
  }
  const Eigen::MatrixXd basis = spec.tangent_basis(x);
  spec.validate_initial(x, basis.col(0));
  const detail::CoupledFlow flow(detail::make_model(spec));

  const std::size_t count = quad.nodes.size();
  std::vector<std::vector<double>> results(count);
  std::vector<std::exception_ptr> errors(count);
  auto work = [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      try {
        Eigen::VectorXd theta = basis * quad.nodes[i];
        theta /= std::sqrt(spec.inner(x, theta, theta));
        results[i] = direction_integrals(flow, x, theta, Ts, step, i);
      } catch (...) {
        errors[i] = std::current_exception();
        return;
      }
    }
  };
  const std::size_t workers =
      std::clamp<std::size_t>(static_cast<std::size_t>(std::max(threads, 1)), 1, std::max<std::size_t>(count, 1));
  if (workers == 1) {
    work(0, count);
  } else {
    std::vector<std::thread> pool;
    const std::size_t chunk = (count + workers - 1) / workers;
    for (std::size_t w = 0; w < workers; ++w) {
      const std::size_t begin = std::min(count, w * chunk);
      pool.emplace_back(work, begin, std::min(count, begin + chunk));
    }
    for (auto& t : pool) t.join();
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return results;
}

double weighted_total(const std::vector<std::vector<double>>& per_direction,
                      const SphereQuadrature& quad, std::size_t column) {
  std::vector<double> terms(per_direction.size());
  for (std::size_t i = 0; i < terms.size(); ++i) {
    terms[i] = quad.weights[i] * per_direction[i][column];
  }
  return pairwise_sum(terms);
}

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
};

LineFit least_squares(const std::vector<double>& xs, const std::vector<double>& ys) {
  const double n = static_cast<double>(xs.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
  }
  const double slope = sxy / sxx;
  return {slope, my - slope * mx};
}

struct HeldOut {
  LineFit fit;
  double residual = 0.0;
};

HeldOut held_out_fit(const std::vector<double>& xs, const std::vector<double>& ys,
                     std::size_t train) {
  const std::vector<double> tx(xs.begin(), xs.begin() + train);
  const std::vector<double> ty(ys.begin(), ys.begin() + train);
  HeldOut out{least_squares(tx, ty), 0.0};
  double ss = 0.0;
  for (std::size_t i = train; i < xs.size(); ++i) {
    const double r = ys[i] - (out.fit.slope * xs[i] + out.fit.intercept);
    ss += r * r;
  }
  out.residual = std::sqrt(ss / static_cast<double>(xs.size() - train));
  return out;
}

template <class Visit>
void visit_box(const Eigen::MatrixXd& basis, const Eigen::VectorXd& offset,
               const Eigen::VectorXd& center, const Eigen::VectorXd& radius,
               Eigen::VectorXd& coeff, int axis, Visit&& visit) {
  const int n = static_cast<int>(basis.rows());
  if (axis == n) {
    visit((offset + basis.transpose() * coeff).squaredNorm());
    return;
  }
  const double lo = std::ceil(center[axis] - radius[axis] - 1e-9);
  const double hi = std::floor(center[axis] + radius[axis] + 1e-9);
  for (double k = lo; k <= hi; k += 1.0) {
    coeff[axis] = k;
    visit_box(basis, offset, center, radius, coeff, axis + 1, visit);
  }
}

// Calls visit(|y - x + v|^2) for every lattice vector v in the box that covers
// the ball of radius T.
template <class Visit>
void visit_lattice(const Eigen::MatrixXd& basis, const Eigen::MatrixXd& inv_t,
                   const Eigen::VectorXd& offset, double T, Visit&& visit) {
  const Eigen::VectorXd center = -inv_t * offset;
  const Eigen::VectorXd radius = inv_t.rowwise().norm() * T;
  Eigen::VectorXd coeff(basis.rows());
  visit_box(basis, offset, center, radius, coeff, 0, visit);
}

}  // namespace

std::string to_string(CountingMethod method) {
  return method == CountingMethod::berger_bott ? "berger_bott" : "oracle";
}

std::string to_string(GrowthClass cls) {
  return cls == GrowthClass::polynomial ? "polynomial" : "exponential";
}

void CountingCurve::validate() const {
  if (T.size() != values.size()) throw InputError("curve T and value lists differ in length");
  for (std::size_t i = 0; i < T.size(); ++i) {
    if (!(T[i] > 0.0) || !std::isfinite(T[i])) {
      throw InputError(fmt::format("curve T[{}]={} must be positive", i, T[i]));
    }
    if (i > 0 && !(T[i] > T[i - 1])) throw InputError("curve T values must be strictly increasing");
    if (!(values[i] >= 0.0) || !std::isfinite(values[i])) {
      throw InputError(fmt::format("curve value[{}]={} must be finite and nonnegative", i, values[i]));
    }
    if (i > 0 && values[i] < values[i - 1]) {
      throw InputError(fmt::format("curve decreases between T={} and T={}", T[i - 1], T[i]));
    }
  }
}

CountingCurve CountingCurve::scaled(double factor) const {
  CountingCurve out = *this;
  for (double& v : out.values) v *= factor;
  return out;
}

double berger_bott_integrand(const JacobiSystem& js, double sigma) {
  const auto& grid = js.grid();
  if (!(sigma >= 0.0) || sigma > grid.back()) {
    throw DomainError(fmt::format("sigma={} outside [0, {}]", sigma, grid.back()));
  }
  const auto it = std::upper_bound(grid.begin(), grid.end(), sigma);
  const std::size_t hi = std::min<std::size_t>(static_cast<std::size_t>(it - grid.begin()), grid.size() - 1);
  const std::size_t lo = hi == 0 ? 0 : hi - 1;
  const double a = std::fabs(js.det_eta(lo));
  const double b = std::fabs(js.det_eta(hi));
  if (hi == lo || grid[hi] == grid[lo]) return a;
  const double t = std::clamp((sigma - grid[lo]) / (grid[hi] - grid[lo]), 0.0, 1.0);
  return a + (b - a) * t;
}

double berger_bott_total(const ManifoldSpec& spec, const Eigen::VectorXd& x, double T,
                         const SphereQuadrature& quad, double step, int threads) {
  if (T == 0.0) return 0.0;
  if (!(T > 0.0) || !std::isfinite(T)) throw InputError(fmt::format("length T={} must be positive", T));
  const auto per_direction = all_directions(spec, x, {T}, quad, step, threads);
  return weighted_total(per_direction, quad, 0);
}

CountingCurve berger_bott_curve(const ManifoldSpec& spec, const Eigen::VectorXd& x,
                                const std::vector<double>& Ts, const SphereQuadrature& quad,
                                double step, int threads) {
  CountingCurve curve{Ts, std::vector<double>(Ts.size(), 0.0), spec.tag(),
                      CountingMethod::berger_bott};
  if (Ts.empty()) throw InputError("curve needs at least one T");
  curve.validate();
  const auto per_direction = all_directions(spec, x, Ts, quad, step, threads);
  for (std::size_t j = 0; j < Ts.size(); ++j) curve.values[j] = weighted_total(per_direction, quad, j);
  // Each direction's integral is nondecreasing, and so is a positively
  // weighted sum up to round-off in the pairwise tree; enforce it exactly.
  for (std::size_t j = 1; j < Ts.size(); ++j) curve.values[j] = std::max(curve.values[j], curve.values[j - 1]);
  return curve;
}

std::int64_t count_sphere_arcs(double d, double T) {
  if (!(d > 0.0 && d < std::numbers::pi)) {
    throw InputError(fmt::format("distance d={} must lie in (0, pi)", d));
  }
  if (!(T > 0.0)) return 0;
  const double period = 2.0 * std::numbers::pi;
  std::int64_t count = 0;
  // 2k pi + d <= T for k >= 0, and 2k pi - d <= T for k >= 1.
  if (d <= T) count += static_cast<std::int64_t>(std::floor((T - d) / period)) + 1;
  count += static_cast<std::int64_t>(std::floor((T + d) / period));
  return count;
}

std::int64_t count_torus_lattice(const Eigen::MatrixXd& basis, const Eigen::VectorXd& x,
                                 const Eigen::VectorXd& y, double T) {
  const int n = static_cast<int>(basis.rows());
  if (basis.cols() != n || x.size() != n || y.size() != n) {
    throw InputError("lattice basis and points must share the dimension");
  }
  if (!(T >= 0.0)) return 0;
  // Lattice vector v = B^T k; solving |y - x + v| <= T confines k to a box
  // around -B^{-T}(y - x) with half-widths |row_i(B^{-T})| T.
  const Eigen::MatrixXd inv_t = basis.transpose().inverse();
  const double t2 = T * T;
  std::int64_t count = 0;
  visit_lattice(basis, inv_t, y - x, T, [&](double d2) { count += d2 <= t2; });
  return count;
}

double torus_count_integral_oracle(const Eigen::MatrixXd& basis, double T, int samples,
                                   std::uint64_t seed) {
  return torus_count_integral_oracle(basis, std::vector<double>{T}, samples, seed).front();
}

std::vector<double> torus_count_integral_oracle(const Eigen::MatrixXd& basis,
                                                const std::vector<double>& Ts, int samples,
                                                std::uint64_t seed) {
  if (samples < 1) throw InputError("oracle needs at least one sample");
  const int n = static_cast<int>(basis.rows());
  if (basis.cols() != n) throw InputError("lattice basis must be square");
  if (Ts.empty()) return {};
  std::vector<double> t2(Ts.size());
  double t_max = 0.0;
  for (std::size_t i = 0; i < Ts.size(); ++i) {
    t2[i] = Ts[i] >= 0.0 ? Ts[i] * Ts[i] : -1.0;
    t_max = std::max(t_max, Ts[i]);
  }
  const Eigen::MatrixXd inv_t = basis.transpose().inverse();
  Rng rng(seed);
  Eigen::VectorXd u(n);
  std::vector<double> d2;
  std::vector<std::int64_t> totals(Ts.size(), 0);
  for (int s = 0; s < samples; ++s) {
    for (int i = 0; i < n; ++i) u[i] = rng.uniform();
    d2.clear();
    visit_lattice(basis, inv_t, basis.transpose() * u, t_max, [&](double v) { d2.push_back(v); });
    std::sort(d2.begin(), d2.end());
    for (std::size_t i = 0; i < Ts.size(); ++i) {
      totals[i] += std::upper_bound(d2.begin(), d2.end(), t2[i]) - d2.begin();
    }
  }
  const double volume = std::fabs(basis.determinant());
  std::vector<double> out(Ts.size());
  for (std::size_t i = 0; i < Ts.size(); ++i) out[i] = volume * static_cast<double>(totals[i]) / samples;
  return out;
}

GrowthReport classify_growth(const CountingCurve& curve) {
  curve.validate();
  const std::size_t n = curve.size();
  if (n < 8) throw InputError(fmt::format("growth fit needs at least 8 samples, got {}", n));
  if (curve.T.back() < 10.0 * curve.T.front()) {
    throw InputError("growth fit needs samples spanning at least one decade in T");
  }
  const std::size_t first = n / 2;
  std::vector<double> log_t, t, log_v;
  for (std::size_t i = first; i < n; ++i) {
    if (!(curve.values[i] > 0.0)) {
      throw InputError(fmt::format("growth fit needs positive values, got {} at T={}",
                                   curve.values[i], curve.T[i]));
    }
    log_t.push_back(std::log(curve.T[i]));
    t.push_back(curve.T[i]);
    log_v.push_back(std::log(curve.values[i]));
  }
  const std::size_t window = log_v.size();
  const std::size_t train = (2 * window + 2) / 3;
  const HeldOut poly = held_out_fit(log_t, log_v, train);
  const HeldOut expo = held_out_fit(t, log_v, train);

  GrowthReport report;
  report.window_lo = curve.T[first];
  report.window_hi = curve.T.back();
  report.polynomial_residual = poly.residual;
  report.exponential_residual = expo.residual;
  if (expo.residual < poly.residual && expo.fit.slope > 0.0) {
    report.cls = GrowthClass::exponential;
    report.rate = expo.fit.slope;
    report.slope = expo.fit.slope;
    report.residual = expo.residual;
  } else {
    report.cls = GrowthClass::polynomial;
    report.slope = poly.fit.slope;
    report.degree = std::max(0, static_cast<int>(std::lround(poly.fit.slope)));
    report.residual = poly.residual;
  }
  return report;
}

std::int64_t loop_space_betti_partial_sums(int sphere_dimension, std::int64_t k) {
  if (sphere_dimension < 2) {
    throw InputError(fmt::format("sphere dimension {} must be at least 2", sphere_dimension));
  }
  if (k < 1) throw InputError(fmt::format("k={} must be at least 1", k));
  // H_*(Omega S^n; Q) is one-dimensional in degrees divisible by n-1.
  return (k - 1) / (sphere_dimension - 1) + 1;
}

std::int64_t loop_space_betti_partial_sums(const ManifoldSpec& spec, std::int64_t k) {
  const auto* cc = std::get_if<ConstantCurvature>(&spec.kind());
  if (cc == nullptr || !(cc->c > 0.0)) {
    throw OutOfCatalogError(fmt::format("no loop-space Betti table for {}", spec.tag()));
  }
  return loop_space_betti_partial_sums(cc->n, k);
}

GromovReport check_gromov_inequality(int sphere_dimension, int K, double C,
                                     const GromovOptions& options) {
  if (!(C > 0.0) || !std::isfinite(C)) throw InputError(fmt::format("C={} must be positive", C));
  if (K < 1) throw InputError(fmt::format("K={} must be at least 1", K));
  const auto sphere = ManifoldSpec::constant_curvature(1.0, sphere_dimension);
  const auto quad =
      unit_sphere_quadrature(sphere_dimension, options.scheme, options.order, options.seed);
  std::vector<double> Ts(K);
  for (int k = 1; k <= K; ++k) Ts[k - 1] = C * k;
  const double step = std::min(options.step, Ts.front());
  const CountingCurve curve =
      berger_bott_curve(sphere, sphere.base_point(), Ts, quad, step, options.threads);
  const double volume = *sphere.volume();

  GromovReport report{sphere_dimension, K, C, true, std::nullopt, {}, {}};
  for (int k = 1; k <= K; ++k) {
    const std::int64_t lhs = loop_space_betti_partial_sums(sphere_dimension, k);
    const double rhs = curve.values[k - 1] / volume;
    report.betti.push_back(lhs);
    report.rhs.push_back(rhs);
    if (static_cast<double>(lhs) > rhs && report.holds) {
      report.holds = false;
      report.first_failure = k;
    }
  }
  return report;
}

GromovSearch find_gromov_constant(int sphere_dimension, int K, std::vector<double> grid,
                                  const GromovOptions& options) {
  if (grid.empty()) throw InputError("C grid is empty");
  GromovSearch search;
  for (double C : grid) {
    search.reports.push_back(check_gromov_inequality(sphere_dimension, K, C, options));
    if (search.reports.back().holds && (!search.minimal_C || C < *search.minimal_C)) {
      search.minimal_C = C;
    }
  }
  return search;
}

}  // namespace gtube
