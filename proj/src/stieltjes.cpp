// Recovery of the Nevanlinna data (A, mu) of a matrix Herglotz function from
// its values just above the real axis.

#include "gtube/error.hpp"
#include "gtube/herglotz.hpp"

#include <boost/math/tools/minima.hpp>
#include <fmt/format.h>
#include <gsl/gsl_integration.h>

#include <algorithm>
#include <cmath>
#include <memory>
#include <numbers>

namespace gtube {
namespace {

using std::numbers::pi;

constexpr int kGaussOrder = 16;
constexpr double kMaxWindow = 0.25;
constexpr double kPanelWidth = 0.05;
constexpr double kExtrapolationSpread = 0.05;
constexpr double kPsdTolerance = 1e-10;
constexpr double kPoleMatch = 1e-4;

struct GaussTable {
  GaussTable() : table(gsl_integration_glfixed_table_alloc(kGaussOrder)) {}
  ~GaussTable() { gsl_integration_glfixed_table_free(table); }
  GaussTable(const GaussTable&) = delete;
  GaussTable& operator=(const GaussTable&) = delete;

  // Composite rule over [lo, hi] with `panels` equal panels.
  template <class F>
  Eigen::MatrixXd integrate(F&& f, double lo, double hi, int panels, Eigen::Index m) const {
    Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(m, m);
    const double width = (hi - lo) / panels;
    for (int p = 0; p < panels; ++p) {
      const double a = lo + p * width;
      for (int i = 0; i < kGaussOrder; ++i) {
        double x = 0.0, w = 0.0;
        gsl_integration_glfixed_point(a, a + width, static_cast<std::size_t>(i), &x, &w, table);
        sum += w * f(x);
      }
    }
    return sum;
  }

  gsl_integration_glfixed_table* table;
};

Eigen::MatrixXd sym(const Eigen::MatrixXd& m) { return (m + m.transpose()) / 2; }

double min_eigenvalue(const Eigen::MatrixXd& m) {
  return Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(sym(m), Eigen::EigenvaluesOnly)
      .eigenvalues()
      .minCoeff();
}

// Neville: value at 0 of the polynomial through (xs[i], ys[i]).
Eigen::MatrixXd extrapolate_to_zero(const std::vector<double>& xs, std::vector<Eigen::MatrixXd> ys) {
  const std::size_t n = xs.size();
  for (std::size_t level = 1; level < n; ++level) {
    for (std::size_t i = 0; i + level < n; ++i) {
      const double x0 = xs[i], x1 = xs[i + level];
      ys[i] = (x1 * ys[i] - x0 * ys[i + 1]) / (x1 - x0);
    }
  }
  return ys[0];
}

void check_spread(const Eigen::MatrixXd& early, const Eigen::MatrixXd& late, double floor,
                  const std::string& what) {
  const double diff = (early - late).cwiseAbs().maxCoeff();
  const double size = std::max(early.cwiseAbs().maxCoeff(), late.cwiseAbs().maxCoeff());
  if (diff > floor + kExtrapolationSpread * size) {
    throw ConvergenceError(fmt::format(
        "{}: successive extrapolations differ by {:.3e} (size {:.3e})", what, diff, size));
  }
}

void validate(const HerglotzMatrix& F, double a, double b, const StieltjesOptions& options) {
  if (!F.complex_domain()) {
    throw ConfigurationError(
        "Stieltjes inversion needs values off the real axis; numeric sources are real-only");
  }
  if (!(a < b) || !std::isfinite(a) || !std::isfinite(b)) {
    throw InputError(fmt::format("interval ({}, {}) must be finite and nonempty", a, b));
  }
  const auto& taus = options.tau_schedule;
  if (taus.size() < 3) throw InputError("tau schedule needs at least three values");
  for (std::size_t i = 0; i < taus.size(); ++i) {
    if (!(taus[i] > 0.0)) throw InputError("tau schedule values must be positive");
    if (i > 0 && !(taus[i] < taus[i - 1])) throw InputError("tau schedule must be strictly decreasing");
  }
  if (taus.back() > 1e-3) throw InputError("tau schedule must reach 1e-3 or below");
  if (!(options.atom_threshold > 0.0)) throw InputError("atom threshold must be positive");
  for (double p : F.poles(a - 1.0, b + 1.0)) {
    if (std::fabs(p - a) < 1e-6 || std::fabs(p - b) < 1e-6) {
      throw InputError(fmt::format("interval endpoint lies on the pole {}", p));
    }
  }
}

}  // namespace

FatouData stieltjes_invert(const HerglotzMatrix& F, double a, double b,
                           const StieltjesOptions& options) {
  validate(F, a, b, options);
  const auto& taus = options.tau_schedule;
  const Eigen::Index m = F.dimension();
  auto im = [&F](double sigma, double tau) -> Eigen::MatrixXd {
    return sym(F(Complex(sigma, tau)).imag());
  };
  auto trace_im = [&](double sigma, double tau) { return im(sigma, tau).trace(); };

  FatouData fd;
  fd.a = a;
  fd.b = b;
  fd.tau_schedule = taus;

  // A = lim Im F(i tau) / tau; the remainder is O(1/tau), so extrapolate in 1/tau.
  {
    const std::vector<double> large = {1e2, 1e3, 1e4};
    std::vector<double> s;
    std::vector<Eigen::MatrixXd> values;
    for (double tau : large) {
      s.push_back(1.0 / tau);
      values.push_back(im(0.0, tau) / tau);
    }
    const Eigen::MatrixXd quadratic = extrapolate_to_zero(s, values);
    const Eigen::MatrixXd linear = extrapolate_to_zero({s[1], s[2]}, {values[1], values[2]});
    check_spread(quadratic, linear, 1e-4, "A");
    fd.A = sym(quadratic);
    const double lowest = min_eigenvalue(fd.A);
    if (lowest < -kPsdTolerance) {
      throw NumericalError(fmt::format("recovered A has eigenvalue {:.3e}", lowest));
    }
  }

  // Atom candidates: strict local maxima of tr Im F above threshold / tau.
  const double tau0 = taus.front();
  const int cells = std::max(2, static_cast<int>(std::ceil((b - a) / (tau0 / 8))));
  std::vector<double> grid(cells + 1), scan(cells + 1);
  for (int i = 0; i <= cells; ++i) {
    grid[i] = a + (b - a) * i / cells;
    scan[i] = trace_im(grid[i], tau0);
  }
  std::vector<double> located;
  for (int i = 1; i < cells; ++i) {
    if (!(scan[i] > scan[i - 1] && scan[i] > scan[i + 1] && scan[i] > options.atom_threshold / tau0)) {
      continue;
    }
    double t = grid[i];
    double half_width = (b - a) / cells;
    for (double tau : taus) {
      const double lo = std::max(a, t - half_width), hi = std::min(b, t + half_width);
      const auto best = boost::math::tools::brent_find_minima(
          [&](double s) { return -trace_im(s, tau); }, lo, hi, std::numeric_limits<double>::digits / 2);
      t = best.first;
      half_width = tau;
    }
    if (trace_im(t, taus.back()) < options.atom_threshold / taus.back()) continue;
    if (!(t > a && t < b)) continue;
    if (!located.empty() && std::fabs(located.back() - t) < 1e-6) continue;
    located.push_back(t);
  }
  std::sort(located.begin(), located.end());

  // Masses: integral of Im F over a window around each atom, with
  // sigma = t + tau tan(u) so the Poisson peak becomes flat, extrapolated in tau.
  const GaussTable gauss;
  std::vector<double> windows;
  for (std::size_t j = 0; j < located.size(); ++j) {
    const double t = located[j];
    double delta = std::min({kMaxWindow, t - a, b - t});
    if (j > 0) delta = std::min(delta, 0.45 * (t - located[j - 1]));
    if (j + 1 < located.size()) delta = std::min(delta, 0.45 * (located[j + 1] - t));
    windows.push_back(delta);

    std::vector<Eigen::MatrixXd> masses;
    for (double tau : taus) {
      const double u_max = std::atan(delta / tau);
      auto integrand = [&](double u) -> Eigen::MatrixXd {
        const double sec = 1.0 / std::cos(u);
        return im(t + tau * std::tan(u), tau) * (tau * sec * sec);
      };
      masses.push_back(gauss.integrate(integrand, -u_max, u_max, 16, m));
    }
    const std::size_t k = taus.size();
    const Eigen::MatrixXd early =
        extrapolate_to_zero({taus[k - 3], taus[k - 2]}, {masses[k - 3], masses[k - 2]});
    const Eigen::MatrixXd late =
        extrapolate_to_zero({taus[k - 2], taus[k - 1]}, {masses[k - 2], masses[k - 1]});
    check_spread(early, late, 0.0, fmt::format("atom mass at t={}", t));
    const Eigen::MatrixXd mass = sym(extrapolate_to_zero(taus, masses));
    const double lowest = min_eigenvalue(mass);
    if (lowest < -kPsdTolerance * std::max(1.0, mass.cwiseAbs().maxCoeff())) {
      throw NumericalError(fmt::format("atom mass at t={} has eigenvalue {:.3e}", t, lowest));
    }
    fd.atoms.push_back({t, mass});
  }

  // Trace mass outside the windows at the two smallest tau, extrapolated to 0.
  {
    std::vector<std::pair<double, double>> gaps;
    double left = a;
    for (std::size_t j = 0; j < located.size(); ++j) {
      gaps.emplace_back(left, located[j] - windows[j]);
      left = located[j] + windows[j];
    }
    gaps.emplace_back(left, b);
    const std::size_t k = taus.size();
    std::vector<double> totals;
    for (double tau : {taus[k - 2], taus[k - 1]}) {
      double total = 0.0;
      for (const auto& [lo, hi] : gaps) {
        if (hi <= lo) continue;
        const int panels = std::max(1, static_cast<int>(std::ceil((hi - lo) / kPanelWidth)));
        total += gauss.integrate([&](double s) { return im(s, tau); }, lo, hi, panels, m).trace();
      }
      totals.push_back(total);
    }
    const double t1 = taus[k - 2], t2 = taus[k - 1];
    fd.continuous_mass = (t1 * totals[1] - t2 * totals[0]) / (t1 - t2);
    fd.continuous_flag = fd.continuous_mass > 1e-3 * (b - a);
  }

  if (F.has_pole_locator()) {
    const auto poles = F.poles(a, b);
    bool consistent = poles.size() == fd.atoms.size();
    for (std::size_t j = 0; consistent && j < poles.size(); ++j) {
      consistent = std::fabs(poles[j] - fd.atoms[j].t) <= kPoleMatch;
    }
    fd.pole_set_consistent = consistent;
  }
  return fd;
}

CMat fatou_reconstruct(const FatouData& fd, Complex zeta) {
  if (!(zeta.imag() > 0.0)) throw InputError("reconstruction needs Im zeta > 0");
  CMat out = fd.A.cast<Complex>();
  for (const auto& atom : fd.atoms) {
    const Complex d = zeta - atom.t;
    out += atom.mass.cast<Complex>() / (pi * d * d);
  }
  return out;
}

}  // namespace gtube
