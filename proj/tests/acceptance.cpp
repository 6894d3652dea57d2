// Acceptance run: one PASS/FAIL line per criterion, tolerances fixed here.
// Expected values come from closed forms and brute-force oracles in this file.

#include "gtube/counting.hpp"
#include "gtube/error.hpp"
#include "gtube/flow.hpp"
#include "gtube/herglotz.hpp"
#include "gtube/random.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <numbers>
#include <string>
#include <vector>

using namespace gtube;
using std::numbers::pi;

namespace {

struct Outcome {
  bool passed = false;
  std::string detail;
};

int failures = 0;

void criterion(int id, const std::string& name, const std::function<Outcome()>& body) {
  Outcome o;
  try {
    o = body();
  } catch (const std::exception& e) {
    o = {false, fmt::format("exception: {}", e.what())};
  }
  failures += !o.passed;
  fmt::print("{} {:2d} {}: {}\n", o.passed ? "PASS" : "FAIL", id, name, o.detail);
  std::fflush(stdout);
}

double max_abs(const MatR& m) { return static_cast<double>(m.cwiseAbs().maxCoeff()); }

// Leibniz expansion over permutations.
double leibniz_det(const Eigen::MatrixXd& a) {
  const int n = static_cast<int>(a.rows());
  std::vector<int> perm(n);
  for (int i = 0; i < n; ++i) perm[i] = i;
  double total = 0.0;
  do {
    int inversions = 0;
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j) inversions += perm[i] > perm[j];
    double term = inversions % 2 ? -1.0 : 1.0;
    for (int i = 0; i < n; ++i) term *= a(i, perm[i]);
    total += term;
  } while (std::next_permutation(perm.begin(), perm.end()));
  return total;
}

Eigen::MatrixXd random_psd(Rng& rng, int n) {
  Eigen::MatrixXd g(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) g(i, j) = rng.normal();
  const int rank = 1 + static_cast<int>(rng.uniform() * n);
  const Eigen::MatrixXd low = g.leftCols(rank);
  return low * low.transpose();
}

bool near_multiple(double s, double period, double gap) {
  return std::fabs(std::remainder(s, period)) < gap;
}

std::vector<double> linspace(double lo, double hi, int count) {
  std::vector<double> out;
  for (int i = 0; i < count; ++i) out.push_back(lo + (hi - lo) * i / (count - 1));
  return out;
}

}  // namespace

int main() {
  criterion(1, "Berger-Bott total on the round 2-sphere at T = pi", [] {
    const auto sphere = ManifoldSpec::constant_curvature(1.0, 2);
    const auto quad = unit_sphere_quadrature(2, QuadratureScheme::product_gauss, 64);
    const auto start = std::chrono::steady_clock::now();
    const double total = berger_bott_total(sphere, sphere.base_point(), pi, quad, 1e-3, 1);
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    // 2 pi int_0^pi sin = 4 pi.
    const double error = std::fabs(total - 4 * pi);
    return Outcome{error <= 1e-4 && seconds < 5.0,
                   fmt::format("|total - 4pi| = {:.3e} (tol 1e-4), {:.2f} s (limit 5 s)", error, seconds)};
  });

  criterion(2, "Berger-Bott oracle-equivalence on the unit square torus", [] {
    const Eigen::MatrixXd unit = Eigen::MatrixXd::Identity(2, 2);
    const auto torus = ManifoldSpec::flat_torus(unit);
    const auto quad = unit_sphere_quadrature(2, QuadratureScheme::product_gauss, 16);
    const std::vector<double> Ts = {1, 2, 5, 10};
    const auto curve = berger_bott_curve(torus, Eigen::VectorXd::Zero(2), Ts, quad);
    const auto oracle = torus_count_integral_oracle(unit, Ts, 100000, 0);
    double area = 0.0, mc = 0.0;
    for (std::size_t i = 0; i < Ts.size(); ++i) {
      const double disc = pi * Ts[i] * Ts[i];
      area = std::max(area, std::fabs(curve.values[i] - disc) / disc);
      mc = std::max(mc, std::fabs(curve.values[i] - oracle[i]) / oracle[i]);
    }
    return Outcome{area <= 1e-3 && mc <= 0.02,
                   fmt::format("max rel vs pi T^2 = {:.3e} (tol 1e-3), max rel vs lattice oracle = {:.3e} (tol 2e-2)",
                               area, mc)};
  });

  criterion(3, "Jacobi propagation vs closed forms, c in {-1, 0, 1}", [] {
    double worst = 0.0, drift = 0.0;
    for (double c : {-1.0, 0.0, 1.0}) {
      const auto spec = ManifoldSpec::constant_curvature(c, 3);
      const Eigen::VectorXd x = spec.base_point();
      const auto traj = integrate_geodesic(spec, x, spec.tangent_basis(x).col(0), 10.0, 1e-3);
      const auto js = propagate_jacobi(spec, traj, 1e-3);
      for (std::size_t i = 0; i < js.grid().size(); ++i) {
        const double s = js.grid()[i];
        // Independent closed forms: cos/cosh/1 and sin/sinh/sigma scaled by sqrt|c|.
        const double r = std::sqrt(std::fabs(c));
        const double xi = c > 0 ? std::cos(r * s) : c < 0 ? std::cosh(r * s) : 1.0;
        const double eta = c > 0 ? std::sin(r * s) / r : c < 0 ? std::sinh(r * s) / r : s;
        const auto got = js.at_index(i);
        const MatR id = MatR::Identity(2, 2);
        worst = std::max({worst, max_abs(got.xi - Real(xi) * id), max_abs(got.eta - Real(eta) * id)});
      }
      drift = std::max(drift, js.wronskian_drift());
    }
    return Outcome{worst <= 1e-6 && drift <= 1e-8,
                   fmt::format("max entry error = {:.3e} (tol 1e-6), Wronskian drift = {:.3e} (tol 1e-8)",
                               worst, drift)};
  });

  criterion(4, "Stieltjes inversion recovers atoms, masses and A", [] {
    const auto round = stieltjes_invert(HerglotzMatrix::closed_form_neg_inverse(1.0, 3), -1.0, 7.0);
    const auto flat = stieltjes_invert(HerglotzMatrix::closed_form_neg_inverse(0.0, 3), -1.0, 7.0);
    bool counts = round.atoms.size() == 3 && flat.atoms.size() == 1;
    double location = 0.0, mass = 0.0;
    const Eigen::MatrixXd pi_id = pi * Eigen::MatrixXd::Identity(2, 2);
    auto score = [&](const FatouData& fd, int j, double expected) {
      location = std::max(location, std::fabs(fd.atoms[j].t - expected));
      mass = std::max(mass, (fd.atoms[j].mass - pi_id).cwiseAbs().maxCoeff() / pi);
    };
    if (counts) {
      for (int j = 0; j < 3; ++j) score(round, j, j * pi);
      score(flat, 0, 0.0);
    }
    const double a = std::max(round.A.cwiseAbs().maxCoeff(), flat.A.cwiseAbs().maxCoeff());
    return Outcome{counts && location <= 1e-4 && mass <= 0.02 && a <= 1e-3,
                   fmt::format("atoms {}+{} (expect 3+1), location err = {:.3e} (tol 1e-4), "
                               "mass rel err = {:.3e} (tol 2e-2), |A| = {:.3e} (tol 1e-3)",
                               round.atoms.size(), flat.atoms.size(), location, mass, a)};
  });

  criterion(5, "Key identities on closed forms and a warped product", [] {
    double closed = 0.0;
    int closed_samples = 0;
    for (double c : {0.0, 1.0}) {
      for (int n : {2, 3, 4}) {
        const auto eval = closed_form_evaluator(c, n);
        int taken = 0;
        for (int i = 0; taken < 20; ++i) {
          const double s = 0.1 + 0.45 * i;
          if (c > 0 && near_multiple(s, pi / 2, 0.05)) continue;
          const auto chain = check_identity_chain(eval, s, 1e-8);
          closed = std::max({closed, chain.key1, chain.xi});
          ++taken;
        }
        closed_samples += taken;
      }
    }
    double warped = 0.0;
    int warped_samples = 0;
    for (int n : {2, 3}) {
      const auto warp = WarpFunction::parse("sin:0.5,1,0,2", Interval{});
      const auto spec = ManifoldSpec::warped_product(warp, n);
      Eigen::VectorXd x = Eigen::VectorXd::Zero(n + 1), theta = Eigen::VectorXd::Zero(n + 1);
      x[0] = 1.0;
      x[1] = 1.0;
      theta[0] = 0.3;
      theta[2] = std::sqrt(1 - 0.09) / static_cast<double>(warp(1.0).f);
      const auto traj = integrate_geodesic(spec, x, theta, 8.0);
      const auto js = propagate_jacobi(spec, traj);
      const auto singular = js.singular_set();
      for (double s = 0.15; s < 7.9; s += 0.19) {
        bool clear = true;
        for (double p : singular) clear = clear && std::fabs(s - p) >= 0.1;
        if (!clear) continue;
        warped = std::max({warped, check_key1(js, s), check_xi_identity(js, s)});
        ++warped_samples;
      }
    }
    return Outcome{closed <= 1e-8 && warped <= 1e-5 && warped_samples >= 20,
                   fmt::format("closed-form max = {:.3e} over {} sigma (tol 1e-8), warped max = {:.3e} over {} "
                               "sigma (tol 1e-5)",
                               closed, closed_samples, warped, warped_samples)};
  });

  criterion(6, "Positivity of Im f, Im G and the B-decomposition", [] {
    Rng rng(6);
    std::vector<Complex> samples;
    for (int i = 0; i < 100; ++i) samples.emplace_back(20 * rng.uniform() - 10, 5 * rng.uniform() + 1e-3);
    double im = INFINITY;
    for (double c : {0.0, 1.0}) {
      for (int n : {2, 3, 4}) {
        im = std::min(im, min_im_eigenvalue(HerglotzMatrix::closed_form(c, n), samples));
        im = std::min(im, min_im_eigenvalue(HerglotzMatrix::closed_form_neg_inverse(c, n), samples));
      }
    }
    double b = INFINITY;
    int b_samples = 0;
    for (double c : {0.0, 1.0}) {
      int taken = 0;
      for (double s = 0.1; taken < 50; s += 0.19) {
        if (c > 0 && near_multiple(s, pi, 0.05)) continue;
        b = std::min(b, b_decomposition_min_eigenvalue(c, 3, s));
        ++taken;
      }
      b_samples += taken;
    }
    return Outcome{im > 0.0 && b >= -1e-10,
                   fmt::format("min Im eigenvalue = {:.3e} (must be > 0), min B eigenvalue = {:.3e} over {} sigma "
                               "(tol -1e-10)",
                               im, b, b_samples)};
  });

  criterion(7, "Minkowski determinant inequality on random PSD pairs", [] {
    Rng rng(7);
    int violations = 0;
    double worst = INFINITY, oracle_gap = 0.0;
    for (int trial = 0; trial < 10000; ++trial) {
      const int n = 1 + trial % 6;
      const Eigen::MatrixXd a1 = random_psd(rng, n), a2 = random_psd(rng, n);
      const auto r = minkowski_det_lower_bound(a1, a2);
      const double scale = std::max(1.0, r.scale);
      violations += r.margin < -1e-12 * scale;
      worst = std::min(worst, r.margin / scale);
      const double brute = leibniz_det(a1 + a2) - leibniz_det(a1) - leibniz_det(a2);
      oracle_gap = std::max(oracle_gap, std::fabs(brute - r.margin) / scale);
    }
    return Outcome{violations == 0 && oracle_gap <= 1e-9,
                   fmt::format("violations = {} of 10000, min margin/scale = {:.3e}, max gap to Leibniz oracle = "
                               "{:.3e} (tol 1e-9)",
                               violations, worst, oracle_gap)};
  });

  criterion(8, "Determinant growth bound 1/det G' <= sigma^(2n-2)", [] {
    int failed = 0, equal_flat = 0, flat_samples = 0, total = 0;
    for (double c : {0.0, 1.0}) {
      for (int n : {2, 3, 4}) {
        for (int i = 1; i <= 100; ++i) {
          const double s = 0.1 * i - 0.037;
          if (c > 0 && near_multiple(s, pi, 1e-6)) continue;
          const auto r = det_growth_bound(c, n, s);
          failed += !r.ok;
          ++total;
          if (c == 0.0) {
            ++flat_samples;
            equal_flat += r.equality;
          }
        }
      }
    }
    return Outcome{failed == 0 && equal_flat == flat_samples,
                   fmt::format("{} of {} samples violate the bound, equality flagged at {} of {} flat samples",
                               failed, total, equal_flat, flat_samples)};
  });

  criterion(9, "Growth classification of counting curves", [] {
    const auto quad2 = unit_sphere_quadrature(2, QuadratureScheme::product_gauss, 16);
    const auto quad3 = unit_sphere_quadrature(3, QuadratureScheme::product_gauss, 8);
    const auto Ts = linspace(1.0, 30.0, 30);
    struct Case {
      std::string name;
      CountingCurve curve;
      GrowthClass cls;
      int degree;
    };
    std::vector<Case> cases;
    const auto torus2 = ManifoldSpec::flat_torus(Eigen::MatrixXd::Identity(2, 2));
    cases.push_back({"torus n=2", berger_bott_curve(torus2, Eigen::VectorXd::Zero(2), Ts, quad2, 1e-2),
                     GrowthClass::polynomial, 2});
    const auto torus3 = ManifoldSpec::flat_torus(Eigen::MatrixXd::Identity(3, 3));
    cases.push_back({"torus n=3", berger_bott_curve(torus3, Eigen::VectorXd::Zero(3), Ts, quad3, 1e-2),
                     GrowthClass::polynomial, 3});
    const auto sphere = ManifoldSpec::constant_curvature(1.0, 2);
    cases.push_back({"sphere n=2", berger_bott_curve(sphere, sphere.base_point(), Ts, quad2, 1e-2),
                     GrowthClass::polynomial, 1});
    CountingCurve hyperbolic{Ts, {}, "hyperbolic", CountingMethod::oracle};
    for (double T : Ts) hyperbolic.values.push_back(2 * pi * (std::cosh(T) - 1));
    cases.push_back({"hyperbolic", hyperbolic, GrowthClass::exponential, 0});

    int wrong = 0;
    std::string summary;
    for (const auto& c : cases) {
      const auto g = classify_growth(c.curve);
      const bool ok = g.cls == c.cls && (c.cls == GrowthClass::exponential || g.degree == c.degree);
      wrong += !ok;
      summary += fmt::format("{}{} -> {}", summary.empty() ? "" : ", ", c.name,
                             g.cls == GrowthClass::polynomial ? fmt::format("polynomial({})", g.degree)
                                                              : fmt::format("exponential({:.3f})", g.rate));
    }
    return Outcome{wrong == 0, fmt::format("{}; misclassified {}", summary, wrong)};
  });

  criterion(10, "Gromov inequality on the round 2-sphere up to k = 50", [] {
    const auto search = find_gromov_constant(2, 50, {0.5, 1, 2, 5, 10});
    return Outcome{search.minimal_C.has_value(),
                   search.minimal_C ? fmt::format("minimal C on grid = {}", *search.minimal_C)
                                    : std::string("no C on the grid satisfies the inequality")};
  });

  fmt::print("{} of 10 criteria passed\n", 10 - failures);
  return failures == 0 ? 0 : 1;
}
