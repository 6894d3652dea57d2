#include "gtube/runner.hpp"

#include "gtube/counting.hpp"
#include "gtube/error.hpp"
#include "gtube/flow.hpp"
#include "gtube/herglotz.hpp"
#include "gtube/random.hpp"
#include "gtube/report.hpp"
#include "gtube/version.hpp"

#include <fmt/format.h>
#include <fmt/ostream.h>
#include <gsl/gsl_integration.h>

#include <cmath>
#include <fstream>
#include <numbers>
#include <ostream>

namespace gtube {
namespace {

using std::numbers::pi;

// Names the module and operation in diagnostics.
struct Stage {
  std::string name = "cli.run_manifest";
};

struct Context {
  const Experiment& e;
  std::ostream& out;
  Stage& stage;
  std::vector<std::filesystem::path> written;

  std::string header() const {
    return fmt::format("gtube {} manifest_sha256={}", kVersion, e.manifest_sha256);
  }

  nlohmann::json meta() const {
    return {{"version", kVersion}, {"manifest_sha256", e.manifest_sha256}, {"task", to_string(e.task)}};
  }

  std::ofstream open(const std::string& name) {
    std::filesystem::create_directories(e.out);
    const auto path = e.out / name;
    std::ofstream f(path, std::ios::binary);
    if (!f) throw ConfigurationError(fmt::format("out: cannot write {}", path.string()));
    written.push_back(path);
    return f;
  }

  void write_json(const std::string& name, nlohmann::json body) {
    body["meta"] = meta();
    auto f = open(name);
    f << body.dump(2) << '\n';
  }

  void write_report(const Report& report) {
    write_json("report.json", to_json(report));
    auto f = open("report.txt");
    f << "# " << header() << '\n';
    write_text(f, report);
    if (!e.quiet) write_text(out, report);
  }

  void note(const std::string& line) const {
    if (!e.quiet) out << line << '\n';
  }
};

Eigen::VectorXd start_point(const Experiment& e) { return e.point ? *e.point : e.spec->base_point(); }

Eigen::VectorXd start_direction(const Experiment& e, const Eigen::VectorXd& x) {
  const Eigen::MatrixXd basis = e.spec->tangent_basis(x);
  Eigen::VectorXd coords = e.direction ? *e.direction : Eigen::VectorXd::Ones(basis.cols());
  coords.normalize();
  Eigen::VectorXd theta = basis * coords;
  return theta / std::sqrt(e.spec->inner(x, theta, theta));
}

const ConstantCurvature* constant_kind(const Experiment& e) {
  return std::get_if<ConstantCurvature>(&e.spec->kind());
}

// Vol(S^{n-1}) int_0^T |eta(s)|^{n-1} ds for constant curvature, with panels
// split at the zeros of eta.
double closed_form_total(double c, int n, double T) {
  gsl_integration_glfixed_table* table = gsl_integration_glfixed_table_alloc(16);
  auto eta = [c](double s) {
    if (c > 0) return std::sin(std::sqrt(c) * s) / std::sqrt(c);
    if (c < 0) return std::sinh(std::sqrt(-c) * s) / std::sqrt(-c);
    return s;
  };
  std::vector<double> breaks = {0.0};
  if (c > 0) {
    for (double z = pi / std::sqrt(c); z < T; z += pi / std::sqrt(c)) breaks.push_back(z);
  }
  breaks.push_back(T);
  double total = 0.0;
  for (std::size_t b = 0; b + 1 < breaks.size(); ++b) {
    const int panels = std::max(1, static_cast<int>(std::ceil((breaks[b + 1] - breaks[b]) / 0.05)));
    const double width = (breaks[b + 1] - breaks[b]) / panels;
    for (int p = 0; p < panels; ++p) {
      const double lo = breaks[b] + p * width;
      for (std::size_t i = 0; i < 16; ++i) {
        double x = 0.0, w = 0.0;
        gsl_integration_glfixed_point(lo, lo + width, i, &x, &w, table);
        total += w * std::pow(std::fabs(eta(x)), n - 1);
      }
    }
  }
  gsl_integration_glfixed_table_free(table);
  return unit_sphere_area(n) * total;
}

int run_count(Context& ctx, bool require_growth) {
  const Experiment& e = ctx.e;
  const Eigen::VectorXd x = start_point(e);
  ctx.stage.name = "manifolds.unit_sphere_quadrature";
  const auto quad = unit_sphere_quadrature(e.spec->dimension(), e.scheme, e.order, e.seed);
  ctx.stage.name = "counting.berger_bott_curve";
  const CountingCurve curve = berger_bott_curve(*e.spec, x, e.T, quad, e.step, e.threads);
  {
    auto f = ctx.open("curve.csv");
    write_curve_csv(f, curve, {ctx.header(), "method=" + to_string(curve.method) + " manifold=" + curve.manifold_tag});
  }

  Report report;
  bool monotone = true;
  for (std::size_t i = 1; i < curve.size(); ++i) monotone = monotone && curve.values[i] >= curve.values[i - 1];
  report.add_flag("monotone", "counting curve nondecreasing in T", monotone);

  if (const auto* cc = constant_kind(e)) {
    double worst = 0.0;
    for (std::size_t i = 0; i < curve.size(); ++i) {
      const double exact = closed_form_total(cc->c, cc->n, curve.T[i]);
      worst = std::max(worst, std::fabs(curve.values[i] - exact) / std::max(1.0, exact));
    }
    report.add("closed_form", "Berger-Bott total vs closed-form Jacobi integral", worst, 1e-4);
  }
  if (const auto* torus = std::get_if<FlatTorus>(&e.spec->kind())) {
    ctx.stage.name = "counting.torus_count_integral_oracle";
    CountingCurve oracle{e.T, torus_count_integral_oracle(torus->basis, e.T, e.samples, e.seed),
                         curve.manifold_tag, CountingMethod::oracle};
    double worst = 0.0;
    for (std::size_t i = 0; i < e.T.size(); ++i) {
      worst = std::max(worst, std::fabs(curve.values[i] - oracle.values[i]) / std::max(1.0, oracle.values[i]));
    }
    auto f = ctx.open("oracle.csv");
    write_curve_csv(f, oracle, {ctx.header(), "method=oracle manifold=" + oracle.manifold_tag});
    report.add("oracle_equivalence", "Berger-Bott oracle-equivalence", worst, 0.02);
  }

  ctx.stage.name = "counting.classify_growth";
  const bool classifiable = curve.size() >= 8 && curve.T.back() >= 10.0 * curve.T.front();
  if (require_growth || classifiable) {
    const GrowthReport growth = classify_growth(curve);
    ctx.write_json("growth.json", to_json(growth));
    ctx.note(growth.cls == GrowthClass::polynomial
                 ? fmt::format("growth: polynomial degree {} (slope {:.4f})", growth.degree, growth.slope)
                 : fmt::format("growth: exponential rate {:.4f}", growth.rate));
  }
  ctx.write_report(report);
  return report.all_passed() ? kExitSuccess : kExitVerification;
}

HerglotzMatrix closed_form_function(const Experiment& e, const ConstantCurvature& cc) {
  return e.function == "G" ? HerglotzMatrix::closed_form_neg_inverse(cc.c, cc.n)
                           : HerglotzMatrix::closed_form(cc.c, cc.n);
}

// Stieltjes inversion checks shared by the herglotz and verify tasks.
void add_fatou_checks(Context& ctx, Report& report, const HerglotzMatrix& F, double c, bool is_g,
                      bool write) {
  const Experiment& e = ctx.e;
  ctx.stage.name = "herglotz.stieltjes_invert";
  const FatouData fd = stieltjes_invert(F, e.interval_lo, e.interval_hi,
                                        StieltjesOptions{e.tau_schedule, e.atom_threshold});
  if (write) ctx.write_json("fatou.json", to_json(fd));
  // Residues: -1 for G at every pole, -1/c for tan(sqrt(c) z)/sqrt(c).
  const double expected_mass = is_g ? pi : pi / c;
  const int m = F.dimension();
  const auto poles = F.poles(e.interval_lo, e.interval_hi);
  report.add_flag("atoms_match_poles", "atoms located at the real poles",
                  fd.pole_set_consistent && fd.atoms.size() == poles.size());
  double location = 0.0, mass = 0.0;
  for (std::size_t j = 0; j < std::min(poles.size(), fd.atoms.size()); ++j) {
    location = std::max(location, std::fabs(fd.atoms[j].t - poles[j]));
    mass = std::max(mass, (fd.atoms[j].mass - expected_mass * Eigen::MatrixXd::Identity(m, m))
                              .cwiseAbs()
                              .maxCoeff() / expected_mass);
  }
  report.add("atom_location", "atom locations", location, 1e-4);
  report.add("atom_mass", is_g ? "mu(t_j) = pi Id" : "atom masses pi/c Id", mass, 0.02);
  report.add("A", "A = lim Im F(i tau)/tau", fd.A.cwiseAbs().maxCoeff(), 1e-3);
  report.add_flag("no_continuous_mass", "no mass on pole-free intervals", !fd.continuous_flag);

  // F'(z) rebuilt from the recovered atoms vs the direct derivative, allowing
  // for atoms outside the interval and the 2% mass tolerance.
  const Complex z((e.interval_lo + e.interval_hi) / 2, 1.0);
  const double h = 1e-5;
  const CMat direct = (F(z + h) - F(z - h)) / (2 * h);
  double allowance = 1e-6;
  for (const auto& atom : fd.atoms) allowance += 0.02 * expected_mass / (pi * std::norm(z - atom.t));
  if (c > 0) {
    const double spacing = pi / std::sqrt(c);
    const double offset = is_g ? 0.0 : spacing / 2;
    const int reach = 100000;
    for (int j = -reach; j <= reach; ++j) {
      const double t = offset + j * spacing;
      if (t >= e.interval_lo && t <= e.interval_hi) continue;
      allowance += expected_mass / (pi * std::norm(z - t));
    }
    allowance += 2 * expected_mass / (pi * spacing * spacing * reach);
  }
  const double recon = (fatou_reconstruct(fd, z) - direct).cwiseAbs().maxCoeff();
  report.add("fatou_reconstruction", "F' = A + (1/pi) sum mu_j/(z - t_j)^2", recon, allowance);
}

int run_herglotz(Context& ctx) {
  const Experiment& e = ctx.e;
  const auto* cc = constant_kind(e);
  if (cc == nullptr) {
    throw ConfigurationError(
        "kind: Stieltjes inversion needs the complex extension, available only for constant curvature");
  }
  if (cc->c < 0) throw ConfigurationError("c: f is not a Herglotz function for negative curvature");
  if (e.function == "f" && cc->c == 0.0) {
    throw ConfigurationError("function: f = zeta Id has no atoms; use G for c = 0");
  }
  Report report;
  add_fatou_checks(ctx, report, closed_form_function(e, *cc), cc->c, e.function == "G", true);
  ctx.write_report(report);
  return report.all_passed() ? kExitSuccess : kExitVerification;
}

std::vector<double> sample_sigmas(double length, int count, const std::vector<double>& avoid) {
  std::vector<double> out;
  for (int i = 0; i < count; ++i) {
    const double s = length * (i + 0.5) / count;
    if (s < 0.05 || s > length - 0.05) continue;
    bool clear = true;
    for (double p : avoid) clear = clear && std::fabs(s - p) >= 0.05;
    if (clear) out.push_back(s);
  }
  return out;
}

int run_lemma_suite(Context& ctx) {
  const Experiment& e = ctx.e;
  const Eigen::VectorXd x = start_point(e);
  const Eigen::VectorXd theta = start_direction(e, x);
  const double length = e.T.empty() ? 10.0 : e.T.back();
  const int n = e.spec->dimension();
  const int m = n - 1;
  Report report;

  ctx.stage.name = "flow.integrate_geodesic";
  const auto traj = integrate_geodesic(*e.spec, x, theta, length, e.step);
  ctx.stage.name = "flow.propagate_jacobi";
  const auto js = std::make_shared<const JacobiSystem>(propagate_jacobi(*e.spec, traj, e.step));
  if (e.dump_jacobi) {
    std::ofstream f(*e.dump_jacobi, std::ios::binary);
    if (!f) throw ConfigurationError(fmt::format("dump_jacobi: cannot write {}", e.dump_jacobi->string()));
    f << "# " << ctx.header() << '\n';
    write_jacobi_csv(f, traj, *js);
  }

  report.add("wronskian", "Xi'^T H - Xi^T H' = -Id", js->wronskian_drift(), 1e-8);
  report.add("jacobi_residual", "Y'' + K Y = 0", js->max_residual(), 1e-4 * e.step);
  bool near_start = true;
  for (std::size_t i = 1; i < js->grid().size() && js->grid()[i] <= 0.01 + 1e-12; ++i) {
    near_start = near_start && js->det_eta(i) > 0.0;
  }
  report.add_flag("det_H_positive_near_0", "det H > 0 on (0, 0.01]", near_start);

  ctx.stage.name = "herglotz.f_real_axis_numeric";
  const auto sigmas = sample_sigmas(length, 20, js->singular_set());
  double symmetry = 0.0;
  for (double s : sigmas) {
    const Eigen::MatrixXd f = f_real_axis_numeric(*js, s);
    symmetry = std::max(symmetry, (f - f.transpose()).cwiseAbs().maxCoeff() / std::max(1.0, f.cwiseAbs().maxCoeff()));
  }
  report.add("f_symmetric", "f = Xi^{-1} H symmetric", symmetry, 1e-8);
  const NiceReport numeric_nice = check_theorem_nice(HerglotzMatrix::real_axis(js), {});
  report.add("f_at_0", "f(0) = 0", numeric_nice.value_at_zero, 1e-10);
  report.add("f_prime_at_0", "f'(0) = Id", numeric_nice.derivative_defect, 1e-8);

  ctx.stage.name = "herglotz.check_identity_chain";
  double key1 = 0.0, xi = 0.0;
  bool consistent = true;
  for (double s : sigmas) {
    const auto chain = check_identity_chain(js->evaluator(), s, 1e-5);
    key1 = std::max(key1, chain.key1);
    xi = std::max(xi, chain.xi);
    consistent = consistent && chain.consistent();
  }
  report.add("key1_numeric", "det(H^T H) det(G') = 1", key1, 1e-5);
  report.add("xi_identity_numeric", "Xi^T Xi f' = Id", xi, 1e-5);
  report.add_flag("identity_chain_consistent", "identity chain agreement", consistent);

  if (const auto* cc = constant_kind(e)) {
    const double c = cc->c;
    ctx.stage.name = "flow.closed_form_jacobi";
    double worst = 0.0;
    for (std::size_t i = 0; i < js->grid().size(); ++i) {
      const auto got = js->at_index(i);
      const auto want = closed_form_jacobi(c, js->grid()[i], n);
      const Real scale = std::max<Real>(1, std::max(want.xi.cwiseAbs().maxCoeff(), want.eta.cwiseAbs().maxCoeff()));
      worst = std::max(worst, static_cast<double>(std::max((got.xi - want.xi).cwiseAbs().maxCoeff(),
                                                           (got.eta - want.eta).cwiseAbs().maxCoeff()) /
                                                  scale));
    }
    report.add("jacobi_closed_form", "Xi, H vs cos/sin closed forms (relative)", worst, 1e-6);

    std::vector<double> avoid;
    if (c > 0) {
      for (double z = 0.0; z <= length + 1; z += pi / (2 * std::sqrt(c))) avoid.push_back(z);
    }
    const auto closed_sigmas = sample_sigmas(length, 20, avoid);
    double ck = 0.0, cx = 0.0;
    for (double s : closed_sigmas) {
      const auto chain = check_identity_chain(closed_form_evaluator(c, n), s, 1e-8);
      ck = std::max(ck, chain.key1);
      cx = std::max(cx, chain.xi);
    }
    report.add("key1_closed_form", "det(H^T H) det(G') = 1", ck, 1e-8);
    report.add("xi_identity_closed_form", "Xi^T Xi f' = Id", cx, 1e-8);

    if (c >= 0) {
      ctx.stage.name = "herglotz.check_theorem_nice";
      Rng rng(e.seed);
      std::vector<Complex> samples;
      for (int i = 0; i < 100; ++i) samples.emplace_back(20 * rng.uniform() - 10, 10 * (1.0 - rng.uniform()));
      const auto f = HerglotzMatrix::closed_form(c, n);
      const auto nice = check_theorem_nice(f, samples);
      report.add("f_symmetric_closed_form", "f symmetric", nice.symmetry_defect, 1e-10);
      report.add("f_normalized_closed_form", "f(0) = 0, f'(0) = Id",
                 std::max(nice.value_at_zero, nice.derivative_defect), 1e-8);
      report.add("im_f_positive", "Im f positive definite", -*nice.min_im_eigenvalue, 0.0);
      ctx.stage.name = "herglotz.neg_inverse";
      report.add("im_G_positive", "Im G positive definite",
                 -min_im_eigenvalue(HerglotzMatrix::closed_form_neg_inverse(c, n), samples), 0.0);

      ctx.stage.name = "herglotz.det_growth_bound";
      bool bound_ok = true, equality = true;
      double b_min = INFINITY;
      for (int i = 1; i <= 100; ++i) {
        double s = 10.0 * i / 100;
        if (c > 0 && std::fabs(std::remainder(std::sqrt(c) * s, pi)) < 1e-3) s -= 0.01;
        const auto bound = det_growth_bound(c, n, s);
        bound_ok = bound_ok && bound.ok;
        equality = equality && bound.equality;
        if (i % 2 == 0) b_min = std::min(b_min, b_decomposition_min_eigenvalue(c, n, s));
      }
      report.add_flag("det_growth_bound", "1/det G'(sigma) <= sigma^(2n-2)", bound_ok);
      if (c == 0) report.add_flag("det_growth_equality", "flat case saturates the bound", equality);
      report.add("b_decomposition", "G' - Id/sigma^2 positive semidefinite", -b_min, 1e-10);

      ctx.stage.name = "herglotz.adapted_complex_structure_at";
      report.add("J_squared", "J^2 = -Id", adapted_complex_structure_at(f).square_defect, 1e-8);

      add_fatou_checks(ctx, report, HerglotzMatrix::closed_form_neg_inverse(c, n), c, true, true);
    }
  }

  ctx.stage.name = "herglotz.minkowski_det_lower_bound";
  Rng rng(e.seed);
  bool minkowski = true;
  for (int trial = 0; trial < 1000; ++trial) {
    Eigen::MatrixXd g1(m, m), g2(m, m);
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < m; ++j) {
        g1(i, j) = rng.normal();
        g2(i, j) = rng.normal();
      }
    minkowski = minkowski && minkowski_det_lower_bound(g1 * g1.transpose(), g2 * g2.transpose()).ok();
  }
  report.add_flag("minkowski", "det(A1 + A2) >= det A1 + det A2", minkowski);

  ctx.write_report(report);
  return report.all_passed() ? kExitSuccess : kExitVerification;
}

int run_gromov(Context& ctx) {
  const Experiment& e = ctx.e;
  const auto* cc = constant_kind(e);
  if (cc == nullptr || cc->c != 1.0) {
    throw OutOfCatalogError("kind: the Gromov check runs on the unit round sphere (c = 1)");
  }
  ctx.stage.name = "counting.check_gromov_inequality";
  GromovOptions options{e.scheme, e.order, e.step, e.seed, e.threads};
  const GromovSearch search = find_gromov_constant(cc->n, e.K, e.C_grid, options);
  ctx.write_json("gromov.json", to_json(search));
  Report report;
  report.add_flag("gromov_constant_found", "Betti partial sums <= (1/Vol) total at T = Ck",
                  search.minimal_C.has_value());
  if (search.minimal_C) ctx.note(fmt::format("minimal C on grid: {}", *search.minimal_C));
  ctx.write_report(report);
  return report.all_passed() ? kExitSuccess : kExitVerification;
}

}  // namespace

int run_manifest(const RawManifest& manifest, std::ostream& out, std::ostream& err) {
  Stage stage;
  try {
    stage.name = "cli.parse_experiment";
    const Experiment e = parse_experiment(manifest);
    Context ctx{e, out, stage, {}};
    switch (e.task) {
      case Task::count: return run_count(ctx, false);
      case Task::growth: return run_count(ctx, true);
      case Task::herglotz_verify: return run_herglotz(ctx);
      case Task::lemma_suite: return run_lemma_suite(ctx);
      case Task::gromov: return run_gromov(ctx);
    }
    return kExitSuccess;
  } catch (const Error& ex) {
    fmt::print(err, "error [{}] in {}: {}\n", to_string(ex.kind()), stage.name, ex.what());
    return is_validation_error(ex.kind()) ? kExitValidation : kExitNumerical;
  } catch (const std::filesystem::filesystem_error& ex) {
    fmt::print(err, "error [configuration] in {}: {}\n", stage.name, ex.what());
    return kExitValidation;
  } catch (const std::exception& ex) {
    fmt::print(err, "error [numerical] in {}: {}\n", stage.name, ex.what());
    return kExitNumerical;
  }
}

}  // namespace gtube
