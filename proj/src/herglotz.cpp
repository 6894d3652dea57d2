#include "gtube/herglotz.hpp"

#include "gtube/error.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <numbers>

namespace gtube {
namespace {

constexpr double kPoleDistance = 1e-8;
constexpr double kMaxCondition = 1e12;

using std::numbers::pi;

CMat scalar_identity(int m, Complex value) { return value * CMat::Identity(m, m); }

int normal_dimension(int n) {
  if (n < 2) throw InputError(fmt::format("dimension n={} must be at least 2", n));
  return n - 1;
}

// Distance from zeta to the lattice offset + j * spacing (j integer) placed on
// the real axis, or on the imaginary axis when `imaginary`.
double lattice_distance(Complex zeta, double offset, double spacing, bool imaginary) {
  const double along = imaginary ? zeta.imag() : zeta.real();
  const double across = imaginary ? zeta.real() : zeta.imag();
  const double j = std::round((along - offset) / spacing);
  return std::hypot(along - (offset + j * spacing), across);
}

std::vector<double> lattice_points(double offset, double spacing, double a, double b) {
  std::vector<double> out;
  for (double j = std::ceil((a - offset) / spacing); offset + j * spacing <= b; j += 1.0) {
    out.push_back(offset + j * spacing);
  }
  return out;
}

double condition_number(const CMat& m) {
  const Eigen::JacobiSVD<CMat> svd(m);
  const auto& s = svd.singularValues();
  if (s.size() == 0) return 1.0;
  const double smallest = s[s.size() - 1];
  return smallest > 0.0 ? s[0] / smallest : std::numeric_limits<double>::infinity();
}

double symmetric_min_eigenvalue(const Eigen::MatrixXd& m) {
  const Eigen::MatrixXd sym = (m + m.transpose()) / 2;
  return Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(sym, Eigen::EigenvaluesOnly)
      .eigenvalues()
      .minCoeff();
}

double spectral_norm_sym(const Eigen::MatrixXd& m) {
  if (m.size() == 0) return 0.0;
  return Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(m, Eigen::EigenvaluesOnly)
      .eigenvalues()
      .cwiseAbs()
      .maxCoeff();
}

// Power of two close to 1e-5 max(1, |x|), so x +- h and x +- 2h are exact.
double fd_step(double x) {
  return std::ldexp(1.0, static_cast<int>(std::round(std::log2(static_cast<double>(derivative_step(x))))));
}

MatR g_of(const JacobiSample& s) { return -s.eta.partialPivLu().solve(s.xi); }
MatR f_of(const JacobiSample& s) { return s.xi.partialPivLu().solve(s.eta); }

template <class Map>
MatR five_point(const JacobiEvaluator& jacobi, double sigma, Map map) {
  const double h = fd_step(sigma);
  const MatR p2 = map(jacobi(sigma + 2 * h)), p1 = map(jacobi(sigma + h));
  const MatR m1 = map(jacobi(sigma - h)), m2 = map(jacobi(sigma - 2 * h));
  return ((m2 - p2) + 8 * (p1 - m1)) / (12 * Real(h));
}

void require_fd_window(const JacobiSystem& js, double sigma) {
  const double h = fd_step(sigma);
  if (sigma - 2 * h < 0.0 || sigma + 2 * h > js.length()) {
    throw DomainError(fmt::format("sigma={} too close to the ends of [0, {}] for differencing",
                                  sigma, js.length()));
  }
  const double distance = std::min(js.distance_to_xi_singular(sigma), js.distance_to_eta_singular(sigma));
  if (distance < 4 * h) {
    throw ConditioningError(
        fmt::format("sigma={} lies {:.3e} from a singular point", sigma, distance), distance);
  }
}

}  // namespace

CMat f_constant_curvature(double c, int n, Complex zeta) {
  const int m = normal_dimension(n);
  if (c == 0.0) return scalar_identity(m, zeta);
  const double k = std::sqrt(std::fabs(c));
  // Poles of tan(k zeta) at (j + 1/2) pi / k; of tanh(k zeta) at i (j + 1/2) pi / k.
  const double distance = lattice_distance(zeta, pi / (2 * k), pi / k, c < 0.0);
  if (distance < kPoleDistance) {
    throw PoleError(fmt::format("f evaluated {:.3e} from a pole at zeta=({}, {})", distance,
                                zeta.real(), zeta.imag()));
  }
  const Complex value = c > 0.0 ? std::tan(k * zeta) / k : std::tanh(k * zeta) / k;
  return scalar_identity(m, value);
}

CMat g_constant_curvature(double c, int n, Complex zeta) {
  const int m = normal_dimension(n);
  const double k = std::sqrt(std::fabs(c));
  const double distance = c == 0.0 ? std::abs(zeta) : lattice_distance(zeta, 0.0, pi / k, c < 0.0);
  if (distance < kPoleDistance) {
    throw PoleError(fmt::format("G evaluated {:.3e} from a pole at zeta=({}, {})", distance,
                                zeta.real(), zeta.imag()));
  }
  if (c == 0.0) return scalar_identity(m, -1.0 / zeta);
  const Complex value = c > 0.0 ? -k / std::tan(k * zeta) : -k / std::tanh(k * zeta);
  return scalar_identity(m, value);
}

Eigen::MatrixXd f_real_axis_numeric(const JacobiSystem& js, double sigma) {
  const double distance = js.distance_to_xi_singular(sigma);
  if (distance < 1e-9) {
    throw ConditioningError(
        fmt::format("Xi is singular {:.3e} from sigma={}", distance, sigma), distance);
  }
  const JacobiSample s = js.sample(sigma);
  const Eigen::JacobiSVD<MatR> svd(s.xi);
  const auto& sv = svd.singularValues();
  const Real smallest = sv[sv.size() - 1];
  if (!(smallest > 0) || sv[0] / smallest > Real(kMaxCondition)) {
    throw ConditioningError(
        fmt::format("Xi is ill-conditioned at sigma={} ({:.3e} from a zero of det Xi)", sigma,
                    distance),
        distance);
  }
  return f_of(s).cast<double>();
}

CMat neg_inverse(const CMat& F) {
  if (F.rows() != F.cols()) throw InputError("neg_inverse needs a square matrix");
  const double cond = condition_number(F);
  if (!(cond < kMaxCondition)) {
    throw SingularityError(fmt::format("matrix is singular to working precision (cond {:.3e})", cond));
  }
  const CMat result = -F.fullPivLu().inverse();
  const double scale = std::max(1.0, F.cwiseAbs().maxCoeff());
  const bool symmetric = (F - F.transpose()).cwiseAbs().maxCoeff() <= 1e-10 * scale;
  if (symmetric && symmetric_min_eigenvalue(F.imag()) > 0.0) {
    const double lowest = symmetric_min_eigenvalue(result.imag());
    if (lowest < -1e-10 * std::max(1.0, result.cwiseAbs().maxCoeff())) {
      throw NumericalError(fmt::format(
          "Im(-F^-1) has eigenvalue {:.3e} although Im F is positive definite", lowest));
    }
  }
  return result;
}

std::string to_string(HerglotzSource source) {
  switch (source) {
    case HerglotzSource::closed_form: return "closed_form";
    case HerglotzSource::real_axis_numeric: return "real_axis_numeric";
    case HerglotzSource::custom: return "custom";
  }
  return "custom";
}

HerglotzMatrix::HerglotzMatrix(int dimension, HerglotzSource source, Evaluator evaluator,
                               PoleLocator poles, std::string label)
    : dimension_(dimension),
      source_(source),
      evaluator_(std::move(evaluator)),
      poles_(std::move(poles)),
      label_(std::move(label)) {}

HerglotzMatrix HerglotzMatrix::closed_form(double c, int n) {
  const int m = normal_dimension(n);
  PoleLocator poles = [c](double a, double b) {
    if (c <= 0.0) return std::vector<double>{};
    const double k = std::sqrt(c);
    return lattice_points(pi / (2 * k), pi / k, a, b);
  };
  return HerglotzMatrix(m, HerglotzSource::closed_form,
                        [c, n](Complex z) { return f_constant_curvature(c, n, z); },
                        std::move(poles), fmt::format("f[c={}]", c));
}

HerglotzMatrix HerglotzMatrix::closed_form_neg_inverse(double c, int n) {
  const int m = normal_dimension(n);
  PoleLocator poles = [c](double a, double b) {
    if (c <= 0.0) return a <= 0.0 && 0.0 <= b ? std::vector<double>{0.0} : std::vector<double>{};
    return lattice_points(0.0, pi / std::sqrt(c), a, b);
  };
  return HerglotzMatrix(m, HerglotzSource::closed_form,
                        [c, n](Complex z) { return g_constant_curvature(c, n, z); },
                        std::move(poles), fmt::format("G[c={}]", c));
}

HerglotzMatrix HerglotzMatrix::real_axis(std::shared_ptr<const JacobiSystem> js) {
  if (!js) throw InputError("real_axis source needs a Jacobi system");
  const int m = js->dimension();
  Evaluator eval = [js](Complex z) -> CMat {
    if (z.imag() != 0.0) {
      throw ConfigurationError(
          "numeric sources are defined on the real axis only; complex arguments need a closed form");
    }
    return f_real_axis_numeric(*js, z.real()).cast<Complex>();
  };
  PoleLocator poles = [js](double a, double b) {
    std::vector<double> out;
    for (double t : js->xi_singular()) {
      if (t >= a && t <= b) out.push_back(t);
    }
    return out;
  };
  return HerglotzMatrix(m, HerglotzSource::real_axis_numeric, std::move(eval), std::move(poles),
                        "f[numeric]");
}

HerglotzMatrix HerglotzMatrix::custom(int dimension, Evaluator evaluator, PoleLocator poles,
                                      std::string label) {
  if (dimension < 1) throw InputError("custom Herglotz function needs dimension >= 1");
  return HerglotzMatrix(dimension, HerglotzSource::custom, std::move(evaluator), std::move(poles),
                        std::move(label));
}

std::vector<double> HerglotzMatrix::poles(double a, double b) const {
  if (!poles_) return {};
  auto out = poles_(a, b);
  std::sort(out.begin(), out.end());
  return out;
}

NiceReport check_theorem_nice(const HerglotzMatrix& F, const std::vector<Complex>& samples) {
  NiceReport report;
  const int m = F.dimension();
  const CMat zero = F(Complex(0.0, 0.0));
  report.value_at_zero = zero.cwiseAbs().maxCoeff();
  report.symmetry_defect = (zero - zero.transpose()).cwiseAbs().maxCoeff();

  const double h = 1e-5;
  CMat derivative;
  if (F.complex_domain()) {
    derivative = ((F(-2 * h) - F(2 * h)) + 8.0 * (F(h) - F(-h))) / (12 * h);
  } else {
    // One-sided fourth-order stencil; numeric sources start at sigma = 0.
    derivative = (-25.0 * zero + 48.0 * F(h) - 36.0 * F(2 * h) + 16.0 * F(3 * h) - 3.0 * F(4 * h)) /
                 (12 * h);
  }
  report.derivative_defect = (derivative - CMat::Identity(m, m)).cwiseAbs().maxCoeff();

  double lowest = std::numeric_limits<double>::infinity();
  for (const Complex& z : samples) {
    if (z.imag() < 0.0) throw InputError("samples must lie in the closed upper half plane");
    const CMat v = F(z);
    report.symmetry_defect = std::max(report.symmetry_defect, (v - v.transpose()).cwiseAbs().maxCoeff());
    lowest = std::min(lowest, symmetric_min_eigenvalue(v.imag()));
  }
  if (F.complex_domain() && !samples.empty()) report.min_im_eigenvalue = lowest;
  return report;
}

double min_im_eigenvalue(const HerglotzMatrix& F, const std::vector<Complex>& samples) {
  double lowest = std::numeric_limits<double>::infinity();
  for (const Complex& z : samples) lowest = std::min(lowest, symmetric_min_eigenvalue(F(z).imag()));
  return lowest;
}

double check_key1(const JacobiEvaluator& jacobi, double sigma) {
  const JacobiSample s = jacobi(sigma);
  const MatR g_prime = five_point(jacobi, sigma, g_of);
  const Real product = (s.eta.transpose() * s.eta).determinant() * g_prime.determinant();
  return static_cast<double>(std::fabs(product - 1));
}

double check_key1(const JacobiSystem& js, double sigma) {
  require_fd_window(js, sigma);
  return check_key1(js.evaluator(), sigma);
}

double check_xi_identity(const JacobiEvaluator& jacobi, double sigma) {
  const JacobiSample s = jacobi(sigma);
  const MatR f_prime = five_point(jacobi, sigma, f_of);
  const MatR defect = s.xi.transpose() * s.xi * f_prime - MatR::Identity(s.xi.rows(), s.xi.cols());
  return static_cast<double>(defect.cwiseAbs().maxCoeff());
}

double check_xi_identity(const JacobiSystem& js, double sigma) {
  require_fd_window(js, sigma);
  return check_xi_identity(js.evaluator(), sigma);
}

IdentityChain check_identity_chain(const JacobiEvaluator& jacobi, double sigma, double tolerance) {
  IdentityChain chain;
  chain.key1 = check_key1(jacobi, sigma);
  chain.xi = check_xi_identity(jacobi, sigma);
  chain.key1_ok = chain.key1 <= tolerance;
  chain.xi_ok = chain.xi <= tolerance;
  return chain;
}

MinkowskiMargin minkowski_det_lower_bound(const Eigen::MatrixXd& A1, const Eigen::MatrixXd& A2) {
  if (A1.rows() != A1.cols() || A2.rows() != A2.cols() || A1.rows() != A2.rows() || A1.rows() == 0) {
    throw InputError("Minkowski bound needs two square matrices of the same size");
  }
  for (const auto* m : {&A1, &A2}) {
    if ((*m - m->transpose()).cwiseAbs().maxCoeff() > 1e-10 * std::max(1.0, m->cwiseAbs().maxCoeff())) {
      throw InputError("Minkowski bound needs symmetric matrices");
    }
    const double lowest = symmetric_min_eigenvalue(*m);
    if (lowest < -1e-10) {
      throw InputError(fmt::format("matrix is not positive semidefinite (eigenvalue {:.3e})", lowest));
    }
  }
  MinkowskiMargin out;
  out.margin = (A1 + A2).partialPivLu().determinant() - A1.partialPivLu().determinant() -
               A2.partialPivLu().determinant();
  out.scale = std::pow(spectral_norm_sym(A1) + spectral_norm_sym(A2), static_cast<double>(A1.rows()));
  return out;
}

DetGrowthBound det_growth_bound(double c, int n, double sigma) {
  const int m = normal_dimension(n);
  if (!(sigma > 0.0)) throw InputError(fmt::format("sigma={} must be positive", sigma));
  const double k = std::sqrt(std::fabs(c));
  if (c > 0.0 && lattice_distance(Complex(sigma, 0.0), 0.0, pi / k, false) < kPoleDistance) {
    throw PoleError(fmt::format("sigma={} is a pole of G", sigma));
  }
  // 1 / det G'(sigma) with G' = c csc^2(k sigma), 1/sigma^2, |c| csch^2(k sigma).
  double per_direction = sigma * sigma;
  if (c > 0.0) per_direction = std::pow(std::sin(k * sigma), 2) / c;
  if (c < 0.0) per_direction = std::pow(std::sinh(k * sigma), 2) / -c;
  DetGrowthBound out;
  out.lhs = std::pow(per_direction, m);
  out.rhs = std::pow(sigma, 2 * m);
  out.ok = out.lhs <= out.rhs + 1e-12 * std::max(1.0, out.rhs);
  out.equality = std::fabs(out.lhs - out.rhs) <= 1e-12 * std::max(1.0, out.rhs);
  return out;
}

double b_decomposition_min_eigenvalue(double c, int n, double sigma) {
  const int m = normal_dimension(n);
  if (sigma == 0.0) throw InputError("sigma must be nonzero");
  const double k = std::sqrt(std::fabs(c));
  if (c > 0.0 && lattice_distance(Complex(sigma, 0.0), 0.0, pi / k, false) < kPoleDistance) {
    throw PoleError(fmt::format("sigma={} is a pole of G", sigma));
  }
  double g_prime = 1.0 / (sigma * sigma);
  if (c > 0.0) g_prime = c / std::pow(std::sin(k * sigma), 2);
  if (c < 0.0) g_prime = -c / std::pow(std::sinh(k * sigma), 2);
  const Eigen::MatrixXd b =
      (g_prime - 1.0 / (sigma * sigma)) * Eigen::MatrixXd::Identity(m, m);
  return symmetric_min_eigenvalue(b);
}

ComplexStructure adapted_complex_structure_at(const HerglotzMatrix& F) {
  const CMat fi = F(Complex(0.0, 1.0));
  const Eigen::MatrixXd x = (fi.real() + fi.real().transpose()) / 2;
  const Eigen::MatrixXd y = (fi.imag() + fi.imag().transpose()) / 2;
  const Eigen::JacobiSVD<Eigen::MatrixXd> svd(y);
  const auto& sv = svd.singularValues();
  if (!(sv[sv.size() - 1] > 0.0) || sv[0] / sv[sv.size() - 1] > kMaxCondition) {
    throw DegeneracyError("Im f(i) is not invertible");
  }
  const Eigen::MatrixXd e = y.inverse();
  const int m = static_cast<int>(y.rows());
  ComplexStructure out;
  out.J.resize(2 * m, 2 * m);
  out.J << -x * e, -(y + x * e * x), e, e * x;
  out.square_defect =
      (out.J * out.J + Eigen::MatrixXd::Identity(2 * m, 2 * m)).cwiseAbs().maxCoeff();
  return out;
}

}  // namespace gtube
