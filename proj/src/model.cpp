#include "model.hpp"

#include "gtube/error.hpp"

#include <cmath>

namespace gtube::detail {
namespace {

using ConstMapR = Eigen::Map<const VecR>;

// Sphere (c > 0), Euclidean space (c = 0) or hyperboloid (c < 0), written in
// ambient coordinates. Layout: x[D] v[D] E[D x (n-1)] column-major.
class ConstantCurvatureModel : public GeodesicModel {
 public:
  ConstantCurvatureModel(double c, int n)
      : GeodesicModel(n), c_(c), ambient_(c == 0.0 ? n : n + 1) {}

  int state_size() const override { return ambient_ * (normal_dimension() + 2); }

  VecR initial_state(const Eigen::VectorXd& x, const Eigen::VectorXd& theta) const override {
    const int d = ambient_;
    const int m = normal_dimension();
    VecR y = VecR::Zero(state_size());
    y.segment(0, d) = x.cast<Real>();
    y.segment(d, d) = theta.cast<Real>();

    // Gram-Schmidt of the coordinate axes against {theta}, inside T_x M.
    std::vector<VecR> basis{theta.cast<Real>()};
    const VecR xr = x.cast<Real>();
    for (int axis = 0; axis < d && static_cast<int>(basis.size()) < m + 1; ++axis) {
      VecR w = VecR::Unit(d, axis);
      if (c_ != 0.0) w -= (dot(w, xr) / dot(xr, xr)) * xr;
      for (const auto& b : basis) w -= dot(w, b) * b;
      const Real norm2 = dot(w, w);
      if (norm2 < Real(1e-6)) continue;
      w /= std::sqrt(norm2);
      // Re-orthogonalize once for stability.
      for (const auto& b : basis) w -= dot(w, b) * b;
      w /= std::sqrt(dot(w, w));
      basis.push_back(w);
    }
    if (static_cast<int>(basis.size()) != m + 1) {
      throw NumericalError("constant_curvature: failed to complete normal frame");
    }
    for (int j = 0; j < m; ++j) y.segment(2 * d + j * d, d) = basis[j + 1];
    return y;
  }

  void derivative(const Real* y, Real* dy) const override {
    const int d = ambient_;
    const int m = normal_dimension();
    ConstMapR x(y, d);
    ConstMapR v(y + d, d);
    Eigen::Map<VecR> dx(dy, d);
    Eigen::Map<VecR> dv(dy + d, d);
    dx = v;
    dv = (-Real(c_) * dot(v, v)) * x;
    for (int j = 0; j < m; ++j) {
      ConstMapR e(y + 2 * d + j * d, d);
      Eigen::Map<VecR> de(dy + 2 * d + j * d, d);
      de = (-Real(c_) * dot(e, v)) * x;
    }
  }

  MatR curvature(const Real*) const override {
    const int m = normal_dimension();
    return MatR::Identity(m, m) * Real(c_);
  }

  Eigen::VectorXd position(const Real* y) const override {
    return ConstMapR(y, ambient_).cast<double>();
  }

  Eigen::VectorXd velocity(const Real* y) const override {
    return ConstMapR(y + ambient_, ambient_).cast<double>();
  }

  Eigen::MatrixXd frame(const Real* y) const override {
    const int d = ambient_;
    const int m = normal_dimension();
    Eigen::MatrixXd out(d, m);
    for (int j = 0; j < m; ++j) out.col(j) = ConstMapR(y + 2 * d + j * d, d).cast<double>();
    return out;
  }

  double speed_defect(const Real* y) const override {
    ConstMapR v(y + ambient_, ambient_);
    return static_cast<double>(std::fabs(dot(v, v) - 1));
  }

  double frame_defect(const Real* y) const override {
    const int d = ambient_;
    const int m = normal_dimension();
    ConstMapR v(y + d, d);
    Real worst = 0;
    for (int i = 0; i < m; ++i) {
      ConstMapR ei(y + 2 * d + i * d, d);
      worst = std::max(worst, std::fabs(dot(ei, v)));
      for (int j = i; j < m; ++j) {
        ConstMapR ej(y + 2 * d + j * d, d);
        worst = std::max(worst, std::fabs(dot(ei, ej) - (i == j ? 1 : 0)));
      }
    }
    return static_cast<double>(worst);
  }

 protected:
  template <class A, class B>
  Real dot(const A& a, const B& b) const {
    Real s = a.dot(b);
    if (c_ < 0.0) s -= 2 * a[0] * b[0];
    return s;
  }

 private:
  double c_;
  int ambient_;
};

// Straight lines in the universal cover, reduced to the fundamental cell on output.
class FlatTorusModel : public ConstantCurvatureModel {
 public:
  explicit FlatTorusModel(const Eigen::MatrixXd& basis)
      : ConstantCurvatureModel(0.0, static_cast<int>(basis.rows())),
        generators_(basis.transpose()),
        inverse_(generators_.inverse()) {}

  Eigen::VectorXd position(const Real* y) const override {
    const Eigen::VectorXd raw = ConstantCurvatureModel::position(y);
    Eigen::VectorXd t = inverse_ * raw;
    for (Eigen::Index i = 0; i < t.size(); ++i) {
      t[i] -= std::floor(t[i]);
      if (t[i] >= 1.0) t[i] = 0.0;
    }
    return generators_ * t;
  }

 private:
  Eigen::MatrixXd generators_;  // columns are lattice generators
  Eigen::MatrixXd inverse_;
};

// dr^2 + f(r)^2 g_{S^{n-1}}. A geodesic stays in the totally geodesic surface
// spanned by the radial direction and a great circle through p in direction u.
// Layout: r, phi, r', phi', A, B, C, p[n], u[n]
//   in-plane normal e_1 = A d_r + B d_phi, remaining normals C * w_j.
class WarpedProductModel : public GeodesicModel {
 public:
  WarpedProductModel(WarpFunction warp, int n) : GeodesicModel(n), warp_(std::move(warp)) {}

  int state_size() const override { return 7 + 2 * dimension(); }

  VecR initial_state(const Eigen::VectorXd& x, const Eigen::VectorXd& theta) const override {
    const int n = dimension();
    const Real r = x[0];
    const Eigen::VectorXd p = x.tail(n).normalized();
    const Eigen::VectorXd vp = theta.tail(n) - theta.tail(n).dot(p) * p;
    const double s = vp.norm();
    Eigen::VectorXd u;
    if (s > 1e-14) {
      u = vp / s;
    } else {
      u = any_orthogonal(p);
    }
    const auto jet = warp_(r);
    VecR y(state_size());
    y[0] = r;
    y[1] = 0;
    y[2] = theta[0];
    y[3] = s > 1e-14 ? Real(s) : Real(0);
    y[4] = -jet.f * y[3];
    y[5] = y[2] / jet.f;
    y[6] = 1 / jet.f;
    y.segment(7, n) = p.cast<Real>();
    y.segment(7 + n, n) = u.cast<Real>();
    return y;
  }

  void derivative(const Real* y, Real* dy) const override {
    const auto [f, df, ddf] = warp_(y[0]);
    (void)ddf;
    const Real rp = y[2];
    const Real pp = y[3];
    const Real a = y[4];
    const Real b = y[5];
    const Real c = y[6];
    dy[0] = rp;
    dy[1] = pp;
    dy[2] = f * df * pp * pp;
    dy[3] = -2 * (df / f) * rp * pp;
    dy[4] = f * df * pp * b;
    dy[5] = -(df / f) * (rp * b + pp * a);
    dy[6] = -(df / f) * rp * c;
    for (int i = 7; i < state_size(); ++i) dy[i] = 0;
  }

  MatR curvature(const Real* y) const override {
    const int m = normal_dimension();
    const auto [f, df, ddf] = warp_(y[0]);
    const Real radial = -ddf / f;
    const Real tangential = (1 - df * df) / (f * f);
    const Real a2 = y[2] * y[2];
    const Real b2 = f * f * y[3] * y[3];
    MatR k = MatR::Zero(m, m);
    k(0, 0) = radial;
    for (int j = 1; j < m; ++j) k(j, j) = a2 * radial + b2 * tangential;
    return k;
  }

  Eigen::VectorXd position(const Real* y) const override {
    const int n = dimension();
    Eigen::VectorXd out(n + 1);
    out[0] = static_cast<double>(y[0]);
    out.tail(n) = (std::cos(y[1]) * p(y) + std::sin(y[1]) * u(y)).cast<double>();
    return out;
  }

  Eigen::VectorXd velocity(const Real* y) const override {
    const int n = dimension();
    Eigen::VectorXd out(n + 1);
    out[0] = static_cast<double>(y[2]);
    out.tail(n) = (y[3] * tangent(y)).cast<double>();
    return out;
  }

  Eigen::MatrixXd frame(const Real* y) const override {
    const int n = dimension();
    const int m = normal_dimension();
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(n + 1, m);
    out(0, 0) = static_cast<double>(y[4]);
    out.col(0).tail(n) = (y[5] * tangent(y)).cast<double>();
    const auto w = fiber_complement(y);
    for (int j = 1; j < m; ++j) out.col(j).tail(n) = (y[6] * w.col(j - 1)).cast<double>();
    return out;
  }

  double speed_defect(const Real* y) const override {
    const Real f = warp_(y[0]).f;
    return static_cast<double>(std::fabs(y[2] * y[2] + f * f * y[3] * y[3] - 1));
  }

  double frame_defect(const Real* y) const override {
    const Real f = warp_(y[0]).f;
    Real worst = std::fabs(y[4] * y[4] + f * f * y[5] * y[5] - 1);
    worst = std::max(worst, std::fabs(y[4] * y[2] + f * f * y[5] * y[3]));
    if (normal_dimension() > 1) worst = std::max(worst, std::fabs(y[6] * f - 1));
    return static_cast<double>(worst);
  }

 private:
  VecR p(const Real* y) const { return ConstMapR(y + 7, dimension()); }
  VecR u(const Real* y) const { return ConstMapR(y + 7 + dimension(), dimension()); }

  // Unit tangent of the great circle at angle phi.
  VecR tangent(const Real* y) const {
    return -std::sin(y[1]) * p(y) + std::cos(y[1]) * u(y);
  }

  // Orthonormal complement of span{p, u} in R^n, as columns.
  MatR fiber_complement(const Real* y) const {
    const int n = dimension();
    std::vector<VecR> basis{p(y), u(y)};
    for (int axis = 0; axis < n && static_cast<int>(basis.size()) < n; ++axis) {
      VecR w = VecR::Unit(n, axis);
      for (int pass = 0; pass < 2; ++pass)
        for (const auto& b : basis) w -= w.dot(b) * b;
      const Real norm = w.norm();
      if (norm < Real(1e-6)) continue;
      basis.push_back(w / norm);
    }
    MatR out(n, n - 2);
    for (int j = 0; j < n - 2; ++j) out.col(j) = basis[j + 2];
    return out;
  }

  static Eigen::VectorXd any_orthogonal(const Eigen::VectorXd& p) {
    const int n = static_cast<int>(p.size());
    for (int axis = 0; axis < n; ++axis) {
      Eigen::VectorXd w = Eigen::VectorXd::Unit(n, axis);
      w -= w.dot(p) * p;
      if (w.norm() > 0.5) return w.normalized();
    }
    throw NumericalError("warped_product: no direction orthogonal to p");
  }

  WarpFunction warp_;
};

}  // namespace

std::shared_ptr<const GeodesicModel> make_model(const ManifoldSpec& spec) {
  return std::visit(
      [](const auto& kind) -> std::shared_ptr<const GeodesicModel> {
        using K = std::decay_t<decltype(kind)>;
        if constexpr (std::is_same_v<K, ConstantCurvature>) {
          return std::make_shared<ConstantCurvatureModel>(kind.c, kind.n);
        } else if constexpr (std::is_same_v<K, FlatTorus>) {
          return std::make_shared<FlatTorusModel>(kind.basis);
        } else {
          return std::make_shared<WarpedProductModel>(kind.warp, kind.n);
        }
      },
      spec.kind());
}

}  // namespace gtube::detail
