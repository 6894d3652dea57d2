#pragma once

// Coupled RK4 integration of geodesic, parallel frame and the matrix Jacobi
// equation Y'' + K(sigma) Y = 0 for Y in {Xi, H}.
//
// State layout: [geodesic + frame | Xi | Xi' | H | H'] with each matrix block
// stored column-major, (n-1) x (n-1).

#include "gtube/flow.hpp"
#include "model.hpp"

#include <memory>

namespace gtube::detail {

class CoupledFlow {
 public:
  explicit CoupledFlow(std::shared_ptr<const GeodesicModel> model) : model_(std::move(model)) {
    m_ = model_->normal_dimension();
    geo_ = model_->state_size();
  }

  int normal_dimension() const noexcept { return m_; }
  int state_size() const noexcept { return geo_ + 4 * m_ * m_; }
  const GeodesicModel& model() const noexcept { return *model_; }
  const std::shared_ptr<const GeodesicModel>& model_ptr() const noexcept { return model_; }

  VecR initial_state(const Eigen::VectorXd& x, const Eigen::VectorXd& theta) const {
    VecR y = VecR::Zero(state_size());
    y.head(geo_) = model_->initial_state(x, theta);
    block(y, 0) = MatR::Identity(m_, m_);  // Xi(0) = Id
    block(y, 3) = MatR::Identity(m_, m_);  // H'(0) = Id
    return y;
  }

  VecR derivative(const VecR& y) const {
    VecR dy(state_size());
    model_->derivative(y.data(), dy.data());
    const MatR k = model_->curvature(y.data());
    block(dy, 0) = block(y, 1);
    block(dy, 1) = -k * block(y, 0);
    block(dy, 2) = block(y, 3);
    block(dy, 3) = -k * block(y, 2);
    return dy;
  }

  void step(VecR& y, Real h) const {
    rk4_step([this](const VecR& s) { return derivative(s); }, y, h);
  }

  /// Matrix block b of the Jacobi part: 0 = Xi, 1 = Xi', 2 = H, 3 = H'.
  Eigen::Map<MatR> block(VecR& y, int b) const {
    return Eigen::Map<MatR>(y.data() + geo_ + b * m_ * m_, m_, m_);
  }
  Eigen::Map<const MatR> block(const VecR& y, int b) const {
    return Eigen::Map<const MatR>(y.data() + geo_ + b * m_ * m_, m_, m_);
  }

  JacobiSample sample(const VecR& y) const {
    return JacobiSample{block(y, 0), block(y, 1), block(y, 2), block(y, 3)};
  }

 private:
  std::shared_ptr<const GeodesicModel> model_;
  int m_ = 0;
  int geo_ = 0;
};

}  // namespace gtube::detail
