#pragma once

// Linear Gaussian measurement model y = Ax + N(0, eta^2 I_m).

#include <utility>

#include "alps/common.hpp"
#include "alps/rng.hpp"

namespace alps {

class MeasurementModel {
 public:
  MeasurementModel(Mat a, double eta) : a_(std::move(a)), eta_(eta) {
    require(eta_ > 0, "MeasurementModel: eta must be positive");
    require(all_finite(a_), "MeasurementModel: A must be finite");
    require(a_.rows() > 0 && a_.cols() > 0, "MeasurementModel: A must be non-empty");
    op_norm_ = a_.jacobiSvd().singularValues()(0);
  }

  const Mat& A() const { return a_; }
  double eta() const { return eta_; }
  double eta_sq() const { return eta_ * eta_; }
  double op_norm() const { return op_norm_; }  // largest singular value, cached
  Eigen::Index m() const { return a_.rows(); }
  Eigen::Index d() const { return a_.cols(); }

 private:
  Mat a_;
  double eta_;
  double op_norm_;
};

// y = Ax + eta * z, z ~ N(0, I_m). Deterministic given the rng stream.
inline Vec simulate_measurement(const Vec& x, const MeasurementModel& model, Rng& rng) {
  require(x.size() == model.d(), "simulate_measurement: x has wrong dimension");
  require(all_finite(x), "simulate_measurement: x must be finite");
  return model.A() * x + model.eta() * rng.gaussian_vector(model.m());
}

}  // namespace alps
