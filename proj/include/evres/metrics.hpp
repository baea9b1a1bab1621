#pragma once

#include <cmath>
#include <limits>

#include "evres/errors.hpp"
#include "evres/frame.hpp"
#include "evres/geometry.hpp"

namespace evres {

inline constexpr double kRnepeReferenceHeight = 1280.0;  // H_max

struct PsnrResult {
  double db = 0.0;
  bool infinite = false;  // MSE was exactly zero
};

inline PsnrResult psnr(const Frame& a, const Frame& b, double peak) {
  if (!a.same_shape(b)) throw DomainError("PSNR needs frames of equal shape");
  if (peak <= 0.0) throw DomainError("PSNR peak must be positive");
  double mse = 0.0;
  for (size_t i = 0; i < a.data.size(); ++i) {
    const double d = a.data[i] - b.data[i];
    mse += d * d;
  }
  mse /= static_cast<double>(a.data.size());
  PsnrResult r;
  if (mse == 0.0) {
    r.infinite = true;
    r.db = std::numeric_limits<double>::infinity();
    return r;
  }
  r.db = 10.0 * std::log10(peak * peak / mse);
  return r;
}

// Resolution-independent normalized end-point error, in pixels:
// (H_max / H) * ||v_hat - v_gt||.
inline double rnepe(const Eigen::Vector2d& v_hat, const Eigen::Vector2d& v_gt,
                    double sensor_height) {
  if (sensor_height <= 0.0) throw DomainError("sensor height must be positive");
  return kRnepeReferenceHeight / sensor_height * (v_hat - v_gt).norm();
}

// Mean translation difference between two splines over their shared domain,
// sampled uniformly at sample_rate, reported in millimeters.
inline double position_error_mm(const CumulativeBSpline& estimate,
                                const CumulativeBSpline& truth,
                                double sample_rate_hz) {
  if (sample_rate_hz <= 0.0) throw DomainError("sample rate must be positive");
  const double lo = std::max(estimate.t_min(), truth.t_min());
  const double hi = std::min(estimate.t_max(), truth.t_max());
  if (!(lo < hi)) throw DomainError("spline domains do not overlap");
  const double dt = 1.0 / sample_rate_hz;
  double sum = 0.0;
  int n = 0;
  for (double t = lo; t < hi; t += dt) {
    sum += (spline_sample(estimate, t).t - spline_sample(truth, t).t).norm();
    ++n;
  }
  return 1000.0 * sum / n;
}

}  // namespace evres
