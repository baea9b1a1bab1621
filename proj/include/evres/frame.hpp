#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "evres/errors.hpp"

namespace evres {

enum class FrameKind { irradiance, log_intensity, log_rate };

// Irradiance floor applied when loading / synthesizing textures so that
// logs stay finite.
inline constexpr double kIrradianceFloor = 1e-3;

// A timestamped 2-D raster. Row-major doubles.
struct Frame {
  int width = 0;
  int height = 0;
  double timestamp = 0.0;  // seconds
  FrameKind kind = FrameKind::irradiance;
  std::vector<double> data;

  Frame() = default;
  Frame(int w, int h, FrameKind k, double t = 0.0, double fill = 0.0)
      : width(w), height(h), timestamp(t), kind(k),
        data(static_cast<size_t>(w) * h, fill) {}

  double& at(int x, int y) { return data[static_cast<size_t>(y) * width + x]; }
  double at(int x, int y) const { return data[static_cast<size_t>(y) * width + x]; }
  size_t size() const { return data.size(); }

  bool same_shape(const Frame& other) const {
    return width == other.width && height == other.height;
  }
};

inline double frame_mean(const Frame& f) {
  double s = 0.0;
  for (double v : f.data) s += v;
  return s / static_cast<double>(f.size());
}

inline double frame_min(const Frame& f) {
  return *std::min_element(f.data.begin(), f.data.end());
}

inline double frame_max(const Frame& f) {
  return *std::max_element(f.data.begin(), f.data.end());
}

// Bilinear sample with clamp-to-edge. Pixel centers sit at integer
// coordinates; (x, y) outside [0, w-1]x[0, h-1] clamps to the border value.
inline double bilinear_sample(const Frame& f, double x, double y,
                              bool* clamped = nullptr) {
  const double xc = std::clamp(x, 0.0, static_cast<double>(f.width - 1));
  const double yc = std::clamp(y, 0.0, static_cast<double>(f.height - 1));
  if (clamped && (xc != x || yc != y)) *clamped = true;
  const int x0 = std::min(static_cast<int>(xc), f.width - 2 >= 0 ? f.width - 2 : 0);
  const int y0 = std::min(static_cast<int>(yc), f.height - 2 >= 0 ? f.height - 2 : 0);
  const int x1 = std::min(x0 + 1, f.width - 1);
  const int y1 = std::min(y0 + 1, f.height - 1);
  const double fx = xc - x0;
  const double fy = yc - y0;
  const double v00 = f.at(x0, y0), v10 = f.at(x1, y0);
  const double v01 = f.at(x0, y1), v11 = f.at(x1, y1);
  return (1.0 - fy) * ((1.0 - fx) * v00 + fx * v10) +
         fy * ((1.0 - fx) * v01 + fx * v11);
}

// Gradient of the bilinear interpolant at (x, y). Consistent with
// bilinear_sample: it is the exact derivative of the piecewise-bilinear
// surface, zero outside the clamped domain.
inline std::pair<double, double> bilinear_grad(const Frame& f, double x, double y) {
  const double xc = std::clamp(x, 0.0, static_cast<double>(f.width - 1));
  const double yc = std::clamp(y, 0.0, static_cast<double>(f.height - 1));
  const int x0 = std::min(static_cast<int>(xc), f.width - 2 >= 0 ? f.width - 2 : 0);
  const int y0 = std::min(static_cast<int>(yc), f.height - 2 >= 0 ? f.height - 2 : 0);
  const int x1 = std::min(x0 + 1, f.width - 1);
  const int y1 = std::min(y0 + 1, f.height - 1);
  const double fx = xc - x0;
  const double fy = yc - y0;
  const double v00 = f.at(x0, y0), v10 = f.at(x1, y0);
  const double v01 = f.at(x0, y1), v11 = f.at(x1, y1);
  double gx = (1.0 - fy) * (v10 - v00) + fy * (v11 - v01);
  double gy = (1.0 - fx) * (v01 - v00) + fx * (v11 - v10);
  if (x != xc) gx = 0.0;
  if (y != yc) gy = 0.0;
  return {gx, gy};
}

}  // namespace evres
