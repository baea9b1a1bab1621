#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <vector>

#include "evres/errors.hpp"
#include "evres/frame.hpp"
#include "evres/geometry.hpp"

namespace evres {

// Planar textured scene. The texture raster lives on the plane: texel (0, 0)
// sits at `origin`, texel steps follow the in-plane axes derived from the
// plane normal.
struct TemplateScene {
  Frame texture;  // irradiance in (0, 1], values >= kIrradianceFloor
  double physical_width = 0.0;   // meters spanned by texture width
  double physical_height = 0.0;  // meters spanned by texture height
  Plane plane;
  Eigen::Vector3d origin = Eigen::Vector3d::Zero();
  Eigen::Vector3d axis_u = Eigen::Vector3d::UnitX();
  Eigen::Vector3d axis_v = Eigen::Vector3d::UnitY();
  double log_min = 0.0;  // log range of the texture, used to normalize PSNR
  double log_max = 0.0;

  static TemplateScene create(Frame texture, double physical_w, double physical_h,
                              const Plane& plane, const Eigen::Vector3d& origin) {
    if (texture.kind != FrameKind::irradiance)
      throw ConfigError("scene texture must be an irradiance raster");
    TemplateScene s;
    s.physical_width = physical_w;
    s.physical_height = physical_h;
    s.plane = plane;
    s.origin = origin;
    // Deterministic in-plane axes: for the front-parallel plane (normal +z)
    // they reduce to world x and y.
    const Eigen::Vector3d n = plane.normal;
    Eigen::Vector3d a = std::abs(n.y()) < 0.9 ? Eigen::Vector3d::UnitY()
                                              : Eigen::Vector3d::UnitX();
    s.axis_u = a.cross(n).normalized();
    s.axis_v = n.cross(s.axis_u);
    double lo = texture.data[0], hi = texture.data[0];
    for (double v : texture.data) {
      if (v < lo) lo = v;
      if (v > hi) hi = v;
    }
    if (lo < kIrradianceFloor)
      throw ConfigError("texture has irradiance below the positivity floor");
    s.log_min = std::log(lo);
    s.log_max = std::log(hi);
    s.texture = std::move(texture);
    return s;
  }

  // Meters per texel.
  double texel_width() const { return physical_width / texture.width; }
  double texel_height() const { return physical_height / texture.height; }

  // World point of texel coordinates (s, t).
  Eigen::Vector3d texel_to_world(double s, double t) const {
    return origin + axis_u * (s * texel_width()) + axis_v * (t * texel_height());
  }
};

struct RenderConfig {
  int base_width = 1280;
  int base_height = 1280;
  double frame_rate_hz = 5000.0;  // dense sampling rate at speed 1
};

namespace detail {

// Homography mapping texel coordinates (s, t, 1) to homogeneous pixels.
inline Eigen::Matrix3d texture_to_image(const TemplateScene& scene,
                                        const CameraIntrinsics& k, const Pose& t) {
  const Eigen::Matrix3d r = t.rotation_matrix();
  Eigen::Matrix3d m;
  m.col(0) = r * (scene.axis_u * scene.texel_width());
  m.col(1) = r * (scene.axis_v * scene.texel_height());
  m.col(2) = r * scene.origin + t.t;
  return k.matrix() * m;
}

}  // namespace detail

// Renders the scene through the planar homography with bilinear texture
// sampling, clamp-to-edge beyond the texture.
inline Frame render_frame(const TemplateScene& scene, const CameraIntrinsics& k,
                          const Pose& t, double time) {
  // Camera must face the plane: all four frustum corner rays hit it in front.
  const std::array<Eigen::Vector2d, 4> corners = {
      Eigen::Vector2d(0, 0), Eigen::Vector2d(k.width - 1, 0),
      Eigen::Vector2d(0, k.height - 1), Eigen::Vector2d(k.width - 1, k.height - 1)};
  for (const auto& c : corners) {
    try {
      plane_depth(c, k, t, scene.plane);
    } catch (const GeometryError&) {
      throw GeometryError("camera does not face the scene plane");
    }
  }

  const Eigen::Matrix3d h = detail::texture_to_image(scene, k, t);
  if (std::abs(h.determinant()) < 1e-18)
    throw GeometryError("degenerate view of the scene plane");
  const Eigen::Matrix3d hinv = h.inverse();

  Frame out(k.width, k.height, FrameKind::irradiance, time);
  for (int y = 0; y < k.height; ++y) {
    Eigen::Vector3d v = hinv * Eigen::Vector3d(0.0, y, 1.0);
    double* row = &out.data[static_cast<size_t>(y) * k.width];
    for (int x = 0; x < k.width; ++x) {
      row[x] = bilinear_sample(scene.texture, v.x() / v.z(), v.y() / v.z());
      v += hinv.col(0);
    }
  }
  return out;
}

// Frames at t_start + i / frame_rate for i = 0 .. floor((t_end-t_start)*rate).
inline std::vector<Frame> render_sequence(const TemplateScene& scene,
                                          const CameraIntrinsics& k,
                                          const CumulativeBSpline& spline,
                                          double t_start, double t_end,
                                          double frame_rate) {
  if (frame_rate <= 0.0) throw ConfigError("frame rate must be positive");
  if (t_end < t_start) throw DomainError("t_end must be >= t_start");
  const int n = static_cast<int>(std::floor((t_end - t_start) * frame_rate));
  std::vector<Frame> frames;
  frames.reserve(n + 1);
  for (int i = 0; i <= n; ++i) {
    const double t = t_start + i / frame_rate;
    frames.push_back(render_frame(scene, k, spline_sample(spline, t), t));
  }
  return frames;
}

// Ground-truth optical flow displacement over dT at pixel x and time t:
// back-project onto the plane at T(t), reproject at T(t + dT).
inline Eigen::Vector2d gt_flow(const TemplateScene& scene,
                               const CameraIntrinsics& k,
                               const CumulativeBSpline& spline,
                               const Eigen::Vector2d& x, double t, double dT) {
  if (dT == 0.0) return Eigen::Vector2d::Zero();
  const Pose p0 = spline_sample(spline, t);
  const Pose p1 = spline_sample(spline, t + dT);
  const double z = plane_depth(x, k, p0, scene.plane);
  const Eigen::Vector3d xw = backproject(x, z, k, p0);
  const Eigen::Vector2d x1 = project(xw, k, p1);
  if (x1.x() < 0 || x1.x() > k.width - 1 || x1.y() < 0 || x1.y() > k.height - 1)
    throw GeometryError("tracked point leaves the camera frustum");
  return x1 - x;
}

// Same geometric path traversed s times faster: knot spacing divided by s.
inline CumulativeBSpline speed_scale(const CumulativeBSpline& spline, double s) {
  if (s <= 0.0) throw DomainError("speed scale must be positive");
  CumulativeBSpline out = spline;
  out.knot_spacing = spline.knot_spacing / s;
  return out;
}

}  // namespace evres
