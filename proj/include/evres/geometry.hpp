#pragma once

#include <Eigen/Dense>
#include <Eigen/Geometry>
#include <cmath>
#include <sstream>
#include <vector>

#include "evres/errors.hpp"

namespace evres {

// ---------------------------------------------------------------------------
// SO(3) helpers
// ---------------------------------------------------------------------------

// Rotation-vector exponential. Series expansion below 1e-8 rad.
inline Eigen::Quaterniond so3_exp(const Eigen::Vector3d& w) {
  const double theta2 = w.squaredNorm();
  if (theta2 < 1e-16) {
    Eigen::Quaterniond q(1.0, 0.5 * w.x(), 0.5 * w.y(), 0.5 * w.z());
    q.normalize();
    return q;
  }
  const double theta = std::sqrt(theta2);
  const double s = std::sin(0.5 * theta) / theta;
  return Eigen::Quaterniond(std::cos(0.5 * theta), s * w.x(), s * w.y(), s * w.z());
}

inline Eigen::Vector3d so3_log(const Eigen::Quaterniond& q_in) {
  Eigen::Quaterniond q = q_in.normalized();
  if (q.w() < 0.0) q.coeffs() = -q.coeffs();  // shortest arc
  const Eigen::Vector3d v(q.x(), q.y(), q.z());
  const double vn = v.norm();
  if (vn < 1e-9) return 2.0 * v;  // small angle: log ~ 2*(x,y,z)
  const double theta = 2.0 * std::atan2(vn, q.w());
  return (theta / vn) * v;
}

// ---------------------------------------------------------------------------
// Pose: camera-from-world rigid transform, X_cam = q * X_world + t.
// ---------------------------------------------------------------------------
struct Pose {
  Eigen::Quaterniond q = Eigen::Quaterniond::Identity();
  Eigen::Vector3d t = Eigen::Vector3d::Zero();

  static Pose identity() { return Pose{}; }

  Eigen::Vector3d apply(const Eigen::Vector3d& x) const { return q * x + t; }

  Pose compose(const Pose& other) const {
    Pose out;
    out.q = (q * other.q).normalized();
    out.t = q * other.t + t;
    return out;
  }

  Pose inverse() const {
    Pose out;
    out.q = q.conjugate();
    out.t = -(out.q * t);
    return out;
  }

  // Camera center in world coordinates.
  Eigen::Vector3d center() const { return -(q.conjugate() * t); }

  Eigen::Matrix3d rotation_matrix() const { return q.toRotationMatrix(); }
};

inline Pose operator*(const Pose& a, const Pose& b) { return a.compose(b); }

struct CameraIntrinsics {
  double fx = 0, fy = 0;
  double cx = 0, cy = 0;
  int width = 0, height = 0;

  CameraIntrinsics() = default;
  CameraIntrinsics(double fx_, double fy_, double cx_, double cy_, int w, int h)
      : fx(fx_), fy(fy_), cx(cx_), cy(cy_), width(w), height(h) {
    if (fx <= 0 || fy <= 0) throw ConfigError("focal lengths must be positive");
    if (cx < 0 || cx >= w || cy < 0 || cy >= h)
      throw ConfigError("principal point outside the sensor");
  }

  Eigen::Matrix3d matrix() const {
    Eigen::Matrix3d k;
    k << fx, 0, cx, 0, fy, cy, 0, 0, 1;
    return k;
  }
};

// Plane n . X = offset with |n| = 1, world frame.
struct Plane {
  Eigen::Vector3d normal = Eigen::Vector3d::UnitZ();
  double offset = 0.0;

  Plane() = default;
  Plane(const Eigen::Vector3d& n, double d) : normal(n.normalized()), offset(d) {}
};

// ---------------------------------------------------------------------------
// Projection
// ---------------------------------------------------------------------------

inline Eigen::Vector2d project(const Eigen::Vector3d& x_world,
                               const CameraIntrinsics& k, const Pose& t_cw) {
  const Eigen::Vector3d xc = t_cw.apply(x_world);
  if (xc.z() <= 1e-9) {
    std::ostringstream os;
    os << "point behind camera (z = " << xc.z() << ")";
    throw GeometryError(os.str());
  }
  return {k.fx * xc.x() / xc.z() + k.cx, k.fy * xc.y() / xc.z() + k.cy};
}

inline Eigen::Vector3d backproject(const Eigen::Vector2d& px, double depth,
                                   const CameraIntrinsics& k, const Pose& t_cw) {
  if (depth <= 0.0) throw GeometryError("backprojection needs positive depth");
  const Eigen::Vector3d xc(depth * (px.x() - k.cx) / k.fx,
                           depth * (px.y() - k.cy) / k.fy, depth);
  return t_cw.inverse().apply(xc);
}

// Camera-frame depth of the intersection between the pixel ray and the plane.
inline double plane_depth(const Eigen::Vector2d& px, const CameraIntrinsics& k,
                          const Pose& t_cw, const Plane& plane) {
  const Eigen::Vector3d dir_cam((px.x() - k.cx) / k.fx, (px.y() - k.cy) / k.fy, 1.0);
  const Eigen::Quaterniond q_wc = t_cw.q.conjugate();
  const Eigen::Vector3d dir_world = q_wc * dir_cam;
  const Eigen::Vector3d origin = t_cw.center();
  if (std::abs(plane.normal.dot(dir_world.normalized())) <= 1e-12)
    throw GeometryError("pixel ray parallel to plane");
  // dir_world has unit camera-frame z, so the ray parameter is the depth.
  const double depth =
      (plane.offset - plane.normal.dot(origin)) / plane.normal.dot(dir_world);
  if (depth <= 0.0) throw GeometryError("plane intersection behind camera");
  return depth;
}

// Homography mapping homogeneous dst pixels to src pixels through the plane.
// Normalized so element (2,2) is 1 when nonzero.
inline Eigen::Matrix3d planar_homography(const CameraIntrinsics& k_src,
                                         const Pose& t_src,
                                         const CameraIntrinsics& k_dst,
                                         const Pose& t_dst, const Plane& plane) {
  const double side_src = plane.normal.dot(t_src.center()) - plane.offset;
  const double side_dst = plane.normal.dot(t_dst.center()) - plane.offset;
  if (side_src * side_dst <= 0.0)
    throw GeometryError("cameras on opposite sides of the plane");

  const Eigen::Matrix3d r_dst = t_dst.rotation_matrix();
  const Eigen::Vector3d n_d = r_dst * plane.normal;
  const double h_d = plane.offset + n_d.dot(t_dst.t);
  if (std::abs(h_d) < 1e-12)
    throw GeometryError("degenerate plane-camera configuration");

  const Eigen::Matrix3d r_rel = t_src.rotation_matrix() * r_dst.transpose();
  const Eigen::Vector3d t_rel = t_src.t - r_rel * t_dst.t;
  Eigen::Matrix3d h = k_src.matrix() *
                      (r_rel + t_rel * n_d.transpose() / h_d) *
                      k_dst.matrix().inverse();
  if (std::abs(h(2, 2)) > 1e-15) h /= h(2, 2);
  return h;
}

// ---------------------------------------------------------------------------
// Cumulative cubic B-spline on poses, uniform knots.
// Rotation interpolated with the cumulative SO(3) formula, translation with
// the same cumulative basis acting on R^3 (equivalent to the standard basis).
// ---------------------------------------------------------------------------
struct CumulativeBSpline {
  std::vector<Pose> control_poses;  // >= 4
  double t0 = 0.0;                  // time of control pose 0, seconds
  double knot_spacing = 0.0;        // > 0, seconds

  int size() const { return static_cast<int>(control_poses.size()); }
  double t_min() const { return t0 + knot_spacing; }
  // Exclusive end of the valid sample domain.
  double t_max() const { return t0 + (size() - 2) * knot_spacing; }
};

namespace detail {

// Cumulative uniform cubic basis, j = 1..3 (j = 0 is identically 1).
inline void cumulative_basis(double u, double b[3]) {
  const double u2 = u * u, u3 = u2 * u;
  b[0] = (5.0 + 3.0 * u - 3.0 * u2 + u3) / 6.0;
  b[1] = (1.0 + 3.0 * u + 3.0 * u2 - 2.0 * u3) / 6.0;
  b[2] = u3 / 6.0;
}

inline void cumulative_basis_deriv(double u, double db[3]) {
  const double u2 = u * u;
  db[0] = (3.0 - 6.0 * u + 3.0 * u2) / 6.0;
  db[1] = (3.0 + 6.0 * u - 6.0 * u2) / 6.0;
  db[2] = 3.0 * u2 / 6.0;
}

// Standard uniform cubic basis over the 4 support controls.
inline void standard_basis(double u, double b[4]) {
  const double u2 = u * u, u3 = u2 * u;
  b[0] = (1.0 - 3.0 * u + 3.0 * u2 - u3) / 6.0;
  b[1] = (4.0 - 6.0 * u2 + 3.0 * u3) / 6.0;
  b[2] = (1.0 + 3.0 * u + 3.0 * u2 - 3.0 * u3) / 6.0;
  b[3] = u3 / 6.0;
}

struct SplineLocation {
  int segment;  // index i of the segment's left knot
  double u;     // local parameter in [0, 1)
};

inline SplineLocation locate(const CumulativeBSpline& s, double t) {
  if (s.size() < 4) throw DomainError("spline needs at least 4 control poses");
  if (s.knot_spacing <= 0.0) throw DomainError("knot spacing must be positive");
  if (!(t >= s.t_min() && t < s.t_max())) {
    std::ostringstream os;
    os << "sample time " << t << " outside valid spline domain [" << s.t_min()
       << ", " << s.t_max() << ")";
    throw DomainError(os.str());
  }
  int i = static_cast<int>(std::floor((t - s.t0) / s.knot_spacing));
  i = std::min(std::max(i, 1), s.size() - 3);
  const double u = (t - s.t0 - i * s.knot_spacing) / s.knot_spacing;
  return {i, std::min(std::max(u, 0.0), 1.0)};
}

}  // namespace detail

inline Pose spline_sample(const CumulativeBSpline& s, double t) {
  const auto [i, u] = detail::locate(s, t);
  double b[3];
  detail::cumulative_basis(u, b);

  Eigen::Quaterniond q = s.control_poses[i - 1].q;
  Eigen::Vector3d p = s.control_poses[i - 1].t;
  for (int j = 0; j < 3; ++j) {
    const Pose& a = s.control_poses[i - 1 + j];
    const Pose& bpose = s.control_poses[i + j];
    const Eigen::Vector3d omega = so3_log(a.q.conjugate() * bpose.q);
    q = q * so3_exp(b[j] * omega);
    p += b[j] * (bpose.t - a.t);
  }
  Pose out;
  out.q = q.normalized();
  out.t = p;
  return out;
}

// Support of a sample time: index of the first of the 4 contributing control
// poses plus their standard-basis weights (the translation interpolation is
// exactly this weighted combination).
struct SplineSupport {
  int first_control;
  double weights[4];
};

inline SplineSupport spline_support(const CumulativeBSpline& s, double t) {
  const auto [i, u] = detail::locate(s, t);
  SplineSupport sup;
  sup.first_control = i - 1;
  detail::standard_basis(u, sup.weights);
  return sup;
}

// Analytic time derivative of the interpolated translation, m/s.
inline Eigen::Vector3d spline_translation_velocity(const CumulativeBSpline& s,
                                                   double t) {
  const auto [i, u] = detail::locate(s, t);
  double db[3];
  detail::cumulative_basis_deriv(u, db);
  Eigen::Vector3d v = Eigen::Vector3d::Zero();
  for (int j = 0; j < 3; ++j)
    v += db[j] * (s.control_poses[i + j].t - s.control_poses[i - 1 + j].t);
  return v / s.knot_spacing;
}

}  // namespace evres
