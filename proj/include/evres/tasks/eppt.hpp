#pragma once

// Event-based Photometric Pose Tracker: fit a cumulative B-spline trajectory
// so that events, back-projected onto the scene plane and re-projected into a
// reference view, measure brightness differences equal to the contrast
// threshold.

#include <Eigen/Dense>
#include <cmath>
#include <optional>

#include "evres/errors.hpp"
#include "evres/frame.hpp"
#include "evres/geometry.hpp"
#include "evres/metrics.hpp"
#include "evres/solver.hpp"
#include "evres/tasks/common.hpp"

namespace evres {

struct EpptProblem {
  std::vector<PairedEvent> pairs;  // absolute times, seconds
  Frame l_ref;                     // log-intensity reference view
  CameraIntrinsics k;
  Plane plane;
  Pose t_ref;  // pose of the reference view (held fixed)
  int unpaired = 0;
};

inline EpptProblem eppt_build_problem(const EventStream& window, Frame l_ref,
                                      const CameraIntrinsics& k, const Plane& plane,
                                      const Pose& t_ref) {
  if (l_ref.kind != FrameKind::log_intensity)
    throw ConfigError("EPPT reference must be a log-intensity frame");
  if (l_ref.width != window.width || l_ref.height != window.height)
    throw ConfigError("EPPT reference resolution must match the events");
  EpptProblem prob;
  PairedEvents pe = pair_events(window, 0.0);
  prob.pairs = std::move(pe.pairs);
  prob.unpaired = pe.unpaired;
  prob.l_ref = std::move(l_ref);
  prob.k = k;
  prob.plane = plane;
  prob.t_ref = t_ref;
  return prob;
}

// 6 log-coordinates per control pose: [translation, rotation log].
inline Eigen::VectorXd spline_to_params(const CumulativeBSpline& s) {
  Eigen::VectorXd x(6 * s.size());
  for (int i = 0; i < s.size(); ++i) {
    x.segment<3>(6 * i) = s.control_poses[i].t;
    x.segment<3>(6 * i + 3) = so3_log(s.control_poses[i].q);
  }
  return x;
}

inline CumulativeBSpline spline_from_params(const CumulativeBSpline& lattice,
                                            const Eigen::VectorXd& x) {
  CumulativeBSpline s = lattice;
  for (int i = 0; i < s.size(); ++i) {
    s.control_poses[i].t = x.segment<3>(6 * i);
    s.control_poses[i].q = so3_exp(x.segment<3>(6 * i + 3));
  }
  return s;
}

namespace detail {

struct PointEval {
  bool valid = false;
  double l = 0.0;                     // reference-view log intensity
  Eigen::Vector2d gl;                 // bilinear gradient at the lookup
  Eigen::Matrix<double, 2, 3> dx_dp;  // d reference pixel / d spline translation
  SplineSupport support;
};

// Back-projects the event pixel onto the plane at the spline pose for `time`
// and re-projects into the reference view; also assembles the chain-rule
// pieces for the translation Jacobian.
inline PointEval eppt_point(const EpptProblem& prob, const CumulativeBSpline& s,
                            double px, double py, double time,
                            bool with_jacobian) {
  PointEval out;
  Pose pose;
  try {
    pose = spline_sample(s, time);
  } catch (const DomainError&) {
    return out;
  }
  const Eigen::Matrix3d rt = pose.rotation_matrix().transpose();
  const Eigen::Vector3d d_cam((px - prob.k.cx) / prob.k.fx,
                              (py - prob.k.cy) / prob.k.fy, 1.0);
  const Eigen::Vector3d dir = rt * d_cam;
  const Eigen::Vector3d origin = -(rt * pose.t);
  const double ndir = prob.plane.normal.dot(dir);
  if (std::abs(ndir) <= 1e-12 * dir.norm()) return out;
  const double depth =
      (prob.plane.offset - prob.plane.normal.dot(origin)) / ndir;
  if (depth <= 0.0) return out;
  const Eigen::Vector3d x_world = origin + depth * dir;

  const Eigen::Vector3d x_ref = prob.t_ref.apply(x_world);
  if (x_ref.z() <= 1e-9) return out;
  const double inv_z = 1.0 / x_ref.z();
  const Eigen::Vector2d pix(prob.k.fx * x_ref.x() * inv_z + prob.k.cx,
                            prob.k.fy * x_ref.y() * inv_z + prob.k.cy);
  out.l = bilinear_sample(prob.l_ref, pix.x(), pix.y());
  out.valid = true;
  if (!with_jacobian) return out;

  const auto [glx, gly] = bilinear_grad(prob.l_ref, pix.x(), pix.y());
  out.gl = Eigen::Vector2d(glx, gly);
  Eigen::Matrix<double, 2, 3> jproj;
  jproj << prob.k.fx * inv_z, 0.0, -prob.k.fx * x_ref.x() * inv_z * inv_z,
      0.0, prob.k.fy * inv_z, -prob.k.fy * x_ref.y() * inv_z * inv_z;
  // X = origin + depth * dir with origin = -R^T p:
  // dX/dp = (I - dir n^T / (n.dir)) * (-R^T)
  const Eigen::Matrix3d dx_do =
      Eigen::Matrix3d::Identity() -
      dir * prob.plane.normal.transpose() / ndir;
  out.dx_dp = jproj * prob.t_ref.rotation_matrix() * (dx_do * (-rt));
  out.support = spline_support(s, time);
  return out;
}

}  // namespace detail

// Stacked residuals p_k * (L(x'_1) - L(x'_0)) - c. Terms whose geometry
// fails behave like a zero brightness difference (residual -c) and count as
// dropped.
inline Eigen::VectorXd eppt_residuals(const CumulativeBSpline& s,
                                      const EpptProblem& prob, double c,
                                      int* dropped = nullptr) {
  if (prob.pairs.empty())
    throw InsufficientDataError("no paired events constrain the trajectory");
  Eigen::VectorXd r(prob.pairs.size());
  int drops = 0;
  for (size_t i = 0; i < prob.pairs.size(); ++i) {
    const PairedEvent& e = prob.pairs[i];
    const auto cur = detail::eppt_point(prob, s, e.x, e.y, e.t, false);
    const auto prev = detail::eppt_point(prob, s, e.x, e.y, e.t_prev, false);
    if (cur.valid && prev.valid) {
      r[i] = e.p * (cur.l - prev.l) - c;
    } else {
      r[i] = -c;
      ++drops;
    }
  }
  if (dropped) *dropped = drops;
  return r;
}

// Closed-form threshold refit (Eq. of the flow method applied to the
// trajectory residuals): mean of p_k * dL_k.
inline double eppt_fit_c(const CumulativeBSpline& s, const EpptProblem& prob) {
  if (prob.pairs.empty())
    throw InsufficientDataError("no paired events constrain the trajectory");
  double sum = 0.0;
  for (const PairedEvent& e : prob.pairs) {
    const auto cur = detail::eppt_point(prob, s, e.x, e.y, e.t, false);
    const auto prev = detail::eppt_point(prob, s, e.x, e.y, e.t_prev, false);
    if (cur.valid && prev.valid) sum += e.p * (cur.l - prev.l);
  }
  return sum / static_cast<double>(prob.pairs.size());
}

// Jacobian of the stacked residuals with respect to the 6n spline parameters.
// Translation columns are analytic; rotation columns use central differences
// restricted to each control pose's support.
inline Eigen::MatrixXd eppt_jacobian(const CumulativeBSpline& lattice,
                                     const Eigen::VectorXd& params,
                                     const EpptProblem& prob,
                                     double fd_step_rot = 1e-6) {
  const CumulativeBSpline s = spline_from_params(lattice, params);
  const int n_pairs = static_cast<int>(prob.pairs.size());
  const int n_controls = s.size();
  Eigen::MatrixXd j = Eigen::MatrixXd::Zero(n_pairs, 6 * n_controls);

  // Support range of each pair (which control poses influence it), fixed by
  // the knot lattice.
  std::vector<std::pair<int, int>> pair_support(n_pairs);
  for (int i = 0; i < n_pairs; ++i) {
    const PairedEvent& e = prob.pairs[i];
    int lo = n_controls, hi = -1;
    for (double time : {e.t, e.t_prev}) {
      try {
        const SplineSupport sup = spline_support(s, time);
        lo = std::min(lo, sup.first_control);
        hi = std::max(hi, sup.first_control + 3);
      } catch (const DomainError&) {
      }
    }
    pair_support[i] = {lo, hi};

    // analytic translation block
    const auto cur = detail::eppt_point(prob, s, e.x, e.y, e.t, true);
    const auto prev = detail::eppt_point(prob, s, e.x, e.y, e.t_prev, true);
    if (!cur.valid || !prev.valid) continue;
    const Eigen::RowVector3d dcur = cur.gl.transpose() * cur.dx_dp;
    const Eigen::RowVector3d dprev = prev.gl.transpose() * prev.dx_dp;
    for (int l = 0; l < 4; ++l) {
      const int ic = cur.support.first_control + l;
      j.block<1, 3>(i, 6 * ic) += e.p * cur.support.weights[l] * dcur;
      const int ip = prev.support.first_control + l;
      j.block<1, 3>(i, 6 * ip) -= e.p * prev.support.weights[l] * dprev;
    }
  }

  // rotation columns by central differences, one perturbed spline per column
  Eigen::VectorXd xp = params;
  for (int cidx = 0; cidx < n_controls; ++cidx) {
    for (int a = 0; a < 3; ++a) {
      const int col = 6 * cidx + 3 + a;
      xp[col] = params[col] + fd_step_rot;
      const CumulativeBSpline sp = spline_from_params(lattice, xp);
      xp[col] = params[col] - fd_step_rot;
      const CumulativeBSpline sm = spline_from_params(lattice, xp);
      xp[col] = params[col];
      for (int i = 0; i < n_pairs; ++i) {
        if (cidx < pair_support[i].first || cidx > pair_support[i].second) continue;
        const PairedEvent& e = prob.pairs[i];
        auto eval = [&](const CumulativeBSpline& ss) {
          const auto cur = detail::eppt_point(prob, ss, e.x, e.y, e.t, false);
          const auto prev = detail::eppt_point(prob, ss, e.x, e.y, e.t_prev, false);
          return (cur.valid && prev.valid) ? e.p * (cur.l - prev.l) : 0.0;
        };
        j(i, col) = (eval(sp) - eval(sm)) / (2.0 * fd_step_rot);
      }
    }
  }
  return j;
}

struct TrackResult {
  CumulativeBSpline spline;
  double position_error_mm = 0.0;  // vs ground truth when provided
  double residual_norm = 0.0;      // final objective ||r||^2
  double c_hat = 0.0;
  int iterations = 0;
  bool converged = false;
  int dropped = 0;
  int unpaired = 0;
};

struct EpptOptions {
  LmOptions lm;
  double fd_step_rot = 1e-6;
  double error_sample_rate_hz = 1000.0;
};

// Levenberg-Marquardt over the control-pose parameters with the threshold
// re-fit in closed form after every accepted step.
inline TrackResult eppt_track(const EpptProblem& prob,
                              const CumulativeBSpline& spline_init,
                              const CumulativeBSpline* ground_truth = nullptr,
                              const EpptOptions& opts = {}) {
  if (prob.pairs.empty())
    throw InsufficientDataError("no paired events constrain the trajectory");
  const CumulativeBSpline lattice = spline_init;
  double c = eppt_fit_c(lattice, prob);

  LmOptions lm = opts.lm;
  lm.on_accept = [&](const Eigen::VectorXd& x) {
    c = eppt_fit_c(spline_from_params(lattice, x), prob);
  };
  const auto residual_fn = [&](const Eigen::VectorXd& x) {
    return eppt_residuals(spline_from_params(lattice, x), prob, c);
  };
  const auto jacobian_fn = [&](const Eigen::VectorXd& x) {
    return eppt_jacobian(lattice, x, prob, opts.fd_step_rot);
  };

  const LmResult lmres =
      levenberg_marquardt(spline_to_params(lattice), residual_fn, jacobian_fn, lm);

  TrackResult out;
  out.spline = spline_from_params(lattice, lmres.x);
  out.residual_norm = lmres.objective;
  out.c_hat = c;
  out.iterations = lmres.iterations;
  out.converged = lmres.converged;
  out.unpaired = prob.unpaired;
  eppt_residuals(out.spline, prob, c, &out.dropped);
  if (ground_truth)
    out.position_error_mm =
        position_error_mm(out.spline, *ground_truth, opts.error_sample_rate_hz);
  return out;
}

}  // namespace evres
