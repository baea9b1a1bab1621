#pragma once

// Event-based Photometric Flow: constant flow v over a patch window such
// that warped reference-image differences at consecutive same-pixel events
// equal the contrast threshold.

#include <Eigen/Dense>
#include <cmath>

#include "evres/errors.hpp"
#include "evres/frame.hpp"
#include "evres/tasks/common.hpp"

namespace evres {

struct EpfProblem {
  std::vector<PairedEvent> pairs;
  Frame l_ref;       // log-intensity reference at the event resolution
  int unpaired = 0;  // events dropped for lack of a predecessor
};

// Builds the flow problem from an event window. Event times are measured
// relative to the reference image time.
inline EpfProblem epf_build_problem(const EventStream& window, Frame l_ref,
                                    double t_ref_s) {
  if (l_ref.kind != FrameKind::log_intensity)
    throw ConfigError("EPF reference must be a log-intensity frame");
  if (l_ref.width != window.width || l_ref.height != window.height)
    throw ConfigError("EPF reference resolution must match the events");
  EpfProblem prob;
  PairedEvents pe = pair_events(window, t_ref_s);
  prob.pairs = std::move(pe.pairs);
  prob.unpaired = pe.unpaired;
  prob.l_ref = std::move(l_ref);
  return prob;
}

// residual_k = p_k * (L(x_k - v t_k) - L(x_k - v t_prev_k)) - c
inline Eigen::VectorXd epf_residuals(const Eigen::Vector2d& v,
                                     const EpfProblem& prob, double c,
                                     int* clamped_lookups = nullptr) {
  if (prob.pairs.empty())
    throw InsufficientDataError("no paired events in the flow window");
  Eigen::VectorXd r(prob.pairs.size());
  int clamped = 0;
  for (size_t i = 0; i < prob.pairs.size(); ++i) {
    const PairedEvent& e = prob.pairs[i];
    bool flag = false;
    const double l1 =
        bilinear_sample(prob.l_ref, e.x - v.x() * e.t, e.y - v.y() * e.t, &flag);
    const double l0 = bilinear_sample(prob.l_ref, e.x - v.x() * e.t_prev,
                                      e.y - v.y() * e.t_prev, &flag);
    if (flag) ++clamped;
    r[i] = e.p * (l1 - l0) - c;
  }
  if (clamped_lookups) *clamped_lookups = clamped;
  return r;
}

// Closed-form optimal contrast threshold: mean of p_k * dL_k (polarities are
// unit, so p^T p is the pair count).
inline double epf_fit_c(const Eigen::Vector2d& v, const EpfProblem& prob) {
  if (prob.pairs.empty())
    throw InsufficientDataError("no paired events to fit the threshold");
  double s = 0.0;
  for (const PairedEvent& e : prob.pairs) {
    const double l1 =
        bilinear_sample(prob.l_ref, e.x - v.x() * e.t, e.y - v.y() * e.t);
    const double l0 = bilinear_sample(prob.l_ref, e.x - v.x() * e.t_prev,
                                      e.y - v.y() * e.t_prev);
    s += e.p * (l1 - l0);
  }
  return s / static_cast<double>(prob.pairs.size());
}

namespace detail {

// Gradient of ||r(v, c)||^2 with respect to v, using the derivative of the
// bilinear interpolant.
inline Eigen::Vector2d epf_gradient(const Eigen::Vector2d& v,
                                    const EpfProblem& prob, double c) {
  Eigen::Vector2d g = Eigen::Vector2d::Zero();
  for (const PairedEvent& e : prob.pairs) {
    const double x1 = e.x - v.x() * e.t, y1 = e.y - v.y() * e.t;
    const double x0 = e.x - v.x() * e.t_prev, y0 = e.y - v.y() * e.t_prev;
    const double l1 = bilinear_sample(prob.l_ref, x1, y1);
    const double l0 = bilinear_sample(prob.l_ref, x0, y0);
    const double r = e.p * (l1 - l0) - c;
    const auto [g1x, g1y] = bilinear_grad(prob.l_ref, x1, y1);
    const auto [g0x, g0y] = bilinear_grad(prob.l_ref, x0, y0);
    const double dx = -e.t * g1x + e.t_prev * g0x;
    const double dy = -e.t * g1y + e.t_prev * g0y;
    g.x() += 2.0 * r * e.p * dx;
    g.y() += 2.0 * r * e.p * dy;
  }
  return g;
}

}  // namespace detail

struct FlowEstimate {
  Eigen::Vector2d v = Eigen::Vector2d::Zero();  // pixels per second
  double c_hat = 0.0;
  double residual_norm = 0.0;  // final objective value ||r||^2
  int iterations = 0;
  bool converged = false;
  int clamped_lookups = 0;
  int unpaired = 0;
};

struct EpfOptions {
  int max_iterations = 500;
  double grad_tol = 1e-6;
  double obj_tol = 1e-12;
  double armijo_c1 = 1e-4;
  double backtrack = 0.5;
};

// Alternating scheme: closed-form refit of c, then a backtracking
// steepest-descent step on v. The joint objective never increases.
inline FlowEstimate epf_estimate(const EpfProblem& prob,
                                 const Eigen::Vector2d& v_init,
                                 const EpfOptions& opts = {}) {
  if (prob.pairs.empty())
    throw InsufficientDataError("no paired events in the flow window");
  FlowEstimate est;
  est.unpaired = prob.unpaired;
  Eigen::Vector2d v = v_init;
  double c = epf_fit_c(v, prob);
  double obj = epf_residuals(v, prob, c).squaredNorm();
  if (!std::isfinite(obj)) throw NumericalError("flow objective diverged");

  double alpha_init = 0.0;
  for (int it = 0; it < opts.max_iterations; ++it) {
    est.iterations = it + 1;
    const Eigen::Vector2d g = detail::epf_gradient(v, prob, c);
    const double gnorm = g.norm();
    if (gnorm < opts.grad_tol) {
      est.converged = true;
      break;
    }
    // First trial step moves half a pixel over the window; afterwards warm
    // start from twice the last accepted step.
    if (alpha_init == 0.0) alpha_init = 0.5 / gnorm;
    double alpha = alpha_init;
    double obj_new = obj;
    Eigen::Vector2d v_new = v;
    bool accepted = false;
    while (alpha * gnorm > 1e-14) {
      v_new = v - alpha * g;
      obj_new = epf_residuals(v_new, prob, c).squaredNorm();
      if (!std::isfinite(obj_new)) throw NumericalError("flow objective diverged");
      if (obj_new <= obj - opts.armijo_c1 * alpha * gnorm * gnorm) {
        accepted = true;
        break;
      }
      alpha *= opts.backtrack;
    }
    if (!accepted) {
      est.converged = true;  // no descent possible at working precision
      break;
    }
    alpha_init = 2.0 * alpha;
    v = v_new;
    c = epf_fit_c(v, prob);
    const double obj_refit = epf_residuals(v, prob, c).squaredNorm();
    const double decrease = obj - obj_refit;
    obj = obj_refit;
    if (decrease < opts.obj_tol) {
      est.converged = true;
      break;
    }
  }
  est.v = v;
  est.c_hat = c;
  est.residual_norm = obj;
  epf_residuals(v, prob, c, &est.clamped_lookups);
  return est;
}

}  // namespace evres
