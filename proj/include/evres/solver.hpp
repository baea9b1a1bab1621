#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <functional>

#include "evres/errors.hpp"

namespace evres {

struct LmOptions {
  double init_lambda = 1e-3;
  double lambda_up = 10.0;     // on rejected step
  double lambda_down = 0.1;    // on accepted step
  double max_lambda = 1e12;
  int max_iterations = 100;    // outer iterations
  double step_tol = 1e-8;      // accepted step norm
  double rel_obj_tol = 1e-10;  // relative objective decrease
  // Called after every accepted step (new parameter vector); lets the caller
  // refit eliminated variables between outer iterations.
  std::function<void(const Eigen::VectorXd&)> on_accept;
};

struct LmResult {
  Eigen::VectorXd x;
  double objective = 0.0;  // ||r||^2 at the solution
  int iterations = 0;
  bool converged = false;
};

// Dense Levenberg-Marquardt with identity damping on the normal equations.
// residual_fn(x) -> r, jacobian_fn(x) -> J with J(i, j) = d r_i / d x_j.
template <typename ResidualFn, typename JacobianFn>
LmResult levenberg_marquardt(const Eigen::VectorXd& x0, const ResidualFn& residual_fn,
                             const JacobianFn& jacobian_fn,
                             const LmOptions& opts = {}) {
  LmResult res;
  res.x = x0;
  Eigen::VectorXd r = residual_fn(res.x);
  double obj = r.squaredNorm();
  if (!std::isfinite(obj)) throw NumericalError("objective not finite at start");
  double lambda = opts.init_lambda;

  const int dim = static_cast<int>(x0.size());
  for (int it = 0; it < opts.max_iterations; ++it) {
    res.iterations = it + 1;
    const Eigen::MatrixXd j = jacobian_fn(res.x);
    const Eigen::MatrixXd jtj = j.transpose() * j;
    const Eigen::VectorXd jtr = j.transpose() * r;

    bool accepted = false;
    while (lambda <= opts.max_lambda) {
      Eigen::MatrixXd damped = jtj;
      damped.diagonal().array() += lambda;
      const Eigen::VectorXd step = damped.ldlt().solve(-jtr);
      const Eigen::VectorXd x_new = res.x + step;
      const Eigen::VectorXd r_new = residual_fn(x_new);
      const double obj_new = r_new.squaredNorm();
      if (std::isfinite(obj_new) && obj_new < obj) {
        const double decrease = (obj - obj_new) / std::max(obj, 1e-300);
        res.x = x_new;
        r = r_new;
        obj = obj_new;
        lambda = std::max(lambda * opts.lambda_down, 1e-12);
        if (opts.on_accept) {
          opts.on_accept(res.x);
          r = residual_fn(res.x);
          obj = r.squaredNorm();
        }
        accepted = true;
        if (step.norm() < opts.step_tol || decrease < opts.rel_obj_tol) {
          res.converged = true;
        }
        break;
      }
      lambda *= opts.lambda_up;
    }
    if (!accepted) {
      // Damping exhausted: we are at a (numerical) minimum.
      res.converged = true;
      break;
    }
    if (res.converged) break;
    (void)dim;
  }
  res.objective = obj;
  return res;
}

}  // namespace evres
