#pragma once

#include <functional>
#include <string>

#include <Eigen/Dense>

namespace fomc {

struct BfgsOptions {
  int max_iter = 500;
  int max_evals = 200000;
  double grad_tol = 1e-4;    // on max |gradient|
  double f_rel_tol = 1e-14;  // stop after repeated steps with negligible relative change
  double fd_step = 1e-5;     // relative central-difference step
};

struct BfgsResult {
  Eigen::VectorXd x;
  double f = 0.0;
  Eigen::VectorXd grad;
  int iterations = 0;
  int evaluations = 0;
  bool converged = false;
  std::string message;
};

using Objective = std::function<double(const Eigen::VectorXd&)>;

// Central differences with step h_i = fd_step * max(1, |x_i|).
Eigen::VectorXd central_gradient(const Objective& f, const Eigen::VectorXd& x, double fd_step, int* evals = nullptr);

// Quasi-Newton minimisation with numerical gradients and a backtracking
// Armijo line search. A non-finite objective counts as a rejected step.
// Never throws on non-convergence: the best point is returned with
// converged = false and a message.
BfgsResult minimize_bfgs(const Objective& f, Eigen::VectorXd x0, const BfgsOptions& opts = {});

}  // namespace fomc
