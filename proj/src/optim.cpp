#include "fomc/optim.hpp"

#include <cmath>
#include <limits>

#include <fmt/format.h>

namespace fomc {

namespace {

double safe_eval(const Objective& f, const Eigen::VectorXd& x, int& evals) {
  ++evals;
  double v = f(x);
  return std::isfinite(v) ? v : std::numeric_limits<double>::infinity();
}

}  // namespace

Eigen::VectorXd central_gradient(const Objective& f, const Eigen::VectorXd& x, double fd_step, int* evals) {
  Eigen::VectorXd g(x.size());
  Eigen::VectorXd probe = x;
  int count = 0;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double h = fd_step * std::max(1.0, std::abs(x(i)));
    probe(i) = x(i) + h;
    const double up = safe_eval(f, probe, count);
    probe(i) = x(i) - h;
    const double down = safe_eval(f, probe, count);
    probe(i) = x(i);
    g(i) = (up - down) / (2.0 * h);
  }
  if (evals) *evals += count;
  return g;
}

BfgsResult minimize_bfgs(const Objective& f, Eigen::VectorXd x0, const BfgsOptions& opts) {
  BfgsResult res;
  const auto n = x0.size();
  res.x = std::move(x0);
  res.f = safe_eval(f, res.x, res.evaluations);
  if (!std::isfinite(res.f)) {
    res.message = "objective not finite at the starting point";
    res.grad = Eigen::VectorXd::Zero(n);
    return res;
  }
  res.grad = central_gradient(f, res.x, opts.fd_step, &res.evaluations);

  Eigen::MatrixXd Hinv = Eigen::MatrixXd::Identity(n, n);
  bool scaled = false;
  int stalls = 0;

  for (res.iterations = 0; res.iterations < opts.max_iter; ++res.iterations) {
    if (res.grad.lpNorm<Eigen::Infinity>() < opts.grad_tol) {
      res.converged = true;
      res.message = "gradient tolerance met";
      return res;
    }
    if (res.evaluations >= opts.max_evals) {
      res.message = "evaluation budget exhausted";
      return res;
    }

    Eigen::VectorXd dir = -Hinv * res.grad;
    double slope = res.grad.dot(dir);
    if (!(slope < 0.0)) {
      // Lost descent: restart from steepest descent.
      Hinv.setIdentity();
      scaled = false;
      dir = -res.grad;
      slope = res.grad.dot(dir);
    }

    double step = 1.0;
    Eigen::VectorXd x_new;
    double f_new = std::numeric_limits<double>::infinity();
    bool accepted = false;
    for (int bt = 0; bt < 60; ++bt) {
      x_new = res.x + step * dir;
      f_new = safe_eval(f, x_new, res.evaluations);
      if (f_new <= res.f + 1e-4 * step * slope) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) {
      if (scaled || Hinv != Eigen::MatrixXd::Identity(n, n)) {
        Hinv.setIdentity();
        scaled = false;
        continue;
      }
      res.message = "line search failed";
      return res;
    }

    Eigen::VectorXd g_new = central_gradient(f, x_new, opts.fd_step, &res.evaluations);
    Eigen::VectorXd s = x_new - res.x;
    Eigen::VectorXd y = g_new - res.grad;
    const double sy = s.dot(y);
    const double change = std::abs(res.f - f_new) / std::max(1.0, std::abs(res.f));

    res.x = std::move(x_new);
    res.f = f_new;
    res.grad = std::move(g_new);

    if (sy > 1e-12 * s.norm() * y.norm()) {
      if (!scaled) {
        Hinv = Eigen::MatrixXd::Identity(n, n) * (sy / y.squaredNorm());
        scaled = true;
      }
      const double rho = 1.0 / sy;
      Eigen::MatrixXd I = Eigen::MatrixXd::Identity(n, n);
      Hinv = (I - rho * s * y.transpose()) * Hinv * (I - rho * y * s.transpose()) + rho * s * s.transpose();
    }

    stalls = change < opts.f_rel_tol ? stalls + 1 : 0;
    if (stalls >= 3) {
      res.converged = true;
      res.message = "relative function change below tolerance";
      ++res.iterations;
      return res;
    }
  }
  res.message = fmt::format("iteration limit {} reached", opts.max_iter);
  return res;
}

}  // namespace fomc
