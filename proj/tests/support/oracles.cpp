#include "oracles.hpp"

#include <cmath>
#include <numbers>

namespace oracle {

Eigen::MatrixXd tfidf(const fomc::text::CountArray& counts) {
  const auto n = counts.rows();
  const auto m = counts.cols();
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(n, m);
  for (Eigen::Index j = 0; j < m; ++j) {
    int df = 0;
    for (Eigen::Index i = 0; i < n; ++i) df += counts(i, j) > 0 ? 1 : 0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const long c = counts(i, j);
      if (c == 0) continue;
      out(i, j) = (1.0 + std::log(static_cast<double>(c))) *
                  (std::log(static_cast<double>(n) / static_cast<double>(df)) + 1.0);
    }
  }
  return out;
}

double nmf_objective(const Eigen::MatrixXd& A, const Eigen::MatrixXd& W, const Eigen::MatrixXd& H) {
  double sum = 0.0;
  for (Eigen::Index i = 0; i < A.rows(); ++i) {
    for (Eigen::Index j = 0; j < A.cols(); ++j) {
      double wh = 0.0;
      for (Eigen::Index k = 0; k < W.cols(); ++k) wh += W(i, k) * H(k, j);
      sum += (A(i, j) - wh) * (A(i, j) - wh);
    }
  }
  return 0.5 * sum;
}

std::vector<std::set<std::size_t>> doc_sets(const fomc::text::CountArray& counts) {
  std::vector<std::set<std::size_t>> out(static_cast<std::size_t>(counts.rows()));
  for (Eigen::Index i = 0; i < counts.rows(); ++i) {
    for (Eigen::Index j = 0; j < counts.cols(); ++j) {
      if (counts(i, j) > 0) out[static_cast<std::size_t>(i)].insert(static_cast<std::size_t>(j));
    }
  }
  return out;
}

double doc_count(const std::vector<std::set<std::size_t>>& docs, std::initializer_list<std::size_t> terms) {
  double n = 0.0;
  for (const auto& d : docs) {
    bool all = true;
    for (auto t : terms) all = all && d.contains(t);
    n += all ? 1.0 : 0.0;
  }
  return n;
}

double lcp_raw(const std::vector<std::set<std::size_t>>& docs, const std::vector<std::size_t>& top) {
  double sum = 0.0;
  for (std::size_t i = 1; i < top.size(); ++i) {
    for (std::size_t j = 0; j < i; ++j) {
      sum += std::log((doc_count(docs, {top[i], top[j]}) + 1.0) / doc_count(docs, {top[j]}));
    }
  }
  return sum;
}

double lcp_star(const std::vector<std::set<std::size_t>>& docs, const std::vector<std::size_t>& top, double eps) {
  const double D = static_cast<double>(docs.size());
  const double n = static_cast<double>(top.size());
  double sum = 0.0;
  for (std::size_t i = 1; i < top.size(); ++i) {
    for (std::size_t j = 0; j < i; ++j) {
      const double joint = doc_count(docs, {top[i], top[j]}) / D;
      const double marginal = doc_count(docs, {top[j]}) / D;
      sum += std::log((joint + eps) / marginal);
    }
  }
  return 2.0 / (n * (n - 1.0)) * sum;
}

JointGaussian joint_gaussian(const fomc::curve::StateSpaceModel& model, const Eigen::MatrixXd& y) {
  const Eigen::Index T = y.rows();
  const Eigen::Index N = y.cols();
  const Eigen::Index S = 3 * T;

  // Marginal moments of each x_t, then cross covariances by propagation.
  std::vector<Eigen::Vector3d> mean(static_cast<std::size_t>(T));
  std::vector<Eigen::Matrix3d> var(static_cast<std::size_t>(T));
  mean[0] = model.a0 - model.mu;
  var[0] = model.P0;
  const Eigen::Matrix3d RQR = model.R * model.Q * model.R.transpose();
  for (Eigen::Index t = 1; t < T; ++t) {
    mean[t] = model.T * mean[t - 1];
    var[t] = model.T * var[t - 1] * model.T.transpose() + RQR;
  }
  Eigen::VectorXd mx(S);
  Eigen::MatrixXd Sxx(S, S);
  for (Eigen::Index s = 0; s < T; ++s) {
    mx.segment<3>(3 * s) = mean[s];
    Eigen::Matrix3d cross = var[s];  // Cov(x_t, x_s) for t >= s
    for (Eigen::Index t = s; t < T; ++t) {
      Sxx.block<3, 3>(3 * t, 3 * s) = cross;
      Sxx.block<3, 3>(3 * s, 3 * t) = cross.transpose();
      cross = model.T * cross;
    }
  }

  // Observed cells only; NaN marks a missing yield.
  std::vector<Eigen::Index> obs_t, obs_j;
  for (Eigen::Index t = 0; t < T; ++t) {
    for (Eigen::Index j = 0; j < N; ++j) {
      if (!std::isnan(y(t, j))) {
        obs_t.push_back(t);
        obs_j.push_back(j);
      }
    }
  }
  const auto n_obs = static_cast<Eigen::Index>(obs_t.size());
  Eigen::MatrixXd Zbig = Eigen::MatrixXd::Zero(n_obs, S);
  Eigen::VectorXd my(n_obs);
  Eigen::VectorXd yv(n_obs);
  Eigen::MatrixXd Hbig = Eigen::MatrixXd::Zero(n_obs, n_obs);
  for (Eigen::Index i = 0; i < n_obs; ++i) {
    const auto t = obs_t[static_cast<std::size_t>(i)];
    const auto j = obs_j[static_cast<std::size_t>(i)];
    Zbig.block(i, 3 * t, 1, 3) = model.Z.row(j);
    my(i) = model.Z.row(j).dot(mean[t] + model.mu);
    yv(i) = y(t, j);
    Hbig(i, i) = model.H(j);
  }
  const Eigen::MatrixXd Syy = Zbig * Sxx * Zbig.transpose() + Hbig;
  const Eigen::MatrixXd Sxy = Sxx * Zbig.transpose();
  const Eigen::FullPivLU<Eigen::MatrixXd> lu(Syy);
  const Eigen::VectorXd dev = yv - my;
  const Eigen::VectorXd w = lu.solve(dev);

  JointGaussian out;
  const double n = static_cast<double>(n_obs);
  out.loglik = -0.5 * (n * std::log(2.0 * std::numbers::pi) + std::log(lu.determinant()) + dev.dot(w));
  const Eigen::VectorXd post_mean = mx + Sxy * w;
  const Eigen::MatrixXd post_var = Sxx - Sxy * lu.solve(Sxy.transpose());
  for (Eigen::Index t = 0; t < T; ++t) {
    out.smoothed.push_back(post_mean.segment<3>(3 * t) + model.mu);
    out.smoothed_var.push_back(post_var.block<3, 3>(3 * t, 3 * t));
  }
  return out;
}

NormalEquations normal_equations(const Eigen::MatrixXd& X, const Eigen::VectorXd& y) {
  const Eigen::MatrixXd XtX_inv = (X.transpose() * X).inverse();
  NormalEquations out;
  out.beta = XtX_inv * (X.transpose() * y);
  const Eigen::VectorXd e = y - X * out.beta;
  const double s2 = e.squaredNorm() / static_cast<double>(X.rows() - X.cols());
  out.se = (s2 * XtX_inv.diagonal().array()).sqrt();
  const double tss = (y.array() - y.mean()).square().sum();
  out.r2 = 1.0 - e.squaredNorm() / tss;
  return out;
}

}  // namespace oracle
