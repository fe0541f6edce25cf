#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "fomc/error.hpp"
#include "fomc/termstructure.hpp"

namespace fomc::curve {

ParameterMap::ParameterMap(StateSpaceModel base, Eigen::VectorXd maturities, bool estimate_lambda)
    : base_(std::move(base)), maturities_(std::move(maturities)), estimate_lambda_(estimate_lambda) {
  if (maturities_.size() != base_.Z.rows()) throw ValidationError("parameter map: maturities disagree with Z");
}

Eigen::Index ParameterMap::size() const { return 9 + 3 + maturities_.size() + 6 + (estimate_lambda_ ? 1 : 0); }

Eigen::VectorXd ParameterMap::pack(const StateSpaceModel& m) const {
  Eigen::VectorXd psi(size());
  Eigen::Index k = 0;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) psi(k++) = m.T(i, j);
  for (int i = 0; i < 3; ++i) psi(k++) = m.mu(i);
  for (Eigen::Index i = 0; i < m.H.size(); ++i) {
    if (!(m.H(i) > 0.0)) throw ValidationError("parameter map: H must be positive");
    psi(k++) = std::log(m.H(i));
  }
  Eigen::LLT<Eigen::Matrix3d> llt(m.Q);
  if (llt.info() != Eigen::Success) throw ValidationError("parameter map: Q must be positive definite");
  const Eigen::Matrix3d L = llt.matrixL();
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j <= i; ++j) psi(k++) = i == j ? std::log(L(i, i)) : L(i, j);
  }
  if (estimate_lambda_) psi(k++) = std::log(m.lambda);
  return psi;
}

StateSpaceModel ParameterMap::unpack(const Eigen::VectorXd& psi) const {
  if (psi.size() != size()) throw ValidationError(fmt::format("parameter vector has {} entries, expected {}", psi.size(), size()));
  StateSpaceModel m = base_;
  Eigen::Index k = 0;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) m.T(i, j) = psi(k++);
  for (int i = 0; i < 3; ++i) m.mu(i) = psi(k++);
  m.H.resize(maturities_.size());
  for (Eigen::Index i = 0; i < m.H.size(); ++i) m.H(i) = std::exp(psi(k++));
  Eigen::Matrix3d L = Eigen::Matrix3d::Zero();
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j <= i; ++j) L(i, j) = i == j ? std::exp(psi(k++)) : psi(k++);
  }
  m.Q = L * L.transpose();
  if (estimate_lambda_) {
    m.set_lambda(maturities_, std::exp(psi(k++)));
  } else {
    m.set_lambda(maturities_, base_.lambda);
  }
  return m;
}

StateSpaceModel data_variance_start(const YieldPanel& panel, const StateSpaceModel& init) {
  const TwoStepResult ts = two_step(panel, init.lambda);
  StateSpaceModel m = init;
  const Eigen::MatrixXd fitted = ts.factors.values * init.Z.transpose();
  for (Eigen::Index j = 0; j < panel.n_maturities(); ++j) {
    double ss = 0.0;
    Eigen::Index n = 0;
    for (Eigen::Index t = 0; t < panel.n_dates(); ++t) {
      const double e = panel.yields(t, j) - fitted(t, j);
      if (std::isnan(e)) continue;
      ss += e * e;
      ++n;
    }
    m.H(j) = std::max(n > 0 ? ss / static_cast<double>(n) : 1.0, 1e-10);
  }
  m.Q = ts.var.Q;
  Eigen::LLT<Eigen::Matrix3d> llt(m.Q);
  if (llt.info() != Eigen::Success) m.Q = Eigen::Matrix3d::Identity() * std::max(1e-8, ts.var.Q.trace() / 3.0);
  return m;
}

MleResult mle_fit(const YieldPanel& panel, const StateSpaceModel& init, const MleOptions& opts) {
  init.validate();
  const ParameterMap map(init, panel.maturities, opts.estimate_lambda);
  MleResult res;
  res.initial_loglik = loglik(init, panel);
  if (!std::isfinite(res.initial_loglik)) throw NumericalError("log likelihood not finite at the starting model");

  const Objective objective = [&](const Eigen::VectorXd& psi) {
    try {
      const StateSpaceModel m = map.unpack(psi);
      if (!m.H.allFinite() || !m.Q.allFinite() || !(m.H.array() > 0.0).all()) {
        return std::numeric_limits<double>::infinity();
      }
      return -loglik(m, panel);
    } catch (const Error&) {
      return std::numeric_limits<double>::infinity();
    }
  };

  std::vector<std::pair<std::string, StateSpaceModel>> starts{{"unit-variances", init}};
  if (opts.data_start) starts.emplace_back("data-variances", data_variance_start(panel, init));

  std::size_t best = 0;
  for (const auto& [name, start] : starts) {
    MleStart s;
    s.name = name;
    s.start_loglik = loglik(start, panel);
    s.optimizer = minimize_bfgs(objective, map.pack(start), opts.bfgs);
    s.loglik = -s.optimizer.f;
    res.starts.push_back(std::move(s));
    if (res.starts.back().loglik > res.starts[best].loglik) best = res.starts.size() - 1;
  }

  res.optimizer = res.starts[best].optimizer;
  res.warning = !res.optimizer.converged;
  res.model = map.unpack(res.optimizer.x);
  res.filter = kalman_filter(res.model, panel);
  res.loglik = res.filter.loglik;
  if (res.loglik < res.initial_loglik) {
    res.model = init;
    res.filter = kalman_filter(init, panel);
    res.loglik = res.filter.loglik;
  }
  res.smoother = kalman_smooth(res.model, res.filter);
  return res;
}

}  // namespace fomc::curve
