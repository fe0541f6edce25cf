#include <algorithm>
#include <cmath>
#include <numeric>

#include <Eigen/Eigenvalues>
#include <fmt/format.h>

#include "fomc/error.hpp"
#include "fomc/termstructure.hpp"

namespace fomc::curve {

void YieldPanel::validate(bool allow_missing) const {
  if (maturities.size() < 3) throw ValidationError("yield panel needs at least 3 maturities");
  if (yields.rows() != static_cast<Eigen::Index>(dates.size()) || yields.cols() != maturities.size()) {
    throw ValidationError("yield panel shape does not match its index");
  }
  for (Eigen::Index j = 0; j < maturities.size(); ++j) {
    if (!(maturities(j) > 0.0)) throw ValidationError("maturities must be positive");
    if (j > 0 && !(maturities(j) > maturities(j - 1))) {
      throw ValidationError("maturities must be strictly increasing");
    }
  }
  for (std::size_t t = 1; t < dates.size(); ++t) {
    if (!(dates[t - 1] < dates[t])) {
      throw ValidationError(fmt::format("yield panel dates not strictly increasing at {}", dates[t].iso()));
    }
  }
  for (Eigen::Index t = 0; t < yields.rows(); ++t) {
    for (Eigen::Index j = 0; j < yields.cols(); ++j) {
      const double y = yields(t, j);
      if (std::isnan(y)) {
        if (!allow_missing) {
          throw ValidationError(fmt::format("yield panel: missing value on {} at maturity {}",
                                            dates[static_cast<std::size_t>(t)].iso(), maturities(j)));
        }
      } else if (!std::isfinite(y)) {
        throw ValidationError(fmt::format("yield panel: non-finite value on {}", dates[static_cast<std::size_t>(t)].iso()));
      }
    }
  }
}

YieldPanel parse_yield_panel(const csv::Table& table, bool allow_missing) {
  if (table.header.size() < 4) throw ValidationError(fmt::format("{}: need a date column and >= 3 maturities", table.source));
  YieldPanel panel;
  const auto n = static_cast<Eigen::Index>(table.header.size() - 1);
  panel.maturities.resize(n);
  for (Eigen::Index j = 0; j < n; ++j) {
    const std::string& h = table.header[static_cast<std::size_t>(j + 1)];
    try {
      std::size_t used = 0;
      panel.maturities(j) = std::stod(h, &used);
      if (used != h.size()) throw std::invalid_argument(h);
    } catch (const std::exception&) {
      throw ValidationError(fmt::format("{}: column '{}' is not a maturity in months", table.source, h));
    }
  }

  std::vector<std::size_t> order(table.rows.size());
  std::vector<Date> dates;
  dates.reserve(table.rows.size());
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    try {
      dates.push_back(Date::parse(table.rows[r][0]));
    } catch (const ValidationError& e) {
      throw ValidationError(fmt::format("{}: row {}: {}", table.source, r + 2, e.what()));
    }
  }
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return dates[a] < dates[b]; });
  for (std::size_t i = 1; i < order.size(); ++i) {
    if (dates[order[i]] == dates[order[i - 1]]) {
      throw ValidationError(fmt::format("{}: duplicate date {}", table.source, dates[order[i]].iso()));
    }
  }

  panel.yields.resize(static_cast<Eigen::Index>(order.size()), n);
  for (std::size_t i = 0; i < order.size(); ++i) {
    panel.dates.push_back(dates[order[i]]);
    for (Eigen::Index j = 0; j < n; ++j) {
      panel.yields(static_cast<Eigen::Index>(i), j) = csv::to_double(table, order[i], static_cast<std::size_t>(j + 1));
    }
  }
  panel.validate(allow_missing);
  return panel;
}

YieldPanel load_yield_panel(const std::filesystem::path& path, bool allow_missing) {
  return parse_yield_panel(csv::read(path), allow_missing);
}

NsLoadings ns_loadings(const Eigen::VectorXd& maturities, double lambda) {
  if (!(lambda > 0.0)) throw ValidationError(fmt::format("lambda must be positive, got {}", lambda));
  NsLoadings out;
  out.lambda = lambda;
  out.Z.resize(maturities.size(), 3);
  for (Eigen::Index i = 0; i < maturities.size(); ++i) {
    const double tau = maturities(i);
    if (!(tau > 0.0)) throw ValidationError(fmt::format("maturity must be positive, got {}", tau));
    const double x = lambda * tau;
    double slope = 0.0;
    double curv = 0.0;
    if (x < 1e-8) {
      slope = 1.0 - x / 2.0 + x * x / 6.0;
      curv = x / 2.0 - x * x / 3.0;
    } else {
      slope = -std::expm1(-x) / x;
      curv = slope - std::exp(-x);
    }
    out.Z(i, 0) = 1.0;
    out.Z(i, 1) = slope;
    out.Z(i, 2) = curv;
  }
  return out;
}

Eigen::Vector3d fit_cross_section(const Eigen::VectorXd& yields, const NsLoadings& loadings) {
  if (yields.size() != loadings.Z.rows()) throw ValidationError("cross-section: yields and loadings disagree in size");
  std::vector<Eigen::Index> obs;
  for (Eigen::Index i = 0; i < yields.size(); ++i) {
    if (!std::isnan(yields(i))) obs.push_back(i);
  }
  if (obs.size() < 3) throw ValidationError("cross-section needs at least 3 observed maturities");
  Eigen::MatrixXd Z(static_cast<Eigen::Index>(obs.size()), 3);
  Eigen::VectorXd y(static_cast<Eigen::Index>(obs.size()));
  for (std::size_t k = 0; k < obs.size(); ++k) {
    Z.row(static_cast<Eigen::Index>(k)) = loadings.Z.row(obs[k]);
    y(static_cast<Eigen::Index>(k)) = yields(obs[k]);
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(Z);
  qr.setThreshold(1e-12);
  if (qr.rank() < 3) throw NumericalError("cross-section loadings are rank deficient");
  return qr.solve(y);
}

std::string to_string(FactorSource s) {
  switch (s) {
    case FactorSource::TwoStepOls: return "two-step-ols";
    case FactorSource::Filtered: return "filtered";
    case FactorSource::Smoothed: return "smoothed";
  }
  return "unknown";
}

Var1Fit fit_var1(const Eigen::MatrixXd& factors) {
  const auto T = factors.rows();
  if (T < 5) throw ValidationError(fmt::format("VAR(1) needs at least 5 dates, got {}", T));
  Var1Fit fit;
  fit.mu = factors.colwise().mean().transpose();
  Eigen::MatrixXd x = factors.rowwise() - fit.mu.transpose();
  Eigen::MatrixXd lagged = x.topRows(T - 1);
  Eigen::MatrixXd current = x.bottomRows(T - 1);
  static const char* names[] = {"level", "slope", "curvature"};
  for (int j = 0; j < 3; ++j) {
    const double scale = std::max(1.0, fit.mu.cwiseAbs().maxCoeff());
    if (lagged.col(j).norm() <= 1e-10 * scale * std::sqrt(static_cast<double>(T))) {
      throw ValidationError(fmt::format("VAR(1): {} factor has zero variance; regressor is degenerate", names[j]));
    }
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(lagged);
  if (qr.rank() < 3) throw ValidationError("VAR(1): lagged factors are collinear");
  // current = lagged * A^T + resid
  fit.A = qr.solve(current).transpose();
  Eigen::MatrixXd resid = current - lagged * fit.A.transpose();
  fit.n_obs = T - 1;
  fit.Q = resid.transpose() * resid / static_cast<double>(fit.n_obs);
  fit.Q = 0.5 * (fit.Q + fit.Q.transpose()).eval();
  return fit;
}

TwoStepResult two_step(const YieldPanel& panel, double lambda) {
  if (panel.n_dates() < 5) throw ValidationError(fmt::format("two-step estimation needs >= 5 dates, got {}", panel.n_dates()));
  const NsLoadings loadings = ns_loadings(panel.maturities, lambda);
  TwoStepResult out;
  out.factors.dates = panel.dates;
  out.factors.source = FactorSource::TwoStepOls;
  out.factors.values.resize(panel.n_dates(), 3);
  for (Eigen::Index t = 0; t < panel.n_dates(); ++t) {
    out.factors.values.row(t) = fit_cross_section(panel.yields.row(t).transpose(), loadings).transpose();
  }
  out.var = fit_var1(out.factors.values);
  return out;
}

double StateSpaceModel::spectral_radius() const {
  Eigen::EigenSolver<Eigen::Matrix3d> es(T, false);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

void StateSpaceModel::validate() const {
  if (Z.cols() != 3 || Z.rows() != H.size()) throw ValidationError("state-space model: Z and H disagree in size");
  if ((H.array() <= 0.0).any()) throw ValidationError("state-space model: H must be positive");
  if (!Z.allFinite() || !T.allFinite() || !Q.allFinite() || !mu.allFinite() || !H.allFinite()) {
    throw ValidationError("state-space model has non-finite parameters");
  }
}

void StateSpaceModel::set_lambda(const Eigen::VectorXd& maturities, double new_lambda) {
  lambda = new_lambda;
  Z = ns_loadings(maturities, new_lambda).Z;
}

StateSpaceModel initial_model(const YieldPanel& panel, const TwoStepResult& ts, double lambda) {
  StateSpaceModel m;
  m.lambda = lambda;
  m.Z = ns_loadings(panel.maturities, lambda).Z;
  m.T = ts.var.A;
  m.mu = ts.var.mu;
  m.H = Eigen::VectorXd::Ones(panel.n_maturities());
  m.Q = Eigen::Matrix3d::Identity();
  m.a0 = ts.factors.values.colwise().mean().transpose();
  m.P0 = ts.var.Q;
  return m;
}

Proxies empirical_proxies(const YieldPanel& panel) {
  auto find = [&](double tau) {
    for (Eigen::Index j = 0; j < panel.maturities.size(); ++j) {
      if (panel.maturities(j) == tau) return j;
    }
    throw ValidationError(fmt::format("empirical proxies need the {}-month maturity", tau));
  };
  const auto j3 = find(3), j36 = find(36), j360 = find(360);
  Proxies p;
  p.level = panel.yields.col(j360);
  p.slope = panel.yields.col(j3) - panel.yields.col(j360);
  p.curvature = 2.0 * panel.yields.col(j36) - panel.yields.col(j3) - panel.yields.col(j360);
  return p;
}

YieldPanel simulate(const StateSpaceModel& model, const Eigen::VectorXd& maturities, const std::vector<Date>& dates,
                    Rng& rng) {
  model.validate();
  const auto T = static_cast<Eigen::Index>(dates.size());
  const auto N = model.Z.rows();
  Eigen::Matrix3d cq = model.Q.llt().matrixL();
  Eigen::Matrix3d cp = model.P0.llt().matrixL();
  auto draw3 = [&] { return Eigen::Vector3d(rng.normal(), rng.normal(), rng.normal()); };
  YieldPanel panel;
  panel.dates = dates;
  panel.maturities = maturities;
  panel.yields.resize(T, N);
  Eigen::Vector3d x = model.a0 - model.mu + cp * draw3();
  for (Eigen::Index t = 0; t < T; ++t) {
    Eigen::VectorXd y = model.Z * (x + model.mu);
    for (Eigen::Index i = 0; i < N; ++i) y(i) += std::sqrt(model.H(i)) * rng.normal();
    panel.yields.row(t) = y.transpose();
    x = model.T * x + cq * draw3();
  }
  return panel;
}

csv::Writer export_factors(const std::vector<FactorSeries>& series) {
  csv::Writer w({"date", "level", "slope", "curvature", "source"});
  for (const auto& s : series) {
    for (Eigen::Index t = 0; t < s.values.rows(); ++t) {
      w.row({s.dates[static_cast<std::size_t>(t)].iso(), csv::num(s.values(t, 0)), csv::num(s.values(t, 1)),
             csv::num(s.values(t, 2)), to_string(s.source)});
    }
  }
  return w;
}

nlohmann::json model_json(const StateSpaceModel& m) {
  auto mat = [](const auto& M) {
    nlohmann::json rows = nlohmann::json::array();
    for (Eigen::Index i = 0; i < M.rows(); ++i) {
      nlohmann::json r = nlohmann::json::array();
      for (Eigen::Index j = 0; j < M.cols(); ++j) r.push_back(M(i, j));
      rows.push_back(r);
    }
    return rows;
  };
  auto vec = [](const auto& v) {
    nlohmann::json out = nlohmann::json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
    return out;
  };
  return {{"lambda", m.lambda}, {"A", mat(m.T)}, {"mu", vec(m.mu)}, {"H_diag", vec(m.H)},
          {"Q", mat(m.Q)}, {"a0", vec(m.a0)}, {"P0", mat(m.P0)}, {"spectral_radius", m.spectral_radius()}};
}

}  // namespace fomc::curve
