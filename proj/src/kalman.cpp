#include <cmath>
#include <limits>
#include <numbers>

#include <fmt/format.h>

#include "fomc/error.hpp"
#include "fomc/termstructure.hpp"

namespace fomc::curve {

namespace {

template <typename M>
void symmetrize(M& m) {
  m = (0.5 * (m + m.transpose())).eval();
}

std::vector<Eigen::Index> observed_rows(const Eigen::MatrixXd& yields, Eigen::Index t) {
  std::vector<Eigen::Index> obs;
  obs.reserve(static_cast<std::size_t>(yields.cols()));
  for (Eigen::Index j = 0; j < yields.cols(); ++j) {
    if (!std::isnan(yields(t, j))) obs.push_back(j);
  }
  return obs;
}

void check_dims(const StateSpaceModel& model, const YieldPanel& panel) {
  model.validate();
  if (model.Z.rows() != panel.n_maturities()) {
    throw ValidationError(fmt::format("model has {} maturities but the panel has {}", model.Z.rows(),
                                      panel.n_maturities()));
  }
}

// One pass of the forward recursion. `out` is filled when non-null.
double run_filter(const StateSpaceModel& model, const YieldPanel& panel, KalmanOutput* out) {
  check_dims(model, panel);
  const Eigen::Index n_dates = panel.n_dates();
  const Eigen::Index N = model.Z.rows();
  const Eigen::Matrix3d RQR = model.R * model.Q * model.R.transpose();
  const Eigen::VectorXd intercept = model.Z * model.mu;
  const double log2pi = std::log(2.0 * std::numbers::pi);
  const bool complete = !panel.has_missing();

  Eigen::Vector3d a = model.a0 - model.mu;
  Eigen::Matrix3d P = model.P0;
  symmetrize(P);
  double ll = 0.0;

  if (out) {
    auto n = static_cast<std::size_t>(n_dates);
    out->a_pred.resize(n);
    out->P_pred.resize(n);
    out->a_filt.resize(n);
    out->P_filt.resize(n);
    out->v.resize(n);
    out->F.resize(n);
    out->Finv.resize(n);
    out->K.resize(n);
    out->observed.resize(n);
  }

  std::vector<Eigen::Index> obs;
  if (complete) {
    obs.resize(static_cast<std::size_t>(N));
    for (Eigen::Index j = 0; j < N; ++j) obs[static_cast<std::size_t>(j)] = j;
  }
  Eigen::MatrixXd Zt;
  Eigen::VectorXd Ht, yt, ct;
  if (complete) {
    Zt = model.Z;
    Ht = model.H;
    ct = intercept;
  }

  for (Eigen::Index t = 0; t < n_dates; ++t) {
    if (!complete) {
      obs = observed_rows(panel.yields, t);
      const auto m = static_cast<Eigen::Index>(obs.size());
      Zt.resize(m, 3);
      Ht.resize(m);
      ct.resize(m);
      for (Eigen::Index k = 0; k < m; ++k) {
        const Eigen::Index j = obs[static_cast<std::size_t>(k)];
        Zt.row(k) = model.Z.row(j);
        Ht(k) = model.H(j);
        ct(k) = intercept(j);
      }
    }
    const auto m = static_cast<Eigen::Index>(obs.size());
    yt.resize(m);
    for (Eigen::Index k = 0; k < m; ++k) yt(k) = panel.yields(t, obs[static_cast<std::size_t>(k)]);

    Eigen::Vector3d af = a;
    Eigen::Matrix3d Pf = P;
    Eigen::VectorXd v;
    Eigen::MatrixXd F, Finv, K;
    if (m > 0) {
      v = yt - Zt * a - ct;
      const Eigen::MatrixXd PZt = P * Zt.transpose();  // 3 x m
      F = Zt * PZt;
      F.diagonal() += Ht;
      symmetrize(F);
      Eigen::LLT<Eigen::MatrixXd> llt(F);
      if (llt.info() != Eigen::Success) {
        throw NumericalError(fmt::format("innovation covariance not positive definite at date index {}", t));
      }
      const Eigen::MatrixXd L = llt.matrixL();
      const double logdet = 2.0 * L.diagonal().array().log().sum();
      const Eigen::VectorXd Finv_v = llt.solve(v);
      ll -= 0.5 * (static_cast<double>(m) * log2pi + logdet + v.dot(Finv_v));
      // K = P Z' F^{-1}
      K = llt.solve(PZt.transpose()).transpose();
      af = a + PZt * Finv_v;
      Pf = P - K * PZt.transpose();
      symmetrize(Pf);
      if (out) {
        Finv = llt.solve(Eigen::MatrixXd::Identity(m, m));
        symmetrize(Finv);
      }
    } else {
      K.resize(3, 0);
    }
    if (!std::isfinite(ll)) throw NumericalError(fmt::format("log likelihood not finite at date index {}", t));

    if (out) {
      auto i = static_cast<std::size_t>(t);
      out->a_pred[i] = a;
      out->P_pred[i] = P;
      out->a_filt[i] = af;
      out->P_filt[i] = Pf;
      out->v[i] = std::move(v);
      out->F[i] = std::move(F);
      out->Finv[i] = std::move(Finv);
      out->K[i] = std::move(K);
      out->observed[i] = obs;
    }

    a = model.T * af;
    P = model.T * Pf * model.T.transpose() + RQR;
    symmetrize(P);
  }
  if (out) out->loglik = ll;
  return ll;
}

// Complete-panel likelihood in 3x3 information form. With diagonal H and
// P = C C', F = H + (ZC)(ZC)' gives |F| = |H| |G| and
// Z'F^{-1} = Z'H^{-1} - S C G^{-1} C' Z'H^{-1}, where S = Z'H^{-1}Z and
// G = I + C'SC, so each date costs O(N).
double fast_loglik(const StateSpaceModel& model, const YieldPanel& panel) {
  using Mat3 = Eigen::Matrix3d;
  using Vec3 = Eigen::Vector3d;
  const Eigen::Index N = model.Z.rows();
  const Eigen::VectorXd hinv = model.H.cwiseInverse();
  const Eigen::Matrix<double, Eigen::Dynamic, 3> HiZ = hinv.asDiagonal() * model.Z;
  const Mat3 S = model.Z.transpose() * HiZ;
  const Eigen::VectorXd intercept = model.Z * model.mu;
  const Mat3 RQR = model.R * model.Q * model.R.transpose();
  const double log_det_h = model.H.array().log().sum();
  const double log2pi = std::log(2.0 * std::numbers::pi);

  Vec3 a = model.a0 - model.mu;
  Mat3 P = 0.5 * (model.P0 + model.P0.transpose());
  double ll = -0.5 * static_cast<double>(panel.n_dates() * N) * log2pi;
  Eigen::VectorXd v(N);
  for (Eigen::Index t = 0; t < panel.n_dates(); ++t) {
    Eigen::LLT<Mat3> pc(P);
    if (pc.info() != Eigen::Success) return std::numeric_limits<double>::quiet_NaN();
    const Mat3 C = pc.matrixL();
    v = panel.yields.row(t).transpose() - intercept - model.Z * a;
    const Vec3 z = HiZ.transpose() * v;
    const double vHv = v.dot(hinv.asDiagonal() * v);
    const Mat3 G = Mat3::Identity() + C.transpose() * S * C;
    Eigen::LLT<Mat3> gc(G);
    if (gc.info() != Eigen::Success) return std::numeric_limits<double>::quiet_NaN();
    const Mat3 Lg = gc.matrixL();
    const double log_det_g = 2.0 * Lg.diagonal().array().log().sum();
    const Vec3 ctz = C.transpose() * z;
    const Vec3 gi_ctz = gc.solve(ctz);
    const double quad = vHv - ctz.dot(gi_ctz);
    ll -= 0.5 * (log_det_h + log_det_g + quad);

    const Vec3 ZtFv = z - S * (C * gi_ctz);
    const Mat3 SC = S * C;
    const Mat3 ZtFZ = S - SC * gc.solve(SC.transpose());
    const Vec3 af = a + P * ZtFv;
    Mat3 Pf = P - P * ZtFZ * P;
    a = model.T * af;
    P = model.T * Pf * model.T.transpose() + RQR;
    P = (0.5 * (P + P.transpose())).eval();
  }
  return ll;
}

Eigen::MatrixXd rows_of(const Eigen::MatrixXd& Z, const std::vector<Eigen::Index>& obs) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(obs.size()), Z.cols());
  for (std::size_t k = 0; k < obs.size(); ++k) out.row(static_cast<Eigen::Index>(k)) = Z.row(obs[k]);
  return out;
}

}  // namespace

KalmanOutput kalman_filter(const StateSpaceModel& model, const YieldPanel& panel) {
  KalmanOutput out;
  run_filter(model, panel, &out);
  return out;
}

double loglik(const StateSpaceModel& model, const YieldPanel& panel) {
  check_dims(model, panel);
  if (!panel.has_missing()) {
    const double ll = fast_loglik(model, panel);
    if (std::isfinite(ll)) return ll;
  }
  return run_filter(model, panel, nullptr);
}

SmootherOutput kalman_smooth(const StateSpaceModel& model, const KalmanOutput& f) {
  const std::size_t n = f.a_pred.size();
  if (f.v.size() != n || f.Finv.size() != n || f.K.size() != n || f.observed.size() != n) {
    throw ValidationError("smoother needs a complete filter pass");
  }
  SmootherOutput s;
  s.alpha_hat.resize(n);
  s.V.resize(n);
  s.r.resize(n);
  s.N.resize(n);
  s.u.resize(n);
  s.D.resize(n);
  s.eps_hat.resize(n);
  s.eps_var.resize(n);
  s.eta_hat.resize(n);
  s.eta_var.resize(n);

  const Eigen::Matrix3d& T = model.T;
  const Eigen::Matrix3d QR = model.Q * model.R.transpose();
  Eigen::Vector3d r = Eigen::Vector3d::Zero();
  Eigen::Matrix3d N = Eigen::Matrix3d::Zero();

  for (std::size_t i = n; i-- > 0;) {
    // State disturbance uses r_t, N_t before the step back to t-1.
    s.eta_hat[i] = QR * r;
    s.eta_var[i] = model.Q - QR * N * QR.transpose();
    symmetrize(s.eta_var[i]);

    const auto& obs = f.observed[i];
    const auto m = static_cast<Eigen::Index>(obs.size());
    const Eigen::MatrixXd Zt = rows_of(model.Z, obs);
    Eigen::VectorXd Ht(m);
    for (Eigen::Index k = 0; k < m; ++k) Ht(k) = model.H(obs[static_cast<std::size_t>(k)]);

    // Prediction gain T K and L = T - T K Z.
    const Eigen::MatrixXd Kp = T * f.K[i];
    const Eigen::Matrix3d L = T - Kp * Zt;

    if (m > 0) {
      s.u[i] = f.Finv[i] * f.v[i] - Kp.transpose() * r;
      s.D[i] = f.Finv[i] + Kp.transpose() * N * Kp;
      symmetrize(s.D[i]);
      s.eps_hat[i] = Ht.asDiagonal() * s.u[i];
      s.eps_var[i] = Eigen::MatrixXd(Ht.asDiagonal()) - Ht.asDiagonal() * s.D[i] * Ht.asDiagonal();
      symmetrize(s.eps_var[i]);
      r = Zt.transpose() * f.Finv[i] * f.v[i] + L.transpose() * r;
      N = Zt.transpose() * f.Finv[i] * Zt + L.transpose() * N * L;
    } else {
      s.u[i].resize(0);
      s.D[i].resize(0, 0);
      s.eps_hat[i].resize(0);
      s.eps_var[i].resize(0, 0);
      r = L.transpose() * r;
      N = L.transpose() * N * L;
    }
    symmetrize(N);
    s.r[i] = r;
    s.N[i] = N;
    s.alpha_hat[i] = f.a_pred[i] + f.P_pred[i] * r;
    s.V[i] = f.P_pred[i] - f.P_pred[i] * N * f.P_pred[i];
    symmetrize(s.V[i]);
  }
  return s;
}

FactorSeries filtered_factors(const StateSpaceModel& model, const KalmanOutput& filter,
                              const std::vector<Date>& dates) {
  if (dates.size() != filter.a_filt.size()) throw ValidationError("filtered factors: date count mismatch");
  FactorSeries out;
  out.dates = dates;
  out.source = FactorSource::Filtered;
  out.values.resize(static_cast<Eigen::Index>(dates.size()), 3);
  for (std::size_t t = 0; t < dates.size(); ++t) {
    out.values.row(static_cast<Eigen::Index>(t)) = (filter.a_filt[t] + model.mu).transpose();
  }
  return out;
}

FactorSeries smoothed_factors(const StateSpaceModel& model, const SmootherOutput& smoother,
                              const std::vector<Date>& dates) {
  if (dates.size() != smoother.alpha_hat.size()) throw ValidationError("smoothed factors: date count mismatch");
  FactorSeries out;
  out.dates = dates;
  out.source = FactorSource::Smoothed;
  out.values.resize(static_cast<Eigen::Index>(dates.size()), 3);
  for (std::size_t t = 0; t < dates.size(); ++t) {
    out.values.row(static_cast<Eigen::Index>(t)) = (smoother.alpha_hat[t] + model.mu).transpose();
  }
  return out;
}

}  // namespace fomc::curve
