#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "fomc/csv.hpp"
#include "fomc/dates.hpp"
#include "fomc/optim.hpp"
#include "fomc/random.hpp"

namespace fomc::curve {

// Decay rate per month that puts the curvature loading's peak at 30 months.
inline constexpr double kDefaultLambda = 0.0609;

// Daily yields in percent per annum; maturities in months. Missing cells
// are NaN and only allowed when the panel was loaded with allow_missing.
struct YieldPanel {
  std::vector<Date> dates;
  Eigen::VectorXd maturities;
  Eigen::MatrixXd yields;  // dates x maturities

  Eigen::Index n_dates() const { return yields.rows(); }
  Eigen::Index n_maturities() const { return yields.cols(); }
  bool has_missing() const { return yields.hasNaN(); }
  // Throws ValidationError when a structural invariant fails.
  void validate(bool allow_missing = false) const;
};

// First column ISO dates, remaining columns headed by maturity in months.
// Rejects duplicate dates (naming the date) and, unless allow_missing,
// empty cells. Rows are returned in date order.
YieldPanel load_yield_panel(const std::filesystem::path& path, bool allow_missing = false);
YieldPanel parse_yield_panel(const csv::Table& table, bool allow_missing = false);

struct NsLoadings {
  double lambda = kDefaultLambda;
  Eigen::MatrixXd Z;  // maturities x 3: [1, slope, curvature]
};

// slope = (1 - e^{-x})/x, curvature = slope - e^{-x}, x = lambda * tau.
NsLoadings ns_loadings(const Eigen::VectorXd& maturities, double lambda);

// Least-squares (level, slope, curvature) for one date; NaN yields are
// skipped. Throws NumericalError when the observed loadings are rank
// deficient.
Eigen::Vector3d fit_cross_section(const Eigen::VectorXd& yields, const NsLoadings& loadings);

enum class FactorSource { TwoStepOls, Filtered, Smoothed };
std::string to_string(FactorSource s);

struct FactorSeries {
  std::vector<Date> dates;
  Eigen::MatrixXd values;  // dates x 3: level, slope, curvature
  FactorSource source = FactorSource::TwoStepOls;

  Eigen::VectorXd level() const { return values.col(0); }
  Eigen::VectorXd slope() const { return values.col(1); }
  Eigen::VectorXd curvature() const { return values.col(2); }
};

// (f_t - mu) = A (f_{t-1} - mu) + eta_t, eta_t ~ N(0, Q)
struct Var1Fit {
  Eigen::Vector3d mu;
  Eigen::Matrix3d A;
  Eigen::Matrix3d Q;
  Eigen::Index n_obs = 0;  // residual count
};

// OLS VAR(1) on sample-demeaned factors; Q is the residual covariance with
// divisor n_obs. Throws ValidationError for a zero-variance regressor.
Var1Fit fit_var1(const Eigen::MatrixXd& factors);

struct TwoStepResult {
  FactorSeries factors;
  Var1Fit var;
};

TwoStepResult two_step(const YieldPanel& panel, double lambda);

// y_t = Z (x_t + mu) + e_t,  x_{t+1} = T x_t + eta_t, with the demeaned
// state x_t = f_t - mu. The first state x_1 ~ N(a0 - mu, P0).
struct StateSpaceModel {
  double lambda = kDefaultLambda;
  Eigen::MatrixXd Z;          // N x 3
  Eigen::Matrix3d T;          // transition
  Eigen::Vector3d mu;         // factor means
  Eigen::Matrix3d R = Eigen::Matrix3d::Identity();
  Eigen::VectorXd H;          // diagonal measurement variances, N
  Eigen::Matrix3d Q;          // state shock covariance
  Eigen::Vector3d a0;         // initial factor mean
  Eigen::Matrix3d P0;         // initial factor covariance

  double spectral_radius() const;
  // Throws ValidationError for shape errors or non-positive H.
  void validate() const;
  // Rebuilds Z for a new lambda on the given maturities.
  void set_lambda(const Eigen::VectorXd& maturities, double new_lambda);
};

// Per-date filter quantities on the demeaned state. For dates with missing
// yields, v/F/K/Finv cover only the observed maturities listed in `observed`.
struct KalmanOutput {
  std::vector<Eigen::Vector3d> a_pred;    // a_t
  std::vector<Eigen::Matrix3d> P_pred;    // P_t
  std::vector<Eigen::Vector3d> a_filt;    // a_{t|t}
  std::vector<Eigen::Matrix3d> P_filt;    // P_{t|t}
  std::vector<Eigen::VectorXd> v;         // innovations
  std::vector<Eigen::MatrixXd> F;         // innovation covariances
  std::vector<Eigen::MatrixXd> Finv;
  std::vector<Eigen::MatrixXd> K;         // gains, 3 x n_obs
  std::vector<std::vector<Eigen::Index>> observed;
  double loglik = 0.0;
};

struct SmootherOutput {
  std::vector<Eigen::Vector3d> alpha_hat;  // demeaned smoothed state
  std::vector<Eigen::Matrix3d> V;
  std::vector<Eigen::Vector3d> r;          // r_{t-1}
  std::vector<Eigen::Matrix3d> N;          // N_{t-1}
  std::vector<Eigen::VectorXd> u;
  std::vector<Eigen::MatrixXd> D;
  std::vector<Eigen::VectorXd> eps_hat;    // smoothed measurement disturbance
  std::vector<Eigen::MatrixXd> eps_var;
  std::vector<Eigen::Vector3d> eta_hat;    // smoothed state disturbance
  std::vector<Eigen::Matrix3d> eta_var;
};

// Forward recursion. Throws NumericalError naming the date index when F_t is
// not positive definite.
KalmanOutput kalman_filter(const StateSpaceModel& model, const YieldPanel& panel);

// Backward state and disturbance smoothing from a complete filter pass.
SmootherOutput kalman_smooth(const StateSpaceModel& model, const KalmanOutput& filter);

// Prediction-error-decomposition log likelihood, without storing the
// per-date filter output.
double loglik(const StateSpaceModel& model, const YieldPanel& panel);

// Factor-scale series (state + mu).
FactorSeries filtered_factors(const StateSpaceModel& model, const KalmanOutput& filter,
                              const std::vector<Date>& dates);
FactorSeries smoothed_factors(const StateSpaceModel& model, const SmootherOutput& smoother,
                              const std::vector<Date>& dates);

// Starting model: A and mu from the VAR, unit variances for H and Q,
// a0 = factor sample mean, P0 = VAR residual covariance.
StateSpaceModel initial_model(const YieldPanel& panel, const TwoStepResult& two_step, double lambda);

struct MleOptions {
  bool estimate_lambda = false;
  // Also start from two-step residual variances for H and the VAR residual
  // covariance for Q, keeping whichever start ends higher.
  bool data_start = true;
  BfgsOptions bfgs;
};

// Maps between a model and the optimiser's parameter vector:
// [A row-major (9), mu (3), log H (N), Cholesky of Q (6, log diagonal),
//  log lambda (optional)]. a0 and P0 are held fixed.
class ParameterMap {
 public:
  ParameterMap(StateSpaceModel base, Eigen::VectorXd maturities, bool estimate_lambda);

  Eigen::VectorXd pack(const StateSpaceModel& model) const;
  StateSpaceModel unpack(const Eigen::VectorXd& psi) const;
  Eigen::Index size() const;

 private:
  StateSpaceModel base_;
  Eigen::VectorXd maturities_;
  bool estimate_lambda_;
};

struct MleStart {
  std::string name;  // "unit-variances" or "data-variances"
  double start_loglik = 0.0;
  double loglik = 0.0;
  BfgsResult optimizer;
};

struct MleResult {
  StateSpaceModel model;
  KalmanOutput filter;
  SmootherOutput smoother;
  double initial_loglik = 0.0;
  double loglik = 0.0;
  BfgsResult optimizer;                // of the winning start
  std::vector<MleStart> starts;
  bool warning = false;  // winning start stopped without meeting its tolerance
};

// The initial model with H set to the mean squared two-step residual per
// maturity and Q to the VAR(1) residual covariance.
StateSpaceModel data_variance_start(const YieldPanel& panel, const StateSpaceModel& init);

MleResult mle_fit(const YieldPanel& panel, const StateSpaceModel& init, const MleOptions& opts);

struct Proxies {
  Eigen::VectorXd level;      // y(360)
  Eigen::VectorXd slope;      // y(3) - y(360)
  Eigen::VectorXd curvature;  // 2 y(36) - y(3) - y(360)
};

Proxies empirical_proxies(const YieldPanel& panel);

// Draws a panel from the model, starting from x_1 ~ N(a0 - mu, P0).
YieldPanel simulate(const StateSpaceModel& model, const Eigen::VectorXd& maturities,
                    const std::vector<Date>& dates, Rng& rng);

// Long format: date, level, slope, curvature, source.
csv::Writer export_factors(const std::vector<FactorSeries>& series);
nlohmann::json model_json(const StateSpaceModel& model);

}  // namespace fomc::curve
