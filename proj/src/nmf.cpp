#include "fomc/nmf.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <fmt/format.h>

#include "fomc/error.hpp"
#include "fomc/random.hpp"

namespace fomc::nmf {

std::string to_string(Init init) { return init == Init::Nndsvd ? "nndsvd" : "random"; }

Init parse_init(const std::string& name) {
  if (name == "nndsvd") return Init::Nndsvd;
  if (name == "random") return Init::SeededRandom;
  throw ValidationError(fmt::format("unknown NMF init '{}' (expected nndsvd or random)", name));
}

void NmfConfig::validate() const {
  if (k < 1) throw ValidationError(fmt::format("NMF k must be >= 1, got {}", k));
  if (max_iter < 1) throw ValidationError("NMF max_iter must be >= 1");
  if (!(rel_tol > 0.0)) throw ValidationError("NMF rel_tol must be > 0");
  if (!(denom_guard > 0.0)) throw ValidationError("NMF denom_guard must be > 0");
}

double objective(const Eigen::MatrixXd& A, const Eigen::MatrixXd& W, const Eigen::MatrixXd& H) {
  if (W.rows() != A.rows() || H.cols() != A.cols() || W.cols() != H.rows()) {
    throw ValidationError(fmt::format("objective: A is {}x{}, W is {}x{}, H is {}x{}", A.rows(), A.cols(),
                                      W.rows(), W.cols(), H.rows(), H.cols()));
  }
  return 0.5 * (A - W * H).squaredNorm();
}

namespace {

// Keeps dimensions stable when a whole topic dies out.
void revive_dead_topics(Eigen::MatrixXd& W, Eigen::MatrixXd& H, double guard) {
  for (Eigen::Index t = 0; t < W.cols(); ++t) {
    if ((W.col(t).array() == 0.0).all()) W.col(t).setConstant(guard);
    if ((H.row(t).array() == 0.0).all()) H.row(t).setConstant(guard);
  }
}

}  // namespace

void update_step(const Eigen::MatrixXd& A, Eigen::MatrixXd& W, Eigen::MatrixXd& H, double guard) {
  const Eigen::MatrixXd WtA = W.transpose() * A;
  const Eigen::MatrixXd WtWH = (W.transpose() * W) * H;
  H.array() *= WtA.array() / (WtWH.array() + guard);

  const Eigen::MatrixXd AHt = A * H.transpose();
  const Eigen::MatrixXd WHHt = W * (H * H.transpose());
  W.array() *= AHt.array() / (WHHt.array() + guard);

  if (!W.allFinite() || !H.allFinite()) throw NumericalError("NMF update produced non-finite values");
  revive_dead_topics(W, H, guard);
}

void nndsvd(const Eigen::MatrixXd& A, int k, double floor, Eigen::MatrixXd& W, Eigen::MatrixXd& H) {
  Eigen::BDCSVD<Eigen::MatrixXd> svd(A, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Eigen::MatrixXd& U = svd.matrixU();
  const Eigen::MatrixXd& V = svd.matrixV();
  const Eigen::VectorXd& S = svd.singularValues();
  W = Eigen::MatrixXd::Zero(A.rows(), k);
  H = Eigen::MatrixXd::Zero(k, A.cols());

  // The leading singular pair of a nonnegative matrix has a single sign.
  W.col(0) = std::sqrt(S(0)) * U.col(0).cwiseAbs();
  H.row(0) = std::sqrt(S(0)) * V.col(0).cwiseAbs().transpose();

  for (int j = 1; j < k; ++j) {
    Eigen::VectorXd x = U.col(j), y = V.col(j);
    Eigen::VectorXd xp = x.cwiseMax(0.0), xn = (-x).cwiseMax(0.0);
    Eigen::VectorXd yp = y.cwiseMax(0.0), yn = (-y).cwiseMax(0.0);
    const double xpn = xp.norm(), ypn = yp.norm(), xnn = xn.norm(), ynn = yn.norm();
    const double mp = xpn * ypn, mn = xnn * ynn;
    Eigen::VectorXd u, v;
    double sigma = 0.0;
    if (mp >= mn) {
      if (mp == 0.0) continue;
      u = xp / xpn;
      v = yp / ypn;
      sigma = mp;
    } else {
      u = xn / xnn;
      v = yn / ynn;
      sigma = mn;
    }
    const double scale = std::sqrt(S(j) * sigma);
    W.col(j) = scale * u;
    H.row(j) = scale * v.transpose();
  }
  W = W.cwiseMax(floor);
  H = H.cwiseMax(floor);
}

NmfModel fit(const Eigen::MatrixXd& A, const NmfConfig& cfg) {
  cfg.validate();
  if (cfg.k > std::min(A.rows(), A.cols())) {
    throw ValidationError(fmt::format("NMF k={} exceeds min(n, m)={}", cfg.k, std::min(A.rows(), A.cols())));
  }
  if ((A.array() < 0.0).any() || !A.allFinite()) {
    throw ValidationError("NMF input must be finite and nonnegative");
  }

  NmfModel model;
  model.config = cfg;
  if (cfg.init == Init::Nndsvd) {
    nndsvd(A, cfg.k, cfg.denom_guard, model.W, model.H);
  } else {
    Rng rng(cfg.seed);
    const double scale = std::sqrt(A.mean() / cfg.k);
    model.W.resize(A.rows(), cfg.k);
    model.H.resize(cfg.k, A.cols());
    for (Eigen::Index i = 0; i < model.W.size(); ++i) model.W.data()[i] = scale * rng.uniform();
    for (Eigen::Index i = 0; i < model.H.size(); ++i) model.H.data()[i] = scale * rng.uniform();
    model.W = model.W.cwiseMax(cfg.denom_guard);
    model.H = model.H.cwiseMax(cfg.denom_guard);
  }

  double prev = objective(A, model.W, model.H);
  model.objective_trace.push_back(prev);
  for (int it = 0; it < cfg.max_iter; ++it) {
    update_step(A, model.W, model.H, cfg.denom_guard);
    const double cur = objective(A, model.W, model.H);
    if (!std::isfinite(cur)) throw NumericalError(fmt::format("NMF objective not finite at iteration {}", it + 1));
    model.objective_trace.push_back(cur);
    model.iterations = it + 1;
    if (cur == 0.0 || std::abs(prev - cur) < cfg.rel_tol * std::abs(prev)) {
      model.converged = true;
      break;
    }
    prev = cur;
  }
  return model;
}

std::vector<std::size_t> top_terms(const Eigen::MatrixXd& topic_term, Eigen::Index topic, std::size_t n) {
  if (topic < 0 || topic >= topic_term.rows()) {
    throw ValidationError(fmt::format("topic {} out of range [0, {})", topic, topic_term.rows()));
  }
  const auto m = static_cast<std::size_t>(topic_term.cols());
  if (n < 1 || n > m) throw ValidationError(fmt::format("top-term count {} outside [1, {}]", n, m));
  std::vector<std::size_t> idx(m);
  std::iota(idx.begin(), idx.end(), 0);
  auto row = topic_term.row(topic);
  std::partial_sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n), idx.end(),
                    [&](std::size_t a, std::size_t b) {
                      const double wa = row(static_cast<Eigen::Index>(a));
                      const double wb = row(static_cast<Eigen::Index>(b));
                      return wa > wb || (wa == wb && a < b);
                    });
  idx.resize(n);
  return idx;
}

csv::Writer export_w(const NmfModel& model, const std::vector<text::DocKey>& docs) {
  std::vector<std::string> header{"date"};
  for (Eigen::Index t = 0; t < model.W.cols(); ++t) header.push_back(fmt::format("topic_{}", t + 1));
  csv::Writer w(std::move(header));
  for (Eigen::Index i = 0; i < model.W.rows(); ++i) {
    std::vector<std::string> row{docs.at(static_cast<std::size_t>(i)).date.iso()};
    for (Eigen::Index t = 0; t < model.W.cols(); ++t) row.push_back(csv::num(model.W(i, t)));
    w.row(std::move(row));
  }
  return w;
}

csv::Writer export_h(const NmfModel& model, const text::Vocabulary& vocab) {
  std::vector<std::string> header{"topic"};
  header.insert(header.end(), vocab.terms().begin(), vocab.terms().end());
  csv::Writer w(std::move(header));
  for (Eigen::Index t = 0; t < model.H.rows(); ++t) {
    std::vector<std::string> row{fmt::format("topic_{}", t + 1)};
    for (Eigen::Index j = 0; j < model.H.cols(); ++j) row.push_back(csv::num(model.H(t, j)));
    w.row(std::move(row));
  }
  return w;
}

nlohmann::json sidecar(const NmfModel& model) {
  nlohmann::json j;
  j["k"] = model.config.k;
  j["iterations"] = model.iterations;
  j["converged"] = model.converged;
  j["final_objective"] = model.final_objective();
  j["init"] = to_string(model.config.init);
  if (model.config.init == Init::SeededRandom) {
    j["seed"] = model.config.seed;
  } else {
    j["seed"] = nullptr;
  }
  return j;
}

}  // namespace fomc::nmf
