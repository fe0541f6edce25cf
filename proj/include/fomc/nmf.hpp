#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "fomc/csv.hpp"
#include "fomc/textprep.hpp"

namespace fomc::nmf {

enum class Init { Nndsvd, SeededRandom };

std::string to_string(Init init);
Init parse_init(const std::string& name);

struct NmfConfig {
  int k = 3;
  int max_iter = 1000;
  double rel_tol = 1e-6;
  Init init = Init::Nndsvd;
  std::uint64_t seed = 0;  // SeededRandom only
  double denom_guard = 1e-12;

  void validate() const;
};

struct NmfModel {
  Eigen::MatrixXd W;  // documents x topics
  Eigen::MatrixXd H;  // topics x terms
  std::vector<double> objective_trace;  // objective at init, then after each step
  int iterations = 0;
  bool converged = false;
  NmfConfig config;

  double final_objective() const { return objective_trace.back(); }
};

// 1/2 ||A - WH||_F^2. Throws ValidationError on non-conformable shapes.
double objective(const Eigen::MatrixXd& A, const Eigen::MatrixXd& W, const Eigen::MatrixXd& H);

// One Lee-Seung step: H first, then W against the updated H.
//   H' = H .* (W^T A) ./ (W^T W H + guard)
//   W' = W .* (A H'^T) ./ (W H' H'^T + guard)
// Updates W and H in place. Throws NumericalError if a result is not finite.
void update_step(const Eigen::MatrixXd& A, Eigen::MatrixXd& W, Eigen::MatrixXd& H, double guard);

// Nonnegative double SVD starting point (Boutsidis & Gallopoulos); entries
// below `floor` are raised to it so the multiplicative updates can move them.
void nndsvd(const Eigen::MatrixXd& A, int k, double floor, Eigen::MatrixXd& W, Eigen::MatrixXd& H);

NmfModel fit(const Eigen::MatrixXd& A, const NmfConfig& cfg);
inline NmfModel fit(const text::WeightedDocTermMatrix& A, const NmfConfig& cfg) { return fit(A.weights, cfg); }

// Column indices of the N largest entries of row `topic`, descending, ties
// broken by the smaller index.
std::vector<std::size_t> top_terms(const Eigen::MatrixXd& topic_term, Eigen::Index topic, std::size_t n);

// W with one row per document date; H with term-labelled columns.
csv::Writer export_w(const NmfModel& model, const std::vector<text::DocKey>& docs);
csv::Writer export_h(const NmfModel& model, const text::Vocabulary& vocab);
nlohmann::json sidecar(const NmfModel& model);

}  // namespace fomc::nmf
