#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "fomc/csv.hpp"
#include "fomc/random.hpp"
#include "fomc/textprep.hpp"

namespace fomc::lda {

// Token streams as vocabulary indices, in document order.
struct LdaCorpus {
  std::vector<std::vector<int>> docs;
  int vocab_size = 0;

  std::size_t total_tokens() const;
};

// Tokens missing from `vocab` are skipped.
LdaCorpus make_corpus(std::span<const text::TokenizedDocument> docs, const text::Vocabulary& vocab);

struct LdaConfig {
  int K = 3;
  double alpha = 50.0 / 3.0;
  double eta = 0.025;
  int burn_in = 500;
  int sweeps = 2000;  // total, burn-in included
  std::uint64_t seed = 0;

  // alpha = 50/K, eta = 0.025.
  static LdaConfig with_default_priors(int K, std::uint64_t seed);
  void validate() const;
};

using CountTable = Eigen::Matrix<long, Eigen::Dynamic, Eigen::Dynamic>;
using CountVector = Eigen::Matrix<long, Eigen::Dynamic, 1>;

struct GibbsState {
  std::vector<std::vector<int>> z;  // topic of every token
  CountTable n_dk;                  // documents x topics
  CountTable n_kw;                  // topics x terms
  CountVector n_k;                  // tokens per topic
  CountVector n_d;                  // tokens per document

  // Recounts from `z` and compares; throws NumericalError on any mismatch.
  void check(const LdaCorpus& corpus) const;
};

// Source of uniform draws on [0, 1).
using UniformSource = std::function<double()>;

GibbsState init_state(const LdaCorpus& corpus, const LdaConfig& cfg, const UniformSource& draw);
GibbsState init_state(const LdaCorpus& corpus, const LdaConfig& cfg, Rng& rng);

// Unnormalised full conditional of token (d, n) given all other
// assignments: (n_dk + alpha)(n_kw + eta)/(n_k + M eta) with the token's own
// counts excluded.
Eigen::VectorXd full_conditional(const GibbsState& state, const LdaCorpus& corpus, const LdaConfig& cfg,
                                 std::size_t d, std::size_t n);

// Resamples one token with uniform draw `u`; returns the new topic.
int resample_token(GibbsState& state, const LdaCorpus& corpus, const LdaConfig& cfg, std::size_t d,
                   std::size_t n, double u);

// One pass over every token in corpus order.
void gibbs_sweep(GibbsState& state, const LdaCorpus& corpus, const LdaConfig& cfg, const UniformSource& draw);
void gibbs_sweep(GibbsState& state, const LdaCorpus& corpus, const LdaConfig& cfg, Rng& rng);

struct LdaPosterior {
  Eigen::MatrixXd theta;  // documents x topics
  Eigen::MatrixXd beta;   // topics x terms
};

// theta_dk = (n_dk + alpha)/(N_d + K alpha); beta_kw = (n_kw + eta)/(n_k + M eta)
LdaPosterior estimate(const GibbsState& state, const LdaConfig& cfg);

struct LdaFit {
  GibbsState state;
  LdaPosterior posterior;
  LdaConfig config;
};

// Runs cfg.sweeps sweeps from a seeded start and estimates from the final
// state.
LdaFit fit_lda(const LdaCorpus& corpus, const LdaConfig& cfg);

csv::Writer export_theta(const LdaPosterior& post, const std::vector<text::DocKey>& docs);
csv::Writer export_beta(const LdaPosterior& post, const text::Vocabulary& vocab);
nlohmann::json sidecar(const LdaConfig& cfg);

}  // namespace fomc::lda
