#include "fomc/lda.hpp"

#include <cmath>

#include <fmt/format.h>

#include "fomc/error.hpp"

namespace fomc::lda {

std::size_t LdaCorpus::total_tokens() const {
  std::size_t n = 0;
  for (const auto& d : docs) n += d.size();
  return n;
}

LdaCorpus make_corpus(std::span<const text::TokenizedDocument> docs, const text::Vocabulary& vocab) {
  LdaCorpus out;
  out.vocab_size = static_cast<int>(vocab.size());
  for (const auto& doc : docs) {
    std::vector<int> ids;
    for (const auto& t : doc.tokens) {
      if (vocab.contains(t)) ids.push_back(static_cast<int>(vocab.index(t)));
    }
    out.docs.push_back(std::move(ids));
  }
  return out;
}

LdaConfig LdaConfig::with_default_priors(int K, std::uint64_t seed) {
  LdaConfig cfg;
  cfg.K = K;
  cfg.alpha = 50.0 / K;
  cfg.eta = 0.025;
  cfg.seed = seed;
  return cfg;
}

void LdaConfig::validate() const {
  if (K < 1) throw ValidationError(fmt::format("LDA K must be >= 1, got {}", K));
  if (!(alpha > 0.0) || !(eta > 0.0)) throw ValidationError("LDA alpha and eta must be > 0");
  if (burn_in < 0 || sweeps <= burn_in) {
    throw ValidationError(fmt::format("LDA needs sweeps > burn_in >= 0 (sweeps={}, burn_in={})", sweeps, burn_in));
  }
}

void GibbsState::check(const LdaCorpus& corpus) const {
  const auto D = static_cast<Eigen::Index>(corpus.docs.size());
  CountTable dk = CountTable::Zero(D, n_dk.cols());
  CountTable kw = CountTable::Zero(n_kw.rows(), n_kw.cols());
  for (Eigen::Index d = 0; d < D; ++d) {
    const auto& words = corpus.docs[static_cast<std::size_t>(d)];
    const auto& topics = z[static_cast<std::size_t>(d)];
    if (words.size() != topics.size()) throw NumericalError("LDA state: assignment length mismatch");
    for (std::size_t n = 0; n < words.size(); ++n) {
      ++dk(d, topics[n]);
      ++kw(topics[n], words[n]);
    }
  }
  if (dk != n_dk || kw != n_kw) throw NumericalError("LDA state: count tables disagree with assignments");
  if (n_k != n_kw.rowwise().sum() || n_d != n_dk.rowwise().sum()) {
    throw NumericalError("LDA state: marginal totals disagree with count tables");
  }
  if ((n_dk.array() < 0).any() || (n_kw.array() < 0).any()) throw NumericalError("LDA state: negative count");
}

GibbsState init_state(const LdaCorpus& corpus, const LdaConfig& cfg, const UniformSource& draw) {
  cfg.validate();
  if (corpus.docs.empty() || corpus.total_tokens() == 0) throw ValidationError("LDA corpus is empty");
  const auto D = static_cast<Eigen::Index>(corpus.docs.size());
  GibbsState s;
  s.n_dk = CountTable::Zero(D, cfg.K);
  s.n_kw = CountTable::Zero(cfg.K, corpus.vocab_size);
  s.n_k = CountVector::Zero(cfg.K);
  s.n_d = CountVector::Zero(D);
  s.z.resize(corpus.docs.size());
  for (Eigen::Index d = 0; d < D; ++d) {
    const auto& words = corpus.docs[static_cast<std::size_t>(d)];
    auto& topics = s.z[static_cast<std::size_t>(d)];
    topics.resize(words.size());
    for (std::size_t n = 0; n < words.size(); ++n) {
      int k = static_cast<int>(draw() * cfg.K);
      if (k >= cfg.K) k = cfg.K - 1;
      topics[n] = k;
      ++s.n_dk(d, k);
      ++s.n_kw(k, words[n]);
      ++s.n_k(k);
      ++s.n_d(d);
    }
  }
  return s;
}

GibbsState init_state(const LdaCorpus& corpus, const LdaConfig& cfg, Rng& rng) {
  return init_state(corpus, cfg, [&rng] { return rng.uniform(); });
}

Eigen::VectorXd full_conditional(const GibbsState& s, const LdaCorpus& corpus, const LdaConfig& cfg,
                                 std::size_t d, std::size_t n) {
  const int w = corpus.docs[d][n];
  const int own = s.z[d][n];
  const double m_eta = corpus.vocab_size * cfg.eta;
  const auto di = static_cast<Eigen::Index>(d);
  Eigen::VectorXd p(cfg.K);
  for (int k = 0; k < cfg.K; ++k) {
    const long self = k == own ? 1 : 0;
    p(k) = (static_cast<double>(s.n_dk(di, k) - self) + cfg.alpha) *
           (static_cast<double>(s.n_kw(k, w) - self) + cfg.eta) /
           (static_cast<double>(s.n_k(k) - self) + m_eta);
  }
  return p;
}

int resample_token(GibbsState& s, const LdaCorpus& corpus, const LdaConfig& cfg, std::size_t d, std::size_t n,
                   double u) {
  const int w = corpus.docs[d][n];
  const auto di = static_cast<Eigen::Index>(d);
  int k = s.z[d][n];
  --s.n_dk(di, k);
  --s.n_kw(k, w);
  --s.n_k(k);
  if (s.n_dk(di, k) < 0 || s.n_kw(k, w) < 0 || s.n_k(k) < 0) {
    throw NumericalError(fmt::format("LDA: negative count at document {}, token {}", d, n));
  }

  const double m_eta = corpus.vocab_size * cfg.eta;
  thread_local std::vector<double> cum;
  cum.resize(static_cast<std::size_t>(cfg.K));
  double total = 0.0;
  for (int t = 0; t < cfg.K; ++t) {
    total += (static_cast<double>(s.n_dk(di, t)) + cfg.alpha) * (static_cast<double>(s.n_kw(t, w)) + cfg.eta) /
             (static_cast<double>(s.n_k(t)) + m_eta);
    cum[static_cast<std::size_t>(t)] = total;
  }
  if (!(total > 0.0) || !std::isfinite(total)) {
    throw NumericalError(fmt::format("LDA: degenerate full conditional at document {}, token {}", d, n));
  }
  const double target = u * total;
  k = cfg.K - 1;
  for (int t = 0; t < cfg.K; ++t) {
    if (target < cum[static_cast<std::size_t>(t)]) {
      k = t;
      break;
    }
  }
  s.z[d][n] = k;
  ++s.n_dk(di, k);
  ++s.n_kw(k, w);
  ++s.n_k(k);
  return k;
}

void gibbs_sweep(GibbsState& s, const LdaCorpus& corpus, const LdaConfig& cfg, const UniformSource& draw) {
  for (std::size_t d = 0; d < corpus.docs.size(); ++d) {
    for (std::size_t n = 0; n < corpus.docs[d].size(); ++n) resample_token(s, corpus, cfg, d, n, draw());
  }
}

void gibbs_sweep(GibbsState& s, const LdaCorpus& corpus, const LdaConfig& cfg, Rng& rng) {
  for (std::size_t d = 0; d < corpus.docs.size(); ++d) {
    for (std::size_t n = 0; n < corpus.docs[d].size(); ++n) resample_token(s, corpus, cfg, d, n, rng.uniform());
  }
}

LdaPosterior estimate(const GibbsState& s, const LdaConfig& cfg) {
  const auto D = s.n_dk.rows();
  const auto M = s.n_kw.cols();
  LdaPosterior post;
  post.theta.resize(D, cfg.K);
  post.beta.resize(cfg.K, M);
  for (Eigen::Index d = 0; d < D; ++d) {
    const double denom = static_cast<double>(s.n_d(d)) + cfg.K * cfg.alpha;
    for (int k = 0; k < cfg.K; ++k) post.theta(d, k) = (static_cast<double>(s.n_dk(d, k)) + cfg.alpha) / denom;
  }
  for (int k = 0; k < cfg.K; ++k) {
    const double denom = static_cast<double>(s.n_k(k)) + static_cast<double>(M) * cfg.eta;
    for (Eigen::Index w = 0; w < M; ++w) post.beta(k, w) = (static_cast<double>(s.n_kw(k, w)) + cfg.eta) / denom;
  }
  return post;
}

LdaFit fit_lda(const LdaCorpus& corpus, const LdaConfig& cfg) {
  cfg.validate();
  Rng rng(cfg.seed);
  LdaFit fit{init_state(corpus, cfg, rng), {}, cfg};
  for (int sweep = 0; sweep < cfg.sweeps; ++sweep) gibbs_sweep(fit.state, corpus, cfg, rng);
  fit.posterior = estimate(fit.state, cfg);
  return fit;
}

csv::Writer export_theta(const LdaPosterior& post, const std::vector<text::DocKey>& docs) {
  std::vector<std::string> header{"date"};
  for (Eigen::Index k = 0; k < post.theta.cols(); ++k) header.push_back(fmt::format("topic_{}", k + 1));
  csv::Writer w(std::move(header));
  for (Eigen::Index d = 0; d < post.theta.rows(); ++d) {
    std::vector<std::string> row{docs.at(static_cast<std::size_t>(d)).date.iso()};
    for (Eigen::Index k = 0; k < post.theta.cols(); ++k) row.push_back(csv::num(post.theta(d, k)));
    w.row(std::move(row));
  }
  return w;
}

csv::Writer export_beta(const LdaPosterior& post, const text::Vocabulary& vocab) {
  std::vector<std::string> header{"topic"};
  header.insert(header.end(), vocab.terms().begin(), vocab.terms().end());
  csv::Writer w(std::move(header));
  for (Eigen::Index k = 0; k < post.beta.rows(); ++k) {
    std::vector<std::string> row{fmt::format("topic_{}", k + 1)};
    for (Eigen::Index j = 0; j < post.beta.cols(); ++j) row.push_back(csv::num(post.beta(k, j)));
    w.row(std::move(row));
  }
  return w;
}

nlohmann::json sidecar(const LdaConfig& cfg) {
  return {{"K", cfg.K}, {"alpha", cfg.alpha}, {"eta", cfg.eta},
          {"sweeps", cfg.sweeps}, {"burn_in", cfg.burn_in}, {"seed", cfg.seed}};
}

}  // namespace fomc::lda
