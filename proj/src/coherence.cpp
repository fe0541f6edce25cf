#include "fomc/coherence.hpp"

#include <cmath>

#include <fmt/format.h>

#include "fomc/error.hpp"
#include "fomc/nmf.hpp"

namespace fomc::coherence {

void CoherenceConfig::validate() const {
  if (top_n < 2) throw ValidationError(fmt::format("coherence N must be >= 2, got {}", top_n));
  if (!(epsilon > 0.0)) throw ValidationError("coherence epsilon must be > 0");
  if (k_min < 1 || k_max < k_min) {
    throw ValidationError(fmt::format("invalid k range [{}, {}]", k_min, k_max));
  }
}

DocFreqs doc_freqs(const text::CountMatrix& counts, std::span<const std::size_t> terms) {
  const auto n = static_cast<Eigen::Index>(terms.size());
  Eigen::MatrixXd present(counts.n_docs(), n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto j = static_cast<Eigen::Index>(terms[static_cast<std::size_t>(i)]);
    if (j >= counts.n_terms()) throw ValidationError(fmt::format("term index {} out of range", j));
    present.col(i) = (counts.counts.col(j).array() > 0).cast<double>().matrix();
  }
  DocFreqs out;
  out.pair = present.transpose() * present;
  out.single = out.pair.diagonal();
  return out;
}

DocFreqs doc_freqs(const text::CountMatrix& counts, const std::vector<std::string>& words) {
  std::vector<std::size_t> idx;
  idx.reserve(words.size());
  for (const auto& w : words) idx.push_back(counts.vocabulary.index(w));
  return doc_freqs(counts, idx);
}

namespace {

template <typename PairTerm>
double pair_sum(std::span<const std::size_t> top, const text::CountMatrix& counts, PairTerm&& term) {
  DocFreqs f = doc_freqs(counts, top);
  double total = 0.0;
  for (Eigen::Index i = 1; i < f.single.size(); ++i) {
    for (Eigen::Index j = 0; j < i; ++j) {
      if (f.single(j) <= 0.0) {
        throw ValidationError(fmt::format("term index {} occurs in no document", top[static_cast<std::size_t>(j)]));
      }
      total += term(f.pair(i, j), f.single(j));
    }
  }
  return total;
}

}  // namespace

double tc_lcp_raw(std::span<const std::size_t> top_terms, const text::CountMatrix& counts) {
  return pair_sum(top_terms, counts, [](double co, double dj) { return std::log((co + 1.0) / dj); });
}

double normalization(std::size_t n) { return 2.0 / (static_cast<double>(n) * static_cast<double>(n - 1)); }

double tc_lcp_star(std::span<const std::size_t> top_terms, const text::CountMatrix& counts, double epsilon) {
  if (top_terms.size() < 2) throw ValidationError("coherence needs at least two words");
  const double docs = static_cast<double>(counts.n_docs());
  double sum = pair_sum(top_terms, counts, [&](double co, double dj) {
    return std::log((co / docs + epsilon) / (dj / docs));
  });
  return normalization(top_terms.size()) * sum;
}

const KScore& CoherenceReport::at(int k) const {
  for (const auto& s : per_k) {
    if (s.k == k) return s;
  }
  throw ValidationError(fmt::format("k={} not in coherence report", k));
}

CoherenceReport select_k(const text::CountMatrix& counts, const CoherenceConfig& cfg, const TopicModeler& modeler) {
  cfg.validate();
  const auto limit = std::min(counts.n_docs(), counts.n_terms());
  if (cfg.k_max > limit) {
    throw ValidationError(fmt::format("k range [{}, {}] exceeds min(n, m)={}", cfg.k_min, cfg.k_max, limit));
  }
  if (cfg.top_n > static_cast<std::size_t>(counts.n_terms())) {
    throw ValidationError(fmt::format("coherence N={} exceeds vocabulary size {}", cfg.top_n, counts.n_terms()));
  }
  CoherenceReport report;
  for (int k = cfg.k_min; k <= cfg.k_max; ++k) {
    Eigen::MatrixXd topic_term = modeler(k);
    if (topic_term.rows() != k || topic_term.cols() != counts.n_terms()) {
      throw Error(fmt::format("topic model for k={} returned a {}x{} matrix", k, topic_term.rows(), topic_term.cols()));
    }
    KScore score;
    score.k = k;
    for (int t = 0; t < k; ++t) {
      auto top = nmf::top_terms(topic_term, t, cfg.top_n);
      score.topic_scores.push_back(tc_lcp_star(top, counts, cfg.epsilon));
      score.top_terms.push_back(std::move(top));
    }
    double sum = 0.0;
    for (double s : score.topic_scores) sum += s;
    score.mean = sum / static_cast<double>(k);
    if (report.per_k.empty() || score.mean > report.at(report.best_k).mean) report.best_k = k;
    report.per_k.push_back(std::move(score));
  }
  return report;
}

csv::Writer export_report(const CoherenceReport& report) {
  csv::Writer w({"k", "topic_id", "coherence", "mean_coherence"});
  for (const auto& s : report.per_k) {
    for (std::size_t t = 0; t < s.topic_scores.size(); ++t) {
      w.row({std::to_string(s.k), std::to_string(t + 1), csv::num(s.topic_scores[t]), csv::num(s.mean)});
    }
  }
  return w;
}

}  // namespace fomc::coherence
