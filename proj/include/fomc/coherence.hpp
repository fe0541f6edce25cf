#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "fomc/csv.hpp"
#include "fomc/textprep.hpp"

namespace fomc::coherence {

// UMass-style topic coherence from document co-occurrence counts.

struct CoherenceConfig {
  std::size_t top_n = 15;
  double epsilon = 1e-12;
  int k_min = 3;
  int k_max = 30;

  void validate() const;
};

// Document frequencies of a word list. `pair(i, j)` counts documents that
// contain both words i and j; the diagonal equals `single`.
struct DocFreqs {
  Eigen::VectorXd single;
  Eigen::MatrixXd pair;
};

DocFreqs doc_freqs(const text::CountMatrix& counts, std::span<const std::size_t> terms);
DocFreqs doc_freqs(const text::CountMatrix& counts, const std::vector<std::string>& words);

// sum_{i>=2} sum_{j<i} ln((D(w_i, w_j) + 1) / D(w_j)), words ordered by
// descending topic weight.
double tc_lcp_raw(std::span<const std::size_t> top_terms, const text::CountMatrix& counts);

// 2/(N(N-1)) sum_{i>=2} sum_{j<i} ln((P(w_i, w_j) + eps) / P(w_j)) with
// probabilities taken as document frequencies over the corpus size.
double tc_lcp_star(std::span<const std::size_t> top_terms, const text::CountMatrix& counts, double epsilon);

// 2 / (N (N - 1))
double normalization(std::size_t n);

struct KScore {
  int k = 0;
  std::vector<double> topic_scores;
  double mean = 0.0;
  std::vector<std::vector<std::size_t>> top_terms;
};

struct CoherenceReport {
  std::vector<KScore> per_k;  // ascending k
  int best_k = 0;

  const KScore& at(int k) const;
};

// Fits a model with k topics and returns its k x M topic-term weights
// (NMF: H, LDA: beta). Must be deterministic for select_k to be.
using TopicModeler = std::function<Eigen::MatrixXd(int k)>;

// Scores every k in [k_min, k_max] by mean TC-LCP* over topics; the largest
// mean wins, ties going to the smaller k.
CoherenceReport select_k(const text::CountMatrix& counts, const CoherenceConfig& cfg, const TopicModeler& modeler);

// Columns k, topic_id, coherence, mean_coherence.
csv::Writer export_report(const CoherenceReport& report);

}  // namespace fomc::coherence
