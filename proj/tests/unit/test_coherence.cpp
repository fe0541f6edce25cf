#include <cmath>

#include <gtest/gtest.h>

#include "fixtures.hpp"
#include "fomc/coherence.hpp"
#include "fomc/error.hpp"
#include "fomc/nmf.hpp"
#include "oracles.hpp"

using namespace fomc;
using namespace fomc::coherence;
using Idx = std::vector<std::size_t>;

namespace {

text::CountMatrix from_sets(const std::vector<Idx>& docs, Eigen::Index terms) {
  text::CountArray c = text::CountArray::Zero(static_cast<Eigen::Index>(docs.size()), terms);
  for (std::size_t i = 0; i < docs.size(); ++i) {
    for (auto t : docs[i]) c(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(t)) += 1;
  }
  return fixture::count_matrix(c);
}

}  // namespace

TEST(DocFreqs, DirectCounts) {
  const auto m = from_sets({{0, 1}, {0}}, 2);
  const auto f = doc_freqs(m, std::vector<std::string>{"t000", "t001"});
  EXPECT_EQ(f.single(0), 2.0);
  EXPECT_EQ(f.single(1), 1.0);
  EXPECT_EQ(f.pair(0, 1), 1.0);
  EXPECT_EQ(f.pair(1, 0), 1.0);
  EXPECT_EQ(f.pair(0, 0), 2.0);
}

TEST(DocFreqs, MatchesSetIntersection) {
  Rng rng(31);
  const auto c = fixture::random_counts(10, 12, 1, rng);
  const auto m = fixture::count_matrix(c);
  const auto sets = oracle::doc_sets(c);
  const Idx terms{0, 3, 5, 7, 11};
  const auto f = doc_freqs(m, terms);
  for (std::size_t i = 0; i < terms.size(); ++i) {
    for (std::size_t j = 0; j < terms.size(); ++j) {
      EXPECT_EQ(f.pair(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)),
                oracle::doc_count(sets, {terms[i], terms[j]}));
    }
  }
}

TEST(TcLcpRaw, TwoWordCases) {
  // D(w1)=5, D(w1,w2)=4: ln((4+1)/5) = 0.
  std::vector<Idx> docs{{0, 1}, {0, 1}, {0, 1}, {0, 1}, {0}};
  EXPECT_NEAR(tc_lcp_raw(Idx{0, 1}, from_sets(docs, 2)), 0.0, 1e-15);
  // D(w1)=10 with no co-occurrence: ln(1/10).
  std::vector<Idx> apart(10, Idx{0});
  apart.push_back({1});
  EXPECT_NEAR(tc_lcp_raw(Idx{0, 1}, from_sets(apart, 2)), std::log(0.1), 1e-15);
}

TEST(TcLcpRaw, MatchesNestedLoops) {
  Rng rng(32);
  const auto c = fixture::random_counts(8, 9, 1, rng);
  const Idx top{4, 0, 8, 2};
  EXPECT_NEAR(tc_lcp_raw(top, fixture::count_matrix(c)), oracle::lcp_raw(oracle::doc_sets(c), top), 1e-12);
}

TEST(TcLcpStar, NormalizationAndBounds) {
  EXPECT_EQ(normalization(15), 1.0 / 105.0);
  EXPECT_EQ(normalization(2), 1.0);
  std::vector<Idx> together{{0, 1}, {0, 1}, {2}};
  const double s = tc_lcp_star(Idx{0, 1}, from_sets(together, 3), 1e-12);
  EXPECT_GT(s, 0.0);
  EXPECT_LT(s, 1e-10);
}

TEST(TcLcpStar, MatchesNestedLoops) {
  Rng rng(33);
  const auto c = fixture::random_counts(12, 15, 2, rng);
  const auto sets = oracle::doc_sets(c);
  for (const Idx& top : {Idx{1, 2, 3, 4, 5}, Idx{14, 7, 0}, Idx{9, 8, 13, 6, 10, 11}}) {
    EXPECT_NEAR(tc_lcp_star(top, fixture::count_matrix(c), 1e-12), oracle::lcp_star(sets, top, 1e-12), 1e-12);
  }
}

TEST(TcLcp, UnseenTermIsAnError) {
  const auto m = from_sets({{0}, {0}}, 2);
  EXPECT_THROW(tc_lcp_star(Idx{1, 0}, m, 1e-12), Error);
}

TEST(SelectK, SingletonRange) {
  Rng rng(34);
  const auto m = fixture::count_matrix(fixture::random_counts(10, 12, 3, rng));
  CoherenceConfig cfg;
  cfg.top_n = 4;
  cfg.k_min = cfg.k_max = 2;
  int calls = 0;
  const auto report = select_k(m, cfg, [&](int k) {
    ++calls;
    nmf::NmfConfig c;
    c.k = k;
    return nmf::fit(text::tfidf(m), c).H;
  });
  EXPECT_EQ(report.best_k, 2);
  EXPECT_EQ(calls, 1);
  ASSERT_EQ(report.per_k.size(), 1u);
  EXPECT_EQ(report.at(2).topic_scores.size(), 2u);
}

TEST(SelectK, TiesGoToSmallerK) {
  const auto m = from_sets({{0, 1}, {0, 1}, {2, 3}, {2, 3}}, 4);
  CoherenceConfig cfg;
  cfg.top_n = 2;
  cfg.k_min = 1;
  cfg.k_max = 2;
  // Both k score the same single topic.
  const auto report = select_k(m, cfg, [](int k) {
    Eigen::MatrixXd h = Eigen::MatrixXd::Zero(k, 4);
    h.row(0) << 1.0, 0.5, 0.0, 0.0;
    if (k == 2) h.row(1) << 1.0, 0.5, 0.0, 0.0;
    return h;
  });
  EXPECT_EQ(report.best_k, 1);
}

TEST(SelectK, PlantedBlocksPickTheirCount) {
  const auto corpus = fixture::three_block_corpus(35);
  const auto counts = text::build_matrix(corpus.docs);
  const auto A = text::tfidf(counts);
  CoherenceConfig cfg;
  cfg.top_n = 6;
  cfg.k_min = 2;
  cfg.k_max = 6;
  const auto report = select_k(counts, cfg, [&](int k) {
    nmf::NmfConfig c;
    c.k = k;
    return nmf::fit(A, c).H;
  });
  EXPECT_EQ(report.best_k, 3);
  for (int k : {2, 4, 5, 6}) EXPECT_LT(report.at(k).mean, report.at(3).mean) << "k=" << k;
}

TEST(SelectK, ConfigValidation) {
  CoherenceConfig cfg;
  cfg.k_min = 5;
  cfg.k_max = 4;
  EXPECT_THROW(cfg.validate(), ValidationError);
  cfg.k_max = 6;
  cfg.top_n = 1;
  EXPECT_THROW(cfg.validate(), ValidationError);
}
