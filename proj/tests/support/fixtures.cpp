#include "fixtures.hpp"

#include <fmt/format.h>

namespace fixture {

using fomc::Date;
using fomc::text::CountArray;

fomc::text::CountMatrix count_matrix(const CountArray& counts) {
  fomc::text::CountMatrix m;
  m.counts = counts;
  std::vector<std::string> terms;
  for (Eigen::Index j = 0; j < counts.cols(); ++j) terms.push_back(fmt::format("t{:03}", j));
  m.vocabulary = fomc::text::Vocabulary(terms);
  Date d(2000, 1, 3);
  for (Eigen::Index i = 0; i < counts.rows(); ++i) {
    m.docs.push_back({fmt::format("d{}", i), d});
    d = d.next_day();
  }
  return m;
}

CountArray random_counts(Eigen::Index rows, Eigen::Index cols, long max_count, fomc::Rng& rng) {
  CountArray c(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) c(i, j) = static_cast<long>(rng.index(static_cast<std::size_t>(max_count) + 1));
  }
  for (Eigen::Index i = 0; i < rows; ++i) {
    if (c.row(i).sum() == 0) c(i, static_cast<Eigen::Index>(rng.index(static_cast<std::size_t>(cols)))) = 1;
  }
  for (Eigen::Index j = 0; j < cols; ++j) {
    if (c.col(j).sum() == 0) c(static_cast<Eigen::Index>(rng.index(static_cast<std::size_t>(rows))), j) = 1;
  }
  return c;
}

int PlantedCorpus::block_of_term(const std::string& term) const {
  return std::stoi(term.substr(1)) / terms_per_block;
}

PlantedCorpus planted_corpus(const std::vector<BlockSpec>& blocks, int terms_per_block, std::uint64_t seed) {
  fomc::Rng rng(seed);
  PlantedCorpus out;
  out.blocks = static_cast<int>(blocks.size());
  out.terms_per_block = terms_per_block;
  Date d(2000, 1, 3);
  int max_docs = 0;
  for (const auto& b : blocks) max_docs = std::max(max_docs, b.docs);
  for (int i = 0; i < max_docs; ++i) {
    for (int b = 0; b < out.blocks; ++b) {
      const auto& spec = blocks[static_cast<std::size_t>(b)];
      if (i >= spec.docs) continue;
      // Shuffle the block's terms and keep the first terms_per_doc.
      std::vector<int> terms(static_cast<std::size_t>(terms_per_block));
      for (int j = 0; j < terms_per_block; ++j) terms[static_cast<std::size_t>(j)] = b * terms_per_block + j;
      const int used = spec.terms_per_doc > 0 ? spec.terms_per_doc : terms_per_block;
      if (used < terms_per_block) {
        for (std::size_t j = terms.size() - 1; j > 0; --j) std::swap(terms[j], terms[rng.index(j + 1)]);
      }
      std::vector<double> cdf(static_cast<std::size_t>(used));
      double total = 0.0;
      for (int j = 0; j < used; ++j) total += 1.0 / (1.0 + 0.3 * j);
      double acc = 0.0;
      for (int j = 0; j < used; ++j) {
        acc += 1.0 / (1.0 + 0.3 * j) / total;
        cdf[static_cast<std::size_t>(j)] = acc;
      }
      fomc::text::TokenizedDocument doc{{fmt::format("d{}", out.docs.size()), d}, {}};
      if (spec.tokens_per_doc == 0) {
        for (int j = 0; j < used; ++j) doc.tokens.push_back(fmt::format("t{:03}", terms[static_cast<std::size_t>(j)]));
      }
      for (int n = 0; n < spec.tokens_per_doc; ++n) {
        const double u = rng.uniform();
        int j = 0;
        while (j + 1 < used && u >= cdf[static_cast<std::size_t>(j)]) ++j;
        doc.tokens.push_back(fmt::format("t{:03}", terms[static_cast<std::size_t>(j)]));
      }
      out.docs.push_back(std::move(doc));
      out.block_of_doc.push_back(b);
      d = d.next_day();
    }
  }
  return out;
}

PlantedCorpus planted_corpus(int blocks, int docs_per_block, int terms_per_block, int tokens_per_doc,
                             std::uint64_t seed) {
  return planted_corpus(std::vector<BlockSpec>(static_cast<std::size_t>(blocks), {docs_per_block, 0, tokens_per_doc}),
                        terms_per_block, seed);
}

PlantedCorpus three_block_corpus(std::uint64_t seed) {
  return planted_corpus({{80, 5, 30}, {80, 5, 30}, {14, 0, 0}}, 6, seed);
}

Eigen::VectorXd maturities() {
  Eigen::VectorXd m(10);
  m << 3, 6, 12, 24, 36, 60, 84, 120, 240, 360;
  return m;
}

fomc::curve::StateSpaceModel reference_model() {
  fomc::curve::StateSpaceModel m;
  m.lambda = fomc::curve::kDefaultLambda;
  m.Z = fomc::curve::ns_loadings(maturities(), m.lambda).Z;
  m.T << 0.99, 0.01, 0.0, 0.0, 0.97, 0.02, 0.0, 0.0, 0.94;
  m.mu << 5.0, -1.0, -0.5;
  m.H = Eigen::VectorXd::LinSpaced(10, 0.02, 0.04).array().square();
  m.Q = Eigen::Vector3d(0.05, 0.06, 0.12).array().square().matrix().asDiagonal();
  m.a0 = m.mu;
  // Stationary covariance: vec(P) = (I - T (x) T)^{-1} vec(Q).
  Eigen::MatrixXd kron(9, 9);
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) kron.block<3, 3>(3 * i, 3 * j) = m.T(i, j) * m.T;
  }
  const Eigen::Map<const Eigen::VectorXd> q(m.Q.data(), 9);
  const Eigen::VectorXd p = (Eigen::MatrixXd::Identity(9, 9) - kron).lu().solve(q);
  m.P0 = Eigen::Map<const Eigen::Matrix3d>(p.data());
  return m;
}

Eigen::VectorXd small_maturities() {
  Eigen::VectorXd tau(3);
  tau << 6, 36, 120;
  return tau;
}

fomc::curve::StateSpaceModel small_model() {
  fomc::curve::StateSpaceModel m;
  m.lambda = fomc::curve::kDefaultLambda;
  m.Z = fomc::curve::ns_loadings(small_maturities(), m.lambda).Z;
  m.T << 0.9, 0.05, 0.0, -0.02, 0.8, 0.1, 0.0, 0.03, 0.7;
  m.mu << 4.0, -1.0, 0.5;
  m.H = Eigen::Vector3d(0.02, 0.05, 0.03);
  m.Q << 0.1, 0.02, 0.0, 0.02, 0.2, -0.03, 0.0, -0.03, 0.15;
  m.a0 << 4.2, -0.8, 0.3;
  m.P0 << 0.5, 0.1, 0.0, 0.1, 0.4, 0.05, 0.0, 0.05, 0.3;
  return m;
}

std::vector<Date> business_days(Date first, std::size_t n) {
  std::vector<Date> out;
  Date d = first;
  while (out.size() < n) {
    if (!d.is_weekend()) out.push_back(d);
    d = d.next_day();
  }
  return out;
}

}  // namespace fixture
