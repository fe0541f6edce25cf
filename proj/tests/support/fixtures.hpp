#pragma once

// Synthetic inputs shared by the unit and acceptance suites.

#include <cstdint>
#include <filesystem>
#include <vector>

#include <Eigen/Dense>

#include "fomc/lda.hpp"
#include "fomc/random.hpp"
#include "fomc/termstructure.hpp"
#include "fomc/textprep.hpp"

namespace fixture {

inline const std::filesystem::path kSourceDir{FOMC_SOURCE_DIR};
inline const std::filesystem::path kSyntheticConfig = kSourceDir / "fixtures" / "synthetic" / "config.yaml";
inline const std::filesystem::path kGoldenDir = kSourceDir / "tests" / "golden" / "synthetic";

// Terms named t000, t001, ...; documents dated one day apart from 2000-01-03.
fomc::text::CountMatrix count_matrix(const fomc::text::CountArray& counts);

// Uniform counts in [0, max_count], each row and column nonzero.
fomc::text::CountArray random_counts(Eigen::Index rows, Eigen::Index cols, long max_count, fomc::Rng& rng);

// Documents drawn from disjoint vocabularies: block b owns terms
// [b * terms_per_block, (b + 1) * terms_per_block). Every document uses one
// block.
struct BlockSpec {
  int docs = 20;
  int terms_per_doc = 0;  // distinct block terms a document draws from; 0 for all
  int tokens_per_doc = 40;  // 0 puts each used term in the document once
};

struct PlantedCorpus {
  std::vector<fomc::text::TokenizedDocument> docs;
  std::vector<int> block_of_doc;
  int blocks = 0;
  int terms_per_block = 0;

  // Block of a term index in the sorted vocabulary.
  int block_of_term(const std::string& term) const;
};

// Documents are interleaved across blocks. Tokens follow weights decaying
// along the document's term list.
PlantedCorpus planted_corpus(const std::vector<BlockSpec>& blocks, int terms_per_block, std::uint64_t seed);
PlantedCorpus planted_corpus(int blocks, int docs_per_block, int terms_per_block, int tokens_per_doc,
                             std::uint64_t seed);

// Three blocks of six terms on which mean coherence over the six top words
// peaks at k = 3. Two large blocks hold documents using five of their six
// terms; a small block holds documents with every term once. At k = 2 NMF
// drops the small, fully coherent block; larger k only split the large ones.
PlantedCorpus three_block_corpus(std::uint64_t seed);

// Standard maturities in months: 3, 6, 12, 24, 36, 60, 84, 120, 240, 360.
Eigen::VectorXd maturities();

// Persistent three-factor model on the standard maturities.
fomc::curve::StateSpaceModel reference_model();

// 6, 36 and 120 months.
Eigen::VectorXd small_maturities();

// Three maturities, a non-diagonal transition and correlated shocks.
fomc::curve::StateSpaceModel small_model();

std::vector<fomc::Date> business_days(fomc::Date first, std::size_t n);

}  // namespace fixture
