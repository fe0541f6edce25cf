#pragma once

#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include <Eigen/Dense>

#include "fomc/csv.hpp"
#include "fomc/dates.hpp"

namespace fomc::text {

struct RawDocument {
  std::string id;
  Date date;
  std::string text;
};

// Identifies a matrix row.
struct DocKey {
  std::string id;
  Date date;
};

// One suffix rewrite. The rule fires when the token ends with `suffix` and
// at least `min_stem` characters precede it.
struct LemmaRule {
  std::string suffix;
  std::string replacement;
  std::size_t min_stem = 0;
};

struct PreprocessConfig {
  std::unordered_set<std::string> stopwords;
  std::unordered_set<std::string> names;
  std::vector<std::string> voting_markers;
  std::vector<LemmaRule> lemma_rules;                        // first match wins
  std::unordered_map<std::string, std::string> lemma_exceptions;  // checked before rules

  // Every entry must be lowercase; throws ValidationError otherwise.
  void validate() const;

  // Line-oriented UTF-8 tables; '#' starts a comment line.
  static PreprocessConfig load(const std::filesystem::path& stopwords,
                               const std::filesystem::path& names,
                               const std::filesystem::path& markers,
                               const std::filesystem::path& lemma_rules);
};

// Parses the lemma table format:
//   = WORD LEMMA                  exception entry
//   SUFFIX REPLACEMENT MIN_STEM   rule; '-' stands for the empty string
void parse_lemma_table(std::string_view text, PreprocessConfig& cfg);

// Lowercase by Unicode simple case mapping.
std::string to_lower(std::string_view utf8);
// Maximal runs of Unicode letters; everything else separates tokens.
std::vector<std::string> tokenize(std::string_view utf8);
std::string lemmatize(const std::string& token, const PreprocessConfig& cfg);
// Text before the earliest occurrence of any marker (markers are lowercase;
// matching is against the lowercased text).
std::string strip_voting_section(std::string_view lowered, const std::vector<std::string>& markers);

// strip voting section -> lowercase -> tokenize -> drop stopwords and names
// -> lemmatize. Throws ValidationError for empty text or an empty result.
std::vector<std::string> preprocess(const RawDocument& doc, const PreprocessConfig& cfg);

// Reads every YYYY-MM-DD.txt in `dir`, sorted by date.
std::vector<RawDocument> load_corpus(const std::filesystem::path& dir);

struct TokenizedDocument {
  DocKey key;
  std::vector<std::string> tokens;
};

class Vocabulary {
 public:
  Vocabulary() = default;
  // Sorts and deduplicates.
  explicit Vocabulary(std::vector<std::string> terms);

  const std::vector<std::string>& terms() const { return terms_; }
  std::size_t size() const { return terms_.size(); }
  const std::string& term(std::size_t j) const { return terms_.at(j); }
  // Column of `term`; throws ValidationError for unknown terms.
  std::size_t index(const std::string& term) const;
  bool contains(const std::string& term) const { return index_.count(term) > 0; }

 private:
  std::vector<std::string> terms_;
  std::map<std::string, std::size_t> index_;
};

using CountArray = Eigen::Matrix<long, Eigen::Dynamic, Eigen::Dynamic>;

struct CountMatrix {
  CountArray counts;  // documents x terms
  Vocabulary vocabulary;
  std::vector<DocKey> docs;

  Eigen::Index n_docs() const { return counts.rows(); }
  Eigen::Index n_terms() const { return counts.cols(); }
  // Number of documents with a positive count per term.
  Eigen::VectorXd document_frequency() const;
};

struct BuildOptions {
  std::size_t min_df = 1;  // drop terms appearing in fewer documents
};

// Throws ValidationError if a document has no tokens, before or after the
// document-frequency floor.
CountMatrix build_matrix(std::span<const TokenizedDocument> corpus, const BuildOptions& opts = {});

struct WeightedDocTermMatrix {
  Eigen::MatrixXd weights;  // documents x terms
  Vocabulary vocabulary;
  std::vector<DocKey> docs;
};

// w(n,m) = (1 + ln c) * (ln(D / df) + 1) for c > 0, else 0.
WeightedDocTermMatrix tfidf(const CountMatrix& counts);

// Header "date,<terms...>", one row per document.
csv::Writer export_matrix(const WeightedDocTermMatrix& m);

}  // namespace fomc::text
