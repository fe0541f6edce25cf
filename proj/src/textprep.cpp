#include "fomc/textprep.hpp"

#include <algorithm>
#include <clocale>
#include <cmath>
#include <fstream>
#include <sstream>
#include <wctype.h>
#include <locale.h>

#include <fmt/format.h>

#include "fomc/error.hpp"

namespace fomc::text {

namespace {

// UTF-8 ctype locale shared by all threads; iswalpha_l/towlower_l take it
// explicitly so the global locale is never touched.
locale_t utf8_locale() {
  static locale_t loc = [] {
    locale_t l = newlocale(LC_CTYPE_MASK, "C.UTF-8", static_cast<locale_t>(nullptr));
    if (l == static_cast<locale_t>(nullptr)) l = newlocale(LC_CTYPE_MASK, "C.utf8", static_cast<locale_t>(nullptr));
    return l;
  }();
  return loc;
}

constexpr char32_t kReplacement = 0xFFFD;

// Decodes one code point starting at `i` and advances `i`. Malformed
// sequences decode to U+FFFD, which is not a letter.
char32_t decode(std::string_view s, std::size_t& i) {
  auto b0 = static_cast<unsigned char>(s[i]);
  if (b0 < 0x80) {
    ++i;
    return b0;
  }
  int len = (b0 >> 5) == 0x6 ? 2 : (b0 >> 4) == 0xE ? 3 : (b0 >> 3) == 0x1E ? 4 : 0;
  if (len == 0 || i + len > s.size()) {
    ++i;
    return kReplacement;
  }
  char32_t cp = b0 & (0x7F >> len);
  for (int k = 1; k < len; ++k) {
    auto b = static_cast<unsigned char>(s[i + k]);
    if ((b & 0xC0) != 0x80) {
      ++i;
      return kReplacement;
    }
    cp = (cp << 6) | (b & 0x3F);
  }
  i += len;
  return cp;
}

void encode(char32_t cp, std::string& out) {
  if (cp < 0x80) {
    out.push_back(static_cast<char>(cp));
  } else if (cp < 0x800) {
    out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else if (cp < 0x10000) {
    out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else {
    out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  }
}

bool is_letter(char32_t cp) {
  if (cp < 0x80) return (cp >= 'a' && cp <= 'z') || (cp >= 'A' && cp <= 'Z');
  if (cp == kReplacement) return false;
  return iswalpha_l(static_cast<wint_t>(cp), utf8_locale()) != 0;
}

char32_t lower(char32_t cp) {
  if (cp < 0x80) return (cp >= 'A' && cp <= 'Z') ? cp + 32 : cp;
  return static_cast<char32_t>(towlower_l(static_cast<wint_t>(cp), utf8_locale()));
}

std::size_t codepoints(std::string_view s) {
  return static_cast<std::size_t>(
      std::count_if(s.begin(), s.end(), [](char c) { return (static_cast<unsigned char>(c) & 0xC0) != 0x80; }));
}

std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError(fmt::format("cannot open '{}'", path.string()));
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Non-empty, non-comment lines with surrounding whitespace removed.
std::vector<std::string> table_lines(std::string_view text) {
  std::vector<std::string> out;
  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) {
    auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    auto last = line.find_last_not_of(" \t\r");
    out.push_back(line.substr(first, last - first + 1));
  }
  return out;
}

bool is_lowercase(const std::string& s) { return to_lower(s) == s; }

}  // namespace

void PreprocessConfig::validate() const {
  auto check = [](const std::string& entry, std::string_view table) {
    if (!is_lowercase(entry)) {
      throw ValidationError(fmt::format("{} entry '{}' is not lowercase", table, entry));
    }
  };
  for (const auto& w : stopwords) check(w, "stopword");
  for (const auto& w : names) check(w, "name");
  for (const auto& m : voting_markers) {
    check(m, "voting marker");
    if (m.empty()) throw ValidationError("empty voting marker");
  }
  for (const auto& r : lemma_rules) {
    check(r.suffix, "lemma rule");
    check(r.replacement, "lemma rule");
    if (r.suffix.empty()) throw ValidationError("lemma rule with empty suffix");
  }
  for (const auto& [w, l] : lemma_exceptions) {
    check(w, "lemma exception");
    check(l, "lemma exception");
  }
}

void parse_lemma_table(std::string_view text, PreprocessConfig& cfg) {
  for (const auto& line : table_lines(text)) {
    std::istringstream fields(line);
    std::string a, b, c, extra;
    fields >> a >> b >> c >> extra;
    if (a == "=") {
      if (b.empty() || c.empty() || !extra.empty()) {
        throw ValidationError(fmt::format("malformed lemma exception '{}'", line));
      }
      cfg.lemma_exceptions[b] = c;
      continue;
    }
    if (a.empty() || b.empty() || c.empty() || !extra.empty()) {
      throw ValidationError(fmt::format("malformed lemma rule '{}'", line));
    }
    std::size_t min_stem = 0;
    try {
      std::size_t used = 0;
      min_stem = std::stoul(c, &used);
      if (used != c.size()) throw std::invalid_argument(c);
    } catch (const std::exception&) {
      throw ValidationError(fmt::format("malformed lemma rule '{}': bad stem length", line));
    }
    cfg.lemma_rules.push_back({a, b == "-" ? std::string{} : b, min_stem});
  }
}

PreprocessConfig PreprocessConfig::load(const std::filesystem::path& stopwords,
                                        const std::filesystem::path& names,
                                        const std::filesystem::path& markers,
                                        const std::filesystem::path& lemma_rules) {
  PreprocessConfig cfg;
  for (auto& w : table_lines(slurp(stopwords))) cfg.stopwords.insert(std::move(w));
  for (auto& w : table_lines(slurp(names))) cfg.names.insert(std::move(w));
  cfg.voting_markers = table_lines(slurp(markers));
  parse_lemma_table(slurp(lemma_rules), cfg);
  cfg.validate();
  return cfg;
}

std::string to_lower(std::string_view utf8) {
  std::string out;
  out.reserve(utf8.size());
  for (std::size_t i = 0; i < utf8.size();) {
    std::size_t start = i;
    char32_t cp = decode(utf8, i);
    if (cp == kReplacement) {
      out.append(utf8.substr(start, i - start));
    } else {
      encode(lower(cp), out);
    }
  }
  return out;
}

std::vector<std::string> tokenize(std::string_view utf8) {
  std::vector<std::string> tokens;
  std::string current;
  for (std::size_t i = 0; i < utf8.size();) {
    char32_t cp = decode(utf8, i);
    if (is_letter(cp)) {
      encode(cp, current);
    } else if (!current.empty()) {
      tokens.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

std::string lemmatize(const std::string& token, const PreprocessConfig& cfg) {
  if (auto it = cfg.lemma_exceptions.find(token); it != cfg.lemma_exceptions.end()) return it->second;
  for (const auto& rule : cfg.lemma_rules) {
    if (token.size() < rule.suffix.size()) continue;
    if (token.compare(token.size() - rule.suffix.size(), rule.suffix.size(), rule.suffix) != 0) continue;
    std::string_view stem(token.data(), token.size() - rule.suffix.size());
    if (codepoints(stem) < rule.min_stem) continue;
    return std::string(stem) + rule.replacement;
  }
  return token;
}

std::string strip_voting_section(std::string_view lowered, const std::vector<std::string>& markers) {
  std::size_t cut = lowered.size();
  for (const auto& m : markers) {
    cut = std::min(cut, lowered.find(m));
  }
  return std::string(lowered.substr(0, cut));
}

std::vector<std::string> preprocess(const RawDocument& doc, const PreprocessConfig& cfg) {
  if (doc.text.empty()) throw ValidationError(fmt::format("document '{}' is empty", doc.id));
  // Lowercasing is a per-character map, so locating the markers in the
  // lowercased text and cutting there equals cutting the raw text first.
  std::string body = strip_voting_section(to_lower(doc.text), cfg.voting_markers);
  std::vector<std::string> out;
  for (auto& tok : tokenize(body)) {
    if (cfg.stopwords.count(tok) || cfg.names.count(tok)) continue;
    out.push_back(lemmatize(tok, cfg));
  }
  if (out.empty()) {
    throw ValidationError(fmt::format("document '{}' has no tokens after preprocessing", doc.id));
  }
  return out;
}

std::vector<RawDocument> load_corpus(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) {
    throw ValidationError(fmt::format("statement directory '{}' does not exist", dir.string()));
  }
  std::vector<RawDocument> docs;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (!entry.is_regular_file() || entry.path().extension() != ".txt") continue;
    std::string stem = entry.path().stem().string();
    Date date;
    try {
      date = Date::parse(stem);
    } catch (const ValidationError&) {
      throw ValidationError(
          fmt::format("statement file '{}' is not named YYYY-MM-DD.txt", entry.path().filename().string()));
    }
    docs.push_back({stem, date, slurp(entry.path())});
  }
  if (docs.empty()) throw ValidationError(fmt::format("no statements in '{}'", dir.string()));
  std::sort(docs.begin(), docs.end(), [](const auto& a, const auto& b) { return a.date < b.date; });
  return docs;
}

Vocabulary::Vocabulary(std::vector<std::string> terms) : terms_(std::move(terms)) {
  std::sort(terms_.begin(), terms_.end());
  terms_.erase(std::unique(terms_.begin(), terms_.end()), terms_.end());
  for (std::size_t j = 0; j < terms_.size(); ++j) index_.emplace(terms_[j], j);
}

std::size_t Vocabulary::index(const std::string& term) const {
  auto it = index_.find(term);
  if (it == index_.end()) throw ValidationError(fmt::format("term '{}' not in vocabulary", term));
  return it->second;
}

Eigen::VectorXd CountMatrix::document_frequency() const {
  return (counts.array() > 0).cast<double>().colwise().sum().transpose();
}

CountMatrix build_matrix(std::span<const TokenizedDocument> corpus, const BuildOptions& opts) {
  if (corpus.empty()) throw ValidationError("cannot build a matrix from an empty corpus");
  std::map<std::string, std::size_t> df;
  for (const auto& doc : corpus) {
    if (doc.tokens.empty()) throw ValidationError(fmt::format("document '{}' has no tokens", doc.key.id));
    std::vector<std::string> uniq(doc.tokens);
    std::sort(uniq.begin(), uniq.end());
    uniq.erase(std::unique(uniq.begin(), uniq.end()), uniq.end());
    for (const auto& t : uniq) ++df[t];
  }
  std::vector<std::string> kept;
  for (const auto& [term, n] : df) {
    if (n >= opts.min_df) kept.push_back(term);
  }
  CountMatrix out;
  out.vocabulary = Vocabulary(std::move(kept));
  out.counts = CountArray::Zero(static_cast<Eigen::Index>(corpus.size()),
                                static_cast<Eigen::Index>(out.vocabulary.size()));
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    out.docs.push_back(corpus[i].key);
    for (const auto& t : corpus[i].tokens) {
      if (!out.vocabulary.contains(t)) continue;
      ++out.counts(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(out.vocabulary.index(t)));
    }
    if (out.counts.row(static_cast<Eigen::Index>(i)).sum() == 0) {
      throw ValidationError(fmt::format("document '{}' has no terms above min_df={}", corpus[i].key.id, opts.min_df));
    }
  }
  return out;
}

WeightedDocTermMatrix tfidf(const CountMatrix& counts) {
  const auto n = counts.n_docs();
  const auto m = counts.n_terms();
  const double total_docs = static_cast<double>(n);
  Eigen::VectorXd df = counts.document_frequency();
  WeightedDocTermMatrix out;
  out.weights = Eigen::MatrixXd::Zero(n, m);
  out.vocabulary = counts.vocabulary;
  out.docs = counts.docs;
  for (Eigen::Index j = 0; j < m; ++j) {
    const double idf = std::log(total_docs / df(j)) + 1.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const long c = counts.counts(i, j);
      if (c > 0) out.weights(i, j) = (1.0 + std::log(static_cast<double>(c))) * idf;
    }
  }
  return out;
}

csv::Writer export_matrix(const WeightedDocTermMatrix& m) {
  std::vector<std::string> header{"date"};
  header.insert(header.end(), m.vocabulary.terms().begin(), m.vocabulary.terms().end());
  csv::Writer w(std::move(header));
  for (Eigen::Index i = 0; i < m.weights.rows(); ++i) {
    std::vector<std::string> row{m.docs[static_cast<std::size_t>(i)].date.iso()};
    for (Eigen::Index j = 0; j < m.weights.cols(); ++j) row.push_back(csv::num(m.weights(i, j)));
    w.row(std::move(row));
  }
  return w;
}

}  // namespace fomc::text
