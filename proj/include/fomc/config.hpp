#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "fomc/dates.hpp"

namespace fomc {

struct PathsConfig {
  // As written in the file (or the environment); `resolve` makes them absolute.
  std::string statements = "statements";
  std::string yields = "yields.csv";
  std::string controls = "controls.csv";
  std::string stopwords;
  std::string names;
  std::string voting_markers;
  std::string lemma_rules;
};

struct TopicsConfig {
  std::string model = "nmf";     // nmf | lda: which model supplies the themes
  std::optional<int> k;          // nullopt: take the coherence-selected k
  int k_min = 3;
  int k_max = 30;
  std::size_t coherence_n = 15;
  double epsilon = 1e-12;
  bool compare = true;           // also score the other model over the k range
  std::size_t min_df = 1;
  std::string nmf_init = "nndsvd";
  int nmf_max_iter = 1000;
  double nmf_rel_tol = 1e-6;
  int lda_burn_in = 500;
  int lda_sweeps = 2000;
  double lda_eta = 0.025;
  std::optional<double> lda_alpha;  // default 50 / K
};

struct CurveConfig {
  double lambda = 0.0609;
  bool estimate_lambda = false;
  bool allow_missing = false;
  std::string factors = "smoothed";  // two-step-ols | filtered | smoothed
  int mle_max_iter = 500;
  int mle_max_evals = 200000;
  double mle_grad_tol = 1e-4;
};

struct NamedSample {
  std::string name;
  DateRange range;
};

struct RegressConfig {
  DateRange crisis_window{Date(2007, 2, 27), Date(2011, 4, 13)};
  std::vector<NamedSample> samples{{"pre_crisis", {Date(1999, 1, 1), Date(2006, 12, 31)}},
                                   {"post_2007", {Date(2007, 1, 1), Date(2017, 12, 31)}}};
};

struct PipelineConfig {
  std::filesystem::path base_dir;  // directory of the config file
  PathsConfig paths;
  TopicsConfig topics;
  CurveConfig curve;
  RegressConfig regress;
  std::uint64_t seed = 0;
  std::string out_dir = "out";

  // Throws ValidationError on out-of-range settings.
  void validate() const;
  // Absolute path for a configured path string.
  std::filesystem::path resolve(const std::string& p) const;
  std::filesystem::path output_dir() const { return resolve(out_dir); }
  // Every setting that can change an output; paths and out_dir are left
  // out because input contents are digested separately.
  nlohmann::json canonical() const;
  // SHA-256 of canonical(), hex.
  std::string hash() const;
};

// Unknown keys are rejected. FOMC_STATEMENTS, FOMC_YIELDS, FOMC_CONTROLS,
// FOMC_STOPWORDS, FOMC_NAMES, FOMC_VOTING_MARKERS and FOMC_LEMMA_RULES
// override the corresponding path when set.
PipelineConfig load_config(const std::filesystem::path& file);
PipelineConfig parse_config(const std::string& yaml_text, const std::filesystem::path& base_dir);

}  // namespace fomc
