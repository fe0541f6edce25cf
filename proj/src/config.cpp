#include "fomc/config.hpp"

#include <cstdlib>
#include <set>

#include <fmt/format.h>
#include <yaml-cpp/yaml.h>

#include "fomc/digest.hpp"
#include "fomc/error.hpp"

#ifndef FOMC_DATA_DIR
#define FOMC_DATA_DIR "data"
#endif

namespace fomc {

namespace {

void check_keys(const YAML::Node& node, const std::string& where, const std::set<std::string>& allowed) {
  if (!node) return;
  if (!node.IsMap()) throw ValidationError(fmt::format("config: '{}' must be a mapping", where));
  for (const auto& kv : node) {
    const auto key = kv.first.as<std::string>();
    if (!allowed.count(key)) throw ValidationError(fmt::format("config: unknown key '{}{}'", where.empty() ? "" : where + ".", key));
  }
}

template <typename T>
void read(const YAML::Node& node, const char* key, T& out, const std::string& where) {
  if (!node || !node[key] || node[key].IsNull()) return;
  try {
    out = node[key].as<T>();
  } catch (const YAML::Exception&) {
    throw ValidationError(fmt::format("config: '{}.{}' has the wrong type", where, key));
  }
}

DateRange read_range(const YAML::Node& node, const std::string& where) {
  try {
    return DateRange::parse(node.as<std::string>());
  } catch (const YAML::Exception&) {
    throw ValidationError(fmt::format("config: '{}' must be a 'YYYY-MM-DD:YYYY-MM-DD' string", where));
  }
}

void env_override(const char* var, std::string& target) {
  if (const char* v = std::getenv(var); v && *v) target = v;
}

}  // namespace

void PipelineConfig::validate() const {
  const auto& t = topics;
  if (t.model != "nmf" && t.model != "lda") throw ValidationError(fmt::format("config: topics.model '{}' must be nmf or lda", t.model));
  if (t.k_min < 1 || t.k_max > 100 || t.k_min > t.k_max) {
    throw ValidationError(fmt::format("config: topics k range [{}, {}] must lie in [1, 100] and be ordered", t.k_min, t.k_max));
  }
  if (t.k && (*t.k < 1 || *t.k > 100)) throw ValidationError(fmt::format("config: topics.k={} outside [1, 100]", *t.k));
  if (t.coherence_n < 2) throw ValidationError("config: topics.coherence_n must be >= 2");
  if (!(t.epsilon > 0.0)) throw ValidationError("config: topics.epsilon must be > 0");
  if (t.nmf_init != "nndsvd" && t.nmf_init != "random") throw ValidationError("config: topics.nmf.init must be nndsvd or random");
  if (t.nmf_max_iter < 1 || !(t.nmf_rel_tol > 0.0)) throw ValidationError("config: invalid NMF iteration settings");
  if (t.lda_sweeps < 1 || t.lda_burn_in < 0 || t.lda_burn_in > t.lda_sweeps) {
    throw ValidationError("config: LDA needs 0 <= burn_in <= sweeps and sweeps >= 1");
  }
  if (!(t.lda_eta > 0.0) || (t.lda_alpha && !(*t.lda_alpha > 0.0))) throw ValidationError("config: LDA priors must be > 0");
  if (!(curve.lambda > 0.0)) throw ValidationError("config: curve.lambda must be > 0");
  if (curve.factors != "two-step-ols" && curve.factors != "filtered" && curve.factors != "smoothed") {
    throw ValidationError(fmt::format("config: curve.factors '{}' must be two-step-ols, filtered or smoothed", curve.factors));
  }
  if (curve.mle_max_iter < 0 || curve.mle_max_evals < 1 || !(curve.mle_grad_tol > 0.0)) {
    throw ValidationError("config: invalid MLE settings");
  }
  if (!regress.crisis_window.well_ordered()) throw ValidationError("config: regress.crisis_window is not well ordered");
  std::set<std::string> seen;
  for (const auto& s : regress.samples) {
    if (!s.range.well_ordered()) throw ValidationError(fmt::format("config: sample '{}' is not well ordered", s.name));
    if (!seen.insert(s.name).second) throw ValidationError(fmt::format("config: duplicate sample '{}'", s.name));
  }
}

std::filesystem::path PipelineConfig::resolve(const std::string& p) const {
  std::filesystem::path path(p);
  if (path.is_absolute()) return path.lexically_normal();
  return (base_dir / path).lexically_normal();
}

nlohmann::json PipelineConfig::canonical() const {
  nlohmann::json samples = nlohmann::json::array();
  for (const auto& s : regress.samples) samples.push_back({{"name", s.name}, {"range", s.range.str()}});
  const auto& t = topics;
  return {
      {"seed", seed},
      {"topics",
       {{"model", t.model},
        {"k", t.k ? nlohmann::json(*t.k) : nlohmann::json(nullptr)},
        {"k_min", t.k_min},
        {"k_max", t.k_max},
        {"coherence_n", t.coherence_n},
        {"epsilon", t.epsilon},
        {"compare", t.compare},
        {"min_df", t.min_df},
        {"nmf", {{"init", t.nmf_init}, {"max_iter", t.nmf_max_iter}, {"rel_tol", t.nmf_rel_tol}}},
        {"lda",
         {{"burn_in", t.lda_burn_in},
          {"sweeps", t.lda_sweeps},
          {"eta", t.lda_eta},
          {"alpha", t.lda_alpha ? nlohmann::json(*t.lda_alpha) : nlohmann::json(nullptr)}}}}},
      {"curve",
       {{"lambda", curve.lambda},
        {"estimate_lambda", curve.estimate_lambda},
        {"allow_missing", curve.allow_missing},
        {"factors", curve.factors},
        {"mle", {{"max_iter", curve.mle_max_iter}, {"max_evals", curve.mle_max_evals}, {"grad_tol", curve.mle_grad_tol}}}}},
      {"regress", {{"crisis_window", regress.crisis_window.str()}, {"samples", samples}}},
  };
}

std::string PipelineConfig::hash() const { return sha256(canonical().dump()); }

PipelineConfig parse_config(const std::string& yaml_text, const std::filesystem::path& base_dir) {
  YAML::Node root;
  try {
    root = YAML::Load(yaml_text);
  } catch (const YAML::Exception& e) {
    throw ValidationError(fmt::format("config: {}", e.what()));
  }
  PipelineConfig cfg;
  cfg.base_dir = base_dir;
  cfg.paths.stopwords = std::string(FOMC_DATA_DIR) + "/stopwords.txt";
  cfg.paths.names = std::string(FOMC_DATA_DIR) + "/names.txt";
  cfg.paths.voting_markers = std::string(FOMC_DATA_DIR) + "/voting_markers.txt";
  cfg.paths.lemma_rules = std::string(FOMC_DATA_DIR) + "/lemma_rules.txt";
  if (root.IsNull()) root = YAML::Node(YAML::NodeType::Map);
  check_keys(root, "", {"paths", "topics", "curve", "regress", "seed", "out_dir"});

  read(root, "seed", cfg.seed, "");
  read(root, "out_dir", cfg.out_dir, "");

  const auto paths = root["paths"];
  check_keys(paths, "paths", {"statements", "yields", "controls", "stopwords", "names", "voting_markers", "lemma_rules"});
  read(paths, "statements", cfg.paths.statements, "paths");
  read(paths, "yields", cfg.paths.yields, "paths");
  read(paths, "controls", cfg.paths.controls, "paths");
  read(paths, "stopwords", cfg.paths.stopwords, "paths");
  read(paths, "names", cfg.paths.names, "paths");
  read(paths, "voting_markers", cfg.paths.voting_markers, "paths");
  read(paths, "lemma_rules", cfg.paths.lemma_rules, "paths");

  const auto topics = root["topics"];
  check_keys(topics, "topics", {"model", "k", "k_range", "coherence_n", "epsilon", "compare", "min_df", "nmf", "lda"});
  auto& t = cfg.topics;
  read(topics, "model", t.model, "topics");
  if (topics && topics["k"]) {
    if (topics["k"].IsScalar() && topics["k"].as<std::string>() == "auto") {
      t.k.reset();
    } else if (!topics["k"].IsNull()) {
      int k = 0;
      read(topics, "k", k, "topics");
      t.k = k;
    }
  }
  if (topics && topics["k_range"]) {
    const auto kr = topics["k_range"];
    if (!kr.IsSequence() || kr.size() != 2) throw ValidationError("config: topics.k_range must be [k_min, k_max]");
    try {
      t.k_min = kr[0].as<int>();
      t.k_max = kr[1].as<int>();
    } catch (const YAML::Exception&) {
      throw ValidationError("config: topics.k_range entries must be integers");
    }
  }
  read(topics, "coherence_n", t.coherence_n, "topics");
  read(topics, "epsilon", t.epsilon, "topics");
  read(topics, "compare", t.compare, "topics");
  read(topics, "min_df", t.min_df, "topics");
  if (topics) {
    const auto nmf = topics["nmf"];
    check_keys(nmf, "topics.nmf", {"init", "max_iter", "rel_tol"});
    read(nmf, "init", t.nmf_init, "topics.nmf");
    read(nmf, "max_iter", t.nmf_max_iter, "topics.nmf");
    read(nmf, "rel_tol", t.nmf_rel_tol, "topics.nmf");
    const auto lda = topics["lda"];
    check_keys(lda, "topics.lda", {"burn_in", "sweeps", "eta", "alpha"});
    read(lda, "burn_in", t.lda_burn_in, "topics.lda");
    read(lda, "sweeps", t.lda_sweeps, "topics.lda");
    read(lda, "eta", t.lda_eta, "topics.lda");
    if (lda && lda["alpha"] && !lda["alpha"].IsNull()) {
      double a = 0.0;
      read(lda, "alpha", a, "topics.lda");
      t.lda_alpha = a;
    }
  }

  const auto curve = root["curve"];
  check_keys(curve, "curve", {"lambda", "estimate_lambda", "allow_missing", "factors", "mle"});
  read(curve, "lambda", cfg.curve.lambda, "curve");
  read(curve, "estimate_lambda", cfg.curve.estimate_lambda, "curve");
  read(curve, "allow_missing", cfg.curve.allow_missing, "curve");
  read(curve, "factors", cfg.curve.factors, "curve");
  if (curve) {
    const auto mle = curve["mle"];
    check_keys(mle, "curve.mle", {"max_iter", "max_evals", "grad_tol"});
    read(mle, "max_iter", cfg.curve.mle_max_iter, "curve.mle");
    read(mle, "max_evals", cfg.curve.mle_max_evals, "curve.mle");
    read(mle, "grad_tol", cfg.curve.mle_grad_tol, "curve.mle");
  }

  const auto regress = root["regress"];
  check_keys(regress, "regress", {"crisis_window", "samples"});
  if (regress && regress["crisis_window"]) cfg.regress.crisis_window = read_range(regress["crisis_window"], "regress.crisis_window");
  if (regress && regress["samples"]) {
    const auto samples = regress["samples"];
    cfg.regress.samples.clear();
    if (!samples.IsNull()) {
      if (!samples.IsMap()) throw ValidationError("config: regress.samples must map names to date ranges");
      for (const auto& kv : samples) {
        const auto name = kv.first.as<std::string>();
        cfg.regress.samples.push_back({name, read_range(kv.second, "regress.samples." + name)});
      }
    }
  }

  env_override("FOMC_STATEMENTS", cfg.paths.statements);
  env_override("FOMC_YIELDS", cfg.paths.yields);
  env_override("FOMC_CONTROLS", cfg.paths.controls);
  env_override("FOMC_STOPWORDS", cfg.paths.stopwords);
  env_override("FOMC_NAMES", cfg.paths.names);
  env_override("FOMC_VOTING_MARKERS", cfg.paths.voting_markers);
  env_override("FOMC_LEMMA_RULES", cfg.paths.lemma_rules);

  cfg.validate();
  return cfg;
}

PipelineConfig load_config(const std::filesystem::path& file) {
  const auto abs = std::filesystem::absolute(file);
  return parse_config(read_file(abs), abs.parent_path());
}

}  // namespace fomc
