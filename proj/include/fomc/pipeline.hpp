#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "fomc/config.hpp"
#include "fomc/econometrics.hpp"
#include "fomc/termstructure.hpp"
#include "fomc/textprep.hpp"

namespace fomc::pipeline {

using LogSink = std::function<void(std::string_view)>;

// Inputs after parsing and cross-checking.
struct Bundle {
  std::vector<text::TokenizedDocument> documents;  // date order
  curve::YieldPanel panel;
  econ::Controls controls;
  std::vector<econ::StatementPlacement> placements;  // against the panel calendar
  std::vector<Date> missing_controls;                // panel dates without a complete controls row
};

// Loads and validates every input named in the config. Statements moved to
// a later trading day are reported through `log`.
Bundle ingest(const PipelineConfig& cfg, const LogSink& log);

enum class Stage { Ingest, SelectK, Topics, Curve, Regress, Report };

std::string to_string(Stage s);
Stage parse_stage(const std::string& name);
// Execution order used by `all`.
const std::vector<Stage>& all_stages();

struct StageResult {
  Stage stage;
  bool cached = false;
  std::vector<std::string> outputs;  // paths relative to the output directory
};

// Runs stages into cfg.output_dir(). Every stage reads its upstream inputs
// from disk, so stages can run in separate invocations. A stage whose
// config hash, input digests and upstream output digests match the
// recorded run is skipped unless forced. run_manifest.json holds digests;
// timings.json holds wall-clock times.
class Runner {
 public:
  Runner(PipelineConfig cfg, LogSink log);

  StageResult run(Stage stage, bool force = false);
  std::vector<StageResult> run_all(const std::optional<Stage>& force = std::nullopt);

  const PipelineConfig& config() const { return cfg_; }
  const nlohmann::json& manifest() const { return manifest_; }

 private:
  std::string stage_key(Stage stage) const;
  std::map<std::string, std::string> input_digests(Stage stage) const;
  void check_upstream(Stage stage) const;
  std::vector<std::string> execute(Stage stage);
  void save_manifest() const;

  PipelineConfig cfg_;
  LogSink log_;
  std::filesystem::path out_;
  std::string config_hash_;
  nlohmann::json manifest_;
  nlohmann::json timings_;
};

}  // namespace fomc::pipeline
