#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "fomc/config.hpp"
#include "fomc/csv.hpp"
#include "fomc/pipeline.hpp"

namespace fomc::pipeline {

// Shared plumbing for stage implementations: writes artifacts below the
// output directory and remembers what was written.
struct StageContext {
  const PipelineConfig& cfg;
  std::filesystem::path out;
  std::string config_hash;
  std::string stage;
  const LogSink& log;
  std::vector<std::string> written;

  void write_csv(const std::string& rel, csv::Writer w);
  void write_text(const std::string& rel, std::string_view content);
  void write_json(const std::string& rel, const nlohmann::json& j);

  // Upstream artifact; throws ValidationError naming the producing stage
  // when it is absent.
  csv::Table read_csv(const std::string& rel) const;
  nlohmann::json read_json(const std::string& rel) const;
};

// Column lookup that ignores the provenance columns.
Eigen::VectorXd numeric_column(const csv::Table& t, const std::string& name);
std::vector<Date> date_column(const csv::Table& t, const std::string& name = "date");

void run_report(StageContext& ctx);

}  // namespace fomc::pipeline
