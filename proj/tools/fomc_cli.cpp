#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "fomc/config.hpp"
#include "fomc/error.hpp"
#include "fomc/pipeline.hpp"

#ifndef FOMC_VERSION
#define FOMC_VERSION "0.0.0"
#endif

namespace {

int run(const std::string& command, const std::string& config_path, const std::optional<std::string>& out,
        const std::optional<std::uint64_t>& seed, const std::optional<std::string>& force) {
  auto cfg = fomc::load_config(config_path);
  if (out) cfg.out_dir = std::filesystem::absolute(*out).string();
  if (seed) cfg.seed = *seed;
  cfg.validate();

  std::optional<fomc::pipeline::Stage> forced;
  if (force) forced = fomc::pipeline::parse_stage(*force);

  fomc::pipeline::Runner runner(cfg, [](std::string_view msg) { fmt::print(stderr, "{}\n", msg); });
  if (command == "all") {
    runner.run_all(forced);
  } else {
    const auto stage = fomc::pipeline::parse_stage(command);
    if (forced && *forced != stage) {
      throw fomc::ValidationError(fmt::format("--stage-force {} does not match subcommand {}", *force, command));
    }
    runner.run(stage, forced.has_value());
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Topic modelling of FOMC statements and yield-curve event studies"};
  app.set_version_flag("--version", FOMC_VERSION);
  app.require_subcommand(1, 1);

  std::string config_path;
  std::optional<std::string> out;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> force;

  const std::pair<const char*, const char*> commands[] = {
      {"ingest", "Validate inputs and preprocess statements"},
      {"select-k", "Score topic counts by coherence"},
      {"topics", "Fit topic models and write theme weights"},
      {"curve", "Estimate yield-curve factors"},
      {"regress", "Run the event-study and theme regressions"},
      {"report", "Assemble report tables"},
      {"all", "Run every stage in order"},
  };
  for (const auto& [name, help] : commands) {
    auto* sub = app.add_subcommand(name, help);
    sub->add_option("--config", config_path, "Pipeline configuration (YAML)")->required()->check(CLI::ExistingFile);
    sub->add_option("--out", out, "Output directory (overrides out_dir)");
    sub->add_option("--seed", seed, "Global seed (overrides seed)");
    sub->add_option("--stage-force", force, "Re-run this stage even if cached");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    return run(app.get_subcommands().front()->get_name(), config_path, out, seed, force);
  } catch (const fomc::ValidationError& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return 2;
  } catch (const fomc::NumericalError& e) {
    fmt::print(stderr, "numerical failure: {}\n", e.what());
    return 3;
  } catch (const fomc::Error& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return 2;
  } catch (const std::filesystem::filesystem_error& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return 2;
  }
}
