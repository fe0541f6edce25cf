#include <fmt/format.h>

#include "fomc/error.hpp"
#include "fomc/pipeline.hpp"

namespace fomc::pipeline {

Bundle ingest(const PipelineConfig& cfg, const LogSink& log) {
  const auto prep = text::PreprocessConfig::load(cfg.resolve(cfg.paths.stopwords), cfg.resolve(cfg.paths.names),
                                                 cfg.resolve(cfg.paths.voting_markers),
                                                 cfg.resolve(cfg.paths.lemma_rules));
  Bundle b;
  for (const auto& doc : text::load_corpus(cfg.resolve(cfg.paths.statements))) {
    b.documents.push_back({{doc.id, doc.date}, text::preprocess(doc, prep)});
  }
  b.panel = curve::load_yield_panel(cfg.resolve(cfg.paths.yields), cfg.curve.allow_missing);
  b.controls = econ::load_controls(cfg.resolve(cfg.paths.controls));

  std::vector<Date> statement_dates;
  for (const auto& d : b.documents) statement_dates.push_back(d.key.date);
  b.placements = econ::place_statements(statement_dates, b.panel.dates);
  for (const auto& p : b.placements) {
    if (p.shifted) log(fmt::format("statement {} is not a trading day; mapped to {}", p.statement.iso(), p.trading_day.iso()));
  }
  if (b.placements.size() < statement_dates.size()) {
    log(fmt::format("{} statement(s) precede the first yield date {}", statement_dates.size() - b.placements.size(),
                    b.panel.dates.front().iso()));
  }

  std::size_t c = 0;
  for (const Date& d : b.panel.dates) {
    while (c < b.controls.dates.size() && b.controls.dates[c] < d) ++c;
    const bool present = c < b.controls.dates.size() && b.controls.dates[c] == d &&
                         std::isfinite(b.controls.term_spread(static_cast<Eigen::Index>(c))) &&
                         std::isfinite(b.controls.credit_spread(static_cast<Eigen::Index>(c))) &&
                         std::isfinite(b.controls.vix(static_cast<Eigen::Index>(c)));
    if (!present) b.missing_controls.push_back(d);
  }
  if (!b.missing_controls.empty()) {
    log(fmt::format("{} yield date(s) lack a complete controls row; first is {}", b.missing_controls.size(),
                    b.missing_controls.front().iso()));
  }
  return b;
}

}  // namespace fomc::pipeline
