#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "fomc/csv.hpp"
#include "fomc/dates.hpp"
#include "fomc/termstructure.hpp"

namespace fomc::econ {

// Crisis window used when none is configured.
inline const DateRange kDefaultCrisis{Date(2007, 2, 27), Date(2011, 4, 13)};

// Daily control variables; a date absent from the file is NaN everywhere.
struct Controls {
  std::vector<Date> dates;
  Eigen::VectorXd term_spread;
  Eigen::VectorXd credit_spread;
  Eigen::VectorXd vix;
};

// Columns: date, term_spread, credit_spread, vix.
Controls load_controls(const std::filesystem::path& path);
Controls parse_controls(const csv::Table& table);

// Topic weights per statement, in statement date order.
struct ThemeWeights {
  std::vector<Date> dates;
  Eigen::MatrixXd weights;  // statements x themes
};

// Where a statement landed on the trading calendar.
struct StatementPlacement {
  Date statement;
  Date trading_day;
  bool shifted = false;  // statement date was not a trading day
};

// Maps each statement to the first trading day on or after its date.
// Statements dated before the first trading day are skipped. Throws
// ValidationError when a statement falls after the last trading day or
// two statements share a trading day.
std::vector<StatementPlacement> place_statements(const std::vector<Date>& statements,
                                                 const std::vector<Date>& trading_days);

struct DailyDataset {
  std::vector<Date> dates;
  Eigen::VectorXd abs_dL, abs_dS, abs_dC;
  Eigen::MatrixXd dtheme;  // dates x themes, nonzero only on event days
  Eigen::VectorXd event;
  Eigen::VectorXd crisis;
  Eigen::VectorXd term_spread, credit_spread, vix;  // NaN where controls are missing
  std::vector<StatementPlacement> placements;

  Eigen::Index n_dates() const { return static_cast<Eigen::Index>(dates.size()); }
  Eigen::Index n_themes() const { return dtheme.cols(); }
  // Dates where at least one control is missing.
  std::vector<Date> missing_controls() const;
};

// The calendar is the factor series' dates; the first date has no change
// and is dropped. Statements are placed by place_statements; those dated
// before the first trading day only serve as predecessors for the weight
// change.
DailyDataset build_daily(const curve::FactorSeries& factors, const ThemeWeights& themes, const Controls& controls,
                         const DateRange& crisis_window = kDefaultCrisis);

// Rows whose date lies inside the interval. Throws ValidationError when
// nothing is left.
DailyDataset subsample(const DailyDataset& data, const DateRange& interval);

struct DroppedColumn {
  std::string name;
  std::string reason;
};

struct OlsFit {
  std::vector<std::string> names;  // retained regressors
  Eigen::VectorXd beta, se, t;
  double r2 = 0.0;
  double adj_r2 = 0.0;
  Eigen::Index n = 0;
  std::vector<DroppedColumn> dropped;
  Eigen::VectorXd fitted;
  Eigen::VectorXd residuals;

  // Position of a retained regressor, or nullopt.
  std::optional<std::size_t> find(const std::string& name) const;
};

// Columns are screened in order: a column whose residual after projecting
// on the columns already kept is below 1e-10 of its own norm is dropped, so
// later columns go first. Classical standard errors. Throws ValidationError
// when every column drops, the dependent variable is constant, or there are
// not more rows than retained columns.
OlsFit ols(const Eigen::VectorXd& y, const Eigen::MatrixXd& X, const std::vector<std::string>& names);

enum class Dependent { Level, Slope, Curvature };
std::string to_string(Dependent d);
Dependent parse_dependent(const std::string& name);
const Eigen::VectorXd& dependent_series(const DailyDataset& data, Dependent d);

// |d factor| on const + event (+ crisis + event x crisis) + controls. Rows
// with missing controls are skipped. Throws ValidationError when the sample
// has no event day.
OlsFit event_study(const DailyDataset& data, Dependent dependent, bool with_crisis);

struct SpecConfig {
  std::string name;
  Dependent dependent = Dependent::Curvature;
  std::vector<int> themes;  // 1-based theme numbers; empty means all
  bool include_crisis = false;
  bool include_interactions = false;
  std::optional<DateRange> sample;
  DateRange crisis_window = kDefaultCrisis;

  void validate(Eigen::Index n_themes) const;
};

// Theme-change regression with optional crisis dummy and theme x crisis
// interactions. Collinearity screening runs over
// [const, controls, crisis, interactions, themes], so a theme that only
// moves inside the crisis loses its main effect rather than its
// interaction. Results are reported in the order
// const, themes, crisis, interactions, controls.
OlsFit theme_regression(const DailyDataset& data, const SpecConfig& spec);

// Two-sided normal critical values at 1%, 5% and 10%.
std::string stars(double t);

struct NamedFit {
  std::string spec;
  std::string dependent;
  OlsFit fit;
};

// One row per regressor (retained and dropped) of every fit.
csv::Writer export_fits(const std::vector<NamedFit>& fits);
nlohmann::json fits_json(const std::vector<NamedFit>& fits);
// Plain-text table in the layout of a journal regression table.
std::string render_fits(const std::string& title, const std::vector<NamedFit>& fits);

}  // namespace fomc::econ
