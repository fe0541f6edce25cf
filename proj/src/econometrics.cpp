#include "fomc/econometrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include <fmt/format.h>

#include "fomc/error.hpp"

namespace fomc::econ {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kPivotTol = 1e-10;

const char* const kControlNames[] = {"term_spread", "credit_spread", "vix"};

Eigen::VectorXd select_rows(const Eigen::VectorXd& v, const std::vector<Eigen::Index>& rows) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) out(static_cast<Eigen::Index>(i)) = v(rows[i]);
  return out;
}

// A design matrix assembled column by column with names.
struct Design {
  std::vector<std::string> names;
  std::vector<Eigen::VectorXd> cols;

  void add(std::string name, Eigen::VectorXd col) {
    names.push_back(std::move(name));
    cols.push_back(std::move(col));
  }
  Eigen::MatrixXd matrix(const std::vector<Eigen::Index>& rows) const {
    Eigen::MatrixXd X(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(cols.size()));
    for (std::size_t j = 0; j < cols.size(); ++j) X.col(static_cast<Eigen::Index>(j)) = select_rows(cols[j], rows);
    return X;
  }
};

std::vector<Eigen::Index> rows_with_controls(const DailyDataset& d) {
  std::vector<Eigen::Index> rows;
  for (Eigen::Index t = 0; t < d.n_dates(); ++t) {
    if (std::isfinite(d.term_spread(t)) && std::isfinite(d.credit_spread(t)) && std::isfinite(d.vix(t))) {
      rows.push_back(t);
    }
  }
  return rows;
}

void add_controls(Design& design, const DailyDataset& d) {
  design.add(kControlNames[0], d.term_spread);
  design.add(kControlNames[1], d.credit_spread);
  design.add(kControlNames[2], d.vix);
}

}  // namespace

Controls parse_controls(const csv::Table& table) {
  const std::size_t c_date = table.column("date");
  const std::size_t c_term = table.column("term_spread");
  const std::size_t c_credit = table.column("credit_spread");
  const std::size_t c_vix = table.column("vix");
  std::vector<std::size_t> order(table.rows.size());
  std::vector<Date> dates;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    try {
      dates.push_back(Date::parse(table.rows[r][c_date]));
    } catch (const ValidationError& e) {
      throw ValidationError(fmt::format("{}: row {}: {}", table.source, r + 2, e.what()));
    }
    order[r] = r;
  }
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return dates[a] < dates[b]; });
  Controls c;
  const auto n = static_cast<Eigen::Index>(order.size());
  c.term_spread.resize(n);
  c.credit_spread.resize(n);
  c.vix.resize(n);
  for (std::size_t i = 0; i < order.size(); ++i) {
    const std::size_t r = order[i];
    if (i > 0 && dates[r] == c.dates.back()) {
      throw ValidationError(fmt::format("{}: duplicate date {}", table.source, dates[r].iso()));
    }
    c.dates.push_back(dates[r]);
    const auto k = static_cast<Eigen::Index>(i);
    c.term_spread(k) = csv::to_double(table, r, c_term);
    c.credit_spread(k) = csv::to_double(table, r, c_credit);
    c.vix(k) = csv::to_double(table, r, c_vix);
  }
  return c;
}

Controls load_controls(const std::filesystem::path& path) { return parse_controls(csv::read(path)); }

std::vector<Date> DailyDataset::missing_controls() const {
  std::vector<Date> out;
  for (Eigen::Index t = 0; t < n_dates(); ++t) {
    if (!std::isfinite(term_spread(t)) || !std::isfinite(credit_spread(t)) || !std::isfinite(vix(t))) {
      out.push_back(dates[static_cast<std::size_t>(t)]);
    }
  }
  return out;
}

std::vector<StatementPlacement> place_statements(const std::vector<Date>& statements,
                                                 const std::vector<Date>& trading_days) {
  std::vector<StatementPlacement> out;
  if (trading_days.empty()) throw ValidationError("no trading days to place statements on");
  std::map<Date, Date> taken;
  for (const Date& sd : statements) {
    if (sd < trading_days.front()) continue;
    auto pos = std::lower_bound(trading_days.begin(), trading_days.end(), sd);
    if (pos == trading_days.end()) {
      throw ValidationError(fmt::format("statement {} has no trading day on or after it", sd.iso()));
    }
    if (auto [it, fresh] = taken.emplace(*pos, sd); !fresh) {
      throw ValidationError(fmt::format("statements {} and {} both fall on trading day {}", it->second.iso(), sd.iso(),
                                        pos->iso()));
    }
    out.push_back({sd, *pos, *pos != sd});
  }
  return out;
}

DailyDataset build_daily(const curve::FactorSeries& factors, const ThemeWeights& themes, const Controls& controls,
                         const DateRange& crisis_window) {
  if (!crisis_window.well_ordered()) throw ValidationError("crisis window is not well ordered");
  const auto T = static_cast<Eigen::Index>(factors.dates.size());
  if (T < 2 || factors.values.rows() != T) throw ValidationError("daily dataset needs at least two factor dates");
  if (themes.weights.rows() != static_cast<Eigen::Index>(themes.dates.size())) {
    throw ValidationError("theme weights and statement dates disagree in length");
  }
  for (std::size_t s = 1; s < themes.dates.size(); ++s) {
    if (!(themes.dates[s - 1] < themes.dates[s])) {
      throw ValidationError(fmt::format("statement dates not strictly increasing at {}", themes.dates[s].iso()));
    }
  }

  DailyDataset d;
  const Eigen::Index n = T - 1;
  const Eigen::Index K = themes.weights.cols();
  d.dates.assign(factors.dates.begin() + 1, factors.dates.end());
  Eigen::MatrixXd diff = (factors.values.bottomRows(n) - factors.values.topRows(n)).cwiseAbs();
  d.abs_dL = diff.col(0);
  d.abs_dS = diff.col(1);
  d.abs_dC = diff.col(2);
  d.dtheme = Eigen::MatrixXd::Zero(n, K);
  d.event = Eigen::VectorXd::Zero(n);
  d.crisis.resize(n);
  for (Eigen::Index t = 0; t < n; ++t) d.crisis(t) = crisis_window.contains(d.dates[static_cast<std::size_t>(t)]) ? 1.0 : 0.0;

  std::map<Date, Eigen::Index> control_row;
  for (std::size_t i = 0; i < controls.dates.size(); ++i) control_row.emplace(controls.dates[i], static_cast<Eigen::Index>(i));
  d.term_spread.resize(n);
  d.credit_spread.resize(n);
  d.vix.resize(n);
  for (Eigen::Index t = 0; t < n; ++t) {
    auto it = control_row.find(d.dates[static_cast<std::size_t>(t)]);
    d.term_spread(t) = it == control_row.end() ? kNaN : controls.term_spread(it->second);
    d.credit_spread(t) = it == control_row.end() ? kNaN : controls.credit_spread(it->second);
    d.vix(t) = it == control_row.end() ? kNaN : controls.vix(it->second);
  }

  d.placements = place_statements(themes.dates, factors.dates);
  std::size_t s = 0;
  for (const auto& p : d.placements) {
    while (themes.dates[s] != p.statement) ++s;
    const auto idx = std::lower_bound(factors.dates.begin(), factors.dates.end(), p.trading_day) - factors.dates.begin();
    if (idx == 0) continue;  // the first trading day has no change row
    const Eigen::Index row = idx - 1;
    d.event(row) = 1.0;
    if (s > 0) {
      d.dtheme.row(row) = themes.weights.row(static_cast<Eigen::Index>(s)) - themes.weights.row(static_cast<Eigen::Index>(s - 1));
    }
  }
  return d;
}

DailyDataset subsample(const DailyDataset& data, const DateRange& interval) {
  if (!interval.well_ordered()) throw ValidationError(fmt::format("sample {} is not well ordered", interval.str()));
  std::vector<Eigen::Index> rows;
  for (Eigen::Index t = 0; t < data.n_dates(); ++t) {
    if (interval.contains(data.dates[static_cast<std::size_t>(t)])) rows.push_back(t);
  }
  if (rows.empty()) throw ValidationError(fmt::format("sample {} contains no dates", interval.str()));
  DailyDataset out;
  for (auto t : rows) out.dates.push_back(data.dates[static_cast<std::size_t>(t)]);
  out.abs_dL = select_rows(data.abs_dL, rows);
  out.abs_dS = select_rows(data.abs_dS, rows);
  out.abs_dC = select_rows(data.abs_dC, rows);
  out.dtheme.resize(static_cast<Eigen::Index>(rows.size()), data.dtheme.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) out.dtheme.row(static_cast<Eigen::Index>(i)) = data.dtheme.row(rows[i]);
  out.event = select_rows(data.event, rows);
  out.crisis = select_rows(data.crisis, rows);
  out.term_spread = select_rows(data.term_spread, rows);
  out.credit_spread = select_rows(data.credit_spread, rows);
  out.vix = select_rows(data.vix, rows);
  for (const auto& p : data.placements) {
    if (interval.contains(p.trading_day)) out.placements.push_back(p);
  }
  return out;
}

std::optional<std::size_t> OlsFit::find(const std::string& name) const {
  auto it = std::find(names.begin(), names.end(), name);
  if (it == names.end()) return std::nullopt;
  return static_cast<std::size_t>(it - names.begin());
}

OlsFit ols(const Eigen::VectorXd& y, const Eigen::MatrixXd& X, const std::vector<std::string>& names) {
  if (X.rows() != y.size()) throw ValidationError(fmt::format("OLS: {} observations but {} design rows", y.size(), X.rows()));
  if (static_cast<std::size_t>(X.cols()) != names.size()) throw ValidationError("OLS: regressor names do not match columns");
  if (!y.allFinite() || !X.allFinite()) throw ValidationError("OLS: data contain missing or non-finite values");
  const Eigen::Index n = y.size();
  if (n < 2) throw ValidationError("OLS needs at least two observations");
  const double ybar = y.mean();
  const double sst = (y.array() - ybar).square().sum();
  if (!(sst > 0.0)) throw ValidationError("OLS: dependent variable has zero variance");

  OlsFit fit;
  std::vector<Eigen::Index> keep;
  Eigen::MatrixXd kept(n, 0);
  for (Eigen::Index j = 0; j < X.cols(); ++j) {
    const Eigen::VectorXd c = X.col(j);
    const double norm = c.norm();
    if (norm == 0.0) {
      fit.dropped.push_back({names[static_cast<std::size_t>(j)], "column is identically zero"});
      continue;
    }
    double resid = norm;
    if (kept.cols() > 0) {
      Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(kept);
      resid = (c - kept * qr.solve(c)).norm();
    }
    if (resid <= kPivotTol * norm) {
      std::string with;
      for (auto k : keep) with += (with.empty() ? "" : " + ") + names[static_cast<std::size_t>(k)];
      fit.dropped.push_back({names[static_cast<std::size_t>(j)],
                             fmt::format("perfectly collinear with {}", with)});
      continue;
    }
    keep.push_back(j);
    kept.conservativeResize(Eigen::NoChange, kept.cols() + 1);
    kept.col(kept.cols() - 1) = c;
  }
  if (keep.empty()) throw ValidationError("OLS: every regressor was dropped");
  const auto p = static_cast<Eigen::Index>(keep.size());
  if (n <= p) throw ValidationError(fmt::format("OLS: {} observations for {} regressors", n, p));

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(kept);
  fit.beta = qr.solve(y);
  fit.fitted = kept * fit.beta;
  fit.residuals = y - fit.fitted;
  const double ssr = fit.residuals.squaredNorm();
  const double s2 = ssr / static_cast<double>(n - p);
  const Eigen::MatrixXd xtx_inv = (kept.transpose() * kept).ldlt().solve(Eigen::MatrixXd::Identity(p, p));
  fit.se = (s2 * xtx_inv.diagonal().array()).sqrt().matrix();
  fit.t = fit.beta.cwiseQuotient(fit.se);
  for (auto j : keep) fit.names.push_back(names[static_cast<std::size_t>(j)]);
  fit.n = n;
  fit.r2 = 1.0 - ssr / sst;
  fit.adj_r2 = 1.0 - (1.0 - fit.r2) * static_cast<double>(n - 1) / static_cast<double>(n - p);
  return fit;
}

std::string to_string(Dependent d) {
  switch (d) {
    case Dependent::Level: return "level";
    case Dependent::Slope: return "slope";
    case Dependent::Curvature: return "curvature";
  }
  return "unknown";
}

Dependent parse_dependent(const std::string& name) {
  if (name == "level") return Dependent::Level;
  if (name == "slope") return Dependent::Slope;
  if (name == "curvature") return Dependent::Curvature;
  throw ValidationError(fmt::format("unknown dependent '{}' (expected level, slope or curvature)", name));
}

const Eigen::VectorXd& dependent_series(const DailyDataset& data, Dependent d) {
  switch (d) {
    case Dependent::Level: return data.abs_dL;
    case Dependent::Slope: return data.abs_dS;
    case Dependent::Curvature: break;
  }
  return data.abs_dC;
}

OlsFit event_study(const DailyDataset& data, Dependent dependent, bool with_crisis) {
  const auto rows = rows_with_controls(data);
  const Eigen::VectorXd event = select_rows(data.event, rows);
  if (event.size() == 0 || event.maxCoeff() == event.minCoeff()) {
    throw ValidationError("event study: event dummy has zero variance in the sample");
  }
  Design design;
  design.add("const", Eigen::VectorXd::Ones(data.n_dates()));
  design.add("event", data.event);
  if (with_crisis) {
    design.add("crisis", data.crisis);
    design.add("event_x_crisis", data.event.cwiseProduct(data.crisis));
  }
  add_controls(design, data);
  return ols(select_rows(dependent_series(data, dependent), rows), design.matrix(rows), design.names);
}

void SpecConfig::validate(Eigen::Index n_themes) const {
  if (!crisis_window.well_ordered()) throw ValidationError(fmt::format("spec {}: crisis window not well ordered", name));
  if (sample && !sample->well_ordered()) throw ValidationError(fmt::format("spec {}: sample not well ordered", name));
  if (include_interactions && !include_crisis) {
    throw ValidationError(fmt::format("spec {}: interactions require the crisis dummy", name));
  }
  for (int k : themes) {
    if (k < 1 || k > n_themes) throw ValidationError(fmt::format("spec {}: theme {} outside 1..{}", name, k, n_themes));
  }
}

OlsFit theme_regression(const DailyDataset& data, const SpecConfig& spec) {
  spec.validate(data.n_themes());
  const DailyDataset d = spec.sample ? subsample(data, *spec.sample) : data;
  std::vector<int> themes = spec.themes;
  if (themes.empty()) {
    for (int k = 1; k <= d.n_themes(); ++k) themes.push_back(k);
  }
  Eigen::VectorXd crisis(d.n_dates());
  for (Eigen::Index t = 0; t < d.n_dates(); ++t) {
    crisis(t) = spec.crisis_window.contains(d.dates[static_cast<std::size_t>(t)]) ? 1.0 : 0.0;
  }

  Design design;
  design.add("const", Eigen::VectorXd::Ones(d.n_dates()));
  add_controls(design, d);
  if (spec.include_crisis) design.add("crisis", crisis);
  if (spec.include_interactions) {
    for (int k : themes) design.add(fmt::format("dtheme_{}_x_crisis", k), d.dtheme.col(k - 1).cwiseProduct(crisis));
  }
  for (int k : themes) design.add(fmt::format("dtheme_{}", k), d.dtheme.col(k - 1));

  const auto rows = rows_with_controls(d);
  OlsFit fit = ols(select_rows(dependent_series(d, spec.dependent), rows), design.matrix(rows), design.names);

  std::vector<std::string> display{"const"};
  for (int k : themes) display.push_back(fmt::format("dtheme_{}", k));
  if (spec.include_crisis) display.push_back("crisis");
  if (spec.include_interactions) {
    for (int k : themes) display.push_back(fmt::format("dtheme_{}_x_crisis", k));
  }
  for (const char* c : kControlNames) display.push_back(c);

  OlsFit out = fit;
  out.names.clear();
  std::vector<Eigen::Index> perm;
  for (const auto& name : display) {
    if (auto i = fit.find(name)) {
      out.names.push_back(name);
      perm.push_back(static_cast<Eigen::Index>(*i));
    }
  }
  for (std::size_t i = 0; i < perm.size(); ++i) {
    const auto k = static_cast<Eigen::Index>(i);
    out.beta(k) = fit.beta(perm[i]);
    out.se(k) = fit.se(perm[i]);
    out.t(k) = fit.t(perm[i]);
  }
  return out;
}

std::string stars(double t) {
  const double a = std::abs(t);
  if (a >= 2.5758) return "***";
  if (a >= 1.95996) return "**";
  if (a >= 1.644854) return "*";
  return "";
}

csv::Writer export_fits(const std::vector<NamedFit>& fits) {
  csv::Writer w({"spec", "dependent", "regressor", "coef", "se", "t", "stars", "n", "adj_r2", "dropped", "note"});
  for (const auto& nf : fits) {
    const auto& f = nf.fit;
    for (std::size_t i = 0; i < f.names.size(); ++i) {
      const auto k = static_cast<Eigen::Index>(i);
      w.row({nf.spec, nf.dependent, f.names[i], csv::num(f.beta(k)), csv::num(f.se(k)), csv::num(f.t(k)),
             stars(f.t(k)), std::to_string(f.n), csv::num(f.adj_r2), "0", ""});
    }
    for (const auto& dc : f.dropped) {
      w.row({nf.spec, nf.dependent, dc.name, "", "", "", "", std::to_string(f.n), csv::num(f.adj_r2), "1", dc.reason});
    }
  }
  return w;
}

nlohmann::json fits_json(const std::vector<NamedFit>& fits) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& nf : fits) {
    const auto& f = nf.fit;
    nlohmann::json coefs = nlohmann::json::array();
    for (std::size_t i = 0; i < f.names.size(); ++i) {
      const auto k = static_cast<Eigen::Index>(i);
      coefs.push_back({{"regressor", f.names[i]}, {"coef", f.beta(k)}, {"se", f.se(k)}, {"t", f.t(k)},
                       {"stars", stars(f.t(k))}});
    }
    nlohmann::json dropped = nlohmann::json::array();
    for (const auto& dc : f.dropped) dropped.push_back({{"regressor", dc.name}, {"reason", dc.reason}});
    out.push_back({{"spec", nf.spec}, {"dependent", nf.dependent}, {"n", f.n}, {"r2", f.r2},
                   {"adj_r2", f.adj_r2}, {"coefficients", coefs}, {"dropped", dropped}});
  }
  return out;
}

std::string render_fits(const std::string& title, const std::vector<NamedFit>& fits) {
  std::vector<std::string> rows;
  for (const auto& nf : fits) {
    for (const auto& name : nf.fit.names) {
      if (std::find(rows.begin(), rows.end(), name) == rows.end()) rows.push_back(name);
    }
  }
  constexpr int name_w = 24;
  constexpr int col_w = 16;
  std::string out = title + "\n";
  std::string rule(static_cast<std::size_t>(name_w + col_w * static_cast<int>(fits.size())), '-');
  out += rule + "\n";
  out += fmt::format("{:<{}}", "", name_w);
  for (const auto& nf : fits) out += fmt::format("{:>{}}", nf.spec, col_w);
  out += "\n";
  out += fmt::format("{:<{}}", "dependent", name_w);
  for (const auto& nf : fits) out += fmt::format("{:>{}}", nf.dependent, col_w);
  out += "\n" + rule + "\n";
  for (const auto& name : rows) {
    std::string coef_line = fmt::format("{:<{}}", name, name_w);
    std::string se_line = fmt::format("{:<{}}", "", name_w);
    for (const auto& nf : fits) {
      if (auto i = nf.fit.find(name)) {
        const auto k = static_cast<Eigen::Index>(*i);
        coef_line += fmt::format("{:>{}}", fmt::format("{:.4f}{}", nf.fit.beta(k), stars(nf.fit.t(k))), col_w);
        se_line += fmt::format("{:>{}}", fmt::format("({:.4f})", nf.fit.se(k)), col_w);
      } else {
        coef_line += fmt::format("{:>{}}", "", col_w);
        se_line += fmt::format("{:>{}}", "", col_w);
      }
    }
    out += coef_line + "\n" + se_line + "\n";
  }
  out += rule + "\n";
  std::string n_line = fmt::format("{:<{}}", "N", name_w);
  std::string r_line = fmt::format("{:<{}}", "adj. R2", name_w);
  for (const auto& nf : fits) {
    n_line += fmt::format("{:>{}}", nf.fit.n, col_w);
    r_line += fmt::format("{:>{}}", fmt::format("{:.4f}", nf.fit.adj_r2), col_w);
  }
  out += n_line + "\n" + r_line + "\n";
  for (const auto& nf : fits) {
    for (const auto& dc : nf.fit.dropped) out += fmt::format("{}: dropped {} ({})\n", nf.spec, dc.name, dc.reason);
  }
  out += "Standard errors in parentheses. *** p<0.01, ** p<0.05, * p<0.1.\n";
  return out;
}

}  // namespace fomc::econ
