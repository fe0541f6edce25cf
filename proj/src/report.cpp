#include <algorithm>
#include <cmath>
#include <map>

#include <fmt/format.h>

#include "fomc/digest.hpp"
#include "fomc/error.hpp"
#include "stage_context.hpp"

namespace fomc::pipeline {

namespace {

double correlation(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  const Eigen::ArrayXd x = a.array() - a.mean();
  const Eigen::ArrayXd y = b.array() - b.mean();
  const double den = std::sqrt((x * x).sum() * (y * y).sum());
  return den > 0.0 ? (x * y).sum() / den : std::nan("");
}

// mean coherence per k from an exported coherence table
std::map<int, double> mean_by_k(const csv::Table& t) {
  std::map<int, double> out;
  const auto c_k = t.column("k");
  const auto c_mean = t.column("mean_coherence");
  for (std::size_t r = 0; r < t.rows.size(); ++r) out[std::stoi(t.rows[r][c_k])] = csv::to_double(t, r, c_mean);
  return out;
}

void coherence_table(StageContext& ctx) {
  const auto sel = ctx.read_json("select_k/selection.json");
  std::map<int, double> nmf, lda;
  if (sel.contains("best_k_nmf")) nmf = mean_by_k(ctx.read_csv("select_k/coherence_nmf.csv"));
  if (sel.contains("best_k_lda")) lda = mean_by_k(ctx.read_csv("select_k/coherence_lda.csv"));
  csv::Writer w({"k", "nmf_mean_coherence", "lda_mean_coherence", "nmf_best", "lda_best"});
  for (int k = sel.at("k_min").get<int>(); k <= sel.at("k_max").get<int>(); ++k) {
    auto cell = [&](const std::map<int, double>& m) { return m.count(k) ? csv::num(m.at(k)) : std::string("NA"); };
    auto best = [&](const char* key) {
      return sel.contains(key) ? std::string(sel[key].get<int>() == k ? "1" : "0") : std::string("NA");
    };
    w.row({std::to_string(k), cell(nmf), cell(lda), best("best_k_nmf"), best("best_k_lda")});
  }
  ctx.write_csv("report/coherence_by_k.csv", std::move(w));
}

void theme_weights(StageContext& ctx) {
  const auto t = ctx.read_csv("topics/themes.csv");
  const auto dates = date_column(t);
  std::vector<std::string> header;
  for (const auto& h : t.header) {
    if (h.rfind("theme_", 0) == 0) header.push_back(h);
  }
  std::vector<std::string> out_header{"date"};
  out_header.insert(out_header.end(), header.begin(), header.end());
  out_header.push_back("crisis");
  csv::Writer w(std::move(out_header));
  const auto& window = ctx.cfg.regress.crisis_window;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    std::vector<std::string> row{dates[r].iso()};
    for (const auto& h : header) row.push_back(csv::num(csv::to_double(t, r, t.column(h))));
    row.push_back(window.contains(dates[r]) ? "1" : "0");
    w.row(std::move(row));
  }
  ctx.write_csv("report/theme_weights.csv", std::move(w));
  ctx.write_json("report/theme_weights.json", {{"model", ctx.cfg.topics.model},
                                               {"crisis_window", {{"start", window.first.iso()}, {"end", window.last.iso()}}},
                                               {"themes", header}});
}

void factor_vs_proxy(StageContext& ctx) {
  if (!std::filesystem::exists(ctx.out / "curve/proxies.csv")) {
    ctx.log("no proxies available; factor-vs-proxy table skipped");
    return;
  }
  const auto px = ctx.read_csv("curve/proxies.csv");
  const auto f = ctx.read_csv("curve/factors.csv");
  const auto px_dates = date_column(px);
  const char* factors[] = {"level", "slope", "curvature"};
  csv::Writer w({"factor", "proxy", "source", "correlation", "n"});
  const auto c_src = f.column("source");
  const auto f_dates = date_column(f);
  for (const char* source : {"two-step-ols", "filtered", "smoothed"}) {
    std::vector<std::size_t> rows;
    for (std::size_t r = 0; r < f.rows.size(); ++r) {
      if (f.rows[r][c_src] == source) rows.push_back(r);
    }
    if (rows.size() != px_dates.size()) throw ValidationError(fmt::format("factor series '{}' does not match the proxy dates", source));
    for (const char* name : factors) {
      Eigen::VectorXd a(static_cast<Eigen::Index>(rows.size()));
      for (std::size_t i = 0; i < rows.size(); ++i) {
        if (f_dates[rows[i]] != px_dates[i]) throw ValidationError("factor and proxy dates disagree");
        a(static_cast<Eigen::Index>(i)) = csv::to_double(f, rows[i], f.column(name));
      }
      const Eigen::VectorXd b = numeric_column(px, std::string(name) + "_proxy");
      w.row({name, std::string(name) + "_proxy", source, csv::num(correlation(a, b)), std::to_string(rows.size())});
    }
  }
  ctx.write_csv("report/factor_vs_proxy.csv", std::move(w));
}

void regression_tables(StageContext& ctx) {
  const auto res = ctx.read_json("regress/results.json");
  std::string text;
  csv::Writer w({"table", "spec", "dependent", "regressor", "coef", "se", "t", "stars", "n", "adj_r2", "dropped", "note"});
  for (const auto& name : res.at("order")) {
    const auto table_name = name.get<std::string>();
    const auto t = ctx.read_csv("regress/" + table_name + ".csv");
    for (const auto& row : t.rows) {
      std::vector<std::string> out{table_name};
      for (const char* col : {"spec", "dependent", "regressor", "coef", "se", "t", "stars", "n", "adj_r2", "dropped", "note"}) {
        out.push_back(row[t.column(col)]);
      }
      w.row(std::move(out));
    }

    std::vector<econ::NamedFit> fits;
    for (const auto& jf : res.at("tables").at(table_name)) {
      econ::NamedFit nf;
      nf.spec = jf.at("spec").get<std::string>();
      nf.dependent = jf.at("dependent").get<std::string>();
      nf.fit.n = jf.at("n").get<Eigen::Index>();
      nf.fit.r2 = jf.at("r2").get<double>();
      nf.fit.adj_r2 = jf.at("adj_r2").get<double>();
      const auto& coefs = jf.at("coefficients");
      const auto p = static_cast<Eigen::Index>(coefs.size());
      nf.fit.beta.resize(p);
      nf.fit.se.resize(p);
      nf.fit.t.resize(p);
      for (Eigen::Index i = 0; i < p; ++i) {
        const auto& c = coefs[static_cast<std::size_t>(i)];
        nf.fit.names.push_back(c.at("regressor").get<std::string>());
        nf.fit.beta(i) = c.at("coef").get<double>();
        nf.fit.se(i) = c.at("se").get<double>();
        nf.fit.t(i) = c.at("t").get<double>();
      }
      for (const auto& d : jf.at("dropped")) {
        nf.fit.dropped.push_back({d.at("regressor").get<std::string>(), d.at("reason").get<std::string>()});
      }
      fits.push_back(std::move(nf));
    }
    text += econ::render_fits(table_name, fits) + "\n";
  }
  ctx.write_csv("report/regressions.csv", std::move(w));
  ctx.write_json("report/regressions.json", res);
  ctx.write_text("report/regressions.txt", text);
}

}  // namespace

void run_report(StageContext& ctx) {
  coherence_table(ctx);
  theme_weights(ctx);
  factor_vs_proxy(ctx);
  regression_tables(ctx);
}

}  // namespace fomc::pipeline
