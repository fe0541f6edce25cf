#include "fomc/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <sstream>

#include <fmt/format.h>

#include "fomc/coherence.hpp"
#include "fomc/digest.hpp"
#include "fomc/error.hpp"
#include "fomc/lda.hpp"
#include "fomc/nmf.hpp"
#include "stage_context.hpp"

#ifndef FOMC_VERSION
#define FOMC_VERSION "0.0.0"
#endif

namespace fomc::pipeline {

namespace fs = std::filesystem;

// ---- StageContext ----------------------------------------------------------

void StageContext::write_csv(const std::string& rel, csv::Writer w) {
  w.provenance(stage, config_hash);
  write_text(rel, w.str());
}

void StageContext::write_text(const std::string& rel, std::string_view content) {
  write_file(out / rel, content);
  written.push_back(rel);
}

void StageContext::write_json(const std::string& rel, const nlohmann::json& j) { write_text(rel, j.dump(2) + "\n"); }

csv::Table StageContext::read_csv(const std::string& rel) const {
  const fs::path p = out / rel;
  if (!fs::exists(p)) throw ValidationError(fmt::format("missing upstream artifact {}", rel));
  auto t = csv::parse(read_file(p), rel);
  return t;
}

nlohmann::json StageContext::read_json(const std::string& rel) const {
  const fs::path p = out / rel;
  if (!fs::exists(p)) throw ValidationError(fmt::format("missing upstream artifact {}", rel));
  try {
    return nlohmann::json::parse(read_file(p));
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(fmt::format("{}: {}", rel, e.what()));
  }
}

Eigen::VectorXd numeric_column(const csv::Table& t, const std::string& name) {
  const std::size_t c = t.column(name);
  Eigen::VectorXd v(static_cast<Eigen::Index>(t.rows.size()));
  for (std::size_t r = 0; r < t.rows.size(); ++r) v(static_cast<Eigen::Index>(r)) = csv::to_double(t, r, c);
  return v;
}

std::vector<Date> date_column(const csv::Table& t, const std::string& name) {
  const std::size_t c = t.column(name);
  std::vector<Date> out;
  out.reserve(t.rows.size());
  for (const auto& row : t.rows) out.push_back(Date::parse(row[c]));
  return out;
}

namespace {

// ---- stage helpers ---------------------------------------------------------

std::vector<text::TokenizedDocument> read_documents(const StageContext& ctx) {
  const auto t = ctx.read_csv("ingest/documents.csv");
  const auto c_date = t.column("date");
  const auto c_id = t.column("id");
  const auto c_tokens = t.column("tokens");
  std::vector<text::TokenizedDocument> docs;
  for (const auto& row : t.rows) {
    text::TokenizedDocument d{{row[c_id], Date::parse(row[c_date])}, {}};
    std::istringstream ss(row[c_tokens]);
    for (std::string tok; ss >> tok;) d.tokens.push_back(tok);
    docs.push_back(std::move(d));
  }
  return docs;
}

nmf::NmfConfig nmf_config(const PipelineConfig& cfg, int k) {
  nmf::NmfConfig c;
  c.k = k;
  c.max_iter = cfg.topics.nmf_max_iter;
  c.rel_tol = cfg.topics.nmf_rel_tol;
  c.init = nmf::parse_init(cfg.topics.nmf_init);
  c.seed = cfg.seed;
  return c;
}

lda::LdaConfig lda_config(const PipelineConfig& cfg, int k) {
  auto c = lda::LdaConfig::with_default_priors(k, cfg.seed);
  c.eta = cfg.topics.lda_eta;
  if (cfg.topics.lda_alpha) c.alpha = *cfg.topics.lda_alpha;
  c.burn_in = cfg.topics.lda_burn_in;
  c.sweeps = cfg.topics.lda_sweeps;
  return c;
}

coherence::CoherenceConfig coherence_config(const PipelineConfig& cfg) {
  coherence::CoherenceConfig c;
  c.top_n = cfg.topics.coherence_n;
  c.epsilon = cfg.topics.epsilon;
  c.k_min = cfg.topics.k_min;
  c.k_max = cfg.topics.k_max;
  return c;
}

struct Corpus {
  text::CountMatrix counts;
  text::WeightedDocTermMatrix tfidf;
  lda::LdaCorpus lda;
};

Corpus build_corpus(const PipelineConfig& cfg, const std::vector<text::TokenizedDocument>& docs) {
  Corpus c;
  c.counts = text::build_matrix(docs, {cfg.topics.min_df});
  c.tfidf = text::tfidf(c.counts);
  std::vector<text::TokenizedDocument> kept = docs;
  // Tokens of terms below min_df are not in the vocabulary.
  for (auto& d : kept) {
    std::erase_if(d.tokens, [&](const std::string& w) { return !c.counts.vocabulary.contains(w); });
  }
  c.lda = lda::make_corpus(kept, c.counts.vocabulary);
  return c;
}

bool run_nmf(const PipelineConfig& cfg) { return cfg.topics.model == "nmf" || cfg.topics.compare; }
bool run_lda(const PipelineConfig& cfg) { return cfg.topics.model == "lda" || cfg.topics.compare; }

// ---- stages ----------------------------------------------------------------

void stage_ingest(StageContext& ctx) {
  const Bundle b = ingest(ctx.cfg, ctx.log);
  csv::Writer docs({"date", "id", "n_tokens", "tokens"});
  for (const auto& d : b.documents) {
    std::string joined;
    for (const auto& t : d.tokens) joined += (joined.empty() ? "" : " ") + t;
    docs.row({d.key.date.iso(), d.key.id, std::to_string(d.tokens.size()), joined});
  }
  ctx.write_csv("ingest/documents.csv", std::move(docs));

  csv::Writer place({"statement_date", "trading_day", "shifted"});
  for (const auto& p : b.placements) place.row({p.statement.iso(), p.trading_day.iso(), p.shifted ? "1" : "0"});
  ctx.write_csv("ingest/placements.csv", std::move(place));

  csv::Writer cover({"date", "controls_complete"});
  std::size_t m = 0;
  for (const Date& d : b.panel.dates) {
    const bool missing = m < b.missing_controls.size() && b.missing_controls[m] == d;
    if (missing) ++m;
    cover.row({d.iso(), missing ? "0" : "1"});
  }
  ctx.write_csv("ingest/coverage.csv", std::move(cover));

  ctx.write_json("ingest/summary.json", {{"statements", b.documents.size()},
                                         {"statements_placed", b.placements.size()},
                                         {"statements_shifted", std::count_if(b.placements.begin(), b.placements.end(),
                                                                              [](const auto& p) { return p.shifted; })},
                                         {"yield_dates", b.panel.n_dates()},
                                         {"maturities", b.panel.n_maturities()},
                                         {"first_date", b.panel.dates.front().iso()},
                                         {"last_date", b.panel.dates.back().iso()},
                                         {"control_dates", b.controls.dates.size()},
                                         {"dates_missing_controls", b.missing_controls.size()}});
}

void stage_select_k(StageContext& ctx) {
  const auto& cfg = ctx.cfg;
  const auto docs = read_documents(ctx);
  const Corpus corpus = build_corpus(cfg, docs);
  const auto ccfg = coherence_config(cfg);
  nlohmann::json sel{{"model", cfg.topics.model}, {"k_min", ccfg.k_min}, {"k_max", ccfg.k_max}};

  if (run_nmf(cfg)) {
    auto report = coherence::select_k(corpus.counts, ccfg, [&](int k) {
      return nmf::fit(corpus.tfidf, nmf_config(cfg, k)).H;
    });
    ctx.write_csv("select_k/coherence_nmf.csv", coherence::export_report(report));
    sel["best_k_nmf"] = report.best_k;
    ctx.log(fmt::format("NMF coherence favours k={}", report.best_k));
  }
  if (run_lda(cfg)) {
    auto report = coherence::select_k(corpus.counts, ccfg, [&](int k) {
      return lda::fit_lda(corpus.lda, lda_config(cfg, k)).posterior.beta;
    });
    ctx.write_csv("select_k/coherence_lda.csv", coherence::export_report(report));
    sel["best_k_lda"] = report.best_k;
    ctx.log(fmt::format("LDA coherence favours k={}", report.best_k));
  }
  sel["selected_k"] = sel["best_k_" + cfg.topics.model];
  ctx.write_json("select_k/selection.json", sel);
}

void write_top_terms(csv::Writer& w, const std::string& model, const Eigen::MatrixXd& topic_term,
                     const text::Vocabulary& vocab, std::size_t n) {
  n = std::min<std::size_t>(n, vocab.size());
  for (Eigen::Index t = 0; t < topic_term.rows(); ++t) {
    const auto top = nmf::top_terms(topic_term, t, n);
    for (std::size_t r = 0; r < top.size(); ++r) {
      w.row({model, std::to_string(t + 1), std::to_string(r + 1), vocab.term(top[r]),
             csv::num(topic_term(t, static_cast<Eigen::Index>(top[r])))});
    }
  }
}

csv::Writer themes_table(const std::vector<text::DocKey>& docs, const Eigen::MatrixXd& shares) {
  std::vector<std::string> header{"date"};
  for (Eigen::Index t = 0; t < shares.cols(); ++t) header.push_back(fmt::format("theme_{}", t + 1));
  csv::Writer w(std::move(header));
  for (Eigen::Index i = 0; i < shares.rows(); ++i) {
    std::vector<std::string> row{docs[static_cast<std::size_t>(i)].date.iso()};
    for (Eigen::Index t = 0; t < shares.cols(); ++t) row.push_back(csv::num(shares(i, t)));
    w.row(std::move(row));
  }
  return w;
}

void stage_topics(StageContext& ctx) {
  const auto& cfg = ctx.cfg;
  int k = 0;
  if (cfg.topics.k) {
    k = *cfg.topics.k;
  } else {
    const auto sel = ctx.read_json("select_k/selection.json");
    k = sel.at("selected_k").get<int>();
  }
  const auto docs = read_documents(ctx);
  const Corpus corpus = build_corpus(cfg, docs);
  ctx.write_csv("topics/tfidf.csv", text::export_matrix(corpus.tfidf));
  csv::Writer top({"model", "topic", "rank", "term", "weight"});
  Eigen::MatrixXd shares;

  if (run_nmf(cfg)) {
    const auto model = nmf::fit(corpus.tfidf, nmf_config(cfg, k));
    if (!model.converged) ctx.log(fmt::format("NMF stopped after {} iterations without converging", model.iterations));
    ctx.write_csv("topics/nmf_W.csv", nmf::export_w(model, corpus.tfidf.docs));
    ctx.write_csv("topics/nmf_H.csv", nmf::export_h(model, corpus.tfidf.vocabulary));
    ctx.write_json("topics/nmf.json", nmf::sidecar(model));
    write_top_terms(top, "nmf", model.H, corpus.counts.vocabulary, cfg.topics.coherence_n);
    if (cfg.topics.model == "nmf") {
      shares = model.W;
      for (Eigen::Index i = 0; i < shares.rows(); ++i) {
        const double s = shares.row(i).sum();
        if (s > 0.0) shares.row(i) /= s;
      }
    }
  }
  if (run_lda(cfg)) {
    const auto fit = lda::fit_lda(corpus.lda, lda_config(cfg, k));
    ctx.write_csv("topics/lda_theta.csv", lda::export_theta(fit.posterior, corpus.counts.docs));
    ctx.write_csv("topics/lda_beta.csv", lda::export_beta(fit.posterior, corpus.counts.vocabulary));
    ctx.write_json("topics/lda.json", lda::sidecar(fit.config));
    write_top_terms(top, "lda", fit.posterior.beta, corpus.counts.vocabulary, cfg.topics.coherence_n);
    if (cfg.topics.model == "lda") shares = fit.posterior.theta;
  }
  ctx.write_csv("topics/top_terms.csv", std::move(top));
  ctx.write_csv("topics/themes.csv", themes_table(corpus.counts.docs, shares));
}

nlohmann::json optimizer_json(const BfgsResult& r) {
  return {{"iterations", r.iterations}, {"evaluations", r.evaluations}, {"converged", r.converged},
          {"message", r.message}, {"objective", r.f}, {"max_abs_gradient", r.grad.size() ? r.grad.lpNorm<Eigen::Infinity>() : 0.0}};
}

void stage_curve(StageContext& ctx) {
  const auto& cfg = ctx.cfg;
  const auto panel = curve::load_yield_panel(cfg.resolve(cfg.paths.yields), cfg.curve.allow_missing);
  if (panel.has_missing()) {
    ctx.log("yield panel has missing cells; cross-sections and the filter use the observed maturities only");
  }
  const auto ts = curve::two_step(panel, cfg.curve.lambda);
  const auto init = curve::initial_model(panel, ts, cfg.curve.lambda);
  curve::MleOptions opts;
  opts.estimate_lambda = cfg.curve.estimate_lambda;
  opts.bfgs.max_iter = cfg.curve.mle_max_iter;
  opts.bfgs.max_evals = cfg.curve.mle_max_evals;
  opts.bfgs.grad_tol = cfg.curve.mle_grad_tol;
  const auto fit = curve::mle_fit(panel, init, opts);
  if (fit.warning) ctx.log(fmt::format("MLE did not converge: {}", fit.optimizer.message));

  const auto filtered = curve::filtered_factors(fit.model, fit.filter, panel.dates);
  const auto smoothed = curve::smoothed_factors(fit.model, fit.smoother, panel.dates);
  ctx.write_csv("curve/factors.csv", curve::export_factors({ts.factors, filtered, smoothed}));

  auto var_json = nlohmann::json{{"mu", {ts.var.mu(0), ts.var.mu(1), ts.var.mu(2)}}, {"n_obs", ts.var.n_obs}};
  nlohmann::json A = nlohmann::json::array(), Q = nlohmann::json::array();
  for (int i = 0; i < 3; ++i) {
    A.push_back({ts.var.A(i, 0), ts.var.A(i, 1), ts.var.A(i, 2)});
    Q.push_back({ts.var.Q(i, 0), ts.var.Q(i, 1), ts.var.Q(i, 2)});
  }
  var_json["A"] = A;
  var_json["Q"] = Q;
  nlohmann::json starts = nlohmann::json::array();
  for (const auto& s : fit.starts) {
    starts.push_back({{"name", s.name}, {"start_loglik", s.start_loglik}, {"loglik", s.loglik},
                      {"optimizer", optimizer_json(s.optimizer)}});
  }
  ctx.write_json("curve/model.json", {{"two_step_var", var_json},
                                      {"initial_model", curve::model_json(init)},
                                      {"fitted_model", curve::model_json(fit.model)},
                                      {"initial_loglik", fit.initial_loglik},
                                      {"loglik", fit.loglik},
                                      {"estimate_lambda", cfg.curve.estimate_lambda},
                                      {"optimizer", optimizer_json(fit.optimizer)},
                                      {"starts", starts},
                                      {"warning", fit.warning}});

  if (panel.maturities.size() > 0) {
    try {
      const auto px = curve::empirical_proxies(panel);
      csv::Writer w({"date", "level_proxy", "slope_proxy", "curvature_proxy"});
      for (Eigen::Index t = 0; t < panel.n_dates(); ++t) {
        w.row({panel.dates[static_cast<std::size_t>(t)].iso(), csv::num(px.level(t)), csv::num(px.slope(t)),
               csv::num(px.curvature(t))});
      }
      ctx.write_csv("curve/proxies.csv", std::move(w));
    } catch (const ValidationError& e) {
      ctx.log(fmt::format("no empirical proxies: {}", e.what()));
    }
  }
}

curve::FactorSeries read_factors(const StageContext& ctx, const std::string& source) {
  const auto t = ctx.read_csv("curve/factors.csv");
  const auto c_src = t.column("source");
  const auto c_date = t.column("date");
  const auto c_l = t.column("level"), c_s = t.column("slope"), c_c = t.column("curvature");
  curve::FactorSeries f;
  std::vector<std::size_t> rows;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    if (t.rows[r][c_src] == source) rows.push_back(r);
  }
  if (rows.empty()) throw ValidationError(fmt::format("curve/factors.csv has no '{}' rows", source));
  f.values.resize(static_cast<Eigen::Index>(rows.size()), 3);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto r = rows[i];
    f.dates.push_back(Date::parse(t.rows[r][c_date]));
    f.values(static_cast<Eigen::Index>(i), 0) = csv::to_double(t, r, c_l);
    f.values(static_cast<Eigen::Index>(i), 1) = csv::to_double(t, r, c_s);
    f.values(static_cast<Eigen::Index>(i), 2) = csv::to_double(t, r, c_c);
  }
  return f;
}

econ::ThemeWeights read_themes(const StageContext& ctx) {
  const auto t = ctx.read_csv("topics/themes.csv");
  econ::ThemeWeights w;
  w.dates = date_column(t);
  int K = 0;
  while (std::find(t.header.begin(), t.header.end(), fmt::format("theme_{}", K + 1)) != t.header.end()) ++K;
  w.weights.resize(static_cast<Eigen::Index>(t.rows.size()), K);
  for (int k = 0; k < K; ++k) w.weights.col(k) = numeric_column(t, fmt::format("theme_{}", k + 1));
  return w;
}

csv::Writer dataset_table(const econ::DailyDataset& d) {
  std::vector<std::string> header{"date", "abs_dlevel", "abs_dslope", "abs_dcurvature"};
  for (Eigen::Index k = 0; k < d.n_themes(); ++k) header.push_back(fmt::format("dtheme_{}", k + 1));
  for (const char* c : {"event", "crisis", "term_spread", "credit_spread", "vix"}) header.push_back(c);
  csv::Writer w(std::move(header));
  for (Eigen::Index t = 0; t < d.n_dates(); ++t) {
    std::vector<std::string> row{d.dates[static_cast<std::size_t>(t)].iso(), csv::num(d.abs_dL(t)),
                                 csv::num(d.abs_dS(t)), csv::num(d.abs_dC(t))};
    for (Eigen::Index k = 0; k < d.n_themes(); ++k) row.push_back(csv::num(d.dtheme(t, k)));
    row.push_back(csv::num(d.event(t)));
    row.push_back(csv::num(d.crisis(t)));
    for (double v : {d.term_spread(t), d.credit_spread(t), d.vix(t)}) row.push_back(std::isfinite(v) ? csv::num(v) : "NA");
    w.row(std::move(row));
  }
  return w;
}

constexpr econ::Dependent kDependents[] = {econ::Dependent::Level, econ::Dependent::Slope, econ::Dependent::Curvature};

void stage_regress(StageContext& ctx) {
  const auto& cfg = ctx.cfg;
  const auto factors = read_factors(ctx, cfg.curve.factors);
  const auto themes = read_themes(ctx);
  const auto controls = econ::load_controls(cfg.resolve(cfg.paths.controls));
  const auto data = econ::build_daily(factors, themes, controls, cfg.regress.crisis_window);
  ctx.write_csv("regress/dataset.csv", dataset_table(data));

  std::vector<std::pair<std::string, std::vector<econ::NamedFit>>> tables;
  auto dep_name = [](econ::Dependent d) { return "abs_d" + econ::to_string(d); };

  std::vector<econ::NamedFit> event, event_crisis;
  for (auto d : kDependents) {
    event.push_back({econ::to_string(d), dep_name(d), econ::event_study(data, d, false)});
    event_crisis.push_back({econ::to_string(d), dep_name(d), econ::event_study(data, d, true)});
  }
  tables.emplace_back("event_study", std::move(event));
  tables.emplace_back("event_study_crisis", std::move(event_crisis));

  auto theme_table = [&](const std::string& name, econ::SpecConfig base) {
    std::vector<econ::NamedFit> fits;
    for (auto d : kDependents) {
      base.dependent = d;
      base.name = econ::to_string(d);
      try {
        fits.push_back({base.name, dep_name(d), econ::theme_regression(data, base)});
      } catch (const ValidationError& e) {
        ctx.log(fmt::format("{} / {} skipped: {}", name, base.name, e.what()));
      }
    }
    if (!fits.empty()) tables.emplace_back(name, std::move(fits));
  };

  econ::SpecConfig baseline;
  baseline.crisis_window = cfg.regress.crisis_window;
  theme_table("themes", baseline);
  econ::SpecConfig crisis = baseline;
  crisis.include_crisis = true;
  crisis.include_interactions = true;
  theme_table("themes_crisis", crisis);
  for (const auto& s : cfg.regress.samples) {
    econ::SpecConfig sub = baseline;
    sub.sample = s.range;
    theme_table("themes_" + s.name, sub);
  }

  const auto K = static_cast<int>(data.n_themes());
  if (K >= 2) {
    std::vector<econ::NamedFit> loo;
    for (int drop = 1; drop <= K; ++drop) {
      econ::SpecConfig spec = baseline;
      spec.dependent = econ::Dependent::Curvature;
      for (int k = 1; k <= K; ++k) {
        if (k != drop) spec.themes.push_back(k);
      }
      spec.name = fmt::format("without_theme_{}", drop);
      loo.push_back({spec.name, dep_name(spec.dependent), econ::theme_regression(data, spec)});
    }
    tables.emplace_back("themes_leave_one_out", std::move(loo));
  }

  nlohmann::json all = nlohmann::json::object();
  nlohmann::json order = nlohmann::json::array();
  for (const auto& [name, fits] : tables) {
    ctx.write_csv("regress/" + name + ".csv", econ::export_fits(fits));
    all[name] = econ::fits_json(fits);
    order.push_back(name);
  }
  ctx.write_json("regress/results.json", {{"tables", all},
                                          {"order", order},
                                          {"factor_source", cfg.curve.factors},
                                          {"crisis_window", cfg.regress.crisis_window.str()},
                                          {"missing_controls", data.missing_controls().size()}});
}

// ---- dependency graph ------------------------------------------------------

std::vector<Stage> upstream_of(Stage s, const PipelineConfig& cfg) {
  switch (s) {
    case Stage::Ingest: return {};
    case Stage::SelectK: return {Stage::Ingest};
    case Stage::Topics:
      if (cfg.topics.k) return {Stage::Ingest};
      return {Stage::Ingest, Stage::SelectK};
    case Stage::Curve: return {};
    case Stage::Regress: return {Stage::Topics, Stage::Curve};
    case Stage::Report: return {Stage::SelectK, Stage::Topics, Stage::Curve, Stage::Regress};
  }
  return {};
}

std::string stage_dir(Stage s) {
  switch (s) {
    case Stage::Ingest: return "ingest";
    case Stage::SelectK: return "select_k";
    case Stage::Topics: return "topics";
    case Stage::Curve: return "curve";
    case Stage::Regress: return "regress";
    case Stage::Report: return "report";
  }
  return "unknown";
}

}  // namespace

std::string to_string(Stage s) {
  switch (s) {
    case Stage::Ingest: return "ingest";
    case Stage::SelectK: return "select-k";
    case Stage::Topics: return "topics";
    case Stage::Curve: return "curve";
    case Stage::Regress: return "regress";
    case Stage::Report: return "report";
  }
  return "unknown";
}

Stage parse_stage(const std::string& name) {
  for (Stage s : all_stages()) {
    if (to_string(s) == name) return s;
  }
  throw ValidationError(fmt::format("unknown stage '{}'", name));
}

const std::vector<Stage>& all_stages() {
  static const std::vector<Stage> stages{Stage::Ingest, Stage::SelectK, Stage::Topics,
                                         Stage::Curve,  Stage::Regress, Stage::Report};
  return stages;
}

// ---- Runner ----------------------------------------------------------------

Runner::Runner(PipelineConfig cfg, LogSink log)
    : cfg_(std::move(cfg)), log_(std::move(log)), out_(cfg_.output_dir()), config_hash_(cfg_.hash()) {
  manifest_ = nlohmann::json::object();
  const fs::path mpath = out_ / "run_manifest.json";
  if (fs::exists(mpath)) {
    try {
      manifest_ = nlohmann::json::parse(read_file(mpath));
    } catch (const nlohmann::json::exception&) {
      log_("run_manifest.json is unreadable; all stages will run");
      manifest_ = nlohmann::json::object();
    }
  }
  if (!manifest_.contains("stages") || !manifest_["stages"].is_object()) manifest_["stages"] = nlohmann::json::object();
  const fs::path tpath = out_ / "timings.json";
  timings_ = nlohmann::json::object();
  if (fs::exists(tpath)) {
    try {
      timings_ = nlohmann::json::parse(read_file(tpath));
    } catch (const nlohmann::json::exception&) {
      timings_ = nlohmann::json::object();
    }
  }
}

std::map<std::string, std::string> Runner::input_digests(Stage stage) const {
  std::map<std::string, std::string> d;
  auto file = [&](const std::string& key, const std::string& path) {
    const fs::path p = cfg_.resolve(path);
    if (!fs::exists(p)) throw ValidationError(fmt::format("input {} not found: {}", key, p.string()));
    d[key] = sha256_file(p);
  };
  switch (stage) {
    case Stage::Ingest:
      d["statements"] = sha256_tree(cfg_.resolve(cfg_.paths.statements));
      file("yields", cfg_.paths.yields);
      file("controls", cfg_.paths.controls);
      file("stopwords", cfg_.paths.stopwords);
      file("names", cfg_.paths.names);
      file("voting_markers", cfg_.paths.voting_markers);
      file("lemma_rules", cfg_.paths.lemma_rules);
      break;
    case Stage::Curve: file("yields", cfg_.paths.yields); break;
    case Stage::Regress: file("controls", cfg_.paths.controls); break;
    default: break;
  }
  return d;
}

void Runner::check_upstream(Stage stage) const {
  for (Stage up : upstream_of(stage, cfg_)) {
    const auto name = to_string(up);
    const auto& stages = manifest_["stages"];
    if (!stages.contains(name)) {
      throw ValidationError(fmt::format("missing upstream artifact: stage '{}' has not run; run `fomc {}` first", name, name));
    }
    for (const auto& [rel, digest] : stages[name]["outputs"].items()) {
      const fs::path p = out_ / rel;
      if (!fs::exists(p)) {
        throw ValidationError(fmt::format("missing upstream artifact {}; rerun `fomc {}`", rel, name));
      }
      if (sha256_file(p) != digest.get<std::string>()) {
        throw ValidationError(fmt::format("stale digest: {} changed since stage '{}' ran; rerun `fomc {}`", rel, name, name));
      }
    }
  }
}

std::string Runner::stage_key(Stage stage) const {
  nlohmann::json k;
  k["stage"] = to_string(stage);
  k["config_hash"] = config_hash_;
  k["inputs"] = input_digests(stage);
  nlohmann::json up = nlohmann::json::object();
  for (Stage s : upstream_of(stage, cfg_)) up[to_string(s)] = manifest_["stages"][to_string(s)]["outputs"];
  k["upstream"] = up;
  k["version"] = FOMC_VERSION;
  return sha256(k.dump());
}

std::vector<std::string> Runner::execute(Stage stage) {
  StageContext ctx{cfg_, out_, config_hash_, to_string(stage), log_, {}};
  fs::remove_all(out_ / stage_dir(stage));
  switch (stage) {
    case Stage::Ingest: stage_ingest(ctx); break;
    case Stage::SelectK: stage_select_k(ctx); break;
    case Stage::Topics: stage_topics(ctx); break;
    case Stage::Curve: stage_curve(ctx); break;
    case Stage::Regress: stage_regress(ctx); break;
    case Stage::Report: run_report(ctx); break;
  }
  return ctx.written;
}

void Runner::save_manifest() const {
  write_file(out_ / "run_manifest.json", manifest_.dump(2) + "\n");
  write_file(out_ / "timings.json", timings_.dump(2) + "\n");
}

StageResult Runner::run(Stage stage, bool force) {
  check_upstream(stage);
  const std::string key = stage_key(stage);
  const std::string name = to_string(stage);
  StageResult result{stage, false, {}};

  auto& entry = manifest_["stages"][name];
  if (!force && entry.is_object() && entry.value("key", "") == key) {
    bool intact = true;
    for (const auto& [rel, digest] : entry["outputs"].items()) {
      const fs::path p = out_ / rel;
      if (!fs::exists(p) || sha256_file(p) != digest.get<std::string>()) {
        intact = false;
        break;
      }
      result.outputs.push_back(rel);
    }
    if (intact) {
      result.cached = true;
      log_(fmt::format("[{}] cached", name));
      return result;
    }
    result.outputs.clear();
  }

  log_(fmt::format("[{}] running", name));
  const auto start = std::chrono::steady_clock::now();
  result.outputs = execute(stage);
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  nlohmann::json outputs = nlohmann::json::object();
  for (const auto& rel : result.outputs) outputs[rel] = sha256_file(out_ / rel);
  manifest_["tool_version"] = FOMC_VERSION;
  manifest_["config_hash"] = config_hash_;
  manifest_["stages"][name] = {{"key", key}, {"inputs", input_digests(stage)}, {"outputs", outputs}};
  timings_[name] = seconds;
  save_manifest();
  log_(fmt::format("[{}] wrote {} file(s) in {:.2f}s", name, result.outputs.size(), seconds));
  return result;
}

std::vector<StageResult> Runner::run_all(const std::optional<Stage>& force) {
  std::vector<StageResult> out;
  for (Stage s : all_stages()) out.push_back(run(s, force && *force == s));
  return out;
}

}  // namespace fomc::pipeline
