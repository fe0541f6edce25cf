// Acceptance gate: one PASS/FAIL line per criterion. Tolerances and time
// budgets are fixed below. Exit status is nonzero when any criterion fails
// other than those listed as known failures in main().
//
// AC11 needs user-supplied data: set FOMC_ACCEPTANCE_CONFIG to a pipeline
// config that points at a real statement corpus, yield panel and controls.

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <functional>
#include <iostream>
#include <map>
#include <set>

#include <fmt/format.h>

#include "fixtures.hpp"
#include "fomc/coherence.hpp"
#include "fomc/digest.hpp"
#include "fomc/econometrics.hpp"
#include "fomc/error.hpp"
#include "fomc/lda.hpp"
#include "fomc/nmf.hpp"
#include "fomc/termstructure.hpp"
#include "golden.hpp"
#include "oracles.hpp"

using namespace fomc;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  enum Kind { Pass, Fail, Skip } kind = Pass;
  std::string detail;
};

Outcome pass(std::string d) { return {Outcome::Pass, std::move(d)}; }
Outcome fail(std::string d) { return {Outcome::Fail, std::move(d)}; }

// Collects failed checks; the first message is reported.
struct Checks {
  std::vector<std::string> failures;
  void expect(bool ok, const std::string& what) {
    if (!ok) failures.push_back(what);
  }
  Outcome outcome(const std::string& summary) const {
    if (failures.empty()) return pass(summary);
    return fail(fmt::format("{} ({} failed check(s))", failures.front(), failures.size()));
  }
};

Eigen::MatrixXd uniform(Eigen::Index r, Eigen::Index c, Rng& rng) {
  Eigen::MatrixXd m(r, c);
  for (Eigen::Index i = 0; i < r; ++i) {
    for (Eigen::Index j = 0; j < c; ++j) m(i, j) = rng.uniform();
  }
  return m;
}

Eigen::Index between(Rng& rng, Eigen::Index lo, Eigen::Index hi) {
  return lo + static_cast<Eigen::Index>(rng.index(static_cast<std::size_t>(hi - lo + 1)));
}

Outcome ac1_tfidf() {
  constexpr double kTol = 1e-12;
  Rng rng(101);
  Checks c;
  double worst = 0.0;
  for (int rep = 0; rep < 10; ++rep) {
    const auto counts = fixture::random_counts(between(rng, 2, 20), between(rng, 2, 50), 6, rng);
    const auto w = text::tfidf(fixture::count_matrix(counts)).weights;
    const double err = (w - oracle::tfidf(counts)).cwiseAbs().maxCoeff();
    worst = std::max(worst, err);
    c.expect(err <= kTol, fmt::format("matrix {} differs by {:.3g}", rep, err));
  }
  return c.outcome(fmt::format("10 matrices, max |diff| {:.2g} <= {:g}", worst, kTol));
}

Outcome ac2_nmf_monotone() {
  constexpr double kSlack = 1e-10;
  constexpr double kFixedTol = 1e-8;
  Rng rng(102);
  Checks c;
  int steps = 0;
  for (int rep = 0; rep < 25; ++rep) {
    const Eigen::Index n = between(rng, 5, 50), m = between(rng, 5, 80);
    const Eigen::Index k = between(rng, 1, 5);
    const Eigen::MatrixXd A = uniform(n, m, rng);
    Eigen::MatrixXd W = uniform(n, k, rng), H = uniform(k, m, rng);
    double prev = nmf::objective(A, W, H);
    for (int it = 0; it < 200; ++it, ++steps) {
      nmf::update_step(A, W, H, 1e-12);
      const double cur = nmf::objective(A, W, H);
      c.expect(cur <= prev * (1.0 + kSlack), fmt::format("matrix {} step {}: {} -> {}", rep, it, prev, cur));
      prev = cur;
    }
    const Eigen::MatrixXd W0 = uniform(n, k, rng).array() + 0.1;
    const Eigen::MatrixXd H0 = uniform(k, m, rng).array() + 0.1;
    Eigen::MatrixXd W1 = W0, H1 = H0;
    nmf::update_step(W0 * H0, W1, H1, 1e-300);
    const double drift = std::max(((W1 - W0).array() / W0.array()).abs().maxCoeff(),
                                  ((H1 - H0).array() / H0.array()).abs().maxCoeff());
    c.expect(drift <= kFixedTol, fmt::format("matrix {}: fixed point moved by {:.3g}", rep, drift));
  }
  return c.outcome(fmt::format("25 matrices, {} monotone steps, fixed points within {:g}", steps, kFixedTol));
}

Outcome ac3_nmf_planted() {
  const auto corpus = fixture::planted_corpus(3, 20, 10, 40, 103);
  const auto counts = text::build_matrix(corpus.docs);
  const auto A = text::tfidf(counts);
  Checks c;
  nmf::NmfConfig cfg;
  cfg.k = 3;
  const auto model = nmf::fit(A, cfg);
  std::set<int> owners;
  for (Eigen::Index k = 0; k < 3; ++k) {
    std::set<int> blocks;
    for (auto j : nmf::top_terms(model.H, k, 5)) blocks.insert(corpus.block_of_term(counts.vocabulary.term(j)));
    c.expect(blocks.size() == 1, fmt::format("topic {} top-5 spans {} blocks", k, blocks.size()));
    owners.insert(*blocks.begin());
  }
  c.expect(owners.size() == 3, "two topics share a block");

  const auto selection = fixture::three_block_corpus(103);
  const auto sel_counts = text::build_matrix(selection.docs);
  const auto sel_A = text::tfidf(sel_counts);
  coherence::CoherenceConfig ccfg;
  ccfg.top_n = 6;
  ccfg.k_min = 2;
  ccfg.k_max = 6;
  const auto report = coherence::select_k(sel_counts, ccfg, [&](int k) {
    nmf::NmfConfig kc;
    kc.k = k;
    return nmf::fit(sel_A, kc).H;
  });
  c.expect(report.best_k == 3, fmt::format("select_k returned {}", report.best_k));
  return c.outcome(fmt::format("top-5 terms block-pure, select_k over [2,6] -> {}", report.best_k));
}

Outcome ac4_coherence() {
  constexpr double kTol = 1e-12;
  Rng rng(104);
  Checks c;
  double worst = 0.0;
  for (int rep = 0; rep < 20; ++rep) {
    const Eigen::Index D = between(rng, 5, 25), M = between(rng, 6, 30);
    const auto counts = fixture::random_counts(D, M, 2, rng);
    const auto m = fixture::count_matrix(counts);
    const auto sets = oracle::doc_sets(counts);
    std::vector<std::size_t> pool(static_cast<std::size_t>(M));
    for (std::size_t j = 0; j < pool.size(); ++j) pool[j] = j;
    for (std::size_t j = pool.size() - 1; j > 0; --j) std::swap(pool[j], pool[rng.index(j + 1)]);
    const std::size_t N = static_cast<std::size_t>(between(rng, 2, std::min<Eigen::Index>(M, 10)));
    const std::vector<std::size_t> top(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(N));
    const double e1 = std::abs(coherence::tc_lcp_raw(top, m) - oracle::lcp_raw(sets, top));
    const double e2 = std::abs(coherence::tc_lcp_star(top, m, 1e-12) - oracle::lcp_star(sets, top, 1e-12));
    worst = std::max({worst, e1, e2});
    c.expect(e1 <= kTol && e2 <= kTol, fmt::format("fixture {}: raw diff {:.3g}, star diff {:.3g}", rep, e1, e2));
  }
  c.expect(coherence::normalization(15) == 1.0 / 105.0, "normalization(15) != 1/105");
  return c.outcome(fmt::format("20 fixtures, max |diff| {:.2g}; N=15 constant is 1/105", worst));
}

Outcome ac5_lda() {
  Checks c;
  // Count invariants after every sweep.
  {
    Rng rng(105);
    lda::LdaCorpus corpus;
    corpus.vocab_size = 30;
    for (int d = 0; d < 10; ++d) {
      std::vector<int> words;
      for (int n = 0; n < 50; ++n) words.push_back(static_cast<int>(rng.index(30)));
      corpus.docs.push_back(std::move(words));
    }
    const auto cfg = lda::LdaConfig::with_default_priors(3, 0);
    auto state = lda::init_state(corpus, cfg, rng);
    for (int s = 0; s < 50; ++s) {
      lda::gibbs_sweep(state, corpus, cfg, rng);
      try {
        state.check(corpus);
      } catch (const NumericalError& e) {
        c.expect(false, fmt::format("sweep {}: {}", s, e.what()));
        break;
      }
    }
  }
  // Empirical conditional frequencies on a two-token toy.
  double z = 0.0;
  {
    lda::LdaCorpus corpus{{{0, 1}}, 2};
    lda::LdaConfig cfg;
    cfg.K = 2;
    cfg.alpha = 0.7;
    cfg.eta = 0.3;
    auto state = lda::init_state(corpus, cfg, [] { return 0.0; });
    const Eigen::VectorXd p = lda::full_conditional(state, corpus, cfg, 0, 1);
    const double analytic = ((1 + 0.7) * (0 + 0.3) / (1 + 0.6)) /
                            ((1 + 0.7) * (0 + 0.3) / (1 + 0.6) + (0 + 0.7) * (0 + 0.3) / (0 + 0.6));
    c.expect(std::abs(p(0) / p.sum() - analytic) < 1e-15, "full conditional disagrees with the formula");
    Rng rng(106);
    const int draws = 100000;
    int hits = 0;
    for (int i = 0; i < draws; ++i) hits += lda::resample_token(state, corpus, cfg, 0, 1, rng.uniform()) == 0 ? 1 : 0;
    const double freq = hits / static_cast<double>(draws);
    z = (freq - analytic) / std::sqrt(analytic * (1 - analytic) / draws);
    c.expect(std::abs(z) <= 3.0, fmt::format("conditional frequency off by {:.2f} sigma", z));
  }
  // Planted recovery.
  double min_mass = 1.0;
  {
    const auto planted = fixture::planted_corpus(2, 20, 10, 50, 107);
    const auto counts = text::build_matrix(planted.docs);
    const auto corpus = lda::make_corpus(planted.docs, counts.vocabulary);
    auto cfg = lda::LdaConfig::with_default_priors(2, 108);
    cfg.burn_in = 100;
    cfg.sweeps = 300;
    const auto fit = lda::fit_lda(corpus, cfg);
    for (int k = 0; k < 2; ++k) {
      std::vector<double> mass(2, 0.0);
      for (std::size_t j = 0; j < counts.vocabulary.size(); ++j) {
        mass[static_cast<std::size_t>(planted.block_of_term(counts.vocabulary.term(j)))] +=
            fit.posterior.beta(k, static_cast<Eigen::Index>(j));
      }
      min_mass = std::min(min_mass, std::max(mass[0], mass[1]));
    }
    c.expect(min_mass >= 0.9, fmt::format("planted topic mass {:.3f} < 0.9", min_mass));
  }
  return c.outcome(fmt::format("invariants hold, conditional z={:.2f}, planted mass >= {:.3f}", z, min_mass));
}

Outcome ac6_nelson_siegel() {
  Checks c;
  const auto L = curve::ns_loadings(Eigen::VectorXd::LinSpaced(360, 1, 360), 0.0609);
  Eigen::Index arg = 0;
  L.Z.col(2).maxCoeff(&arg);
  c.expect(arg + 1 == 30, fmt::format("curvature peak at {} months, not 30: the continuous peak is at "
                                       "x*/lambda = 1.793282/0.0609 = 29.45 and C(29) > C(30)",
                                       arg + 1));
  const auto L10 = curve::ns_loadings(fixture::maturities(), 0.0609);
  Rng rng(109);
  double worst = 0.0;
  for (int rep = 0; rep < 20; ++rep) {
    const Eigen::Vector3d f(2 + 4 * rng.uniform(), -3 + 4 * rng.uniform(), -2 + 4 * rng.uniform());
    worst = std::max(worst, (curve::fit_cross_section(L10.Z * f, L10) - f).cwiseAbs().maxCoeff());
  }
  c.expect(worst <= 1e-10, fmt::format("noiseless recovery error {:.3g}", worst));
  return c.outcome(fmt::format("curvature argmax {} months, recovery error {:.2g}", arg + 1, worst));
}

Outcome ac7_kalman() {
  constexpr double kTol = 1e-8;
  Checks c;
  double worst = 0.0;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    auto m = fixture::small_model();
    Rng rng(110 + seed);
    m.T(0, 1) += 0.05 * rng.normal();
    m.mu(2) += rng.normal();
    const auto panel = curve::simulate(m, fixture::small_maturities(), fixture::business_days(Date(2001, 1, 2), 4), rng);
    const auto oracle = oracle::joint_gaussian(m, panel.yields);
    const auto filter = curve::kalman_filter(m, panel);
    const auto smooth = curve::kalman_smooth(m, filter);
    const auto f = curve::smoothed_factors(m, smooth, panel.dates);
    double err = std::abs(filter.loglik - oracle.loglik);
    for (Eigen::Index t = 0; t < 4; ++t) {
      err = std::max(err, (f.values.row(t).transpose() - oracle.smoothed[static_cast<std::size_t>(t)]).cwiseAbs().maxCoeff());
      const Eigen::Matrix3d gap = filter.P_pred[static_cast<std::size_t>(t)] - smooth.V[static_cast<std::size_t>(t)];
      const double min_gap = Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d>(0.5 * (gap + gap.transpose())).eigenvalues().minCoeff();
      const double min_v = Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d>(smooth.V[static_cast<std::size_t>(t)]).eigenvalues().minCoeff();
      c.expect(min_gap >= -1e-12 && min_v >= -1e-12, fmt::format("toy {} date {}: V not below P", seed, t));
    }
    worst = std::max(worst, err);
    c.expect(err <= kTol, fmt::format("toy {}: oracle difference {:.3g}", seed, err));
  }
  return c.outcome(fmt::format("5 toys, max |diff| {:.2g} <= {:g}, V <= P", worst, kTol));
}

Outcome ac8_mle() {
  const auto truth = fixture::reference_model();
  Rng rng(120);
  const auto dates = fixture::business_days(Date(1995, 1, 2), 2000);
  const auto panel = curve::simulate(truth, fixture::maturities(), dates, rng);
  const auto ts = curve::two_step(panel, curve::kDefaultLambda);
  const auto init = curve::initial_model(panel, ts, curve::kDefaultLambda);
  curve::MleOptions opts;
  opts.bfgs.max_iter = 500;
  const auto fit = curve::mle_fit(panel, init, opts);
  // a0 and P0 are not estimated; the truth is scored with the same ones.
  auto scored = truth;
  scored.a0 = init.a0;
  scored.P0 = init.P0;
  const double truth_ll = curve::loglik(scored, panel);
  Checks c;
  c.expect(fit.loglik >= fit.initial_loglik, fmt::format("fitted {} < initial {}", fit.loglik, fit.initial_loglik));
  c.expect(fit.loglik >= truth_ll - 1e-6, fmt::format("fitted {} < truth {}", fit.loglik, truth_ll));
  const double h_err = ((fit.model.H - truth.H).array() / truth.H.array()).abs().maxCoeff();
  c.expect(h_err <= 0.20, fmt::format("diag(H) off by {:.1f}%", 100 * h_err));
  return c.outcome(fmt::format("loglik {:.2f} (initial {:.2f}, truth {:.2f}), max H error {:.1f}%", fit.loglik,
                               fit.initial_loglik, truth_ll, 100 * h_err));
}

Outcome ac9_ols() {
  constexpr double kTol = 1e-10;
  Rng rng(130);
  Checks c;
  double worst = 0.0;
  for (int rep = 0; rep < 20; ++rep) {
    const Eigen::Index n = between(rng, 20, 200), p = between(rng, 2, 6);
    Eigen::MatrixXd X(n, p);
    X.col(0).setOnes();
    for (Eigen::Index j = 1; j < p; ++j) {
      for (Eigen::Index i = 0; i < n; ++i) X(i, j) = rng.normal() * (1.0 + static_cast<double>(j));
    }
    Eigen::VectorXd y(n);
    for (Eigen::Index i = 0; i < n; ++i) y(i) = X.row(i).sum() * 0.3 + rng.normal();
    std::vector<std::string> names;
    for (Eigen::Index j = 0; j < p; ++j) names.push_back(fmt::format("x{}", j));
    const auto fit = econ::ols(y, X, names);
    const auto ref = oracle::normal_equations(X, y);
    const double err = std::max((fit.beta - ref.beta).cwiseAbs().maxCoeff(), (fit.se - ref.se).cwiseAbs().maxCoeff());
    worst = std::max(worst, err);
    c.expect(err <= kTol, fmt::format("design {}: diff {:.3g}", rep, err));
  }

  // Three LDA theme changes sum to zero on every row.
  const Eigen::Index T = 2000;
  Eigen::MatrixXd simplex = Eigen::MatrixXd::Zero(T, 4);
  simplex.col(0).setOnes();
  Eigen::VectorXd event = Eigen::VectorXd::Zero(T);
  Eigen::Vector3d prev = Eigen::Vector3d::Constant(1.0 / 3.0);
  for (Eigen::Index t = 0; t < T; ++t) {
    if (t % 30 != 5) continue;
    event(t) = 1.0;
    Eigen::Vector3d w(rng.uniform() + 0.1, rng.uniform() + 0.1, rng.uniform() + 0.1);
    w /= w.sum();
    simplex.block(t, 1, 1, 3) = (w - prev).transpose();
    prev = w;
  }
  Eigen::VectorXd noise(T);
  for (auto& v : noise) v = rng.normal();
  const auto simplex_fit = econ::ols(noise, simplex, {"const", "dtheme_1", "dtheme_2", "dtheme_3"});
  c.expect(simplex_fit.dropped.size() == 1, fmt::format("simplex design dropped {} columns", simplex_fit.dropped.size()));

  // Planted event effect.
  Eigen::MatrixXd X(T, 2);
  X.col(0).setOnes();
  X.col(1) = event;
  Eigen::VectorXd y(T);
  for (Eigen::Index t = 0; t < T; ++t) y(t) = 0.02 + 0.05 * event(t) + 0.01 * rng.normal();
  const auto ev = econ::ols(y, X, {"const", "event"});
  const double dev = std::abs(ev.beta(1) - 0.05) / ev.se(1);
  c.expect(dev <= 3.0, fmt::format("event effect {:.4f} is {:.2f} SE from 0.05", ev.beta(1), dev));
  return c.outcome(fmt::format("20 designs max |diff| {:.2g}; simplex drops {}; event {:.4f} ({:.2f} SE from 0.05)", worst,
                               simplex_fit.dropped.size(), ev.beta(1), dev));
}

Outcome ac10_end_to_end() {
  constexpr double kBudget = 120.0;
  constexpr double kRelTol = 1e-6;
  constexpr double kAbsTol = 1e-9;
  const fs::path a = golden::scratch_dir("ac10-a"), b = golden::scratch_dir("ac10-b");
  Checks c;
  double slowest = 0.0;
  for (const auto& out : {a, b}) {
    const auto start = std::chrono::steady_clock::now();
    const int rc = golden::run_cli(fmt::format("all --config '{}' --out '{}' > '{}' 2>&1", fixture::kSyntheticConfig.string(),
                                               out.string(), (out.parent_path() / (out.filename().string() + ".log")).string()));
    slowest = std::max(slowest, std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count());
    c.expect(rc == 0, fmt::format("fomc all exited with {}", rc));
  }
  c.expect(slowest < kBudget, fmt::format("pipeline took {:.1f}s", slowest));
  const auto same = golden::diff_bytes(a, b, {"timings.json"});
  for (const auto& d : same) c.expect(false, "rerun differs: " + d);
  const auto vs_golden = golden::diff_numeric(fixture::kGoldenDir, a, {"timings.json", "run_manifest.json"}, kRelTol, kAbsTol);
  for (const auto& d : vs_golden) c.expect(false, "golden mismatch: " + d);
  const auto files = golden::list_files(a).size();
  if (c.failures.empty()) {
    fs::remove_all(a);
    fs::remove_all(b);
  }
  return c.outcome(fmt::format("{} files byte-identical across runs and within {:g} of goldens; {:.1f}s per run", files,
                               kRelTol, slowest));
}

Outcome ac11_user_data() {
  const char* cfg = std::getenv("FOMC_ACCEPTANCE_CONFIG");
  if (cfg == nullptr || *cfg == '\0') return {Outcome::Skip, "no user corpus; set FOMC_ACCEPTANCE_CONFIG to run"};
  const fs::path out = golden::scratch_dir("ac11");
  Checks c;
  const int rc = golden::run_cli(fmt::format("all --config '{}' --out '{}'", cfg, out.string()));
  c.expect(rc == 0, fmt::format("fomc all exited with {}", rc));
  for (const char* f : {"report/coherence_by_k.csv", "report/theme_weights.csv", "report/regressions.csv",
                        "report/regressions.txt", "regress/event_study.csv", "regress/themes.csv",
                        "regress/themes_crisis.csv"}) {
    c.expect(fs::exists(out / f), fmt::format("{} not produced", f));
  }
  std::string detail = fmt::format("outputs in {}", out.string());
  if (c.failures.empty()) {
    const auto sel = nlohmann::json::parse(read_file(out / "select_k" / "selection.json"));
    detail += fmt::format("; coherence-selected k={}", sel.value("selected_k", 0));
  }
  return c.outcome(detail);
}

}  // namespace

int main() {
  struct Criterion {
    const char* id;
    double budget_seconds;
    std::function<Outcome()> run;
  };
  // Criteria that cannot pass as stated. They still print FAIL but do not set
  // the exit status.
  const std::map<std::string, std::string> known_failures{
      {"AC6", "a 30-month curvature peak needs lambda = 0.059776"},
  };
  const std::vector<Criterion> criteria{
      {"AC1", 1.0, ac1_tfidf},         {"AC2", 30.0, ac2_nmf_monotone}, {"AC3", 30.0, ac3_nmf_planted},
      {"AC4", 30.0, ac4_coherence},    {"AC5", 120.0, ac5_lda},         {"AC6", 30.0, ac6_nelson_siegel},
      {"AC7", 5.0, ac7_kalman},        {"AC8", 300.0, ac8_mle},         {"AC9", 30.0, ac9_ols},
      {"AC10", 240.0, ac10_end_to_end}, {"AC11", 3600.0, ac11_user_data},
  };
  int failed = 0, unexpected = 0;
  for (const auto& cr : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = cr.run();
    } catch (const std::exception& e) {
      o = fail(fmt::format("threw: {}", e.what()));
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (o.kind == Outcome::Pass && secs > cr.budget_seconds) {
      o = fail(fmt::format("{} but took {:.2f}s > {:g}s", o.detail, secs, cr.budget_seconds));
    }
    const char* tag = o.kind == Outcome::Pass ? "PASS" : o.kind == Outcome::Fail ? "FAIL" : "SKIP";
    std::cout << fmt::format("{:<4} {} {} [{:.2f}s]", cr.id, tag, o.detail, secs) << std::endl;
    if (o.kind != Outcome::Fail) continue;
    ++failed;
    if (const auto it = known_failures.find(cr.id); it != known_failures.end()) {
      std::cout << fmt::format("     known failure: {}", it->second) << std::endl;
    } else {
      ++unexpected;
    }
  }
  std::cout << fmt::format("{} criterion/criteria failed, {} unexpected", failed, unexpected) << std::endl;
  return unexpected == 0 ? 0 : 1;
}
