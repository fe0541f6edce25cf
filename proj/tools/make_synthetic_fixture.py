#!/usr/bin/env python3
"""Regenerate fixtures/synthetic: statements, yields, controls and config.

Output is fully determined by the seed below. Re-running overwrites the
fixture in place; the goldens under tests/golden must then be refreshed
with tests/update_goldens.sh.
"""
import argparse
import datetime as dt
import pathlib

import numpy as np

SEED = 20240611
MATURITIES = [3, 6, 12, 24, 36, 60, 84, 120, 240, 360]
LAMBDA = 0.0609

THEMES = [
    ["inflation", "price", "energy", "pressure", "expectation", "cost", "commodity", "core", "elevated", "moderate"],
    ["labor", "employment", "household", "spending", "business", "investment", "payroll", "hiring", "consumer", "income"],
    ["credit", "financial", "market", "liquidity", "strain", "housing", "mortgage", "lending", "facility", "funding"],
]
SHARED = ["committee", "rate", "policy", "federal", "fund", "target", "percent", "economic", "growth", "outlook"]
FILLER = "The Committee will act as needed to foster maximum employment and price stability".split()
NAMES = ["Ben S. Bernanke", "Timothy F. Geithner", "Donald L. Kohn", "Kevin M. Warsh", "Randall S. Kroszner"]


def business_days(start, end):
    d = start
    out = []
    while d <= end:
        if d.weekday() < 5:
            out.append(d)
        d += dt.timedelta(days=1)
    return out


def loadings(lam):
    tau = np.array(MATURITIES, dtype=float)
    x = lam * tau
    slope = (1 - np.exp(-x)) / x
    return np.column_stack([np.ones_like(tau), slope, slope - np.exp(-x)])


def statement_dates(days):
    # Roughly every six weeks on a Tuesday, plus one Saturday release.
    out = []
    d = dt.date(2006, 1, 31)
    while d <= days[-1] - dt.timedelta(days=10):
        out.append(d)
        d += dt.timedelta(weeks=6)
    out[7] = out[7] + dt.timedelta(days=4)  # Tuesday -> Saturday
    return out


def theme_mix(t, rng):
    # Theme 1 dominates early, theme 3 only matters during the crisis.
    crisis = t >= dt.date(2007, 2, 27)
    base = np.array([0.6, 0.35, 0.05]) if not crisis else np.array([0.2, 0.3, 0.5])
    w = rng.dirichlet(30 * base)
    return w


def statement_text(w, rng):
    words = []
    n = 140
    counts = rng.multinomial(n, w)
    for k, c in enumerate(counts):
        words += list(rng.choice(THEMES[k], size=c))
    words += list(rng.choice(SHARED, size=30))
    rng.shuffle(words)
    sentences = []
    for i in range(0, len(words), 12):
        sentences.append(" ".join(words[i:i + 12]).capitalize() + ".")
    body = " ".join(FILLER) + ". " + " ".join(sentences)
    voters = ", ".join(rng.choice(NAMES, size=3, replace=False))
    return f"{body}\n\nVoting for the FOMC monetary policy action were: {voters}; and Chairman Bernanke.\n"


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--out", default=str(pathlib.Path(__file__).resolve().parent.parent / "fixtures" / "synthetic"))
    args = ap.parse_args()
    out = pathlib.Path(args.out)
    rng = np.random.default_rng(SEED)

    days = business_days(dt.date(2006, 1, 2), dt.date(2008, 12, 31))
    stmts = statement_dates(days)
    stmt_days = set()
    for s in stmts:
        d = s
        while d not in days:
            d += dt.timedelta(days=1)
        stmt_days.add(d)

    # Factor dynamics in percent; event days get an extra curvature shock.
    mu = np.array([5.0, -1.0, -0.5])
    A = np.array([[0.99, 0.01, 0.0], [0.0, 0.97, 0.02], [0.0, 0.0, 0.94]])
    Qc = np.diag([0.05, 0.06, 0.12])
    Z = loadings(LAMBDA)
    H = np.linspace(0.02, 0.04, len(MATURITIES)) ** 2
    f = mu.copy()
    ys = []
    for d in days:
        shock = Qc @ rng.standard_normal(3)
        if d in stmt_days:
            shock[2] += 0.25 * rng.choice([-1.0, 1.0])
        f = mu + A @ (f - mu) + shock
        ys.append(Z @ f + np.sqrt(H) * rng.standard_normal(len(MATURITIES)))
    ys = np.array(ys)

    (out / "statements").mkdir(parents=True, exist_ok=True)
    for p in (out / "statements").glob("*.txt"):
        p.unlink()
    for s in stmts:
        (out / "statements" / f"{s.isoformat()}.txt").write_text(statement_text(theme_mix(s, rng), rng))

    with open(out / "yields.csv", "w") as fh:
        fh.write("date," + ",".join(str(m) for m in MATURITIES) + "\n")
        for d, y in zip(days, ys):
            fh.write(d.isoformat() + "," + ",".join(f"{v:.6f}" for v in y) + "\n")

    credit, vix = 1.5, 15.0
    with open(out / "controls.csv", "w") as fh:
        fh.write("date,term_spread,credit_spread,vix\n")
        for i, (d, y) in enumerate(zip(days, ys)):
            credit = max(0.5, credit + 0.02 * rng.standard_normal() + (0.004 if d >= dt.date(2007, 7, 1) else 0.0))
            vix = max(9.0, vix + 0.6 * rng.standard_normal() + (0.02 if d >= dt.date(2007, 7, 1) else -0.005))
            if i in (100, 101, 400):
                continue  # dates absent from the controls file
            term = y[MATURITIES.index(120)] - y[MATURITIES.index(3)]
            fh.write(f"{d.isoformat()},{term:.6f},{credit:.6f},{vix:.6f}\n")

    (out / "config.yaml").write_text(CONFIG)


CONFIG = """\
# Synthetic end-to-end fixture; paths are relative to this file.
seed: 7
out_dir: out
paths:
  statements: statements
  yields: yields.csv
  controls: controls.csv
  stopwords: ../../data/stopwords.txt
  names: ../../data/names.txt
  voting_markers: ../../data/voting_markers.txt
  lemma_rules: ../../data/lemma_rules.txt
topics:
  model: nmf
  k: auto
  k_range: [2, 5]
  coherence_n: 8
  epsilon: 1.0e-12
  compare: true
  nmf:
    init: nndsvd
    max_iter: 500
    rel_tol: 1.0e-6
  lda:
    burn_in: 50
    sweeps: 150
curve:
  lambda: 0.0609
  estimate_lambda: false
  factors: smoothed
  mle:
    max_iter: 400
    grad_tol: 1.0e-3
regress:
  crisis_window: 2007-02-27:2011-04-13
  samples:
    pre_crisis: 2006-01-01:2006-12-31
    post_2007: 2007-01-01:2008-12-31
"""

if __name__ == "__main__":
    main()
