#!/usr/bin/env python3
"""Freezes reference statistics (scipy / scikit-learn) for the C++ tests."""
import json

import numpy as np
from scipy import stats
from sklearn.metrics import cohen_kappa_score

rng = np.random.default_rng(2024)
out = {}

x = np.round(rng.normal(3.0, 1.5, 40), 4)
y = rng.integers(0, 2, 40).astype(float)
r = stats.linregress(x, y)
out["univariate_independent"] = {"x": x.tolist(), "y": y.tolist(), "slope": r.slope, "stderr": r.stderr, "p": r.pvalue}

x3, y3 = [1.0, 2.0, 4.0], [0.0, 1.0, 1.0]
r = stats.linregress(x3, y3)
out["univariate_n3"] = {"x": x3, "y": y3, "slope": r.slope, "stderr": r.stderr, "p": r.pvalue}

xs = rng.integers(1, 6, 30).astype(float)
ys = np.round(xs + rng.normal(0, 1.5, 30))
rho, p = stats.spearmanr(xs, ys)
out["spearman_ties"] = {"x": xs.tolist(), "y": ys.tolist(), "rho": rho, "p": p}

xs = rng.normal(size=25)
ys = rng.normal(size=25)
rho, p = stats.spearmanr(xs, ys)
out["spearman_independent"] = {"x": xs.tolist(), "y": ys.tolist(), "rho": rho, "p": p}

a = [1, 1, 0, 1, 0, 0, 1, 1, 1, 0, 1, 0, 1, 1, 0, 1, 1, 0, 0, 1]
b = [1, 0, 0, 1, 0, 1, 1, 1, 1, 0, 1, 0, 0, 1, 0, 1, 1, 0, 1, 1]
out["kappa_two_raters"] = {"a": a, "b": b, "kappa": cohen_kappa_score(a, b)}

a = rng.integers(0, 3, 300).tolist()
b = rng.integers(0, 3, 300).tolist()
out["kappa_independent"] = {"a": a, "b": b, "kappa": cohen_kappa_score(a, b)}

out["t_two_sided"] = [
    {"t": t, "df": df, "p": 2 * stats.t.sf(abs(t), df)}
    for t, df in [(0.5, 1), (2.0, 3), (-1.7, 10), (3.5, 38), (0.01, 100), (12.0, 5), (-4.2, 2.5)]
]

with open("oracles.json", "w") as f:
    json.dump(out, f, indent=1)
    f.write("\n")
