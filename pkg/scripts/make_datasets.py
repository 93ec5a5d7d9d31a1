#!/usr/bin/env python3
"""Regenerate the bundled CSVs in data/.

iris, digits, and breast_cancer come from scikit-learn (generation-time
dependency only; the committed CSVs are what tests and the CLI read).
two_moons and synth_linreg are generated here with fixed seeds.
"""

from __future__ import annotations

import csv
from pathlib import Path

import numpy as np

OUT = Path(__file__).resolve().parents[1] / "data"

MOONS_SEED = 99
MOONS_ROWS = 400
MOONS_NOISE = 0.12

LINREG_SEED = 31
LINREG_ROWS = 120
LINREG_COEF = (1.5, -2.0, 0.7)
LINREG_NOISE = 0.05


def _write(path: Path, header, rows) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        w.writerows(rows)
    print(f"wrote {path} ({len(rows)} rows)")


def sklearn_sets() -> None:
    from sklearn import datasets

    iris = datasets.load_iris()
    _write(
        OUT / "iris.csv",
        [n.replace(" (cm)", "").replace(" ", "_") for n in iris.feature_names] + ["species"],
        [
            [repr(float(v)) for v in row] + [iris.target_names[t]]
            for row, t in zip(iris.data, iris.target)
        ],
    )

    digits = datasets.load_digits()
    _write(
        OUT / "digits.csv",
        [f"p{i}" for i in range(64)] + ["digit"],
        [
            [repr(float(v)) for v in row] + [str(t)]
            for row, t in zip(digits.data, digits.target)
        ],
    )

    bc = datasets.load_breast_cancer()
    _write(
        OUT / "breast_cancer.csv",
        [n.replace(" ", "_") for n in bc.feature_names] + ["diagnosis"],
        [
            [repr(float(v)) for v in row] + [bc.target_names[t]]
            for row, t in zip(bc.data, bc.target)
        ],
    )


def two_moons() -> None:
    rng = np.random.default_rng(MOONS_SEED)
    n1 = MOONS_ROWS // 2
    n2 = MOONS_ROWS - n1
    t1 = rng.uniform(0, np.pi, n1)
    t2 = rng.uniform(0, np.pi, n2)
    X = np.vstack(
        [
            np.c_[np.cos(t1), np.sin(t1)],
            np.c_[1.0 - np.cos(t2), 0.5 - np.sin(t2)],
        ]
    )
    X += rng.normal(0.0, MOONS_NOISE, X.shape)
    y = np.r_[np.zeros(n1, dtype=int), np.ones(n2, dtype=int)]
    order = rng.permutation(MOONS_ROWS)
    _write(
        OUT / "two_moons.csv",
        ["x1", "x2", "label"],
        [[repr(float(X[i, 0])), repr(float(X[i, 1])), str(y[i])] for i in order],
    )


def synth_linreg() -> None:
    rng = np.random.default_rng(LINREG_SEED)
    X = rng.uniform(0.5, 1.5, (LINREG_ROWS, len(LINREG_COEF)))
    y = X @ np.asarray(LINREG_COEF) + rng.normal(0.0, LINREG_NOISE, LINREG_ROWS)
    _write(
        OUT / "synth_linreg.csv",
        [f"x{j}" for j in range(len(LINREG_COEF))] + ["target"],
        [[repr(float(v)) for v in row] + [repr(float(t))] for row, t in zip(X, y)],
    )


if __name__ == "__main__":
    OUT.mkdir(exist_ok=True)
    sklearn_sets()
    two_moons()
    synth_linreg()
