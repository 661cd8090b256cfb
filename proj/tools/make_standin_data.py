#!/usr/bin/env python3
"""Generate seeded synthetic stand-ins for the Pima, SPECTF and Voting sets.

The real files are not bundled with any offline package here, so these
stand-ins replicate the published shapes, class balances and rough feature
marginals; tools/fetch_uci.py replaces them with the genuine files when
network access is available. Generation is fully deterministic.

* pima_standin.csv   — 768 x 8, 268 positives; continuous clinical-style
  features with heterogeneous scales.
* spectf_standin.csv — 267 x 44, 212 positives; bounded count-like features
  in [0, 100].
* voting_standin.csv — 435 x 16, 267 positives; binary features.
"""
import argparse
import csv
import pathlib

import numpy as np


def write_csv(path, n_features, X, y):
    header = [f"f{i+1}" for i in range(n_features)] + ["label"]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row, label in zip(X, y):
            writer.writerow([f"{v:.6g}" for v in row] + [int(label)])
    print(f"wrote {path} ({len(y)} rows, {n_features} features, "
          f"{int(y.sum())} positives)")


def balanced_labels(rng, logits, n_pos, n):
    """Labels from the logistic model, then swap to hit the target count."""
    p = 1.0 / (1.0 + np.exp(-logits))
    y = (rng.random(n) < p).astype(int)
    # nudge toward the published class balance without breaking the signal
    while y.sum() > n_pos:
        idx = rng.choice(np.flatnonzero(y == 1))
        y[idx] = 0
    while y.sum() < n_pos:
        idx = rng.choice(np.flatnonzero(y == 0))
        y[idx] = 1
    return y


def make_pima(rng):
    n = 768
    means = np.array([3.8, 120.9, 69.1, 20.5, 79.8, 32.0, 0.47, 33.2])
    sds = np.array([3.4, 32.0, 19.4, 16.0, 115.2, 7.9, 0.33, 11.8])
    X = rng.normal(means, sds, size=(n, 8))
    X[:, 0] = np.clip(np.round(X[:, 0]), 0, 17)
    X[:, 1:6] = np.clip(X[:, 1:6], 0, None)
    X[:, 6] = np.clip(X[:, 6], 0.05, None)
    X[:, 6] *= np.exp(rng.normal(0, 0.6, n))  # pedigree is heavy-tailed
    X[:, 7] = np.clip(np.round(np.abs(X[:, 7] - 33) + 21), 21, 81)
    # the real file records missing skin-fold and insulin measurements as
    # zeros; reproduce that zero inflation
    X[rng.random(n) < 0.30, 3] = 0.0
    X[rng.random(n) < 0.48, 4] = 0.0
    w = np.array([0.09, 0.038, -0.005, 0.004, 0.0008, 0.09, 1.1, 0.022])
    logits = 1.6 * ((X - means) @ w) - 1.3 + rng.normal(0, 0.35, n)
    y = balanced_labels(rng, logits, 268, n)
    return X, y


def make_spectf(rng):
    n, d = 267, 44
    base = rng.uniform(55, 75, size=d)
    X = np.clip(rng.normal(base, 9.0, size=(n, d)), 0, 100)
    w = rng.normal(0, 0.06, size=d)
    logits = (X - base) @ w + 1.4 + rng.normal(0, 0.7, n)
    y = balanced_labels(rng, logits, 212, n)
    return np.round(X), y


def make_voting(rng):
    n, d = 435, 16
    w = rng.normal(0, 1.6, size=d)
    party = rng.random(n) < 267 / 435
    X = np.empty((n, d))
    for i in range(n):
        lean = 0.82 if party[i] else 0.18
        X[i] = rng.random(d) < np.where(w > 0, lean, 1 - lean)
    logits = (X - 0.5) @ w * 1.4 + rng.normal(0, 0.5, n)
    y = balanced_labels(rng, logits, 267, n)
    return X, y


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out-dir", default="data", type=pathlib.Path)
    parser.add_argument("--seed", default=20120626, type=int)
    args = parser.parse_args()
    args.out_dir.mkdir(parents=True, exist_ok=True)

    rng = np.random.default_rng(args.seed)
    X, y = make_pima(rng)
    write_csv(args.out_dir / "pima_standin.csv", 8, X, y)
    X, y = make_spectf(rng)
    write_csv(args.out_dir / "spectf_standin.csv", 44, X, y)
    X, y = make_voting(rng)
    write_csv(args.out_dir / "voting_standin.csv", 16, X, y)


if __name__ == "__main__":
    main()
