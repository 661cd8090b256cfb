#!/usr/bin/env python3
"""Export the bundled scikit-learn copies of the Iris and WDBC datasets.

Both ship inside scikit-learn, so this runs offline. Preparation choices:

* iris_binary.csv — setosa vs. versicolor (virginica dropped), label
  1 = versicolor. 100 rows, 4 features. Of the three two-class subsets this
  one best reproduces the published objective values under a single prior
  scale.
* wdbc.csv — the full Wisconsin Diagnostic Breast Cancer set, label
  1 = malignant. 569 rows, 30 features.

The experiment loader appends the all-ones offset column itself.
"""
import argparse
import csv
import pathlib

from sklearn.datasets import load_breast_cancer, load_iris


def write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)
    print(f"wrote {path} ({len(rows)} rows, {len(header) - 1} features)")


def export_iris(out_dir):
    data = load_iris()
    rows = []
    for x, t in zip(data.data, data.target):
        if t == 2:  # drop virginica
            continue
        rows.append([f"{v:.6g}" for v in x] + [1 if t == 1 else 0])
    header = [n.replace(" (cm)", "").replace(" ", "_") for n in data.feature_names]
    write_csv(out_dir / "iris_binary.csv", header + ["label"], rows)


def export_wdbc(out_dir):
    data = load_breast_cancer()
    rows = []
    for x, t in zip(data.data, data.target):
        # sklearn encodes 0 = malignant; flip so label 1 = malignant.
        rows.append([f"{v:.6g}" for v in x] + [1 - t])
    header = [n.replace(" ", "_") for n in data.feature_names]
    write_csv(out_dir / "wdbc.csv", header + ["label"], rows)


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out-dir", default="data", type=pathlib.Path)
    args = parser.parse_args()
    args.out_dir.mkdir(parents=True, exist_ok=True)
    export_iris(args.out_dir)
    export_wdbc(args.out_dir)


if __name__ == "__main__":
    main()
