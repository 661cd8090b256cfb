#!/usr/bin/env python3
"""Fetch the real UCI Pima, SPECTF and Voting datasets (network required).

Run on demand; nothing downloads at build time. On success the synthetic
stand-ins from make_standin_data.py are replaced by the genuine files:

  pima.csv    — Pima Indians Diabetes (768 x 8)
  spectf.csv  — SPECTF heart, train+test concatenated (267 x 44)
  voting.csv  — Congressional Voting Records (435 x 16, y/n/? -> 1/0/0.5,
                label 1 = republican)
"""
import argparse
import csv
import pathlib
import urllib.request

PIMA_URL = ("https://raw.githubusercontent.com/jbrownlee/Datasets/master/"
            "pima-indians-diabetes.data.csv")
SPECTF_BASE = "https://archive.ics.uci.edu/ml/machine-learning-databases/spect"
VOTING_URL = ("https://archive.ics.uci.edu/ml/machine-learning-databases/"
              "voting-records/house-votes-84.data")


def fetch(url):
    print(f"fetching {url}")
    with urllib.request.urlopen(url, timeout=60) as response:
        return response.read().decode("utf-8")


def write_rows(path, header, rows):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)
    print(f"wrote {path} ({len(rows)} rows)")


def fetch_pima(out_dir):
    rows = [line.split(",") for line in fetch(PIMA_URL).strip().splitlines()]
    header = [f"f{i+1}" for i in range(8)] + ["label"]
    write_rows(out_dir / "pima.csv", header, rows)


def fetch_spectf(out_dir):
    rows = []
    for name in ("SPECTF.train", "SPECTF.test"):
        for line in fetch(f"{SPECTF_BASE}/{name}").strip().splitlines():
            cells = line.split(",")
            rows.append(cells[1:] + [cells[0]])  # label first in the raw file
    header = [f"f{i+1}" for i in range(44)] + ["label"]
    write_rows(out_dir / "spectf.csv", header, rows)


def fetch_voting(out_dir):
    encode = {"y": "1", "n": "0", "?": "0.5"}
    rows = []
    for line in fetch(VOTING_URL).strip().splitlines():
        cells = line.split(",")
        label = "1" if cells[0] == "republican" else "0"
        rows.append([encode[c] for c in cells[1:]] + [label])
    header = [f"f{i+1}" for i in range(16)] + ["label"]
    write_rows(out_dir / "voting.csv", header, rows)


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out-dir", default="data", type=pathlib.Path)
    args = parser.parse_args()
    args.out_dir.mkdir(parents=True, exist_ok=True)
    fetch_pima(args.out_dir)
    fetch_spectf(args.out_dir)
    fetch_voting(args.out_dir)


if __name__ == "__main__":
    main()
