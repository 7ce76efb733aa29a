#!/usr/bin/env python3
"""Convert the raw UCI Adult files into the CSV layout expected by causalft.

Usage:
    prepare_adult.py --data adult.data --test adult.test --out data/adult.csv

The raw files can be downloaded from
https://archive.ics.uci.edu/ml/machine-learning-databases/adult/ .
Missing values ("?") are written as empty cells; the loader drops those rows.
"""
import argparse
import csv

RAW_COLUMNS = [
    "age", "workclass", "fnlwgt", "education", "education-num",
    "marital-status", "occupation", "relationship", "race", "sex",
    "capital-gain", "capital-loss", "hours-per-week", "native-country",
    "income",
]
KEPT = [
    "age", "workclass", "education", "education-num", "marital-status",
    "occupation", "relationship", "race", "sex", "hours-per-week",
    "native-country",
]


def read_rows(path):
    with open(path, newline="") as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("|"):
                continue
            cells = [c.strip() for c in line.split(",")]
            if len(cells) != len(RAW_COLUMNS):
                continue
            yield dict(zip(RAW_COLUMNS, cells))


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--data", required=True)
    parser.add_argument("--test", required=True)
    parser.add_argument("--out", required=True)
    args = parser.parse_args()

    with open(args.out, "w", newline="") as out:
        writer = csv.writer(out, lineterminator="\n")
        writer.writerow(KEPT + ["income"])
        for path in (args.data, args.test):
            for row in read_rows(path):
                values = ["" if row[c] == "?" else row[c] for c in KEPT]
                label = "1" if row["income"].rstrip(".") == ">50K" else "0"
                writer.writerow(values + [label])


if __name__ == "__main__":
    main()
