#!/usr/bin/env python3
"""Regenerate the CSV fixtures under data/.

The diabetes table is exported verbatim from scikit-learn's bundled
copy (the classic 442-sample, 10-feature clinical dataset), so it is
real measured data.  The boston and abalone files are SYNTHETIC
STAND-INS, generated because this build environment has no network
access to fetch the real tables.  Boston reproduces only the schema
(column names and row count); abalone also mirrors the published column
scales, the shared body-size correlation between measurements, and a
realistic signal-to-noise ratio, with the categorical sex column stored
one-hot.  Neither stand-in is calibrated to any published accuracy
number.  Drop the real CSVs over these files (same column layout) to
benchmark against real data; fixtures.json tracks which files are real.
"""

import csv
import json
from pathlib import Path

import numpy as np

DATA_DIR = Path(__file__).resolve().parent.parent / "data"

BOSTON_COLUMNS = [
    "crim", "zn", "indus", "chas", "nox", "rm", "age",
    "dis", "rad", "tax", "ptratio", "b", "lstat",
]
ABALONE_NUMERIC = [
    "length", "diameter", "height", "whole_weight",
    "shucked_weight", "viscera_weight", "shell_weight",
]


def write_csv(path: Path, header: list[str], rows) -> None:
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(header)
        for row in rows:
            writer.writerow([repr(float(v)) for v in row])
    print(f"wrote {path} ({sum(1 for _ in open(path)) - 1} rows)")


def make_diabetes() -> dict:
    from sklearn.datasets import load_diabetes

    raw = load_diabetes(scaled=False)
    header = list(raw.feature_names) + ["target"]
    rows = np.column_stack([raw.data, raw.target])
    write_csv(DATA_DIR / "diabetes.csv", header, rows)
    return {
        "file": "diabetes.csv",
        "target": "target",
        "provenance": "real",
        "source": "scikit-learn load_diabetes(scaled=False)",
    }


def standin_rows(num_rows: int, columns: list[str], seed: int) -> tuple[np.ndarray, np.ndarray]:
    rng = np.random.default_rng(seed)
    x = rng.standard_normal((num_rows, len(columns)))
    w = rng.uniform(-1.0, 1.0, len(columns))
    y = x @ w + rng.standard_normal(num_rows)
    return x, y


def make_boston() -> dict:
    x, y = standin_rows(506, BOSTON_COLUMNS, seed=1301)
    write_csv(DATA_DIR / "boston.csv", BOSTON_COLUMNS + ["medv"], np.column_stack([x, y]))
    return {
        "file": "boston.csv",
        "target": "medv",
        "provenance": "synthetic-standin",
        "source": "scripts/make_fixtures.py (schema-only stand-in, seed 1301)",
    }


def make_abalone() -> dict:
    # Gaussian clone of the published abalone summary statistics: column
    # scales, a shared latent body-size factor driving the strong pairwise
    # correlations, and the physical identity whole ~ shucked+viscera+shell.
    rng = np.random.default_rng(1302)
    m = 4177
    sex = rng.choice(3, m, p=[0.313, 0.321, 0.366])
    one_hot = np.zeros((m, 3))
    one_hot[np.arange(m), sex] = 1.0
    size = rng.standard_normal(m)
    means = {"length": 0.524, "diameter": 0.408, "height": 0.140,
             "whole_weight": 0.829, "shucked_weight": 0.359,
             "viscera_weight": 0.181, "shell_weight": 0.239}
    sds = {"length": 0.120, "diameter": 0.099, "height": 0.042,
           "whole_weight": 0.490, "shucked_weight": 0.222,
           "viscera_weight": 0.110, "shell_weight": 0.139}
    cols = {}
    for name in means:
        # shared body-size factor gives the measurement columns their
        # pairwise correlation without making the design near-singular
        mix = 0.8 * size + 0.6 * rng.standard_normal(m)
        cols[name] = np.clip(means[name] + sds[name] * mix, 1e-3, None)
    numeric = np.column_stack([cols[name] for name in ABALONE_NUMERIC])
    x = np.column_stack([one_hot, numeric])
    centered = x - x.mean(axis=0)
    w = rng.uniform(-1.0, 1.0, x.shape[1])
    signal = centered @ w
    rings = np.maximum(
        1.0, np.round(9.9 + 2.4 * signal / signal.std() + 2.2 * rng.standard_normal(m))
    )
    header = ["sex_f", "sex_i", "sex_m"] + ABALONE_NUMERIC + ["rings"]
    write_csv(DATA_DIR / "abalone.csv", header, np.column_stack([x, rings]))
    return {
        "file": "abalone.csv",
        "target": "rings",
        "provenance": "synthetic-standin",
        "source": "scripts/make_fixtures.py (moment-matched stand-in, seed 1302; "
                  "categorical sex stored one-hot)",
    }


def main() -> None:
    DATA_DIR.mkdir(exist_ok=True)
    manifest = {}
    try:
        manifest["diabetes"] = make_diabetes()
    except ImportError:
        print("scikit-learn unavailable; skipping the diabetes export")
    manifest["boston"] = make_boston()
    manifest["abalone"] = make_abalone()
    with open(DATA_DIR / "fixtures.json", "w") as handle:
        json.dump(manifest, handle, indent=2, sort_keys=True)
        handle.write("\n")
    print(f"wrote {DATA_DIR / 'fixtures.json'}")


if __name__ == "__main__":
    main()
