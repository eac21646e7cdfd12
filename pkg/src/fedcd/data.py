"""Dataset ingestion, standardization, splitting, and synthetic generation.

CSV fixtures are resolved by name inside the directory named by the
``FCD_DATA_DIR`` environment variable (default ``./data``).  A sidecar
``fixtures.json`` in the same directory records each fixture's target
column and provenance, so callers can tell vendored stand-ins apart from
real source data.
"""

from __future__ import annotations

import csv
import json
import os
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .data_owner import LocalShard
from .errors import DatasetError
from .regression import Dataset

DATA_DIR_ENV = "FCD_DATA_DIR"


@dataclass(frozen=True)
class RawTable:
    """Numeric feature matrix and target vector straight from a CSV file."""

    features: np.ndarray
    target: np.ndarray
    feature_names: tuple[str, ...]
    target_name: str

    @property
    def num_samples(self) -> int:
        return self.features.shape[0]


@dataclass(frozen=True)
class StandardizationParams:
    """Per-column train-split statistics used to z-score features and target.

    Columns with zero variance are flagged and left unscaled.
    """

    feature_mean: np.ndarray
    feature_std: np.ndarray
    target_mean: float
    target_std: float
    constant_columns: np.ndarray


def load_csv(path: str | Path, target_column: str) -> RawTable:
    """Read a numeric CSV with a header row; reject anything non-numeric."""
    path = Path(path)
    with open(path, newline="") as handle:
        reader = csv.reader(handle)
        try:
            header = next(reader)
        except StopIteration:
            raise DatasetError(f"{path}: file is empty") from None
        if target_column not in header:
            raise DatasetError(f"{path}: no column named {target_column!r} in header")
        rows = []
        for line_no, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise DatasetError(f"{path}:{line_no}: expected {len(header)} fields, got {len(row)}")
            parsed = []
            for col, cell in zip(header, row):
                try:
                    parsed.append(float(cell))
                except ValueError:
                    raise DatasetError(
                        f"{path}:{line_no}: column {col!r} has non-numeric value {cell!r}"
                    ) from None
            rows.append(parsed)
    if not rows:
        raise DatasetError(f"{path}: no data rows below the header")
    values = np.asarray(rows, dtype=float)
    target_idx = header.index(target_column)
    feature_idx = [i for i in range(len(header)) if i != target_idx]
    return RawTable(
        features=values[:, feature_idx],
        target=values[:, target_idx],
        feature_names=tuple(header[i] for i in feature_idx),
        target_name=target_column,
    )


def to_dataset(table: RawTable) -> Dataset:
    """Prepend the all-ones bias column."""
    bias = np.ones((table.num_samples, 1))
    return Dataset(np.hstack([bias, table.features]), table.target)


def split_train_test(table: RawTable, fraction: float = 0.2, seed: int = 0) -> tuple[RawTable, RawTable]:
    """Split off ``fraction`` of the rows as a disjoint test set, seed-deterministically."""
    if not 0.0 < fraction < 1.0:
        raise DatasetError(f"test fraction must be in (0, 1), got {fraction}")
    if table.num_samples == 0:
        raise DatasetError("cannot split an empty table")
    rng = np.random.default_rng(seed)
    order = rng.permutation(table.num_samples)
    n_test = int(round(fraction * table.num_samples))
    test_idx, train_idx = order[:n_test], order[n_test:]

    def take(idx):
        return RawTable(table.features[idx], table.target[idx], table.feature_names, table.target_name)

    return take(train_idx), take(test_idx)


def standardize(train: Dataset, test: Dataset) -> tuple[Dataset, Dataset, StandardizationParams]:
    """Z-score features and target using train statistics only.

    The bias column is untouched; zero-variance columns keep their raw scale.
    """
    mean = train.x.mean(axis=0)
    std = train.x.std(axis=0)
    constant = std == 0.0
    mean[0], std[0] = 0.0, 1.0  # bias column passes through
    mean[constant] = 0.0
    std[constant] = 1.0
    target_mean = float(train.y.mean())
    target_std = float(train.y.std())
    if target_std == 0.0:
        target_std = 1.0
    params = StandardizationParams(mean, std, target_mean, target_std, constant)

    def apply(ds: Dataset) -> Dataset:
        return Dataset((ds.x - mean) / std, (ds.y - target_mean) / target_std)

    return apply(train), apply(test), params


def partition_equal(train: Dataset, num_owners: int, seed: int = 0) -> list[LocalShard]:
    """Shuffle and split the training rows into near-equal disjoint shards."""
    if num_owners < 2:
        raise DatasetError(f"need at least 2 shards, got {num_owners}")
    m = train.num_samples
    if m < num_owners:
        raise DatasetError(f"cannot split {m} rows into {num_owners} non-empty shards")
    rng = np.random.default_rng(seed)
    order = rng.permutation(m)
    base, extra = divmod(m, num_owners)
    shards, start = [], 0
    for i in range(num_owners):
        size = base + (1 if i < extra else 0)
        idx = order[start : start + size]
        shards.append(LocalShard(train.x[idx], train.y[idx], owner_id=i + 1))
        start += size
    return shards


def gen_synthetic(m: int, n: int, seed: int = 0) -> Dataset:
    """Features and target drawn i.i.d. standard normal, bias column prepended."""
    if m < 1 or n < 1:
        raise DatasetError("need at least one sample and one feature")
    rng = np.random.default_rng(seed)
    features = rng.standard_normal((m, n))
    target = rng.standard_normal(m)
    return Dataset(np.hstack([np.ones((m, 1)), features]), target)


def data_dir(override: str | Path | None = None) -> Path:
    if override is not None:
        return Path(override)
    return Path(os.environ.get(DATA_DIR_ENV, "data"))


def fixture_info(name: str, directory: str | Path | None = None) -> dict:
    """Metadata record for a named fixture (target column, provenance)."""
    base = data_dir(directory)
    manifest = base / "fixtures.json"
    if not manifest.exists():
        raise DatasetError(f"no fixture manifest at {manifest}")
    records = json.loads(manifest.read_text())
    if name not in records:
        raise DatasetError(f"unknown fixture {name!r}; manifest lists {sorted(records)}")
    return records[name]


def load_fixture(name: str, directory: str | Path | None = None) -> tuple[RawTable, dict]:
    """Load a named CSV fixture and return it with its manifest record."""
    info = fixture_info(name, directory)
    base = data_dir(directory)
    path = base / info["file"]
    if not path.exists():
        raise DatasetError(f"fixture file missing: {path}")
    return load_csv(path, info["target"]), info
