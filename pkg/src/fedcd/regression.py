"""Centralized coordinate-descent solvers for linear, ridge, and lasso regression.

These solvers are the accuracy baseline and the correctness oracle for
the federated pipeline.  Model weights are plain numpy vectors of length
``n + 1``; column 0 of every design matrix is the all-ones bias column.

The penalty term sums over all coefficients including the bias.  On
standardized data the intercept sits near zero, so this has no practical
effect, but it keeps the solved objective identical between the
centralized and federated paths.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DivergenceError, NonFiniteError

KINDS = ("linear", "ridge", "lasso")


@dataclass(frozen=True)
class Dataset:
    """Design matrix with bias column plus target vector."""

    x: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float)
        y = np.asarray(self.y, dtype=float)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)
        if x.ndim != 2 or y.ndim != 1 or x.shape[0] != y.shape[0]:
            raise ValueError(f"inconsistent dataset shapes {x.shape} / {y.shape}")
        if not (np.isfinite(x).all() and np.isfinite(y).all()):
            raise ValueError("dataset contains non-finite values")
        if x.shape[1] < 1 or not np.all(x[:, 0] == 1.0):
            raise ValueError("column 0 must be an all-ones bias column")

    @property
    def num_samples(self) -> int:
        return self.x.shape[0]

    @property
    def num_coords(self) -> int:
        return self.x.shape[1]

    @property
    def num_features(self) -> int:
        return self.x.shape[1] - 1


@dataclass(frozen=True)
class RegressionSpec:
    """Which regression to fit and how long to iterate."""

    kind: str
    lam: float = 0.0
    max_iterations: int = 1000
    tolerance: float = 1e-6

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"kind must be one of {KINDS}, got {self.kind!r}")
        if self.lam < 0:
            raise ValueError("penalty must be non-negative")
        if self.kind == "linear" and self.lam != 0:
            raise ValueError("linear regression takes no penalty")
        if self.max_iterations < 0 or self.tolerance < 0:
            raise ValueError("iteration budget and tolerance must be non-negative")


def compute_pk(ds: Dataset, w: np.ndarray, k: int) -> float:
    """Numerator statistic for coordinate ``k``: x_k . (y - X w) + Z_k w_k."""
    residual = ds.y - ds.x @ w
    return float(ds.x[:, k] @ residual + (ds.x[:, k] @ ds.x[:, k]) * w[k])


def compute_zk(ds: Dataset, k: int) -> float:
    """Denominator statistic for coordinate ``k``: sum of squared entries."""
    return float(ds.x[:, k] @ ds.x[:, k])


def cd_update(kind: str, p: float, z: float, lam: float) -> float:
    """Closed-form single-coordinate minimizer given the (P, Z) statistics."""
    if kind == "linear":
        if z == 0:
            raise ZeroDivisionError("coordinate has zero squared norm")
        return p / z
    if kind == "ridge":
        if z + lam == 0:
            raise ZeroDivisionError("coordinate has zero effective curvature")
        return p / (z + lam)
    if kind == "lasso":
        half = lam / 2.0
        if -half <= p <= half:
            return 0.0
        if z == 0:
            raise ZeroDivisionError("coordinate has zero squared norm")
        return (p + half) / z if p < -half else (p - half) / z
    raise ValueError(f"unknown kind {kind!r}")


def cost(ds: Dataset, spec: RegressionSpec, w: np.ndarray) -> float:
    """Objective value: squared error plus the configured penalty."""
    residual = ds.y - ds.x @ w
    sse = float(residual @ residual)
    if spec.kind == "ridge":
        return sse + spec.lam * float(w @ w)
    if spec.kind == "lasso":
        return sse + spec.lam * float(np.abs(w).sum())
    return sse


def fit_cd(ds: Dataset, spec: RegressionSpec, w0: np.ndarray | None = None) -> np.ndarray:
    """Coordinate descent: sweep coordinates in ascending order until the
    largest per-sweep weight change drops below the tolerance.
    """
    w = np.zeros(ds.num_coords) if w0 is None else np.array(w0, dtype=float)
    z = np.einsum("ij,ij->j", ds.x, ds.x)
    residual = ds.y - ds.x @ w
    for _ in range(spec.max_iterations):
        delta = 0.0
        for k in range(ds.num_coords):
            col = ds.x[:, k]
            p = float(col @ residual) + z[k] * w[k]
            new_wk = cd_update(spec.kind, p, z[k], spec.lam)
            if not np.isfinite(new_wk):
                raise NonFiniteError(f"coordinate {k} update is not finite")
            if new_wk != w[k]:
                residual += col * (w[k] - new_wk)
                delta = max(delta, abs(new_wk - w[k]))
                w[k] = new_wk
        if delta < spec.tolerance:
            break
    return w


def fit_gd(
    ds: Dataset,
    spec: RegressionSpec,
    w0: np.ndarray | None = None,
    learning_rate: float = 0.01,
) -> np.ndarray:
    """Full-batch gradient descent baseline; linear and ridge only."""
    if spec.kind == "lasso":
        raise ValueError("gradient descent does not handle the lasso penalty")
    w = np.zeros(ds.num_coords) if w0 is None else np.array(w0, dtype=float)
    m = ds.num_samples
    previous_cost = cost(ds, spec, w)
    rising = 0
    for _ in range(spec.max_iterations):
        residual = ds.y - ds.x @ w
        grad = -2.0 * (ds.x.T @ residual)
        if spec.kind == "ridge":
            grad += 2.0 * spec.lam * w
        step = learning_rate * grad / m
        w = w - step
        if not np.isfinite(w).all():
            raise DivergenceError("gradient step produced non-finite weights")
        current = cost(ds, spec, w)
        rising = rising + 1 if current > previous_cost else 0
        if rising >= 10:
            raise DivergenceError("cost increased for 10 consecutive steps")
        previous_cost = current
        if float(np.max(np.abs(step))) < spec.tolerance:
            break
    return w


def mae(w: np.ndarray, ds: Dataset) -> float:
    """Mean absolute prediction error over a non-empty evaluation set."""
    if ds.num_samples == 0:
        raise ValueError("cannot score an empty dataset")
    return float(np.abs(ds.y - ds.x @ w).mean())
