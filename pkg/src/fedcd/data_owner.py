"""Data-owner role: local statistics, encryption, and final denoising.

Each owner computes three families of sums over its private shard
(cross products ``q_k = sum_i x_ik y_i``, pairwise feature products
``s_kj`` with a zero diagonal, and squared norms ``z_k``) plus the
noise projection ``dr_k = sum_j s_kj r_j``.  Only the encrypted bundle
of these quantities ever leaves the owner; raw rows do not.
"""

from __future__ import annotations

import random
from dataclasses import dataclass

import numpy as np

from . import paillier
from .counters import CryptoCounter
from .errors import ProtocolError
from .regression import Dataset, mae


@dataclass(frozen=True)
class LocalShard:
    """One owner's horizontal slice of the training data (bias column included)."""

    x: np.ndarray
    y: np.ndarray
    owner_id: int

    def __post_init__(self):
        if self.x.ndim != 2 or self.x.shape[0] != self.y.shape[0]:
            raise ValueError("shard matrix and target lengths disagree")
        if self.x.shape[0] == 0:
            raise ValueError("shard must hold at least one sample")

    @property
    def num_coords(self) -> int:
        return self.x.shape[1]


@dataclass(frozen=True)
class NoiseVector:
    """Additive weight mask shared by the key service with every owner."""

    r: np.ndarray
    seed_w0: int


@dataclass
class LocalContribution:
    """One owner's encrypted bundle plus its noisy initial weights."""

    owner_id: int
    enc_q: list[paillier.Ciphertext]
    enc_s: list[list[paillier.Ciphertext]]
    enc_z: list[paillier.Ciphertext]
    enc_dr: list[paillier.Ciphertext]
    w_hat0: np.ndarray


def compute_intermediates(shard: LocalShard) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Return (q, s, z) sums over the shard; ``s`` has a zero diagonal."""
    q = shard.x.T @ shard.y
    s = shard.x.T @ shard.x
    z = np.diag(s).copy()
    np.fill_diagonal(s, 0.0)
    return q, s, z


def compute_delta_r(s: np.ndarray, r: np.ndarray) -> np.ndarray:
    """Project the noise vector through the off-diagonal products: ``s @ r``."""
    if s.shape[1] != r.shape[0]:
        raise ValueError("noise vector length does not match the product matrix")
    return s @ r


def initial_weights(seed_w0: int, num_coords: int) -> np.ndarray:
    """Shared starting weights, uniform in [-1, 1] from the distributed seed."""
    return np.random.default_rng(seed_w0).uniform(-1.0, 1.0, num_coords)


def build_contribution(
    shard: LocalShard,
    noise: NoiseVector,
    pk: paillier.PublicKey,
    rng: random.Random | None = None,
    counter: CryptoCounter | None = None,
) -> LocalContribution:
    """Encrypt the four quantity families element-wise and mask the start weights."""
    counter = counter if counter is not None else CryptoCounter()
    q, s, z = compute_intermediates(shard)
    dr = compute_delta_r(s, noise.r)

    def enc(value: float) -> paillier.Ciphertext:
        counter.encryptions += 1
        return paillier.encrypt(pk, paillier.encode(float(value), pk), rng)

    w_hat0 = initial_weights(noise.seed_w0, shard.num_coords) + noise.r
    return LocalContribution(
        owner_id=shard.owner_id,
        enc_q=[enc(v) for v in q],
        enc_s=[[enc(v) for v in row] for row in s],
        enc_z=[enc(v) for v in z],
        enc_dr=[enc(v) for v in dr],
        w_hat0=w_hat0,
    )


def denoise(w_hat_star: np.ndarray, r: np.ndarray) -> np.ndarray:
    """Strip the additive mask from the trained noisy weights."""
    if w_hat_star.shape != r.shape:
        raise ValueError("weight and noise vector lengths disagree")
    return w_hat_star - r


def evaluate_local(w: np.ndarray, test: Dataset) -> float:
    """Mean absolute error of the final model on a local evaluation set."""
    return mae(w, test)


class DataOwner:
    """Protocol actor wrapping the owner-side operations for one session."""

    def __init__(self, shard: LocalShard, rng: random.Random | None = None):
        self.shard = shard
        self.rng = rng
        self.counter = CryptoCounter()
        self.pk: paillier.PublicKey | None = None
        self.noise: NoiseVector | None = None
        self.final_weights: np.ndarray | None = None

    @property
    def owner_id(self) -> int:
        return self.shard.owner_id

    def receive_public_key(self, pk: paillier.PublicKey) -> None:
        self.pk = pk

    def receive_noise(self, noise: NoiseVector) -> None:
        if noise.r.shape[0] != self.shard.num_coords:
            raise ProtocolError("noise vector length does not match the feature count")
        self.noise = noise

    def contribution(self) -> LocalContribution:
        if self.pk is None or self.noise is None:
            raise ProtocolError("owner is missing key or noise material")
        return build_contribution(self.shard, self.noise, self.pk, self.rng, self.counter)

    def finalize(self, w_hat_star: np.ndarray) -> np.ndarray:
        if self.noise is None:
            raise ProtocolError("owner cannot denoise without its noise vector")
        self.final_weights = denoise(w_hat_star, self.noise.r)
        return self.final_weights
