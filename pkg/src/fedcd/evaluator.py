"""Evaluator role: ciphertext aggregation, masking, and the noisy training loop.

The evaluator folds every owner's encrypted bundle into aggregate
ciphertexts, multiplies the pairwise-product aggregate by a private
matrix of multiplicative masks before decryption, strips those masks
from the decrypted response, and then runs coordinate descent on the
perturbed statistics.  Because the decryption service folds the shared
noise vector into its response, the weights the evaluator derives are
``w + r``: correct up to a mask only the owners can remove.

For lasso the evaluator cannot see the update numerator in the clear
without learning ``r``, so each coordinate's three-way branch is decided
through a blinded sign exchange, and coordinates in the zero branch keep
their noisy weight (which equals the hidden ``r_k``) only in encrypted
form.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from typing import Callable, Protocol

import numpy as np

from . import paillier
from .counters import CryptoCounter
from .data_owner import LocalContribution
from .errors import ComparisonProtocolError, ProtocolError
from .ops import PaillierOps
from .regression import RegressionSpec

# masks in (0, low] or [high_lo, high_hi], stored in micro-units (1e-6)
XI_LOW_MAX = 200_000
XI_HIGH_MIN = 1_020_000
XI_HIGH_MAX = 5_000_000
BLIND_FACTOR_MIN = 2**8
BLIND_FACTOR_MAX = 2**20
BLIND_MASK_RANGE = 1e6


@dataclass(frozen=True)
class XiMatrix:
    """Per-entry multiplicative masks, stored exactly in micro-units.

    Entries are multiples of 1e-6 so that masking a ciphertext and later
    dividing the decrypted mantissa removes the mask without rounding.
    """

    micro: np.ndarray

    def __post_init__(self):
        micro = np.asarray(self.micro, dtype=np.int64)
        object.__setattr__(self, "micro", micro)
        if micro.ndim != 2 or micro.shape[0] != micro.shape[1]:
            raise ValueError("mask matrix must be square")

    def validate(self) -> "XiMatrix":
        bad = ~(
            ((self.micro > 0) & (self.micro <= XI_LOW_MAX))
            | ((self.micro >= XI_HIGH_MIN) & (self.micro <= XI_HIGH_MAX))
        )
        if bad.any():
            k, j = np.argwhere(bad)[0]
            raise ValueError(
                f"mask entry {self.micro[k, j] / 1e6} at ({k}, {j}) is outside "
                f"(0, {XI_LOW_MAX / 1e6}] or [{XI_HIGH_MIN / 1e6}, {XI_HIGH_MAX / 1e6}]"
            )
        return self

    @property
    def values(self) -> np.ndarray:
        return self.micro / 1e6

    @classmethod
    def generate(cls, num_coords: int, rng: random.Random, mode: str = "high") -> "XiMatrix":
        if mode not in ("high", "low", "mixed"):
            raise ValueError(f"unknown mask mode {mode!r}")

        def draw() -> int:
            if mode == "high" or (mode == "mixed" and rng.random() < 0.5):
                return rng.randrange(XI_HIGH_MIN, XI_HIGH_MAX + 1)
            return rng.randrange(1, XI_LOW_MAX + 1)

        micro = np.array(
            [[draw() for _ in range(num_coords)] for _ in range(num_coords)], dtype=np.int64
        )
        return cls(micro).validate()

    @classmethod
    def constant(cls, value: float, num_coords: int, validate: bool = True) -> "XiMatrix":
        micro = np.full((num_coords, num_coords), round(value * 1e6), dtype=np.int64)
        matrix = cls(micro)
        return matrix.validate() if validate else matrix


@dataclass
class AggregateBundle:
    """Element-wise homomorphic sums of every owner's encrypted bundle."""

    enc_q: list[paillier.Ciphertext]
    enc_s: list[list[paillier.Ciphertext]]
    enc_z: list[paillier.Ciphertext]
    enc_dr: list[paillier.Ciphertext]

    @property
    def num_coords(self) -> int:
        return len(self.enc_q)

    def ciphertext_count(self) -> int:
        n1 = self.num_coords
        return n1 * n1 + 3 * n1


@dataclass
class PlainBundle:
    """Decrypted, perturbed response from the decryption service.

    The pairwise-product matrix stays in fixed-point form so the
    evaluator can divide its masks out exactly at the mantissa level.
    """

    q_prime: np.ndarray
    s_prime: list[list[paillier.EncodedNumber]]
    z: np.ndarray
    dr_prime: np.ndarray


@dataclass
class WeightState:
    """One coordinate of the evaluator's noisy weight vector.

    ``plain`` holds the visible part.  When a lasso coordinate lands in
    the zero branch its noisy weight equals the hidden mask, so
    ``plain`` is zero and ``enc`` carries a re-randomized encryption of
    the mask instead; otherwise ``enc`` is ``None`` (nothing hidden).
    """

    plain: float
    enc: paillier.Ciphertext | None = None
    zero_branch: bool = False


@dataclass
class TrainResult:
    w_hat_star: np.ndarray
    sweeps: int
    converged: bool
    trajectory: list[tuple[np.ndarray, np.ndarray]]


class CspChannel(Protocol):
    """Synchronous request/response channel to the decryption service."""

    def compare(self, c: paillier.Ciphertext) -> int: ...

    def blind_decrypt(self, c: paillier.Ciphertext) -> float: ...


def aggregate(ops: PaillierOps, contribs: list[LocalContribution]) -> AggregateBundle:
    """Fold all owner bundles element-wise with the homomorphic plus."""
    if len(contribs) < 2:
        raise ProtocolError(f"need at least 2 contributions, got {len(contribs)}")
    n1 = len(contribs[0].enc_q)
    for c in contribs:
        if len(c.enc_q) != n1 or len(c.enc_s) != n1 or len(c.enc_z) != n1 or len(c.enc_dr) != n1:
            raise ProtocolError("contribution dimensions disagree")

    def fold(pick) -> paillier.Ciphertext:
        total = pick(contribs[0])
        for c in contribs[1:]:
            total = ops.add(total, pick(c))
        return total

    return AggregateBundle(
        enc_q=[fold(lambda c, k=k: c.enc_q[k]) for k in range(n1)],
        enc_s=[
            [fold(lambda c, k=k, j=j: c.enc_s[k][j]) for j in range(n1)] for k in range(n1)
        ],
        enc_z=[fold(lambda c, k=k: c.enc_z[k]) for k in range(n1)],
        enc_dr=[fold(lambda c, k=k: c.enc_dr[k]) for k in range(n1)],
    )


def apply_xi(ops: PaillierOps, bundle: AggregateBundle, xi: XiMatrix) -> AggregateBundle:
    """Mask the pairwise-product aggregate entry-wise; other families pass through."""
    n1 = bundle.num_coords
    if xi.micro.shape != (n1, n1):
        raise ProtocolError("mask matrix shape does not match the bundle")
    if (xi.micro <= 0).any():
        raise ValueError("mask entries must be positive")
    masked = [
        [
            ops.smul(bundle.enc_s[k][j], paillier.EncodedNumber(int(xi.micro[k, j]), 1))
            for j in range(n1)
        ]
        for k in range(n1)
    ]
    return AggregateBundle(bundle.enc_q, masked, bundle.enc_z, bundle.enc_dr)


def remove_xi(pk: paillier.PublicKey, plain: PlainBundle, xi: XiMatrix) -> np.ndarray:
    """Divide the masks out of the decrypted pairwise products, exactly."""
    n1 = len(plain.s_prime)
    s = np.empty((n1, n1))
    for k in range(n1):
        for j in range(n1):
            entry = plain.s_prime[k][j]
            mantissa = paillier.signed_mantissa(entry, pk)
            quotient, remainder = divmod(mantissa, int(xi.micro[k, j]))
            if remainder != 0:
                raise ProtocolError(
                    f"mask removal at ({k}, {j}) left a remainder; wrong mask matrix?"
                )
            s[k, j] = quotient / paillier.BASE ** (entry.exponent - 1)
    return s


def compute_p_prime(
    ops: PaillierOps,
    k: int,
    q_prime: np.ndarray,
    s: np.ndarray,
    states: list[WeightState],
    dr_prime: np.ndarray,
) -> float | paillier.Ciphertext:
    """Perturbed update numerator for coordinate ``k``.

    Plain when every coordinate's noisy weight is visible; otherwise a
    ciphertext with the hidden zero-branch contributions subtracted
    homomorphically.
    """
    plain_part = float(q_prime[k] - sum(s[k, j] * st.plain for j, st in enumerate(states)) - dr_prime[k])
    hidden = [(j, st) for j, st in enumerate(states) if st.zero_branch]
    if not hidden:
        return plain_part
    total = ops.encrypt_value(plain_part, exponent=2)
    for j, st in hidden:
        term = ops.smul(st.enc, ops.encode(float(s[k, j])))
        total = ops.sub(total, term)
    return total


def noisy_update(
    kind: str, p_prime: float, z_k: float, lam: float, branch: str | None = None
) -> float:
    """Single-coordinate update applied to the perturbed numerator."""
    if kind == "linear":
        if z_k == 0:
            raise ZeroDivisionError("coordinate has zero squared norm")
        return p_prime / z_k
    if kind == "ridge":
        if z_k + lam == 0:
            raise ZeroDivisionError("coordinate has zero effective curvature")
        return p_prime / (z_k + lam)
    if kind == "lasso":
        if z_k == 0:
            raise ZeroDivisionError("coordinate has zero squared norm")
        if branch == "positive":
            return (p_prime - lam / 2.0) / z_k
        if branch == "negative":
            return (p_prime + lam / 2.0) / z_k
        raise ValueError(f"lasso update needs a nonzero branch, got {branch!r}")
    raise ValueError(f"unknown kind {kind!r}")


def lasso_branch(
    ops: PaillierOps,
    p_prime: float | paillier.Ciphertext,
    enc_r_k: paillier.Ciphertext,
    z_k: float,
    lam: float,
    channel: CspChannel,
    rng: random.Random,
) -> str:
    """Decide the soft-threshold branch without exposing the true numerator.

    The evaluator rebuilds an encryption of the unperturbed numerator,
    blinds its distance to each threshold with a fresh positive factor,
    and asks the decryption service only for the sign.
    """
    if isinstance(p_prime, paillier.Ciphertext):
        enc_p_prime = ops.raise_exponent(p_prime, 2)
    else:
        enc_p_prime = ops.encrypt_value(p_prime, exponent=2)
    noise_term = ops.smul(enc_r_k, ops.encode(z_k))
    enc_p = ops.sub(enc_p_prime, noise_term)

    def blinded_sign(threshold: float) -> int:
        diff = ops.sub(enc_p, ops.encrypt_value(threshold, exponent=2))
        rho = rng.randrange(BLIND_FACTOR_MIN, BLIND_FACTOR_MAX + 1)
        return channel.compare(ops.smul(diff, rho))

    sign_hi = blinded_sign(lam / 2.0)
    sign_lo = blinded_sign(-lam / 2.0)
    if sign_hi > sign_lo:
        raise ComparisonProtocolError(
            f"impossible sign pair (above +t: {sign_hi}, above -t: {sign_lo})"
        )
    if sign_hi > 0:
        return "positive"
    if sign_lo < 0:
        return "negative"
    return "zero"


def blind_decrypt(
    ops: PaillierOps,
    enc_x: paillier.Ciphertext,
    channel: CspChannel,
    rng: random.Random,
) -> float:
    """Recover a plaintext the evaluator owns without revealing it.

    Adds a fresh additive mask before the decryption request and strips
    it from the response.
    """
    mu = rng.uniform(-BLIND_MASK_RANGE, BLIND_MASK_RANGE)
    encoded_mu = ops.encode(mu, exponent=enc_x.exponent)
    masked = ops.add(enc_x, ops.encrypt(encoded_mu))
    return channel.blind_decrypt(masked) - ops.decode(encoded_mu)


class Evaluator:
    """Protocol actor wrapping the evaluator-side phases for one session."""

    def __init__(
        self,
        spec: RegressionSpec,
        xi: XiMatrix | None = None,
        xi_mode: str = "high",
        crypto_rng: random.Random | None = None,
        blind_rng: random.Random | None = None,
    ):
        self.spec = spec
        self.xi = xi
        self.xi_mode = xi_mode
        self.crypto_rng = crypto_rng
        self.blind_rng = blind_rng if blind_rng is not None else random.SystemRandom()
        self.counter = CryptoCounter()
        self.ops: PaillierOps | None = None
        self.pk: paillier.PublicKey | None = None
        self.enc_r: list[paillier.Ciphertext] | None = None
        self.contribs: list[LocalContribution] = []
        self.w_hat0: np.ndarray | None = None
        self.plain: PlainBundle | None = None
        self.s: np.ndarray | None = None

    def receive_key_material(
        self, pk: paillier.PublicKey, enc_r: list[paillier.Ciphertext]
    ) -> None:
        self.pk = pk
        self.enc_r = enc_r
        self.ops = PaillierOps(pk, self.counter, self.crypto_rng)

    def receive_contribution(self, contrib: LocalContribution) -> None:
        if self.w_hat0 is None:
            self.w_hat0 = contrib.w_hat0
        elif not np.array_equal(self.w_hat0, contrib.w_hat0):
            raise ProtocolError(
                f"owner {contrib.owner_id} sent initial weights that disagree with earlier owners"
            )
        self.contribs.append(contrib)

    def build_masked_aggregate(self) -> AggregateBundle:
        if self.ops is None:
            raise ProtocolError("evaluator has no key material")
        bundle = aggregate(self.ops, self.contribs)
        if self.xi is None:
            self.xi = XiMatrix.generate(bundle.num_coords, self.blind_rng, self.xi_mode)
        return apply_xi(self.ops, bundle, self.xi)

    def receive_plain_bundle(self, plain: PlainBundle) -> None:
        self.plain = plain
        self.s = remove_xi(self.pk, plain, self.xi)

    def train(
        self,
        channel: CspChannel | None = None,
        on_update: Callable[[int, int, float | paillier.Ciphertext, str | None, float], None]
        | None = None,
    ) -> TrainResult:
        """Run coordinate sweeps over the perturbed statistics.

        Linear and ridge never touch the channel; lasso consults it for
        branch decisions and for numerators hidden by zero-branch
        coordinates.  Stops on the iteration budget or when the largest
        visible weight change in a sweep drops below the tolerance.
        """
        if self.plain is None or self.w_hat0 is None:
            raise ProtocolError("evaluator is missing the decrypted bundle or start weights")
        spec = self.spec
        if spec.kind == "lasso" and channel is None:
            raise ProtocolError("lasso training requires a comparison channel")
        n1 = len(self.w_hat0)
        states = [WeightState(plain=float(v)) for v in self.w_hat0]
        q_prime, z, dr_prime = self.plain.q_prime, self.plain.z, self.plain.dr_prime

        def snapshot() -> tuple[np.ndarray, np.ndarray]:
            return (
                np.array([st.plain for st in states]),
                np.array([st.zero_branch for st in states]),
            )

        trajectory = [snapshot()]
        sweeps = 0
        converged = False
        for _ in range(spec.max_iterations):
            sweeps += 1
            delta = 0.0
            for k in range(n1):
                p_prime = compute_p_prime(self.ops, k, q_prime, self.s, states, dr_prime)
                branch = None
                old_plain = states[k].plain
                if spec.kind == "lasso":
                    branch = lasso_branch(
                        self.ops, p_prime, self.enc_r[k], float(z[k]), spec.lam,
                        channel, self.blind_rng,
                    )
                    if branch == "zero":
                        states[k] = WeightState(
                            plain=0.0, enc=self.ops.rerandomize(self.enc_r[k]), zero_branch=True
                        )
                    else:
                        if isinstance(p_prime, paillier.Ciphertext):
                            p_plain = blind_decrypt(self.ops, p_prime, channel, self.blind_rng)
                        else:
                            p_plain = p_prime
                        states[k] = WeightState(
                            plain=noisy_update("lasso", p_plain, float(z[k]), spec.lam, branch)
                        )
                else:
                    states[k] = WeightState(
                        plain=noisy_update(spec.kind, p_prime, float(z[k]), spec.lam)
                    )
                delta = max(delta, abs(states[k].plain - old_plain))
                if on_update is not None:
                    on_update(sweeps, k, p_prime, branch, states[k].plain)
            trajectory.append(snapshot())
            if delta < spec.tolerance:
                converged = True
                break

        w_hat_star = np.empty(n1)
        for k, st in enumerate(states):
            if st.zero_branch:
                # delivered to owners only; equals the mask for a zeroed weight
                w_hat_star[k] = blind_decrypt(self.ops, st.enc, channel, self.blind_rng)
            else:
                w_hat_star[k] = st.plain
        return TrainResult(w_hat_star, sweeps, converged, trajectory)
