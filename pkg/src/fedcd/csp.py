"""Cryptographic service provider: key/noise generation, decryption, perturbation.

The service holds the only private key.  It decrypts the evaluator's
aggregated bundle but never returns the raw statistics: the cross
products come back shifted by twice the noise projection, and the noise
projection itself comes back shifted by the noise vector scaled with the
per-coordinate curvature, so the evaluator's training loop lands on
``w + r`` instead of ``w``.  The curvature multiplier matches the update
denominator of the configured regression (``z_k`` for linear and lasso,
``z_k + penalty`` for ridge) so the shift survives the division exactly.
"""

from __future__ import annotations

import random
from dataclasses import dataclass

import numpy as np

from . import paillier
from .counters import CryptoCounter
from .data_owner import NoiseVector
from .evaluator import AggregateBundle, PlainBundle
from .ops import PaillierOps
from .regression import cd_update

DEFAULT_R_RANGE = (2.0, 5.0)


@dataclass
class SetupBundle:
    """Everything the key service hands out at session start."""

    public_key: paillier.PublicKey
    noise: NoiseVector
    enc_r: list[paillier.Ciphertext]


def generate_noise_vector(
    num_coords: int,
    rng: random.Random,
    r_range: tuple[float, float] = DEFAULT_R_RANGE,
    fixed_value: float | None = None,
) -> NoiseVector:
    """Draw the shared additive mask, snapped to the fixed-point grid."""
    lo, hi = r_range
    if fixed_value is not None:
        values = [fixed_value] * num_coords
    else:
        values = [rng.uniform(lo, hi) for _ in range(num_coords)]
    r = np.array([round(v * paillier.BASE) / paillier.BASE for v in values])
    return NoiseVector(r=r, seed_w0=rng.randrange(2**32))


class Csp:
    """Protocol actor holding the private key for one session."""

    def __init__(
        self,
        kind: str,
        lam: float,
        key_bits: int = paillier.DEFAULT_KEY_BITS,
        rng: random.Random | None = None,
        key_rng: random.Random | None = None,
        r_range: tuple[float, float] = DEFAULT_R_RANGE,
        r_fixed: float | None = None,
    ):
        self.kind = kind
        self.lam = lam
        self.rng = rng if rng is not None else random.SystemRandom()
        self.counter = CryptoCounter()
        self.pk, self.sk = paillier.keygen(key_bits, key_rng)
        self.ops = PaillierOps(self.pk, self.counter, self.rng)
        self.r_range = r_range
        self.r_fixed = r_fixed
        self.noise: NoiseVector | None = None
        # decrypted view retained for the weight-inference demo
        self.view: dict[str, np.ndarray] | None = None

    def setup(self, num_coords: int) -> SetupBundle:
        """Generate the noise vector and encrypt it for the evaluator."""
        self.noise = generate_noise_vector(num_coords, self.rng, self.r_range, self.r_fixed)
        enc_r = [self.ops.encrypt_value(float(v)) for v in self.noise.r]
        return SetupBundle(self.pk, self.noise, enc_r)

    def _decrypt(self, c: paillier.Ciphertext) -> paillier.EncodedNumber:
        self.counter.decryptions += 1
        return paillier.decrypt(self.sk, self.pk, c)

    def _decrypt_value(self, c: paillier.Ciphertext) -> float:
        return paillier.decode(self._decrypt(c), self.pk)

    def curvature(self, z_k: float) -> float:
        """Update denominator for the configured regression kind."""
        return z_k + self.lam if self.kind == "ridge" else z_k

    def decrypt_and_perturb(self, bundle: AggregateBundle) -> PlainBundle:
        """Decrypt the aggregates and shift the two weight-revealing families."""
        if self.noise is None:
            raise RuntimeError("setup() must run before decryption")
        z = np.array([self._decrypt_value(c) for c in bundle.enc_z])
        q = np.array([self._decrypt_value(c) for c in bundle.enc_q])
        dr = np.array([self._decrypt_value(c) for c in bundle.enc_dr])
        s_prime = [[self._decrypt(c) for c in row] for row in bundle.enc_s]
        self.view = {
            "q": q,
            "s_prime": np.array(
                [[paillier.decode(e, self.pk) for e in row] for row in s_prime]
            ),
            "z": z,
            "dr": dr,
        }
        q_prime = q + 2.0 * dr
        dr_prime = dr - np.array([self.curvature(zk) for zk in z]) * self.noise.r
        return PlainBundle(q_prime=q_prime, s_prime=s_prime, z=z, dr_prime=dr_prime)

    def compare_sign(self, c: paillier.Ciphertext) -> int:
        """Responder side of the blinded comparison: sign of the plaintext."""
        value = paillier.signed_mantissa(self._decrypt(c), self.pk)
        return (value > 0) - (value < 0)

    def blind_decrypt_respond(self, c: paillier.Ciphertext) -> float:
        """Decrypt-and-decode; the requester's additive mask hides the value."""
        return self._decrypt_value(c)

    def attack_demo(self, iterations: int = 50, seed: int = 0) -> np.ndarray:
        """Weight inference this party could mount from its decrypted view."""
        if self.view is None:
            raise RuntimeError("no decrypted bundle to attack yet")
        return attack_inference(
            self.view["q"], self.view["s_prime"], self.view["z"],
            self.kind, self.lam, iterations, seed,
        )


def attack_inference(
    q: np.ndarray,
    s_prime: np.ndarray,
    z: np.ndarray,
    kind: str,
    lam: float,
    iterations: int = 50,
    seed: int = 0,
) -> np.ndarray:
    """Coordinate descent run on the (possibly masked) decrypted statistics.

    This is the inference available to a curious decryption service that
    starts from random weights and iterates the update rule on whatever
    pairwise-product matrix it decrypted.  With unmasked statistics it
    converges to the true weights; with masked ones it wanders off.  The
    loop deliberately tolerates non-finite blow-ups so a sweep over mask
    strengths can report how far the estimate diverges.
    """
    n1 = len(q)
    w = np.random.default_rng(seed).uniform(-1.0, 1.0, n1)
    with np.errstate(over="ignore", invalid="ignore"):
        for _ in range(iterations):
            for k in range(n1):
                # the pairwise-product matrix has a zero diagonal, so the
                # row product already skips the k-th weight
                p = q[k] - float(s_prime[k] @ w)
                w[k] = cd_update(kind, p, float(z[k]), lam)
    return w
