"""Paillier cryptosystem with fixed-point encoding of signed reals.

All values exchanged between parties are encrypted with this module.
Reals are scaled by ``BASE = 10**6`` and stored as integers modulo the
key modulus ``n``; positives occupy ``[0, n/2)`` and negatives fold into
``[ceil(n/2), n)``.  Every encoded number and ciphertext carries an
``exponent`` counting how many factors of ``BASE`` its mantissa holds: 1
after encoding, 2 after multiplying by another encoded scalar, and so
on.  Tracking the exponent explicitly keeps products of two encoded
values exactly decodable.

Keys, encoded numbers, and ciphertexts are immutable values, so every
operation here is safe to call from concurrent workers.
"""

from __future__ import annotations

import json
import math
import random
from dataclasses import dataclass

from .errors import (
    EncodingRangeError,
    ExponentMismatchError,
    MalformedCiphertextError,
    MessageFormatError,
)

BASE = 10**6
MIN_KEY_BITS = 64
DEFAULT_KEY_BITS = 1024
KEY_FORMAT_VERSION = 1

_MR_ROUNDS = 64
_SMALL_PRIMES = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47]


class PublicKey:
    """Public half of a keypair: modulus ``n`` and generator ``g``."""

    def __init__(self, n: int, g: int):
        self.n = n
        self.g = g
        self.n_squared = n * n
        # mantissas at or above this threshold decode as negative
        self.negative_threshold = (n + 1) // 2

    @property
    def key_bits(self) -> int:
        return self.n.bit_length()

    def __eq__(self, other):
        return isinstance(other, PublicKey) and self.n == other.n and self.g == other.g

    def __hash__(self):
        return hash((self.n, self.g))

    def __repr__(self):
        return f"<PublicKey {self.key_bits} bits>"

    def to_json(self) -> str:
        return json.dumps(
            {"version": KEY_FORMAT_VERSION, "n": str(self.n), "g": str(self.g)}
        )

    @classmethod
    def from_json(cls, data: str) -> "PublicKey":
        obj = json.loads(data)
        if obj.get("version") != KEY_FORMAT_VERSION:
            raise MessageFormatError(f"unsupported key record version: {obj.get('version')}")
        return cls(int(obj["n"]), int(obj["g"]))


class PrivateKey:
    """Private half of a keypair: ``lam = lcm(p-1, q-1)`` and its companion ``mu``."""

    def __init__(self, lam: int, mu: int):
        self.lam = lam
        self.mu = mu

    def __eq__(self, other):
        return isinstance(other, PrivateKey) and self.lam == other.lam and self.mu == other.mu

    def __repr__(self):
        return "<PrivateKey>"

    def to_json(self) -> str:
        return json.dumps(
            {"version": KEY_FORMAT_VERSION, "lambda": str(self.lam), "mu": str(self.mu)}
        )

    @classmethod
    def from_json(cls, data: str) -> "PrivateKey":
        obj = json.loads(data)
        if obj.get("version") != KEY_FORMAT_VERSION:
            raise MessageFormatError(f"unsupported key record version: {obj.get('version')}")
        return cls(int(obj["lambda"]), int(obj["mu"]))


@dataclass(frozen=True)
class EncodedNumber:
    """Fixed-point representation of a signed real modulo ``n``."""

    mantissa: int
    exponent: int


@dataclass(frozen=True)
class Ciphertext:
    """Paillier ciphertext plus the fixed-point exponent of its plaintext."""

    value: int
    exponent: int

    def to_wire(self) -> dict:
        return {"value": str(self.value), "exponent": self.exponent}

    @classmethod
    def from_wire(cls, obj: dict) -> "Ciphertext":
        return cls(int(obj["value"]), int(obj["exponent"]))


def _is_probable_prime(n: int, rng: random.Random, rounds: int = _MR_ROUNDS) -> bool:
    if n < 2:
        return False
    for p in _SMALL_PRIMES:
        if n % p == 0:
            return n == p
    d, s = n - 1, 0
    while d % 2 == 0:
        d //= 2
        s += 1
    for _ in range(rounds):
        a = rng.randrange(2, n - 1)
        x = pow(a, d, n)
        if x == 1 or x == n - 1:
            continue
        for _ in range(s - 1):
            x = pow(x, 2, n)
            if x == n - 1:
                break
        else:
            return False
    return True


def _generate_prime(bits: int, rng: random.Random) -> int:
    while True:
        candidate = rng.getrandbits(bits) | (1 << (bits - 1)) | 1
        if _is_probable_prime(candidate, rng):
            return candidate


def keygen(key_bits: int = DEFAULT_KEY_BITS, rng: random.Random | None = None) -> tuple[PublicKey, PrivateKey]:
    """Generate a keypair whose modulus has exactly ``key_bits`` bits.

    Passing a seeded ``rng`` makes the keys reproducible; the default
    draws from the system entropy pool.
    """
    if key_bits < MIN_KEY_BITS:
        raise ValueError(f"key_bits must be >= {MIN_KEY_BITS}, got {key_bits}")
    if rng is None:
        rng = random.SystemRandom()
    half = key_bits // 2
    while True:
        p = _generate_prime(half, rng)
        q = _generate_prime(half, rng)
        if p == q:
            continue
        n = p * q
        if n.bit_length() != key_bits:
            continue
        if math.gcd(n, (p - 1) * (q - 1)) != 1:
            continue
        break
    g = n + 1
    lam = math.lcm(p - 1, q - 1)
    n_squared = n * n
    mu = pow((pow(g, lam, n_squared) - 1) // n, -1, n)
    return PublicKey(n, g), PrivateKey(lam, mu)


def encode(x: float, pk: PublicKey, exponent: int = 1) -> EncodedNumber:
    """Scale ``x`` by ``BASE**exponent`` and fold the sign into ``[0, n)``."""
    if exponent < 1:
        raise ValueError(f"exponent must be >= 1, got {exponent}")
    if not math.isfinite(x):
        raise EncodingRangeError(f"cannot encode non-finite value {x!r}")
    scaled = round(x * BASE**exponent)
    if 2 * abs(scaled) >= pk.n:
        raise EncodingRangeError(
            f"value {x!r} exceeds the encoding range of a {pk.key_bits}-bit key"
        )
    return EncodedNumber(scaled % pk.n, exponent)


def signed_mantissa(e: EncodedNumber, pk: PublicKey) -> int:
    """Mantissa as a signed integer; ``[ceil(n/2), n)`` maps to negatives."""
    if not 0 <= e.mantissa < pk.n:
        raise EncodingRangeError("mantissa outside [0, n)")
    if e.mantissa >= pk.negative_threshold:
        return e.mantissa - pk.n
    return e.mantissa


def decode(e: EncodedNumber, pk: PublicKey) -> float:
    """Invert :func:`encode`: signed mantissa divided by ``BASE**exponent``."""
    if e.exponent < 1:
        raise ValueError(f"malformed exponent {e.exponent}")
    return signed_mantissa(e, pk) / BASE**e.exponent


def encrypt(pk: PublicKey, e: EncodedNumber, rng: random.Random | None = None) -> Ciphertext:
    """Probabilistic encryption: ``g**m * rho**n mod n**2`` for fresh random ``rho``."""
    if not 0 <= e.mantissa < pk.n:
        raise EncodingRangeError("mantissa outside [0, n)")
    if rng is None:
        rng = random.SystemRandom()
    if pk.g == pk.n + 1:
        # (n+1)**m = 1 + m*n (mod n**2)
        base = (1 + e.mantissa * pk.n) % pk.n_squared
    else:
        base = pow(pk.g, e.mantissa, pk.n_squared)
    rho = rng.randrange(1, pk.n)
    while math.gcd(rho, pk.n) != 1:
        rho = rng.randrange(1, pk.n)
    return Ciphertext(base * pow(rho, pk.n, pk.n_squared) % pk.n_squared, e.exponent)


def decrypt(sk: PrivateKey, pk: PublicKey, c: Ciphertext) -> EncodedNumber:
    """Recover the encoded plaintext; the exponent is carried through."""
    if not 0 < c.value < pk.n_squared or math.gcd(c.value, pk.n) != 1:
        raise MalformedCiphertextError("ciphertext value is not a unit modulo n**2")
    u = pow(c.value, sk.lam, pk.n_squared)
    mantissa = (u - 1) // pk.n * sk.mu % pk.n
    return EncodedNumber(mantissa, c.exponent)


def add_cipher(pk: PublicKey, a: Ciphertext, b: Ciphertext) -> Ciphertext:
    """Homomorphic plus: the product of ciphertext values encrypts the sum."""
    if a.exponent != b.exponent:
        raise ExponentMismatchError(
            f"cannot add ciphertexts at exponents {a.exponent} and {b.exponent}"
        )
    return Ciphertext(a.value * b.value % pk.n_squared, a.exponent)


def scalar_mul(pk: PublicKey, a: Ciphertext, k: EncodedNumber | int) -> Ciphertext:
    """Homomorphic scalar multiplication: ``a**k`` encrypts ``k * m``.

    A raw ``int`` scalar leaves the exponent unchanged; an
    :class:`EncodedNumber` scalar adds its exponent to the result.
    """
    if isinstance(k, EncodedNumber):
        mantissa, extra = k.mantissa, k.exponent
    else:
        mantissa, extra = k % pk.n, 0
    if not 0 <= mantissa < pk.n:
        raise EncodingRangeError("scalar mantissa outside [0, n)")
    return Ciphertext(pow(a.value, mantissa, pk.n_squared), a.exponent + extra)


def sub_cipher(pk: PublicKey, a: Ciphertext, b: Ciphertext) -> Ciphertext:
    """Homomorphic minus: ``a`` plus ``b`` scaled by ``n - 1``."""
    if a.exponent != b.exponent:
        raise ExponentMismatchError(
            f"cannot subtract ciphertexts at exponents {a.exponent} and {b.exponent}"
        )
    return add_cipher(pk, a, scalar_mul(pk, b, pk.n - 1))


def rerandomize(pk: PublicKey, a: Ciphertext, rng: random.Random | None = None) -> Ciphertext:
    """Refresh the ciphertext value without changing the plaintext."""
    if rng is None:
        rng = random.SystemRandom()
    rho = rng.randrange(1, pk.n)
    while math.gcd(rho, pk.n) != 1:
        rho = rng.randrange(1, pk.n)
    return Ciphertext(a.value * pow(rho, pk.n, pk.n_squared) % pk.n_squared, a.exponent)


def raise_exponent(pk: PublicKey, a: Ciphertext, exponent: int) -> Ciphertext:
    """Rescale ``a`` to a higher exponent so it can be added to finer-grained terms."""
    if exponent < a.exponent:
        raise ExponentMismatchError(
            f"cannot lower exponent {a.exponent} to {exponent} without decrypting"
        )
    if exponent == a.exponent:
        return a
    factor = BASE ** (exponent - a.exponent)
    return Ciphertext(pow(a.value, factor, pk.n_squared), exponent)
