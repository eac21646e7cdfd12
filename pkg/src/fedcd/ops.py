"""Counting facade over the raw Paillier operations.

Party code routes its ciphertext arithmetic through one of these so the
cost harness can report exact per-party operation tallies.
"""

from __future__ import annotations

import random

from . import paillier
from .counters import CryptoCounter


class PaillierOps:
    """Paillier operations bound to one key, one counter, and one RNG."""

    def __init__(
        self,
        pk: paillier.PublicKey,
        counter: CryptoCounter | None = None,
        rng: random.Random | None = None,
    ):
        self.pk = pk
        self.counter = counter if counter is not None else CryptoCounter()
        self.rng = rng

    def encode(self, x: float, exponent: int = 1) -> paillier.EncodedNumber:
        return paillier.encode(x, self.pk, exponent)

    def decode(self, e: paillier.EncodedNumber) -> float:
        return paillier.decode(e, self.pk)

    def encrypt(self, e: paillier.EncodedNumber) -> paillier.Ciphertext:
        self.counter.encryptions += 1
        return paillier.encrypt(self.pk, e, self.rng)

    def encrypt_value(self, x: float, exponent: int = 1) -> paillier.Ciphertext:
        return self.encrypt(self.encode(x, exponent))

    def add(self, a: paillier.Ciphertext, b: paillier.Ciphertext) -> paillier.Ciphertext:
        self.counter.cipher_adds += 1
        return paillier.add_cipher(self.pk, a, b)

    def sub(self, a: paillier.Ciphertext, b: paillier.Ciphertext) -> paillier.Ciphertext:
        self.counter.cipher_adds += 1
        self.counter.scalar_muls += 1
        return paillier.sub_cipher(self.pk, a, b)

    def smul(self, a: paillier.Ciphertext, k: paillier.EncodedNumber | int) -> paillier.Ciphertext:
        self.counter.scalar_muls += 1
        return paillier.scalar_mul(self.pk, a, k)

    def rerandomize(self, a: paillier.Ciphertext) -> paillier.Ciphertext:
        self.counter.encryptions += 1
        return paillier.rerandomize(self.pk, a, self.rng)

    def raise_exponent(self, a: paillier.Ciphertext, exponent: int) -> paillier.Ciphertext:
        if exponent != a.exponent:
            self.counter.scalar_muls += 1
        return paillier.raise_exponent(self.pk, a, exponent)
