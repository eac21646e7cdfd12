"""Per-party operation counters used by the cost-reporting harness."""

from __future__ import annotations

from dataclasses import dataclass


@dataclass
class CryptoCounter:
    """Tally of Paillier operations performed by one party."""

    encryptions: int = 0
    decryptions: int = 0
    cipher_adds: int = 0
    scalar_muls: int = 0

    def as_dict(self) -> dict:
        return {
            "encryptions": self.encryptions,
            "decryptions": self.decryptions,
            "cipher_adds": self.cipher_adds,
            "scalar_muls": self.scalar_muls,
        }
