"""Wire schema for the multi-party session.

One JSON object per line, UTF-8.  Big integers (ciphertext values,
key fields, fixed-point mantissas) travel as decimal strings, everything
else as finite JSON numbers.  Every message is versioned and carries its
variant tag, session id, and sender.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from . import paillier
from .data_owner import LocalContribution, NoiseVector
from .errors import MessageFormatError
from .evaluator import AggregateBundle, PlainBundle
from .paillier import Ciphertext, EncodedNumber

MESSAGE_VERSION = 1

# variant -> protocol phase (1 key material, 2 local bundles, 3 aggregate
# round trip, 4 training and delivery)
PHASES = {
    "KeyDistribution": 1,
    "NoiseVector": 1,
    "EncryptedContribution": 2,
    "AggregatedBundle": 3,
    "DecryptedBundle": 3,
    "ComparisonRequest": 4,
    "ComparisonResponse": 4,
    "BlindDecryptRequest": 4,
    "BlindDecryptResponse": 4,
    "FinalWeights": 4,
}


@dataclass(frozen=True)
class Message:
    variant: str
    session_id: str
    sender: str
    payload: dict


def serialize(msg: Message) -> bytes:
    """Encode as one compact JSON object (no newline); rejects non-finite numbers."""
    if msg.variant not in PHASES:
        raise MessageFormatError(f"unknown message variant {msg.variant!r}")
    if not msg.payload:
        raise MessageFormatError("refusing to serialize an empty payload")
    record = {
        "version": MESSAGE_VERSION,
        "variant": msg.variant,
        "session_id": msg.session_id,
        "sender": msg.sender,
        "payload": msg.payload,
    }
    try:
        return json.dumps(record, sort_keys=True, separators=(",", ":"), allow_nan=False).encode()
    except ValueError as exc:
        raise MessageFormatError(f"payload is not wire-safe: {exc}") from exc


def deserialize(data: bytes) -> Message:
    """Decode and validate one wire message."""
    try:
        record = json.loads(data.decode())
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise MessageFormatError(f"unparseable message: {exc}") from exc
    if not isinstance(record, dict):
        raise MessageFormatError("message is not a JSON object")
    version = record.get("version")
    if version != MESSAGE_VERSION:
        raise MessageFormatError(f"unsupported message version {version!r}")
    variant = record.get("variant")
    if variant not in PHASES:
        raise MessageFormatError(f"unknown message variant {variant!r}")
    payload = record.get("payload")
    if not isinstance(payload, dict) or not payload:
        raise MessageFormatError("message payload is missing or empty")
    return Message(
        variant=variant,
        session_id=str(record.get("session_id", "")),
        sender=str(record.get("sender", "")),
        payload=payload,
    )


# -- payload builders / parsers ---------------------------------------------


def _cipher_list(cts: list[Ciphertext]) -> list[dict]:
    return [c.to_wire() for c in cts]


def _parse_cipher_list(items: list[dict]) -> list[Ciphertext]:
    return [Ciphertext.from_wire(obj) for obj in items]


def key_distribution_payload(
    pk: paillier.PublicKey, enc_r: list[Ciphertext] | None = None
) -> dict:
    payload = {"public_key": {"n": str(pk.n), "g": str(pk.g)}}
    if enc_r is not None:
        payload["enc_r"] = _cipher_list(enc_r)
    return payload


def parse_key_distribution(payload: dict) -> tuple[paillier.PublicKey, list[Ciphertext] | None]:
    key = payload["public_key"]
    pk = paillier.PublicKey(int(key["n"]), int(key["g"]))
    enc_r = _parse_cipher_list(payload["enc_r"]) if "enc_r" in payload else None
    return pk, enc_r


def noise_payload(noise: NoiseVector) -> dict:
    return {"r": noise.r.tolist(), "seed_w0": noise.seed_w0}


def parse_noise(payload: dict) -> NoiseVector:
    return NoiseVector(r=np.array(payload["r"], dtype=float), seed_w0=int(payload["seed_w0"]))


def contribution_payload(contrib: LocalContribution) -> dict:
    return {
        "owner_id": contrib.owner_id,
        "enc_q": _cipher_list(contrib.enc_q),
        "enc_s": [_cipher_list(row) for row in contrib.enc_s],
        "enc_z": _cipher_list(contrib.enc_z),
        "enc_dr": _cipher_list(contrib.enc_dr),
        "w_hat0": contrib.w_hat0.tolist(),
    }


def parse_contribution(payload: dict) -> LocalContribution:
    return LocalContribution(
        owner_id=int(payload["owner_id"]),
        enc_q=_parse_cipher_list(payload["enc_q"]),
        enc_s=[_parse_cipher_list(row) for row in payload["enc_s"]],
        enc_z=_parse_cipher_list(payload["enc_z"]),
        enc_dr=_parse_cipher_list(payload["enc_dr"]),
        w_hat0=np.array(payload["w_hat0"], dtype=float),
    )


def aggregated_payload(bundle: AggregateBundle) -> dict:
    return {
        "enc_q": _cipher_list(bundle.enc_q),
        "enc_s": [_cipher_list(row) for row in bundle.enc_s],
        "enc_z": _cipher_list(bundle.enc_z),
        "enc_dr": _cipher_list(bundle.enc_dr),
    }


def parse_aggregated(payload: dict) -> AggregateBundle:
    return AggregateBundle(
        enc_q=_parse_cipher_list(payload["enc_q"]),
        enc_s=[_parse_cipher_list(row) for row in payload["enc_s"]],
        enc_z=_parse_cipher_list(payload["enc_z"]),
        enc_dr=_parse_cipher_list(payload["enc_dr"]),
    )


def decrypted_payload(plain: PlainBundle) -> dict:
    return {
        "q_prime": plain.q_prime.tolist(),
        "s_prime": [
            [{"mantissa": str(e.mantissa), "exponent": e.exponent} for e in row]
            for row in plain.s_prime
        ],
        "z": plain.z.tolist(),
        "dr_prime": plain.dr_prime.tolist(),
    }


def parse_decrypted(payload: dict) -> PlainBundle:
    return PlainBundle(
        q_prime=np.array(payload["q_prime"], dtype=float),
        s_prime=[
            [EncodedNumber(int(e["mantissa"]), int(e["exponent"])) for e in row]
            for row in payload["s_prime"]
        ],
        z=np.array(payload["z"], dtype=float),
        dr_prime=np.array(payload["dr_prime"], dtype=float),
    )


def comparison_request_payload(request_id: int, c: Ciphertext) -> dict:
    return {"request_id": request_id, "ciphertext": c.to_wire()}


def parse_comparison_request(payload: dict) -> tuple[int, Ciphertext]:
    return int(payload["request_id"]), Ciphertext.from_wire(payload["ciphertext"])


def comparison_response_payload(request_id: int, sign: int) -> dict:
    return {"request_id": request_id, "sign": sign}


def parse_comparison_response(payload: dict) -> tuple[int, int]:
    return int(payload["request_id"]), int(payload["sign"])


def blind_decrypt_request_payload(request_id: int, c: Ciphertext) -> dict:
    return {"request_id": request_id, "ciphertext": c.to_wire()}


def parse_blind_decrypt_request(payload: dict) -> tuple[int, Ciphertext]:
    return int(payload["request_id"]), Ciphertext.from_wire(payload["ciphertext"])


def blind_decrypt_response_payload(request_id: int, value: float) -> dict:
    return {"request_id": request_id, "value": value}


def parse_blind_decrypt_response(payload: dict) -> tuple[int, float]:
    return int(payload["request_id"]), float(payload["value"])


def final_weights_payload(w_hat_star: np.ndarray) -> dict:
    return {"w_hat_star": w_hat_star.tolist()}


def parse_final_weights(payload: dict) -> np.ndarray:
    return np.array(payload["w_hat_star"], dtype=float)


def count_ciphertexts(variant: str, payload: dict) -> int:
    """Number of ciphertext elements a message carries on the wire."""
    if variant in ("EncryptedContribution", "AggregatedBundle"):
        return (
            len(payload["enc_q"])
            + sum(len(row) for row in payload["enc_s"])
            + len(payload["enc_z"])
            + len(payload["enc_dr"])
        )
    if variant == "KeyDistribution":
        return len(payload.get("enc_r", []))
    if variant in ("ComparisonRequest", "BlindDecryptRequest"):
        return 1
    return 0
