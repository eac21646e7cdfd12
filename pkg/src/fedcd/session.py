"""Four-phase session orchestrator and the cost-reporting harness.

A session runs key distribution, local computation and encryption,
the aggregate/decrypt round trip, and the training loop, in that order,
moving every inter-party value through serialized wire messages.  All
randomness except prime generation is derived from the session seed, so
a fixed configuration reproduces its transcript byte for byte (pass
``key_seed`` to pin the primes as well).
"""

from __future__ import annotations

import hashlib
import json
import random
from dataclasses import dataclass
from pathlib import Path
from typing import Callable

import numpy as np

from . import messages, paillier
from .counters import CryptoCounter
from .csp import Csp
from .data_owner import DataOwner, LocalShard
from .errors import PhaseOrderError, ProtocolError
from .evaluator import Evaluator, TrainResult, XiMatrix
from .messages import Message, PHASES
from .regression import RegressionSpec
from .transport import make_transport


def derive_seed(master: int, label: str) -> int:
    """Stable 64-bit child seed for one party or purpose."""
    digest = hashlib.sha256(f"{master}:{label}".encode()).digest()
    return int.from_bytes(digest[:8], "big")


@dataclass(frozen=True)
class SessionConfig:
    """Everything the parties agree on before a session starts."""

    num_owners: int
    kind: str
    lam: float = 0.0
    max_iterations: int = 1000
    tolerance: float = 1e-6
    key_bits: int = 256
    seed: int = 0
    key_seed: int | None = None
    xi_value: float | None = None
    xi_mode: str = "high"
    xi_validate: bool = True
    r_range: tuple[float, float] = (2.0, 5.0)
    r_value: float | None = None
    transport: str = "memory"

    def __post_init__(self):
        if self.num_owners < 2:
            raise ValueError("a session needs at least 2 data owners")

    def spec(self) -> RegressionSpec:
        return RegressionSpec(self.kind, self.lam, self.max_iterations, self.tolerance)

    def rng(self, label: str) -> random.Random:
        return random.Random(derive_seed(self.seed, label))

    def digest(self) -> str:
        record = {
            k: (list(v) if isinstance(v, tuple) else v)
            for k, v in self.__dict__.items()
            if k != "transport"  # delivery detail; same session either way
        }
        return hashlib.sha256(json.dumps(record, sort_keys=True).encode()).hexdigest()

    @property
    def session_id(self) -> str:
        return f"s{self.digest()[:12]}"


@dataclass
class TranscriptEntry:
    seq: int
    variant: str
    sender: str
    recipient: str
    num_bytes: int
    ciphertexts: int
    data: bytes


class Router:
    """Moves serialized messages through the transport and records delivery."""

    def __init__(self, transport, session_id: str):
        self.transport = transport
        self.session_id = session_id
        self.transcript: list[TranscriptEntry] = []
        self.phase = 0

    def send(self, variant: str, sender: str, recipient: str, payload: dict) -> None:
        data = messages.serialize(Message(variant, self.session_id, sender, payload))
        self.transport.send(recipient, data)

    def recv(self, recipient: str) -> Message:
        data = self.transport.recv(recipient)
        msg = messages.deserialize(data)
        if msg.session_id != self.session_id:
            raise ProtocolError(
                f"message for session {msg.session_id!r} arrived in {self.session_id!r}"
            )
        phase = PHASES[msg.variant]
        if phase < self.phase:
            raise PhaseOrderError(
                f"{msg.variant} (phase {phase}) arrived after phase {self.phase} began"
            )
        self.phase = max(self.phase, phase)
        self.transcript.append(
            TranscriptEntry(
                seq=len(self.transcript),
                variant=msg.variant,
                sender=msg.sender,
                recipient=recipient,
                num_bytes=len(data),
                ciphertexts=messages.count_ciphertexts(msg.variant, msg.payload),
                data=data,
            )
        )
        return msg

    def exchange(self, variant, sender, recipient, payload) -> Message:
        self.send(variant, sender, recipient, payload)
        return self.recv(recipient)


class _CspChannel:
    """Evaluator-side view of the request/response lines to the key service."""

    def __init__(self, router: Router, csp: Csp):
        self.router = router
        self.csp = csp
        self.next_id = 0

    def _request_id(self) -> int:
        self.next_id += 1
        return self.next_id

    def compare(self, c: paillier.Ciphertext) -> int:
        rid = self._request_id()
        msg = self.router.exchange(
            "ComparisonRequest", "evaluator", "csp",
            messages.comparison_request_payload(rid, c),
        )
        got_rid, ct = messages.parse_comparison_request(msg.payload)
        sign = self.csp.compare_sign(ct)
        reply = self.router.exchange(
            "ComparisonResponse", "csp", "evaluator",
            messages.comparison_response_payload(got_rid, sign),
        )
        rid_back, sign_back = messages.parse_comparison_response(reply.payload)
        if rid_back != rid:
            raise ProtocolError(f"comparison response {rid_back} does not match request {rid}")
        return sign_back

    def blind_decrypt(self, c: paillier.Ciphertext) -> float:
        rid = self._request_id()
        msg = self.router.exchange(
            "BlindDecryptRequest", "evaluator", "csp",
            messages.blind_decrypt_request_payload(rid, c),
        )
        got_rid, ct = messages.parse_blind_decrypt_request(msg.payload)
        value = self.csp.blind_decrypt_respond(ct)
        reply = self.router.exchange(
            "BlindDecryptResponse", "csp", "evaluator",
            messages.blind_decrypt_response_payload(got_rid, value),
        )
        rid_back, value_back = messages.parse_blind_decrypt_response(reply.payload)
        if rid_back != rid:
            raise ProtocolError(f"blind-decrypt response {rid_back} does not match request {rid}")
        return value_back


@dataclass
class SessionResult:
    config: SessionConfig
    weights: dict[int, np.ndarray]
    w_hat_star: np.ndarray
    train: TrainResult
    transcript: list[TranscriptEntry]
    counters: dict[str, CryptoCounter]
    evaluator: Evaluator
    csp: Csp
    data_owners: list[DataOwner]

    @property
    def final_weights(self) -> np.ndarray:
        """The common denoised model every owner recovered."""
        return next(iter(self.weights.values()))

    def save_transcript(self, path: str | Path) -> None:
        with open(path, "w") as handle:
            for entry in self.transcript:
                record = {
                    "seq": entry.seq,
                    "recipient": entry.recipient,
                    "bytes": entry.num_bytes,
                    "message": json.loads(entry.data.decode()),
                }
                handle.write(json.dumps(record, sort_keys=True) + "\n")


def run_session(
    config: SessionConfig,
    shards: list[LocalShard],
    on_update: Callable | None = None,
) -> SessionResult:
    """Execute one full training session over the configured transport."""
    if len(shards) != config.num_owners:
        raise ProtocolError(f"expected {config.num_owners} shards, got {len(shards)}")
    num_coords = shards[0].num_coords
    if any(s.num_coords != num_coords for s in shards):
        raise ProtocolError("shards disagree on the feature count")

    spec = config.spec()
    key_rng = random.Random(config.key_seed) if config.key_seed is not None else None
    csp = Csp(
        kind=config.kind,
        lam=config.lam,
        key_bits=config.key_bits,
        rng=config.rng("csp"),
        key_rng=key_rng,
        r_range=config.r_range,
        r_fixed=config.r_value,
    )
    xi = None
    if config.xi_value is not None:
        xi = XiMatrix.constant(config.xi_value, num_coords, validate=config.xi_validate)
    evaluator = Evaluator(
        spec,
        xi=xi,
        xi_mode=config.xi_mode,
        crypto_rng=config.rng("evaluator"),
        blind_rng=config.rng("evaluator-blind"),
    )
    owners = [DataOwner(shard, rng=config.rng(f"do-{shard.owner_id}")) for shard in shards]

    transport = make_transport(config.transport)
    router = Router(transport, config.session_id)
    try:
        # phase 1: key and noise distribution
        setup = csp.setup(num_coords)
        msg = router.exchange(
            "KeyDistribution", "csp", "evaluator",
            messages.key_distribution_payload(setup.public_key, setup.enc_r),
        )
        pk, enc_r = messages.parse_key_distribution(msg.payload)
        evaluator.receive_key_material(pk, enc_r)
        for owner in owners:
            label = f"do-{owner.owner_id}"
            msg = router.exchange(
                "KeyDistribution", "csp", label,
                messages.key_distribution_payload(setup.public_key),
            )
            owner.receive_public_key(messages.parse_key_distribution(msg.payload)[0])
            msg = router.exchange(
                "NoiseVector", "csp", label, messages.noise_payload(setup.noise)
            )
            owner.receive_noise(messages.parse_noise(msg.payload))

        # phase 2: local computation and encryption
        for owner in owners:
            contrib = owner.contribution()
            msg = router.exchange(
                "EncryptedContribution", f"do-{owner.owner_id}", "evaluator",
                messages.contribution_payload(contrib),
            )
            evaluator.receive_contribution(messages.parse_contribution(msg.payload))

        # phase 3: aggregation, masking, decryption round trip
        masked = evaluator.build_masked_aggregate()
        msg = router.exchange(
            "AggregatedBundle", "evaluator", "csp", messages.aggregated_payload(masked)
        )
        plain = csp.decrypt_and_perturb(messages.parse_aggregated(msg.payload))
        msg = router.exchange(
            "DecryptedBundle", "csp", "evaluator", messages.decrypted_payload(plain)
        )
        evaluator.receive_plain_bundle(messages.parse_decrypted(msg.payload))

        # phase 4: training and delivery
        channel = _CspChannel(router, csp)
        train = evaluator.train(channel, on_update=on_update)
        weights: dict[int, np.ndarray] = {}
        for owner in owners:
            msg = router.exchange(
                "FinalWeights", "evaluator", f"do-{owner.owner_id}",
                messages.final_weights_payload(train.w_hat_star),
            )
            weights[owner.owner_id] = owner.finalize(messages.parse_final_weights(msg.payload))
    finally:
        transport.close()

    counters = {"csp": csp.counter, "evaluator": evaluator.counter}
    for owner in owners:
        counters[f"do-{owner.owner_id}"] = owner.counter
    return SessionResult(
        config=config,
        weights=weights,
        w_hat_star=train.w_hat_star,
        train=train,
        transcript=router.transcript,
        counters=counters,
        evaluator=evaluator,
        csp=csp,
        data_owners=owners,
    )


def counters_report(result: SessionResult) -> dict:
    """Per-party operation, message, and byte tallies for one session."""
    parties: dict[str, dict] = {}
    for name, counter in result.counters.items():
        parties[name] = dict(counter.as_dict(), bytes_sent=0, ciphertexts_sent=0)
    message_counts: dict[str, int] = {}
    for entry in result.transcript:
        message_counts[entry.variant] = message_counts.get(entry.variant, 0) + 1
        record = parties.setdefault(
            entry.sender,
            {"encryptions": 0, "decryptions": 0, "cipher_adds": 0, "scalar_muls": 0,
             "bytes_sent": 0, "ciphertexts_sent": 0},
        )
        record["bytes_sent"] += entry.num_bytes
        record["ciphertexts_sent"] += entry.ciphertexts
    return {
        "key_bits": result.config.key_bits,
        "ciphertext_bits": 2 * result.config.key_bits,
        "num_owners": result.config.num_owners,
        "num_coords": len(result.w_hat_star),
        "sweeps": result.train.sweeps,
        "parties": parties,
        "messages": message_counts,
    }
