import json
import random

import numpy as np
import pytest

from fedcd import messages, paillier
from fedcd.data_owner import LocalShard, NoiseVector, build_contribution
from fedcd.errors import MessageFormatError
from fedcd.evaluator import PlainBundle, aggregate
from fedcd.messages import Message, deserialize, serialize
from fedcd.ops import PaillierOps

SHARD = LocalShard(np.array([[1.0, 2.0], [1.0, 0.0]]), np.array([3.0, 1.0]), owner_id=1)


def sample_payloads(pk):
    rng = random.Random(0)
    ops = PaillierOps(pk, rng=rng)
    noise = NoiseVector(np.array([0.5, -1.0]), seed_w0=7)
    contrib = build_contribution(SHARD, noise, pk, rng)
    other = build_contribution(LocalShard(SHARD.x, SHARD.y, owner_id=2), noise, pk, rng)
    bundle = aggregate(ops, [contrib, other])
    plain = PlainBundle(
        q_prime=np.array([1.5, -2.0]),
        s_prime=[[paillier.EncodedNumber(123, 2), paillier.EncodedNumber(pk.n - 5, 2)]] * 2,
        z=np.array([2.0, 4.0]),
        dr_prime=np.array([0.0, -3.25]),
    )
    ct = ops.encrypt_value(1.25)
    return {
        "KeyDistribution": messages.key_distribution_payload(pk, [ct]),
        "NoiseVector": messages.noise_payload(noise),
        "EncryptedContribution": messages.contribution_payload(contrib),
        "AggregatedBundle": messages.aggregated_payload(bundle),
        "DecryptedBundle": messages.decrypted_payload(plain),
        "ComparisonRequest": messages.comparison_request_payload(3, ct),
        "ComparisonResponse": messages.comparison_response_payload(3, -1),
        "BlindDecryptRequest": messages.blind_decrypt_request_payload(4, ct),
        "BlindDecryptResponse": messages.blind_decrypt_response_payload(4, 17.25),
        "FinalWeights": messages.final_weights_payload(np.array([0.25, -0.75])),
    }


class TestSerialization:
    def test_every_variant_roundtrips(self, keypair):
        pk, _ = keypair
        for variant, payload in sample_payloads(pk).items():
            msg = Message(variant, "s1", "tester", payload)
            back = deserialize(serialize(msg))
            assert back == msg

    def test_wire_is_single_json_line(self, keypair):
        pk, _ = keypair
        data = serialize(Message("NoiseVector", "s1", "csp",
                                 messages.noise_payload(NoiseVector(np.zeros(2), 1))))
        assert b"\n" not in data
        json.loads(data.decode())

    def test_empty_payload_rejected(self):
        with pytest.raises(MessageFormatError):
            serialize(Message("FinalWeights", "s1", "evaluator", {}))

    def test_unknown_variant_rejected(self):
        with pytest.raises(MessageFormatError):
            serialize(Message("Gossip", "s1", "evaluator", {"x": 1}))
        record = {"version": 1, "variant": "Gossip", "session_id": "s", "sender": "x",
                  "payload": {"x": 1}}
        with pytest.raises(MessageFormatError):
            deserialize(json.dumps(record).encode())

    def test_version_mismatch_rejected(self, keypair):
        pk, _ = keypair
        data = serialize(Message("FinalWeights", "s1", "evaluator",
                                 messages.final_weights_payload(np.zeros(1))))
        record = json.loads(data.decode())
        record["version"] = 2
        with pytest.raises(MessageFormatError):
            deserialize(json.dumps(record).encode())

    def test_non_finite_numbers_rejected(self):
        with pytest.raises(MessageFormatError):
            serialize(Message("FinalWeights", "s1", "evaluator",
                              {"w_hat_star": [float("nan")]}))

    def test_garbage_bytes_rejected(self):
        with pytest.raises(MessageFormatError):
            deserialize(b"not json")
        with pytest.raises(MessageFormatError):
            deserialize(json.dumps([1, 2]).encode())


class TestPayloadParsing:
    def test_contribution_roundtrip(self, keypair):
        pk, _ = keypair
        payload = sample_payloads(pk)["EncryptedContribution"]
        contrib = messages.parse_contribution(payload)
        assert contrib.owner_id == 1
        assert contrib.enc_s[0][0].exponent == 1
        assert messages.contribution_payload(contrib) == payload

    def test_decrypted_bundle_keeps_mantissas_exact(self, keypair):
        pk, _ = keypair
        payload = sample_payloads(pk)["DecryptedBundle"]
        plain = messages.parse_decrypted(payload)
        assert plain.s_prime[0][1].mantissa == pk.n - 5
        assert plain.s_prime[0][0].exponent == 2

    def test_big_integers_travel_as_decimal_strings(self, keypair):
        pk, _ = keypair
        payload = sample_payloads(pk)["AggregatedBundle"]
        assert isinstance(payload["enc_q"][0]["value"], str)
        decoded = json.loads(json.dumps(payload))
        assert int(decoded["enc_q"][0]["value"]) > 0


class TestCiphertextCounting:
    def test_contribution_and_aggregate_counts(self, keypair):
        pk, _ = keypair
        payloads = sample_payloads(pk)
        n1 = 2
        expected = n1 * n1 + 3 * n1
        assert messages.count_ciphertexts("EncryptedContribution",
                                          payloads["EncryptedContribution"]) == expected
        assert messages.count_ciphertexts("AggregatedBundle",
                                          payloads["AggregatedBundle"]) == expected

    def test_request_and_plain_counts(self, keypair):
        pk, _ = keypair
        payloads = sample_payloads(pk)
        assert messages.count_ciphertexts("ComparisonRequest", payloads["ComparisonRequest"]) == 1
        assert messages.count_ciphertexts("KeyDistribution", payloads["KeyDistribution"]) == 1
        assert messages.count_ciphertexts("FinalWeights", payloads["FinalWeights"]) == 0
        assert messages.count_ciphertexts("DecryptedBundle", payloads["DecryptedBundle"]) == 0
