import random

import numpy as np
import pytest

from fedcd import paillier
from fedcd.data import gen_synthetic, partition_equal
from fedcd.data_owner import (
    DataOwner,
    LocalShard,
    NoiseVector,
    build_contribution,
    compute_delta_r,
    compute_intermediates,
    denoise,
    evaluate_local,
    initial_weights,
)
from fedcd.errors import ProtocolError
from fedcd.regression import mae

TOY = LocalShard(np.array([[1.0, 2.0], [1.0, 0.0]]), np.array([3.0, 1.0]), owner_id=1)


class TestIntermediates:
    def test_toy_values(self):
        q, s, z = compute_intermediates(TOY)
        assert np.array_equal(q, [4.0, 6.0])
        assert s[0, 1] == s[1, 0] == 2.0
        assert s[0, 0] == s[1, 1] == 0.0
        assert np.array_equal(z, [2.0, 4.0])

    def test_direct_summation_oracle(self):
        shard = partition_equal(gen_synthetic(30, 4, seed=2), 2, seed=0)[0]
        q, s, z = compute_intermediates(shard)
        n1 = shard.num_coords
        for k in range(n1):
            assert q[k] == pytest.approx(sum(shard.x[i, k] * shard.y[i] for i in range(len(shard.y))), rel=1e-12)
            assert z[k] == pytest.approx(sum(shard.x[i, k] ** 2 for i in range(len(shard.y))), rel=1e-12)
            for j in range(n1):
                expected = 0.0 if k == j else sum(shard.x[i, j] * shard.x[i, k] for i in range(len(shard.y)))
                assert s[k, j] == pytest.approx(expected, rel=1e-12, abs=1e-12)

    def test_symmetry(self):
        shard = partition_equal(gen_synthetic(40, 5, seed=7), 2, seed=1)[1]
        _, s, _ = compute_intermediates(shard)
        assert np.array_equal(s, s.T)

    def test_aggregation_identity_across_partitions(self):
        ds = gen_synthetic(60, 3, seed=9)
        whole = LocalShard(ds.x, ds.y, owner_id=0)
        q_all, s_all, z_all = compute_intermediates(whole)
        for num_owners in (2, 3, 5):
            shards = partition_equal(ds, num_owners, seed=num_owners)
            parts = [compute_intermediates(s) for s in shards]
            assert np.allclose(sum(p[0] for p in parts), q_all, atol=1e-9)
            assert np.allclose(sum(p[1] for p in parts), s_all, atol=1e-9)
            assert np.allclose(sum(p[2] for p in parts), z_all, atol=1e-9)


class TestDeltaR:
    def test_toy_values(self):
        _, s, _ = compute_intermediates(TOY)
        dr = compute_delta_r(s, np.array([0.5, -1.0]))
        assert np.array_equal(dr, [-2.0, 1.0])

    def test_zero_noise(self):
        _, s, _ = compute_intermediates(TOY)
        assert np.array_equal(compute_delta_r(s, np.zeros(2)), [0.0, 0.0])

    def test_linearity(self):
        shard = partition_equal(gen_synthetic(25, 3, seed=5), 2, seed=3)[0]
        _, s, _ = compute_intermediates(shard)
        rng = np.random.default_rng(0)
        r1, r2 = rng.uniform(-2, 2, 4), rng.uniform(-2, 2, 4)
        for a, b in ((1.0, 1.0), (2.5, -0.5), (0.0, 3.0)):
            combined = compute_delta_r(s, a * r1 + b * r2)
            split = a * compute_delta_r(s, r1) + b * compute_delta_r(s, r2)
            assert np.allclose(combined, split, atol=1e-9)


class TestContribution:
    def test_encrypted_quantities_roundtrip(self, keypair):
        pk, sk = keypair
        noise = NoiseVector(np.array([0.5, -1.0]), seed_w0=77)
        contrib = build_contribution(TOY, noise, pk, random.Random(0))
        q, s, z = compute_intermediates(TOY)
        dr = compute_delta_r(s, noise.r)

        def dec(ct):
            return paillier.decode(paillier.decrypt(sk, pk, ct), pk)

        assert [dec(c) for c in contrib.enc_q] == pytest.approx(list(q), abs=1e-6)
        assert [dec(c) for c in contrib.enc_z] == pytest.approx(list(z), abs=1e-6)
        assert [dec(c) for c in contrib.enc_dr] == pytest.approx(list(dr), abs=1e-6)
        for k in range(2):
            for j in range(2):
                assert dec(contrib.enc_s[k][j]) == pytest.approx(s[k, j], abs=1e-6)

    def test_diagonal_encrypts_zero(self, keypair):
        pk, sk = keypair
        contrib = build_contribution(TOY, NoiseVector(np.zeros(2), 1), pk, random.Random(1))
        for k in range(2):
            assert paillier.decrypt(sk, pk, contrib.enc_s[k][k]).mantissa == 0

    def test_shared_seed_gives_identical_noisy_starts(self, keypair):
        pk, _ = keypair
        noise = NoiseVector(np.array([2.0, 3.0]), seed_w0=123)
        other = LocalShard(TOY.x * 2.0, TOY.y * 2.0, owner_id=2)
        a = build_contribution(TOY, noise, pk, random.Random(2))
        b = build_contribution(other, noise, pk, random.Random(3))
        assert np.array_equal(a.w_hat0, b.w_hat0)

    def test_initial_weights_in_range(self):
        w0 = initial_weights(99, 50)
        assert np.all(np.abs(w0) <= 1.0)

    def test_counter_counts_every_ciphertext(self, keypair):
        pk, _ = keypair
        owner = DataOwner(TOY, random.Random(4))
        owner.receive_public_key(pk)
        owner.receive_noise(NoiseVector(np.zeros(2), 5))
        owner.contribution()
        n1 = TOY.num_coords
        assert owner.counter.encryptions == n1 * n1 + 3 * n1


class TestDenoise:
    def test_noise_only_collapses_to_zero(self):
        r = np.array([0.5, -1.0])
        assert np.array_equal(denoise(r.copy(), r), [0.0, 0.0])

    def test_hand_values(self):
        out = denoise(np.array([2.5, -0.5]), np.array([0.5, -1.0]))
        assert np.array_equal(out, [2.0, 0.5])

    def test_inverse_pair(self):
        rng = np.random.default_rng(3)
        w = rng.uniform(-3, 3, 6)
        r = rng.uniform(2, 5, 6)
        assert np.allclose(denoise(w + r, r), w)

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            denoise(np.zeros(3), np.zeros(2))


class TestOwnerActor:
    def test_requires_setup_material(self):
        owner = DataOwner(TOY)
        with pytest.raises(ProtocolError):
            owner.contribution()

    def test_noise_length_check(self, keypair):
        owner = DataOwner(TOY)
        with pytest.raises(ProtocolError):
            owner.receive_noise(NoiseVector(np.zeros(5), 0))

    def test_evaluate_local_is_mae(self):
        ds = gen_synthetic(20, 2, seed=6)
        w = np.array([0.1, -0.2, 0.3])
        assert evaluate_local(w, ds) == mae(w, ds)
