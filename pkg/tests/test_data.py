import numpy as np
import pytest

from fedcd.data import (
    RawTable,
    fixture_info,
    gen_synthetic,
    load_csv,
    load_fixture,
    partition_equal,
    split_train_test,
    standardize,
    to_dataset,
)
from fedcd.errors import DatasetError
from fedcd.regression import Dataset


@pytest.fixture
def csv_file(tmp_path):
    path = tmp_path / "table.csv"
    path.write_text("a,b,target\n1.0,2.5,3.0\n-1.5,0.25,0.0\n4.0,-2.0,7.5\n")
    return path


class TestLoadCsv:
    def test_roundtrip_values(self, csv_file):
        table = load_csv(csv_file, "target")
        assert table.feature_names == ("a", "b")
        assert np.array_equal(table.features, [[1.0, 2.5], [-1.5, 0.25], [4.0, -2.0]])
        assert np.array_equal(table.target, [3.0, 0.0, 7.5])

    def test_missing_target_column(self, csv_file):
        with pytest.raises(DatasetError, match="no column named"):
            load_csv(csv_file, "nope")

    def test_header_only_file(self, tmp_path):
        path = tmp_path / "empty.csv"
        path.write_text("a,b,target\n")
        with pytest.raises(DatasetError, match="no data rows"):
            load_csv(path, "target")

    def test_non_numeric_cell_reports_location(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("a,target\n1.0,2.0\noops,3.0\n")
        with pytest.raises(DatasetError, match=r"bad.csv:3.*'a'.*'oops'"):
            load_csv(path, "target")

    def test_ragged_row(self, tmp_path):
        path = tmp_path / "ragged.csv"
        path.write_text("a,target\n1.0,2.0\n1.0\n")
        with pytest.raises(DatasetError, match="expected 2 fields"):
            load_csv(path, "target")


class TestSplit:
    def test_eighty_twenty(self):
        table = RawTable(np.ones((100, 2)), np.zeros(100), ("a", "b"), "t")
        train, test = split_train_test(table, 0.2, seed=0)
        assert (train.num_samples, test.num_samples) == (80, 20)

    def test_seed_determinism(self):
        rng = np.random.default_rng(0)
        table = RawTable(rng.standard_normal((50, 2)), rng.standard_normal(50), ("a", "b"), "t")
        a = split_train_test(table, 0.2, seed=5)
        b = split_train_test(table, 0.2, seed=5)
        assert np.array_equal(a[0].features, b[0].features)
        assert np.array_equal(a[1].target, b[1].target)

    def test_disjoint_and_exhaustive(self):
        for seed in range(5):
            rng = np.random.default_rng(seed)
            target = rng.permutation(37).astype(float)  # unique values tag the rows
            table = RawTable(target[:, None].copy(), target, ("a",), "t")
            train, test = split_train_test(table, 0.2, seed=seed)
            combined = sorted(np.concatenate([train.target, test.target]).tolist())
            assert combined == sorted(target.tolist())

    def test_bad_fraction(self):
        table = RawTable(np.ones((10, 1)), np.zeros(10), ("a",), "t")
        for fraction in (0.0, 1.0, -0.5):
            with pytest.raises(DatasetError):
                split_train_test(table, fraction, seed=0)


class TestPartition:
    def test_sizes_differ_by_at_most_one(self):
        ds = gen_synthetic(81, 2, seed=0)
        shards = partition_equal(ds, 5, seed=0)
        assert sorted(s.x.shape[0] for s in shards) == [16, 16, 16, 16, 17]

    def test_seed_determinism(self):
        ds = gen_synthetic(30, 2, seed=0)
        a = partition_equal(ds, 3, seed=4)
        b = partition_equal(ds, 3, seed=4)
        for s1, s2 in zip(a, b):
            assert np.array_equal(s1.x, s2.x)

    def test_disjoint_exhaustive_rows(self):
        ds = gen_synthetic(25, 1, seed=3)
        shards = partition_equal(ds, 4, seed=1)
        seen = np.concatenate([s.y for s in shards])
        assert sorted(seen.tolist()) == sorted(ds.y.tolist())

    def test_too_few_owners(self):
        ds = gen_synthetic(10, 1, seed=0)
        with pytest.raises(DatasetError):
            partition_equal(ds, 1, seed=0)

    def test_owner_ids_start_at_one(self):
        ds = gen_synthetic(10, 1, seed=0)
        assert [s.owner_id for s in partition_equal(ds, 2, seed=0)] == [1, 2]


class TestStandardize:
    def test_train_moments(self):
        train = gen_synthetic(200, 3, seed=1)
        test = gen_synthetic(50, 3, seed=2)
        train_s, _, _ = standardize(train, test)
        assert np.allclose(train_s.x[:, 1:].mean(axis=0), 0.0, atol=1e-9)
        assert np.allclose(train_s.x[:, 1:].std(axis=0), 1.0, atol=1e-9)
        assert abs(train_s.y.mean()) < 1e-9 and abs(train_s.y.std() - 1.0) < 1e-9

    def test_bias_column_untouched(self):
        train = gen_synthetic(20, 2, seed=3)
        train_s, _, _ = standardize(train, gen_synthetic(5, 2, seed=4))
        assert np.all(train_s.x[:, 0] == 1.0)

    def test_constant_column_left_unscaled(self):
        x = np.column_stack([np.ones(10), np.full(10, 7.0), np.arange(10.0)])
        ds = Dataset(x, np.arange(10.0))
        out, _, params = standardize(ds, ds)
        assert params.constant_columns[1]
        assert np.all(out.x[:, 1] == 7.0)

    def test_test_set_uses_train_parameters(self):
        train = gen_synthetic(100, 2, seed=5)
        shifted = Dataset(train.x + np.array([0, 10.0, 10.0]), train.y + 5.0)
        _, test_s, params = standardize(train, shifted)
        # a shifted copy must not come out centered
        assert np.all(test_s.x[:, 1:].mean(axis=0) > 5.0)
        assert test_s.y.mean() > 1.0


class TestSynthetic:
    def test_shape_and_bias(self):
        ds = gen_synthetic(40, 6, seed=0)
        assert ds.x.shape == (40, 7)
        assert np.all(ds.x[:, 0] == 1.0)

    def test_seed_determinism(self):
        assert np.array_equal(gen_synthetic(10, 2, seed=9).x, gen_synthetic(10, 2, seed=9).x)

    def test_statistical_moments(self):
        m = 4000
        ds = gen_synthetic(m, 3, seed=11)
        bound = 4.0 / np.sqrt(m)
        assert np.all(np.abs(ds.x[:, 1:].mean(axis=0)) < bound)
        assert abs(ds.y.mean()) < bound

    def test_rejects_empty(self):
        with pytest.raises(DatasetError):
            gen_synthetic(0, 3, seed=0)


class TestFixtures:
    def test_manifest_entries(self):
        for name in ("diabetes", "boston", "abalone"):
            info = fixture_info(name)
            assert info["provenance"] in ("real", "synthetic-standin")

    def test_diabetes_is_real_with_expected_shape(self):
        table, info = load_fixture("diabetes")
        assert info["provenance"] == "real"
        assert table.features.shape == (442, 10)

    def test_standin_shapes_match_schema(self):
        boston, _ = load_fixture("boston")
        assert boston.features.shape == (506, 13)
        abalone, _ = load_fixture("abalone")
        assert abalone.features.shape == (4177, 10)  # one-hot sex + 7 measurements

    def test_unknown_fixture(self):
        with pytest.raises(DatasetError, match="unknown fixture"):
            fixture_info("mystery")

    def test_to_dataset_prepends_bias(self):
        table, _ = load_fixture("diabetes")
        ds = to_dataset(table)
        assert ds.x.shape == (442, 11)
        assert np.all(ds.x[:, 0] == 1.0)


class TestDataDirResolution:
    def test_env_override(self, tmp_path, monkeypatch):
        import json

        (tmp_path / "tiny.csv").write_text("a,t\n1.0,2.0\n3.0,4.0\n")
        (tmp_path / "fixtures.json").write_text(
            json.dumps({"tiny": {"file": "tiny.csv", "target": "t", "provenance": "real"}})
        )
        monkeypatch.setenv("FCD_DATA_DIR", str(tmp_path))
        table, info = load_fixture("tiny")
        assert table.num_samples == 2
        assert info["provenance"] == "real"

    def test_missing_fixture_file(self, tmp_path):
        import json

        (tmp_path / "fixtures.json").write_text(
            json.dumps({"ghost": {"file": "ghost.csv", "target": "t"}})
        )
        with pytest.raises(DatasetError, match="fixture file missing"):
            load_fixture("ghost", tmp_path)

    def test_missing_manifest(self, tmp_path):
        with pytest.raises(DatasetError, match="manifest"):
            load_fixture("anything", tmp_path / "nowhere")
