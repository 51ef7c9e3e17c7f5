"""Seeded RNG streams, dataset validation, CSV interchange, and unit helpers."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from interpeff import (
    Dataset,
    DatasetFormatError,
    NATS_PER_BIT,
    RngStream,
    binary_entropy,
    bits_to_nats,
    canonical_json,
    load_csv,
    nats_to_bits,
    save_csv,
    stratified_folds,
    stratified_split_indices,
)


class TestRngStream:
    def test_same_seed_same_draws(self):
        a = RngStream(1).generator().normal(size=3)
        b = RngStream(1).generator().normal(size=3)
        assert np.array_equal(a, b)

    def test_different_seeds_differ(self):
        a = RngStream(1).generator().normal(size=8)
        b = RngStream(2).generator().normal(size=8)
        assert not np.array_equal(a, b)

    def test_child_streams_are_stable_and_order_free(self):
        root = RngStream(7)
        first = root.child("mi").generator().normal(size=4)
        # Requesting an unrelated sibling must not perturb "mi".
        root.child("cv").generator().normal(size=100)
        second = root.child("mi").generator().normal(size=4)
        assert np.array_equal(first, second)

    def test_children_are_distinct(self):
        root = RngStream(7)
        kids = root.children("fold", 5)
        streams = {k.stream for k in kids}
        assert len(streams) == 5
        assert all(k.seed == 7 for k in kids)

    def test_rejects_negative_seed(self):
        with pytest.raises(ValueError, match="seed"):
            RngStream(-1)
        with pytest.raises(ValueError, match="stream"):
            RngStream(0, -2)


class TestDataset:
    def test_basic_properties(self):
        ds = Dataset(np.arange(6.0).reshape(3, 2), np.array([0, 1, 0]), "toy")
        assert ds.n_samples == 3
        assert ds.n_features == 2
        assert np.array_equal(ds.classes, [0, 1])

    def test_rejects_misaligned_labels(self):
        with pytest.raises(ValueError, match="differ"):
            Dataset(np.zeros((3, 2)), np.array([0, 1]))

    def test_rejects_non_finite(self):
        x = np.zeros((2, 2))
        x[0, 0] = np.nan
        with pytest.raises(ValueError, match="finite"):
            Dataset(x, np.array([0, 1]))

    def test_rejects_fractional_labels(self):
        with pytest.raises(ValueError, match="integers"):
            Dataset(np.zeros((2, 2)), np.array([0.0, 0.5]))

    def test_subset_and_with_features(self):
        ds = Dataset(np.arange(8.0).reshape(4, 2), np.array([0, 0, 1, 1]))
        sub = ds.subset(np.array([1, 3]))
        assert np.array_equal(sub.labels, [0, 1])
        swapped = ds.with_features(np.ones((4, 3)), name="mapped")
        assert swapped.n_features == 3
        assert swapped.name == "mapped"


class TestUnits:
    def test_binary_entropy_quarter_in_bits(self):
        assert binary_entropy(0.25, units="bits") == pytest.approx(0.811278, abs=1e-6)

    def test_binary_entropy_half_is_log2(self):
        assert binary_entropy(0.5) == pytest.approx(np.log(2.0), abs=1e-15)

    def test_binary_entropy_edges_are_zero(self):
        assert binary_entropy(0.0) == 0.0
        assert binary_entropy(1.0) == 0.0

    def test_binary_entropy_rejects_out_of_range(self):
        with pytest.raises(ValueError):
            binary_entropy(1.5)

    @given(st.floats(min_value=0.0, max_value=10.0, allow_nan=False))
    @settings(max_examples=50, deadline=None)
    def test_unit_conversions_round_trip(self, x):
        assert bits_to_nats(nats_to_bits(x)) == pytest.approx(x, abs=1e-12)

    def test_one_bit_is_log_two_nats(self):
        assert NATS_PER_BIT == pytest.approx(np.log(2.0), abs=0)


class TestStratifiedSplits:
    def test_split_preserves_class_proportions(self):
        labels = np.repeat([0, 1, 2], [60, 30, 10])
        tr, te = stratified_split_indices(labels, 0.7, RngStream(3))
        assert tr.size + te.size == labels.size
        assert np.intersect1d(tr, te).size == 0
        tr_counts = np.bincount(labels[tr], minlength=3)
        assert np.array_equal(tr_counts, [42, 21, 7])

    def test_split_is_deterministic(self):
        labels = np.repeat([0, 1], [50, 50])
        a = stratified_split_indices(labels, 0.8, RngStream(11))
        b = stratified_split_indices(labels, 0.8, RngStream(11))
        assert np.array_equal(a[0], b[0]) and np.array_equal(a[1], b[1])

    def test_split_rejects_bad_fraction(self):
        with pytest.raises(ValueError, match="train_fraction"):
            stratified_split_indices(np.array([0, 1]), 1.0, RngStream(0))

    def test_folds_partition_everything(self):
        labels = np.repeat([0, 1, 2], [40, 35, 25])
        folds = stratified_folds(labels, 4, RngStream(5))
        joined = np.sort(np.concatenate(folds))
        assert np.array_equal(joined, np.arange(labels.size))
        sizes = sorted(f.size for f in folds)
        assert sizes[-1] - sizes[0] <= 3

    def test_folds_keep_class_balance(self):
        labels = np.repeat([0, 1], [60, 60])
        for fold in stratified_folds(labels, 3, RngStream(9)):
            counts = np.bincount(labels[fold], minlength=2)
            assert abs(int(counts[0]) - int(counts[1])) <= 2

    def test_folds_reject_too_many(self):
        with pytest.raises(ValueError, match="n_folds"):
            stratified_folds(np.array([0, 1, 0]), 4, RngStream(0))


class TestCsvRoundTrip:
    def test_round_trip_is_exact(self, tmp_path):
        gen = RngStream(21).generator()
        ds = Dataset(gen.normal(size=(17, 5)), gen.integers(0, 3, size=17), "rt")
        path = tmp_path / "rt.csv"
        save_csv(ds, path)
        back = load_csv(path)
        assert np.array_equal(back.features, ds.features)
        assert np.array_equal(back.labels, ds.labels)

    def test_missing_header_reports_line_one(self, tmp_path):
        p = tmp_path / "bad.csv"
        p.write_text("x,y\n0,1.0\n")
        with pytest.raises(DatasetFormatError, match="line 1"):
            load_csv(p)

    def test_short_row_reports_its_line(self, tmp_path):
        p = tmp_path / "bad.csv"
        p.write_text("label,f0,f1\n0,1.0,2.0\n1,3.0\n")
        with pytest.raises(DatasetFormatError, match="line 3"):
            load_csv(p)

    def test_non_numeric_feature_reports_its_line(self, tmp_path):
        p = tmp_path / "bad.csv"
        p.write_text("label,f0\n0,1.0\n1,oops\n")
        with pytest.raises(DatasetFormatError, match="line 3"):
            load_csv(p)

    def test_non_integer_label_reports_its_line(self, tmp_path):
        p = tmp_path / "bad.csv"
        p.write_text("label,f0\n0.5,1.0\n")
        with pytest.raises(DatasetFormatError, match="line 2"):
            load_csv(p)

    def test_empty_file_rejected(self, tmp_path):
        p = tmp_path / "empty.csv"
        p.write_text("")
        with pytest.raises(DatasetFormatError, match="empty"):
            load_csv(p)


class TestCanonicalJson:
    def test_sorted_keys_and_trailing_newline(self):
        text = canonical_json({"b": 1, "a": [1.5, 2]})
        assert text.index('"a"') < text.index('"b"')
        assert text.endswith("\n")

    def test_equal_inputs_equal_bytes(self):
        a = canonical_json({"x": 0.1 + 0.2, "y": [3, 2]})
        b = canonical_json({"y": [3, 2], "x": 0.1 + 0.2})
        assert a == b

    def test_rejects_nan(self):
        with pytest.raises(ValueError):
            canonical_json({"x": float("nan")})
