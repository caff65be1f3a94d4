import numpy as np
import pytest

from tempoproj.dataset import (
    ClassSpec,
    Dataset,
    GeneratorSpec,
    TimeSeries,
    load_multivariate,
    load_ucr,
    save_multivariate,
    save_ucr,
    synth_generate,
    znormalize,
)
from tempoproj.errors import (
    ConfigError,
    EmptyDatasetError,
    FormatError,
    LabelError,
    ParameterError,
    ParseError,
    ShapeError,
)


class TestTimeSeries:
    def test_coerces_1d_to_row(self):
        ts = TimeSeries([1.0, 2.0, 3.0])
        assert ts.values.shape == (1, 3)
        assert ts.v == 1 and ts.t == 3

    def test_rejects_too_short(self):
        with pytest.raises(ShapeError):
            TimeSeries([[1.0]])

    def test_rejects_non_finite(self):
        with pytest.raises(FormatError):
            TimeSeries([[1.0, np.nan]])

    def test_values_read_only(self):
        ts = TimeSeries([1.0, 2.0])
        with pytest.raises(ValueError):
            ts.values[0, 0] = 5.0


class TestDataset:
    def test_mixed_variable_counts_rejected(self):
        a = TimeSeries([[1.0, 2.0]], id=0)
        b = TimeSeries([[1.0, 2.0], [3.0, 4.0]], id=1)
        with pytest.raises(ShapeError):
            Dataset((a, b))

    def test_labels_must_be_contiguous(self):
        a = TimeSeries([1.0, 2.0], id=0)
        b = TimeSeries([3.0, 4.0], id=1)
        with pytest.raises(LabelError):
            Dataset((a, b), labels=np.array([0, 2]))

    def test_label_count_must_match(self):
        a = TimeSeries([1.0, 2.0], id=0)
        with pytest.raises(LabelError):
            Dataset((a,), labels=np.array([0, 1]))

    def test_empty_rejected(self):
        with pytest.raises(EmptyDatasetError):
            Dataset(())

    def test_to_matrix_needs_equal_lengths(self):
        a = TimeSeries([1.0, 2.0], id=0)
        b = TimeSeries([3.0, 4.0, 5.0], id=1)
        ds = Dataset((a, b))
        assert ds.equal_length is None
        with pytest.raises(ShapeError):
            ds.to_matrix()


class TestLoadUcr:
    def test_minimal_two_lines(self, tmp_path):
        f = tmp_path / "mini.csv"
        f.write_text("1,0.0,1.0\n2,1.0,0.0\n")
        ds = load_ucr(f)
        assert ds.n == 2 and ds.v == 1 and ds.equal_length == 2
        assert list(ds.labels) == [0, 1]
        assert ds.k_hint == 2

    def test_tab_autodetect(self, tmp_path):
        f = tmp_path / "mini.tsv"
        f.write_text("1\t0.5\t1.5\n1\t0.25\t0.75\n")
        ds = load_ucr(f)
        assert ds.n == 2
        assert np.allclose(ds.samples[0].values, [[0.5, 1.5]])

    def test_ragged_row_names_line(self, tmp_path):
        f = tmp_path / "bad.csv"
        f.write_text("1,0.0,1.0\n2,1.0\n")
        with pytest.raises(FormatError, match="line 2"):
            load_ucr(f)

    def test_non_numeric_cell(self, tmp_path):
        f = tmp_path / "bad.csv"
        f.write_text("1,0.0,oops\n")
        with pytest.raises(ParseError, match="line 1"):
            load_ucr(f)

    def test_empty_file(self, tmp_path):
        f = tmp_path / "empty.csv"
        f.write_text("")
        with pytest.raises(EmptyDatasetError):
            load_ucr(f)

    def test_non_finite_value_rejected(self, tmp_path):
        f = tmp_path / "inf.csv"
        f.write_text("1,0.0,inf\n")
        with pytest.raises(ParseError):
            load_ucr(f)

    def test_labels_remapped_dense(self, tmp_path):
        f = tmp_path / "lab.csv"
        f.write_text("7,0.0,1.0\n-1,1.0,0.0\n7,2.0,3.0\n")
        ds = load_ucr(f)
        assert list(ds.labels) == [1, 0, 1]
        assert ds.k_hint == 2

    def test_round_trip_value_identical(self, tmp_path):
        rng = np.random.default_rng(0)
        rows = rng.normal(size=(5, 9))
        samples = tuple(TimeSeries(r[None, :], id=i) for i, r in enumerate(rows))
        ds = Dataset(samples, labels=np.array([0, 1, 2, 1, 0]), k_hint=3)
        path = tmp_path / "round.csv"
        save_ucr(ds, path)
        back = load_ucr(path)
        for a, b in zip(ds.samples, back.samples):
            assert np.array_equal(a.values, b.values)
        assert np.array_equal(ds.labels, back.labels)
        save_ucr(back, tmp_path / "round2.csv")
        assert (tmp_path / "round.csv").read_bytes() == (tmp_path / "round2.csv").read_bytes()


class TestLoadMultivariate:
    def _write(self, directory, mats, labels):
        directory.mkdir(exist_ok=True)
        lines = []
        for i, mat in enumerate(mats):
            name = f"s{i}.csv"
            with open(directory / name, "w") as fh:
                for row in mat:
                    fh.write(",".join(repr(float(x)) for x in row) + "\n")
            lines.append(f"{name},{labels[i]}")
        (directory / "labels.csv").write_text("\n".join(lines) + "\n")

    def test_basic_load(self, tmp_path):
        rng = np.random.default_rng(1)
        mats = [rng.normal(size=(4, 6)) for _ in range(5)]
        self._write(tmp_path / "mv", mats, [0, 1, 0, 1, 2])
        ds = load_multivariate(tmp_path / "mv")
        assert ds.n == 5 and ds.v == 4 and ds.k_hint == 3
        assert np.allclose(ds.samples[2].values, mats[2])

    def test_variable_lengths_allowed(self, tmp_path):
        mats = [np.ones((2, 5)), np.ones((2, 8))]
        self._write(tmp_path / "mv", mats, [0, 1])
        ds = load_multivariate(tmp_path / "mv")
        assert ds.lengths == (5, 8)

    def test_inconsistent_v_rejected(self, tmp_path):
        mats = [np.ones((3, 5)), np.ones((4, 5))]
        self._write(tmp_path / "mv", mats, [0, 1])
        with pytest.raises(ShapeError):
            load_multivariate(tmp_path / "mv")

    def test_missing_file_is_label_error(self, tmp_path):
        d = tmp_path / "mv"
        d.mkdir()
        (d / "labels.csv").write_text("ghost.csv,0\n")
        with pytest.raises(LabelError):
            load_multivariate(d)

    def test_single_sample(self, tmp_path):
        self._write(tmp_path / "mv", [np.arange(16.0).reshape(2, 8)], [3])
        ds = load_multivariate(tmp_path / "mv")
        assert ds.n == 1 and ds.v == 2

    def test_round_trip(self, tmp_path):
        rng = np.random.default_rng(2)
        mats = [rng.normal(size=(3, 7)) for _ in range(4)]
        self._write(tmp_path / "mv", mats, [0, 0, 1, 1])
        ds = load_multivariate(tmp_path / "mv")
        save_multivariate(ds, tmp_path / "mv2")
        back = load_multivariate(tmp_path / "mv2")
        for a, b in zip(ds.samples, back.samples):
            assert np.array_equal(a.values, b.values)
        assert np.array_equal(ds.labels, back.labels)


class TestZnormalize:
    def test_hand_computed(self):
        # (x - 2) / sigma with population sigma = sqrt(2/3)
        out = znormalize(TimeSeries([1.0, 2.0, 3.0])).values[0]
        expected = np.array([-1.0, 0.0, 1.0]) / np.sqrt(2.0 / 3.0)
        assert np.allclose(out, expected, atol=1e-12)
        assert abs(out[0] + 1.2247448713915890) < 1e-12

    def test_constant_row_maps_to_zero(self):
        out = znormalize(TimeSeries([5.0, 5.0, 5.0]))
        assert np.array_equal(out.values, np.zeros((1, 3)))

    def test_idempotent(self):
        rng = np.random.default_rng(3)
        ts = TimeSeries(rng.normal(size=(2, 40)))
        once = znormalize(ts)
        twice = znormalize(once)
        assert np.abs(twice.values - once.values).max() < 1e-9

    def test_moments(self):
        rng = np.random.default_rng(4)
        out = znormalize(TimeSeries(rng.normal(2.0, 3.0, size=(3, 64)))).values
        assert np.abs(out.mean(axis=1)).max() < 1e-9
        assert np.abs(out.std(axis=1) - 1.0).max() < 1e-9


class TestSynthGenerate:
    def test_deterministic_per_seed(self, small_spec):
        a = synth_generate(small_spec, seed=7)
        b = synth_generate(small_spec, seed=7)
        assert a.n == 36
        for x, y in zip(a.samples, b.samples):
            assert np.array_equal(x.values, y.values)
        assert np.array_equal(a.labels, b.labels)

    def test_different_seeds_differ(self, small_spec):
        a = synth_generate(small_spec, seed=1)
        b = synth_generate(small_spec, seed=2)
        assert a.n == b.n
        assert not all(
            np.array_equal(x.values, y.values) for x, y in zip(a.samples, b.samples)
        )

    def test_noiseless_class_is_identical(self):
        spec = GeneratorSpec(
            classes=(ClassSpec("sine", noise_std=0.0, phase_jitter=0.0),),
            n_per_class=5, length=16,
        )
        ds = synth_generate(spec, seed=0)
        for ts in ds.samples[1:]:
            assert np.array_equal(ts.values, ds.samples[0].values)

    def test_labels_block_per_class(self, small_spec):
        ds = synth_generate(small_spec, seed=0)
        assert list(ds.labels) == [0] * 12 + [1] * 12 + [2] * 12
        assert ds.k_hint == 3

    def test_unknown_waveform(self):
        with pytest.raises(ConfigError):
            ClassSpec("sawtooth")

    def test_parameter_validation(self):
        spec = GeneratorSpec(classes=(ClassSpec("sine"),), n_per_class=0, length=16)
        with pytest.raises(ParameterError):
            synth_generate(spec, seed=0)
        spec = GeneratorSpec(classes=(ClassSpec("sine"),), n_per_class=1, length=4)
        with pytest.raises(ParameterError):
            synth_generate(spec, seed=0)

    def test_from_json(self):
        doc = """
        {"classes": [{"waveform": "sine", "noise_std": 0.1, "phase_jitter": 0.2},
                     {"waveform": "trend"}],
         "n_per_class": 3, "length": 20, "name": "j"}
        """
        ds = synth_generate(doc, seed=5)
        assert ds.n == 6 and ds.name == "j" and ds.equal_length == 20
