"""Loading, validation, normalization and synthesis of labeled time-series datasets.

A sample is a ``V x T`` matrix (variables by timesteps); a dataset is a
sequence of samples sharing ``V`` but possibly differing in ``T``.  Three
on-disk layouts are supported:

* UCR flat file: one sample per line, ``label<delim>v1<delim>...<delim>vT``,
  comma- or tab-delimited (auto-detected on the first line).
* Multivariate directory: one numeric CSV per sample (rows = variables,
  columns = timesteps) plus a ``labels.csv`` with rows ``filename,label``.
* Synthetic generator spec, accepted as a JSON document::

      {"classes": [{"waveform": "sine", "noise_std": 0.1,
                    "phase_jitter": 0.3, "cycles": 3}, ...],
       "n_per_class": 100, "length": 128, "name": "demo"}

  ``waveform`` is one of ``sine``, ``square``, ``trend``; ``cycles`` is
  optional (defaults: sine 3, square 6, ignored for trend).
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import (
    ConfigError,
    EmptyDatasetError,
    FormatError,
    LabelError,
    ParameterError,
    ParseError,
    ShapeError,
)


def _freeze(a):
    a = np.ascontiguousarray(a, dtype=np.float64)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class TimeSeries:
    """One sample: ``values`` is a read-only V x T float64 matrix."""

    values: np.ndarray
    id: int = 0

    def __post_init__(self):
        v = np.atleast_2d(np.asarray(self.values, dtype=np.float64))
        if v.ndim != 2:
            raise ShapeError(f"sample {self.id}: expected a V x T matrix, got ndim={v.ndim}")
        if v.shape[0] < 1 or v.shape[1] < 2:
            raise ShapeError(f"sample {self.id}: need V >= 1 and T >= 2, got shape {v.shape}")
        if not np.isfinite(v).all():
            raise FormatError(f"sample {self.id}: non-finite values")
        object.__setattr__(self, "values", _freeze(v))

    @property
    def v(self) -> int:
        return self.values.shape[0]

    @property
    def t(self) -> int:
        return self.values.shape[1]


@dataclass(frozen=True)
class Dataset:
    """An immutable collection of samples with optional 0-based class labels."""

    samples: tuple
    labels: np.ndarray | None = None
    k_hint: int | None = None
    name: str = ""

    def __post_init__(self):
        samples = tuple(self.samples)
        if not samples:
            raise EmptyDatasetError("dataset has no samples")
        v = samples[0].v
        for ts in samples:
            if ts.v != v:
                raise ShapeError(
                    f"sample {ts.id}: variable count {ts.v} differs from {v}"
                )
        object.__setattr__(self, "samples", samples)
        if self.labels is not None:
            labels = np.asarray(self.labels, dtype=np.int64)
            if labels.shape != (len(samples),):
                raise LabelError(
                    f"got {labels.size} labels for {len(samples)} samples"
                )
            distinct = np.unique(labels)
            if distinct[0] != 0 or distinct[-1] != distinct.size - 1:
                raise LabelError("labels must be contiguous integers starting at 0")
            labels.setflags(write=False)
            object.__setattr__(self, "labels", labels)

    @property
    def n(self) -> int:
        return len(self.samples)

    @property
    def v(self) -> int:
        return self.samples[0].v

    @property
    def lengths(self) -> tuple:
        return tuple(ts.t for ts in self.samples)

    @property
    def equal_length(self):
        """Common T if all samples share it, else None."""
        ls = set(self.lengths)
        return ls.pop() if len(ls) == 1 else None

    @property
    def has_labels(self) -> bool:
        return self.labels is not None

    def to_matrix(self) -> np.ndarray:
        """Samples flattened to an N x (V*T) matrix; requires equal lengths."""
        if self.equal_length is None:
            raise ShapeError("samples have differing lengths; no flat matrix")
        return np.stack([ts.values.ravel() for ts in self.samples])

    def znormalized(self) -> "Dataset":
        return Dataset(
            tuple(znormalize(ts) for ts in self.samples),
            labels=self.labels,
            k_hint=self.k_hint,
            name=self.name,
        )


def _remap_labels(raw):
    """Map arbitrary label values onto dense 0..k-1 ids (sorted order)."""
    distinct = sorted(set(raw))
    lut = {lab: i for i, lab in enumerate(distinct)}
    return np.array([lut[lab] for lab in raw], dtype=np.int64), len(distinct)


def _parse_cell(text, line_no, col_no):
    try:
        value = float(text)
    except ValueError:
        raise ParseError(
            f"line {line_no}, column {col_no}: cannot parse {text!r} as a number"
        ) from None
    if not np.isfinite(value):
        raise ParseError(f"line {line_no}, column {col_no}: non-finite value {text!r}")
    return value


def load_ucr(path, delimiter: str = "auto") -> Dataset:
    """Load a UCR-style flat file (label first, values after, one line per sample).

    ``delimiter`` is ``auto`` (tab if the first line has one, else comma),
    ``comma`` or ``tab``.  Labels are remapped to dense 0-based ids;
    ``k_hint`` is the number of distinct labels.
    """
    path = Path(path)
    lines = [ln for ln in path.read_text().splitlines() if ln.strip()]
    if not lines:
        raise EmptyDatasetError(f"{path}: empty file")
    if delimiter == "auto":
        delim = "\t" if "\t" in lines[0] else ","
    elif delimiter == "comma":
        delim = ","
    elif delimiter == "tab":
        delim = "\t"
    else:
        raise ConfigError(f"unknown delimiter {delimiter!r}")

    raw_labels = []
    rows = []
    width = None
    for i, line in enumerate(lines, start=1):
        cells = line.split(delim)
        if width is None:
            width = len(cells)
            if width < 3:
                raise FormatError(f"line {i}: need a label plus at least 2 values")
        elif len(cells) != width:
            raise FormatError(
                f"line {i}: expected {width} fields, got {len(cells)}"
            )
        raw_labels.append(_parse_cell(cells[0], i, 1))
        rows.append([_parse_cell(c, i, j + 2) for j, c in enumerate(cells[1:])])

    labels, k = _remap_labels(raw_labels)
    samples = tuple(
        TimeSeries(np.asarray(row, dtype=np.float64)[None, :], id=i)
        for i, row in enumerate(rows)
    )
    return Dataset(samples, labels=labels, k_hint=k, name=path.stem)


def save_ucr(ds: Dataset, path, delimiter: str = ",") -> None:
    """Write a univariate equal-length dataset back to the UCR flat layout."""
    if ds.v != 1:
        raise ShapeError("UCR flat files are univariate")
    if ds.equal_length is None:
        raise ShapeError("UCR flat files require equal-length samples")
    if ds.labels is None:
        raise LabelError("UCR flat files carry a label per line")
    delim = {",": ",", "comma": ",", "\t": "\t", "tab": "\t"}.get(delimiter)
    if delim is None:
        raise ConfigError(f"unknown delimiter {delimiter!r}")
    with open(path, "w") as fh:
        for ts, lab in zip(ds.samples, ds.labels):
            cells = [str(int(lab))] + [repr(float(x)) for x in ts.values[0]]
            fh.write(delim.join(cells) + "\n")


def load_multivariate(directory) -> Dataset:
    """Load a directory of per-sample CSVs plus a ``labels.csv`` manifest.

    Each sample file holds one variable per row and one timestep per column;
    sample order follows the manifest.  ``T`` may vary across samples, ``V``
    may not.
    """
    directory = Path(directory)
    manifest = directory / "labels.csv"
    if not manifest.exists():
        raise LabelError(f"{directory}: missing labels.csv")
    entries = []
    for i, line in enumerate(manifest.read_text().splitlines(), start=1):
        if not line.strip():
            continue
        parts = line.split(",")
        if len(parts) != 2:
            raise LabelError(f"labels.csv line {i}: expected 'filename,label'")
        entries.append((parts[0].strip(), parts[1].strip(), i))
    if not entries:
        raise EmptyDatasetError(f"{directory}: labels.csv lists no samples")

    raw_labels = []
    samples = []
    v = None
    for idx, (fname, lab, line_no) in enumerate(entries):
        fpath = directory / fname
        if not fpath.exists():
            raise LabelError(f"labels.csv line {line_no}: no such file {fname!r}")
        try:
            raw_labels.append(float(lab))
        except ValueError:
            raise LabelError(
                f"labels.csv line {line_no}: cannot parse label {lab!r}"
            ) from None
        rows = []
        width = None
        for j, line in enumerate(fpath.read_text().splitlines(), start=1):
            if not line.strip():
                continue
            cells = line.split(",")
            if width is None:
                width = len(cells)
            elif len(cells) != width:
                raise FormatError(f"{fname} line {j}: ragged row")
            rows.append([_parse_cell(c, j, ci + 1) for ci, c in enumerate(cells)])
        if not rows:
            raise FormatError(f"{fname}: empty sample file")
        mat = np.asarray(rows, dtype=np.float64)
        if v is None:
            v = mat.shape[0]
        elif mat.shape[0] != v:
            raise ShapeError(
                f"{fname}: {mat.shape[0]} variables, expected {v} as in the first sample"
            )
        samples.append(TimeSeries(mat, id=idx))

    labels, k = _remap_labels(raw_labels)
    return Dataset(tuple(samples), labels=labels, k_hint=k, name=directory.name)


def save_multivariate(ds: Dataset, directory) -> None:
    """Write a dataset to the per-sample CSV directory layout."""
    if ds.labels is None:
        raise LabelError("multivariate directories carry a label per sample")
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    lines = []
    for ts, lab in zip(ds.samples, ds.labels):
        fname = f"sample_{ts.id:05d}.csv"
        with open(directory / fname, "w") as fh:
            for row in ts.values:
                fh.write(",".join(repr(float(x)) for x in row) + "\n")
        lines.append(f"{fname},{int(lab)}")
    (directory / "labels.csv").write_text("\n".join(lines) + "\n")


def znormalize(ts: TimeSeries) -> TimeSeries:
    """Scale each variable row to mean 0 and population std 1.

    Constant rows map to all-zeros; the transform is idempotent within 1e-9.
    """
    values = ts.values
    mean = values.mean(axis=1, keepdims=True)
    std = values.std(axis=1, keepdims=True)
    out = np.where(std > 1e-12, (values - mean) / np.where(std > 0, std, 1.0), 0.0)
    return TimeSeries(out, id=ts.id)


@dataclass(frozen=True)
class ClassSpec:
    """One synthetic class: a base waveform plus per-sample corruption."""

    waveform: str
    noise_std: float = 0.0
    phase_jitter: float = 0.0
    cycles: float | None = None

    def __post_init__(self):
        if self.waveform not in ("sine", "square", "trend"):
            raise ConfigError(f"unknown waveform {self.waveform!r}")


@dataclass(frozen=True)
class GeneratorSpec:
    classes: tuple
    n_per_class: int
    length: int
    name: str = "synthetic"

    @staticmethod
    def from_json(doc) -> "GeneratorSpec":
        """Build a spec from a JSON string or an already-parsed dict."""
        if isinstance(doc, str):
            doc = json.loads(doc)
        classes = tuple(ClassSpec(**c) for c in doc["classes"])
        return GeneratorSpec(
            classes=classes,
            n_per_class=int(doc["n_per_class"]),
            length=int(doc["length"]),
            name=doc.get("name", "synthetic"),
        )


_DEFAULT_CYCLES = {"sine": 3.0, "square": 6.0}


def _waveform(kind, t, phase, cycles):
    if kind == "sine":
        return np.sin(2.0 * np.pi * (cycles * t + phase))
    if kind == "square":
        return np.where(np.sin(2.0 * np.pi * (cycles * t + phase)) >= 0.0, 1.0, -1.0)
    # trend: unit-slope ramp; the jitter acts as a vertical offset
    return t - 0.5 + phase


def synth_generate(spec, seed: int) -> Dataset:
    """Generate a labeled synthetic dataset, bit-reproducible per seed.

    ``spec`` is a :class:`GeneratorSpec` or anything accepted by
    :meth:`GeneratorSpec.from_json`.  Labels are assigned per class block in
    spec order.
    """
    if not isinstance(spec, GeneratorSpec):
        spec = GeneratorSpec.from_json(spec)
    if spec.n_per_class < 1:
        raise ParameterError(f"n_per_class must be >= 1, got {spec.n_per_class}")
    if spec.length < 8:
        raise ParameterError(f"length must be >= 8, got {spec.length}")
    if not spec.classes:
        raise ConfigError("generator spec lists no classes")

    rng = np.random.default_rng(seed)
    t = np.arange(spec.length, dtype=np.float64) / spec.length
    samples = []
    labels = []
    sid = 0
    for ci, cls in enumerate(spec.classes):
        cycles = cls.cycles if cls.cycles is not None else _DEFAULT_CYCLES.get(cls.waveform, 0.0)
        for _ in range(spec.n_per_class):
            phase = rng.uniform(-cls.phase_jitter, cls.phase_jitter) if cls.phase_jitter > 0 else 0.0
            base = _waveform(cls.waveform, t, phase, cycles)
            noise = rng.normal(0.0, cls.noise_std, spec.length) if cls.noise_std > 0 else 0.0
            samples.append(TimeSeries((base + noise)[None, :], id=sid))
            labels.append(ci)
            sid += 1
    return Dataset(
        tuple(samples),
        labels=np.asarray(labels, dtype=np.int64),
        k_hint=len(spec.classes),
        name=spec.name,
    )
