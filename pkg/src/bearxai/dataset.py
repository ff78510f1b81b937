"""Spectrum datasets and their on-disk formats.

Binary layout (little-endian)::

    "BXAI" | u16 version=1 | u32 n_samples | u32 n_bins | f64 order_min | f64 order_max
    per sample: u32 sample_id | u8 label | f64 shaft_freq | f32 amplitudes[n_bins]

CSV import: one row per sample, ``sample_id,label,shaft_freq,a_0,...,a_{n-1}``.
Labels may be written as integers (0, 1, 2) or names (healthy, inner_race,
outer_race). The order range is not part of the CSV; it is supplied by the
caller.
"""

from __future__ import annotations

import csv
import io
import math
import struct
from dataclasses import dataclass

import numpy as np

from .dsp import EnvelopeSpectrum, HealthClass, OrderGrid, envelope_order_spectrum
from .errors import FormatError, UsageError

MAGIC = b"BXAI"
VERSION = 1
_HEADER = struct.Struct("<4sHIIdd")
_RECORD_HEAD = struct.Struct("<IBd")


@dataclass
class SpectrumSet:
    amplitudes: np.ndarray  # (N, n_bins) float32
    labels: np.ndarray  # (N,) int64
    sample_ids: np.ndarray  # (N,) int64
    shaft_freqs: np.ndarray  # (N,) float64
    grid: OrderGrid

    def __post_init__(self):
        self.amplitudes = np.asarray(self.amplitudes, dtype=np.float32)
        self.labels = np.asarray(self.labels, dtype=np.int64)
        self.sample_ids = np.asarray(self.sample_ids, dtype=np.int64)
        self.shaft_freqs = np.asarray(self.shaft_freqs, dtype=np.float64)
        n = len(self.labels)
        if self.amplitudes.shape != (n, self.grid.n_bins):
            raise UsageError(
                f"amplitudes shape {self.amplitudes.shape} != ({n}, {self.grid.n_bins})")
        if self.sample_ids.shape != (n,) or self.shaft_freqs.shape != (n,):
            raise UsageError("per-sample arrays disagree in length")
        if n and (self.labels.min() < 0 or self.labels.max() >= len(HealthClass)):
            raise UsageError("labels outside the known health classes")

    def __len__(self):
        return len(self.labels)

    def subset(self, idx) -> "SpectrumSet":
        idx = np.asarray(idx)
        return SpectrumSet(self.amplitudes[idx], self.labels[idx], self.sample_ids[idx],
                           self.shaft_freqs[idx], self.grid)

    def spectrum(self, i: int) -> EnvelopeSpectrum:
        return EnvelopeSpectrum(self.amplitudes[i], self.grid, float(self.shaft_freqs[i]),
                                HealthClass(int(self.labels[i])), int(self.sample_ids[i]))

    def index_of(self, sample_id: int) -> int:
        hits = np.flatnonzero(self.sample_ids == sample_id)
        if hits.size == 0:
            raise UsageError(f"sample id {sample_id} not in dataset")
        return int(hits[0])

    def class_counts(self) -> list[int]:
        return [int(np.sum(self.labels == c)) for c in HealthClass]

    def __eq__(self, other):
        if not isinstance(other, SpectrumSet):
            return NotImplemented
        return (self.grid == other.grid
                and np.array_equal(self.amplitudes, other.amplitudes)
                and np.array_equal(self.labels, other.labels)
                and np.array_equal(self.sample_ids, other.sample_ids)
                and np.array_equal(self.shaft_freqs, other.shaft_freqs))


def from_time_samples(samples, sample_rate: float, grid: OrderGrid = OrderGrid()) -> SpectrumSet:
    """Envelope order spectra for a list of :class:`~bearxai.synthgen.TimeSample`."""
    amps = np.empty((len(samples), grid.n_bins), dtype=np.float32)
    for i, s in enumerate(samples):
        amps[i] = envelope_order_spectrum(s.signal, sample_rate, s.shaft_freq, grid).amplitudes
    return SpectrumSet(
        amplitudes=amps,
        labels=[int(s.label) for s in samples],
        sample_ids=[s.sample_id for s in samples],
        shaft_freqs=[s.shaft_freq for s in samples],
        grid=grid,
    )


def stratified_split(labels, test_fraction: float = 0.2, seed: int = 0):
    """(train_idx, test_idx); each class contributes ``round(test_fraction*n_c)`` to test.

    Both index arrays come back sorted so dataset order is preserved.
    """
    if not 0 < test_fraction < 1:
        raise UsageError("test_fraction must lie in (0, 1)")
    labels = np.asarray(labels)
    rng = np.random.Generator(np.random.Philox(seed))
    train, test = [], []
    for c in np.unique(labels):
        idx = np.flatnonzero(labels == c)
        idx = idx[rng.permutation(len(idx))]
        n_test = int(math.floor(test_fraction * len(idx) + 0.5))
        test.append(idx[:n_test])
        train.append(idx[n_test:])
    return np.sort(np.concatenate(train)), np.sort(np.concatenate(test))


# ---------------------------------------------------------------- binary IO


def to_bytes(ds: SpectrumSet) -> bytes:
    out = io.BytesIO()
    out.write(_HEADER.pack(MAGIC, VERSION, len(ds), ds.grid.n_bins,
                           ds.grid.order_min, ds.grid.order_max))
    amps = ds.amplitudes.astype("<f4")
    for i in range(len(ds)):
        out.write(_RECORD_HEAD.pack(int(ds.sample_ids[i]), int(ds.labels[i]),
                                    float(ds.shaft_freqs[i])))
        out.write(amps[i].tobytes())
    return out.getvalue()


def from_bytes(data: bytes) -> SpectrumSet:
    if len(data) < _HEADER.size:
        raise FormatError("dataset file is truncated (incomplete header)")
    magic, version, n, n_bins, omin, omax = _HEADER.unpack_from(data, 0)
    if magic != MAGIC:
        raise FormatError("not a BXAI dataset file (bad magic)")
    if version != VERSION:
        raise FormatError(f"unsupported dataset version {version}")
    try:
        grid = OrderGrid(n_bins=n_bins, order_min=omin, order_max=omax)
    except UsageError as exc:
        raise FormatError(f"invalid grid in dataset header: {exc}") from exc
    rec = _RECORD_HEAD.size + 4 * n_bins
    if len(data) != _HEADER.size + n * rec:
        raise FormatError(
            f"dataset size mismatch: header promises {n} samples of {n_bins} bins")
    ids = np.empty(n, dtype=np.int64)
    labels = np.empty(n, dtype=np.int64)
    freqs = np.empty(n)
    amps = np.empty((n, n_bins), dtype=np.float32)
    pos = _HEADER.size
    for i in range(n):
        ids[i], labels[i], freqs[i] = _RECORD_HEAD.unpack_from(data, pos)
        pos += _RECORD_HEAD.size
        amps[i] = np.frombuffer(data, dtype="<f4", count=n_bins, offset=pos)
        pos += 4 * n_bins
    if n and labels.max() >= len(HealthClass):
        raise FormatError(f"unknown label code {labels.max()} in dataset")
    return SpectrumSet(amps, labels, ids, freqs, grid)


def save(ds: SpectrumSet, path) -> bytes:
    data = to_bytes(ds)
    with open(path, "wb") as fh:
        fh.write(data)
    return data


def load(path) -> SpectrumSet:
    with open(path, "rb") as fh:
        return from_bytes(fh.read())


def read_csv(path, grid_range: tuple[float, float] = (0.0, 30.0)) -> SpectrumSet:
    ids, labels, freqs, rows = [], [], [], []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        for lineno, row in enumerate(reader, 1):
            if not row or not row[0].strip():
                continue
            if lineno == 1 and row[0].strip() == "sample_id":
                continue
            try:
                ids.append(int(row[0]))
                labels.append(int(HealthClass.parse(row[1])))
                freqs.append(float(row[2]))
                rows.append([float(v) for v in row[3:]])
            except (ValueError, IndexError, UsageError) as exc:
                raise FormatError(f"{path}:{lineno}: malformed row ({exc})") from exc
    if not rows:
        raise FormatError(f"{path}: no samples")
    widths = {len(r) for r in rows}
    if len(widths) != 1:
        raise FormatError(f"{path}: rows have differing amplitude counts {sorted(widths)}")
    grid = OrderGrid(n_bins=widths.pop(), order_min=grid_range[0], order_max=grid_range[1])
    amps = np.asarray(rows, dtype=np.float64)
    if np.any(amps < 0) or not np.all(np.isfinite(amps)):
        raise FormatError(f"{path}: amplitudes must be finite and non-negative")
    return SpectrumSet(amps, labels, ids, freqs, grid)


def write_csv(ds: SpectrumSet, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["sample_id", "label", "shaft_freq"] + [f"a_{i}" for i in range(ds.grid.n_bins)])
        for i in range(len(ds)):
            w.writerow([int(ds.sample_ids[i]), int(ds.labels[i]), repr(float(ds.shaft_freqs[i]))]
                       + [repr(float(a)) for a in ds.amplitudes[i]])
