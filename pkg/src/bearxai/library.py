"""Health library: one Grad-CAM activation vector per training sample.

Vectors are stored at full input resolution and un-normalized; CAM-Sub
projects them onto sub-band bins at query time, so one library serves
both algorithms and any epsilon.

File layout (little-endian)::

    "BXHL" | u16 version=1 | u8 algo | f64 epsilon | u32 n_entries | u32 n_bins
    | 32-byte SHA-256 of the model weights file
    per entry: u32 sample_id | u8 class | f32 vector[n_bins]
"""

from __future__ import annotations

import hashlib
import io
import logging
import struct
from dataclasses import dataclass

import numpy as np

from .dataset import SpectrumSet
from .dsp import DEFAULT_EPSILON, HealthClass
from .errors import FingerprintMismatch, FormatError, UsageError
from .gradcam import Algo, full_vectors
from .nn import Model, model_to_bytes

log = logging.getLogger(__name__)

MAGIC = b"BXHL"
VERSION = 1
_HEADER = struct.Struct("<4sHBdII32s")
_ENTRY = struct.Struct("<IB")


def model_fingerprint(model: Model) -> bytes:
    return hashlib.sha256(model_to_bytes(model)).digest()


@dataclass
class HealthLibrary:
    sample_ids: np.ndarray  # (N,) int64
    classes: np.ndarray  # (N,) int64
    vectors: np.ndarray  # (N, n_bins) float32
    algo: Algo
    epsilon: float
    fingerprint: bytes

    def __len__(self):
        return len(self.sample_ids)

    @property
    def n_bins(self) -> int:
        return self.vectors.shape[1]

    def class_members(self, cls) -> np.ndarray:
        return np.flatnonzero(self.classes == int(cls))

    def check_model(self, model: Model) -> None:
        if model_fingerprint(model) != self.fingerprint:
            raise FingerprintMismatch(
                "library was built with a different model (fingerprint mismatch); rebuild it")

    def __eq__(self, other):
        if not isinstance(other, HealthLibrary):
            return NotImplemented
        return (self.algo == other.algo and self.epsilon == other.epsilon
                and self.fingerprint == other.fingerprint
                and np.array_equal(self.sample_ids, other.sample_ids)
                and np.array_equal(self.classes, other.classes)
                and np.array_equal(self.vectors, other.vectors))


def build_library(model: Model, train_set: SpectrumSet, algo: Algo = Algo.CAM_FULL,
                  epsilon: float = DEFAULT_EPSILON) -> HealthLibrary:
    """Activation vector of every training sample for its dataset label."""
    if train_set.grid.n_bins != model.arch.input_length:
        raise UsageError(
            f"dataset grid has {train_set.grid.n_bins} bins but the model expects "
            f"{model.arch.input_length}")
    vectors = full_vectors(model, train_set.amplitudes, train_set.labels)
    if not np.all(np.isfinite(vectors)):
        raise FormatError("non-finite activation vector while building the library")
    log.info("built health library with %d entries", len(vectors))
    return HealthLibrary(
        sample_ids=train_set.sample_ids.copy(),
        classes=train_set.labels.copy(),
        vectors=vectors,
        algo=Algo(algo),
        epsilon=float(epsilon),
        fingerprint=model_fingerprint(model),
    )


def to_bytes(lib: HealthLibrary) -> bytes:
    out = io.BytesIO()
    out.write(_HEADER.pack(MAGIC, VERSION, int(lib.algo), lib.epsilon, len(lib), lib.n_bins,
                           lib.fingerprint))
    vecs = lib.vectors.astype("<f4")
    for i in range(len(lib)):
        out.write(_ENTRY.pack(int(lib.sample_ids[i]), int(lib.classes[i])))
        out.write(vecs[i].tobytes())
    return out.getvalue()


def from_bytes(data: bytes, model: Model | None = None) -> HealthLibrary:
    """Parse a library; with ``model`` given, also verify its fingerprint."""
    if len(data) < _HEADER.size:
        raise FormatError("library file is truncated (incomplete header)")
    magic, version, algo, eps, n, n_bins, fp = _HEADER.unpack_from(data, 0)
    if magic != MAGIC:
        raise FormatError("not a health library file (bad magic)")
    if version != VERSION:
        raise FormatError(f"unsupported library version {version}")
    if algo not in (0, 1):
        raise FormatError(f"unknown algorithm code {algo}")
    rec = _ENTRY.size + 4 * n_bins
    if len(data) != _HEADER.size + n * rec:
        raise FormatError(f"library size mismatch: header promises {n} entries of {n_bins} bins")
    ids = np.empty(n, dtype=np.int64)
    classes = np.empty(n, dtype=np.int64)
    vecs = np.empty((n, n_bins), dtype=np.float32)
    pos = _HEADER.size
    for i in range(n):
        ids[i], classes[i] = _ENTRY.unpack_from(data, pos)
        pos += _ENTRY.size
        vecs[i] = np.frombuffer(data, dtype="<f4", count=n_bins, offset=pos)
        pos += 4 * n_bins
    if n and classes.max() >= len(HealthClass):
        raise FormatError(f"unknown class code {classes.max()} in library")
    lib = HealthLibrary(ids, classes, vecs, Algo(algo), eps, fp)
    if model is not None:
        lib.check_model(model)
    return lib


def save_library(lib: HealthLibrary, path) -> bytes:
    data = to_bytes(lib)
    with open(path, "wb") as fh:
        fh.write(data)
    return data


def load_library(path, model: Model | None = None) -> HealthLibrary:
    with open(path, "rb") as fh:
        return from_bytes(fh.read(), model)
