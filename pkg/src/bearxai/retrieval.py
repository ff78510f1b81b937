"""Prediction-basis retrieval from a health library."""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .dsp import HealthClass
from .errors import NumericError, UsageError
from .gradcam import Algo, full_vectors, project
from .library import HealthLibrary
from .nn import Model, predict

DEFAULT_TOP_K = 4


def l2_normalize(v: np.ndarray) -> np.ndarray:
    """Unit-norm copy of ``v`` (float64); rows are normalized for 2-D input."""
    v = np.asarray(v, dtype=np.float64)
    norm = np.linalg.norm(v, axis=-1, keepdims=True)
    if np.any(norm == 0) or not np.all(np.isfinite(norm)):
        raise NumericError("cannot normalize a zero (or non-finite) activation vector")
    return v / norm


def activation_distance(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Euclidean distance between unit vectors (broadcasts over leading axes)."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape[-1] != b.shape[-1]:
        raise UsageError(f"vector lengths differ: {a.shape[-1]} vs {b.shape[-1]}")
    return np.sqrt(np.sum((a - b) ** 2, axis=-1))


def rank(query: np.ndarray, candidates: np.ndarray, ids: np.ndarray):
    """Order candidates by distance to ``query`` after normalizing both sides.

    Ties resolve to the lower id. Returns ``(order, distances)`` where
    ``distances`` is aligned with ``candidates`` (not with ``order``).
    """
    q = l2_normalize(query)
    c = l2_normalize(candidates)
    d = activation_distance(c, q[None, :])
    order = np.lexsort((np.asarray(ids), d))
    return order, d


@dataclass
class BasisEntry:
    entry_id: int
    cls: HealthClass
    distance: float


@dataclass
class PredictionBasis:
    sample_id: int | None
    predicted_class: HealthClass
    probabilities: np.ndarray
    basis: list[BasisEntry]
    algo: Algo
    fell_back: bool = False
    true_class: HealthClass | None = None
    extras: dict = field(default_factory=dict)

    def to_record(self) -> dict:
        rec = {
            "sample_id": self.sample_id,
            "predicted_class": self.predicted_class.label,
            "probabilities": [float(f"{p:.9g}") for p in self.probabilities],
            "basis": [
                {"entry_id": e.entry_id, "class": e.cls.label, "distance": float(f"{e.distance:.9g}")}
                for e in self.basis
            ],
        }
        if self.true_class is not None:
            rec["true_class"] = self.true_class.label
        rec["algo"] = self.algo.label
        if self.fell_back:
            rec["note"] = "no sub-bands for this class; CAM-Full vector used"
        rec.update(self.extras)
        return rec

    def to_json(self) -> str:
        return json.dumps(self.to_record(), sort_keys=False)


def retrieve_basis(model: Model, library: HealthLibrary, spectrum, k: int = DEFAULT_TOP_K,
                   algo: Algo | str = Algo.CAM_FULL, index_map: dict | None = None,
                   *, sample_id: int | None = None, check_fingerprint: bool = True) -> PredictionBasis:
    """Top-``k`` library entries of the predicted class, nearest first.

    ``index_map`` maps each fault class to its sub-band bin indices (CAM-Sub
    only). ``spectrum`` is an EnvelopeSpectrum or an amplitude vector.
    """
    algo = Algo.parse(algo)
    if check_fingerprint:
        library.check_model(model)
    amps = np.asarray(getattr(spectrum, "amplitudes", spectrum))
    if sample_id is None:
        sample_id = getattr(spectrum, "sample_id", None)
    true_cls = getattr(spectrum, "label", None)
    pred, probs = predict(model, amps)
    cls = HealthClass(pred)
    members = library.class_members(cls)
    if not 1 <= k <= len(members):
        raise UsageError(
            f"top-k={k} but the library holds {len(members)} entries of class {cls.label}")
    if algo is Algo.CAM_SUB and index_map is None:
        raise UsageError("CAM-Sub needs sub-band indices")
    test_full = full_vectors(model, amps, cls)[0]
    query, fell_back = project(test_full, cls, algo, index_map or {})
    cands, _ = project(library.vectors[members], cls, algo, index_map or {})
    ids = library.sample_ids[members]
    order, dist = rank(query, cands, ids)
    basis = [BasisEntry(int(ids[i]), cls, float(dist[i])) for i in order[:k]]
    return PredictionBasis(
        sample_id=None if sample_id is None else int(sample_id),
        predicted_class=cls,
        probabilities=probs,
        basis=basis,
        algo=algo,
        fell_back=fell_back,
        true_class=None if true_cls is None else HealthClass(true_cls),
    )
