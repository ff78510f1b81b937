"""Grad-CAM importance at the last convolutional block.

For class ``c`` with logit ``y_c`` and last-block feature map ``A`` (K
channels by Z positions)::

    alpha_k = mean_i  d y_c / d A[k, i]
    L[i]    = sum_k alpha_k * A[k, i]

``L`` is then linearly interpolated up to the input grid. No ReLU is
applied unless asked for, so signed importance survives for comparison.
The model always runs in eval mode here, so a sample's explanation does
not depend on what else is in the batch.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .dsp import HealthClass, OrderGrid, SubBands, band_indices
from .errors import UsageError
from .nn import Model, forward, logit_grad_wrt_A


class Algo(enum.IntEnum):
    CAM_FULL = 0
    CAM_SUB = 1

    @property
    def label(self) -> str:
        return "cam-full" if self is Algo.CAM_FULL else "cam-sub"

    @classmethod
    def parse(cls, s) -> "Algo":
        if isinstance(s, Algo):
            return s
        key = str(s).strip().lower().replace("_", "-")
        for a in cls:
            if a.label == key:
                return a
        raise UsageError(f"unknown algorithm {s!r} (expected cam-full or cam-sub)")


@dataclass
class GradCamMap:
    values: np.ndarray  # (Z,)
    cls: HealthClass


@dataclass
class ActivationVector:
    values: np.ndarray
    kind: Algo
    cls: HealthClass
    # Sub requested but the class has no sub-bands, so values are the Full vector
    fell_back: bool = False


def importance_weights(grads: np.ndarray) -> np.ndarray:
    """Average gradient over positions: (..., K, Z) -> (..., K)."""
    grads = np.asarray(grads, dtype=np.float64)
    return grads.mean(axis=-1)


def gradcam_map(alpha: np.ndarray, A: np.ndarray) -> np.ndarray:
    """sum_k alpha_k A_k; alpha (..., K), A (..., K, Z) -> (..., Z)."""
    alpha = np.asarray(alpha, dtype=np.float64)
    A = np.asarray(A, dtype=np.float64)
    if alpha.shape != A.shape[:-1]:
        raise UsageError(f"alpha shape {alpha.shape} does not match map shape {A.shape}")
    return np.einsum("...k,...kz->...z", alpha, A)


def upsample_to_input(values: np.ndarray, n_bins: int) -> np.ndarray:
    """Linear interpolation from Z stride centers to ``n_bins`` points.

    Knot ``i`` sits at input position ``(i + 0.5) * s - 0.5`` with
    ``s = n_bins / Z``; values beyond the outer knots are clamped.
    """
    values = np.asarray(values, dtype=np.float64)
    z = values.shape[-1]
    if z == 0 or n_bins % z:
        raise UsageError(f"cannot upsample {z} positions to {n_bins} bins")
    s = n_bins // z
    knots = (np.arange(z) + 0.5) * s - 0.5
    pos = np.arange(n_bins, dtype=np.float64)
    if values.ndim == 1:
        return np.interp(pos, knots, values)
    flat = values.reshape(-1, z)
    out = np.stack([np.interp(pos, knots, row) for row in flat])
    return out.reshape(values.shape[:-1] + (n_bins,))


def full_vectors(model: Model, x: np.ndarray, classes, *, clamp: bool = False,
                 batch_size: int = 128) -> np.ndarray:
    """CAM-Full activation vectors, float32 (B, n_bins), one per row of ``x``.

    ``classes`` gives the class to explain for each row (or one for all).
    """
    x = np.atleast_2d(np.asarray(x))
    classes = np.broadcast_to(np.asarray(classes, dtype=np.int64), (len(x),))
    out = np.empty((len(x), model.arch.input_length), dtype=np.float32)
    for start in range(0, len(x), batch_size):
        sl = slice(start, start + batch_size)
        trace = forward(model, x[sl], mode="eval")
        grads = logit_grad_wrt_A(model, trace, classes[sl])
        cam = gradcam_map(importance_weights(grads), trace.A)
        if clamp:
            cam = np.maximum(cam, 0.0)
        out[sl] = upsample_to_input(cam, model.arch.input_length)
    return out


def class_band_indices(bands_by_class: dict, grid: OrderGrid) -> dict[HealthClass, np.ndarray]:
    return {HealthClass(c): band_indices(b, grid) for c, b in bands_by_class.items()}


def project(full: np.ndarray, cls: HealthClass, algo: Algo,
            index_map: dict[HealthClass, np.ndarray]) -> tuple[np.ndarray, bool]:
    """Restrict Full vector(s) to the class's sub-band bins under CAM-Sub.

    Returns ``(values, fell_back)``; classes without bands keep the Full
    vector under CAM-Sub.
    """
    if Algo(algo) is Algo.CAM_FULL:
        return full, False
    idx = index_map.get(HealthClass(cls))
    if idx is None:
        return full, True
    return full[..., idx], False


def activation_vector(model: Model, spectrum, cls, kind: Algo = Algo.CAM_FULL,
                      bands_by_class: dict[HealthClass, SubBands] | None = None,
                      grid: OrderGrid | None = None, *, allow_fallback: bool = False,
                      clamp: bool = False) -> ActivationVector:
    """Activation vector of one spectrum for class ``cls``.

    ``spectrum`` may be an :class:`~bearxai.dsp.EnvelopeSpectrum` or a bare
    amplitude vector. CAM-Sub for a class without sub-bands raises unless
    ``allow_fallback`` is set, in which case the Full vector is returned.
    """
    cls = HealthClass(int(cls))
    kind = Algo(kind)
    amps = getattr(spectrum, "amplitudes", spectrum)
    if grid is None:
        grid = getattr(spectrum, "grid", None) or OrderGrid(n_bins=model.arch.input_length)
    full = full_vectors(model, amps, cls, clamp=clamp)[0]
    if kind is Algo.CAM_FULL:
        return ActivationVector(full, kind, cls)
    bands = (bands_by_class or {}).get(cls)
    if bands is None:
        if not allow_fallback:
            raise UsageError(f"class {cls.label} has no sub-bands for CAM-Sub")
        return ActivationVector(full, kind, cls, fell_back=True)
    return ActivationVector(full[band_indices(bands, grid)], kind, cls)
