"""Envelope order spectra and bearing fault orders.

Pipeline for one vibration record::

    |analytic(x)| -> remove mean -> Hann window -> |FFT| -> f / f_r -> grid

All functions are pure; arrays are never modified in place.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import UsageError

ORDER_MIN = 0.0
ORDER_MAX = 30.0
DEFAULT_BINS = 1536
DEFAULT_EPSILON = 0.05
# FFT length is at least this multiple of the record length (zero padding),
# so the interpolated grid resolves peak positions finer than one grid bin.
PAD_FACTOR = 4


class HealthClass(enum.IntEnum):
    HEALTHY = 0
    INNER_RACE = 1
    OUTER_RACE = 2

    @property
    def label(self) -> str:
        return self.name.lower()

    @classmethod
    def parse(cls, value) -> "HealthClass":
        if isinstance(value, str):
            key = value.strip().lower().replace("-", "_")
            for member in cls:
                if member.label == key or str(int(member)) == key:
                    return member
            raise UsageError(f"unknown health class {value!r}")
        return cls(int(value))


@dataclass(frozen=True)
class BearingGeometry:
    """Rolling-element bearing geometry.

    ``inner_diameter`` and ``outer_diameter`` are the ``d`` and ``D`` of the
    classical fault-frequency formulas (roller and pitch diameters in
    practice); only their ratio matters.
    """

    n_rollers: int = 8
    inner_diameter: float = 9.5
    outer_diameter: float = 40.0
    load_angle: float = 0.0
    shaft_freq: float = 25.0

    def __post_init__(self):
        if int(self.n_rollers) != self.n_rollers or self.n_rollers < 1:
            raise UsageError(f"n_rollers must be a positive integer, got {self.n_rollers}")
        if not 0 < self.inner_diameter < self.outer_diameter:
            raise UsageError(
                f"need 0 < d < D, got d={self.inner_diameter}, D={self.outer_diameter}"
            )
        if not self.shaft_freq > 0:
            raise UsageError(f"shaft_freq must be positive, got {self.shaft_freq}")
        if not math.isfinite(self.load_angle):
            raise UsageError("load_angle must be finite")


@dataclass(frozen=True)
class FaultOrders:
    bpfo_order: float
    bpfi_order: float

    def for_class(self, cls: HealthClass) -> float | None:
        if cls == HealthClass.OUTER_RACE:
            return self.bpfo_order
        if cls == HealthClass.INNER_RACE:
            return self.bpfi_order
        return None


@dataclass(frozen=True)
class OrderGrid:
    n_bins: int = DEFAULT_BINS
    order_min: float = ORDER_MIN
    order_max: float = ORDER_MAX

    def __post_init__(self):
        if int(self.n_bins) != self.n_bins or self.n_bins < 1:
            raise UsageError(f"n_bins must be a positive integer, got {self.n_bins}")
        if not self.order_max > self.order_min:
            raise UsageError("order_max must exceed order_min")

    @property
    def bin_width(self) -> float:
        return (self.order_max - self.order_min) / self.n_bins

    @property
    def centers(self) -> np.ndarray:
        return self.order_min + (np.arange(self.n_bins) + 0.5) * self.bin_width

    def nearest_bin(self, order: float) -> int:
        idx = int(math.floor((order - self.order_min) / self.bin_width))
        return min(max(idx, 0), self.n_bins - 1)


@dataclass
class EnvelopeSpectrum:
    amplitudes: np.ndarray
    grid: OrderGrid
    shaft_freq: float
    label: HealthClass | None = None
    sample_id: int | None = None

    def __post_init__(self):
        self.amplitudes = np.asarray(self.amplitudes)
        if self.amplitudes.shape != (self.grid.n_bins,):
            raise UsageError(
                f"amplitude length {self.amplitudes.shape} does not match grid ({self.grid.n_bins})"
            )


@dataclass(frozen=True)
class SubBands:
    """Three order intervals around a fault order and its first two harmonics."""

    bands: tuple[tuple[float, float], ...] = field(default_factory=tuple)
    fault_order: float = 0.0
    epsilon: float = 0.0

    def __iter__(self):
        return iter(self.bands)

    def __len__(self):
        return len(self.bands)


def compute_fault_orders(geom: BearingGeometry) -> FaultOrders:
    """BPFO and BPFI expressed in shaft orders (frequency divided by f_r)."""
    ratio = geom.inner_diameter / geom.outer_diameter * math.cos(geom.load_angle)
    half_n = geom.n_rollers / 2.0
    return FaultOrders(bpfo_order=half_n * (1.0 - ratio), bpfi_order=half_n * (1.0 + ratio))


def fault_frequencies(geom: BearingGeometry) -> tuple[float, float]:
    """(BPFO, BPFI) in Hz at the geometry's shaft speed."""
    orders = compute_fault_orders(geom)
    return orders.bpfo_order * geom.shaft_freq, orders.bpfi_order * geom.shaft_freq


def analytic_signal(x: np.ndarray) -> np.ndarray:
    """Discrete analytic signal by the one-sided spectrum method.

    Negative frequencies are zeroed, positive ones doubled; DC and (for even
    lengths) Nyquist keep weight 1.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1:
        raise UsageError("expected a 1-D signal")
    n = x.shape[0]
    if n < 4:
        raise UsageError(f"signal too short for a Hilbert transform (N={n}, need >= 4)")
    spec = np.fft.fft(x)
    h = np.zeros(n)
    h[0] = 1.0
    if n % 2 == 0:
        h[n // 2] = 1.0
        h[1 : n // 2] = 2.0
    else:
        h[1 : (n + 1) // 2] = 2.0
    return np.fft.ifft(spec * h)


def hilbert_envelope(x: np.ndarray) -> np.ndarray:
    return np.abs(analytic_signal(x))


def _fft_length(n: int) -> int:
    return 1 << int(math.ceil(math.log2(PAD_FACTOR * n)))


def envelope_order_spectrum(
    signal: np.ndarray,
    sample_rate: float,
    shaft_freq: float,
    grid: OrderGrid = OrderGrid(),
    *,
    label: HealthClass | None = None,
    sample_id: int | None = None,
) -> EnvelopeSpectrum:
    """Envelope spectrum of ``signal`` resampled onto ``grid`` in shaft orders.

    Amplitudes are scaled so a sinusoidal envelope component of amplitude
    ``a`` appears with height ``a`` (coherent gain of the Hann window removed).
    """
    signal = np.asarray(signal, dtype=np.float64)
    if signal.ndim != 1 or signal.shape[0] < 256:
        raise UsageError(f"need a 1-D signal of at least 256 samples, got shape {signal.shape}")
    if not shaft_freq > 0:
        raise UsageError(f"shaft_freq must be positive, got {shaft_freq}")
    if not sample_rate > 2.0 * shaft_freq * grid.order_max:
        raise UsageError(
            f"sample_rate {sample_rate} Hz cannot resolve order {grid.order_max} "
            f"at shaft speed {shaft_freq} Hz"
        )
    n = signal.shape[0]
    env = hilbert_envelope(signal)
    env = env - env.mean()
    window = np.hanning(n)
    nfft = _fft_length(n)
    mag = np.abs(np.fft.rfft(env * window, n=nfft)) * (2.0 / window.sum())
    orders = np.fft.rfftfreq(nfft, d=1.0 / sample_rate) / shaft_freq
    amps = np.interp(grid.centers, orders, mag)
    return EnvelopeSpectrum(
        amplitudes=np.maximum(amps, 0.0),
        grid=grid,
        shaft_freq=float(shaft_freq),
        label=label,
        sample_id=sample_id,
    )


def make_sub_bands(fault_order: float, epsilon: float = DEFAULT_EPSILON,
                   order_max: float = ORDER_MAX) -> SubBands:
    if not fault_order > 0:
        raise UsageError(f"fault order must be positive, got {fault_order}")
    if not 0 < epsilon <= 0.2:
        raise UsageError(f"epsilon must lie in (0, 0.2], got {epsilon}")
    if 3 * fault_order * (1 + epsilon) > order_max:
        raise UsageError(
            f"third harmonic band of order {fault_order} (eps={epsilon}) exceeds {order_max}"
        )
    bands = tuple(
        ((h + 1) * fault_order * (1 - epsilon), (h + 1) * fault_order * (1 + epsilon))
        for h in range(3)
    )
    return SubBands(bands=bands, fault_order=float(fault_order), epsilon=float(epsilon))


def band_indices(bands: SubBands, grid: OrderGrid) -> np.ndarray:
    """Sorted indices of grid bins whose centers fall inside any band (closed)."""
    centers = grid.centers
    mask = np.zeros(grid.n_bins, dtype=bool)
    for lo, hi in bands:
        if lo < grid.order_min or hi > grid.order_max:
            raise UsageError(f"band [{lo}, {hi}] lies outside the grid range")
        mask |= (centers >= lo) & (centers <= hi)
    idx = np.flatnonzero(mask)
    if idx.size == 0:
        raise UsageError("sub-bands select no grid bins; the grid is too coarse")
    return idx


def bands_for_geometry(geom: BearingGeometry, epsilon: float = DEFAULT_EPSILON,
                       order_max: float = ORDER_MAX) -> dict[HealthClass, SubBands]:
    """Sub-bands per fault class. The healthy class has none."""
    orders = compute_fault_orders(geom)
    return {
        HealthClass.INNER_RACE: make_sub_bands(orders.bpfi_order, epsilon, order_max),
        HealthClass.OUTER_RACE: make_sub_bands(orders.bpfo_order, epsilon, order_max),
    }
