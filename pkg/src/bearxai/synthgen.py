"""Synthetic rolling-element bearing vibration records.

A localized race defect is modelled as a train of impacts at the fault
rate, each exciting one structural resonance::

    h(t) = exp(-damping * t) * sin(2 pi f_res t)

Inner-race impacts are additionally amplitude-modulated at the shaft rate
because the defect rotates through the load zone. Healthy records carry
Gaussian noise and a weak shaft-order tone only.

Randomness: every sample draws from its own Philox-4x64 stream (numpy's
counter-based generator, 10 rounds, Random123 constants) keyed by
``SeedSequence(seed, spawn_key=(class, index))``. Sample ``i`` of a class
is therefore the same whatever the per-class counts are.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .dsp import BearingGeometry, HealthClass, compute_fault_orders
from .errors import UsageError


@dataclass(frozen=True)
class SynthConfig:
    geometry: BearingGeometry = field(default_factory=BearingGeometry)
    # healthy, inner_race, outer_race
    class_counts: tuple[int, int, int] = (250, 250, 250)
    signal_len: int = 6400
    sample_rate: float = 6400.0
    resonance_freq: float = 1800.0
    resonance_damping: float = 600.0
    impulse_amplitude: float = 1.0
    noise_std: float = 0.3
    jitter_std: float = 0.01
    # per-sample spread of operating conditions
    speed_spread: float = 0.05
    severity_spread: float = 0.4
    shaft_tone: float = 0.1
    seed: int = 42

    def __post_init__(self):
        if self.signal_len < 1024:
            raise UsageError(f"signal_len must be >= 1024, got {self.signal_len}")
        if self.noise_std < 0:
            raise UsageError("noise_std must be non-negative")
        if not 0 <= self.jitter_std <= 0.05:
            raise UsageError(f"jitter_std must lie in [0, 0.05], got {self.jitter_std}")
        if not 0 < self.resonance_freq < self.sample_rate / 2:
            raise UsageError("resonance_freq must lie below the Nyquist frequency")
        if self.resonance_damping <= 0:
            raise UsageError("resonance_damping must be positive")
        if not 0 <= self.speed_spread < 0.5:
            raise UsageError("speed_spread must lie in [0, 0.5)")
        if self.severity_spread < 0:
            raise UsageError("severity_spread must be non-negative")
        if len(self.class_counts) != len(HealthClass):
            raise UsageError(f"class_counts needs {len(HealthClass)} entries")
        if any(int(c) != c or c < 0 for c in self.class_counts):
            raise UsageError("class_counts must be non-negative integers")
        if self.seed < 0:
            raise UsageError("seed must be non-negative")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["class_counts"] = list(self.class_counts)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "SynthConfig":
        d = dict(d)
        if "geometry" in d and isinstance(d["geometry"], dict):
            d["geometry"] = BearingGeometry(**d["geometry"])
        if "class_counts" in d:
            d["class_counts"] = tuple(int(c) for c in d["class_counts"])
        return cls(**d)


@dataclass
class TimeSample:
    signal: np.ndarray
    label: HealthClass
    shaft_freq: float
    sample_id: int


def sample_rng(seed: int, cls: HealthClass, index: int) -> np.random.Generator:
    ss = np.random.SeedSequence(seed, spawn_key=(int(cls), int(index)))
    return np.random.Generator(np.random.Philox(ss))


def _impulse_train(rate: float, duration: float, jitter: float, rng) -> np.ndarray:
    period = 1.0 / rate
    n = int(math.ceil(duration * rate)) + 1
    phase = rng.uniform(0.0, period)
    times = phase + period * np.arange(n) + rng.normal(0.0, jitter * period, size=n)
    return times[(times >= 0) & (times < duration)]


def _render_impacts(times, weights, cfg: SynthConfig) -> np.ndarray:
    fs = cfg.sample_rate
    t = np.arange(cfg.signal_len) / fs
    out = np.zeros(cfg.signal_len)
    # response truncated once it decays below 1e-6
    span = int(math.ceil(fs * math.log(1e6) / cfg.resonance_damping))
    for t0, w in zip(times, weights):
        i0 = int(math.ceil(t0 * fs))
        i1 = min(cfg.signal_len, i0 + span)
        if i0 >= cfg.signal_len:
            continue
        tau = t[i0:i1] - t0
        out[i0:i1] += w * np.exp(-cfg.resonance_damping * tau) * np.sin(
            2 * math.pi * cfg.resonance_freq * tau)
    return out


def generate_sample(cls: HealthClass, cfg: SynthConfig, rng: np.random.Generator):
    """One vibration record and the shaft speed it was recorded at."""
    cls = HealthClass(cls)
    fr = cfg.geometry.shaft_freq * (1.0 + rng.uniform(-cfg.speed_spread, cfg.speed_spread))
    duration = cfg.signal_len / cfg.sample_rate
    t = np.arange(cfg.signal_len) / cfg.sample_rate
    orders = compute_fault_orders(cfg.geometry)
    severity = cfg.impulse_amplitude * math.exp(cfg.severity_spread * rng.normal())

    x = cfg.shaft_tone * np.sin(2 * math.pi * fr * t + rng.uniform(0, 2 * math.pi))
    if cls == HealthClass.OUTER_RACE:
        times = _impulse_train(orders.bpfo_order * fr, duration, cfg.jitter_std, rng)
        x = x + _render_impacts(times, np.full(times.shape, severity), cfg)
    elif cls == HealthClass.INNER_RACE:
        times = _impulse_train(orders.bpfi_order * fr, duration, cfg.jitter_std, rng)
        load_phase = rng.uniform(0, 2 * math.pi)
        weights = severity * (1.0 + 0.5 * np.cos(2 * math.pi * fr * times + load_phase))
        x = x + _render_impacts(times, weights, cfg)
    x = x + rng.normal(0.0, cfg.noise_std, size=cfg.signal_len)
    return x, fr


def generate_dataset(cfg: SynthConfig) -> list[TimeSample]:
    """All samples, class-major. Sample ids run 0..N-1 in that order."""
    out = []
    for cls in HealthClass:
        for i in range(cfg.class_counts[int(cls)]):
            x, fr = generate_sample(cls, cfg, sample_rng(cfg.seed, cls, i))
            out.append(TimeSample(signal=x, label=cls, shaft_freq=fr, sample_id=len(out)))
    return out
