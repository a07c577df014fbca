"""Deterministic synthetic mains waveforms.

Noise comes from numpy's PCG64 bit generator. Each block of NOISE_BLOCK
frames draws from its own stream, keyed by ``SeedSequence(seed, spawn_key=(block,))``,
so the same spec yields the same samples on every platform and a long
stream rendered piecewise matches the one-shot render exactly.
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from ._pcm import code_range
from .errors import SpecError
from .ingest import ChannelBuffer, Dataset

DEFAULT_UTILIZATION = 0.85
DEFAULT_CHANNELS = ("voltage", "current")
NOISE_BLOCK = 1 << 16
WANDER_KEY = 1 << 32  # spawn key of the drift stream; noise blocks never reach it
WANDER_PERIODS_S = (17.0, 73.0, 311.0)


@dataclass
class SynthSpec:
    sampling_rate: int = 12_000
    duration: float = 1.0
    bit_depth: int = 16
    mains_freq: float = 50.0
    amplitude_utilization: float = DEFAULT_UTILIZATION
    # (order, relative amplitude, phase in radians), applied to current channels
    harmonics: list = field(default_factory=list)
    noise_lsb: float = 0.0
    # (start seconds, scale in [0, 1]) steps for current channels
    level_schedule: list = field(default_factory=list)
    # peak deviation (Hz) of a slow grid-frequency drift shared by all channels
    freq_wander_hz: float = 0.0
    seed: int = 0

    def validate(self):
        if self.bit_depth not in (16, 24):
            raise SpecError(f"bit depth must be 16 or 24, got {self.bit_depth}")
        if self.sampling_rate <= 0 or self.duration < 0:
            raise SpecError("sampling rate must be positive and duration non-negative")
        if not 0 < self.amplitude_utilization <= 1:
            raise SpecError(f"amplitude_utilization must be in (0, 1], got {self.amplitude_utilization}")
        if self.noise_lsb < 0:
            raise SpecError("noise_lsb must be non-negative")
        if not 0 <= self.freq_wander_hz < self.mains_freq:
            raise SpecError(f"freq_wander_hz must be in [0, mains_freq), got {self.freq_wander_hz}")
        for _, scale in self.level_schedule:
            if not 0 <= scale <= 1:
                raise SpecError(f"level scale {scale} outside [0, 1]")
        harm = sum(abs(a) for _, a, _ in self.harmonics)
        half = 1 << (self.bit_depth - 1)
        peak = self.amplitude_utilization * (1 + harm) + 6 * self.noise_lsb / half
        if peak > 1 + 1e-12:
            raise SpecError(f"spec can clip: worst-case peak is {peak:.4f} of full scale")
        return self

    @property
    def frames(self) -> int:
        return int(round(self.sampling_rate * self.duration))

    @classmethod
    def from_dict(cls, obj) -> "SynthSpec":
        obj = dict(obj)
        obj["harmonics"] = [tuple(h) for h in obj.get("harmonics", [])]
        obj["level_schedule"] = [tuple(s) for s in obj.get("level_schedule", [])]
        return cls(**obj)

    @classmethod
    def load(cls, path) -> "SynthSpec":
        return cls.from_dict(json.loads(Path(path).read_text()))

    def to_dict(self) -> dict:
        d = asdict(self)
        d["harmonics"] = [list(h) for h in self.harmonics]
        d["level_schedule"] = [list(s) for s in self.level_schedule]
        return d


def _level_envelope(spec, t):
    env = np.ones_like(t)
    for start, scale in sorted(spec.level_schedule):
        env[t >= start] = scale
    return env


def _noise(seed, start, n, width):
    first, last = start // NOISE_BLOCK, (start + n + NOISE_BLOCK - 1) // NOISE_BLOCK
    blocks = [
        np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(b,))))
        .standard_normal((NOISE_BLOCK, width))
        for b in range(first, max(last, first + 1))
    ]
    off = start - first * NOISE_BLOCK
    return np.concatenate(blocks)[off:off + n]


def _mains_phase(spec, t):
    """Integrated mains phase. The drift is a sum of slow sinusoids with
    seeded phases, so its integral has a closed form at any t."""
    phase = 2 * math.pi * spec.mains_freq * t
    if not spec.freq_wander_hz:
        return phase
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(spec.seed, spawn_key=(WANDER_KEY,))))
    offsets = rng.uniform(0, 2 * math.pi, len(WANDER_PERIODS_S))
    dev = spec.freq_wander_hz / len(WANDER_PERIODS_S)
    for period, phi in zip(WANDER_PERIODS_S, offsets):
        # integral of 2*pi*dev*sin(2*pi*t/period + phi) dt
        phase += dev * period * (math.cos(phi) - np.cos(2 * math.pi * t / period + phi))
    return phase


def _quantize(x, bit_depth):
    lo, hi = code_range(bit_depth)
    # half-away-from-zero, then pin the +full-scale edge (1 LSB) into range
    q = np.sign(x) * np.floor(np.abs(x) + 0.5)
    return np.clip(q, lo, hi).astype(np.int32)


def generate(spec: SynthSpec, channels=DEFAULT_CHANNELS, start_frame=0, frames=None) -> Dataset:
    """Render the named channels. Names starting with ``voltage`` are pure
    sinusoids; anything else is treated as a load current with harmonics and
    the level schedule applied. ``start_frame``/``frames`` select a window of
    the stream so long recordings can be rendered in pieces.
    """
    spec.validate()
    n = spec.frames if frames is None else frames
    t = (np.arange(n, dtype=np.float64) + start_frame) / spec.sampling_rate
    theta = _mains_phase(spec, t)
    full = float(1 << (spec.bit_depth - 1))
    amp = spec.amplitude_utilization * full

    noise = _noise(spec.seed, start_frame, n, len(channels)) * spec.noise_lsb if spec.noise_lsb else None
    env = _level_envelope(spec, t)

    out = []
    v_idx = c_idx = 0
    for k, name in enumerate(channels):
        if name.startswith("voltage"):
            phase = -2 * math.pi * v_idx / 3
            wave = np.sin(theta + phase)
            v_idx += 1
        else:
            phase = -2 * math.pi * c_idx / 3 - math.pi / 8
            wave = np.sin(theta + phase)
            for order, rel, hphase in spec.harmonics:
                wave += rel * np.sin(order * (theta + phase) + hphase)
            wave *= env
            c_idx += 1
        x = amp * wave
        if noise is not None:
            x += noise[:, k]
        out.append(ChannelBuffer(name, _quantize(x, spec.bit_depth)))
    return Dataset(out, spec.sampling_rate, spec.bit_depth, source_id=f"synth:seed={spec.seed}")


@dataclass(frozen=True)
class ShapeDiagnostic:
    channel: str
    edge_center_ratio: float
    verdict: str  # "sinusoidal", "not sinusoidal" or "degenerate"


def histogram_shape_check(dataset: Dataset, bins=20, threshold=2.0) -> list:
    """Compare occupancy of the outermost bins against the central bins.

    A sampled sinusoid follows an arcsine density, so both extremes of the
    observed span collect far more samples than the middle.
    """
    results = []
    for ch in dataset.channels:
        s = ch.samples.astype(np.int64)
        if s.size == 0 or s.max() - s.min() < bins:
            results.append(ShapeDiagnostic(ch.name, float("nan"), "degenerate"))
            continue
        counts, _ = np.histogram(s, bins=bins, range=(s.min(), s.max() + 1))
        edges = (counts[0] + counts[-1]) / 2
        mid = bins // 2
        center = (counts[mid - 1] + counts[mid]) / 2
        ratio = float("inf") if center == 0 else float(edges / center)
        verdict = "sinusoidal" if ratio > threshold else "not sinusoidal"
        results.append(ShapeDiagnostic(ch.name, ratio, verdict))
    return results
