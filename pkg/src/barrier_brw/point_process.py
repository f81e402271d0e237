"""Seeded sampling primitives: Poisson counts and homogeneous Poisson point processes."""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field
from typing import Iterator

import numpy as np

DEFAULT_SEED = 20190611

_MASK64 = (1 << 64) - 1


def stream_id_for(experiment: str, replica: int) -> int:
    """Stable 64-bit stream id for replica ``replica`` of ``experiment``."""
    digest = hashlib.blake2b(f"{experiment}:{replica}".encode(), digest_size=8).digest()
    return int.from_bytes(digest, "little")


class RngStream:
    """Independent random stream keyed by ``(master_seed, stream_id)``.

    Equal keys give identical sequences. Each stream carries mutable generator
    state, so one stream must not be shared by concurrent callers.
    """

    def __init__(self, master_seed: int = DEFAULT_SEED, stream_id: int = 0):
        if not 0 <= master_seed <= _MASK64 or not 0 <= stream_id <= _MASK64:
            raise ValueError("master_seed and stream_id must be 64-bit unsigned integers")
        self.master_seed = int(master_seed)
        self.stream_id = int(stream_id)
        seq = np.random.SeedSequence(self.master_seed, spawn_key=(self.stream_id,))
        self.generator = np.random.Generator(np.random.PCG64(seq))

    @classmethod
    def for_replica(cls, master_seed: int, experiment: str, replica: int) -> "RngStream":
        return cls(master_seed, stream_id_for(experiment, replica))

    def __repr__(self) -> str:
        return f"RngStream(master_seed={self.master_seed}, stream_id={self.stream_id})"


@dataclass(frozen=True)
class Interval:
    lo: float
    hi: float

    def __post_init__(self):
        if not (math.isfinite(self.lo) and math.isfinite(self.hi)):
            raise ValueError("interval endpoints must be finite")
        if self.lo > self.hi:
            raise ValueError(f"empty interval: lo={self.lo} > hi={self.hi}")

    @property
    def length(self) -> float:
        return self.hi - self.lo

    def intersect(self, other: "Interval") -> "Interval | None":
        lo, hi = max(self.lo, other.lo), min(self.hi, other.hi)
        return Interval(lo, hi) if lo <= hi else None

    def __contains__(self, x: float) -> bool:
        return self.lo <= x <= self.hi


@dataclass(frozen=True)
class PointSet:
    """Sorted multiset of real positions."""

    positions: np.ndarray = field(default_factory=lambda: np.empty(0))

    def __post_init__(self):
        pts = np.sort(np.asarray(self.positions, dtype=float).ravel())
        pts.flags.writeable = False
        object.__setattr__(self, "positions", pts)

    def __len__(self) -> int:
        return self.positions.size

    def __iter__(self) -> Iterator[float]:
        return iter(self.positions.tolist())

    def restrict(self, lo: float, hi: float) -> "PointSet":
        """Points lying in the closed interval [lo, hi]."""
        a = np.searchsorted(self.positions, lo, side="left")
        b = np.searchsorted(self.positions, hi, side="right")
        return PointSet(self.positions[a:b])

    def union(self, other: "PointSet") -> "PointSet":
        return PointSet(np.concatenate([self.positions, other.positions]))


def _check_mean(mean: float) -> float:
    mean = float(mean)
    if not math.isfinite(mean) or mean < 0:
        raise ValueError(f"Poisson mean must be finite and non-negative, got {mean}")
    return mean


def sample_poisson(mean: float, rng: RngStream, size: int | None = None):
    """One Poisson draw, or an array of ``size`` i.i.d. draws."""
    mean = _check_mean(mean)
    if size is not None:
        return rng.generator.poisson(mean, size=size)
    if mean == 0.0:
        return 0
    return int(rng.generator.poisson(mean))


def sample_ppp(interval: Interval, intensity: float, rng: RngStream) -> PointSet:
    """Homogeneous Poisson point process with rate ``intensity`` on ``interval``."""
    intensity = float(intensity)
    if not math.isfinite(intensity) or intensity <= 0:
        raise ValueError(f"intensity must be positive and finite, got {intensity}")
    if interval.length == 0.0:
        return PointSet()
    count = rng.generator.poisson(intensity * interval.length)
    return PointSet(rng.generator.uniform(interval.lo, interval.hi, size=count))
