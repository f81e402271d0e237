"""Survival-proxy bookkeeping and the replica runner shared by both simulators."""

from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass
from statistics import NormalDist
from typing import Callable, Sequence

WORKERS_ENV = "BARRIER_BRW_WORKERS"

# Survival proxy defaults: alive after this many generations, or population cap hit.
DEFAULT_HORIZON = 200
DEFAULT_CAP = 100_000

STOP_EXTINCT = "extinct"
STOP_CAP = "cap"
STOP_HORIZON = "horizon"


def wilson_interval(successes: int, trials: int, confidence: float = 0.95) -> tuple[float, float]:
    if trials <= 0:
        raise ValueError("trials must be positive")
    z = NormalDist().inv_cdf(0.5 + confidence / 2)
    p = successes / trials
    denom = 1 + z * z / trials
    centre = (p + z * z / (2 * trials)) / denom
    half = z * math.sqrt(p * (1 - p) / trials + z * z / (4 * trials * trials)) / denom
    # The endpoints are exact at 0 and 1; rounding would otherwise leave them off by ~1e-19.
    lo = 0.0 if successes == 0 else max(0.0, centre - half)
    hi = 1.0 if successes == trials else min(1.0, centre + half)
    return lo, hi


@dataclass(frozen=True)
class SurvivalEstimate:
    lam: float
    replicas: int
    survivors: int
    horizon: int
    population_cap: int
    wilson_ci: tuple[float, float]

    @property
    def proxy_survival_fraction(self) -> float:
        return self.survivors / self.replicas

    @property
    def standard_error(self) -> float:
        p = self.proxy_survival_fraction
        return math.sqrt(p * (1 - p) / self.replicas)

    @classmethod
    def from_outcomes(cls, lam, survived: Sequence[bool], horizon, population_cap) -> "SurvivalEstimate":
        n = len(survived)
        k = int(sum(bool(s) for s in survived))
        return cls(float(lam), n, k, int(horizon), int(population_cap), wilson_interval(k, n))

    def to_dict(self) -> dict:
        d = asdict(self)
        d["lambda"] = d.pop("lam")
        d["wilson_ci"] = list(self.wilson_ci)
        d["proxy_survival_fraction"] = self.proxy_survival_fraction
        return d


def resolve_workers(workers: int | None = None, replicas: int = 1) -> int:
    """Explicit ``workers`` wins, then the environment variable, then automatic."""
    if workers is None:
        env = os.environ.get(WORKERS_ENV, "").strip()
        if env:
            workers = int(env)
        else:
            workers = (os.cpu_count() or 1) if replicas >= 64 else 1
    if workers < 1:
        raise ValueError("workers must be >= 1")
    return min(workers, max(replicas, 1))


def run_replicas(task: Callable[[int], object], replicas: int, workers: int | None = None) -> list:
    """Map ``task`` over replica indices ``0..replicas-1`` preserving order.

    ``task`` derives its own random stream from the index, so the result is the
    same for any worker count. It must be picklable when ``workers > 1``.
    """
    if replicas < 1:
        raise ValueError("replicas must be >= 1")
    n = resolve_workers(workers, replicas)
    if n == 1:
        return [task(r) for r in range(replicas)]
    chunk = max(1, replicas // (4 * n))
    with ProcessPoolExecutor(max_workers=n) as pool:
        return list(pool.map(task, range(replicas), chunksize=chunk))
