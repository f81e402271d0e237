"""Discrete-space branching random walk on the integers, with optional barriers at ±L.

A particle at site s has independent Poisson(lambda/3) children at each of
s - 1, s and s + 1. With barriers, children landing outside [-L, L] are lost
and the mean matrix is (lambda/3) T_{2L+1,2}, whose spectrum is explicit.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass

import numpy as np

from .point_process import DEFAULT_SEED, RngStream
from .spectral import BandedToeplitz, perron
from .survival import (
    DEFAULT_CAP,
    DEFAULT_HORIZON,
    STOP_CAP,
    STOP_EXTINCT,
    STOP_HORIZON,
    SurvivalEstimate,
    run_replicas,
)

# float(3**n) overflows near n = 646; switch to logs well before that.
_LOG_SPACE_MIN_N = 600


@dataclass(frozen=True)
class TrinomialRow:
    n: int
    entries: tuple[int, ...]

    def __getitem__(self, k: int) -> int:
        """Entry at offset k in -n..n; zero outside the row."""
        if abs(k) > self.n:
            return 0
        return self.entries[k + self.n]


@functools.lru_cache(maxsize=256)
def _row(n: int) -> tuple[int, ...]:
    row = [1]
    for _ in range(n):
        padded = [0, 0] + row + [0, 0]
        row = [padded[i] + padded[i + 1] + padded[i + 2] for i in range(len(row) + 2)]
    return tuple(row)


def trinomial_row(n: int) -> TrinomialRow:
    """Row n of the trinomial triangle: coefficients of (1 + x + x^2)^n, exact."""
    if int(n) != n or n < 0:
        raise ValueError(f"n must be a non-negative integer, got {n}")
    return TrinomialRow(int(n), _row(int(n)))


def expected_count(n: int, k: int, lam: float) -> float:
    """Mean number of particles at site k in generation n without barriers."""
    if lam <= 0:
        raise ValueError("lambda must be positive")
    if abs(k) > n:
        return 0.0
    coef = trinomial_row(n)[k]
    if n < _LOG_SPACE_MIN_N:
        return (lam / 3) ** n * coef
    return math.exp(n * math.log(lam / 3) + math.log(coef))


def expected_profile(n: int, lam: float) -> np.ndarray:
    """Mean occupancy over sites -n..n."""
    return np.array([expected_count(n, k, lam) for k in range(-n, n + 1)])


@dataclass(frozen=True)
class OccupancyVector:
    """Particle counts per site; the last axis runs over sites, leading axes batch replicas.

    Bounded vectors (``L`` set) always span -L..L. Unbounded ones span
    -radius..radius and grow by one site per side each step.
    """

    counts: np.ndarray
    L: int | None = None

    def __post_init__(self):
        c = np.asarray(self.counts, dtype=np.int64)
        if c.shape[-1] % 2 != 1:
            raise ValueError("site axis must have odd length (centred on 0)")
        if np.any(c < 0):
            raise ValueError("counts must be non-negative")
        if self.L is not None and c.shape[-1] != 2 * self.L + 1:
            raise ValueError(f"bounded vector needs {2 * self.L + 1} sites")
        object.__setattr__(self, "counts", c)

    @classmethod
    def single(cls, L: int | None = None, site: int = 0, batch: tuple[int, ...] = ()) -> "OccupancyVector":
        radius = L if L is not None else abs(site)
        if abs(site) > radius:
            raise ValueError("site outside barriers")
        c = np.zeros(batch + (2 * radius + 1,), dtype=np.int64)
        c[..., site + radius] = 1
        return cls(c, L)

    @property
    def radius(self) -> int:
        return self.counts.shape[-1] // 2

    @property
    def sites(self) -> np.ndarray:
        return np.arange(-self.radius, self.radius + 1)

    def total(self):
        return self.counts.sum(axis=-1)

    def at(self, k: int):
        if abs(k) > self.radius:
            return np.zeros(self.counts.shape[:-1], dtype=np.int64) if self.counts.ndim > 1 else 0
        return self.counts[..., k + self.radius]


def step_discrete(state: OccupancyVector, lam: float, rng: RngStream) -> OccupancyVector:
    """One generation, sampling Poisson((lambda/3) W(s)) per (source, target) pair."""
    if lam <= 0:
        raise ValueError("lambda must be positive")
    gen = rng.generator
    w = state.counts
    mean = (lam / 3.0) * w
    left, stay, right = (gen.poisson(mean) for _ in range(3))
    shape = w.shape[:-1] + (w.shape[-1] + 2,)
    nxt = np.zeros(shape, dtype=np.int64)
    nxt[..., :-2] += left
    nxt[..., 1:-1] += stay
    nxt[..., 2:] += right
    if state.L is not None:
        nxt = nxt[..., 1:-1]
    return OccupancyVector(nxt, state.L)


@dataclass(frozen=True)
class DiscreteCritical:
    L: int
    lambda_c: float
    printed_formula: float
    eigenvalues: np.ndarray
    perron_vector: np.ndarray


def _check_L(L) -> int:
    if int(L) != L or L < 1:
        raise ValueError(f"L must be a positive integer, got {L}")
    return int(L)


def exact_critical(L: int) -> float:
    """3 / (1 + 2 cos(pi / (2L + 2))): lambda at which (lambda/3) T_{2L+1,2} has Perron root 1."""
    L = _check_L(L)
    return 3.0 / (1.0 + 2.0 * math.cos(math.pi / (2 * L + 2)))


def exact_critical_diagnostics(L: int, validate: bool = False, tolerance: float = 1e-9) -> DiscreteCritical:
    """Critical value with the full tridiagonal spectrum and Perron vector.

    ``printed_formula`` is 3 / (1 + 2 cos(pi / (L + 1))), which disagrees with the
    spectrum (it gives 3 at L = 1). With ``validate`` the value is checked
    against a numeric Perron root of T_{2L+1,2}.
    """
    L = _check_L(L)
    k = 2 * L + 1
    idx = np.arange(1, k + 1)
    eigenvalues = 1.0 + 2.0 * np.cos(idx * np.pi / (2 * L + 2))
    vec = np.sin(idx * np.pi / (2 * L + 2))
    value = exact_critical(L)
    if validate:
        numeric = 3.0 / perron(BandedToeplitz(k, 2), tolerance=1e-12).rho
        if abs(numeric - value) > tolerance:
            raise AssertionError(f"closed form {value} disagrees with numeric {numeric} at L={L}")
    printed = 3.0 / (1.0 + 2.0 * math.cos(math.pi / (L + 1)))
    return DiscreteCritical(L, value, printed, eigenvalues, vec / np.linalg.norm(vec))


def phase_diagram(L_max: int) -> list[tuple[int, float]]:
    L_max = _check_L(L_max)
    return [(L, exact_critical(L)) for L in range(1, L_max + 1)]


@dataclass(frozen=True)
class DiscreteOutcome:
    replica: int
    stop_reason: str
    generations: int
    final_total: int

    @property
    def survived(self) -> bool:
        return self.stop_reason != STOP_EXTINCT

    def to_dict(self) -> dict:
        return {
            "replica": self.replica,
            "stop_reason": self.stop_reason,
            "generations": self.generations,
            "final_total": self.final_total,
        }


def _replica(r, *, lam, L, horizon, population_cap, master_seed):
    rng = RngStream.for_replica(master_seed, "discrete", r)
    state = OccupancyVector.single(L)
    for n in range(1, horizon + 1):
        state = step_discrete(state, lam, rng)
        total = int(state.total())
        if total == 0:
            return DiscreteOutcome(r, STOP_EXTINCT, n - 1, 0)
        if total >= population_cap:
            return DiscreteOutcome(r, STOP_CAP, n, total)
    return DiscreteOutcome(r, STOP_HORIZON, horizon, total)


def run_discrete(
    lam: float,
    L: int | None,
    replicas: int,
    horizon: int = DEFAULT_HORIZON,
    population_cap: int = DEFAULT_CAP,
    seed: int = DEFAULT_SEED,
    workers: int | None = None,
) -> list[DiscreteOutcome]:
    if lam <= 0:
        raise ValueError("lambda must be positive")
    if horizon < 1 or population_cap < 1:
        raise ValueError("horizon and population_cap must be >= 1")
    task = functools.partial(
        _replica, lam=float(lam), L=None if L is None else _check_L(L), horizon=horizon,
        population_cap=population_cap, master_seed=seed,
    )
    return run_replicas(task, replicas, workers)


def estimate_discrete_survival(
    lam: float,
    L: int | None,
    replicas: int,
    horizon: int = DEFAULT_HORIZON,
    population_cap: int = DEFAULT_CAP,
    seed: int = DEFAULT_SEED,
    workers: int | None = None,
) -> SurvivalEstimate:
    outcomes = run_discrete(lam, L, replicas, horizon, population_cap, seed, workers)
    return SurvivalEstimate.from_outcomes(lam, [o.survived for o in outcomes], horizon, population_cap)
