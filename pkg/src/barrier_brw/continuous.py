"""Branching random walk on [-1, 1] and its coupled sandwich X ⊆ Y ⊆ Z.

Every particle of Y at position p throws a Poisson(lambda/2) point process on
[p - 1, p + 1]; only points inside [-1, 1] survive. For a refinement level m the
interval is cut into 2^(m+1) cells of length 2^-m and a particle's type is its
cell. The dominated process X keeps only offspring in a type-dependent window
inside Y's window; the dominating process Z draws its points on [p - 2, p + 2]
and keeps a type-dependent window containing Y's. Running all three off one
point realization per particle makes the inclusions hold path by path.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass

import numpy as np

from .point_process import DEFAULT_SEED, Interval, PointSet, RngStream, sample_ppp
from .survival import (
    DEFAULT_CAP,
    DEFAULT_HORIZON,
    STOP_CAP,
    STOP_EXTINCT,
    STOP_HORIZON,
    SurvivalEstimate,
    run_replicas,
)

BARRIER = Interval(-1.0, 1.0)


def _check_position(x: float) -> float:
    x = float(x)
    if not -1.0 <= x <= 1.0:
        raise ValueError(f"position {x} outside [-1, 1]")
    return x


def _check_lambda(lam: float) -> float:
    lam = float(lam)
    if not np.isfinite(lam) or lam <= 0:
        raise ValueError(f"lambda must be positive, got {lam}")
    return lam


@dataclass(frozen=True)
class Partition:
    """Dyadic partition of [-1, 1] at level m; grid points are exact binary fractions."""

    m: int

    def __post_init__(self):
        if int(self.m) != self.m or self.m < 1:
            raise ValueError(f"m must be a positive integer, got {self.m}")

    @property
    def n_types(self) -> int:
        return 2 ** (self.m + 1)

    @property
    def grid(self) -> np.ndarray:
        return -1.0 + np.arange(self.n_types + 1) / 2**self.m

    def types(self, x) -> np.ndarray:
        """1-based cell index; cells are [x_{j-1}, x_j) except the last, which is closed."""
        j = np.searchsorted(self.grid, np.asarray(x, dtype=float), side="right")
        return np.minimum(j, self.n_types)

    def windows(self, x) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        """(x_lo, x_hi, z_lo, z_hi) offspring windows for parents at ``x``.

        Parents left of 0 use [-1, x_{j-1} + 1] for X and [-1, x_j + 1] for Z;
        parents at or right of 0 use [x_j - 1, 1] and [x_{j-1} - 1, 1]. Z windows
        are clipped to the barriers.
        """
        g = self.grid
        j = self.types(x)
        left = j <= 2**self.m
        x_lo = np.where(left, -1.0, g[j] - 1.0)
        x_hi = np.where(left, g[j - 1] + 1.0, 1.0)
        z_lo = np.where(left, -1.0, np.maximum(g[j - 1] - 1.0, -1.0))
        z_hi = np.where(left, np.minimum(g[j] + 1.0, 1.0), 1.0)
        return x_lo, x_hi, z_lo, z_hi


def type_index(x: float, m: int) -> int:
    return int(Partition(m).types(_check_position(x)))


def x_window(x: float, m: int) -> Interval:
    x_lo, x_hi, _, _ = Partition(m).windows(_check_position(x))
    return Interval(float(x_lo), float(x_hi))


def z_window(x: float, m: int) -> Interval:
    _, _, z_lo, z_hi = Partition(m).windows(_check_position(x))
    return Interval(float(z_lo), float(z_hi))


@dataclass(frozen=True)
class CoupledParticle:
    position: float
    in_x: bool = True
    in_y: bool = True
    in_z: bool = True

    def __post_init__(self):
        _check_position(self.position)
        if (self.in_x and not self.in_y) or (self.in_y and not self.in_z):
            raise ValueError("flags must satisfy in_x => in_y => in_z")


def offspring_y(parent: float, lam: float, rng: RngStream) -> PointSet:
    p = _check_position(parent)
    return sample_ppp(Interval(p - 1.0, p + 1.0), _check_lambda(lam) / 2, rng).restrict(-1.0, 1.0)


def offspring_coupled(parent: CoupledParticle, m: int, lam: float, rng: RngStream) -> list[CoupledParticle]:
    if not parent.in_z:
        raise ValueError("coupled offspring need a parent carried by Z")
    p = parent.position
    points = sample_ppp(Interval(p - 2.0, p + 2.0), _check_lambda(lam) / 2, rng).positions
    x_lo, x_hi, z_lo, z_hi = (float(w) for w in Partition(m).windows(p))
    kids = []
    for c in points:
        if not -1.0 <= c <= 1.0:
            continue
        in_y = parent.in_y and p - 1.0 <= c <= p + 1.0
        in_x = parent.in_x and in_y and x_lo <= c <= x_hi
        in_z = z_lo <= c <= z_hi
        if in_z or in_y:
            kids.append(CoupledParticle(float(c), in_x, in_y, True))
    return kids


@dataclass(frozen=True)
class Generation:
    """Particles of one generation; ``in_x``/``in_y`` are None for an uncoupled run."""

    positions: np.ndarray
    in_x: np.ndarray | None = None
    in_y: np.ndarray | None = None

    def __len__(self) -> int:
        return self.positions.size

    def y(self) -> PointSet:
        return PointSet(self.positions if self.in_y is None else self.positions[self.in_y])

    def x(self) -> PointSet:
        if self.in_x is None:
            raise ValueError("uncoupled generation has no X flags")
        return PointSet(self.positions[self.in_x])

    def z(self) -> PointSet:
        if self.in_x is None:
            raise ValueError("uncoupled generation has no Z carrier")
        return PointSet(self.positions)


@dataclass(frozen=True)
class Trajectory:
    generations: list[Generation]
    stop_reason: str
    violations: int = 0

    def __len__(self) -> int:
        return len(self.generations)


def _root(lam, gen):
    # Generation 1 is a plain Y step from the origin; all three processes share it.
    n = gen.poisson(lam)
    pos = gen.uniform(-1.0, 1.0, size=n)
    flags = np.ones(n, dtype=bool)
    return pos, flags, flags.copy()


def _y_step(pos, lam, gen):
    counts = gen.poisson(lam, size=pos.size)
    kids = np.repeat(pos, counts) + gen.uniform(-1.0, 1.0, size=counts.sum())
    return kids[(kids >= -1.0) & (kids <= 1.0)]


def _coupled_step(pos, fx, fy, part: Partition, lam, gen):
    """One generation of the coupled triple; returns new arrays and a violation count."""
    counts = gen.poisson(2.0 * lam, size=pos.size)
    parent = np.repeat(np.arange(pos.size), counts)
    p = pos[parent]
    c = p + gen.uniform(-2.0, 2.0, size=parent.size)
    # Windows depend only on the parent's type: look them up per type.
    table = part.windows(part.grid[:-1])
    jp = part.types(pos)[parent] - 1
    x_lo, x_hi, z_lo, z_hi = (w[jp] for w in table)
    inside = (c >= -1.0) & (c <= 1.0)
    in_z = inside & (c >= z_lo) & (c <= z_hi)
    in_y_window = inside & (c >= p - 1.0) & (c <= p + 1.0)
    in_x_window = inside & (c >= x_lo) & (c <= x_hi)
    in_y = in_y_window & fy[parent]
    in_x = in_y & in_x_window & fx[parent]
    # Window geometry must give X ⊆ Y ⊆ Z; anything else is a coupling defect.
    violations = int(np.count_nonzero(in_y & ~in_z))
    violations += int(np.count_nonzero(in_x_window & ~in_y_window))
    keep = in_z | in_y
    return c[keep], in_x[keep], in_y[keep], violations


def _simulate(lam, horizon, population_cap, rng: RngStream, m=None, keep=False):
    lam = _check_lambda(lam)
    if horizon < 1 or population_cap < 1:
        raise ValueError("horizon and population_cap must be >= 1")
    gen = rng.generator
    part = Partition(m) if m is not None else None
    coupled = part is not None
    history = []

    def record(pos, fx, fy):
        if keep:
            order = np.argsort(pos, kind="stable")
            history.append(Generation(pos[order], fx[order], fy[order]) if coupled else Generation(pos[order]))

    pos = np.zeros(1)
    fx = fy = np.ones(1, dtype=bool)
    record(pos, fx, fy)
    violations = 0
    stop, n = STOP_HORIZON, 0
    for n in range(1, horizon + 1):
        if n == 1:
            pos, fx, fy = _root(lam, gen)
        elif coupled:
            pos, fx, fy, v = _coupled_step(pos, fx, fy, part, lam, gen)
            violations += v
        else:
            pos = _y_step(pos, lam, gen)
            fx = fy = np.ones(pos.size, dtype=bool)
        if pos.size == 0:
            stop, n = STOP_EXTINCT, n - 1
            break
        if coupled:
            violations += int(np.count_nonzero(fx & ~fy))
            violations += int(np.count_nonzero((pos < -1.0) | (pos > 1.0)))
        record(pos, fx, fy)
        if pos.size >= population_cap:
            stop = STOP_CAP
            break
    if stop == STOP_EXTINCT:
        pos = np.empty(0)
        fx = fy = np.zeros(0, dtype=bool)
    return stop, n, pos, fx, fy, violations, history


def evolve(
    lam: float,
    horizon: int,
    population_cap: int,
    rng: RngStream,
    m: int | None = None,
) -> Trajectory:
    """Run Y alone (``m=None``) or the coupled triple at level m from one particle at 0.

    Stops on extinction, at ``horizon`` generations, or once the carrier
    population reaches ``population_cap``.
    """
    stop, _, _, _, _, violations, history = _simulate(lam, horizon, population_cap, rng, m, keep=True)
    return Trajectory(history, stop, violations)


@dataclass(frozen=True)
class ReplicaOutcome:
    replica: int
    stop_reason: str
    generations: int
    size_x: int | None
    size_y: int
    size_z: int | None
    violations: int = 0

    def survived(self, process: str = "y") -> bool:
        size = {"x": self.size_x, "y": self.size_y, "z": self.size_z}[process]
        return self.stop_reason != STOP_EXTINCT and bool(size)

    def to_dict(self) -> dict:
        return {
            "replica": self.replica,
            "stop_reason": self.stop_reason,
            "generations": self.generations,
            "size_x": self.size_x,
            "size_y": self.size_y,
            "size_z": self.size_z,
            "violations": self.violations,
        }


def _replica(r, *, lam, horizon, population_cap, master_seed, m):
    experiment = "continuous-y" if m is None else "continuous-coupled"
    rng = RngStream.for_replica(master_seed, experiment, r)
    stop, n, pos, fx, fy, violations, _ = _simulate(lam, horizon, population_cap, rng, m)
    if m is None:
        return ReplicaOutcome(r, stop, n, None, int(pos.size), None)
    return ReplicaOutcome(r, stop, n, int(fx.sum()), int(fy.sum()), int(pos.size), violations)


def run_continuous(
    lam: float,
    replicas: int,
    horizon: int = DEFAULT_HORIZON,
    population_cap: int = DEFAULT_CAP,
    seed: int = DEFAULT_SEED,
    m: int | None = None,
    workers: int | None = None,
) -> list[ReplicaOutcome]:
    task = functools.partial(
        _replica, lam=_check_lambda(lam), horizon=horizon, population_cap=population_cap, master_seed=seed, m=m
    )
    return run_replicas(task, replicas, workers)


def estimate_survival(
    lam: float,
    replicas: int,
    horizon: int = DEFAULT_HORIZON,
    population_cap: int = DEFAULT_CAP,
    seed: int = DEFAULT_SEED,
    workers: int | None = None,
) -> SurvivalEstimate:
    """Fraction of Y replicas alive at ``horizon`` or stopped by the population cap."""
    outcomes = run_continuous(lam, replicas, horizon, population_cap, seed, None, workers)
    return SurvivalEstimate.from_outcomes(lam, [o.survived() for o in outcomes], horizon, population_cap)


def estimate_coupled(
    lam: float,
    m: int,
    replicas: int,
    horizon: int = DEFAULT_HORIZON,
    population_cap: int = DEFAULT_CAP,
    seed: int = DEFAULT_SEED,
    workers: int | None = None,
) -> tuple[dict[str, SurvivalEstimate], int, list[ReplicaOutcome]]:
    """Survival proxies of X, Y and Z from one coupled run, plus total invariant violations."""
    outcomes = run_continuous(lam, replicas, horizon, population_cap, seed, m, workers)
    estimates = {
        proc: SurvivalEstimate.from_outcomes(lam, [o.survived(proc) for o in outcomes], horizon, population_cap)
        for proc in "xyz"
    }
    return estimates, sum(o.violations for o in outcomes), outcomes


def empirical_mean_matrix(
    kind: str,
    m: int,
    lam: float,
    replicas_per_type: int,
    rng: RngStream,
    return_stderr: bool = False,
):
    """Monte Carlo mean offspring matrix of X or Z by parent type and child type.

    Each replica drops a parent uniformly in cell i and runs one reproduction
    event under the chosen process's window rule.
    """
    kind = kind.upper()
    if kind not in ("X", "Z"):
        raise ValueError(f"kind must be 'X' or 'Z', got {kind!r}")
    lam = _check_lambda(lam)
    part = Partition(m)
    n_types, g, gen = part.n_types, part.grid, rng.generator
    n = int(replicas_per_type)
    half_width = 1.0 if kind == "X" else 2.0
    mean = np.zeros((n_types, n_types))
    stderr = np.zeros((n_types, n_types))
    for i in range(1, n_types + 1):
        parents = gen.uniform(g[i - 1], g[i], size=n)
        counts = gen.poisson(lam * half_width, size=n)
        owner = np.repeat(np.arange(n), counts)
        c = parents[owner] + gen.uniform(-half_width, half_width, size=owner.size)
        x_lo, x_hi, z_lo, z_hi = (w[owner] for w in part.windows(parents))
        lo, hi = (x_lo, x_hi) if kind == "X" else (z_lo, z_hi)
        ok = (c >= -1.0) & (c <= 1.0) & (c >= lo) & (c <= hi)
        tally = np.zeros((n, n_types))
        np.add.at(tally, (owner[ok], part.types(c[ok]) - 1), 1.0)
        mean[i - 1] = tally.mean(axis=0)
        stderr[i - 1] = tally.std(axis=0, ddof=1) / np.sqrt(n)
    return (mean, stderr) if return_stderr else mean
