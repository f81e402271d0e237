"""Banded 0-1 Toeplitz matrices, their Perron roots, and critical-value bounds.

``T_{k,d}`` is the k-by-k symmetric matrix with entry 1 where ``|i - j| <= d - 1``
and 0 elsewhere. It is never stored densely on the fast path: products are
window sums over a prefix-sum array, so one matvec costs O(k) regardless of d.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_banded

DEFAULT_TOL = 1e-10
DEFAULT_MAX_ITER = 100_000

# Beyond this length the prefix array is built blockwise to bound rounding growth.
_BLOCKED_PREFIX_MIN = 1 << 16
_PREFIX_BLOCK = 1024
# Largest k for which the dense eigensolver oracle is used without complaint.
DENSE_ORACLE_MAX_K = 64


class ConvergenceError(RuntimeError):
    """Power iteration hit ``max_iterations``; ``last`` holds the final iterate."""

    def __init__(self, message: str, last: "PerronResult"):
        super().__init__(message)
        self.last = last


@dataclass(frozen=True)
class BandedToeplitz:
    k: int
    d: int

    def __post_init__(self):
        if int(self.k) != self.k or int(self.d) != self.d:
            raise TypeError("k and d must be integers")
        if not 1 <= self.d <= self.k:
            raise ValueError(f"need 1 <= d <= k, got k={self.k}, d={self.d}")

    def __matmul__(self, v):
        return matvec(self, v)

    def todense(self) -> np.ndarray:
        idx = np.arange(self.k)
        return (np.abs(idx[:, None] - idx[None, :]) <= self.d - 1).astype(float)

    def row_sums(self) -> np.ndarray:
        i = np.arange(self.k)
        return (np.minimum(i + self.d - 1, self.k - 1) - np.maximum(i - self.d + 1, 0) + 1).astype(float)


@dataclass(frozen=True)
class PerronResult:
    rho: float
    vector: np.ndarray
    iterations: int
    residual: float


@dataclass(frozen=True)
class BoundsRow:
    m: int
    lambda_x: float
    lambda_z: float

    @property
    def gap(self) -> float:
        return self.lambda_x - self.lambda_z

    @property
    def log_gap(self) -> float:
        return math.log(self.gap) if self.gap > 0 else -math.inf


@dataclass(frozen=True)
class CourantFischerResult:
    m: int
    rho_x: float
    rho_z: float
    tolerance: float

    @property
    def difference(self) -> float:
        return self.rho_z - self.rho_x

    @property
    def holds(self) -> bool:
        return self.difference <= 1.0 + self.tolerance

    def __bool__(self) -> bool:
        return self.holds


def _prefix_sums(v: np.ndarray) -> np.ndarray:
    """Prefix sums S with S[0] = 0 and S[i] = v[0] + ... + v[i-1], in extended precision."""
    k = v.size
    x = v.astype(np.longdouble)
    out = np.zeros(k + 1, dtype=np.longdouble)
    if k < _BLOCKED_PREFIX_MIN:
        np.cumsum(x, out=out[1:])
        return out
    # Two-level scan: rounding grows with block length + block count, not with k.
    nblocks = -(-k // _PREFIX_BLOCK)
    padded = np.zeros(nblocks * _PREFIX_BLOCK, dtype=np.longdouble)
    padded[:k] = x
    blocks = padded.reshape(nblocks, _PREFIX_BLOCK)
    inner = np.cumsum(blocks, axis=1)
    offsets = np.concatenate([[0], np.cumsum(inner[:, -1])[:-1]]).astype(np.longdouble)
    out[1:] = (inner + offsets[:, None]).ravel()[:k]
    return out


def matvec(T: BandedToeplitz, v) -> np.ndarray:
    """``T @ v`` in O(k) via window differences of a prefix-sum array."""
    v = np.asarray(v, dtype=float)
    if v.ndim != 1 or v.size != T.k:
        raise ValueError(f"vector of length {T.k} expected, got shape {v.shape}")
    S = _prefix_sums(v)
    i = np.arange(T.k)
    hi = np.minimum(i + T.d, T.k)
    lo = np.maximum(i - T.d + 1, 0)
    return (S[hi] - S[lo]).astype(float)


def dense_spectrum(T: BandedToeplitz, allow_large: bool = False) -> np.ndarray:
    """All eigenvalues (ascending) from a dense symmetric eigensolve. Test oracle only."""
    if T.k > DENSE_ORACLE_MAX_K and not allow_large:
        raise ValueError(f"dense oracle limited to k <= {DENSE_ORACLE_MAX_K}")
    return np.linalg.eigvalsh(T.todense())


def _power(T: BandedToeplitz, tol: float, max_iter: int) -> PerronResult:
    v = np.full(T.k, 1.0 / math.sqrt(T.k))
    rq_prev = math.nan
    rq, residual = math.nan, math.inf
    for it in range(1, max_iter + 1):
        w = matvec(T, v)
        rq = float(v @ w)
        residual = float(np.max(np.abs(w - rq * v)))
        if abs(rq - rq_prev) < tol and residual <= tol:
            return PerronResult(rq, v, it, residual)
        rq_prev = rq
        v = w / np.linalg.norm(w)
    raise ConvergenceError(
        f"power iteration on T_{{{T.k},{T.d}}} did not converge in {max_iter} iterations "
        f"(residual {residual:.3e})",
        PerronResult(rq, v, max_iter, residual),
    )


def _count_below(sigma: float, k: int) -> int:
    # Sturm count for the tridiagonal matrix with unit diagonal and off-diagonals.
    count = 0
    q = 1.0 - sigma
    if q < 0:
        count += 1
    for _ in range(k - 1):
        if q == 0.0:
            q = 1e-300
        q = (1.0 - sigma) - 1.0 / q
        if q < 0:
            count += 1
    return count


def _tridiagonal(T: BandedToeplitz, tol: float, max_iter: int) -> PerronResult:
    k = T.k
    lo, hi = 0.5, 3.5
    steps = 0
    while hi - lo > 4 * np.finfo(float).eps * hi and steps < 200:
        mid = 0.5 * (lo + hi)
        if _count_below(mid, k) == k:
            hi = mid
        else:
            lo = mid
        steps += 1
    # Inverse iteration just above the bracketed root.
    ab = np.zeros((3, k))
    ab[0, 1:] = 1.0
    ab[1, :] = 1.0 - hi
    ab[2, :-1] = 1.0
    v = np.full(k, 1.0 / math.sqrt(k))
    rq, residual = math.nan, math.inf
    for it in range(1, min(max_iter, 8) + 1):
        try:
            v = solve_banded((1, 1), ab, v)
        except np.linalg.LinAlgError:
            ab[1, :] -= 4 * np.finfo(float).eps * hi
            continue
        v /= np.linalg.norm(v)
        if v[np.argmax(np.abs(v))] < 0:
            v = -v
        w = matvec(T, v)
        rq = float(v @ w)
        residual = float(np.max(np.abs(w - rq * v)))
        if residual <= tol:
            return PerronResult(rq, v, steps + it, residual)
    raise ConvergenceError(
        f"inverse iteration on T_{{{k},2}} stalled (residual {residual:.3e})",
        PerronResult(rq, v, steps, residual),
    )


def perron(
    T: BandedToeplitz,
    tolerance: float = DEFAULT_TOL,
    max_iterations: int = DEFAULT_MAX_ITER,
    method: str = "auto",
) -> PerronResult:
    """Perron root and unit positive eigenvector of ``T``.

    ``method="power"`` runs power iteration from the all-ones vector and stops once
    successive Rayleigh quotients differ by less than ``tolerance`` and the
    max-norm residual is at most ``tolerance``.

    Tridiagonal matrices (d = 2) have a gap that closes like 1/k**2, which makes
    power iteration hopeless for large k; ``"bisection"`` handles them by Sturm
    bisection followed by inverse iteration. ``"auto"`` picks bisection for
    d = 2 with k > 64 and power iteration otherwise.
    """
    if tolerance <= 0:
        raise ValueError("tolerance must be positive")
    if method == "auto":
        method = "bisection" if T.d == 2 and T.k > DENSE_ORACLE_MAX_K else "power"
    if method == "power":
        return _power(T, tolerance, max_iterations)
    if method == "bisection":
        if T.d != 2:
            raise ValueError("bisection path only handles tridiagonal matrices (d = 2)")
        return _tridiagonal(T, tolerance, max_iterations)
    raise ValueError(f"unknown method {method!r}")


def _check_level(m) -> int:
    if int(m) != m or m < 1:
        raise ValueError(f"refinement level m must be a positive integer, got {m}")
    return int(m)


def lambda_c_x(m: int, tolerance: float = DEFAULT_TOL) -> float:
    """Critical value of the dominated process at level m: 2^(m+1) / rho(T_{2^(m+1), 2^m})."""
    m = _check_level(m)
    k = 2 ** (m + 1)
    return k / perron(BandedToeplitz(k, 2**m), tolerance).rho


def lambda_c_z(m: int, tolerance: float = DEFAULT_TOL) -> float:
    """Critical value of the dominating process at level m: bandwidth 2^m + 1."""
    m = _check_level(m)
    k = 2 ** (m + 1)
    return k / perron(BandedToeplitz(k, 2**m + 1), tolerance).rho


def bounds_table(m_max: int, tolerance: float = DEFAULT_TOL) -> list[BoundsRow]:
    m_max = _check_level(m_max)
    return [BoundsRow(m, lambda_c_x(m, tolerance), lambda_c_z(m, tolerance)) for m in range(1, m_max + 1)]


def courant_fischer_check(m: int, tolerance: float = DEFAULT_TOL) -> CourantFischerResult:
    """Check rho(T_{k, 2^m + 1}) - rho(T_{k, 2^m}) <= 1 with k = 2^(m+1).

    The two matrices differ by a symmetric permutation matrix, whose smallest
    eigenvalue is -1, so the Perron roots can differ by at most 1.
    """
    m = _check_level(m)
    k = 2 ** (m + 1)
    rho_x = perron(BandedToeplitz(k, 2**m), tolerance).rho
    rho_z = perron(BandedToeplitz(k, 2**m + 1), tolerance).rho
    return CourantFischerResult(m, rho_x, rho_z, tolerance)
