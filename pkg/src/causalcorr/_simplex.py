"""Phase-1 simplex feasibility solver (dense tableau, Bland's rule).

Decides whether ``A x = b`` has a solution with ``x >= 0`` by minimizing the
sum of artificial variables.  Bland's smallest-index rules make the pivot
sequence deterministic, and the numba kernel and the pure-numpy kernel follow
exactly the same rules, so both paths produce identical tableaus.  The numba
path is the default; set CC_NO_NUMBA=1 to force the numpy path.  There is
also an exact rational mode for small instances.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from ._config import numba_disabled

_PIVOT_TOL = 1e-12
STATUS_OPTIMAL = 0
STATUS_UNBOUNDED = 1
STATUS_ITER_LIMIT = 2


def _phase1_loops(T, basis, tol_piv, max_iter):
    """Pivot loop in plain element-wise form; this is what numba compiles."""
    m = basis.shape[0]
    ncols = T.shape[1] - 1
    it = 0
    while it < max_iter:
        it += 1
        enter = -1
        for j in range(ncols):
            if T[m, j] < -tol_piv:
                enter = j
                break
        if enter < 0:
            return STATUS_OPTIMAL, it
        leave = -1
        best = 0.0
        for i in range(m):
            a = T[i, enter]
            if a > tol_piv:
                r = T[i, ncols] / a
                if leave < 0 or r < best or (r == best and basis[i] < basis[leave]):
                    leave = i
                    best = r
        if leave < 0:
            return STATUS_UNBOUNDED, it
        piv = T[leave, enter]
        for j in range(ncols + 1):
            T[leave, j] /= piv
        for i in range(m + 1):
            if i != leave:
                f = T[i, enter]
                if f != 0.0:
                    for j in range(ncols + 1):
                        T[i, j] -= f * T[leave, j]
        basis[leave] = enter
    return STATUS_ITER_LIMIT, it


def _phase1_numpy(T, basis, tol_piv, max_iter):
    """Same pivot rules as :func:`_phase1_loops`, with vectorized row operations."""
    m = basis.shape[0]
    ncols = T.shape[1] - 1
    it = 0
    while it < max_iter:
        it += 1
        negative = np.nonzero(T[m, :ncols] < -tol_piv)[0]
        if negative.size == 0:
            return STATUS_OPTIMAL, it
        enter = int(negative[0])
        col = T[:m, enter]
        rows = np.nonzero(col > tol_piv)[0]
        if rows.size == 0:
            return STATUS_UNBOUNDED, it
        ratios = T[rows, ncols] / col[rows]
        best = ratios.min()
        tied = rows[ratios == best]
        leave = int(tied[np.argmin(basis[tied])])
        piv = T[leave, enter]
        T[leave, :] /= piv
        factors = T[:, enter].copy()
        factors[leave] = 0.0
        T -= np.outer(factors, T[leave, :])
        basis[leave] = enter
    return STATUS_ITER_LIMIT, it


try:  # pragma: no cover - exercised indirectly
    import numba

    _phase1_numba = numba.njit(cache=True)(_phase1_loops)
except ImportError:  # pragma: no cover
    _phase1_numba = None


@dataclass
class Phase1Result:
    feasible: bool
    x: np.ndarray
    infeasibility: float
    iterations: int
    backend: str


def solve_phase1(
    A: np.ndarray,
    b: np.ndarray,
    tol: float = 1e-7,
    max_iter: int | None = None,
    backend: str | None = None,
) -> Phase1Result:
    """Feasibility of ``A x = b, x >= 0`` with slack tolerance ``tol``.

    ``backend`` may force "numba" or "numpy"; by default numba is used when
    available and CC_NO_NUMBA is not set.  The reported infeasibility is the
    optimal value of the artificial-variable objective (L1 residual).
    """
    A = np.asarray(A, dtype=float)
    b = np.asarray(b, dtype=float)
    m, n = A.shape
    flip = b < 0
    A = np.where(flip[:, None], -A, A)
    b = np.where(flip, -b, b)
    T = np.zeros((m + 1, n + m + 1))
    T[:m, :n] = A
    T[:m, n : n + m] = np.eye(m)
    T[:m, -1] = b
    T[m, :n] = -A.sum(axis=0)
    T[m, -1] = -b.sum()
    basis = np.arange(n, n + m, dtype=np.int64)
    if max_iter is None:
        max_iter = 200 * (m + n)

    if backend is None:
        backend = "numpy" if (numba_disabled() or _phase1_numba is None) else "numba"
    if backend == "numba":
        if _phase1_numba is None:
            raise RuntimeError("numba backend requested but numba is not importable")
        status, iters = _phase1_numba(T, basis, _PIVOT_TOL, max_iter)
    elif backend == "numpy":
        status, iters = _phase1_numpy(T, basis, _PIVOT_TOL, max_iter)
    else:
        raise ValueError(f"unknown backend {backend!r}")

    if status == STATUS_ITER_LIMIT:
        raise RuntimeError(f"simplex did not terminate within {max_iter} pivots")
    infeas = max(0.0, float(-T[m, -1]))
    x = np.zeros(n)
    for i in range(m):
        if basis[i] < n:
            x[basis[i]] = T[i, -1]
    return Phase1Result(
        feasible=infeas <= tol,
        x=x,
        infeasibility=infeas,
        iterations=iters,
        backend=backend,
    )


@dataclass
class ExactPhase1Result:
    feasible: bool
    x: list[Fraction]
    infeasibility: Fraction
    iterations: int


def solve_phase1_exact(A, b, max_iter: int | None = None) -> ExactPhase1Result:
    """Rational-arithmetic feasibility of ``A x = b, x >= 0`` (exact, no tolerance).

    Entries are converted with ``Fraction``, so float inputs are taken at
    their exact binary values.  Same Bland pivot rules as the float kernels.
    """
    A = [[Fraction(v) for v in row] for row in A]
    b = [Fraction(v) for v in b]
    m = len(A)
    n = len(A[0]) if m else 0
    for i in range(m):
        if b[i] < 0:
            A[i] = [-v for v in A[i]]
            b[i] = -b[i]
    zero, one = Fraction(0), Fraction(1)
    T = [row + [one if j == i else zero for j in range(m)] + [b[i]] for i, row in enumerate(A)]
    obj = [-sum(T[i][j] for i in range(m)) for j in range(n)] + [zero] * m
    obj.append(-sum(b))
    T.append(obj)
    basis = list(range(n, n + m))
    ncols = n + m
    if max_iter is None:
        max_iter = 200 * (m + n)
    it = 0
    while it < max_iter:
        it += 1
        enter = -1
        for j in range(ncols):
            if T[m][j] < 0:
                enter = j
                break
        if enter < 0:
            break
        leave = -1
        best = zero
        for i in range(m):
            a = T[i][enter]
            if a > 0:
                r = T[i][ncols] / a
                if leave < 0 or r < best or (r == best and basis[i] < basis[leave]):
                    leave = i
                    best = r
        if leave < 0:
            raise RuntimeError("phase-1 objective unbounded; input is inconsistent")
        piv = T[leave][enter]
        T[leave] = [v / piv for v in T[leave]]
        for i in range(m + 1):
            if i != leave and T[i][enter] != 0:
                f = T[i][enter]
                T[i] = [v - f * w for v, w in zip(T[i], T[leave])]
        basis[leave] = enter
    else:
        raise RuntimeError(f"exact simplex did not terminate within {max_iter} pivots")
    infeas = -T[m][ncols]
    x = [zero] * n
    for i in range(m):
        if basis[i] < n:
            x[basis[i]] = T[i][ncols]
    return ExactPhase1Result(feasible=infeas == 0, x=x, infeasibility=infeas, iterations=it)
