"""Brute-force ground truth for tiny instances.

``enumerate_coset_leaders`` finds every minimum-support solution of
``H e = s`` by trying supports in order of size; ``spark`` is the smallest
number of linearly dependent columns of ``H``. Uniqueness is guaranteed for
every ``K``-sparse signal when no ``2K`` columns are dependent.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from verifcs.errors import DimensionMismatch, InstanceTooLarge
from verifcs.graph import MeasurementGraph
from verifcs.signal import SparseSignal

MAX_VARS = 24
PIVOT_TOL = 1e-10


@dataclass(frozen=True)
class CosetLeaderResult:
    min_weight: int | None  # None: nothing found up to k_max
    leaders: tuple = ()

    @property
    def unique(self) -> bool:
        return len(self.leaders) == 1

    def to_json(self) -> dict:
        return {
            "min_weight": self.min_weight,
            "unique": self.unique,
            "leaders": [{str(i): v for i, v in lead.values.items()} for lead in self.leaders],
        }


@dataclass(frozen=True)
class AboveBound:
    """No dependent column subset of size ``<= bound`` exists."""

    bound: int


def _guard(g: MeasurementGraph, t: int):
    if g.n_vars > MAX_VARS:
        raise InstanceTooLarge(f"n_vars={g.n_vars} exceeds enumeration limit {MAX_VARS}")
    if t > g.n_vars:
        raise ValueError(f"bound {t} exceeds n_vars={g.n_vars}")


def enumerate_coset_leaders(g: MeasurementGraph, s, k_max: int, tol: float = 1e-9) -> CosetLeaderResult:
    _guard(g, k_max)
    s = np.asarray(s, dtype=float)
    if s.shape != (g.n_checks,):
        raise DimensionMismatch(f"measurement length {s.shape} does not match n_checks={g.n_checks}")
    h = g.to_dense().astype(float)
    for t in range(k_max + 1):
        found = []
        for cols in itertools.combinations(range(g.n_vars), t):
            if t == 0:
                if np.max(np.abs(s), initial=0.0) <= tol:
                    found.append(SparseSignal(g.n_vars, {}))
                continue
            sub = h[:, cols]
            x = np.linalg.lstsq(sub, s, rcond=None)[0]
            if np.max(np.abs(sub @ x - s), initial=0.0) <= tol and np.all(np.abs(x) > tol):
                found.append(SparseSignal(g.n_vars, dict(zip(cols, x.tolist()))))
        if found:
            return CosetLeaderResult(t, tuple(found))
    return CosetLeaderResult(None, ())


def _rank(a: np.ndarray) -> int:
    """Gaussian elimination, largest pivot in each column."""
    a = a.astype(float).copy()
    rows, cols = a.shape
    rank = 0
    for c in range(cols):
        if rank == rows:
            break
        p = rank + int(np.argmax(np.abs(a[rank:, c])))
        if abs(a[p, c]) <= PIVOT_TOL:
            continue
        a[[rank, p]] = a[[p, rank]]
        a[rank + 1:] -= np.outer(a[rank + 1:, c] / a[rank, c], a[rank])
        rank += 1
    return rank


def spark(g: MeasurementGraph, t_max: int):
    """Smallest dependent column count, or ``AboveBound(t_max)``."""
    _guard(g, t_max)
    h = g.to_dense().astype(float)
    for t in range(1, t_max + 1):
        if t > g.n_checks:
            return t  # more columns than rows are always dependent
        for cols in itertools.combinations(range(g.n_vars), t):
            if _rank(h[:, cols]) < t:
                return t
    return AboveBound(t_max)


def recovery_guarantee_holds(g: MeasurementGraph, k: int) -> bool:
    """True iff no ``2k`` or fewer columns are dependent (``d_min >= 2k+1``)."""
    if k < 0:
        raise ValueError("k must be non-negative")
    if k == 0:
        return True
    bound = min(2 * k, g.n_vars)
    return isinstance(spark(g, bound), AboveBound)
