"""Sparse binary measurement matrices stored as Tanner graphs."""

from __future__ import annotations

from typing import Iterable, Sequence

import numpy as np

from verifcs import _kernels
from verifcs.errors import (
    ConstructionInfeasible,
    DimensionMismatch,
    IndexOutOfRange,
    ParseError,
)


def _readonly(a):
    a = np.ascontiguousarray(a, dtype=np.int64)
    a.flags.writeable = False
    return a


class MeasurementGraph:
    """Bipartite graph of a binary ``n_checks x n_vars`` matrix.

    Adjacency is held in CSR form in both directions (``var_ptr/var_idx``
    lists the checks of every variable, ``chk_ptr/chk_idx`` the variables of
    every check), with each neighbour list sorted ascending. Instances are
    immutable and safe to share between trials.
    """

    __slots__ = ("n_vars", "n_checks", "var_ptr", "var_idx", "chk_ptr", "chk_idx")

    def __init__(self, n_vars: int, n_checks: int, var_adj: Sequence[Iterable[int]]):
        if n_vars < 0 or n_checks < 0:
            raise ValueError("dimensions must be non-negative")
        if len(var_adj) != n_vars:
            raise DimensionMismatch(f"{len(var_adj)} adjacency rows for {n_vars} variables")
        rows = []
        for n, checks in enumerate(var_adj):
            row = sorted(int(c) for c in checks)
            if any(c < 0 or c >= n_checks for c in row):
                raise DimensionMismatch(f"variable {n} lists a check outside [0, {n_checks})")
            if len(set(row)) != len(row):
                raise DimensionMismatch(f"variable {n} has a duplicate edge")
            rows.append(row)
        degs = np.array([len(r) for r in rows], dtype=np.int64)
        var_ptr = np.concatenate([[0], np.cumsum(degs)]).astype(np.int64)
        var_idx = np.array([c for r in rows for c in r], dtype=np.int64)
        owners = np.repeat(np.arange(n_vars, dtype=np.int64), degs)
        order = np.lexsort((owners, var_idx))
        chk_idx = owners[order]
        counts = np.bincount(var_idx, minlength=n_checks) if n_checks else np.zeros(0, np.int64)
        chk_ptr = np.concatenate([[0], np.cumsum(counts)]).astype(np.int64)
        object.__setattr__(self, "n_vars", int(n_vars))
        object.__setattr__(self, "n_checks", int(n_checks))
        object.__setattr__(self, "var_ptr", _readonly(var_ptr))
        object.__setattr__(self, "var_idx", _readonly(var_idx))
        object.__setattr__(self, "chk_ptr", _readonly(chk_ptr))
        object.__setattr__(self, "chk_idx", _readonly(chk_idx))

    def __setattr__(self, name, value):
        raise AttributeError("MeasurementGraph is immutable")

    def __getstate__(self):
        return (self.n_vars, self.n_checks, self.var_ptr, self.var_idx, self.chk_ptr, self.chk_idx)

    def __setstate__(self, state):
        for name, value in zip(self.__slots__, state):
            object.__setattr__(self, name, value)

    @classmethod
    def from_dense(cls, h) -> "MeasurementGraph":
        h = np.asarray(h)
        if h.ndim != 2:
            raise DimensionMismatch("expected a 2-D matrix")
        if not np.all((h == 0) | (h == 1)):
            raise ValueError("matrix entries must be 0 or 1")
        m, n = h.shape
        return cls(n, m, [np.flatnonzero(h[:, j]).tolist() for j in range(n)])

    @classmethod
    def _from_var_checks(cls, var_checks: np.ndarray, n_checks: int) -> "MeasurementGraph":
        # trusted input from the constructor kernel: skip per-row validation
        g = cls.__new__(cls)
        arrays = _kernels.csr_from_var_checks(var_checks, n_checks)
        g.__setstate__((var_checks.shape[0], n_checks) + tuple(_readonly(a) for a in arrays))
        return g

    def to_dense(self) -> np.ndarray:
        h = np.zeros((self.n_checks, self.n_vars), dtype=np.int8)
        for n in range(self.n_vars):
            h[self.var_idx[self.var_ptr[n]:self.var_ptr[n + 1]], n] = 1
        return h

    @property
    def var_adj(self) -> list[list[int]]:
        return [self.var_idx[self.var_ptr[n]:self.var_ptr[n + 1]].tolist() for n in range(self.n_vars)]

    @property
    def check_adj(self) -> list[list[int]]:
        return [self.chk_idx[self.chk_ptr[m]:self.chk_ptr[m + 1]].tolist() for m in range(self.n_checks)]

    @property
    def var_degrees(self) -> np.ndarray:
        return np.diff(self.var_ptr)

    @property
    def check_degrees(self) -> np.ndarray:
        return np.diff(self.chk_ptr)

    @property
    def n_edges(self) -> int:
        return int(self.var_idx.shape[0])

    def check_neighbors(self, m: int) -> list[int]:
        if not 0 <= m < self.n_checks:
            raise IndexOutOfRange(f"check {m} not in [0, {self.n_checks})")
        return self.chk_idx[self.chk_ptr[m]:self.chk_ptr[m + 1]].tolist()

    def var_neighbors(self, n: int) -> list[int]:
        if not 0 <= n < self.n_vars:
            raise IndexOutOfRange(f"variable {n} not in [0, {self.n_vars})")
        return self.var_idx[self.var_ptr[n]:self.var_ptr[n + 1]].tolist()

    def __eq__(self, other):
        if not isinstance(other, MeasurementGraph):
            return NotImplemented
        return (
            self.n_vars == other.n_vars
            and self.n_checks == other.n_checks
            and np.array_equal(self.var_ptr, other.var_ptr)
            and np.array_equal(self.var_idx, other.var_idx)
        )

    def __hash__(self):
        return hash((self.n_vars, self.n_checks, self.var_idx.tobytes(), self.var_ptr.tobytes()))

    def __repr__(self):
        return f"MeasurementGraph(n_vars={self.n_vars}, n_checks={self.n_checks}, n_edges={self.n_edges})"


def build_regular(
    n_vars: int,
    n_checks: int,
    var_degree: int = 3,
    seed=None,
    max_attempts: int = 20,
) -> MeasurementGraph:
    """Column-regular, 4-cycle-free graph built by greedy edge placement.

    Variables are processed in index order; each edge goes to a check of
    currently lowest degree among those that would create neither a duplicate
    edge nor a 4-cycle, ties broken uniformly from ``seed``. A dead end
    restarts the whole placement with fresh draws.
    """
    if n_vars < 1:
        raise ValueError("n_vars must be >= 1")
    if var_degree < 1:
        raise ValueError("var_degree must be >= 1")
    if var_degree > n_checks:
        raise ConstructionInfeasible(
            f"var_degree={var_degree} exceeds n_checks={n_checks}"
        )
    rng = np.random.default_rng(seed)
    for _ in range(max_attempts):
        draws = rng.random(n_vars * var_degree * _kernels.UNIFORMS_PER_EDGE)
        var_checks, ok = _kernels.place_edges(n_vars, n_checks, var_degree, draws)
        if ok:
            return MeasurementGraph._from_var_checks(var_checks, n_checks)
    raise ConstructionInfeasible(
        f"no 4-cycle-free placement for N={n_vars}, M={n_checks}, "
        f"degree {var_degree} after {max_attempts} attempts"
    )


def girth_at_least_six(g: MeasurementGraph) -> bool:
    """True iff no two checks share two or more variables."""
    seen = np.full(g.n_checks, -1, dtype=np.int64)
    vp, vi, cp, ci = g.var_ptr, g.var_idx, g.chk_ptr, g.chk_idx
    for m in range(g.n_checks):
        for n in ci[cp[m]:cp[m + 1]]:
            for other in vi[vp[n]:vp[n + 1]]:
                if other == m:
                    continue
                if seen[other] == m:
                    return False
                seen[other] = m
    return True


def save_alist(g: MeasurementGraph) -> str:
    vdeg = g.var_degrees
    cdeg = g.check_degrees
    lines = [
        f"{g.n_vars} {g.n_checks}",
        f"{int(vdeg.max(initial=0))} {int(cdeg.max(initial=0))}",
        " ".join(map(str, vdeg.tolist())),
        " ".join(map(str, cdeg.tolist())),
    ]
    lines += [" ".join(str(c + 1) for c in row) for row in g.var_adj]
    lines += [" ".join(str(v + 1) for v in row) for row in g.check_adj]
    return "\n".join(lines) + "\n"


def _ints(line: str, lineno: int) -> list[int]:
    try:
        return [int(tok) for tok in line.split()]
    except ValueError:
        raise ParseError(f"non-integer token in {line!r}", lineno) from None


def load_alist(text: str) -> MeasurementGraph:
    """Parse the strict (unpadded) alist layout written by :func:`save_alist`."""
    lines = text.splitlines()

    def row(i: int) -> list[int]:
        if i >= len(lines):
            raise ParseError("unexpected end of input", i + 1)
        return _ints(lines[i], i + 1)

    header = row(0)
    if len(header) != 2 or min(header) < 0:
        raise ParseError("expected 'N M'", 1)
    n, m = header
    maxes = row(1)
    if len(maxes) != 2:
        raise ParseError("expected 'max_var_degree max_check_degree'", 2)
    vdeg = row(2)
    cdeg = row(3)
    if len(vdeg) != n:
        raise DimensionMismatch(f"line 3 lists {len(vdeg)} variable degrees, expected {n}")
    if len(cdeg) != m:
        raise DimensionMismatch(f"line 4 lists {len(cdeg)} check degrees, expected {m}")
    var_adj = []
    for j in range(n):
        nb = row(4 + j)
        if len(nb) != vdeg[j]:
            raise DimensionMismatch(f"line {5 + j}: variable {j + 1} declares degree {vdeg[j]} but lists {len(nb)}")
        if any(c < 1 or c > m for c in nb):
            raise DimensionMismatch(f"line {5 + j}: check index outside [1, {m}]")
        var_adj.append([c - 1 for c in nb])
    check_adj = []
    for i in range(m):
        nb = row(4 + n + i)
        if len(nb) != cdeg[i]:
            raise DimensionMismatch(f"line {5 + n + i}: check {i + 1} declares degree {cdeg[i]} but lists {len(nb)}")
        if any(v < 1 or v > n for v in nb):
            raise DimensionMismatch(f"line {5 + n + i}: variable index outside [1, {n}]")
        check_adj.append(sorted(v - 1 for v in nb))
    for extra in range(4 + n + m, len(lines)):
        if lines[extra].strip():
            raise ParseError("trailing content after neighbour lists", extra + 1)
    if maxes != [max(vdeg, default=0), max(cdeg, default=0)]:
        raise DimensionMismatch("line 2 maximum degrees disagree with line 3/4")
    g = MeasurementGraph(n, m, var_adj)
    if g.check_adj != check_adj:
        raise DimensionMismatch("check neighbour lists disagree with variable neighbour lists")
    return g
