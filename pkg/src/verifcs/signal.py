"""Gaussian sparse signals and the measurement operator s = H e."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from verifcs import _kernels
from verifcs.errors import DimensionMismatch, InvalidSparsity, ParseError
from verifcs.graph import MeasurementGraph


@dataclass(frozen=True)
class SparseSignal:
    """Length-``length`` real vector held as its support and nonzero values."""

    length: int
    values: dict = field(default_factory=dict)

    def __post_init__(self):
        clean = {}
        for idx, val in self.values.items():
            idx = int(idx)
            if not 0 <= idx < self.length:
                raise IndexError(f"support index {idx} outside [0, {self.length})")
            if val == 0:
                raise ValueError(f"stored value at {idx} is zero")
            clean[idx] = float(val)
        object.__setattr__(self, "values", dict(sorted(clean.items())))

    @property
    def support(self) -> frozenset:
        return frozenset(self.values)

    @property
    def k(self) -> int:
        return len(self.values)

    def to_dense(self) -> np.ndarray:
        x = np.zeros(self.length)
        if self.values:
            x[list(self.values)] = list(self.values.values())
        return x

    @classmethod
    def from_dense(cls, x) -> "SparseSignal":
        x = np.asarray(x, dtype=float)
        nz = np.flatnonzero(x)
        return cls(len(x), {int(i): float(x[i]) for i in nz})

    def to_csv(self) -> str:
        rows = [f"N={self.length},K={self.k}"]
        rows += [f"{i},{v!r}" for i, v in self.values.items()]
        return "\n".join(rows) + "\n"

    @classmethod
    def from_csv(cls, text: str) -> "SparseSignal":
        lines = text.splitlines()
        if not lines:
            raise ParseError("empty signal file", 1)
        try:
            head = dict(part.split("=") for part in lines[0].split(","))
            n, k = int(head["N"]), int(head["K"])
        except (ValueError, KeyError):
            raise ParseError("expected header 'N=<n>,K=<k>'", 1) from None
        values = {}
        for lineno, line in enumerate(lines[1:], start=2):
            if not line.strip():
                continue
            try:
                i, v = line.split(",")
                values[int(i)] = float(v)
            except ValueError:
                raise ParseError(f"expected 'index,value', got {line!r}", lineno) from None
        if len(values) != k:
            raise ParseError(f"header declares K={k} but {len(values)} entries follow", 1)
        return cls(n, values)


def gaussian_sparse_arrays(n: int, k: int, rng) -> tuple[np.ndarray, np.ndarray]:
    """``(support, values)`` arrays; the harness skips building a SparseSignal."""
    if k < 0 or k > n:
        raise InvalidSparsity(f"k={k} not in [0, {n}]")
    support = rng.choice(n, size=k, replace=False)
    vals = rng.standard_normal(k)
    # an exact 0.0 would shrink the support
    while np.any(vals == 0.0):
        zero = vals == 0.0
        vals[zero] = rng.standard_normal(int(zero.sum()))
    return support, vals


def generate_gaussian_sparse(n: int, k: int, rng) -> SparseSignal:
    """Uniform random support of size ``k`` with i.i.d. N(0, 1) values."""
    support, vals = gaussian_sparse_arrays(n, k, np.random.default_rng(rng))
    return SparseSignal(n, dict(zip(support.tolist(), vals.tolist())))


def measure(g: MeasurementGraph, e) -> np.ndarray:
    """``s_m`` = sum of ``e_n`` over the check's neighbours, ascending index.

    ``e`` may be a :class:`SparseSignal` or a dense vector.
    """
    x = e.to_dense() if isinstance(e, SparseSignal) else np.asarray(e, dtype=float)
    if x.shape != (g.n_vars,):
        raise DimensionMismatch(f"signal length {x.shape} does not match n_vars={g.n_vars}")
    return _kernels.measure_csr(g.chk_ptr, g.chk_idx, x)
