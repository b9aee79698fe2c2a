"""Verification decoding with a fixed measurement matrix.

Three rules pin variable values from the residual measurements:

* zero rule: a check whose residual is zero forces all its open neighbours to 0;
* degree-one rule: a check with a single open neighbour fixes it to the residual;
* equal-pair rule: two checks with equal nonzero residuals sharing exactly one
  open variable fix that variable to the common value and every other open
  neighbour of either check to 0.

Rules *stage* verifications against the residual as it stood at the start of
the iteration; :meth:`DecoderState.peel` then commits them, subtracting the
values from the incident checks. One rules-then-peel pass is one iteration.

This is the reference implementation; the Monte Carlo harness uses the
compiled kernel in :mod:`verifcs._kernels`, which follows the same staging
order and is checked against this class in the tests.
"""

from __future__ import annotations

import csv
import enum
import io
from dataclasses import dataclass, field

import numpy as np

from verifcs.errors import DimensionMismatch, InternalInconsistency, PartialState
from verifcs.graph import MeasurementGraph
from verifcs.signal import SparseSignal

DEFAULT_EPS = 1e-9


class Outcome(str, enum.Enum):
    SUCCESS = "Success"
    STALLED = "Stalled"
    MAX_ITERATIONS = "MaxIterations"
    EXHAUSTED = "Exhausted"

    def __str__(self):
        return self.value


@dataclass(frozen=True)
class DecodeReport:
    outcome: Outcome
    iterations_used: int
    unidentified_count: int
    residual_max_abs: float
    per_iteration_verified: tuple = ()


@dataclass
class DecoderState:
    graph: MeasurementGraph
    residual: np.ndarray
    residual_degree: np.ndarray
    identified: dict = field(default_factory=dict)
    unidentified: set = field(default_factory=set)
    iteration: int = 0
    eps_zero: float = DEFAULT_EPS
    eps_eq: float = DEFAULT_EPS
    event_log: list = field(default_factory=list)
    pending: dict = field(default_factory=dict)
    conflicts: int = 0

    # -- rules -------------------------------------------------------------

    def _stage(self, n: int, value: float, rule: str) -> int:
        if n in self.pending:
            if abs(self.pending[n] - value) > self.eps_eq:
                self.conflicts += 1
            return 0
        self.pending[n] = value
        self.event_log.append((self.iteration, rule, n, value))
        return 1

    def _open_neighbors(self, m: int):
        g = self.graph
        for n in g.chk_idx[g.chk_ptr[m]:g.chk_ptr[m + 1]]:
            n = int(n)
            if n in self.unidentified:
                yield n

    def apply_zero_rule(self) -> int:
        count = 0
        for m in range(self.graph.n_checks):
            if self.residual_degree[m] >= 1 and abs(self.residual[m]) <= self.eps_zero:
                for n in self._open_neighbors(m):
                    count += self._stage(n, 0.0, "zero")
        return count

    def apply_degree_one_rule(self) -> int:
        count = 0
        for m in range(self.graph.n_checks):
            if self.residual_degree[m] == 1:
                n = next(self._open_neighbors(m))
                count += self._stage(n, float(self.residual[m]), "degree_one")
        return count

    def apply_equal_pair_rule(self) -> int:
        g = self.graph
        count = 0
        for n in sorted(self.unidentified):
            checks = g.var_idx[g.var_ptr[n]:g.var_ptr[n + 1]].tolist()
            hit = None
            for i, m1 in enumerate(checks):
                r1 = float(self.residual[m1])
                if abs(r1) <= self.eps_zero:
                    continue
                for m2 in checks[i + 1:]:
                    if abs(r1 - self.residual[m2]) > self.eps_eq:
                        continue
                    shared = set(self._open_neighbors(m1)) & set(self._open_neighbors(m2))
                    if len(shared) == 1:
                        hit = (m1, m2, r1)
                        break
                if hit:
                    break
            if hit is None:
                continue
            m1, m2, r1 = hit
            count += self._stage(n, r1, "equal_pair")
            for m in (m1, m2):
                for other in self._open_neighbors(m):
                    if other != n:
                        count += self._stage(other, 0.0, "equal_pair")
        return count

    # -- peeling -----------------------------------------------------------

    def peel(self, newly=None) -> None:
        """Commit verifications: mark identified, subtract, drop edges.

        With ``newly=None`` the verifications staged by the rules are used.
        """
        if newly is None:
            newly = list(self.pending.items())
        g = self.graph
        for n, value in newly:
            n = int(n)
            if n not in self.unidentified:
                raise InternalInconsistency(f"variable {n} peeled twice")
            self.unidentified.discard(n)
            self.identified[n] = float(value)
            for m in g.var_idx[g.var_ptr[n]:g.var_ptr[n + 1]]:
                self.residual_degree[m] -= 1
                if self.residual_degree[m] < 0:
                    raise InternalInconsistency(f"check {m} degree went negative")
                if value != 0.0:
                    self.residual[m] -= value
        self.pending.clear()

    def identify(self, n: int, value: float, rule: str = "sample") -> None:
        """Verify a single variable from outside the rules and peel it."""
        self.event_log.append((self.iteration, rule, int(n), float(value)))
        self.peel([(n, value)])

    # -- driver ------------------------------------------------------------

    def step(self, order=("zero", "degree_one", "equal_pair")) -> int:
        """One iteration: all rules against the same residual, then one peel."""
        self.iteration += 1
        rules = {
            "zero": self.apply_zero_rule,
            "degree_one": self.apply_degree_one_rule,
            "equal_pair": self.apply_equal_pair_rule,
        }
        count = sum(rules[name]() for name in order)
        self.peel()
        return count

    def report(self, outcome: Outcome, per_iteration=()) -> DecodeReport:
        rmax = float(np.max(np.abs(self.residual), initial=0.0))
        return DecodeReport(outcome, self.iteration, len(self.unidentified), rmax, tuple(per_iteration))

    def event_log_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["iteration", "rule", "variable", "value"])
        for it, rule, n, v in self.event_log:
            w.writerow([it, rule, n, repr(v)])
        return buf.getvalue()


def init(g: MeasurementGraph, s, eps_zero: float = DEFAULT_EPS, eps_eq: float = DEFAULT_EPS) -> DecoderState:
    s = np.array(s, dtype=float)
    if s.shape != (g.n_checks,):
        raise DimensionMismatch(f"measurement length {s.shape} does not match n_checks={g.n_checks}")
    if eps_zero < 0 or eps_eq < 0:
        raise ValueError("tolerances must be non-negative")
    return DecoderState(
        graph=g,
        residual=s,
        residual_degree=g.check_degrees.copy(),
        unidentified=set(range(g.n_vars)),
        eps_zero=eps_zero,
        eps_eq=eps_eq,
    )


def run_to_convergence(st: DecoderState, max_iterations: int | None = None,
                       order=("zero", "degree_one", "equal_pair")) -> DecodeReport:
    if max_iterations is None:
        max_iterations = st.graph.n_vars
    if max_iterations < 1:
        raise ValueError("max_iterations must be >= 1")
    per_iteration = []
    for _ in range(max_iterations):
        count = st.step(order)
        per_iteration.append(count)
        if not st.unidentified:
            return st.report(Outcome.SUCCESS, per_iteration)
        if count == 0:
            return st.report(Outcome.STALLED, per_iteration)
    return st.report(Outcome.MAX_ITERATIONS, per_iteration)


def extract_signal(st: DecoderState) -> SparseSignal:
    if st.unidentified:
        raise PartialState(f"{len(st.unidentified)} variables still unidentified")
    return SparseSignal(st.graph.n_vars, {n: v for n, v in st.identified.items() if v != 0.0})


def residual_mismatch(st: DecoderState, truth) -> float:
    """Largest violation of ``residual[m] == sum of open true values``,
    scaled by ``1 + sum |e_n|`` over the check."""
    x = truth.to_dense() if isinstance(truth, SparseSignal) else np.asarray(truth, float)
    g = st.graph
    worst = 0.0
    for m in range(g.n_checks):
        nb = g.chk_idx[g.chk_ptr[m]:g.chk_ptr[m + 1]]
        open_sum = sum(x[n] for n in nb if int(n) in st.unidentified)
        scale = 1.0 + float(np.abs(x[nb]).sum())
        worst = max(worst, abs(st.residual[m] - open_sum) / scale)
    return worst
