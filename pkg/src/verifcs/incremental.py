"""Verification decoding with incremental direct samples.

When the rules run out of progress (or, under a numeric threshold, once the
iteration counter passes it) the decoder picks a check of minimum residual
degree, reads the true signal at one of its open neighbours and peels it.

Loop order per iteration, one reading of the algorithm's steps 1-7::

    k += 1; rules; peel; [trigger and l < iota_max -> sample, l += 1, peel]

The sample, when taken, belongs to the iteration that triggered it.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Union

import numpy as np

from verifcs import decoder
from verifcs.decoder import DecodeReport, DecoderState, Outcome
from verifcs.errors import NothingToSample, SampleUnavailable
from verifcs.graph import MeasurementGraph

ON_STALL = "on-stall"


@dataclass(frozen=True)
class IncrementalConfig:
    kappa0: Union[int, str] = ON_STALL
    iota_max: int | None = None  # None: one sample per variable, never binding
    max_iterations: int | None = None  # None: n_vars + iota_max + max(kappa0, 0)
    eps_zero: float = decoder.DEFAULT_EPS
    eps_eq: float = decoder.DEFAULT_EPS

    def __post_init__(self):
        if self.kappa0 != ON_STALL:
            if not isinstance(self.kappa0, (int, np.integer)) or self.kappa0 < 0:
                raise ValueError(f"kappa0 must be {ON_STALL!r} or a non-negative int")
        if self.iota_max is not None and self.iota_max < 0:
            raise ValueError("iota_max must be >= 0")
        if self.max_iterations is not None and self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")

    @classmethod
    def parse_trigger(cls, text: str) -> Union[int, str]:
        """``"on-stall"`` or ``"kappa0=<int>"`` as used on the command line."""
        if text == ON_STALL:
            return ON_STALL
        if text.startswith("kappa0="):
            return int(text.split("=", 1)[1])
        raise ValueError(f"unknown trigger {text!r}")

    def resolved(self, n_vars: int) -> tuple[int, int, int]:
        """``(kappa0, iota_max, max_iterations)`` with -1 for on-stall."""
        iota = n_vars if self.iota_max is None else int(self.iota_max)
        kappa = -1 if self.kappa0 == ON_STALL else int(self.kappa0)
        if self.max_iterations is not None:
            max_it = int(self.max_iterations)
        else:
            max_it = n_vars + iota + (kappa if kappa > 0 else 0)
        return kappa, iota, max(max_it, 1)


SampleOracle = Callable[[int], float]


class ArrayOracle:
    """Direct-sampling oracle backed by a known signal; counts its calls."""

    def __init__(self, values):
        self.values = np.asarray(values, dtype=float)
        self.calls = 0

    def __call__(self, n: int) -> float:
        self.calls += 1
        return float(self.values[n])


@dataclass(frozen=True)
class IncrementalReport:
    outcome: Outcome
    samples_used: int
    iterations_used: int
    unidentified_at_first_stall: int
    base_report: DecodeReport
    state: DecoderState | None = field(default=None, repr=False, compare=False)

    def csv_row(self) -> str:
        return f"{self.outcome},{self.samples_used},{self.iterations_used},{self.unidentified_at_first_stall}"

    CSV_HEADER = "outcome,L,k,unidentified_at_first_stall"


def select_sample_location(st: DecoderState, rng) -> int:
    """Open neighbour of a minimum-residual-degree check.

    Consumes exactly two uniforms from ``rng`` per call (tie-break among
    checks, then among that check's open neighbours), matching the compiled
    decoder so both replay the same choices from one seed.
    """
    if not st.unidentified:
        raise NothingToSample("every variable is already identified")
    u1, u2 = rng.random(), rng.random()
    deg = st.residual_degree
    live = np.flatnonzero(deg >= 1)
    if live.size == 0:
        # leftover variables touch no open check; min-degree is undefined here
        left = sorted(st.unidentified)
        return left[min(int(u1 * len(left)), len(left) - 1)]
    best = deg[live].min()
    ties = live[deg[live] == best]
    m = int(ties[min(int(u1 * ties.size), ties.size - 1)])
    open_nb = list(st._open_neighbors(m))
    return open_nb[min(int(u2 * len(open_nb)), len(open_nb) - 1)]


def run_incremental(g: MeasurementGraph, s, oracle: SampleOracle,
                    cfg: IncrementalConfig = IncrementalConfig(), rng=None) -> IncrementalReport:
    rng = np.random.default_rng(rng)
    kappa, iota, max_it = cfg.resolved(g.n_vars)
    st = decoder.init(g, s, cfg.eps_zero, cfg.eps_eq)
    per_iteration = []
    samples = 0
    first_stall = None
    base = None
    outcome = Outcome.MAX_ITERATIONS
    while st.iteration < max_it:
        count = st.step()
        per_iteration.append(count)
        if not st.unidentified:
            outcome = Outcome.SUCCESS
            break
        stalled = count == 0
        if stalled and first_stall is None:
            first_stall = len(st.unidentified)
            base = st.report(Outcome.STALLED, per_iteration)
        # one iteration: rules, peel, then at most one sample. With a numeric
        # kappa0 sampling starts once the iteration count exceeds it, stall or not.
        trigger = stalled if kappa < 0 else st.iteration > kappa
        if trigger and samples < iota:
            n = select_sample_location(st, rng)
            try:
                value = oracle(n)
            except SampleUnavailable:
                raise
            except Exception as exc:
                raise SampleUnavailable(f"oracle failed at variable {n}: {exc}") from exc
            st.identify(n, value)
            samples += 1
            if not st.unidentified:
                outcome = Outcome.SUCCESS
                break
        elif stalled and samples >= iota:
            outcome = Outcome.EXHAUSTED
            break
    final = st.report(outcome, per_iteration)
    if base is None:
        base = final
    return IncrementalReport(
        outcome=outcome,
        samples_used=samples,
        iterations_used=st.iteration,
        unidentified_at_first_stall=first_stall or 0,
        base_report=base,
        state=st,
    )
