import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from verifcs import decoder
from verifcs.decoder import Outcome, extract_signal, residual_mismatch, run_to_convergence
from verifcs.errors import ConstructionInfeasible, DimensionMismatch, InternalInconsistency, PartialState
from verifcs.graph import MeasurementGraph, build_regular
from verifcs.signal import SparseSignal, generate_gaussian_sparse, measure

from tests.conftest import random_tiny_graph


def start(g, e):
    return decoder.init(g, measure(g, np.asarray(e, float)))


def test_init(six_cycle):
    st_ = decoder.init(six_cycle, [-0.5, 1.5, -2.0])
    assert st_.residual_degree.tolist() == [2, 2, 2]
    assert len(st_.unidentified) == 3
    assert st_.iteration == 0


def test_init_dimension_mismatch(six_cycle):
    with pytest.raises(DimensionMismatch):
        decoder.init(six_cycle, [1.0, 2.0])


def test_init_zero_measurements(six_cycle):
    assert len(decoder.init(six_cycle, np.zeros(3)).unidentified) == 3


def test_zero_rule_trace(six_cycle):
    st_ = start(six_cycle, [1.5, 0, 0])
    assert st_.residual.tolist() == [1.5, 1.5, 0.0]
    assert st_.apply_zero_rule() == 2
    assert st_.pending == {1: 0.0, 2: 0.0}


def test_zero_rule_nothing_to_do(six_cycle):
    st_ = start(six_cycle, [1.0, 2.0, 3.5])
    assert st_.apply_zero_rule() == 0
    assert not st_.pending and len(st_.unidentified) == 3


def test_zero_rule_on_zero_measurements():
    g = MeasurementGraph(4, 2, [[0], [0, 1], [1], []])
    st_ = decoder.init(g, np.zeros(2))
    assert st_.apply_zero_rule() == 3
    assert set(st_.pending) == {0, 1, 2}


def test_peel_then_degree_one_trace(six_cycle):
    st_ = start(six_cycle, [1.5, 0, 0])
    st_.apply_zero_rule()
    st_.peel()
    assert st_.residual.tolist() == [1.5, 1.5, 0.0]
    assert st_.residual_degree.tolist() == [1, 1, 0]
    assert st_.apply_degree_one_rule() == 1
    assert st_.pending == {0: 1.5}
    st_.peel()
    assert abs(st_.residual[0]) <= 1e-12
    assert st_.residual_degree.tolist() == [0, 0, 0]


def test_degree_one_rule_none(six_cycle):
    st_ = start(six_cycle, [1.0, 2.0, 3.5])
    assert st_.apply_degree_one_rule() == 0


def test_two_degree_one_checks_on_one_variable():
    g = MeasurementGraph(1, 2, [[0, 1]])
    st_ = decoder.init(g, [2.0, 2.0])
    assert st_.apply_degree_one_rule() == 1
    assert st_.conflicts == 0
    st_.peel()
    assert st_.residual_degree.tolist() == [0, 0]
    assert st_.residual.tolist() == [0.0, 0.0]


def test_inconsistent_degree_one_checks_counted():
    g = MeasurementGraph(1, 2, [[0, 1]])
    st_ = decoder.init(g, [2.0, 3.0])
    assert st_.apply_degree_one_rule() == 1
    assert st_.conflicts == 1
    assert st_.pending == {0: 2.0}


def equal_pair_graph():
    # m0 holds {v1, v2}, m1 holds {v1, v4}; v0 and v3 are isolated
    return MeasurementGraph(5, 2, [[], [0, 1], [0], [], [1]])


def test_equal_pair_rule():
    st_ = decoder.init(equal_pair_graph(), [1.7, 1.7])
    assert st_.apply_equal_pair_rule() == 3
    assert st_.pending == {1: 1.7, 2: 0.0, 4: 0.0}


def test_equal_pair_needs_equality():
    st_ = decoder.init(equal_pair_graph(), [1.7, 1.7 + 1e-3])
    assert st_.apply_equal_pair_rule() == 0


def test_equal_pair_needs_nonzero():
    st_ = decoder.init(equal_pair_graph(), [0.0, 0.0])
    assert st_.apply_equal_pair_rule() == 0


def test_equal_pair_needs_single_shared_variable():
    # the two checks share two open variables: a 4-cycle, rule must not fire
    g = MeasurementGraph(3, 2, [[0, 1], [0, 1], [1]])
    st_ = decoder.init(g, [1.0, 1.0])
    assert st_.apply_equal_pair_rule() == 0


def test_peel_examples(six_cycle):
    st_ = start(six_cycle, [1.5, 0, 0])
    st_.peel([(1, 0.0), (2, 0.0)])
    assert st_.residual.tolist() == [1.5, 1.5, 0.0]
    assert st_.residual_degree.tolist() == [1, 1, 0]
    st_.peel([(0, 1.5)])
    assert max(abs(st_.residual)) <= 1e-12
    assert st_.residual_degree.tolist() == [0, 0, 0]
    before = st_.residual.copy()
    st_.peel([])
    assert (st_.residual == before).all()


def test_peel_twice_is_inconsistent(six_cycle):
    st_ = start(six_cycle, [1.5, 0, 0])
    st_.peel([(0, 1.5)])
    with pytest.raises(InternalInconsistency):
        st_.peel([(0, 1.5)])


def test_run_six_cycle_success(six_cycle):
    st_ = start(six_cycle, [1.5, 0, 0])
    rep = run_to_convergence(st_)
    assert rep.outcome == Outcome.SUCCESS
    assert rep.iterations_used <= 2
    assert rep.unidentified_count == 0 and rep.residual_max_abs <= 1e-9
    sig = extract_signal(st_)
    assert sig.support == {0}
    assert abs(sig.values[0] - 1.5) <= 1e-12


def test_run_six_cycle_stalls(six_cycle):
    st_ = start(six_cycle, [0.3, -1.1, 2.7])
    rep = run_to_convergence(st_)
    assert rep.outcome == Outcome.STALLED
    assert rep.unidentified_count == 3
    with pytest.raises(PartialState):
        extract_signal(st_)


def test_run_zero_signal(six_cycle):
    st_ = start(six_cycle, [0, 0, 0])
    rep = run_to_convergence(st_)
    assert rep.outcome == Outcome.SUCCESS and rep.iterations_used == 1
    assert extract_signal(st_).support == frozenset()


def test_max_iterations():
    # a chain peels one variable per iteration
    g = MeasurementGraph(4, 4, [[0, 1], [1, 2], [2, 3], [3]])
    st_ = decoder.init(g, measure(g, np.array([1.0, 2.0, 3.0, 4.0])))
    rep = run_to_convergence(st_, max_iterations=1)
    assert rep.outcome == Outcome.MAX_ITERATIONS
    assert rep.per_iteration_verified == (1,)


def test_event_log_csv(six_cycle):
    st_ = start(six_cycle, [1.5, 0, 0])
    run_to_convergence(st_)
    lines = st_.event_log_csv().splitlines()
    assert lines[0] == "iteration,rule,variable,value"
    assert len(lines) == 4
    assert {ln.split(",")[1] for ln in lines[1:]} <= {"zero", "degree_one", "equal_pair"}


def _decode_tracking(g, e):
    """Run rule-by-rule, checking the residual invariant after every peel."""
    st_ = decoder.init(g, measure(g, e))
    worst = 0.0
    identified = 0
    for _ in range(g.n_vars):
        count = st_.step()
        worst = max(worst, residual_mismatch(st_, e))
        assert len(st_.identified) >= identified
        identified = len(st_.identified)
        assert set(st_.identified).isdisjoint(st_.unidentified)
        assert set(st_.identified) | st_.unidentified == set(range(g.n_vars))
        for m in range(g.n_checks):
            open_nb = [n for n in g.check_neighbors(m) if n in st_.unidentified]
            assert st_.residual_degree[m] == len(open_nb)
        if count == 0 or not st_.unidentified:
            break
    return st_, worst


@given(st.integers(0, 2**31), st.integers(1, 25))
@settings(max_examples=60)
def test_invariants_along_decoding(seed, k):
    rng = np.random.default_rng(seed)
    g = build_regular(64, 24, 3, seed=seed)
    e = generate_gaussian_sparse(64, k, rng)
    st_, worst = _decode_tracking(g, e)
    assert worst <= 1e-9
    x = e.to_dense()
    for n, v in st_.identified.items():
        assert abs(v - x[n]) <= 1e-9


def test_success_matches_ground_truth_across_seeds():
    violations = 0
    successes = 0
    for seed in range(300):
        rng = np.random.default_rng(seed)
        g = build_regular(120, 40, 3, seed=seed)
        e = generate_gaussian_sparse(120, int(rng.integers(1, 20)), rng)
        st_ = decoder.init(g, measure(g, e))
        if run_to_convergence(st_).outcome == Outcome.SUCCESS:
            successes += 1
            x = e.to_dense()
            violations += int(np.max(np.abs(extract_signal(st_).to_dense() - x)) > 1e-9)
    assert successes > 50
    assert violations == 0


def test_rule_order_independence():
    """Outcome does not depend on running the equal-pair rule before the
    degree-one rule, over 1000 seeded girth-6 instances with N <= 64."""
    differ = []
    done = 0
    seed = -1
    while done < 1000:
        seed += 1
        rng = np.random.default_rng(seed)
        n = int(rng.integers(8, 65))
        m = int(rng.integers(max(4, n // 4), n // 2 + 4))
        try:
            g = build_regular(n, m, int(rng.integers(2, 4)), seed=seed)
        except ConstructionInfeasible:
            continue
        done += 1
        e = generate_gaussian_sparse(n, int(rng.integers(0, max(1, n // 4))), rng)
        s = measure(g, e)
        a = run_to_convergence(decoder.init(g, s), order=("zero", "degree_one", "equal_pair"))
        b = run_to_convergence(decoder.init(g, s), order=("zero", "equal_pair", "degree_one"))
        if a.outcome != b.outcome or a.unidentified_count != b.unidentified_count:
            differ.append(seed)
    assert differ == []


def test_unstructured_graphs_never_verify_wrongly():
    rng = np.random.default_rng(99)
    for _ in range(500):
        g = random_tiny_graph(rng)
        e = generate_gaussian_sparse(g.n_vars, int(rng.integers(0, 3)), rng)
        st_ = decoder.init(g, measure(g, e))
        run_to_convergence(st_)
        x = e.to_dense()
        assert all(abs(v - x[n]) <= 1e-9 for n, v in st_.identified.items())
        assert st_.conflicts == 0
