import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import A, B, C, graphs, random_graph
from oracles import all_bipartition_cuts, best_partition_value, brute_value
from coalition_forge.errors import NoFeasibleSampleError
from coalition_forge.gcsq import GcsqOptions, replay_trace, run_gcsq, select_split
from coalition_forge.graph import WeightedGraph, canonical_structure, connected_components, structure_value
from coalition_forge.qubo import build_split_qubo
from coalition_forge.solvers import AnnealParams, SampleSet, exhaustive_sampler

TOL = 1e-9
EXACT = GcsqOptions(sampler="exhaustive")
QUICK_ANNEAL = AnnealParams(num_reads=100, sweeps_per_read=300, seed=4)


def _split_and_sample(g, c):
    q, vm = build_split_qubo(g, c)
    return exhaustive_sampler(q), vm


def test_select_split_improving():
    g = WeightedGraph(2, [(0, 1, -3.0)])
    s, vm = _split_and_sample(g, {0, 1})
    d = select_split(s, vm, {0, 1}, EXACT)
    assert d.accepted and d.reason == "improving"
    assert d.cut_value == pytest.approx(-3.0)
    assert {d.side_a, d.side_b} == {frozenset({0}), frozenset({1})}


def test_select_split_positive_weights_no_split():
    g = WeightedGraph(4, [(0, 1, 1.0), (1, 2, 0.2), (2, 3, 3.0), (0, 3, 0.5)])
    s, vm = _split_and_sample(g, range(4))
    d = select_split(s, vm, range(4), GcsqOptions(sampler="exhaustive", kmax=5))
    assert not d.accepted and d.reason == "none"


def test_select_split_forced_on_positive_path():
    weights = [0.9, 0.4, 0.7, 0.15, 0.8]
    g = WeightedGraph(6, [(i, i + 1, w) for i, w in enumerate(weights)])
    s, vm = _split_and_sample(g, range(6))
    d = select_split(s, vm, range(6), GcsqOptions(sampler="exhaustive", kmax=5))
    assert d.accepted and d.reason == "forcedBySize"
    expect = min(cut for _, cut in all_bipartition_cuts(g.edges, range(6), proper_only=True))
    assert d.cut_value == pytest.approx(expect) == pytest.approx(0.15)
    assert {d.side_a, d.side_b} == {frozenset(range(4)), frozenset({4, 5})}


def test_select_split_forced_needs_a_proper_sample():
    g = WeightedGraph(3, [(0, 1, 1.0), (1, 2, 1.0)])
    q, vm = build_split_qubo(g, range(3))
    only_empty = SampleSet.from_bits(q, np.zeros((5, q.num_vars), dtype=np.uint8))
    with pytest.raises(NoFeasibleSampleError):
        select_split(only_empty, vm, range(3), GcsqOptions(kmax=2))
    d = select_split(only_empty, vm, range(3), GcsqOptions())
    assert not d.accepted


def test_select_split_frequent_selection():
    g = WeightedGraph(3, [(0, 1, -1.0), (1, 2, -2.0)])
    q, vm = build_split_qubo(g, range(3))
    bits = np.array([[0, 1]] * 7 + [[1, 0]] * 2 + [[0, 0]] * 9, dtype=np.uint8)
    s = SampleSet.from_bits(q, bits)
    lowest = select_split(s, vm, range(3), GcsqOptions(selection="lowest"))
    frequent = select_split(s, vm, range(3), GcsqOptions(selection="frequent"))
    # moving node 1 cuts both edges (-3); moving node 2 cuts only (1, 2) (-2)
    assert lowest.cut_value == pytest.approx(-3.0)
    # the all-zero sample is most frequent overall but is not a proper split
    assert frequent.cut_value == pytest.approx(-2.0)


def test_triangle_matches_oracle(triangle):
    result = run_gcsq(triangle, EXACT)
    assert canonical_structure(result.structure) == [[A, B], [C]]
    assert result.value == pytest.approx(2.0)


def test_nonnegative_weights_give_components():
    g = WeightedGraph(6, [(0, 1, 1.0), (1, 2, 0.0), (3, 4, 2.0)])
    result = run_gcsq(g, EXACT)
    assert result.structure == connected_components(g)


def test_k6_with_kmax_five():
    g = WeightedGraph(6, [(u, v, 1.0) for u in range(6) for v in range(u + 1, 6)])
    result = run_gcsq(g, GcsqOptions(sampler="exhaustive", kmax=5))
    assert all(len(c) <= 5 for c in result.structure)
    feasible_best = best_partition_value(6, g.edges, kmax=5)
    assert feasible_best == 10
    assert result.value >= 10 - TOL
    assert result.trace[0].decision.reason == "forcedBySize"


def test_disconnected_input_is_presplit():
    g = WeightedGraph(5, [(0, 1, -1.0), (3, 4, 2.0)])
    result = run_gcsq(g, EXACT)
    assert canonical_structure(result.structure) == [[0], [1], [2], [3, 4]]


def test_single_node():
    result = run_gcsq(WeightedGraph(1), EXACT)
    assert result.structure == [frozenset({0})] and result.trace == []


def test_result_json_shape(triangle):
    doc = run_gcsq(triangle, EXACT).to_dict()
    assert doc["value"] == pytest.approx(2.0)
    assert doc["coalitions"] == [[0, 1], [2]]
    assert {"coalition", "accepted", "reason", "seconds", "qubo_size"} <= set(doc["trace"][0])


@settings(max_examples=40, deadline=None)
@given(graphs(min_nodes=1, max_nodes=8), st.sampled_from([None, 1, 2, 3]))
def test_exhaustive_gcsq_properties(g, kmax):
    result = run_gcsq(g, GcsqOptions(sampler="exhaustive", kmax=kmax))
    if kmax:
        assert all(len(c) <= kmax for c in result.structure)
    assert replay_trace(g, result.trace) == result.structure
    if kmax is None:
        base = structure_value(g, connected_components(g))
        assert base - TOL <= result.value <= best_partition_value(g.n, g.edges) + TOL
        # every accepted split strictly raises the structure value
        value = base
        for entry in result.trace:
            if entry.decision.accepted:
                new = value - entry.decision.cut_value
                assert entry.decision.cut_value < 0 and new > value
                value = new
        assert value == pytest.approx(result.value, abs=1e-6)


def test_decompose_sides_is_value_neutral():
    for seed in range(10):
        rng = np.random.default_rng(seed)
        g = random_graph(rng, 8, density=0.4)
        on = run_gcsq(g, GcsqOptions(sampler="exhaustive"))
        off = run_gcsq(g, GcsqOptions(sampler="exhaustive", decompose_sides=False))
        assert on.value == pytest.approx(off.value, abs=1e-9)
        assert replay_trace(g, off.trace, decompose_sides=False) == off.structure


def test_anneal_gcsq_deterministic_and_feasible(rng):
    g = random_graph(rng, 14, density=0.5)
    opts = GcsqOptions(kmax=4, anneal=QUICK_ANNEAL)
    r1, r2 = run_gcsq(g, opts), run_gcsq(g, opts)
    assert r1.structure == r2.structure
    assert all(len(c) <= 4 for c in r1.structure)


def test_options_validation():
    with pytest.raises(ValueError):
        GcsqOptions(kmax=0)
    with pytest.raises(ValueError):
        GcsqOptions(selection="best")
    with pytest.raises(ValueError):
        GcsqOptions(sampler="qpu")


def test_fallback_to_exhaustive_when_anneal_misses(monkeypatch):
    import coalition_forge.gcsq as gcsq_mod

    class Empty:
        name = "anneal"

        def sample(self, q):
            return SampleSet.from_bits(q, np.zeros((3, q.num_vars), dtype=np.uint8))

    monkeypatch.setattr(gcsq_mod, "_sampler_for", lambda c, opts: Empty())
    g = WeightedGraph(3, [(0, 1, 1.0), (1, 2, 1.0)])
    result = run_gcsq(g, GcsqOptions(kmax=2))
    assert result.trace[0].sampler == "exhaustive"
    assert all(len(c) <= 2 for c in result.structure)
    with pytest.raises(NoFeasibleSampleError, match=r"\[0, 1, 2\]"):
        run_gcsq(g, GcsqOptions(kmax=2, fallback=False))
