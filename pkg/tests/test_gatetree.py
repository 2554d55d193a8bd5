"""Tree construction, edge dynamics, marked edges, predictions."""

import random

import pytest

from parimp.errors import ClosedGate, IndeterminateSum, InvalidCenter
from parimp.gateflow import GateVector, enumerate_admissible
from parimp.gatetree import (GateTree, MarkMode, Orientation, Tendency,
                             TendencyAssignment, build_tree, mark_edges,
                             predict, run_oudkerk, tau_tendency)

T = Tendency
P, M, B = T.PLUS_INF, T.MINUS_INF, T.BOUNDED


def bijective_vectors(nu):
    return [v for v in enumerate_admissible(nu) if v.is_bijective()]


def all_valid_tendencies(nvert):
    import itertools
    for combo in itertools.product((P, M, B), repeat=nvert):
        has_p = P in combo
        has_m = M in combo
        if has_p == has_m:
            yield TendencyAssignment(combo)


def test_build_tree_nu1():
    t = build_tree(GateVector(1, (1,)))
    assert len(t.vertices) == 2 and len(t.edges) == 1
    assert t.edges[0].endpoints == (0, 1)
    assert t.orientation == (Orientation.POSITIVE_CYCLIC,
                             Orientation.NEGATIVE_CYCLIC)


def test_build_tree_star():
    t = build_tree(GateVector(3, (1, 2, 3)))
    # three disjoint short chords cut off one leaf face each
    valences = sorted(t.valence(v) for v in t.vertices)
    assert valences == [1, 1, 1, 3]
    center = max(t.vertices, key=t.valence)
    assert t.orientation[center] is Orientation.NEGATIVE_CYCLIC
    assert all(center in t.edge(k).endpoints for k in (1, 2, 3))


def test_build_tree_fig6_golden():
    t = build_tree(GateVector(5, (2, 3, 1, 4, 5)))
    assert t.vertex_arcs == ((0, 2, 4), (1,), (3,), (5, 7, 9), (6,), (8,))
    assert [(e.gate, e.upper, e.lower) for e in t.edges] == [
        (1, 0, 1), (2, 0, 2), (3, 0, 3), (4, 4, 3), (5, 5, 3)]
    assert [o.value for o in t.orientation] == ["P", "N", "N", "N", "P", "P"]
    # two valence-3 vertices: gates {1,2,3} and {3,4,5}
    assert set(t.cyclic_edges[0]) == {1, 2, 3}
    assert set(t.cyclic_edges[3]) == {3, 4, 5}


def test_build_tree_rejects_closed_and_inadmissible():
    with pytest.raises(ClosedGate):
        build_tree(GateVector(3, (2, 1, None)))
    from parimp.errors import NotAdmissible
    with pytest.raises(NotAdmissible):
        build_tree(GateVector(3, (3, 1, 2)))


def test_tau_tendency_examples():
    t1 = build_tree(GateVector(1, (1,)))
    assert tau_tendency(t1, TendencyAssignment((M, P)), [1]) is M
    assert tau_tendency(t1, TendencyAssignment((B, B)), [1]) is B
    t3 = build_tree(GateVector(3, (1, 2, 3)))
    # upper set of a gate containing both signs
    ta = TendencyAssignment((P, M, P, M))
    center = max(t3.vertices, key=t3.valence)
    wide = [k for k in (1, 2, 3)
            if len(t3.upper(k)) > 1 or center in t3.upper(k)]
    mixed = TendencyAssignment((P, M, M, P))
    got = {tau_tendency(t3, mixed, [k, (k % 3) + 1]) for k in (1, 2, 3)}
    assert "Indeterminate" in got


def test_run_star_nu1():
    t = build_tree(GateVector(1, (1,)))
    run = run_oudkerk(t, TendencyAssignment((M, P)), 1)
    assert run.outcome == "infinite"
    assert (run.preperiod, run.period, run.center_vertex) == (0, 1, 1)
    assert set(run.sign_trace) == {-1}


def test_run_bounded_nu1():
    t = build_tree(GateVector(1, (1,)))
    run = run_oudkerk(t, TendencyAssignment((B, B)), 1)
    assert run.outcome == "finite" and run.length == 1


def test_run_star_nu3_all_gates():
    t = build_tree(GateVector(3, (1, 2, 3)))
    center = max(t.vertices, key=t.valence)
    vals = [P if v == center else M for v in t.vertices]
    ta = TendencyAssignment(tuple(vals))
    for k in (1, 2, 3):
        run = run_oudkerk(t, ta, k)
        assert run.outcome == "infinite"
        assert run.center_vertex == center
        assert run.period == 3


def test_predict_examples():
    t1 = build_tree(GateVector(1, (1,)))
    pred = predict(t1, TendencyAssignment((M, P)))
    assert pred.avoided_basins == frozenset({1})
    assert pred.julia_converges and pred.ray_uniform[1]

    pred = predict(t1, TendencyAssignment((B, B)))
    assert pred.invaded_basins == frozenset({1})
    assert not pred.julia_converges and not pred.ray_uniform[1]


def test_predict_balanced_fixture_indeterminate():
    # star tree, two leaves PlusInf, one leaf MinusInf, center MinusInf: the
    # MinusInf leaf's walk mixes both signs at its second step (see ledger)
    t = build_tree(GateVector(3, (1, 2, 3)))
    center = max(t.vertices, key=t.valence)
    leaves = [v for v in t.vertices if v != center]
    vals = [None] * 4
    vals[center] = M
    vals[leaves[0]] = P
    vals[leaves[1]] = P
    vals[leaves[2]] = M
    with pytest.raises(IndeterminateSum) as exc:
        predict(t, TendencyAssignment(tuple(vals)))
    m_leaf_gate = t.cyclic_edges[leaves[2]][0]
    assert exc.value.gate == m_leaf_gate


def test_predict_with_refiner_resolves():
    # a refiner that calls mixed pairs bounded turns the fixture finite
    t = build_tree(GateVector(3, (1, 2, 3)))
    center = max(t.vertices, key=t.valence)
    leaves = [v for v in t.vertices if v != center]
    vals = [None] * 4
    vals[center] = M
    vals[leaves[0]] = P
    vals[leaves[1]] = P
    vals[leaves[2]] = M
    pred = predict(t, TendencyAssignment(tuple(vals)),
                   refiner=lambda coeffs: Tendency.BOUNDED)
    assert pred.invaded_basins
    assert not pred.julia_converges


def test_sum_rule_rejected():
    with pytest.raises(Exception):
        TendencyAssignment((P, P))
    with pytest.raises(Exception):
        TendencyAssignment((P, B, B))
    TendencyAssignment((B, B, B))  # fine


def test_prop31_mini_suite():
    # every determinate infinite run: preperiodic, periodic edges share a
    # vertex whose valence is the period, sequential in O(v), center PlusInf
    for nu in (1, 2, 3):
        for gv in bijective_vectors(nu):
            t = build_tree(gv)
            for ta in all_valid_tendencies(nu + 1):
                for k in range(1, nu + 1):
                    try:
                        run = run_oudkerk(t, ta, k)
                    except IndeterminateSum:
                        continue
                    if run.outcome != "infinite":
                        continue
                    m, p = run.preperiod, run.period
                    seq = run.sequence
                    for j in range(len(seq) - m - p):
                        assert seq[m + p + j] == seq[m + j]
                    period_gates = set(seq[m:m + p])
                    v = run.center_vertex
                    assert all(v in t.edge(g).endpoints for g in period_gates)
                    assert t.valence(v) == p
                    assert ta.of(v) is P
                    # sequential in the orientation of v
                    cyc = t.cyclic_edges[v]
                    block = list(seq[m:m + p])
                    i = cyc.index(block[0])
                    rotated = [cyc[(i + j) % p] for j in range(p)]
                    assert block == rotated or block == [cyc[(i - j) % p]
                                                         for j in range(p)]


def test_run_determinism():
    t = build_tree(GateVector(3, (1, 2, 3)))
    center = max(t.vertices, key=t.valence)
    ta = TendencyAssignment(tuple(P if v == center else M for v in t.vertices))
    runs = [predict(t, ta) for _ in range(3)]
    assert runs[0] == runs[1] == runs[2]


def test_mark_edges_single_leaf():
    t = build_tree(GateVector(1, (1,)))
    marked = mark_edges(t, 0, {1}, MarkMode.ATTRACTING_CENTER)
    assert marked == {1}
    marked = mark_edges(t, 0, {1}, MarkMode.REPELLING_CENTER)
    assert marked == {1}


def test_mark_edges_invalid_center():
    t = build_tree(GateVector(1, (1,)))
    with pytest.raises(InvalidCenter):
        mark_edges(t, 0, {0, 1}, MarkMode.ATTRACTING_CENTER)


def test_mark_edges_fig10_golden():
    t = build_tree(GateVector(6, (2, 1, 3, 5, 4, 6)))
    marked = mark_edges(t, 1, {0, 3, 4, 5, 6}, MarkMode.REPELLING_CENTER)
    assert marked == {1, 3, 4, 5, 6}
    assert len(marked) == 5


def test_mark_edges_count_identity_random():
    rng = random.Random(2718)
    vectors = {nu: bijective_vectors(nu) for nu in range(2, 7)}
    for _ in range(1000):
        nu = rng.randint(2, 6)
        gv = rng.choice(vectors[nu])
        t = build_tree(gv)
        v0 = rng.randrange(nu + 1)
        rest = [v for v in t.vertices if v != v0]
        vs = set(rng.sample(rest, rng.randint(1, len(rest))))
        mode = rng.choice(list(MarkMode))
        assert len(mark_edges(t, v0, vs, mode)) == len(vs)


def test_serialization_formats():
    t = build_tree(GateVector(1, (1,)))
    ta = TendencyAssignment((M, P))
    text = t.serialize(ta)
    assert "vertex 0 orientation P tendency -" in text
    assert "edge 1 0 1 gate 1" in text
    run = run_oudkerk(t, ta, 1)
    assert run.serialize() == "run k=1 outcome=infinite 0 1 1"
    run = run_oudkerk(t, TendencyAssignment((B, B)), 1)
    assert run.serialize() == "run k=1 outcome=finite 1"
