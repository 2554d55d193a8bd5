"""Vector field flows, gate detection, admissibility."""

import itertools
import math

import pytest

from parimp.errors import NotWellBehaved, Stalled
from parimp.fixsplit import split_fixed_points
from parimp.gateflow import (GateVector, check_admissible, default_r0,
                             detect_gates, detect_gates_auto,
                             enumerate_admissible, flow, seeds)
from parimp.mapcore import parse_map


def split_locs(expr):
    return split_fixed_points(parse_map(expr), 0, 0.5, 1).locations()


def test_flow_parabolic_both_limits_zero():
    tr = flow(parse_map("z + z^2"), 0.0, 0.1, 0.25)
    assert abs(tr.forward_limit) < 1e-5
    assert abs(tr.backward_limit) < 1e-5
    ts = [t for t, _ in tr.samples]
    assert ts == sorted(ts)


def test_flow_star_family_hits_both_fixed_points():
    # phi=0 is a linearized center for this family (see ledger); use 0.1
    tr = flow(parse_map("z + z^2 - 0.0001"), 0.1, 0.1, 0.2)
    got = sorted([tr.forward_limit.real, tr.backward_limit.real])
    assert got[0] == pytest.approx(-0.01, abs=1e-6)
    assert got[1] == pytest.approx(0.01, abs=1e-6)


def test_flow_identity_field_stalls():
    # identity map: every point is fixed, the field vanishes identically
    with pytest.raises(Stalled):
        flow(parse_map("z"), 0.0, 0.1, 0.2)


def test_flow_closed_orbit_detected():
    with pytest.raises(Stalled):
        flow(parse_map("z + z^2 - 0.0001"), 0.0, 0.04, 0.04)


def test_flow_reversal_swaps_limits():
    m = parse_map("z + z^2 - 0.0001")
    a = flow(m, 0.1, 0.1, 0.2)
    b = flow(m, 0.1, 0.1, 0.2, reverse=True)
    assert a.forward_limit == pytest.approx(b.backward_limit, abs=1e-6)
    assert a.backward_limit == pytest.approx(b.forward_limit, abs=1e-6)


def test_seed_layout():
    sd = seeds(3, 0.3)
    assert sd[(1, "-")] == pytest.approx(0.3)
    assert sd[(1, "+")] == pytest.approx(0.3 * complex(math.cos(math.pi / 3),
                                                       math.sin(math.pi / 3)))
    assert len(sd) == 6


def test_detect_star_all_scales():
    for k in (2, 4, 6):
        expr = f"z + z^2 - 1e-{k}"
        det = detect_gates_auto(parse_map(expr), 1, split_locs(expr))
        assert str(det.gate) == "(1)"
        assert det.well_behaved


def test_detect_parabolic_closed():
    det = detect_gates_auto(parse_map("z + z^2"), 1, split_locs("z + z^2"))
    assert det.gate.entries == (None,)


def test_detect_oudkerk_bijective():
    det = detect_gates_auto(parse_map("z + z^4 + 0.0001"), 3,
                            split_locs("z + z^4 + 0.0001"))
    assert det.gate.is_bijective()
    assert check_admissible(det.gate)[0]


def test_detect_phi_stability():
    # spec invariant: hints -0.2, 0, 0.2 all land on GateVector (1)
    expr = "z + z^2 - 0.0001"
    locs = split_locs(expr)
    for hint in (-0.2, 0.0, 0.2):
        det = detect_gates_auto(parse_map(expr), 1, locs, phi_hint=hint)
        assert str(det.gate) == "(1)"


def test_detect_leaned_tangential_gate_open():
    m = parse_map("l*z + z^2", parameter="l", parameter_value=1 + 0.01j)
    rep = split_fixed_points(m, 0, 0.4, 1)
    det = detect_gates_auto(m, 1, rep.locations())
    assert str(det.gate) == "(1)"


def test_detection_report_format():
    expr = "z + z^2 - 0.0001"
    det = detect_gates_auto(parse_map(expr), 1, split_locs(expr))
    text = det.report()
    assert "gate_vector = (1)" in text
    assert "well_behaved = true" in text


def test_admissible_examples():
    ok, _ = check_admissible(GateVector(3, (2, 1, None)))
    assert ok
    ok, _ = check_admissible(GateVector(5, (2, 3, 1, 4, 5)))
    assert ok
    ok, why = check_admissible(GateVector(3, (3, 1, None)))
    assert not ok and why


def test_admissible_brute_force_oracle():
    # independent oracle: segment intersection with float coordinates
    def geom_crossing(gv):
        pts = {}
        n = 2 * gv.nu
        for k in range(1, gv.nu + 1):
            pts[("-", k)] = complex(math.cos(2 * math.pi * (2 * (k - 1)) / n),
                                    math.sin(2 * math.pi * (2 * (k - 1)) / n))
            pts[("+", k)] = complex(math.cos(2 * math.pi * (2 * k - 1) / n),
                                    math.sin(2 * math.pi * (2 * k - 1) / n))
        segs = [(pts[("+", k)], pts[("-", gv.g(k))])
                for k in range(1, gv.nu + 1) if gv.g(k) is not None]

        def side(a, b, c):
            v = (b - a).conjugate() * (c - a)
            return 1 if v.imag > 0 else -1

        for (a, b), (c, d) in itertools.combinations(segs, 2):
            if side(a, b, c) != side(a, b, d) and side(c, d, a) != side(c, d, b):
                return True
        return False

    for nu in (1, 2, 3):
        for entries in itertools.product([None] + list(range(1, nu + 1)),
                                         repeat=nu):
            open_ = [e for e in entries if e is not None]
            if len(set(open_)) != len(open_):
                continue
            gv = GateVector(nu, entries)
            assert check_admissible(gv)[0] == (not geom_crossing(gv))


def test_enumerate_counts_and_goldens():
    vs1 = enumerate_admissible(1)
    assert sorted(str(v) for v in vs1) == ["(*)", "(1)"]
    vs2 = enumerate_admissible(2)
    assert len(vs2) == 7  # frozen golden value (brute force)
    assert all(check_admissible(v)[0] for v in vs2)


def test_enumerate_rotation_closure():
    for nu in (2, 3):
        vs = {v.entries for v in enumerate_admissible(nu)}
        for entries in vs:
            rot = tuple(
                None if entries[(k - 2) % nu] is None
                else entries[(k - 2) % nu] % nu + 1
                for k in range(1, nu + 1))
            assert rot in vs


def test_detect_rejects_uncentered():
    locs = [2.0 + 0j, 2.02 + 0j]
    from parimp.errors import CoordinateMismatch
    with pytest.raises(CoordinateMismatch):
        detect_gates(parse_map("z + z^2"), 1, 0.1, 0.1, locs)
