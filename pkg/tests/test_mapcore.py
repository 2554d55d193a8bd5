"""Map algebra, parser and root finder tests."""

import cmath
import math

import numpy as np
import pytest

from parimp.errors import DegreeGuard, Overflow, ParseError, PoleHit
from parimp.mapcore import (MapExpr, Poly, compose_map, derivative, eval_deriv,
                            eval_map, fixed_point_poly, iterate, parse_map,
                            parse_value, roots)


def test_eval_examples():
    assert eval_map(parse_map("z^2"), 1 + 1j) == pytest.approx(2j)
    assert eval_map(parse_map("z + z^4 + 0.01"), 0) == pytest.approx(0.01)
    assert eval_map(parse_map("(1+0i)*z + z^2"), 0.5) == pytest.approx(0.75)


def test_eval_pole():
    m = parse_map("(z^2+1)/z")
    with pytest.raises(PoleHit):
        eval_map(m, 0)


def test_derivative_examples():
    d = derivative(parse_map("z^2"))
    assert d.numerator.coeffs == (0j, 2 + 0j)
    d = derivative(parse_map("z + z^4"))
    assert d.numerator.coeffs == (1 + 0j, 0j, 0j, 4 + 0j)
    lam = 0.3 + 0.1j
    d = derivative(parse_map(f"({lam.real}+{lam.imag}i)*z + z^2"))
    assert d.numerator.coeffs[0] == pytest.approx(lam)
    assert d.numerator.coeffs[1] == pytest.approx(2)


def test_iterate_examples():
    assert iterate(parse_map("z^2"), 2, 3) == pytest.approx(256)
    assert iterate(parse_map("z + z^2"), -1, 2) == pytest.approx(0)
    lam = cmath.exp(2j * cmath.pi / 3)
    m = parse_map("l*z + z^2", parameter="l", parameter_value=lam)
    assert iterate(m, 0, 3) == pytest.approx(0)


def test_iterate_overflow():
    with pytest.raises(Overflow):
        iterate(parse_map("z^2"), 3, 12)


def test_fixed_point_poly_examples():
    lam = 0.25 + 0.5j
    m = parse_map("l*z + z^2", parameter="l", parameter_value=lam)
    p = fixed_point_poly(m, 1)
    assert p.coeffs[1] == pytest.approx(lam - 1)
    assert p.coeffs[2] == pytest.approx(1)

    p = fixed_point_poly(parse_map("z + z^4 + 0.25"), 1)
    assert p.coeffs == ((0.25 + 0j), 0j, 0j, 0j, (1 + 0j))

    p = fixed_point_poly(parse_map("z^2"), 2)
    assert p.coeffs == (0j, (-1 + 0j), 0j, 0j, (1 + 0j))


def test_fixed_point_poly_guard():
    with pytest.raises(DegreeGuard):
        fixed_point_poly(parse_map("z^4"), 4)  # 4^4 = 256 > 64


def test_roots_quadratic_oracle():
    # oracle: quadratic formula for z^2 + (lam-1) z
    lam = 0.9
    got = sorted(roots(Poly((0, lam - 1, 1))), key=lambda t: t[0].real)
    assert got[0][0] == pytest.approx(0) and got[0][1] == 1
    assert got[1][0] == pytest.approx(1 - lam) and got[1][1] == 1


def test_roots_quartic_oracle():
    # oracle: explicit quartic roots of z^4 = -1/16
    expected = [0.5 * cmath.exp(1j * math.pi * (2 * k + 1) / 4) for k in range(4)]
    got = [r for r, m in roots(Poly((1 / 16, 0, 0, 0, 1)))]
    assert len(got) == 4
    for e in expected:
        assert min(abs(g - e) for g in got) < 1e-10


def test_roots_double_root():
    assert roots(Poly((0, 0, 1))) == [(0j, 2)]


def test_roots_random_polys_vs_numpy():
    rng = np.random.default_rng(20240817)
    for _ in range(60):
        deg = int(rng.integers(2, 9))
        c = rng.uniform(-1, 1, deg + 1) + 1j * rng.uniform(-1, 1, deg + 1)
        while abs(c[-1]) < 0.1:
            c[-1] = rng.uniform(-1, 1) + 1j * rng.uniform(-1, 1)
        p = Poly(tuple(c))
        got = roots(p)
        assert sum(m for _, m in got) == deg
        scale = p.max_abs_coeff()
        assert max(abs(p(r)) for r, _ in got) <= 1e-9 * scale
        # independent oracle: companion-matrix eigenvalues
        ref = sorted(np.roots(c[::-1]), key=lambda z: (z.real, z.imag))
        flat = sorted((r for r, m in got for _ in range(m)),
                      key=lambda z: (z.real, z.imag))
        for a, b in zip(flat, ref):
            assert abs(a - b) < 1e-6


def test_chain_rule_invariant():
    rng = np.random.default_rng(7)
    for _ in range(20):
        deg = int(rng.integers(2, 4))
        c = rng.uniform(-0.5, 0.5, deg + 1) + 1j * rng.uniform(-0.5, 0.5, deg + 1)
        c[-1] = 1.0
        m = MapExpr(Poly(tuple(c)))
        l = int(rng.integers(1, 6))
        if deg ** l > 64:
            continue
        z = complex(rng.uniform(-0.3, 0.3), rng.uniform(-0.3, 0.3))
        comp = compose_map(m, l)
        sym = eval_deriv(comp, z)
        prod = 1.0 + 0j
        w = z
        for _ in range(l):
            prod *= eval_deriv(m, w)
            w = eval_map(m, w)
        assert abs(sym - prod) <= 1e-9 * max(1.0, abs(prod))


def test_compose_associativity():
    rng = np.random.default_rng(11)
    for _ in range(20):
        f = Poly(tuple(rng.uniform(-0.5, 0.5, 3) + 1j * rng.uniform(-0.5, 0.5, 3)))
        g = Poly(tuple(rng.uniform(-0.5, 0.5, 3) + 1j * rng.uniform(-0.5, 0.5, 3)))
        z = complex(rng.uniform(-1, 1), rng.uniform(-1, 1))
        direct = f(g(z))
        composed = f.compose(g)(z)
        assert abs(direct - composed) <= 1e-10 * max(1.0, abs(direct))


def test_parser_reports_column():
    with pytest.raises(ParseError) as exc:
        parse_map("z + q")
    assert exc.value.column == 5
    with pytest.raises(ParseError) as exc:
        parse_map("z + (z^2")
    assert exc.value.column == 9


def test_parser_forms():
    m = parse_map("-z + 2*z^2")
    assert m.numerator.coeffs == (0j, (-1 + 0j), (2 + 0j))
    m = parse_map("(1+2i) + z/2")
    assert m.numerator(0) == pytest.approx(1 + 2j)
    m = parse_map("z^2 - 1e-4")
    assert m.numerator.coeffs[0] == pytest.approx(-1e-4)


def test_parse_value_with_binding():
    assert parse_value("1 - 1/n", "n", 4) == pytest.approx(0.75)
    assert parse_value("1 + i/n", "n", 10) == pytest.approx(1 + 0.1j)
