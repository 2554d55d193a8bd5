"""Complex polynomial / rational map arithmetic and root finding.

Polynomials are immutable tuples of complex coefficients in ascending
degree order.  A map is a pair numerator/denominator (denominator == (1,)
for polynomial maps).  Everything downstream - fixed point splitting, gate
flows, Julia grids, external rays - evaluates through this module.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field

from .errors import (DegreeGuard, NoConvergence, Overflow, ParseError,
                     PoleHit)
from .numcfg import DEFAULT, NumericConfig

_ZERO_TOL = 1e-300


# ---------------------------------------------------------------------------
# polynomial primitives (coefficients ascending: p[k] multiplies z^k)
# ---------------------------------------------------------------------------

def ptrim(coeffs):
    """Drop (exactly) zero leading coefficients; keep at least the constant."""
    c = list(coeffs)
    while len(c) > 1 and c[-1] == 0:
        c.pop()
    return tuple(c)


def peval(coeffs, z):
    """Horner evaluation."""
    acc = 0j
    for a in reversed(coeffs):
        acc = acc * z + a
    return acc


def padd(a, b):
    n = max(len(a), len(b))
    return ptrim(tuple((a[k] if k < len(a) else 0) + (b[k] if k < len(b) else 0)
                       for k in range(n)))


def pscale(a, s):
    return ptrim(tuple(s * x for x in a))


def pmul(a, b):
    out = [0j] * (len(a) + len(b) - 1)
    for i, x in enumerate(a):
        if x == 0:
            continue
        for j, y in enumerate(b):
            out[i + j] += x * y
    return ptrim(tuple(out))


def pcompose(outer, inner):
    """outer(inner(z)) by Horner over polynomials."""
    acc = (0j,)
    for a in reversed(outer):
        acc = padd(pmul(acc, inner), (a,))
    return acc


def pderiv(a):
    if len(a) == 1:
        return (0j,)
    return ptrim(tuple(k * a[k] for k in range(1, len(a))))


@dataclass(frozen=True)
class Poly:
    """Polynomial with complex coefficients, degree-ascending."""

    coeffs: tuple = ((0j),)

    def __post_init__(self):
        c = ptrim(tuple(complex(x) for x in self.coeffs))
        object.__setattr__(self, "coeffs", c)
        for x in c:
            if not (math.isfinite(x.real) and math.isfinite(x.imag)):
                raise Overflow("non-finite polynomial coefficient")

    @property
    def degree(self):
        return len(self.coeffs) - 1

    def __call__(self, z):
        return peval(self.coeffs, z)

    def derivative(self):
        return Poly(pderiv(self.coeffs))

    def compose(self, other: "Poly") -> "Poly":
        return Poly(pcompose(self.coeffs, other.coeffs))

    def is_zero(self):
        return self.coeffs == (0j,)

    def max_abs_coeff(self):
        return max(abs(c) for c in self.coeffs)


ONE = Poly((1,))


# ---------------------------------------------------------------------------
# rational maps
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class MapExpr:
    """Rational map numerator/denominator; denominator (1,) for polynomials."""

    numerator: Poly
    denominator: Poly = ONE
    source: str = field(default="", compare=False)

    def __post_init__(self):
        if self.denominator.is_zero():
            raise PoleHit("identically zero denominator")

    @property
    def degree(self):
        return max(self.numerator.degree, self.denominator.degree)

    def is_polynomial(self):
        return self.denominator.degree == 0

    def poly(self) -> Poly:
        """The map as a Poly (requires polynomial map)."""
        if not self.is_polynomial():
            raise DegreeGuard("map is not a polynomial")
        d = self.denominator.coeffs[0]
        return Poly(pscale(self.numerator.coeffs, 1.0 / d))

    def __str__(self):
        return self.source or f"({self.numerator.coeffs})/({self.denominator.coeffs})"


def validate_map(m: MapExpr, cfg: NumericConfig = DEFAULT) -> MapExpr:
    """Check MapExpr invariants: degree >= 1, numerator/denominator coprime."""
    if m.degree < 1:
        raise DegreeGuard("map must have degree >= 1")
    if m.denominator.degree > 0:
        for r, _mult in roots(m.denominator, cfg):
            if abs(m.numerator(r)) < 1e-10 * max(1.0, m.numerator.max_abs_coeff()):
                raise DegreeGuard(
                    f"numerator and denominator share a root near {r:.6g}")
    return m


def eval_map(m: MapExpr, z: complex, cfg: NumericConfig = DEFAULT) -> complex:
    """f(z) with pole detection."""
    den = m.denominator(z)
    if abs(den) < cfg.pole_tol:
        raise PoleHit(f"denominator vanished at {z!r}")
    return m.numerator(z) / den


def eval_deriv(m: MapExpr, z: complex, cfg: NumericConfig = DEFAULT) -> complex:
    """f'(z) by the quotient rule, evaluated pointwise."""
    den = m.denominator(z)
    if abs(den) < cfg.pole_tol:
        raise PoleHit(f"denominator vanished at {z!r}")
    n, d = m.numerator, m.denominator
    return (n.derivative()(z) * den - n(z) * d.derivative()(z)) / (den * den)


def derivative(m: MapExpr, cfg: NumericConfig = DEFAULT) -> MapExpr:
    """Symbolic quotient-rule derivative, reduced to keep invariants."""
    n, d = m.numerator, m.denominator
    if m.is_polynomial():
        return MapExpr(Poly(pscale(pderiv(n.coeffs), 1.0 / d.coeffs[0])))
    num = padd(pmul(pderiv(n.coeffs), d.coeffs),
               pscale(pmul(n.coeffs, pderiv(d.coeffs)), -1))
    den = pmul(d.coeffs, d.coeffs)
    return _reduce(Poly(num), Poly(den), cfg)


def _reduce(num: Poly, den: Poly, cfg: NumericConfig) -> MapExpr:
    """Cancel shared roots (within tolerance) of a rational pair."""
    if den.degree == 0:
        return MapExpr(Poly(pscale(num.coeffs, 1.0 / den.coeffs[0])))
    scale = max(num.max_abs_coeff(), 1.0)
    for r, mult in roots(den, cfg):
        for _ in range(mult):
            if abs(num(r)) < 1e-10 * scale and num.degree > 0:
                num = _deflate(num, r)
                den = _deflate(den, r)
            else:
                break
    return MapExpr(num, den)


def _deflate(p: Poly, r: complex) -> Poly:
    """Synthetic division by (z - r)."""
    c = p.coeffs
    out = [0j] * p.degree
    acc = c[-1]
    for k in range(p.degree - 1, -1, -1):
        out[k] = acc
        acc = c[k] + acc * r
    return Poly(tuple(out))


def eval_map_array(m: MapExpr, zs, cfg: NumericConfig = DEFAULT):
    """Vectorized f over a numpy array of points (pole-guarded)."""
    import numpy as np
    zs = np.asarray(zs, dtype=complex)
    num = np.zeros_like(zs)
    for a in reversed(m.numerator.coeffs):
        num = num * zs + a
    if m.is_polynomial():
        return num / m.denominator.coeffs[0]
    den = np.zeros_like(zs)
    for a in reversed(m.denominator.coeffs):
        den = den * zs + a
    if (np.abs(den) < cfg.pole_tol).any():
        raise PoleHit("denominator vanished on an evaluation array")
    return num / den


def iterate_array(m: MapExpr, zs, l: int, cfg: NumericConfig = DEFAULT):
    """Vectorized f^l with the overflow guard."""
    import numpy as np
    w = np.asarray(zs, dtype=complex)
    for _ in range(l):
        w = eval_map_array(m, w, cfg)
        if (np.abs(w) > cfg.overflow_limit).any():
            raise Overflow("iterate exceeded the overflow guard")
    return w


def iterate(m: MapExpr, z: complex, l: int, cfg: NumericConfig = DEFAULT) -> complex:
    """f^l(z), guarding poles and overflow on every intermediate."""
    if l < 1:
        raise DegreeGuard("iterate needs l >= 1")
    w = complex(z)
    for _ in range(l):
        w = eval_map(m, w, cfg)
        if abs(w) > cfg.overflow_limit:
            raise Overflow(f"iterate exceeded modulus {cfg.overflow_limit:g}")
    return w


def compose_map(m: MapExpr, l: int, cfg: NumericConfig = DEFAULT) -> MapExpr:
    """Symbolic f^l as a rational map, with the degree guard."""
    if m.degree > 1 and m.degree ** l > cfg.degree_guard:
        raise DegreeGuard(
            f"composed degree {m.degree ** l} exceeds guard {cfg.degree_guard}")
    n, d = m.numerator, m.denominator
    for _ in range(l - 1):
        # substitute z -> n/d into m, clearing denominators
        deg = m.degree
        new_n = (0j,)
        new_d = (0j,)
        dk = [(1 + 0j,)]
        for _k in range(deg):
            dk.append(pmul(dk[-1], d.coeffs))
        for k, a in enumerate(m.numerator.coeffs):
            term = pscale(pmul(_ppow(n.coeffs, k), dk[deg - k]), a)
            new_n = padd(new_n, term)
        for k, a in enumerate(m.denominator.coeffs):
            term = pscale(pmul(_ppow(n.coeffs, k), dk[deg - k]), a)
            new_d = padd(new_d, term)
        n, d = Poly(new_n), Poly(new_d)
        if max(n.degree, d.degree) > cfg.degree_guard:
            raise DegreeGuard("composition exceeded the degree guard")
    return MapExpr(n, d)


def _ppow(a, k):
    out = (1 + 0j,)
    for _ in range(k):
        out = pmul(out, a)
    return out


def fixed_point_poly(m: MapExpr, l: int, cfg: NumericConfig = DEFAULT) -> Poly:
    """f^l(z) - z for a polynomial map, by symbolic composition."""
    if not m.is_polynomial():
        raise DegreeGuard("fixed_point_poly requires a polynomial map")
    if m.degree ** l > cfg.degree_guard and m.degree > 1:
        raise DegreeGuard(
            f"degree {m.degree}^{l} exceeds guard {cfg.degree_guard}")
    p = m.poly()
    comp = p
    for _ in range(l - 1):
        comp = p.compose(comp)
    return Poly(padd(comp.coeffs, (0j, -1 + 0j)))


# ---------------------------------------------------------------------------
# roots: Aberth-Ehrlich simultaneous iteration + Newton polish + merging
# ---------------------------------------------------------------------------

def roots(p: Poly, cfg: NumericConfig = DEFAULT):
    """All complex roots of p as [(location, multiplicity)].

    Aberth-Ehrlich from a perturbed circle of Cauchy-bound radius, Newton
    polish, then cluster merging: plain distance (root_merge_tol) plus
    Newton inclusion-disk overlap so exact multiple roots collapse despite
    float-noise scatter.
    """
    if p.degree < 1:
        raise NoConvergence("roots of a constant polynomial", None)
    c = list(p.coeffs)
    scale = max(abs(x) for x in c)

    # factor out z^k for a root cluster at exactly 0
    zero_mult = 0
    while abs(c[0]) <= _ZERO_TOL and len(c) > 1:
        c.pop(0)
        zero_mult += 1
    found = [(0j, zero_mult)] if zero_mult else []
    n = len(c) - 1
    if n == 0:
        return found

    # monic normalization
    lead = c[-1]
    mon = [x / lead for x in c]
    dmon = pderiv(tuple(mon))

    big_r = 1.0 + max(abs(x) for x in mon[:-1])
    z = [big_r * cmath.exp(2j * math.pi * (k / n) + 0.4j) for k in range(n)]

    for _ in range(cfg.root_max_iter):
        done = True
        for i in range(n):
            zi = z[i]
            pv = peval(mon, zi)
            dv = peval(dmon, zi)
            if dv == 0:
                zi += 1e-12 * (1 + abs(zi))
                pv = peval(mon, zi)
                dv = peval(dmon, zi)
                if dv == 0:
                    continue
            ratio = pv / dv
            s = 0j
            for j in range(n):
                if j != i:
                    dz = zi - z[j]
                    if dz == 0:
                        dz = 1e-14
                    s += 1.0 / dz
            denom = 1.0 - ratio * s
            if denom == 0:
                step = ratio
            else:
                step = ratio / denom
            z[i] = zi - step
            if abs(step) > 1e-14 * (1.0 + abs(zi)):
                done = False
        if done:
            break
    else:
        resid = max(abs(peval(mon, x)) for x in z) * abs(lead)
        if resid > cfg.residual_factor * scale * 1e3:
            raise NoConvergence(
                f"Aberth iteration stalled, best residual {resid:.3e}", resid)

    # Newton polish (helps simple roots; harmless inside noise clusters)
    for i in range(n):
        for _ in range(3):
            pv = peval(mon, z[i])
            dv = peval(dmon, z[i])
            if dv == 0 or abs(pv) == 0:
                break
            z[i] = z[i] - pv / dv

    merged = _merge_clusters(z, mon, dmon, cfg)
    out = found + [(loc, mult) for loc, mult in merged]

    worst = max(abs(p(loc)) for loc, _ in out)
    if worst > cfg.residual_factor * scale:
        raise NoConvergence(
            f"root residual {worst:.3e} exceeds {cfg.residual_factor * scale:.3e}",
            worst)
    return out


def _merge_clusters(z, mon, dmon, cfg):
    """Union-find merge by distance and Newton inclusion-disk overlap."""
    n = len(z)
    deg = n
    radii = []
    for zi in z:
        dv = peval(dmon, zi)
        if dv == 0:
            radii.append(2e-3)
        else:
            radii.append(min(deg * abs(peval(mon, zi) / dv), 2e-3))
    parent = list(range(n))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i in range(n):
        for j in range(i + 1, n):
            d = abs(z[i] - z[j])
            if d <= max(cfg.root_merge_tol, 4.0 * (radii[i] + radii[j])):
                parent[find(i)] = find(j)

    clusters = {}
    for i in range(n):
        clusters.setdefault(find(i), []).append(z[i])
    out = []
    for members in clusters.values():
        mean = sum(members) / len(members)
        out.append((mean, len(members)))
    out.sort(key=lambda t: (t[0].real, t[0].imag))
    return out


# ---------------------------------------------------------------------------
# expression parser:  z + z^4 + 0.01,  (0.9+0i)*z + z^2,  (z^2+1)/z
# ---------------------------------------------------------------------------

class _Parser:
    """Recursive descent over rational-function values (Poly pairs)."""

    def __init__(self, text, variables):
        self.text = text
        self.pos = 0
        self.variables = variables

    def error(self, msg):
        raise ParseError(msg, self.pos + 1)

    def peek(self):
        while self.pos < len(self.text) and self.text[self.pos].isspace():
            self.pos += 1
        return self.text[self.pos] if self.pos < len(self.text) else ""

    def parse(self):
        val = self.expr()
        if self.peek():
            self.error(f"unexpected character {self.text[self.pos]!r}")
        return val

    def expr(self):
        ch = self.peek()
        if ch in ("+", "-"):
            self.pos += 1
            num, den = self.term()
            if ch == "-":
                num = pscale(num, -1)
        else:
            num, den = self.term()
        while True:
            ch = self.peek()
            if ch not in ("+", "-"):
                return num, den
            self.pos += 1
            n2, d2 = self.term()
            if ch == "-":
                n2 = pscale(n2, -1)
            num, den = padd(pmul(num, d2), pmul(n2, den)), pmul(den, d2)

    def term(self):
        num, den = self.factor()
        while True:
            ch = self.peek()
            if ch == "*":
                self.pos += 1
                n2, d2 = self.factor()
                num, den = pmul(num, n2), pmul(den, d2)
            elif ch == "/":
                self.pos += 1
                n2, d2 = self.factor()
                if n2 == (0j,):
                    self.error("division by zero expression")
                num, den = pmul(num, d2), pmul(den, n2)
            else:
                return num, den

    def factor(self):
        num, den = self.atom()
        if self.peek() == "^":
            self.pos += 1
            k = self.integer()
            return _ppow(num, k), _ppow(den, k)
        return num, den

    def integer(self):
        ch = self.peek()
        start = self.pos
        while self.pos < len(self.text) and self.text[self.pos].isdigit():
            self.pos += 1
        if self.pos == start:
            self.error("expected an integer exponent")
        return int(self.text[start:self.pos])

    def atom(self):
        ch = self.peek()
        if ch == "(":
            self.pos += 1
            val = self.expr()
            if self.peek() != ")":
                self.error("expected ')'")
            self.pos += 1
            return val
        if ch.isdigit() or ch == ".":
            return (self.number(),), (1 + 0j,)
        if ch.isalpha():
            start = self.pos
            while self.pos < len(self.text) and (self.text[self.pos].isalnum()
                                                 or self.text[self.pos] == "_"):
                self.pos += 1
            name = self.text[start:self.pos]
            if name == "i":
                return (1j,), (1 + 0j,)
            if name in self.variables:
                idx = self.variables.index(name)
                if idx == 0:
                    return (0j, 1 + 0j), (1 + 0j,)
                # secondary symbols are substituted before parsing; seeing one
                # here means the caller forgot to bind it
                self.pos = start
                self.error(f"unbound symbol {name!r}")
            self.pos = start
            self.error(f"unknown symbol {name!r}")
        if not ch:
            self.error("unexpected end of expression")
        self.error(f"unexpected character {ch!r}")

    def number(self):
        start = self.pos
        text = self.text
        while self.pos < len(text) and (text[self.pos].isdigit() or text[self.pos] == "."):
            self.pos += 1
        if self.pos < len(text) and text[self.pos] in "eE":
            save = self.pos
            self.pos += 1
            if self.pos < len(text) and text[self.pos] in "+-":
                self.pos += 1
            if self.pos < len(text) and text[self.pos].isdigit():
                while self.pos < len(text) and text[self.pos].isdigit():
                    self.pos += 1
            else:
                self.pos = save
        lit = text[start:self.pos]
        try:
            value = float(lit)
        except ValueError:
            self.pos = start
            self.error(f"bad number literal {lit!r}")
        if self.pos < len(text) and text[self.pos] == "i":
            self.pos += 1
            return value * 1j
        return complex(value)


def parse_map(text: str, cfg: NumericConfig = DEFAULT,
              parameter: str | None = None,
              parameter_value: complex | None = None) -> MapExpr:
    """Parse a map literal in the plain-text grammar into a MapExpr.

    One variable ``z``; ``i`` is the imaginary unit; ``^`` integer powers.
    An optional named parameter is substituted numerically before parsing.
    """
    src = text
    if parameter is not None:
        if parameter_value is None:
            raise ParseError(f"parameter {parameter!r} has no value", 1)
        text = _substitute(text, parameter, parameter_value)
    num, den = _Parser(text, ["z"]).parse()
    if len(den) == 1:
        num, den = pscale(num, 1.0 / den[0]), (1 + 0j,)
    m = MapExpr(Poly(num), Poly(den), source=src)
    return validate_map(m, cfg)


def parse_value(text: str, variable: str | None = None,
                value: complex | None = None) -> complex:
    """Evaluate a constant expression (optionally in one variable, bound)."""
    if variable is not None:
        text = _substitute(text, variable, value)
    num, den = _Parser(text, []).parse()
    if len(num) > 1 or len(den) > 1:
        raise ParseError("expected a constant expression", 1)
    return num[0] / den[0]


def _substitute(text, name, value):
    """Replace a bare symbol with a parenthesized complex literal."""
    out = []
    i = 0
    while i < len(text):
        ch = text[i]
        if ch.isalpha() or ch == "_":
            j = i
            while j < len(text) and (text[j].isalnum() or text[j] == "_"):
                j += 1
            word = text[i:j]
            if word == name:
                v = complex(value)
                sign = "+" if v.imag >= 0 else "-"
                out.append(f"({v.real!r}{sign}{abs(v.imag)!r}i)")
            else:
                out.append(word)
            i = j
        else:
            out.append(ch)
            i += 1
    return "".join(out)
