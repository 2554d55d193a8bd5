"""Gate trees and the symbolic edge-dynamics engine.

A bijective gate vector draws nu disjoint directed chords on the circle of
2*nu petal marks; the complementary faces are the tree vertices (one split
fixed point each) and the chords its edges.  The engine walks gate indices
driven by the divergence sign of cumulative lifted-phase imaginary parts,
which the tree reduces to signed sums of per-vertex index tendencies:
Im tau_k = 2*pi * sum of Re(index) over the vertices left of chord k, up
to O(1), and the full vertex sum is O(1).
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

from .errors import (ClosedGate, IndeterminateSum, InvalidCenter,
                     NotAdmissible, ParimpError)
from .gateflow import GateVector, check_admissible


class Orientation(enum.Enum):
    POSITIVE_CYCLIC = "P"
    NEGATIVE_CYCLIC = "N"


class Tendency(enum.Enum):
    PLUS_INF = "+"
    MINUS_INF = "-"
    BOUNDED = "b"


@dataclass(frozen=True)
class Edge:
    id: int                # equals the gate index k
    gate: int
    upper: int             # vertex adjacent on the left of the directed chord
    lower: int             # vertex adjacent on the right

    @property
    def endpoints(self):
        return (self.upper, self.lower)


@dataclass(frozen=True)
class GateTree:
    nu: int
    gate_vector: GateVector
    vertices: tuple                 # 0..nu
    vertex_arcs: tuple              # per vertex: tuple of boundary arc ids
    orientation: tuple              # per vertex: Orientation
    edges: tuple                    # Edge per gate, index k-1
    upper_sets: tuple               # per gate k: frozenset of vertices left of chord k
    cyclic_edges: tuple             # per vertex: incident gate ids in O(v) order

    def edge(self, k):
        return self.edges[k - 1]

    def upper(self, k):
        return self.upper_sets[k - 1]

    def valence(self, v):
        return len(self.cyclic_edges[v])

    def neighbors(self, v):
        out = []
        for k in self.cyclic_edges[v]:
            e = self.edge(k)
            out.append(e.upper if e.lower == v else e.lower)
        return out

    def serialize(self, tendencies=None):
        lines = []
        for v in self.vertices:
            t = f" tendency {tendencies.of(v).value}" if tendencies else ""
            lines.append(f"vertex {v} orientation {self.orientation[v].value}{t}")
        for e in self.edges:
            lines.append(f"edge {e.id} {e.upper} {e.lower} gate {e.gate}")
        return "\n".join(lines) + "\n"


def build_tree(gv: GateVector) -> GateTree:
    """Planar subdivision of the disk by the gate chords, combinatorially.

    Marks sit at positions 0..2nu-1 anticlockwise ((k,-) at 2(k-1), (k,+)
    next); gate k is the chord directed from (k,+) to (g(k),-).  Faces are
    classes of boundary arcs agreeing on the side of every chord; the face
    left of every incident chord is positively cyclic.
    """
    if not all(e is not None for e in gv.entries):
        raise ClosedGate(f"gate vector {gv} has closed gates")
    ok, violations = check_admissible(gv)
    if not ok:
        raise NotAdmissible("; ".join(violations))
    nu = gv.nu
    n = 2 * nu
    chords = {k: (2 * k - 1, 2 * (gv.g(k) - 1)) for k in range(1, nu + 1)}

    def left_of(k, arc):
        a, b = chords[k]
        # left side boundary runs anticlockwise from b to a
        return (arc + 0.5 - b) % n < (a - b) % n

    signatures = [tuple(left_of(k, arc) for k in range(1, nu + 1))
                  for arc in range(n)]
    faces = []
    face_of_arc = {}
    for arc in range(n):
        for fid, sig in faces:
            if sig == signatures[arc]:
                face_of_arc[arc] = fid
                break
        else:
            fid = len(faces)
            faces.append((fid, signatures[arc]))
            face_of_arc[arc] = fid
    if len(faces) != nu + 1:
        raise NotAdmissible(
            f"chords of {gv} cut the disk into {len(faces)} faces, "
            f"expected {nu + 1}")

    vertex_arcs = tuple(tuple(arc for arc in range(n) if face_of_arc[arc] == fid)
                        for fid, _ in faces)

    edges = []
    upper_sets = []
    for k in range(1, nu + 1):
        a, b = chords[k]
        upper_adj = face_of_arc[b]     # first arc anticlockwise after b
        lower_adj = face_of_arc[a]
        edges.append(Edge(k, k, upper_adj, lower_adj))
        upper_sets.append(frozenset(
            fid for fid, sig in faces if sig[k - 1]))

    orientation = []
    for fid, sig in faces:
        sides = [sig[e.gate - 1] for e in edges if fid in e.endpoints]
        if all(sides):
            orientation.append(Orientation.POSITIVE_CYCLIC)
        elif not any(sides):
            orientation.append(Orientation.NEGATIVE_CYCLIC)
        else:
            raise NotAdmissible(
                f"face {fid} of {gv} lies on mixed sides of its chords")

    # incident edges in the orientation's cyclic order: walk the face's arcs
    # anticlockwise; after each arc the boundary follows the chord attached
    # at the arc's closing mark.  Negative vertices list clockwise.
    chord_at_mark = {}
    for k, (a, b) in chords.items():
        chord_at_mark[a] = k
        chord_at_mark[b] = k
    cyclic = []
    for fid, _ in faces:
        order = []
        for arc in vertex_arcs[fid]:
            k = chord_at_mark[(arc + 1) % n]
            if k not in order:
                order.append(k)
        if orientation[fid] is Orientation.NEGATIVE_CYCLIC:
            order = order[::-1]
        cyclic.append(tuple(order))

    return GateTree(nu, gv, tuple(range(nu + 1)), vertex_arcs,
                    tuple(orientation), tuple(edges), tuple(upper_sets),
                    tuple(cyclic))


# ---------------------------------------------------------------------------
# tendencies
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TendencyAssignment:
    """Per-vertex limit behavior of Re(index); the full vertex sum must stay
    bounded (index-sum conservation), so infinite signs come in pairs."""

    values: tuple

    def __post_init__(self):
        has_p = Tendency.PLUS_INF in self.values
        has_m = Tendency.MINUS_INF in self.values
        if has_p != has_m:
            raise ParimpError(
                "tendency sum rule violated: an unbalanced infinite sign "
                "cannot have a bounded total")

    def of(self, v):
        return self.values[v]

    @staticmethod
    def parse(text):
        table = {"+": Tendency.PLUS_INF, "-": Tendency.MINUS_INF,
                 "b": Tendency.BOUNDED}
        vals = []
        for part in text.split(","):
            part = part.strip()
            if part not in table:
                raise ParimpError(f"bad tendency {part!r} (use +, -, b)")
            vals.append(table[part])
        return TendencyAssignment(tuple(vals))


def _verdict(coeffs, tend):
    """Tendency of sum(coeffs[v] * x_v) given per-vertex tendencies, where
    the full sum of x is O(1).

    Scans shift representatives c + m*1 (the full-set relation); a
    representative with no sign conflict certifies the verdict.  Reduces to
    comparisons of coefficient extremes over the PLUS/MINUS vertices.
    """
    plus = [c for c, t in zip(coeffs, tend) if t is Tendency.PLUS_INF]
    minus = [c for c, t in zip(coeffs, tend) if t is Tendency.MINUS_INF]
    if not plus and not minus:
        return Tendency.BOUNDED
    if not plus or not minus:
        # unreachable for sum-rule-valid assignments
        raise ParimpError("unbalanced tendency data")
    seen = plus + minus
    if max(seen) == min(seen):
        return Tendency.BOUNDED          # exactly the full infinite block
    if min(plus) >= max(minus):
        return Tendency.PLUS_INF
    if min(minus) >= max(plus):
        return Tendency.MINUS_INF
    return None


def tau_tendency(tree: GateTree, t: TendencyAssignment, gates):
    """Tendency of Im sum(tau_k) over the listed gates (Indeterminate -> None
    is surfaced as the string 'Indeterminate' per the engine's contract)."""
    if not gates:
        raise ParimpError("empty gate list")
    coeffs = [0] * (tree.nu + 1)
    for k in gates:
        if not 1 <= k <= tree.nu:
            raise ParimpError(f"gate {k} out of range")
        for v in tree.upper(k):
            coeffs[v] += 1
    v = _verdict(coeffs, t.values)
    return "Indeterminate" if v is None else v


# ---------------------------------------------------------------------------
# the walk
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class OudkerkRun:
    start_gate: int
    sequence: tuple            # gate indices a_1, a_2, ...
    outcome: str               # "finite" | "infinite"
    length: int | None         # finite: r
    preperiod: int | None      # infinite: m
    period: int | None         # infinite: p
    center_vertex: int | None  # infinite: v
    sign_trace: tuple          # +1/-1 per diverging step

    def serialize(self):
        if self.outcome == "finite":
            return f"run k={self.start_gate} outcome=finite {self.length}"
        return (f"run k={self.start_gate} outcome=infinite {self.preperiod} "
                f"{self.period} {self.center_vertex}")


def _ghat(gv: GateVector, k):
    j = gv.g(k) - 1
    return j if j >= 1 else gv.nu


def run_oudkerk(tree: GateTree, t: TendencyAssignment, k: int,
                refiner=None, max_steps=None) -> OudkerkRun:
    """Walk gate indices by the sign of the cumulative lifted-phase tendency.

    Bounded -> finite exit; +inf steps to g(a_r), -inf to g(a_r)-1.  An
    infinite walk is certified (not assumed): gate/sign periodicity with a
    constant per-period coefficient increment equal to s*[w] modulo the
    full vertex set, and verdicts stable under further periods.  `refiner`
    may resolve Indeterminate prefixes (e.g. from numeric index sums);
    without one the walk raises IndeterminateSum.
    """
    gv = tree.gate_vector
    nu = tree.nu
    if not 1 <= k <= nu:
        raise ParimpError(f"start gate {k} out of range")
    if max_steps is None:
        max_steps = 64 * (nu + 2) ** 2

    seq = [k]
    signs = []
    coeffs = [0] * (nu + 1)
    history = [tuple(coeffs)]

    for _ in range(max_steps):
        a_r = seq[-1]
        for v in tree.upper(a_r):
            coeffs[v] += 1
        history.append(tuple(coeffs))
        verdict = _verdict(coeffs, t.values)
        if verdict is None and refiner is not None:
            verdict = refiner(tuple(coeffs))
        if verdict is None:
            raise IndeterminateSum(
                f"gate prefix {seq} has an indeterminate phase sum",
                gate=k, prefix=seq)
        if verdict is Tendency.BOUNDED:
            return OudkerkRun(k, tuple(seq), "finite", len(seq),
                              None, None, None, tuple(signs))
        s = 1 if verdict is Tendency.PLUS_INF else -1
        signs.append(s)
        seq.append(gv.g(a_r) if s == 1 else _ghat(gv, a_r))

        cert = _certify_cycle(tree, t, seq, signs, history, refiner)
        if cert is not None:
            m, p, center = cert
            return OudkerkRun(k, tuple(seq), "infinite", None, m, p, center,
                              tuple(signs))
    raise ParimpError("edge walk exceeded the step budget without resolving")


def _normalize(coeffs):
    lo = min(coeffs)
    return tuple(c - lo for c in coeffs)


def _single_vertex_increment(delta, s):
    """The vertex w with delta == s*[w] modulo the all-ones vector, or None.

    The walk's stable sign s disambiguates ([w] and -[complement] coincide
    mod 1, which matters when the tree has two vertices)."""
    norm = _normalize(delta)
    support = [v for v, c in enumerate(norm) if c != 0]
    if s == 1:
        if len(support) == 1 and norm[support[0]] == 1:
            return support[0]
    else:
        if (len(support) == len(norm) - 1
                and all(norm[v] == 1 for v in support)):
            return [v for v, c in enumerate(norm) if c == 0][0]
    return None


def _certify_cycle(tree, t, seq, signs, history, refiner):
    """Certify an entered cycle; returns minimal (m, p, center) or None.

    Needs: gates and signs p-periodic over two observed periods, constant
    per-period coefficient increment D with D == s*[w] mod 1, and the
    verdict at every offset stable for three more periods and in the
    symbolic infinite-period limit.
    """
    r = len(seq) - 1          # completed steps (seq has the next gate appended)
    for p in range(1, r // 2 + 1):
        m = r - 2 * p
        if seq[m:m + p] != seq[m + p:m + 2 * p] or seq[m + 2 * p] != seq[m + p]:
            continue
        if signs[m:m + p] != signs[m + p:m + 2 * p]:
            continue
        d1 = tuple(a - b for a, b in zip(history[m + p], history[m]))
        d2 = tuple(a - b for a, b in zip(history[m + 2 * p], history[m + p]))
        if d1 != d2:
            continue
        s_star = signs[m + p - 1]
        if any(s != s_star for s in signs[m:m + 2 * p]):
            continue
        center = _single_vertex_increment(d1, s_star)
        if center is None:
            continue
        if not _verdicts_stable(tree, t, history, m, p, d1, s_star, center,
                                refiner):
            continue
        # p is minimal (scanned ascending); shrink the preperiod
        while m > 0 and seq[m - 1] == seq[m - 1 + p]:
            m -= 1
        return m, p, center
    return None


def _verdicts_stable(tree, t, history, m, p, delta, s_inc, center, refiner):
    """Verdicts at every cycle offset must survive q more periods, q up to 3
    and in the q -> infinity limit (center coefficient dominant)."""
    base = [history[m + 1 + i] for i in range(p)]
    for coeffs in base:
        ref = _verdict(coeffs, t.values)
        if ref is None and refiner is not None:
            ref = refiner(tuple(coeffs))
        for q in (1, 2, 3):
            shifted = tuple(c + q * d for c, d in zip(coeffs, delta))
            v = _verdict(shifted, t.values)
            if v is None and refiner is not None:
                v = refiner(shifted)
            if v is not ref:
                return False
        # symbolic limit: the center coefficient at s*infinity
        v = _verdict_limit(coeffs, t.values, center, s_inc)
        if v is not ref:
            return False
    return True


def _verdict_limit(coeffs, tend, center, s_inc):
    """_verdict with the center coefficient pushed to s_inc * infinity."""
    big = 1 + max(abs(c) for c in coeffs) * 4
    shifted = list(coeffs)
    shifted[center] += s_inc * big * 8
    return _verdict(tuple(shifted), tend)


# ---------------------------------------------------------------------------
# marked edges
# ---------------------------------------------------------------------------

class MarkMode(enum.Enum):
    ATTRACTING_CENTER = "AttractingCenter"
    REPELLING_CENTER = "RepellingCenter"


def _rooted(tree: GateTree, v0: int):
    """parent map and children (anchored after the parent edge in O(v))."""
    parent = {v0: None}
    parent_gate = {v0: None}
    order = [v0]
    stack = [v0]
    while stack:
        v = stack.pop()
        for k in tree.cyclic_edges[v]:
            e = tree.edge(k)
            w = e.upper if e.lower == v else e.lower
            if w not in parent:
                parent[w] = v
                parent_gate[w] = k
                order.append(w)
                stack.append(w)

    def children(v):
        cyc = list(tree.cyclic_edges[v])
        if parent_gate[v] is not None:
            i = cyc.index(parent_gate[v])
            cyc = cyc[i + 1:] + cyc[:i]
        out = []
        for k in cyc:
            e = tree.edge(k)
            w = e.upper if e.lower == v else e.lower
            if parent.get(w) == v:
                out.append((k, w))
        return out

    return parent, parent_gate, children


def mark_edges(tree: GateTree, v0: int, v_star, mode: MarkMode):
    """The marked edge set E_*; always |E_*| = |V_star|.

    Repelling mode: predecessor edges of the starred vertices.  Attracting
    mode: descend from v0, cutting so every component below holds exactly
    one starred vertex (skip the first starred subtree at a branch vertex
    outside V_star, cut all of them at a starred vertex)."""
    v_star = set(v_star)
    if v0 in v_star:
        raise InvalidCenter("v0 cannot be starred")
    if not v_star:
        raise InvalidCenter("V_star is empty")
    parent, parent_gate, children = _rooted(tree, v0)

    if mode is MarkMode.REPELLING_CENTER:
        return {parent_gate[v] for v in v_star}

    subtree_hits = {}

    def count(v):
        c = (1 if v in v_star else 0) + sum(count(w) for _, w in children(v))
        subtree_hits[v] = c
        return c

    count(v0)
    marked = set()

    def descend(v):
        # walk down until the first branched-or-starred vertex
        while v not in v_star:
            kids = [(k, w) for k, w in children(v) if subtree_hits[w] > 0]
            if len(tree.cyclic_edges[v]) >= 3 or not kids:
                break
            (k, w), = kids
            v = w
        kids = [(k, w) for k, w in children(v) if subtree_hits[w] > 0]
        if v in v_star:
            for k, w in kids:
                marked.add(k)
                descend(w)
        else:
            for i, (k, w) in enumerate(kids):
                if i > 0:
                    marked.add(k)
                descend(w)

    for k, w in children(v0):
        if subtree_hits[w] > 0:
            marked.add(k)
            descend(w)
    return marked


# ---------------------------------------------------------------------------
# prediction
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ConvergencePrediction:
    avoided_basins: frozenset
    invaded_basins: frozenset
    ell: int
    julia_converges: bool
    ray_uniform: dict
    runs: tuple

    def serialize(self):
        lines = [r.serialize() for r in self.runs]
        lines.append(f"avoided = {sorted(self.avoided_basins)}")
        lines.append(f"invaded = {sorted(self.invaded_basins)}")
        lines.append(f"ell = {self.ell}")
        lines.append(f"julia_converges = {'true' if self.julia_converges else 'false'}")
        return "\n".join(lines) + "\n"


def predict(tree: GateTree, t: TendencyAssignment,
            refiner=None) -> ConvergencePrediction:
    """Run the walk from every gate: infinite -> basin avoided and the ray
    tail converges uniformly; finite -> basin invaded."""
    avoided = set()
    invaded = set()
    ray_uniform = {}
    runs = []
    for k in range(1, tree.nu + 1):
        run = run_oudkerk(tree, t, k, refiner=refiner)
        runs.append(run)
        if run.outcome == "infinite":
            avoided.add(k)
            ray_uniform[k] = True
        else:
            invaded.add(k)
            ray_uniform[k] = False
    return ConvergencePrediction(frozenset(avoided), frozenset(invaded),
                                 len(avoided), len(avoided) == tree.nu,
                                 ray_uniform, tuple(runs))
