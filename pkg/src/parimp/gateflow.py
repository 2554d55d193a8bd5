"""Gate structure detection from the rotated displacement field.

The field dz/dt = e^{i phi} * i * (f(z) - z) vanishes exactly at fixed
points; for a well-behaved angle phi the trajectories through the petal
seed points limit on fixed points in both time directions.  Two seeds
whose trajectories share both endpoint fixed points bound a double petal,
which opens a gate.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from concurrent.futures import ThreadPoolExecutor

import numpy as np
from scipy.integrate import solve_ivp

from . import mapcore
from .errors import (CoordinateMismatch, NotAdmissible, NotWellBehaved,
                     ParimpError, Stalled, StepUnderflow)
from .mapcore import MapExpr
from .numcfg import DEFAULT, NumericConfig

ESCAPED = "Escaped"

PHI_SWEEP = (0.0, 0.1, -0.1, 0.2, -0.2, 0.3, -0.3)


@dataclass(frozen=True)
class Trajectory:
    samples: tuple                 # (t, z), strictly increasing t
    forward_limit: object          # complex or ESCAPED
    backward_limit: object

    def endpoints(self):
        return self.forward_limit, self.backward_limit


def seeds(nu: int, r0: float):
    """Petal seed points: z_{k,-} on repelling directions, z_{k,+} rotated
    halfway to the next one.  Keys are (k, '+') and (k, '-'), k = 1..nu."""
    out = {}
    for k in range(1, nu + 1):
        zm = r0 * cmath.exp(2j * math.pi * (k - 1) / nu)
        out[(k, "-")] = zm
        out[(k, "+")] = cmath.exp(1j * math.pi / nu) * zm
    return out


def _half_flow(m, phi, seed, r_outer, field_sign, cfg):
    """Integrate dz/dt = field_sign * e^{i phi} i (f(z)-z) from the seed for
    t >= 0; returns (samples with t >= 0 ascending, limit)."""
    rot = field_sign * 1j * cmath.exp(1j * phi)

    def rhs(t, y):
        z = complex(y[0], y[1])
        w = rot * (mapcore.eval_map(m, z, cfg) - z)
        return [w.real, w.imag, abs(w)]

    def ev_stall(t, y):
        z = complex(y[0], y[1])
        return abs(mapcore.eval_map(m, z, cfg) - z) - cfg.stall_tol

    ev_stall.terminal = True
    ev_stall.direction = -1

    def ev_escape(t, y):
        return math.hypot(y[0], y[1]) - 2.0 * r_outer

    ev_escape.terminal = True
    ev_escape.direction = 1

    budget = cfg.arclength_budget_factor * r_outer

    def ev_budget(t, y):
        return y[2] - budget

    ev_budget.terminal = True

    speed0 = abs(mapcore.eval_map(m, seed, cfg) - seed)
    if speed0 < cfg.stall_tol:
        raise Stalled("vector field vanishes at the seed")

    # closed-orbit early exit: back at the seed after a real excursion.
    # A genuinely well-behaved spiral misses its seed by a fixed fraction of
    # the excursion per loop, so a 1e-5 relative return is a closed orbit.
    min_excursion = 1e-4 * r_outer
    excursion = 0.0

    t0 = 0.0
    y = [seed.real, seed.imag, 0.0]
    t_chunk = max(1.0, 1.0 / speed0)
    samples = [(0.0, seed)]
    for _ in range(400):
        sol = solve_ivp(rhs, (t0, t0 + t_chunk), y, method="RK45",
                        rtol=cfg.rk_rtol, atol=cfg.rk_atol,
                        events=[ev_stall, ev_escape, ev_budget])
        if sol.status == -1:
            raise StepUnderflow(sol.message)
        for t, ya, yb in zip(sol.t[1:], sol.y[0][1:], sol.y[1][1:]):
            z = complex(ya, yb)
            step = abs(z - samples[-1][1])
            samples.append((t, z))
            d = abs(z - seed)
            excursion = max(excursion, d)
            if (excursion > min_excursion
                    and d < max(1e-5 * excursion, 1.5 * step)
                    and d < 0.05 * excursion):
                raise Stalled("trajectory recurred to its seed (closed orbit)")
        if len(samples) > 500_000:
            raise Stalled("flow exceeded the step budget")
        if sol.status == 1:
            if sol.t_events[1].size:          # escaped
                return samples, ESCAPED
            if sol.t_events[2].size:          # budget
                raise Stalled("arclength budget exhausted")
            # stall: Cauchy check via the Newton estimate of the remaining
            # distance to the field zero, |F|/|F'| with F = f(z) - z
            zf = complex(sol.y[0][-1], sol.y[1][-1])
            disp = abs(mapcore.eval_map(m, zf, cfg) - zf)
            dfz = abs(mapcore.eval_deriv(m, zf, cfg) - 1.0)
            d_est = disp / dfz if dfz > 0 else math.inf
            if d_est > 0.01 * r_outer:
                raise Stalled("speed stalled while the position still drifts")
            return samples, zf
        t0 = sol.t[-1]
        y = [sol.y[0][-1], sol.y[1][-1], sol.y[2][-1]]
        t_chunk *= 1.8
    raise Stalled("flow did not terminate within the chunk budget")


def flow(m: MapExpr, phi: float, seed: complex, r_outer: float,
         cfg: NumericConfig = DEFAULT, reverse: bool = False) -> Trajectory:
    """Trajectory of the rotated field through `seed`, both time directions.

    Each end either stalls at a fixed point (limit = final position) or
    leaves |z| = 2*r_outer (Escaped).  `reverse` integrates the
    time-reversed field.
    """
    if not (-math.pi / 4 < phi < math.pi / 4):
        raise ParimpError("phi must lie in (-pi/4, pi/4)")
    if abs(seed) > 2.0 * r_outer:
        raise ParimpError("seed outside the working disk")
    s = -1.0 if reverse else 1.0
    fwd_samples, fwd = _half_flow(m, phi, seed, r_outer, s, cfg)
    bwd_samples, bwd = _half_flow(m, phi, seed, r_outer, -s, cfg)
    merged = [(-t, z) for t, z in reversed(bwd_samples)]
    merged.extend(fwd_samples[1:])
    return Trajectory(tuple(merged), fwd, bwd)


# ---------------------------------------------------------------------------
# gate vectors
# ---------------------------------------------------------------------------

CLOSED = None


@dataclass(frozen=True)
class GateVector:
    """g(k) = j if the k-th gate opens onto repelling mark j, None if closed."""

    nu: int
    entries: tuple

    def __post_init__(self):
        if len(self.entries) != self.nu:
            raise NotAdmissible("gate vector length disagrees with nu")
        for e in self.entries:
            if e is not None and not (1 <= e <= self.nu):
                raise NotAdmissible(f"gate target {e} out of range")

    def g(self, k):
        return self.entries[k - 1]

    def is_bijective(self):
        open_ = [e for e in self.entries if e is not None]
        return len(open_) == self.nu and len(set(open_)) == self.nu

    def __str__(self):
        return "(" + ",".join("*" if e is None else str(e)
                              for e in self.entries) + ")"

    @staticmethod
    def parse(text):
        parts = [p.strip() for p in text.strip().strip("()").split(",") if p.strip()]
        entries = tuple(None if p == "*" else int(p) for p in parts)
        return GateVector(len(entries), entries)


def _mark_pos(nu):
    """Circle positions 0..2nu-1, anticlockwise: (k,-) at 2(k-1), (k,+) next."""
    minus = {k: 2 * (k - 1) for k in range(1, nu + 1)}
    plus = {k: 2 * (k - 1) + 1 for k in range(1, nu + 1)}
    return minus, plus


def _chords(gv: GateVector):
    """Directed chords (from_pos, to_pos) for the open gates, keyed by k."""
    minus, plus = _mark_pos(gv.nu)
    return {k: (plus[k], minus[gv.g(k)])
            for k in range(1, gv.nu + 1) if gv.g(k) is not None}


def _crosses(c1, c2, n):
    """Chord crossing test on n circular positions (no shared endpoints)."""
    a, b = c1
    inside = lambda x: (x - a) % n < (b - a) % n
    return inside(c2[0]) != inside(c2[1])


def check_admissible(gv: GateVector):
    """(ok, violations).  Structure gives +->- for free; checks injectivity
    and the noncrossing chord condition."""
    violations = []
    open_entries = [e for e in gv.entries if e is not None]
    if len(set(open_entries)) != len(open_entries):
        violations.append("two gates share a repelling mark")
    chords = _chords(gv)
    ks = sorted(chords)
    n = 2 * gv.nu
    for i, k1 in enumerate(ks):
        for k2 in ks[i + 1:]:
            if _crosses(chords[k1], chords[k2], n):
                violations.append(f"chords of gates {k1} and {k2} cross")
    return (not violations), violations


def enumerate_admissible(nu: int, cfg: NumericConfig = DEFAULT):
    """All admissible gate vectors for nu <= 8, lexicographic (Closed first)."""
    if nu > 8:
        raise ParimpError("enumerate_admissible supports nu <= 8")
    out = []
    choices = [None] + list(range(1, nu + 1))

    def rec(prefix):
        if len(prefix) == nu:
            gv = GateVector(nu, tuple(prefix))
            if check_admissible(gv)[0]:
                out.append(gv)
            return
        for c in choices:
            if c is not None and c in prefix:
                continue
            rec(prefix + [c])

    rec([])
    return out


# ---------------------------------------------------------------------------
# detection
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GateDetection:
    phi: float
    r0: float
    gate: GateVector
    endpoint_map: dict      # (k, sign) -> (fwd fp index or ESCAPED, bwd ...)
    well_behaved: bool

    def report(self):
        lines = []
        for (k, sign), (fwd, bwd, ifwd, ibwd) in sorted(self.endpoint_map.items()):
            fmt = lambda v: "Escaped" if v == ESCAPED else f"{v.real:.9g}{v.imag:+.9g}i"
            lines.append(f"{k},{sign},{fmt(fwd)},{fmt(bwd)},"
                         f"{ifwd if ifwd is not None else '-'}"
                         f"/{ibwd if ibwd is not None else '-'}")
        lines.append(f"gate_vector = {self.gate}")
        lines.append(f"well_behaved = {'true' if self.well_behaved else 'false'}")
        lines.append("# exit/entry interval condition w.r.t. D(0, r0/2) not verified")
        return "\n".join(lines) + "\n"


def default_r0(fixed_points, m: MapExpr = None, cfg: NumericConfig = DEFAULT):
    """4x the furthest split point, capped so other fixed points stay outside.

    For an unsplit parabolic cluster (all points at the center) the scale
    comes from the leading coefficient of f(z) - z instead."""
    r0 = 4.0 * max(abs(p) for p in fixed_points)
    if r0 == 0.0 and m is not None and m.is_polynomial():
        disp = mapcore.Poly(mapcore.padd(m.poly().coeffs, (0j, -1 + 0j)))
        lead = abs(disp.coeffs[-1])
        r0 = 0.25 * lead ** (-1.0 / max(disp.degree - 1, 1))
    if m is not None and m.is_polynomial():
        try:
            fpp = mapcore.Poly(mapcore.padd(m.poly().coeffs, (0j, -1 + 0j)))
            others = [r for r, _ in mapcore.roots(fpp, cfg)
                      if min(abs(r - p) for p in fixed_points) > 10 * cfg.root_merge_tol]
            for o in others:
                r0 = min(r0, abs(o) / 6.0)
        except ParimpError:
            pass
    return r0


def _match_endpoint(z, fixed_points, cfg):
    """Nearest fixed point index, or None if ambiguous / too far."""
    if z == ESCAPED:
        return None
    d = [abs(z - p) for p in fixed_points]
    i = int(np.argmin(d))
    if len(fixed_points) > 1:
        sep = min(abs(fixed_points[i] - p)
                  for j, p in enumerate(fixed_points) if j != i)
        tol = max(cfg.endpoint_match_factor * cfg.root_merge_tol, 0.25 * sep)
    else:
        tol = math.inf
    return i if d[i] <= tol else None


def detect_gates(m: MapExpr, nu: int, phi: float, r0: float,
                 fixed_points, cfg: NumericConfig = DEFAULT,
                 threads: int = 1) -> GateDetection:
    """Flow all 2*nu seeds and pair shared-endpoint trajectories into gates."""
    if max(abs(p) for p in fixed_points) > r0 / 2.0:
        raise CoordinateMismatch(
            "split fixed points must lie in |z| < r0/2 (center the map first)")
    sd = seeds(nu, r0)
    keys = sorted(sd)
    # trajectories may leave the seed circle for one interval before
    # settling, so the flow's escape disk is wider than the gate scale
    flow_r = 2.5 * r0

    def run(key):
        try:
            return flow(m, phi, sd[key], flow_r, cfg)
        except (Stalled, StepUnderflow) as exc:
            raise NotWellBehaved(f"seed {key} trajectory failed: {exc}",
                                 seed=key)

    trajs = {}
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            for key, tr in zip(keys, pool.map(run, keys)):
                trajs[key] = tr
    else:
        for key in keys:
            trajs[key] = run(key)

    endpoint_map = {}
    matched = {}
    for key in keys:
        fwd, bwd = trajs[key].endpoints()
        if fwd == ESCAPED or bwd == ESCAPED:
            raise NotWellBehaved("a seed trajectory escaped", seed=key)
        ifwd = _match_endpoint(fwd, fixed_points, cfg)
        ibwd = _match_endpoint(bwd, fixed_points, cfg)
        if ifwd is None or ibwd is None:
            raise NotWellBehaved("trajectory limit matched no fixed point",
                                 seed=key)
        endpoint_map[key] = (fwd, bwd, ifwd, ibwd)
        matched[key] = (ifwd, ibwd)

    entries = []
    used = {}
    for k in range(1, nu + 1):
        pf, pb = matched[(k, "+")]
        if pf == pb:
            entries.append(None)
            continue
        targets = [j for j in range(1, nu + 1)
                   if matched[(j, "-")] == (pf, pb)]
        if len(targets) != 1:
            raise NotWellBehaved(
                f"gate {k}: {len(targets)} candidate repelling seeds share "
                "its endpoints", seed=(k, "+"))
        j = targets[0]
        if j in used:
            raise NotWellBehaved(
                f"repelling seed {j} claimed by gates {used[j]} and {k}",
                seed=(j, "-"))
        used[j] = k
        entries.append(j)

    gv = GateVector(nu, tuple(entries))
    ok, violations = check_admissible(gv)
    if not ok:
        raise NotWellBehaved("detected gate vector is not admissible: "
                             + "; ".join(violations))
    return GateDetection(phi, r0, gv, endpoint_map, True)


def detect_gates_auto(m: MapExpr, nu: int, fixed_points,
                      phi_hint: float = 0.0, r0: float = None,
                      cfg: NumericConfig = DEFAULT, threads: int = 1,
                      sweep=PHI_SWEEP) -> GateDetection:
    """Sweep phi over a small grid and return the first well-behaved
    detection (stands in for the selection principle's existence claim)."""
    if r0 is None:
        r0 = default_r0(fixed_points, m, cfg)
    lim = math.pi / 4 - 1e-3
    angles = []
    for d in sweep:
        a = phi_hint + d
        if abs(a) < lim and not any(abs(a - b) < 1e-12 for b in angles):
            angles.append(a)
    last = None
    for a in angles:
        try:
            return detect_gates(m, nu, a, r0, fixed_points, cfg, threads)
        except (NotWellBehaved, CoordinateMismatch) as exc:
            if isinstance(exc, CoordinateMismatch):
                raise
            last = exc
    raise NotWellBehaved(f"no well-behaved angle in the sweep (last: {last})")
