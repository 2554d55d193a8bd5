"""Fixed point splitting under perturbation.

Locates the fixed points of f^l near a parabolic center, computes
multipliers (chain rule along the cycle), holomorphic indices (contour
quadrature) and horocyclic statistics, classifies the splitting, and
builds multiplier tracks across a parameter sequence.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from . import mapcore
from .errors import (AmbiguousTrack, AtParabolic, BoundaryRoot,
                     FixedPointOnContour, NoQuadConvergence, ParimpError,
                     TrackMatchFailure)
from .mapcore import MapExpr
from .numcfg import DEFAULT, NumericConfig


class Classification(enum.Enum):
    LEANED = "Leaned"
    BALANCED = "Balanced"
    STAR = "Star"
    MIXED = "Mixed"
    DEGENERATE = "Degenerate"


class TrackVerdict(enum.Enum):
    DIVERGES_PLUS = "DivergesPlus"
    DIVERGES_MINUS = "DivergesMinus"
    BOUNDED = "Bounded"


def horocyclic_statistic(lam: complex, cfg: NumericConfig = DEFAULT) -> float:
    """Re(1/(1-lambda)); the divergence of |this| characterizes horocyclic
    convergence of the multiplier to 1."""
    d = 1.0 - lam
    if abs(d) < cfg.horo_parabolic_tol:
        raise AtParabolic(f"multiplier {lam!r} is at (or on top of) 1")
    return (1.0 / d).real


def holomorphic_index(m: MapExpr, sigma: complex, r: float,
                      cfg: NumericConfig = DEFAULT,
                      evaluator=None) -> complex:
    """Residue of 1/(z - f(z)) at sigma via trapezoidal contour quadrature.

    The circle |z - sigma| = r must isolate one fixed point cluster.  Node
    count doubles from quad_nodes_start until two successive values agree
    below quad_tol.  `evaluator` overrides pointwise evaluation of f (used
    for iterates, where pointwise iteration beats symbolic composition).
    """
    if r < cfg.contour_min_r:
        raise FixedPointOnContour(f"contour radius {r:g} below minimum")
    if evaluator is None:
        def evaluator(zs):
            return mapcore.eval_map_array(m, zs, cfg)

    prev = None
    n = cfg.quad_nodes_start
    while n <= cfg.quad_nodes_max:
        theta = 2.0 * np.pi * np.arange(n) / n
        ring = r * np.exp(1j * theta)
        zs = sigma + ring
        disp = zs - evaluator(zs)
        small = np.abs(disp) < cfg.contour_node_tol
        if small.any():
            raise FixedPointOnContour(
                f"fixed point on contour near {zs[int(np.argmax(small))]:.6g}")
        val = complex(np.mean(ring / disp))
        if prev is not None and abs(val - prev) < cfg.quad_tol:
            return val
        prev = val
        n *= 2
    raise NoQuadConvergence(
        f"quadrature did not settle below {cfg.quad_tol:g} at {cfg.quad_nodes_max} nodes")


@dataclass(frozen=True)
class FixedPointRecord:
    """One fixed point (or unsplit cluster) of f^l.

    order > 1 marks a multiple root (e.g. the parabolic point itself);
    horo_stat is None when the multiplier sits on 1.
    """

    location: complex
    multiplier: complex
    index: complex
    horo_stat: float | None
    order: int = 1

    @staticmethod
    def build(location, multiplier, index, order=1, cfg=DEFAULT,
              map_residual=None):
        for v in (location, multiplier, index):
            if not (math.isfinite(v.real) and math.isfinite(v.imag)):
                raise ParimpError("non-finite fixed point data")
        if map_residual is not None and map_residual > cfg.record_check_tol * (1 + abs(location)):
            raise ParimpError(
                f"fixed point residual {map_residual:.3e} too large at {location:.6g}")
        if order == 1:
            formula = 1.0 / (1.0 - multiplier) if abs(1.0 - multiplier) > 1e-15 else None
            if formula is not None and abs(index - formula) > cfg.record_check_tol * (1 + abs(formula)):
                raise ParimpError(
                    f"index {index:.6g} disagrees with 1/(1-lambda) = {formula:.6g}")
        try:
            horo = horocyclic_statistic(multiplier, cfg)
        except AtParabolic:
            horo = None
        return FixedPointRecord(location, multiplier, index, horo, order)


@dataclass(frozen=True)
class SplittingReport:
    parabolic_center: complex
    multiplicity: int
    points: tuple
    classification: Classification

    def locations(self):
        return [p.location for p in self.points]


def split_fixed_points(m: MapExpr, center: complex, radius: float, l: int,
                       cfg: NumericConfig = DEFAULT) -> SplittingReport:
    """Fixed points of f^l inside a disk, promoted to records and classified."""
    comp = mapcore.compose_map(m, l, cfg)
    fp_poly_coeffs = mapcore.padd(
        comp.numerator.coeffs,
        mapcore.pmul((0j, -1 + 0j), comp.denominator.coeffs))
    fp_poly = mapcore.Poly(fp_poly_coeffs)
    inside = []
    for root, mult in mapcore.roots(fp_poly, cfg):
        d = abs(root - center)
        if abs(d - radius) < cfg.boundary_root_tol:
            raise BoundaryRoot(f"fixed point {root:.8g} on the splitting circle")
        if d < radius:
            inside.append((root, mult))

    def comp_eval(zs):
        return mapcore.iterate_array(m, zs, l, cfg)

    records = []
    for root, mult in inside:
        lam = 1.0 + 0j
        w = root
        for _ in range(l):
            lam *= mapcore.eval_deriv(m, w, cfg)
            w = mapcore.eval_map(m, w, cfg)
        others = [r for r, _ in inside if r is not root]
        if others:
            r_contour = 0.5 * min(abs(root - o) for o in others)
        else:
            r_contour = 0.5 * radius
        r_contour = max(r_contour, cfg.contour_floor)
        idx = holomorphic_index(m, root, r_contour, cfg, evaluator=comp_eval)
        resid = abs(mapcore.iterate(m, root, l, cfg) - root)
        records.append(FixedPointRecord.build(root, lam, idx, mult, cfg, resid))

    records.sort(key=lambda p: (p.location.real, p.location.imag))
    total = sum(p.order for p in records)
    return SplittingReport(center, total, tuple(records),
                           _classify(records, total))


def _classify(records, total) -> Classification:
    guard = 1e-12
    att = sum(p.order for p in records if abs(p.multiplier) < 1 - guard)
    rep = sum(p.order for p in records if abs(p.multiplier) > 1 + guard)
    if any(abs(p.multiplier - 1) <= 1e-10 for p in records):
        return Classification.DEGENERATE
    if att == 1 or rep == 1:
        return Classification.STAR
    if att >= 2 and rep >= 2:
        return Classification.BALANCED
    if att == 0 or rep == 0:
        return Classification.LEANED
    return Classification.MIXED


# ---------------------------------------------------------------------------
# multiplier tracks across a parameter sequence
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Track:
    """One fixed point followed through the report sequence."""

    locations: tuple          # per report
    multipliers: tuple
    indices: tuple
    horo_stats: tuple         # floats (None never allowed in tracks)

    @property
    def last_location(self):
        return self.locations[-1]


@dataclass(frozen=True)
class HoroVerdict:
    per_point: tuple          # TrackVerdict per track (canonical order)
    ell: int


def build_tracks(reports, track_match_radius, cfg: NumericConfig = DEFAULT):
    """Match points of consecutive reports bijectively by nearest neighbor.

    Returns tracks sorted canonically by final location, making the result
    invariant under point reordering inside each report.
    """
    if len(reports) < 2:
        raise TrackMatchFailure("need at least two reports to build tracks")
    mult = reports[0].multiplicity
    center = reports[0].parabolic_center
    for rep in reports:
        if rep.multiplicity != mult:
            raise TrackMatchFailure("reports disagree on multiplicity")
        if abs(rep.parabolic_center - center) > 1e-9:
            raise TrackMatchFailure("reports disagree on the parabolic center")
        if any(p.order != 1 for p in rep.points):
            raise TrackMatchFailure("cannot track a multiple (unsplit) point")

    chains = [[p] for p in reports[0].points]
    for rep in reports[1:]:
        pts = list(rep.points)
        taken = [False] * len(pts)
        for chain in chains:
            prev = chain[-1].location
            dists = [abs(prev - q.location) for q in pts]
            j = int(np.argmin(dists))
            if dists[j] > track_match_radius:
                raise TrackMatchFailure(
                    f"nearest match at distance {dists[j]:.3g} exceeds radius "
                    f"{track_match_radius:.3g}")
            if taken[j]:
                raise TrackMatchFailure("nearest-neighbor matching is not injective")
            taken[j] = True
            chain.append(pts[j])
    tracks = []
    for chain in chains:
        if any(p.horo_stat is None for p in chain):
            raise TrackMatchFailure("a track passed through multiplier 1")
        tracks.append(Track(tuple(p.location for p in chain),
                            tuple(p.multiplier for p in chain),
                            tuple(p.index for p in chain),
                            tuple(p.horo_stat for p in chain)))
    tracks.sort(key=lambda t: (t.last_location.real, t.last_location.imag))
    return tracks


def classify_sequence(values, cfg: NumericConfig = DEFAULT):
    """Three-way verdict for a real statistic sequence.

    Diverges if |values| is monotone increasing over the last half with a
    stable sign and final |value| above the divergence threshold; Bounded
    if the last half stays below the bounded threshold; otherwise None.
    """
    tail = list(values[len(values) // 2:])
    if len(tail) < 2:
        tail = list(values[-2:])
    mags = [abs(v) for v in tail]
    if max(mags) <= cfg.bounded_threshold:
        return TrackVerdict.BOUNDED
    monotone = all(b > a * (1 - 1e-12) for a, b in zip(mags, mags[1:]))
    signs = {v > 0 for v in tail}
    if monotone and len(signs) == 1 and mags[-1] > cfg.divergence_threshold:
        return (TrackVerdict.DIVERGES_PLUS if tail[-1] > 0
                else TrackVerdict.DIVERGES_MINUS)
    return None


def classify_horocyclic(reports, track_match_radius,
                        cfg: NumericConfig = DEFAULT) -> HoroVerdict:
    """Per-track divergence verdicts for the horocyclic statistics.

    ell counts diverging tracks; a Star splitting excludes its single
    distinguished (attracting or repelling) track from the census.
    """
    tracks = build_tracks(reports, track_match_radius, cfg)
    verdicts = []
    for i, tr in enumerate(tracks):
        v = classify_sequence(tr.horo_stats, cfg)
        if v is None:
            raise AmbiguousTrack(
                f"track {i} statistic between thresholds; extend the sequence",
                track=i)
        verdicts.append(v)

    excluded = None
    last = reports[-1]
    if last.classification is Classification.STAR:
        att = [p for p in last.points if abs(p.multiplier) < 1]
        rep = [p for p in last.points if abs(p.multiplier) > 1]
        special = att[0] if len(att) == 1 else rep[0]
        for i, tr in enumerate(tracks):
            if abs(tr.last_location - special.location) < 1e-12:
                excluded = i
                break
    ell = sum(1 for i, v in enumerate(verdicts)
              if v is not TrackVerdict.BOUNDED and i != excluded)
    return HoroVerdict(tuple(verdicts), ell)


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------

CSV_HEADER = "n,point_re,point_im,mult_re,mult_im,index_re,index_im,horo_stat,class"


def reports_to_csv(labeled_reports) -> str:
    """CSV rows for (label, SplittingReport) pairs, spec column order."""
    lines = [CSV_HEADER]
    for label, rep in labeled_reports:
        for p in rep.points:
            horo = "" if p.horo_stat is None else repr(p.horo_stat)
            lines.append(",".join([
                str(label),
                repr(p.location.real), repr(p.location.imag),
                repr(p.multiplier.real), repr(p.multiplier.imag),
                repr(p.index.real), repr(p.index.imag),
                horo,
                rep.classification.value,
            ]))
    return "\n".join(lines) + "\n"
