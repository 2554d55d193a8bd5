"""Escape-time Julia boundary approximation and Hausdorff distances.

For a polynomial of degree >= 2 the Julia set is the boundary of the
escaping set, so cells are classified by bounded escape-time iteration and
the boundary cells (both classes in the 4-neighborhood) sampled as a point
cloud.  Hausdorff distances between clouds run through a KD-tree index.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

from .errors import EmptyCloud, EmptyWindow, ParimpError
from .mapcore import MapExpr
from .numcfg import DEFAULT, NumericConfig


@dataclass(frozen=True)
class GridSpec:
    center: complex
    half_width: float
    resolution: int

    def __post_init__(self):
        r = self.resolution
        if not (64 <= r <= 8192 and (r & (r - 1)) == 0):
            raise ParimpError("resolution must be a power of two in [64, 8192]")
        if self.half_width <= 0:
            raise ParimpError("half_width must be positive")

    @property
    def cell_size(self):
        return 2.0 * self.half_width / self.resolution

    def cell_centers(self):
        n = self.resolution
        step = self.cell_size
        xs = self.center.real - self.half_width + step * (np.arange(n) + 0.5)
        ys = self.center.imag - self.half_width + step * (np.arange(n) + 0.5)
        return xs[None, :] + 1j * ys[:, None]


@dataclass(frozen=True)
class PointCloud:
    points: np.ndarray           # complex, boundary cell centers
    cell_size: float

    def __len__(self):
        return len(self.points)

    def as_xy(self):
        return np.column_stack([self.points.real, self.points.imag])


def min_escape_radius(m: MapExpr):
    return 1.0 + m.poly().max_abs_coeff()


def escape_times(m: MapExpr, grid: GridSpec, max_iter: int,
                 escape_radius: float) -> np.ndarray:
    """Per-cell first exit time past escape_radius; max_iter + 1 if none."""
    if not m.is_polynomial() or m.degree < 2:
        raise ParimpError("escape-time classification needs a polynomial, degree >= 2")
    if escape_radius < min_escape_radius(m) - 1e-12:
        raise ParimpError(
            f"escape_radius must be >= 1 + max|coeff| = {min_escape_radius(m):g}")
    coeffs = m.poly().coeffs
    z = grid.cell_centers().reshape(-1)
    times = np.full(z.shape, max_iter + 1, dtype=np.int32)
    alive = np.flatnonzero(np.abs(z) <= escape_radius)
    times[np.abs(z) > escape_radius] = 0
    w = z[alive]
    for k in range(1, max_iter + 1):
        if alive.size == 0:
            break
        out = np.full(w.shape, coeffs[-1], dtype=complex)
        for a in coeffs[-2::-1]:
            out = out * w + a
        gone = np.abs(out) > escape_radius
        times[alive[gone]] = k
        keep = ~gone
        alive = alive[keep]
        w = out[keep]
    n = grid.resolution
    return times.reshape(n, n)


def escape_mask(m: MapExpr, grid: GridSpec, max_iter: int,
                escape_radius: float) -> np.ndarray:
    """Boolean grid: True where the orbit certifiably escapes."""
    return escape_times(m, grid, max_iter, escape_radius) <= max_iter


def julia_boundary(m: MapExpr, grid: GridSpec, max_iter: int = 1000,
                   escape_radius: float = None,
                   cfg: NumericConfig = DEFAULT) -> PointCloud:
    """Centers of cells whose 4-neighborhood contains both escape classes.

    A Julia set without interior complement (Cantor dust, segments) can
    leave no cell unescaped at large max_iter; the classification then
    falls back to thresholding at the deepest observed escape level, so the
    cloud tracks the slowest cells (the best grid proxy for J).
    """
    if escape_radius is None:
        escape_radius = max(2.0, min_escape_radius(m))
    times = escape_times(m, grid, max_iter, escape_radius)
    esc = times <= max_iter
    if esc.all():
        tmax = int(times.max())
        if tmax <= 1:
            raise EmptyWindow("every cell escapes immediately")
        esc = times < tmax
    boundary = boundary_mask(esc)
    if not boundary.any():
        raise EmptyWindow("no boundary cell in the grid window")
    pts = grid.cell_centers()[boundary]
    return PointCloud(pts, grid.cell_size)


def boundary_mask(esc: np.ndarray) -> np.ndarray:
    """Cells differing from at least one 4-neighbor."""
    b = np.zeros_like(esc, dtype=bool)
    b[:-1, :] |= esc[:-1, :] != esc[1:, :]
    b[1:, :] |= esc[1:, :] != esc[:-1, :]
    b[:, :-1] |= esc[:, :-1] != esc[:, 1:]
    b[:, 1:] |= esc[:, 1:] != esc[:, :-1]
    return b


def despeckle(mask: np.ndarray) -> np.ndarray:
    """Flip cells disagreeing with all four neighbors (sub-cell filaments
    and islands the grid cannot actually resolve)."""
    m = mask.copy()
    inner = m[1:-1, 1:-1]
    up, down = m[:-2, 1:-1], m[2:, 1:-1]
    left, right = m[1:-1, :-2], m[1:-1, 2:]
    lonely_true = inner & ~up & ~down & ~left & ~right
    lonely_false = ~inner & up & down & left & right
    out = m.copy()
    out[1:-1, 1:-1] = (inner & ~lonely_true) | lonely_false
    return out


def julia_cover(m: MapExpr, grid: GridSpec, max_iter: int = 1000,
                escape_radius: float = None, depth_floor: int = 50,
                cfg: NumericConfig = DEFAULT) -> PointCloud:
    """Union of escape-time level-set boundaries (deep levels only).

    Level sets of the escape time hug the Julia set super-exponentially in
    the level, so every boundary cell at depth >= depth_floor lies within a
    cell of J; the union covers Cantor dust far more densely than the
    single top level.  For maps with Fatou interior the top level dominates
    and this agrees with julia_boundary up to a one-cell fringe.  Each
    level mask is despeckled: one-cell filaments are sampling noise that
    would make clouds of nearby maps incomparable.
    """
    if escape_radius is None:
        escape_radius = max(2.0, min_escape_radius(m))
    times = escape_times(m, grid, max_iter, escape_radius)
    levels = sorted({max(depth_floor, round(max_iter * j / 8))
                     for j in range(1, 9)} | {max_iter + 1})
    total = np.zeros(times.shape, dtype=bool)
    for k in levels:
        total |= boundary_mask(despeckle(times >= k))
    if not total.any():
        raise EmptyWindow("no boundary cell in the grid window")
    return PointCloud(grid.cell_centers()[total], grid.cell_size)


def directed_hausdorff(a: PointCloud, b: PointCloud) -> float:
    """sup over a of the distance to b."""
    if len(a) == 0 or len(b) == 0:
        raise EmptyCloud("empty point cloud")
    tree = cKDTree(b.as_xy())
    d, _ = tree.query(a.as_xy(), k=1)
    return float(d.max())


def hausdorff(a: PointCloud, b: PointCloud) -> float:
    """Exact Hausdorff distance between the two finite point sets."""
    return max(directed_hausdorff(a, b), directed_hausdorff(b, a))


def probe_distance(probe: complex, cloud: PointCloud) -> float:
    if len(cloud) == 0:
        raise EmptyCloud("empty point cloud")
    tree = cKDTree(cloud.as_xy())
    d, _ = tree.query([[probe.real, probe.imag]], k=1)
    return float(d[0])


# ---------------------------------------------------------------------------
# sweeps
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SweepRow:
    param: complex
    d_h: float
    d_h_cells: float
    deficiency: float            # sup over reference cloud of d(., current)
    probe_distances: tuple


@dataclass(frozen=True)
class SweepTable:
    rows: tuple
    cell_size: float
    probes: tuple

    def to_csv(self):
        head = "param,dH,dH_cells,deficiency" + "".join(
            f",probe_{i}" for i in range(len(self.probes)))
        lines = [head]
        for r in self.rows:
            p = (repr(r.param.real) if r.param.imag == 0
                 else f"{r.param.real!r}{'+' if r.param.imag >= 0 else '-'}{abs(r.param.imag)!r}i")
            cells = [p, repr(r.d_h), repr(r.d_h_cells), repr(r.deficiency)]
            cells.extend(repr(x) for x in r.probe_distances)
            lines.append(",".join(cells))
        return "\n".join(lines) + "\n"


def convergence_sweep(family, params, reference_param, grid: GridSpec,
                      probes=(), max_iter: int = 1000,
                      escape_radius: float = None,
                      cfg: NumericConfig = DEFAULT,
                      keep_clouds: bool = False):
    """d_H to the reference cloud per parameter, with the one-sided
    deficiency sup_{x in reference} d(x, current) and per-probe distances.

    `family` maps a parameter value to a MapExpr.  Clouds come from
    julia_cover so measure-zero Julia sets are sampled at depth.
    """
    ref_cloud = julia_cover(family(reference_param), grid, max_iter,
                            escape_radius, cfg=cfg)
    rows = []
    clouds = []
    for p in params:
        cloud = julia_cover(family(p), grid, max_iter, escape_radius, cfg=cfg)
        dh = hausdorff(cloud, ref_cloud)
        deficiency = directed_hausdorff(ref_cloud, cloud)
        pd = tuple(probe_distance(q, cloud) for q in probes)
        rows.append(SweepRow(p, dh, dh / grid.cell_size, deficiency, pd))
        if keep_clouds:
            clouds.append(cloud)
    table = SweepTable(tuple(rows), grid.cell_size, tuple(probes))
    if keep_clouds:
        return table, ref_cloud, clouds
    return table


# ---------------------------------------------------------------------------
# exports
# ---------------------------------------------------------------------------

def cloud_to_csv(cloud: PointCloud) -> str:
    lines = ["x,y"]
    for z in cloud.points:
        lines.append(f"{z.real!r},{z.imag!r}")
    return "\n".join(lines) + "\n"


def mask_to_ppm(mask: np.ndarray) -> bytes:
    """Binary PPM (P6, maxval 255): boundary cells black on white, row 0 at
    the top (image rows run top-down, grid rows bottom-up)."""
    h, w = mask.shape
    img = np.where(mask[::-1, :, None], 0, 255).astype(np.uint8)
    img = np.repeat(img, 3, axis=2)
    return b"P6\n%d %d\n255\n" % (w, h) + img.tobytes()


def cloud_to_ppm(cloud: PointCloud, grid: GridSpec) -> bytes:
    n = grid.resolution
    step = grid.cell_size
    x0 = grid.center.real - grid.half_width
    y0 = grid.center.imag - grid.half_width
    ix = np.clip(((cloud.points.real - x0) / step - 0.5).round().astype(int), 0, n - 1)
    iy = np.clip(((cloud.points.imag - y0) / step - 0.5).round().astype(int), 0, n - 1)
    mask = np.zeros((n, n), dtype=bool)
    mask[iy, ix] = True
    return mask_to_ppm(mask)
