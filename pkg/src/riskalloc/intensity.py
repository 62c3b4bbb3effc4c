"""Kernel estimation of the incident intensity on a raster grid.

Provides the fixed-bandwidth estimator, per-point scaling factors derived
from a pilot estimate, and the adaptive estimator built from both. Every
integral (edge-correction weights, field mass) uses midpoint quadrature on
one shared grid, which makes each data point contribute exactly unit mass
to the estimate: the raster integral of any estimate equals the point count.
"""

import csv
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import NumericError, ParseError
from .geometry import GridSpec, Point, Window

_INV_2PI = 1.0 / (2.0 * math.pi)
_SQRT_2PI = math.sqrt(2.0 * math.pi)


def gaussian_kernel(z) -> float | np.ndarray:
    """Standard isotropic bivariate Gaussian density at displacement(s) z."""
    z = np.asarray(z, dtype=float)
    sq = np.sum(z * z, axis=-1)
    return _INV_2PI * np.exp(-0.5 * sq)


def _phi(t: np.ndarray) -> np.ndarray:
    """1D standard normal density; the 2D kernel factorizes into two of these."""
    return np.exp(-0.5 * t * t) / _SQRT_2PI


@dataclass
class PointPattern:
    """Observed incident locations. Patterns are simple: no duplicate points."""

    points: np.ndarray

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.size == 0:
            pts = pts.reshape(0, 2)
        if pts.ndim != 2 or pts.shape[1] != 2:
            raise ValueError("points must be an (N, 2) array")
        if not np.all(np.isfinite(pts)):
            raise ValueError("point coordinates must be finite")
        if len(np.unique(pts, axis=0)) != len(pts):
            raise ValueError("duplicate points are not allowed (pattern must be simple)")
        self.points = pts

    @property
    def n(self) -> int:
        return len(self.points)

    def require_in_window(self, w: Window) -> "PointPattern":
        if self.n and not np.all(w.contains(self.points[:, 0], self.points[:, 1])):
            raise ValueError("pattern contains points outside the window")
        return self


@dataclass
class ScalingFactors:
    """Per-point bandwidth multipliers; their geometric mean is 1."""

    c: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.c, dtype=float)
        if c.ndim != 1 or not np.all(np.isfinite(c)) or np.any(c <= 0):
            raise ValueError("scaling factors must be a 1D array of positive finite reals")
        self.c = c

    def __len__(self) -> int:
        return len(self.c)


@dataclass
class IntensityField:
    """Estimated intensity sampled at pixel centers; zero outside the window."""

    grid: GridSpec
    values: np.ndarray = field(repr=False)
    mask: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        if vals.shape != (self.grid.ny, self.grid.nx):
            raise ValueError(f"values shape {vals.shape} does not match grid")
        if not np.all(np.isfinite(vals)):
            raise ValueError("field values must be finite")
        if np.any(vals < 0):
            raise ValueError("field values must be non-negative")
        self.values = vals

    @property
    def total_mass(self) -> float:
        return float(self.values.sum()) * self.grid.pixel_area

    def value_at(self, x, y) -> np.ndarray:
        """Field value read from the pixel containing each query point."""
        i, j = self.grid.pixel_of(x, y)
        return self.values[j, i]

    def window_area_raster(self) -> float:
        if self.mask is None:
            raise ValueError("field carries no window mask")
        return float(np.count_nonzero(self.mask)) * self.grid.pixel_area


def pilot_floor(n: int, window_area: float) -> float:
    """Lower clamp for pilot values at data points: 1e-12 of the mean intensity."""
    return 1e-12 * n / window_area


def _kernel_terms(points: np.ndarray, scales: np.ndarray, g: GridSpec, mask: np.ndarray):
    """Edge weights and kernel-sum field for points with per-point scales.

    Returns ``(weights, field)`` where ``weights[k]`` is the raster mass of
    point k's scaled kernel inside the window and ``field`` is the
    edge-corrected kernel sum on the grid (zero outside the window).
    """
    n = len(points)
    if n == 0:
        return np.zeros(0), np.zeros((g.ny, g.nx))
    s = scales[:, None]
    a = _phi((g.y_centers()[None, :] - points[:, 1:2]) / s) / s  # (n, ny)
    b = _phi((g.x_centers()[None, :] - points[:, 0:1]) / s) / s  # (n, nx)
    if mask.all():
        weights = a.sum(axis=1) * b.sum(axis=1) * g.pixel_area
    else:
        weights = np.einsum("ki,ki->k", a @ mask.astype(float), b) * g.pixel_area
    if np.any(weights <= 0):
        raise NumericError(
            "a kernel has zero raster mass inside the window; "
            "increase the bandwidth or the grid resolution"
        )
    fld = (a / weights[:, None]).T @ b
    return weights, np.where(mask, fld, 0.0)


def edge_weight(u: Point, hc: float, w: Window, g: GridSpec) -> float:
    """Kernel mass retained inside the window for a kernel of scale hc at u."""
    if hc <= 0:
        raise ValueError("kernel scale hc must be positive")
    weights, _ = _kernel_terms(
        np.array([[u.x, u.y]]), np.array([hc]), g, g.window_mask(w)
    )
    return float(weights[0])


def _estimate(pattern: PointPattern, scales: np.ndarray, w: Window, g: GridSpec) -> IntensityField:
    mask = g.window_mask(w)
    _, fld = _kernel_terms(pattern.points, scales, g, mask)
    return IntensityField(g, fld, mask)


def fixed_estimate(pattern: PointPattern, h: float, w: Window, g: GridSpec) -> IntensityField:
    """Fixed-bandwidth kernel estimate with global edge correction."""
    if h <= 0:
        raise ValueError("bandwidth h must be positive")
    return _estimate(pattern, np.full(pattern.n, float(h)), w, g)


def adaptive_estimate(
    pattern: PointPattern, h: float, c: ScalingFactors, w: Window, g: GridSpec
) -> IntensityField:
    """Adaptive kernel estimate: point k is smoothed at scale h*c[k]."""
    if h <= 0:
        raise ValueError("bandwidth h must be positive")
    if len(c) != pattern.n:
        raise ValueError(f"scaling factors cover {len(c)} points, pattern has {pattern.n}")
    return _estimate(pattern, h * c.c, w, g)


def scaling_factors(pilot: IntensityField, pattern: PointPattern) -> ScalingFactors:
    """Inverse-square-root factors from pilot values, geometric mean one.

    Pilot values at data points are clamped below at a floor of 1e-12 times
    the mean intensity so isolated points cannot blow up the factors.
    """
    if pattern.n == 0:
        raise ValueError("cannot compute scaling factors for an empty pattern")
    vals = np.asarray(pilot.value_at(pattern.points[:, 0], pattern.points[:, 1]), dtype=float)
    eps = pilot_floor(pattern.n, pilot.window_area_raster())
    vals = np.maximum(vals, eps)
    if not np.all(vals > 0):
        raise ValueError("pilot is not strictly positive at every data point")
    log_vals = np.log(vals)
    c = np.exp(0.5 * (log_vals.mean() - log_vals))
    return ScalingFactors(c)


def _loo_densities(
    points: np.ndarray, scales: np.ndarray, g: GridSpec, mask: np.ndarray
) -> tuple[np.ndarray, IntensityField]:
    """Leave-one-out densities at each data point, plus the full field.

    The density for point k is read from the pixel containing it, with the
    point's own kernel contribution at that pixel center subtracted.
    """
    weights, fld = _kernel_terms(points, scales, g, mask)
    i, j = g.pixel_of(points[:, 0], points[:, 1])
    cx, cy = g.x_centers()[i], g.y_centers()[j]
    own = (
        _phi((cx - points[:, 0]) / scales)
        * _phi((cy - points[:, 1]) / scales)
        / (scales * scales * weights)
    )
    loo = np.maximum(fld[j, i] - own, 0.0)
    return loo, IntensityField(g, fld, mask)


def _loo_cv_score(pattern: PointPattern, scales: np.ndarray, w: Window, g: GridSpec) -> float:
    """Leave-one-out log likelihood: sum of LOO log densities minus field mass.

    A point whose reduced pattern is empty (only possible when the pattern
    has a single point) contributes nothing to the log sum. A vanished LOO
    density with a non-empty reduced pattern makes the score -inf.
    """
    if pattern.n == 0:
        return 0.0
    mask = g.window_mask(w)
    loo, fld = _loo_densities(pattern.points, scales, g, mask)
    integral = fld.total_mass
    if pattern.n == 1:
        return -integral
    if np.any(loo <= 0):
        return -math.inf
    return float(np.log(loo).sum()) - integral


def pilot_estimate(
    pattern: PointPattern, w: Window, g: GridSpec, h_grid
) -> tuple[IntensityField, float]:
    """Fixed-bandwidth pilot chosen by leave-one-out cross-validation.

    Scans the bandwidth grid, keeps the score-maximizing h (smallest h on
    ties) and returns that estimate together with the chosen bandwidth.
    """
    if pattern.n == 0:
        raise ValueError("cannot fit a pilot to an empty pattern")
    h_values = sorted(float(h) for h in h_grid)
    if not h_values or h_values[0] <= 0:
        raise ValueError("h_grid must be a non-empty list of positive reals")
    best_h, best_score, best_field = None, -math.inf, None
    for h in h_values:
        scales = np.full(pattern.n, h)
        score = _loo_cv_score(pattern, scales, w, g)
        if best_h is None or score > best_score:
            best_h, best_score = h, score
            best_field = _estimate(pattern, scales, w, g)
    if not math.isfinite(best_score) and pattern.n > 1:
        raise NumericError("every pilot bandwidth gave a -inf cross-validation score")
    return best_field, best_h


def integrate_field(f: IntensityField, region: np.ndarray) -> float:
    """Raster integral of the field over a boolean pixel mask."""
    region = np.asarray(region, dtype=bool)
    if region.shape != f.values.shape:
        raise ValueError("region mask shape does not match the field grid")
    return float(f.values[region].sum()) * f.grid.pixel_area


def load_incidents_csv(path, w: Window | None = None) -> PointPattern:
    """Read incidents with header `x,y`; rejects duplicates and out-of-window points."""
    rows = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != ["x", "y"]:
            raise ParseError(f"{path}:1: expected header 'x,y'")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 2:
                raise ParseError(f"{path}:{lineno}: expected two fields, got {len(row)}")
            try:
                rows.append((float(row[0]), float(row[1])))
            except ValueError:
                raise ParseError(f"{path}:{lineno}: non-numeric coordinates") from None
    pattern = PointPattern(np.array(rows, dtype=float).reshape(len(rows), 2))
    if w is not None:
        pattern.require_in_window(w)
    return pattern


def write_incidents_csv(pattern: PointPattern, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["x", "y"])
        for x, y in pattern.points:
            writer.writerow([repr(float(x)), repr(float(y))])


def write_field_csv(f: IntensityField, path, h: float | None = None) -> None:
    """Write `px,py,value` rows plus a JSON sidecar with grid metadata."""
    path = str(path)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["px", "py", "value"])
        for j in range(f.grid.ny):
            for i in range(f.grid.nx):
                writer.writerow([i, j, repr(float(f.values[j, i]))])
    meta = {
        "nx": f.grid.nx,
        "ny": f.grid.ny,
        "origin_x": f.grid.origin.x,
        "origin_y": f.grid.origin.y,
        "dx": f.grid.dx,
        "dy": f.grid.dy,
        "h": h,
        "total_mass": f.total_mass,
    }
    with open(_sidecar_path(path), "w") as fh:
        json.dump(meta, fh, sort_keys=True, indent=2)
        fh.write("\n")


def _sidecar_path(path: str) -> str:
    return (path[: -len(".csv")] if path.endswith(".csv") else path) + ".json"


def load_field_csv(path, w: Window | None = None) -> IntensityField:
    """Rebuild a field from its CSV and JSON sidecar (window restores the mask)."""
    path = str(path)
    with open(_sidecar_path(path)) as fh:
        meta = json.load(fh)
    grid = GridSpec(
        meta["nx"], meta["ny"], Point(meta["origin_x"], meta["origin_y"]), meta["dx"], meta["dy"]
    )
    values = np.zeros((grid.ny, grid.nx))
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != ["px", "py", "value"]:
            raise ParseError(f"{path}:1: expected header 'px,py,value'")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            try:
                values[int(row[1]), int(row[0])] = float(row[2])
            except (ValueError, IndexError):
                raise ParseError(f"{path}:{lineno}: bad field row") from None
    mask = grid.window_mask(w) if w is not None else None
    return IntensityField(grid, values, mask)
