"""Observation windows, raster grids, stations and catchment partitions.

All estimation and integration in this package happens on a shared raster
grid of pixel centers. Catchments are nearest-station (Voronoi) cells
rasterized on that grid; boundaries count as inside the window.
"""

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ParseError

#: Relative tolerance used to decide that a point sits on a window boundary.
_BOUNDARY_RTOL = 1e-9


@dataclass(frozen=True)
class Point:
    """A planar location in meters (projected coordinates)."""

    x: float
    y: float

    def __post_init__(self):
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise ValueError(f"point coordinates must be finite, got ({self.x}, {self.y})")


class RectWindow:
    """Axis-aligned rectangular observation window."""

    def __init__(self, xmin: float, ymin: float, xmax: float, ymax: float):
        if not all(math.isfinite(v) for v in (xmin, ymin, xmax, ymax)):
            raise ValueError("rectangle bounds must be finite")
        if xmax <= xmin or ymax <= ymin:
            raise ValueError(
                f"invalid window: empty rectangle [{xmin},{xmax}]x[{ymin},{ymax}]"
            )
        self.xmin, self.ymin, self.xmax, self.ymax = xmin, ymin, xmax, ymax

    @property
    def area(self) -> float:
        return (self.xmax - self.xmin) * (self.ymax - self.ymin)

    def bbox(self) -> tuple[float, float, float, float]:
        return self.xmin, self.ymin, self.xmax, self.ymax

    def contains(self, x, y) -> np.ndarray:
        """Vectorized membership test; boundary counts as inside."""
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        return (x >= self.xmin) & (x <= self.xmax) & (y >= self.ymin) & (y <= self.ymax)

    def __repr__(self):
        return f"RectWindow({self.xmin}, {self.ymin}, {self.xmax}, {self.ymax})"


class PolygonWindow:
    """Simple-polygon observation window (vertices in order, closed implicitly)."""

    def __init__(self, vertices):
        verts = np.asarray(vertices, dtype=float)
        if verts.ndim != 2 or verts.shape[1] != 2 or verts.shape[0] < 3:
            raise ValueError("polygon needs at least 3 (x, y) vertices")
        if not np.all(np.isfinite(verts)):
            raise ValueError("polygon vertices must be finite")
        # Drop an explicitly repeated closing vertex.
        if np.allclose(verts[0], verts[-1]):
            verts = verts[:-1]
        if verts.shape[0] < 3:
            raise ValueError("polygon needs at least 3 distinct vertices")
        self.vertices = verts
        if self.area <= 0.0:
            raise ValueError("invalid window: degenerate polygon (zero area)")
        if not _polygon_is_simple(verts):
            raise ValueError("invalid window: polygon is self-intersecting")

    @property
    def area(self) -> float:
        return abs(_shoelace(self.vertices))

    def bbox(self) -> tuple[float, float, float, float]:
        xs, ys = self.vertices[:, 0], self.vertices[:, 1]
        return xs.min(), ys.min(), xs.max(), ys.max()

    def contains(self, x, y) -> np.ndarray:
        """Even-odd ray casting; points on an edge count as inside."""
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        shape = np.broadcast_shapes(x.shape, y.shape)
        px = np.broadcast_to(x, shape).ravel()
        py = np.broadcast_to(y, shape).ravel()
        inside = np.zeros(px.shape, dtype=bool)
        on_edge = np.zeros(px.shape, dtype=bool)
        verts = self.vertices
        xmin, ymin, xmax, ymax = self.bbox()
        eps = _BOUNDARY_RTOL * max(xmax - xmin, ymax - ymin)
        n = len(verts)
        for k in range(n):
            x1, y1 = verts[k]
            x2, y2 = verts[(k + 1) % n]
            crosses = (y1 > py) != (y2 > py)
            with np.errstate(divide="ignore", invalid="ignore"):
                xint = x1 + (py - y1) * (x2 - x1) / (y2 - y1)
            inside ^= crosses & (px < xint)
            on_edge |= _near_segment(px, py, x1, y1, x2, y2, eps)
        return (inside | on_edge).reshape(shape)

    def __repr__(self):
        return f"PolygonWindow(<{len(self.vertices)} vertices>)"


Window = RectWindow | PolygonWindow


def _shoelace(verts: np.ndarray) -> float:
    x, y = verts[:, 0], verts[:, 1]
    return 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))


def _near_segment(px, py, x1, y1, x2, y2, eps) -> np.ndarray:
    """True where (px, py) lies within eps of segment (x1,y1)-(x2,y2)."""
    dx, dy = x2 - x1, y2 - y1
    seg_sq = dx * dx + dy * dy
    if seg_sq == 0.0:
        return (px - x1) ** 2 + (py - y1) ** 2 <= eps * eps
    t = np.clip(((px - x1) * dx + (py - y1) * dy) / seg_sq, 0.0, 1.0)
    qx, qy = x1 + t * dx, y1 + t * dy
    return (px - qx) ** 2 + (py - qy) ** 2 <= eps * eps


def _segments_cross(p1, p2, p3, p4) -> bool:
    def orient(a, b, c):
        v = (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
        return int(v > 0) - int(v < 0)

    def on_seg(a, b, c):
        return (
            min(a[0], b[0]) <= c[0] <= max(a[0], b[0])
            and min(a[1], b[1]) <= c[1] <= max(a[1], b[1])
        )

    o1, o2 = orient(p1, p2, p3), orient(p1, p2, p4)
    o3, o4 = orient(p3, p4, p1), orient(p3, p4, p2)
    if o1 != o2 and o3 != o4:
        return True
    if o1 == 0 and on_seg(p1, p2, p3):
        return True
    if o2 == 0 and on_seg(p1, p2, p4):
        return True
    if o3 == 0 and on_seg(p3, p4, p1):
        return True
    if o4 == 0 and on_seg(p3, p4, p2):
        return True
    return False


def _polygon_is_simple(verts: np.ndarray) -> bool:
    n = len(verts)
    for i in range(n):
        for j in range(i + 1, n):
            # Skip edges that share a vertex (adjacent, or first/last pair).
            if j == i or (j + 1) % n == i or (i + 1) % n == j:
                continue
            if _segments_cross(verts[i], verts[(i + 1) % n], verts[j], verts[(j + 1) % n]):
                return False
    return True


def window_area(w: Window) -> float:
    """Exact window area: rectangle product or shoelace polygon area."""
    area = w.area
    if not (area > 0.0 and math.isfinite(area)):
        raise ValueError("invalid window: zero or non-finite area")
    return area


@dataclass(frozen=True)
class GridSpec:
    """Raster of nx*ny pixels; pixel (i, j) has center origin + ((i+.5)dx, (j+.5)dy)."""

    nx: int
    ny: int
    origin: Point
    dx: float
    dy: float

    def __post_init__(self):
        if self.nx < 1 or self.ny < 1:
            raise ValueError("grid needs at least one pixel per axis")
        if self.dx <= 0 or self.dy <= 0:
            raise ValueError("pixel edge lengths must be positive")

    @classmethod
    def for_window(cls, w: Window, nx: int = 256, ny: int = 256) -> "GridSpec":
        """Grid exactly covering the window's bounding box."""
        xmin, ymin, xmax, ymax = w.bbox()
        return cls(nx, ny, Point(xmin, ymin), (xmax - xmin) / nx, (ymax - ymin) / ny)

    @property
    def pixel_area(self) -> float:
        return self.dx * self.dy

    def x_centers(self) -> np.ndarray:
        return self.origin.x + (np.arange(self.nx) + 0.5) * self.dx

    def y_centers(self) -> np.ndarray:
        return self.origin.y + (np.arange(self.ny) + 0.5) * self.dy

    def pixel_of(self, x, y) -> tuple[np.ndarray, np.ndarray]:
        """Indices (i, j) of the pixels containing the given coordinates."""
        i = np.clip(((np.asarray(x) - self.origin.x) // self.dx).astype(int), 0, self.nx - 1)
        j = np.clip(((np.asarray(y) - self.origin.y) // self.dy).astype(int), 0, self.ny - 1)
        return i, j

    def covers(self, w: Window) -> bool:
        xmin, ymin, xmax, ymax = w.bbox()
        slack_x, slack_y = _BOUNDARY_RTOL * self.nx * self.dx, _BOUNDARY_RTOL * self.ny * self.dy
        return (
            self.origin.x <= xmin + slack_x
            and self.origin.y <= ymin + slack_y
            and self.origin.x + self.nx * self.dx >= xmax - slack_x
            and self.origin.y + self.ny * self.dy >= ymax - slack_y
        )

    def window_mask(self, w: Window) -> np.ndarray:
        """Boolean (ny, nx) mask of pixel centers inside the window."""
        xs, ys = np.meshgrid(self.x_centers(), self.y_centers())
        return w.contains(xs, ys)


@dataclass(frozen=True)
class Station:
    """A dispatch location (fire station, ambulance post, ...)."""

    id: str
    location: Point


@dataclass
class CatchmentPartition:
    """Per-pixel nearest-station labels; -1 marks pixels outside the window.

    ``labels[j, i]`` indexes into ``station_ids`` for the pixel with center
    ``(x_centers[i], y_centers[j])``.
    """

    grid: GridSpec
    station_ids: list[str]
    labels: np.ndarray = field(repr=False)

    @property
    def pixel_area(self) -> float:
        return self.grid.pixel_area

    def in_window(self) -> np.ndarray:
        return self.labels >= 0

    def cell_mask(self, station_id: str) -> np.ndarray:
        return self.labels == self._index_of(station_id)

    def _index_of(self, station_id: str) -> int:
        try:
            return self.station_ids.index(station_id)
        except ValueError:
            raise ValueError(f"unknown station id: {station_id!r}") from None


def build_partition(stations: list[Station], w: Window, g: GridSpec) -> CatchmentPartition:
    """Label every in-window pixel center with its nearest station.

    Distance ties go to the lexicographically smallest station id, so the
    result does not depend on the order of the input list.
    """
    if not stations:
        raise ValueError("at least one station is required")
    ids = [s.id for s in stations]
    if len(set(ids)) != len(ids):
        raise ValueError("station ids must be unique")
    locs = {(s.location.x, s.location.y) for s in stations}
    if len(locs) != len(stations):
        raise ValueError("duplicate station locations")
    inside = w.contains([s.location.x for s in stations], [s.location.y for s in stations])
    if not np.all(inside):
        bad = [s.id for s, ok in zip(stations, inside) if not ok]
        raise ValueError(f"stations outside the window: {bad}")
    if not g.covers(w):
        raise ValueError("grid bounding box does not contain the window")

    ordered = sorted(stations, key=lambda s: s.id)
    xs, ys = np.meshgrid(g.x_centers(), g.y_centers())
    # (S, ny, nx) squared distances; argmin picks the first (smallest id) on ties.
    d2 = np.stack(
        [(xs - s.location.x) ** 2 + (ys - s.location.y) ** 2 for s in ordered]
    )
    labels = np.argmin(d2, axis=0).astype(np.int32)
    labels[~g.window_mask(w)] = -1
    return CatchmentPartition(g, [s.id for s in ordered], labels)


def cell_area(p: CatchmentPartition, station_id: str) -> float:
    """Rasterized catchment area: pixel count times pixel area."""
    return int(np.count_nonzero(p.cell_mask(station_id))) * p.pixel_area


def load_window(path) -> Window:
    """Read a window file: one `RECT xmin ymin xmax ymax` line, or an x,y vertex CSV."""
    with open(path, newline="") as fh:
        first = fh.readline().strip()
        if first.upper().startswith("RECT"):
            parts = first.split()
            if len(parts) != 5:
                raise ParseError(f"{path}:1: expected 'RECT xmin ymin xmax ymax'")
            try:
                xmin, ymin, xmax, ymax = (float(v) for v in parts[1:])
            except ValueError:
                raise ParseError(f"{path}:1: non-numeric rectangle bounds") from None
            return RectWindow(xmin, ymin, xmax, ymax)
        if [h.strip() for h in first.split(",")] != ["x", "y"]:
            raise ParseError(f"{path}:1: expected header 'x,y' or a RECT line")
        verts = []
        for lineno, row in enumerate(csv.reader(fh), start=2):
            if not row:
                continue
            if len(row) != 2:
                raise ParseError(f"{path}:{lineno}: expected two fields, got {len(row)}")
            try:
                verts.append((float(row[0]), float(row[1])))
            except ValueError:
                raise ParseError(f"{path}:{lineno}: non-numeric vertex") from None
    return PolygonWindow(verts)


def load_stations_csv(path, w: Window | None = None) -> list[Station]:
    """Read a stations file with header `id,x,y`; optionally check containment."""
    stations = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != ["id", "x", "y"]:
            raise ParseError(f"{path}:1: expected header 'id,x,y'")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 3:
                raise ParseError(f"{path}:{lineno}: expected three fields, got {len(row)}")
            try:
                stations.append(Station(row[0].strip(), Point(float(row[1]), float(row[2]))))
            except ValueError:
                raise ParseError(f"{path}:{lineno}: non-numeric coordinates") from None
    if not stations:
        raise ParseError(f"{path}: no stations found")
    ids = [s.id for s in stations]
    if len(set(ids)) != len(ids):
        raise ParseError(f"{path}: duplicate station ids")
    if w is not None:
        inside = w.contains([s.location.x for s in stations], [s.location.y for s in stations])
        if not np.all(inside):
            bad = [s.id for s, ok in zip(stations, inside) if not ok]
            raise ValueError(f"stations outside the window: {bad}")
    return stations


def write_stations_csv(stations: list[Station], path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["id", "x", "y"])
        for s in stations:
            writer.writerow([s.id, repr(s.location.x), repr(s.location.y)])
