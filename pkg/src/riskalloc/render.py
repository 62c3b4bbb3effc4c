"""Static rendering of intensity fields and risk maps.

Three output flavors: a plain-text PGM of the field (no dependencies to
view), a hand-written SVG choropleth of catchments classed by risk
quantile, and matplotlib figures for reports.
"""

import numpy as np

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

from .geometry import CatchmentPartition, Station
from .intensity import IntensityField, PointPattern
from .risk import RiskTable

#: Sequential fill colors for the risk-quantile classes q0 (low) .. q4 (high).
CLASS_COLORS = ["#ffffb2", "#fecc5c", "#fd8d3c", "#f03b20", "#bd0026"]


def write_pgm(fld: IntensityField, path) -> None:
    """Plain (P2) PGM of the field, min-max normalized to 0..255, top row first."""
    vals = fld.values
    vmin, vmax = float(vals.min()), float(vals.max())
    if vmax > vmin:
        levels = np.rint(255.0 * (vals - vmin) / (vmax - vmin)).astype(int)
    else:
        levels = np.full(vals.shape, 255 if vmax > 0 else 0, dtype=int)
    lines = [f"P2", f"{fld.grid.nx} {fld.grid.ny}", "255"]
    for j in range(fld.grid.ny - 1, -1, -1):
        row = levels[j]
        # Keep lines under the 70-character PGM convention.
        for start in range(0, len(row), 16):
            lines.append(" ".join(str(v) for v in row[start : start + 16]))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def risk_classes(table: RiskTable, n_classes: int = 5) -> dict[str, int]:
    """Quantile class (0 = lowest risk) per station; equal risks share a class."""
    values = np.array([float(v) for v in table.entries.values()])
    edges = np.quantile(values, [k / n_classes for k in range(1, n_classes)])
    return {
        s: int(np.searchsorted(edges, float(v), side="left"))
        for s, v in table.entries.items()
    }


def _svg_xy(part: CatchmentPartition, x: float, y: float) -> tuple[float, float]:
    g = part.grid
    return (x - g.origin.x) / g.dx, g.ny - (y - g.origin.y) / g.dy


def _runs(mask_row: np.ndarray):
    """(start, length) runs of consecutive True pixels in one row."""
    idx = np.flatnonzero(mask_row)
    if idx.size == 0:
        return
    breaks = np.flatnonzero(np.diff(idx) > 1)
    starts = np.concatenate([[0], breaks + 1])
    ends = np.concatenate([breaks, [idx.size - 1]])
    for a, b in zip(starts, ends):
        yield int(idx[a]), int(idx[b] - idx[a] + 1)


def write_svg_choropleth(
    part: CatchmentPartition,
    table: RiskTable,
    path,
    stations: list[Station] | None = None,
    pattern: PointPattern | None = None,
    n_classes: int = 5,
) -> None:
    """SVG of the catchments filled by risk-quantile class, with overlays.

    Each catchment is one `<g class="cell qN">` of row-run rectangles in
    pixel coordinates; station and incident dots are drawn on top.
    """
    classes = risk_classes(table, n_classes)
    g = part.grid
    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {g.nx} {g.ny}" '
        f'width="{2 * g.nx}" height="{2 * g.ny}">',
        "<style>",
        *(
            f".q{k} {{ fill: {color}; }}"
            for k, color in enumerate(CLASS_COLORS[:n_classes])
        ),
        ".station { fill: #000000; stroke: #ffffff; stroke-width: 0.4; }",
        ".incident { fill: #1f4e79; fill-opacity: 0.55; }",
        "</style>",
    ]
    for idx, sid in enumerate(part.station_ids):
        cell = part.labels == idx
        out.append(f'<g class="cell q{classes[sid]}" id="cell-{_slug(sid)}">')
        for j in range(g.ny):
            for start, length in _runs(cell[j]):
                out.append(
                    f'<rect x="{start}" y="{g.ny - 1 - j}" width="{length}" height="1"/>'
                )
        out.append("</g>")
    if pattern is not None:
        for x, y in pattern.points:
            cx, cy = _svg_xy(part, float(x), float(y))
            out.append(f'<circle class="incident" cx="{cx:.2f}" cy="{cy:.2f}" r="0.7"/>')
    if stations is not None:
        for s in stations:
            cx, cy = _svg_xy(part, s.location.x, s.location.y)
            out.append(f'<circle class="station" cx="{cx:.2f}" cy="{cy:.2f}" r="1.8"/>')
    out.append("</svg>")
    with open(path, "w") as fh:
        fh.write("\n".join(out) + "\n")


def _slug(station_id: str) -> str:
    return "".join(ch if ch.isalnum() or ch in "-_" else "_" for ch in station_id)


def _extent(grid) -> tuple[float, float, float, float]:
    return (
        grid.origin.x,
        grid.origin.x + grid.nx * grid.dx,
        grid.origin.y,
        grid.origin.y + grid.ny * grid.dy,
    )


def save_field_png(
    fld: IntensityField,
    path,
    stations: list[Station] | None = None,
    pattern: PointPattern | None = None,
) -> None:
    """Matplotlib heatmap of the intensity with optional dot overlays."""
    fig, ax = plt.subplots(figsize=(6, 6))
    img = ax.imshow(
        fld.values, origin="lower", extent=_extent(fld.grid), cmap="viridis", aspect="equal"
    )
    fig.colorbar(img, ax=ax, shrink=0.8, label="intensity")
    if pattern is not None and pattern.n:
        ax.plot(pattern.points[:, 0], pattern.points[:, 1], ".", ms=2, color="white", alpha=0.6)
    if stations is not None:
        ax.plot(
            [s.location.x for s in stations],
            [s.location.y for s in stations],
            "^",
            ms=7,
            color="red",
            mec="white",
        )
    ax.set_xlabel("x (m)")
    ax.set_ylabel("y (m)")
    ax.set_title("estimated incident intensity")
    fig.savefig(path, dpi=150, bbox_inches="tight")
    plt.close(fig)


def save_risk_png(
    part: CatchmentPartition,
    table: RiskTable,
    path,
    stations: list[Station] | None = None,
    n_classes: int = 5,
) -> None:
    """Matplotlib choropleth of catchments colored by risk quantile."""
    classes = risk_classes(table, n_classes)
    class_map = np.full(part.labels.shape, np.nan)
    for idx, sid in enumerate(part.station_ids):
        class_map[part.labels == idx] = classes[sid]
    cmap = matplotlib.colors.ListedColormap(CLASS_COLORS[:n_classes])
    cmap.set_bad("#ffffff")
    fig, ax = plt.subplots(figsize=(6, 6))
    img = ax.imshow(
        class_map,
        origin="lower",
        extent=_extent(part.grid),
        cmap=cmap,
        vmin=-0.5,
        vmax=n_classes - 0.5,
        aspect="equal",
    )
    cbar = fig.colorbar(img, ax=ax, shrink=0.8, ticks=range(n_classes))
    cbar.set_label("risk quantile class")
    if stations is not None:
        ax.plot(
            [s.location.x for s in stations],
            [s.location.y for s in stations],
            "o",
            ms=5,
            color="black",
            mec="white",
        )
    ax.set_xlabel("x (m)")
    ax.set_ylabel("y (m)")
    ax.set_title("catchment risk map")
    fig.savefig(path, dpi=150, bbox_inches="tight")
    plt.close(fig)
