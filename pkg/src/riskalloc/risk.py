"""Per-station risks: the intensity integrated over each catchment."""

import csv
from dataclasses import dataclass, field
from decimal import Decimal, InvalidOperation
from fractions import Fraction

from .errors import ParseError
from .geometry import CatchmentPartition
from .intensity import IntensityField, integrate_field


@dataclass
class RiskTable:
    """Station id -> expected incident count in its catchment per period."""

    entries: dict[str, float | Fraction]
    period: str = field(default="")

    def __post_init__(self):
        for s, v in self.entries.items():
            if not (float(v) >= 0.0):
                raise ValueError(f"risk for station {s!r} must be finite and >= 0")

    def total(self) -> float:
        return float(sum(float(v) for v in self.entries.values()))


def catchment_risks(fld: IntensityField, part: CatchmentPartition, period: str = "") -> RiskTable:
    """Integrate the field over every catchment cell of the partition."""
    if (
        fld.grid.nx != part.grid.nx
        or fld.grid.ny != part.grid.ny
        or fld.grid.dx != part.grid.dx
        or fld.grid.dy != part.grid.dy
        or fld.grid.origin != part.grid.origin
    ):
        raise ValueError("field and partition use different grids")
    entries = {
        s: integrate_field(fld, part.cell_mask(s)) for s in part.station_ids
    }
    return RiskTable(entries, period)


def apply_floor(table: RiskTable, floor: float) -> RiskTable:
    """Clamp every risk below at a positive floor (for downstream allocation)."""
    if floor <= 0:
        raise ValueError("risk floor must be positive")
    return RiskTable({s: max(v, floor) for s, v in table.entries.items()}, table.period)


def read_risk_csv(path) -> RiskTable:
    """Read `station,risk` rows; decimal strings become exact rationals."""
    entries: dict[str, Fraction] = {}
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != ["station", "risk"]:
            raise ParseError(f"{path}:1: expected header 'station,risk'")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 2:
                raise ParseError(f"{path}:{lineno}: expected two fields, got {len(row)}")
            sid = row[0].strip()
            if sid in entries:
                raise ParseError(f"{path}:{lineno}: duplicate station {sid!r}")
            try:
                value = Fraction(Decimal(row[1].strip()))
            except (InvalidOperation, ValueError):
                raise ParseError(f"{path}:{lineno}: bad risk value {row[1]!r}") from None
            if value < 0:
                raise ParseError(f"{path}:{lineno}: negative risk")
            entries[sid] = value
    if not entries:
        raise ParseError(f"{path}: no stations found")
    return RiskTable(entries)


def write_risk_csv(table: RiskTable, path) -> None:
    """Write `station,risk` rows sorted by descending risk."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["station", "risk"])
        for s, v in sorted(table.entries.items(), key=lambda kv: (-float(kv[1]), kv[0])):
            writer.writerow([s, repr(float(v))])
