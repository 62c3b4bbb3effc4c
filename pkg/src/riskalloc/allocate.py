"""Integer minimax allocation of vehicles to stations and crews to vehicles.

All ratio comparisons run in exact rational arithmetic: decimal-string
risks convert exactly, and binary floats embed exactly in the rationals,
so argmax decisions and tie detection are never subject to rounding. The
greedy allocators provably minimize the maximal risk per resource unit;
``brute_force_minimax`` certifies that on small instances by enumeration.
"""

import csv
import math
from dataclasses import dataclass, field
from decimal import Decimal, InvalidOperation
from fractions import Fraction
from typing import Mapping, Sequence

from .errors import InfeasibleError, ParseError


def exact_value(value) -> Fraction:
    """Convert a risk value to an exact rational."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, str):
        try:
            return Fraction(Decimal(value))
        except (InvalidOperation, ValueError):
            raise ValueError(f"cannot parse risk value {value!r}") from None
    if isinstance(value, Decimal):
        return Fraction(value)
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, float):
        if not math.isfinite(value):
            raise ValueError("risk values must be finite")
        return Fraction(value)
    return Fraction(float(value))


def _positive_risks(risks) -> dict[str, Fraction]:
    """Validated station -> risk map in exact arithmetic; risks must be > 0."""
    entries = getattr(risks, "entries", risks)
    if not entries:
        raise ValueError("no stations given")
    lam = {str(s): exact_value(v) for s, v in entries.items()}
    nonpos = [s for s, v in lam.items() if v <= 0]
    if nonpos:
        raise ValueError(f"risks must be strictly positive, offending stations: {nonpos}")
    return lam


def format_sig(value, digits: int = 4) -> str:
    """Render a number to a given count of significant digits (CLI style)."""
    return f"{float(value):.{digits}g}"


@dataclass
class CostTable:
    """Per-activity cost values f(0..m) with a convexity declaration."""

    tables: dict[str, Sequence]
    convex: bool = True

    def length(self) -> int:
        return min(len(v) for v in self.tables.values()) - 1

    def increments(self, activity: str) -> list:
        vals = self.tables[activity]
        return [vals[i] - vals[i - 1] for i in range(1, len(vals))]


def greedy_convex_sum(costs: CostTable, budget: int) -> dict[str, int]:
    """Minimize the summed cost of a split of `budget` units over activities.

    Runs `budget` rounds of smallest-increment selection. Within one
    activity earlier increments are taken first; equal increments across
    activities go to the smallest activity id.
    """
    if budget < 0:
        raise ValueError("budget must be non-negative")
    if not costs.tables:
        raise ValueError("no activities given")
    if budget > costs.length():
        raise ValueError(
            f"budget {budget} exceeds cost table length {costs.length()}"
        )
    if not costs.convex:
        raise ValueError("greedy_convex_sum needs a convex cost table")
    incs = {s: costs.increments(s) for s in costs.tables}
    for s, d in incs.items():
        if any(b < a for a, b in zip(d, d[1:])):
            raise ValueError(f"cost table for {s!r} is not convex")
    ids = sorted(costs.tables)
    n = {s: 0 for s in ids}
    for _ in range(budget):
        best = min(ids, key=lambda s: incs[s][n[s]])
        n[best] += 1
    assert sum(n.values()) == budget
    return n


def minimax_via_cumsum(costs: CostTable, budget: int) -> dict[str, int]:
    """Minimize the maximal per-activity cost via the cumulative-sum transform.

    Requires non-decreasing, non-negative cost values; their running sums
    form a convex table whose sum-minimizer is also a minimax solution.
    """
    for s, vals in costs.tables.items():
        if any(v < 0 for v in vals):
            raise ValueError(f"cost table for {s!r} has negative values")
        if any(b < a for a, b in zip(vals, vals[1:])):
            raise ValueError(f"cost table for {s!r} is not non-decreasing")
    cum = {}
    for s, vals in costs.tables.items():
        running, out = 0, []
        for v in vals:
            running = running + v
            out.append(running)
        cum[s] = out
    return greedy_convex_sum(CostTable(cum, convex=True), budget)


@dataclass
class VehicleAllocation:
    """Vehicle counts, the order extras were assigned, and the achieved objective."""

    counts: dict[str, int]
    order_log: list[tuple[int, str]] = field(default_factory=list)
    objective: Fraction = Fraction(0)


@dataclass
class CrewAllocation:
    """Crew head counts per station with the derived operational-vehicle view."""

    f: dict[str, int]
    order_log: list[tuple[int, str]]
    objective: Fraction
    operational: dict[str, int]
    slack: dict[str, int]


def allocate_vehicles(risks, K: int) -> VehicleAllocation:
    """Greedy minimax assignment of K vehicles, one statutory unit per station.

    Each round adds a vehicle to a station with the highest risk per
    vehicle; ties prefer the larger risk, then the smallest id. The result
    minimizes the maximal risk per vehicle.
    """
    lam = _positive_risks(risks)
    size = len(lam)
    if K < size:
        raise InfeasibleError(f"K >= |S| violated: K={K} < |S|={size}")
    ids = sorted(lam)
    n = {s: 1 for s in ids}
    log = []
    for k in range(1, K - size + 1):
        best = max(ids, key=lambda s: (lam[s] / n[s], lam[s]))
        n[best] += 1
        log.append((k, best))
    objective = max(lam[s] / n[s] for s in ids)
    assert sum(n.values()) == K
    assert all(1 <= n[s] <= K - size + 1 for s in ids)
    return VehicleAllocation(n, log, objective)


def closed_form_vehicles(risks, K: int) -> VehicleAllocation:
    """Vehicle counts from the ranked-ratio closed form (no order log).

    Ranks every candidate ratio risk/j for j extra vehicles and gives each
    station one unit per candidate ranked among the K - |S| largest. Agrees
    with the greedy counts whenever no two candidate ratios tie, and with
    its objective always.
    """
    lam = _positive_risks(risks)
    size = len(lam)
    if K < size:
        raise InfeasibleError(f"K >= |S| violated: K={K} < |S|={size}")
    ids = sorted(lam)
    extras = K - size
    n = {s: 1 for s in ids}
    if extras:
        candidates = [(lam[s] / j, lam[s], s, j) for s in ids for j in range(1, extras + 1)]
        candidates.sort(key=lambda t: (-t[0], -t[1], t[2], t[3]))
        for _, _, s, _ in candidates[:extras]:
            n[s] += 1
    objective = max(lam[s] / n[s] for s in ids)
    assert sum(n.values()) == K
    return VehicleAllocation(n, [], objective)


def allocate_crews(risks, n: Mapping[str, int], alpha: int, K: int) -> CrewAllocation:
    """Greedy minimax assignment of K crew members under vehicle caps.

    Every station starts with one statutory crew of alpha members. Each
    round adds one member to an eligible station (below its vehicle
    capacity alpha*n) with the highest risk per operational vehicle;
    ties prefer the station with the largest partial crew, then the larger
    risk, then the smallest id. Partial-crew preference concentrates slack
    on a single station.
    """
    lam = _positive_risks(risks)
    if set(n) != set(lam):
        raise ValueError("vehicle counts and risks cover different stations")
    if any(int(n[s]) < 1 for s in n):
        raise ValueError("every station needs at least one vehicle")
    if alpha < 2:
        raise ValueError("crew size alpha must be at least 2")
    ids = sorted(lam)
    size = len(ids)
    capacity = alpha * sum(int(n[s]) for s in ids)
    if K < alpha * size:
        raise InfeasibleError(
            f"alpha*|S| <= K violated: K={K} < alpha*|S|={alpha * size}"
        )
    if K >= capacity:
        raise InfeasibleError(
            f"K < alpha*sum(n) violated: K={K} >= alpha*sum(n)={capacity}"
        )
    f = {s: alpha for s in ids}
    log = []
    for k in range(1, K - alpha * size + 1):
        eligible = [s for s in ids if f[s] < alpha * int(n[s])]
        best = max(eligible, key=lambda s: (lam[s] / (f[s] // alpha), f[s] % alpha, lam[s]))
        f[best] += 1
        log.append((k, best))
    operational = {s: f[s] // alpha for s in ids}
    slack = {s: f[s] % alpha for s in ids}
    objective = max(lam[s] / operational[s] for s in ids)
    assert sum(f.values()) == K
    assert all(alpha <= f[s] <= alpha * int(n[s]) for s in ids)
    assert sum(1 for s in ids if slack[s]) <= 1
    return CrewAllocation(f, log, objective, operational, slack)


def _compositions(bounds: list[tuple[int, int]], total: int):
    """All integer vectors within the given per-slot bounds summing to total."""
    lo_suffix = [0] * (len(bounds) + 1)
    hi_suffix = [0] * (len(bounds) + 1)
    for i in range(len(bounds) - 1, -1, -1):
        lo_suffix[i] = lo_suffix[i + 1] + bounds[i][0]
        hi_suffix[i] = hi_suffix[i + 1] + bounds[i][1]
    out = [0] * len(bounds)

    def rec(i, remaining):
        if i == len(bounds):
            if remaining == 0:
                yield tuple(out)
            return
        lo = max(bounds[i][0], remaining - hi_suffix[i + 1])
        hi = min(bounds[i][1], remaining - lo_suffix[i + 1])
        for v in range(lo, hi + 1):
            out[i] = v
            yield from rec(i + 1, remaining - v)

    yield from rec(0, total)


def brute_force_minimax(
    risks,
    K: int,
    mode: str = "vehicles",
    n: Mapping[str, int] | None = None,
    alpha: int | None = None,
    cap: int = 10_000_000,
):
    """Exhaustive minimax optimum over all feasible allocations.

    Returns ``(objective, witness)`` where the witness is one optimal
    allocation map. Refuses instances whose search space exceeds ``cap``.
    """
    lam = _positive_risks(risks)
    ids = sorted(lam)
    size = len(ids)
    if mode == "vehicles":
        if K < size:
            raise InfeasibleError(f"K >= |S| violated: K={K} < |S|={size}")
        count = math.comb(K - 1, size - 1)
        if count > cap:
            raise ValueError(
                f"search space of {count} allocations exceeds the cap of {cap}; "
                "use a smaller instance"
            )
        bounds = [(1, K - size + 1)] * size

        def objective(vec):
            return max(lam[s] / v for s, v in zip(ids, vec))

    elif mode == "crews":
        if n is None or alpha is None:
            raise ValueError("crews mode needs vehicle counts n and crew size alpha")
        if set(n) != set(lam):
            raise ValueError("vehicle counts and risks cover different stations")
        capacity = alpha * sum(int(n[s]) for s in ids)
        if K < alpha * size:
            raise InfeasibleError(
                f"alpha*|S| <= K violated: K={K} < alpha*|S|={alpha * size}"
            )
        if K >= capacity:
            raise InfeasibleError(
                f"K < alpha*sum(n) violated: K={K} >= alpha*sum(n)={capacity}"
            )
        bounds = [(alpha, alpha * int(n[s])) for s in ids]
        count = math.prod(hi - lo + 1 for lo, hi in bounds)
        if count > cap:
            raise ValueError(
                f"search space of up to {count} allocations exceeds the cap of {cap}; "
                "use a smaller instance"
            )

        def objective(vec):
            return max(lam[s] / (v // alpha) for s, v in zip(ids, vec))

    else:
        raise ValueError(f"mode must be 'vehicles' or 'crews', got {mode!r}")

    best_obj, best_vec = None, None
    for vec in _compositions(bounds, K):
        obj = objective(vec)
        if best_obj is None or obj < best_obj:
            best_obj, best_vec = obj, vec
    if best_vec is None:
        raise InfeasibleError("no feasible allocation exists")
    return best_obj, dict(zip(ids, best_vec))


def load_vehicles_csv(path) -> dict[str, int]:
    """Read `station,n` vehicle counts."""
    counts: dict[str, int] = {}
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != ["station", "n"]:
            raise ParseError(f"{path}:1: expected header 'station,n'")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 2:
                raise ParseError(f"{path}:{lineno}: expected two fields, got {len(row)}")
            sid = row[0].strip()
            if sid in counts:
                raise ParseError(f"{path}:{lineno}: duplicate station {sid!r}")
            try:
                counts[sid] = int(row[1])
            except ValueError:
                raise ParseError(f"{path}:{lineno}: bad vehicle count {row[1]!r}") from None
            if counts[sid] < 1:
                raise ParseError(f"{path}:{lineno}: vehicle count must be >= 1")
    if not counts:
        raise ParseError(f"{path}: no stations found")
    return counts


def write_vehicles_csv(counts: Mapping[str, int], risks, path) -> None:
    """Write `station,n`, sorted by descending risk for readability."""
    lam = _positive_risks(risks)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["station", "n"])
        for s in sorted(counts, key=lambda s: (-lam[s], s)):
            writer.writerow([s, counts[s]])


def ranked_stations(risks) -> list[tuple[str, Fraction]]:
    lam = _positive_risks(risks)
    return sorted(lam.items(), key=lambda kv: (-kv[1], kv[0]))


def vehicle_allocation_json(risks, alloc: VehicleAllocation, K: int) -> dict:
    """JSON-ready document for a vehicle allocation."""
    return {
        "stations": [
            {"id": s, "risk": float(v), "n": alloc.counts[s]}
            for s, v in ranked_stations(risks)
        ],
        "order_log": [{"k": k, "station": s} for k, s in alloc.order_log],
        "objective": float(alloc.objective),
        "K": K,
    }


def crew_allocation_json(
    risks, n: Mapping[str, int], alloc: CrewAllocation, K: int, alpha: int
) -> dict:
    """JSON-ready document for a crew allocation."""
    return {
        "stations": [
            {
                "id": s,
                "risk": float(v),
                "n": int(n[s]),
                "f": alloc.f[s],
                "operational": alloc.operational[s],
                "slack": alloc.slack[s],
            }
            for s, v in ranked_stations(risks)
        ],
        "order_log": [{"k": k, "station": s} for k, s in alloc.order_log],
        "objective": float(alloc.objective),
        "K": K,
        "alpha": alpha,
    }
