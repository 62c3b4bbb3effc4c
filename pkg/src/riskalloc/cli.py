"""Command-line pipeline for risk estimation and resource allocation.

Subcommands communicate through documented files (incident CSV, window
file, stations CSV, field CSV + JSON sidecar, risk CSV, vehicles CSV), so
the allocation stage also runs standalone on an externally supplied risk
table. Every command is deterministic given its configuration and seed.

Exit codes: 0 success, 2 parse/validation error, 3 infeasible instance,
4 numeric failure.
"""

import argparse
import csv
import hashlib
import json
import sys
from pathlib import Path

from . import allocate as alc
from . import bandwidth as bw
from . import render
from .errors import InfeasibleError, NumericError, ParseError
from .geometry import GridSpec, build_partition, load_stations_csv, load_window, window_area
from .intensity import (
    adaptive_estimate,
    fixed_estimate,
    load_field_csv,
    load_incidents_csv,
    scaling_factors,
    write_field_csv,
    write_incidents_csv,
)
from .risk import apply_floor, catchment_risks, read_risk_csv, write_risk_csv
from .simulate import GENERATOR, IntensitySpec, sample_poisson

#: Keys accepted in a config file; each is overridable by the CLI flag of
#: the same name (dashes for underscores).
CONFIG_KEYS = {
    "window", "incidents", "stations", "field", "risks", "vehicles",
    "out", "out_dir", "json",
    "grid_nx", "grid_ny", "bw_method", "bw_grid", "pilot_grid",
    "K", "alpha", "risk_floor", "seed", "rate", "lmax", "cap", "mode",
}


def load_config_file(path) -> dict[str, str]:
    """Parse a flat key=value config file; '#' starts a comment."""
    values: dict[str, str] = {}
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ParseError(f"{path}:{lineno}: expected key=value")
            key, _, value = line.partition("=")
            key = key.strip()
            if key not in CONFIG_KEYS:
                raise ParseError(f"{path}:{lineno}: unknown config key {key!r}")
            values[key] = value.strip()
    return values


class RunConfig:
    """Effective settings for one command: CLI flags over config-file values.

    Every resolved key is recorded so the config hash covers exactly the
    settings the run used.
    """

    def __init__(self, args: argparse.Namespace):
        self._file = load_config_file(args.config) if getattr(args, "config", None) else {}
        self._args = args
        self.used: dict[str, str] = {}

    def get(self, key: str, default=None, cast=str, required: bool = False):
        value = getattr(self._args, key, None)
        if value is None and key in self._file:
            try:
                value = cast(self._file[key])
            except ValueError:
                raise ParseError(f"config key {key!r}: bad value {self._file[key]!r}") from None
        if value is None:
            value = default
        if value is None and required:
            raise ParseError(f"missing required setting {key!r} (flag --{key.replace('_', '-')})")
        self.used[key] = "" if value is None else str(value)
        return value

    def hash(self) -> str:
        payload = "\n".join(f"{k}={v}" for k, v in sorted(self.used.items()))
        return hashlib.sha256(payload.encode()).hexdigest()


def _write_json(doc: dict, path) -> None:
    with open(path, "w") as fh:
        json.dump(doc, fh, sort_keys=True, indent=2)
        fh.write("\n")


def _group_order(order_log) -> dict[str, list[int]]:
    by_station: dict[str, list[int]] = {}
    for k, s in order_log:
        by_station.setdefault(s, []).append(k)
    return by_station


def _format_table(header: list[str], rows: list[list[str]]) -> str:
    widths = [max(len(h), *(len(r[i]) for r in rows)) if rows else len(h)
              for i, h in enumerate(header)]
    fmt = "  ".join(f"{{:<{w}}}" for w in widths)
    lines = [fmt.format(*header).rstrip()]
    lines.extend(fmt.format(*row).rstrip() for row in rows)
    return "\n".join(lines)


def _ranked(risks) -> list[tuple[str, float]]:
    return [(s, float(v)) for s, v in alc.ranked_stations(risks)]


def cmd_simulate(args) -> int:
    cfg = RunConfig(args)
    w = load_window(cfg.get("window", required=True))
    seed = cfg.get("seed", default=0, cast=int)
    rate = cfg.get("rate", cast=float)
    field_path = cfg.get("field")
    out = cfg.get("out", required=True)
    if (rate is None) == (field_path is None):
        raise ParseError("give exactly one of --rate or --field")
    if rate is not None:
        spec = IntensitySpec.constant(rate)
    else:
        lmax = cfg.get("lmax", cast=float)
        spec = IntensitySpec.from_field(load_field_csv(field_path), lmax)
    pattern = sample_poisson(spec, w, seed)
    write_incidents_csv(pattern, out)
    meta = {
        "config_hash": cfg.hash(),
        "generator": GENERATOR,
        "seed": seed,
        "n": pattern.n,
        "rate": rate,
        "lmax": spec.lmax,
    }
    _write_json(meta, str(out) + ".json")
    print(f"simulated {pattern.n} incidents -> {out}")
    return 0


def cmd_estimate(args) -> int:
    cfg = RunConfig(args)
    w = load_window(cfg.get("window", required=True))
    pattern = load_incidents_csv(cfg.get("incidents", required=True), w)
    if pattern.n == 0:
        raise ValueError("cannot estimate an intensity from an empty pattern")
    nx = cfg.get("grid_nx", default=256, cast=int)
    ny = cfg.get("grid_ny", default=256, cast=int)
    grid = GridSpec.for_window(w, nx, ny)
    out_dir = Path(cfg.get("out_dir", default="."))
    out_dir.mkdir(parents=True, exist_ok=True)

    pilot_spec = cfg.get("pilot_grid")
    pilot_grid = bw.parse_h_grid(pilot_spec) if pilot_spec else bw.default_h_grid(w)
    pilot_search = bw.BandwidthSearch(pilot_grid, "loocv")
    h_pilot, pilot_scores = bw.select_bandwidth(pilot_search, pattern, w, grid)
    pilot = fixed_estimate(pattern, h_pilot, w, grid)
    factors = scaling_factors(pilot, pattern)

    method = cfg.get("bw_method", default="cvl")
    grid_spec = cfg.get("bw_grid")
    h_grid = bw.parse_h_grid(grid_spec) if grid_spec else bw.default_h_grid(w)
    search = bw.BandwidthSearch(h_grid, method)
    h_final, scores = bw.select_bandwidth(search, pattern, w, grid, scaling=factors)
    fld = adaptive_estimate(pattern, h_final, factors, w, grid)

    write_field_csv(pilot, out_dir / "pilot_field.csv", h=h_pilot)
    bw.write_scores_csv(out_dir / "pilot_scores.csv", pilot_grid, pilot_scores)
    with open(out_dir / "scaling_factors.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["x", "y", "c"])
        for (x, y), c in zip(pattern.points, factors.c):
            writer.writerow([repr(float(x)), repr(float(y)), repr(float(c))])
    write_field_csv(fld, out_dir / "field.csv", h=h_final)
    bw.write_scores_csv(out_dir / "bw_scores.csv", h_grid, scores)
    report = {
        "config_hash": cfg.hash(),
        "n_points": pattern.n,
        "h_pilot": h_pilot,
        "h_final": h_final,
        "method": method,
        "total_mass": fld.total_mass,
        "pilot_total_mass": pilot.total_mass,
        "window_area": window_area(w),
        "grid_nx": nx,
        "grid_ny": ny,
    }
    _write_json(report, out_dir / "report.json")
    print(
        f"estimated intensity for {pattern.n} incidents: "
        f"h_pilot={alc.format_sig(h_pilot)} h_final={alc.format_sig(h_final)} "
        f"({method}), mass={alc.format_sig(fld.total_mass, 6)} -> {out_dir}"
    )
    return 0


def cmd_risks(args) -> int:
    cfg = RunConfig(args)
    w = load_window(cfg.get("window", required=True))
    fld = load_field_csv(cfg.get("field", required=True), w)
    stations = load_stations_csv(cfg.get("stations", required=True), w)
    part = build_partition(stations, w, fld.grid)
    table = catchment_risks(fld, part)
    floor = cfg.get("risk_floor", cast=float)
    if floor is not None:
        table = apply_floor(table, floor)
    out = cfg.get("out", default="risks.csv")
    write_risk_csv(table, out)
    print(f"{len(table.entries)} catchment risks (total {alc.format_sig(table.total(), 6)}) -> {out}")
    return 0


def cmd_allocate_vehicles(args) -> int:
    cfg = RunConfig(args)
    table = read_risk_csv(cfg.get("risks", required=True))
    K = cfg.get("K", cast=int, required=True)
    alloc = alc.allocate_vehicles(table, K)
    order = _group_order(alloc.order_log)
    rows = [
        [s, f"{v:g}", str(alloc.counts[s]), ", ".join(map(str, order.get(s, [])))]
        for s, v in _ranked(table)
    ]
    print(_format_table(["station", "risk", "n", "order"], rows))
    print(f"K={K}  stations={len(table.entries)}")
    print(f"objective (max risk per vehicle): {alc.format_sig(alloc.objective)}")
    out = Path(cfg.get("out_dir", default="."))
    out.mkdir(parents=True, exist_ok=True)
    json_path = cfg.get("json", default=str(out / "allocation_vehicles.json"))
    _write_json(alc.vehicle_allocation_json(table, alloc, K), json_path)
    return 0


def cmd_allocate_crews(args) -> int:
    cfg = RunConfig(args)
    table = read_risk_csv(cfg.get("risks", required=True))
    counts = alc.load_vehicles_csv(cfg.get("vehicles", required=True))
    alpha = cfg.get("alpha", cast=int, required=True)
    K = cfg.get("K", cast=int, required=True)
    alloc = alc.allocate_crews(table, counts, alpha, K)
    order = _group_order(alloc.order_log)
    rows = [
        [
            s,
            f"{v:g}",
            str(counts[s]),
            str(alloc.f[s]),
            str(alloc.operational[s]),
            ", ".join(map(str, order.get(s, []))),
        ]
        for s, v in _ranked(table)
    ]
    print(_format_table(["station", "risk", "n", "f", "operational", "order"], rows))
    print(f"K={K}  alpha={alpha}  stations={len(table.entries)}")
    print(f"objective (max risk per operational vehicle): {alc.format_sig(alloc.objective)}")
    out = Path(cfg.get("out_dir", default="."))
    out.mkdir(parents=True, exist_ok=True)
    json_path = cfg.get("json", default=str(out / "allocation_crews.json"))
    _write_json(alc.crew_allocation_json(table, counts, alloc, K, alpha), json_path)
    return 0


def cmd_render(args) -> int:
    cfg = RunConfig(args)
    out_dir = Path(cfg.get("out_dir", default="."))
    out_dir.mkdir(parents=True, exist_ok=True)
    field_path = cfg.get("field")
    risks_path = cfg.get("risks")
    stations_path = cfg.get("stations")
    window_path = cfg.get("window")
    incidents_path = cfg.get("incidents")
    if field_path is None and risks_path is None:
        raise ParseError("nothing to render: give --field and/or --risks")
    w = load_window(window_path) if window_path else None
    stations = load_stations_csv(stations_path, w) if stations_path else None
    pattern = load_incidents_csv(incidents_path, w) if incidents_path else None
    wrote = []
    fld = None
    if field_path:
        fld = load_field_csv(field_path, w)
        render.write_pgm(fld, out_dir / "field.pgm")
        render.save_field_png(fld, out_dir / "intensity.png", stations, pattern)
        wrote += ["field.pgm", "intensity.png"]
    if risks_path:
        if w is None or stations is None:
            raise ParseError("rendering a risk map needs --stations and --window")
        table = read_risk_csv(risks_path)
        if fld is not None:
            grid = fld.grid
        else:
            nx = cfg.get("grid_nx", default=256, cast=int)
            ny = cfg.get("grid_ny", default=256, cast=int)
            grid = GridSpec.for_window(w, nx, ny)
        part = build_partition(stations, w, grid)
        missing = set(part.station_ids) - set(table.entries)
        if missing:
            raise ValueError(f"risk table misses stations: {sorted(missing)}")
        render.write_svg_choropleth(part, table, out_dir / "catchments.svg", stations, pattern)
        render.save_risk_png(part, table, out_dir / "risk_map.png", stations)
        wrote += ["catchments.svg", "risk_map.png"]
    print(f"rendered {', '.join(wrote)} -> {out_dir}")
    return 0


def cmd_verify(args) -> int:
    cfg = RunConfig(args)
    table = read_risk_csv(cfg.get("risks", required=True))
    K = cfg.get("K", cast=int, required=True)
    mode = cfg.get("mode", default="vehicles")
    cap = cfg.get("cap", default=10_000_000, cast=int)
    if mode == "vehicles":
        greedy = alc.allocate_vehicles(table, K).objective
        optimum, witness = alc.brute_force_minimax(table, K, cap=cap)
    elif mode == "crews":
        counts = alc.load_vehicles_csv(cfg.get("vehicles", required=True))
        alpha = cfg.get("alpha", cast=int, required=True)
        greedy = alc.allocate_crews(table, counts, alpha, K).objective
        optimum, witness = alc.brute_force_minimax(
            table, K, mode="crews", n=counts, alpha=alpha, cap=cap
        )
    else:
        raise ParseError(f"mode must be 'vehicles' or 'crews', got {mode!r}")
    print(f"greedy objective:      {alc.format_sig(greedy, 12)}")
    print(f"brute-force optimum:   {alc.format_sig(optimum, 12)} at {witness}")
    if greedy == optimum:
        print("VERIFIED: greedy allocation is minimax-optimal")
        return 0
    print("MISMATCH: greedy objective differs from the brute-force optimum")
    return 4


def _add_common(p: argparse.ArgumentParser, keys: list[str]) -> None:
    p.add_argument("--config", help="flat key=value config file")
    specs = {
        "window": dict(help="window file (RECT line or x,y vertex CSV)"),
        "incidents": dict(help="incident CSV (x,y)"),
        "stations": dict(help="stations CSV (id,x,y)"),
        "field": dict(help="intensity field CSV (with .json sidecar)"),
        "risks": dict(help="risk CSV (station,risk)"),
        "vehicles": dict(help="vehicle counts CSV (station,n)"),
        "out": dict(help="output file"),
        "out_dir": dict(help="output directory"),
        "json": dict(help="path for the JSON allocation document"),
        "grid_nx": dict(type=int, help="grid pixels in x (default 256)"),
        "grid_ny": dict(type=int, help="grid pixels in y (default 256)"),
        "bw_method": dict(choices=["loocv", "cvl"], help="bandwidth selector (default cvl)"),
        "bw_grid": dict(help="bandwidth grid min:max:count, log-spaced"),
        "pilot_grid": dict(help="pilot bandwidth grid min:max:count, log-spaced"),
        "K": dict(type=int, help="total number of resource units"),
        "alpha": dict(type=int, help="crew size per vehicle"),
        "risk_floor": dict(type=float, help="clamp risks below at this value"),
        "seed": dict(type=int, help="RNG seed (default 0)"),
        "rate": dict(type=float, help="constant intensity"),
        "lmax": dict(type=float, help="upper bound of the intensity field"),
        "cap": dict(type=int, help="search-space cap for brute force"),
        "mode": dict(choices=["vehicles", "crews"], help="what to verify"),
    }
    for key in keys:
        p.add_argument(f"--{key.replace('_', '-')}", dest=key, **specs[key])


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="riskalloc",
        description="Estimate spatial incident risk and allocate vehicles and crews.",
    )
    sub = parser.add_subparsers(dest="command")

    p = sub.add_parser("simulate", help="sample a synthetic incident pattern")
    _add_common(p, ["window", "rate", "field", "lmax", "seed", "out"])
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("estimate", help="estimate the incident intensity")
    _add_common(
        p,
        ["incidents", "window", "grid_nx", "grid_ny", "pilot_grid", "bw_method",
         "bw_grid", "out_dir"],
    )
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("risks", help="integrate the intensity over catchments")
    _add_common(p, ["field", "stations", "window", "risk_floor", "out"])
    p.set_defaults(func=cmd_risks)

    p = sub.add_parser("allocate-vehicles", help="minimax vehicle allocation")
    _add_common(p, ["risks", "K", "json", "out_dir"])
    p.set_defaults(func=cmd_allocate_vehicles)

    p = sub.add_parser("allocate-crews", help="minimax crew allocation")
    _add_common(p, ["risks", "vehicles", "alpha", "K", "json", "out_dir"])
    p.set_defaults(func=cmd_allocate_crews)

    p = sub.add_parser("render", help="render maps and figures")
    _add_common(
        p, ["field", "risks", "stations", "window", "incidents", "grid_nx", "grid_ny", "out_dir"]
    )
    p.set_defaults(func=cmd_render)

    p = sub.add_parser("verify", help="check a greedy allocation against brute force")
    _add_common(p, ["risks", "K", "mode", "vehicles", "alpha", "cap"])
    p.set_defaults(func=cmd_verify)

    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if not hasattr(args, "func"):
        parser.print_help()
        return 2
    try:
        return int(args.func(args) or 0)
    except InfeasibleError as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return 3
    except NumericError as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return 4
    except (ParseError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
