"""Command-line experiment runner.

    trissm analyze  --spec scenario.json [--seed N] [--out DIR]
    trissm simulate --preset fig3 --workers 8
    trissm adapt    --preset fig7
    trissm compare  --preset fig7
    trissm presets

Outputs are data only: one CSV per scenario for ``analyze``/``simulate``/
``compare`` and one JSON report per scenario for ``adapt``.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .adaptive import (
    DEFAULT_CANDIDATES,
    PAIR_MODES,
    RateAllocation,
    constellations_for,
    enumerate_allocations,
    min_distance,
    optimize_improved,
    optimize_si,
    si_objective,
)
from .analysis import abep_curves
from .channel import channel_from_json
from .constellation import make_constellation
from .core import ConfigError, SystemConfig, parse_snr_grid
from .montecarlo import StopRule, default_workers, simulate_ber, simulate_fixed_channel_ber
from .presets import PRESETS, get_preset, list_presets

__all__ = ["CSV_HEADER", "COMPARE_HEADER", "MODES", "Scenario", "ExperimentSpec", "load_spec", "run", "main"]

MODES = ("analyze", "simulate", "adapt", "compare")
CSV_HEADER = ["snr_db", "abep_vb", "abep_eb", "abep_asy", "ber_mc", "trials", "bit_errors", "ci95"]
COMPARE_HEADER = ["scheme", "orders"] + CSV_HEADER
DEFAULT_SEED = 1


@dataclass
class Scenario:
    name: str
    cfg: SystemConfig
    channel: np.ndarray | None = None
    xi_bar: float | None = None
    candidate_orders: tuple[int, ...] = DEFAULT_CANDIDATES
    pair_mode: str = "all"
    family: str = "mixed"
    normalize_qam: bool = True
    extra_allocations: list[tuple[int, ...]] = field(default_factory=list)


@dataclass
class ExperimentSpec:
    scenarios: list[Scenario]
    mode: str
    seed: int = DEFAULT_SEED
    stop: StopRule = field(default_factory=StopRule)
    output_path: str = "."
    prefix: str = ""


def _field_int(d: dict, key: str, where: str) -> int:
    v = d[key]
    if isinstance(v, bool) or not isinstance(v, int):
        raise ConfigError(f"field '{where}{key}' must be an integer, got {v!r}")
    return v


def parse_stop(d) -> StopRule:
    if d is None:
        return StopRule()
    if not isinstance(d, dict):
        raise ConfigError("field 'stop' must be an object")
    kwargs = {}
    for key in ("min_bit_errors", "max_trials", "max_bits"):
        if key in d:
            kwargs[key] = None if d[key] is None else _field_int(d, key, "stop.")
    try:
        return StopRule(**kwargs)
    except ValueError as exc:
        raise ConfigError(f"field 'stop': {exc}") from None


def parse_scenario(d: dict, index: int = 0) -> Scenario:
    if not isinstance(d, dict):
        raise ConfigError(f"scenario {index} must be a JSON object")
    d = dict(d)
    name = str(d.get("name", f"s{index}"))
    channel = None
    if "channel" in d:
        channel = channel_from_json(d["channel"])
        d.setdefault("n_rx", channel.shape[0])
        d.setdefault("n_columns", channel.shape[1])
        d.setdefault("rows_per_column", 1)
        if d["n_rx"] != channel.shape[0]:
            raise ConfigError(f"field 'n_rx' ({d['n_rx']}) disagrees with the channel's {channel.shape[0]} rows")
        if d["n_columns"] != channel.shape[1]:
            raise ConfigError(
                f"field 'n_columns' ({d['n_columns']}) disagrees with the channel's {channel.shape[1]} columns"
            )
    cfg = SystemConfig.from_dict(d)
    sc = Scenario(name=name, cfg=cfg, channel=channel)
    if "xi_bar" in d:
        if isinstance(d["xi_bar"], bool) or not isinstance(d["xi_bar"], (int, float)):
            raise ConfigError("field 'xi_bar' must be a number")
        sc.xi_bar = float(d["xi_bar"])
    if "candidate_orders" in d:
        orders = d["candidate_orders"]
        if not isinstance(orders, list) or not all(isinstance(m, int) and not isinstance(m, bool) for m in orders):
            raise ConfigError("field 'candidate_orders' must be a list of integers")
        sc.candidate_orders = tuple(orders)
    if "pair_mode" in d:
        if d["pair_mode"] not in PAIR_MODES:
            raise ConfigError(f"field 'pair_mode' must be one of {PAIR_MODES}")
        sc.pair_mode = d["pair_mode"]
    if "family" in d:
        if d["family"] not in ("mixed", "psk"):
            raise ConfigError("field 'family' must be 'mixed' or 'psk'")
        sc.family = d["family"]
    if "normalize_qam" in d:
        if not isinstance(d["normalize_qam"], bool):
            raise ConfigError("field 'normalize_qam' must be true or false")
        sc.normalize_qam = d["normalize_qam"]
    for extra in d.get("extra_allocations", []):
        if not isinstance(extra, list) or len(extra) != cfg.n_columns:
            raise ConfigError(f"field 'extra_allocations' entries must list {cfg.n_columns} orders")
        sc.extra_allocations.append(tuple(int(m) for m in extra))
    return sc


def load_spec(obj: dict, mode: str, seed: int | None = None, output_path: str = ".", prefix: str = "") -> ExperimentSpec:
    """Turn a decoded scenario file (one scenario, or ``{"scenarios": [...]}``) into a spec."""
    if mode not in MODES:
        raise ConfigError(f"unknown mode {mode!r}")
    if not isinstance(obj, dict):
        raise ConfigError("scenario file must hold a JSON object")
    raw = obj.get("scenarios", [obj])
    if not isinstance(raw, list) or not raw:
        raise ConfigError("field 'scenarios' must be a non-empty list")
    scenarios = [parse_scenario(s, i) for i, s in enumerate(raw)]
    if len({s.name for s in scenarios}) != len(scenarios):
        raise ConfigError("field 'name' must be unique across scenarios")
    if seed is None:
        seed = obj.get("seed", DEFAULT_SEED)
        if isinstance(seed, bool) or not isinstance(seed, int) or not 0 <= seed < 2**64:
            raise ConfigError("field 'seed' must be an unsigned 64-bit integer")
    stop = parse_stop(obj.get("stop"))
    for s in scenarios:
        if mode in ("adapt", "compare"):
            if s.channel is None:
                raise ConfigError(f"mode '{mode}' needs field 'channel' (scenario '{s.name}')")
            if s.xi_bar is None:
                raise ConfigError(f"mode '{mode}' needs field 'xi_bar' (scenario '{s.name}')")
    return ExperimentSpec(scenarios, mode, int(seed), stop, output_path, prefix)


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    v = float(v)
    return repr(v) if math.isfinite(v) else ("inf" if v > 0 else "nan")


def _write_csv(path: Path, header: list[str], rows: list[list]) -> None:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([_fmt(v) if not isinstance(v, str) else v for v in r])
    path.write_text(buf.getvalue())


def _curve_rows(sc: Scenario, spec: ExperimentSpec, simulate: bool, workers: int) -> list[list]:
    cons = make_constellation(sc.cfg.mod_order, sc.cfg.mod_kind)
    curves = abep_curves(sc.cfg, cons)
    sims = simulate_ber(sc.cfg, cons, stop=spec.stop, seed=spec.seed, workers=workers) if simulate else None
    rows = []
    for k, snr in enumerate(curves["snr_db"]):
        row = [float(snr), curves["abep_vb"][k], curves["abep_eb"][k], curves["abep_asy"][k]]
        if sims:
            r = sims[k]
            row += [r.ber, r.trials, r.bit_errors, r.ci95_half_width]
        else:
            row += [None, None, None, None]
        rows.append(row)
    return rows


def _orders_str(orders) -> str:
    return "-".join(str(m) for m in orders)


def _adapt_report(sc: Scenario) -> dict:
    h = sc.channel
    allocs = enumerate_allocations(h.shape[1], sc.xi_bar, sc.candidate_orders)
    best, rep = optimize_improved(h, sc.xi_bar, sc.candidate_orders, sc.pair_mode, sc.family, sc.normalize_qam)
    si_best, si_obj = optimize_si(h, sc.xi_bar, sc.candidate_orders, sc.pair_mode, sc.family, sc.normalize_qam)
    table = []
    for a in allocs:
        cons = constellations_for(a, sc.family, sc.normalize_qam)
        table.append({
            "orders": list(a.per_column_orders),
            "constellations": [c.name for c in cons],
            "d_min_sq": min_distance(h, a, cons, sc.pair_mode).d_min_sq,
            "si_objective": si_objective(h, a, cons, sc.pair_mode),
        })
    return {
        "scenario": sc.name,
        "xi_bar": sc.xi_bar,
        "candidate_orders": list(sc.candidate_orders),
        "pair_mode": sc.pair_mode,
        "family": sc.family,
        "normalize_qam": sc.normalize_qam,
        "improved": {
            "orders": list(best.per_column_orders),
            "constellations": [c.name for c in constellations_for(best, sc.family, sc.normalize_qam)],
            "xi_n": list(best.xi_n),
            "d_min_sq": rep.d_min_sq,
            "argmin_pair": [list(p) for p in rep.argmin_pair],
            "tau1": rep.tau1,
            "tau2": rep.tau2,
            "tau3": [rep.tau3.real, rep.tau3.imag],
        },
        "si": {
            "orders": list(si_best.per_column_orders),
            "constellations": [c.name for c in constellations_for(si_best, sc.family, sc.normalize_qam)],
            "xi_n": list(si_best.xi_n),
            "objective": si_obj,
        },
        "allocations": table,
    }


def _compare_rows(sc: Scenario, spec: ExperimentSpec, workers: int) -> list[list]:
    h = sc.channel
    n = h.shape[1]
    uniform_order = 2 ** int(round(sc.xi_bar - math.log2(n)))
    best, _ = optimize_improved(h, sc.xi_bar, sc.candidate_orders, sc.pair_mode, sc.family, sc.normalize_qam)
    si_best, _ = optimize_si(h, sc.xi_bar, sc.candidate_orders, sc.pair_mode, sc.family, sc.normalize_qam)
    schemes = [("uniform", (uniform_order,) * n), ("improved", best.per_column_orders), ("si", si_best.per_column_orders)]
    schemes += [(f"fixed:{_orders_str(o)}", o) for o in sc.extra_allocations]
    rows = []
    for label, orders in schemes:
        alloc = RateAllocation.from_orders(orders)
        if not math.isclose(alloc.xi_bar, sc.xi_bar):
            raise ConfigError(f"allocation {_orders_str(orders)} does not average {sc.xi_bar} bits")
        cons = constellations_for(alloc, sc.family, sc.normalize_qam)
        sims = simulate_fixed_channel_ber(h, cons, sc.cfg.snr_grid_db, spec.stop, spec.seed, workers)
        for r in sims:
            rows.append([label, _orders_str(orders), r.snr_db, None, None, None,
                         r.ber, r.trials, r.bit_errors, r.ci95_half_width])
    return rows


def run(spec: ExperimentSpec, workers: int | None = None) -> list[Path]:
    """Execute every scenario of ``spec`` and return the written file paths."""
    workers = workers or default_workers()
    out = Path(spec.output_path)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    for sc in spec.scenarios:
        stem = f"{spec.prefix}{sc.name}"
        if spec.mode in ("analyze", "simulate"):
            path = out / f"{stem}.csv"
            _write_csv(path, CSV_HEADER, _curve_rows(sc, spec, spec.mode == "simulate", workers))
        elif spec.mode == "adapt":
            path = out / f"{stem}.json"
            path.write_text(json.dumps(_adapt_report(sc), indent=2, sort_keys=True) + "\n")
        else:
            path = out / f"{stem}.csv"
            _write_csv(path, COMPARE_HEADER, _compare_rows(sc, spec, workers))
        written.append(path)
    return written


def _build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="trissm", description="TRIS spatial-modulation experiments")
    sub = p.add_subparsers(dest="mode", required=True)
    sub.add_parser("presets", help="list built-in presets")
    for mode in MODES:
        sp = sub.add_parser(mode)
        src = sp.add_mutually_exclusive_group(required=True)
        src.add_argument("--spec", help="JSON scenario file")
        src.add_argument("--preset", choices=sorted(PRESETS), help="built-in scenario set")
        sp.add_argument("--seed", type=int, help="64-bit master seed (overrides the file)")
        sp.add_argument("--out", default=".", help="output directory")
        sp.add_argument("--workers", type=int, help="Monte Carlo threads (default: $TRISSM_WORKERS or 1)")
        sp.add_argument("--min-errors", type=int, help="stop rule: minimum bit errors per point")
        sp.add_argument("--max-bits", type=int, help="stop rule: bit budget per point")
        sp.add_argument("--max-trials", type=int, help="stop rule: channel-use budget per point")
        sp.add_argument("--snr", help="override SNR grid: comma list or start:stop:step")
    return p


def _override_grid(obj: dict, text: str) -> dict:
    if ":" in text:
        a, b, c = (float(t) for t in text.split(":"))
        grid = list(parse_snr_grid({"start": a, "stop": b, "step": c}))
    else:
        grid = [float(t) for t in text.split(",") if t.strip()]
    obj = dict(obj)
    if "scenarios" in obj:
        obj["scenarios"] = [dict(s, snr_grid_db=grid) for s in obj["scenarios"]]
    else:
        obj["snr_grid_db"] = grid
    return obj


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    if args.mode == "presets":
        for name, desc in list_presets():
            print(f"{name:6s} {desc}")
        return 0
    try:
        if args.preset:
            preset = get_preset(args.preset)
            obj = {k: v for k, v in preset.items() if k in ("scenarios", "seed", "stop")}
            prefix = f"{args.preset}_"
        else:
            try:
                obj = json.loads(Path(args.spec).read_text())
            except json.JSONDecodeError as exc:
                raise ConfigError(f"{args.spec} is not valid JSON: {exc}") from None
            prefix = ""
        if args.snr:
            obj = _override_grid(obj, args.snr)
        spec = load_spec(obj, args.mode, args.seed, args.out, prefix)
        overrides = {k: v for k, v in (("min_bit_errors", args.min_errors), ("max_bits", args.max_bits),
                                       ("max_trials", args.max_trials)) if v is not None}
        if overrides:
            s = spec.stop
            merged = {"min_bit_errors": s.min_bit_errors, "max_trials": s.max_trials, "max_bits": s.max_bits}
            merged.update(overrides)
            spec.stop = StopRule(**merged)
        paths = run(spec, args.workers)
    except (ConfigError, ValueError) as exc:
        print(f"trissm: error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"trissm: I/O error: {exc}", file=sys.stderr)
        return 1
    for p in paths:
        print(p)
    return 0


if __name__ == "__main__":
    sys.exit(main())
