"""Command line entry point: ``activesteer run | validate | sweep``."""

from __future__ import annotations

import argparse
import csv
import json
import sys
import time
import warnings
from pathlib import Path
from typing import Sequence

from .config import SWEEP_AXES, ConfigError, RunConfig, load_config
from .measurement import OUTCOMES, WeakLimitWarning
from .protocol import ProtocolParams, TrajectoryRecord, default_parallelism, run_ensemble
from .stats import Summary, averaged_curves, converged_steps, histogram, summarize_histogram
from .validation import run_validation

EXIT_OK = 0
EXIT_FAIL = 1
EXIT_CONFIG = 2
EXIT_RUNTIME = 3


def _num(x) -> str:
    """Shortest round-trip text for a number; identical input gives identical bytes."""
    if isinstance(x, int) and not isinstance(x, bool):
        return str(x)
    return repr(float(x))


def params_dict(p: ProtocolParams) -> dict:
    return {
        "n_qubits": p.n_qubits,
        "target": p.target.label(),
        "initial": p.initial.label(),
        "dt": p.dt,
        "couplings": list(p.couplings),
        "weights": list(p.weights.p),
        "f_star": p.f_star,
        "max_steps": p.max_steps,
        "scheduler": p.scheduler,
        "steering_set": p.steering_set,
        "seed": p.seed,
        "entropy_subset": list(p.entropy_subset),
    }


def _write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


def _write_csv(path: Path, header: Sequence[str], rows) -> None:
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_num(v) if not isinstance(v, str) else v for v in row])


def _write_records(out: Path, cfg: RunConfig, records: Sequence[TrajectoryRecord]) -> None:
    _write_csv(
        out / "trajectories.csv",
        ["trajectory", "converged", "n_steps", "final_F", "final_C_total", "final_S"],
        [
            (r.index, int(r.converged), r.n_steps, r.fidelity[-1], r.total_cost[-1], r.entropy[-1])
            for r in records
        ],
    )
    if cfg.records != "full":
        return
    n = cfg.params.n_qubits
    header = ["trajectory", "cycle", "n", "n2", "config", "xi", "eta", "F", "C_total"]
    header += [f"C_{r}" for r in range(1, n + 1)] + ["S"]
    rows = []
    for r in records:
        for c in range(r.n_steps):
            for j in range(r.pairs.shape[1]):
                pair = (int(r.pairs[c, j, 0]), int(r.pairs[c, j, 1]))
                pc = cfg.params.table(pair).pair_config(int(r.config_index[c, j]), pair)
                o = OUTCOMES[int(r.outcome_index[c, j])]
                rows.append(
                    [r.index, c + 1, pair[0], pair[1], pc.label(), o.xi, o.eta, r.fidelity[c + 1], r.total_cost[c + 1]]
                    + list(r.costs[c + 1])
                    + [r.entropy[c + 1]]
                )
    _write_csv(out / "steps.csv", header, rows)


def execute(cfg: RunConfig, threads: int) -> tuple[list[TrajectoryRecord], Summary | None, float]:
    t0 = time.perf_counter()
    records = run_ensemble(cfg.params, cfg.M, threads)
    wall = time.perf_counter() - t0
    hist = histogram(records, cfg.bin_width)
    summary = summarize_histogram(hist, converged_steps(records)) if hist.n_converged else None
    return records, summary, wall


def _summary_dict(summary: Summary | None, records: Sequence[TrajectoryRecord]) -> dict:
    if summary is None:
        return {"N_m": None, "N_s": None, "delta_N": None, "converged_fraction": 0.0, "n_converged": 0, "M": len(records)}
    return summary.as_dict()


def write_run_outputs(out: Path, cfg: RunConfig, records, summary, wall: float, threads: int) -> None:
    out.mkdir(parents=True, exist_ok=True)
    _write_json(
        out / "summary.json",
        {"config": cfg.name, "params": params_dict(cfg.params), "M": cfg.M, "summary": _summary_dict(summary, records)},
    )
    # wall time lives apart so the other files stay byte-identical between runs
    _write_json(out / "timing.json", {"wall_time_s": wall, "threads": threads})
    hist = histogram(records, cfg.bin_width)
    _write_csv(out / "histogram.csv", ["bin_start", "bin_end", "count"], hist.rows())
    curves = averaged_curves(records, cfg.horizon)
    _write_csv(out / "curves.csv", curves.columns, [[int(row[0])] + row[1:] for row in curves.table().tolist()])
    if cfg.records != "none":
        _write_records(out, cfg, records)


def _threads(args) -> int:
    if args.threads is not None:
        if args.threads < 1:
            raise ConfigError("--threads must be >= 1")
        return args.threads
    try:
        return default_parallelism()
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def _out_dir(args, cfg: RunConfig) -> Path:
    return Path(args.out) if args.out else Path("results") / cfg.name


def cmd_run(args) -> int:
    cfg = load_config(args.config, args.seed)
    threads = _threads(args)
    if args.dry_run:
        print(json.dumps({"config": cfg.name, "params": params_dict(cfg.params), "M": cfg.M, "bin_width": cfg.bin_width}, indent=2))
        return EXIT_OK
    out = _out_dir(args, cfg)
    records, summary, wall = execute(cfg, threads)
    write_run_outputs(out, cfg, records, summary, wall, threads)
    s = _summary_dict(summary, records)
    print(
        f"{cfg.name}: N_m={s['N_m']} N_s={s['N_s']} dN={s['delta_N']} "
        f"converged={s['converged_fraction']:.4f} M={cfg.M} ({wall:.1f} s) -> {out}"
    )
    return EXIT_OK


def cmd_sweep(args) -> int:
    cfg = load_config(args.config, args.seed)
    axis = args.axis or cfg.sweep_axis
    if axis is None:
        raise ConfigError("sweep needs an axis (--axis or sweep_axis in the config)")
    if axis not in SWEEP_AXES:
        raise ConfigError(f"axis must be one of {', '.join(SWEEP_AXES)}")
    values = tuple(float(v) for v in args.values.split(",")) if args.values else cfg.sweep_values
    if not values:
        raise ConfigError("sweep needs values (--values or sweep_values in the config)")
    try:
        points = [cfg.with_axis_value(axis, v) for v in values]
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    threads = _threads(args)
    if args.dry_run:
        for v, c in zip(values, points):
            print(json.dumps({"axis": axis, "value": v, "params": params_dict(c.params), "bin_width": c.bin_width}))
        return EXIT_OK
    out = _out_dir(args, cfg)
    out.mkdir(parents=True, exist_ok=True)
    rows, full, timing = [], [], []
    for v, c in zip(values, points):
        records, summary, wall = execute(c, threads)
        s = _summary_dict(summary, records)
        rows.append([axis, v, s["N_m"], s["N_s"], s["delta_N"], s["converged_fraction"], c.M, c.bin_width])
        full.append({"axis": axis, "value": v, "params": params_dict(c.params), "summary": s})
        timing.append({"value": v, "wall_time_s": wall})
        print(f"{axis}={v}: N_m={s['N_m']} N_s={s['N_s']} dN={s['delta_N']} converged={s['converged_fraction']:.4f}")
    with (out / "sweep.csv").open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["axis", "value", "N_m", "N_s", "delta_N", "converged_fraction", "M", "bin_width"])
        for row in rows:
            w.writerow([x if isinstance(x, str) else ("" if x is None else _num(x)) for x in row])
    _write_json(out / "sweep.json", {"config": cfg.name, "points": full})
    _write_json(out / "timing.json", {"threads": threads, "points": timing})
    return EXIT_OK


def cmd_validate(args) -> int:
    dt = 0.2
    if args.config:
        dt = load_config(args.config, args.seed).params.dt
    results = run_validation(dt=dt, seed=args.seed or 0)
    for r in results:
        print(f"{'PASS' if r.passed else 'FAIL'}  {r.name}  ({r.detail})")
    n_fail = sum(not r.passed for r in results)
    print(f"{len(results) - n_fail}/{len(results)} checks passed")
    return EXIT_OK if n_fail == 0 else EXIT_FAIL


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="activesteer", description="Measurement-driven entanglement steering.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, config_required: bool):
        p.add_argument("--config", required=config_required, help="config file path or bundled config name")
        p.add_argument("--seed", type=int, default=None, help="override the config seed (unsigned 64-bit)")
        p.add_argument("--threads", type=int, default=None, help="worker processes (default: $ACTIVESTEER_THREADS or 1)")
        p.add_argument("--out", default=None, help="output directory (default: results/<config name>)")
        p.add_argument("--dry-run", action="store_true", help="validate the config and exit")

    common(sub.add_parser("run", help="run an ensemble and write summary, histogram and curves"), True)
    sp = sub.add_parser("sweep", help="summaries along one parameter axis")
    common(sp, True)
    sp.add_argument("--axis", choices=SWEEP_AXES, default=None)
    sp.add_argument("--values", default=None, help="comma-separated axis values")
    common(sub.add_parser("validate", help="run oracle and invariant checks"), False)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    handlers = {"run": cmd_run, "sweep": cmd_sweep, "validate": cmd_validate}
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", WeakLimitWarning)
        try:
            code = handlers[args.command](args)
        except ConfigError as exc:
            print(f"config error: {exc}", file=sys.stderr)
            code = EXIT_CONFIG
        except Exception as exc:
            print(f"runtime error: {type(exc).__name__}: {exc}", file=sys.stderr)
            code = EXIT_RUNTIME
    seen = set()
    for w in caught:
        msg = f"warning: {w.message}"
        if msg not in seen:
            seen.add(msg)
            print(msg, file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
