"""``quadpath`` command line: validate, run and sweep scenario files.

Exit codes: 0 objectives met (run) or table written (sweep/validate),
1 objectives not met, 2 configuration error, 3 simulation aborted,
4 output could not be written.
"""
from __future__ import annotations

import argparse
import csv
import logging
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

from . import config as cfgmod
from .config import ConfigError
from .output import emit_csv, emit_plots, reference_points, write_json, write_manifest
from .simulator import Metrics, ScenarioConfig, SimulationAborted, run_scenario

log = logging.getLogger("quadpath")

EXIT_OK, EXIT_UNMET, EXIT_CONFIG, EXIT_ABORT, EXIT_IO = 0, 1, 2, 3, 4

# Short names accepted by ``sweep --param``; any scalar dotted key works too.
PARAM_ALIASES = {
    "k": "observer.k",
    "N": "observer.N",
    "v_star": "reference.v_star",
    "e1": "initial.e1",
    "e2": "initial.e2",
    "delta_phi": "initial.delta_phi",
    "dt": "dt",
    "t_end": "t_end",
    "l": "controller.l",
}


class OutputError(OSError):
    pass


@dataclass
class RunReport:
    name: str
    status: str  # "complete" or "aborted"
    metrics: Optional[Metrics]
    artifacts: list[Path] = field(default_factory=list)
    duration: float = 0.0
    detail: str = ""

    @property
    def passed(self) -> dict:
        if self.metrics is None:
            return {"velocity": False, "attitude": False, "distance": False}
        m = self.metrics
        return {"velocity": m.velocity_ok, "attitude": m.attitude_ok, "distance": m.distance_ok}

    @property
    def exit_code(self) -> int:
        if self.status != "complete":
            return EXIT_ABORT
        return EXIT_OK if self.metrics.objectives_met else EXIT_UNMET

    def as_dict(self) -> dict:
        return {
            "scenario": self.name,
            "status": self.status,
            "detail": self.detail,
            "metrics": None if self.metrics is None else self.metrics.as_dict(),
            "objectives": self.passed,
            "artifacts": [p.name for p in self.artifacts],
            "wall_clock_s": self.duration,
        }


def load_entries(config: str, mode=None, dt=None, t_end=None) -> tuple[dict, Path]:
    path = cfgmod.resolve_path(config)
    entries = cfgmod.read_entries(path)
    for key, value in (("mode", mode), ("dt", dt), ("t_end", t_end)):
        if value is not None:
            entries = cfgmod.set_entry(entries, key, str(value))
    return entries, path


def cmd_validate(config: str, **overrides) -> ScenarioConfig:
    entries, path = load_entries(config, **overrides)
    return cfgmod.build_config(entries, path)


def cmd_run(cfg: ScenarioConfig, out_dir) -> RunReport:
    """Simulate one scenario and write CSV, SVG plots, report.json and MANIFEST."""
    out_dir = Path(out_dir)
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OutputError(f"cannot create {out_dir}: {exc}") from exc
    start = time.perf_counter()
    try:
        sim_log, metrics = run_scenario(cfg)
        status, detail = "complete", ""
    except SimulationAborted as exc:
        sim_log, metrics = exc.log, None
        status, detail = "aborted", str(exc)
        log.error("%s", exc)
    duration = time.perf_counter() - start
    report = RunReport(cfg.name, status, metrics, duration=duration, detail=detail)
    try:
        (out_dir / "scenario.cfg").write_text(cfgmod.dump_config(cfg))
        report.artifacts.append(out_dir / "scenario.cfg")
        if len(sim_log):
            report.artifacts.append(emit_csv(sim_log, out_dir / "log.csv"))
            report.artifacts += emit_plots(sim_log, metrics, out_dir, reference_points(cfg, sim_log))
        report.artifacts.append(out_dir / "report.json")
        write_json(report.as_dict(), out_dir / "report.json")
        write_manifest(out_dir, report.artifacts, status, detail)
    except OSError as exc:
        raise OutputError(f"cannot write artifacts to {out_dir}: {exc}") from exc
    return report


def _format_value(value: float) -> str:
    return repr(float(value))


def _sweep_one(args) -> RunReport:
    cfg, out_dir = args
    return cmd_run(cfg, out_dir)


def cmd_sweep(entries: dict, path, param: str, values: Sequence[float], out_dir,
              jobs: int = 1) -> list[RunReport]:
    """Run one scenario per value of a single scalar parameter.

    Each run writes into ``out_dir/<param>=<value>/``; the comparison table
    goes to ``out_dir/sweep.csv``.
    """
    key = PARAM_ALIASES.get(param, param)
    if cfgmod.KEYS.get(key) != "float":
        raise ConfigError(f"--param {param!r} is not a scalar configuration key")
    base = cfgmod.build_config(entries, path)
    out_dir = Path(out_dir)
    jobs_list = []
    for v in values:
        cfg = cfgmod.build_config(cfgmod.set_entry(entries, key, _format_value(v)), path)
        jobs_list.append((cfg, out_dir / f"{param}={_format_value(v)}"))
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            reports = list(pool.map(_sweep_one, jobs_list))
    else:
        reports = [_sweep_one(j) for j in jobs_list]
    table = out_dir / "sweep.csv"
    try:
        with table.open("w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow([param, "status", "speed_error", "distance", "yaw_error", "pitch_error",
                        "roll_error", "objectives_met"])
            for v, r in zip(values, reports):
                if r.metrics is None:
                    w.writerow([_format_value(v), r.status, "", "", "", "", "", False])
                else:
                    m = r.metrics
                    w.writerow([_format_value(v), r.status, repr(m.speed_error), repr(m.distance),
                                *(repr(a) for a in m.attitude_error), m.objectives_met])
    except OSError as exc:
        raise OutputError(f"cannot write {table}: {exc}") from exc
    log.info("sweep of %s over %d values written to %s (base scenario %s)",
             key, len(values), table, base.name)
    return reports


def _print_report(r: RunReport) -> None:
    print(f"scenario {r.name}: {r.status} in {r.duration:.1f} s")
    if r.metrics is not None:
        m = r.metrics
        ok = r.passed
        print(f"  speed error    {m.speed_error:.3e}  {'PASS' if ok['velocity'] else 'FAIL'}")
        print(f"  attitude error {max(m.attitude_error):.3e}  {'PASS' if ok['attitude'] else 'FAIL'}")
        print(f"  distance       {m.distance:.3e}  {'PASS' if ok['distance'] else 'FAIL'}")
        settle = "never" if m.settling_time is None else f"{m.settling_time:.3f} s"
        print(f"  settling time  {settle}")
    elif r.detail:
        print(f"  {r.detail}")


def _parse_values(text: str) -> list[float]:
    try:
        values = [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise ConfigError(f"--values: cannot parse {text!r}") from None
    if not values:
        raise ConfigError("--values: empty list")
    return values


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="quadpath", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="verb", required=True)

    def common(p):
        p.add_argument("--config", required=True,
                       help="scenario file, or the name of a bundled scenario")
        p.add_argument("--mode", choices=("state", "output"))
        p.add_argument("--dt", type=float)
        p.add_argument("--t-end", dest="t_end", type=float)

    p_run = sub.add_parser("run", help="simulate one scenario")
    common(p_run)
    p_run.add_argument("--out", default=None, help="output directory (default runs/<name>)")

    p_sweep = sub.add_parser("sweep", help="vary one scalar parameter")
    common(p_sweep)
    p_sweep.add_argument("--param", required=True)
    p_sweep.add_argument("--values", required=True, help="comma-separated list")
    p_sweep.add_argument("--out", default=None)
    p_sweep.add_argument("--jobs", type=int, default=1)

    p_val = sub.add_parser("validate", help="parse and check a scenario file")
    common(p_val)
    sub.add_parser("list", help="list bundled scenarios")
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.verb == "list":
        for p in cfgmod.bundled_scenarios():
            print(p.stem)
        return EXIT_OK
    overrides = dict(mode=args.mode, dt=args.dt, t_end=args.t_end)
    try:
        entries, path = load_entries(args.config, **overrides)
        if args.verb == "validate":
            cfg = cfgmod.build_config(entries, path)
            print(f"{path}: ok ({cfg.name}, {cfg.controller_mode} mode, {cfg.n_steps} steps)")
            return EXIT_OK
        if args.verb == "run":
            cfg = cfgmod.build_config(entries, path)
            report = cmd_run(cfg, args.out or Path("runs") / cfg.name)
            _print_report(report)
            return report.exit_code
        values = _parse_values(args.values)
        out = args.out or Path("runs") / f"{cfgmod.build_config(entries, path).name}-sweep-{args.param}"
        reports = cmd_sweep(entries, path, args.param, values, out, jobs=max(1, args.jobs))
        for r in reports:
            _print_report(r)
        print(f"table: {Path(out) / 'sweep.csv'}")
        return EXIT_OK
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OutputError as exc:
        print(f"output error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
