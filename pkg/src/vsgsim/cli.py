"""Command-line entry point.

    vsgsim run      --config FILE --strategy NAME --out DIR [--dt S]
    vsgsim compare  --config FILE --strategies a,b,... --out DIR [--jobs N]
    vsgsim analyze  --config FILE [--csv FILE]
    vsgsim sweep    --config FILE --out DIR [--points N] [--span X]

Exit status: 0 success, 2 configuration or validation error, 3 integration failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path

from .config import load_scenario
from .controllers import STRATEGIES
from .errors import ConfigError, SimulationError
from .metrics import compare, compute_metrics
from .simulator import Plant, Scenario, run
from .smallsignal import LoopParams, closed_loop_modes, kt_for_zeta, open_loop_zeta, stability_check
from .sweep import kt_grid, kt_sweep

log = logging.getLogger("vsgsim")

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_INTEGRATION = 3


@dataclass(frozen=True)
class RunManifest:
    scenario_path: Path
    strategies: tuple[str, ...]
    out_dir: Path | None
    dt: float | None = None
    deterministic: bool = True  # no randomness anywhere; kept for the record

    def __post_init__(self):
        if not self.strategies:
            raise ConfigError("strategies", "at least one strategy is required")
        for name in self.strategies:
            if name not in STRATEGIES:
                raise ConfigError("strategies", f"unknown strategy {name!r}; valid names: {', '.join(STRATEGIES)}")


def _prepare_out(out_dir: Path) -> None:
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise ConfigError("out", f"cannot create output directory: {exc}") from None


def _write(path: Path, text: str) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(text)


def _run_one(scenario: Scenario, strategy: str):
    return run(replace(scenario, strategy=strategy))


def _save_run(trace, out_dir: Path, name: str):
    d = out_dir / name
    d.mkdir(parents=True, exist_ok=True)
    trace.to_csv(d / "trace.csv")
    met = compute_metrics(trace)
    row = met.as_row()
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(row.keys())
    w.writerow(row.values())
    _write(d / "metrics.csv", buf.getvalue())
    return met


def cmd_run(args) -> int:
    manifest = RunManifest(Path(args.config), (args.strategy,), Path(args.out), args.dt)
    scenario = load_scenario(manifest.scenario_path, manifest.dt)
    _prepare_out(manifest.out_dir)
    trace = _run_one(scenario, args.strategy)
    met = _save_run(trace, manifest.out_dir, args.strategy)
    print(f"strategy        {args.strategy}")
    print(f"overshoot_pct   {met.overshoot_pct:.4f}")
    print("settling_time_s " + ("not settled" if met.settling_time_s is None else f"{met.settling_time_s:.4f}"))
    print(f"max_freq_dev_hz {met.max_freq_dev_hz:.4f}")
    print(f"j_peak          {met.j_peak:.6g}")
    print(f"freq_violation  {str(met.freq_violation).lower()}")
    return EXIT_OK


def _parameters_csv(traces: dict) -> str:
    names = list(traces)
    first = traces[names[0]]
    header = ["t"] + [f"{q}_{n}" for n in names for q in ("j", "d_p", "k_t")]
    cols = [first.t.tolist()]
    for n in names:
        tr = traces[n]
        cols += [tr.j.tolist(), tr.d_p.tolist(), tr.k_t.tolist()]
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for i in range(len(first)):
        w.writerow([f"{c[i]:.9g}" for c in cols])
    return buf.getvalue()


def cmd_compare(args) -> int:
    names = tuple(s.strip() for s in args.strategies.split(",") if s.strip())
    manifest = RunManifest(Path(args.config), names, Path(args.out), args.dt)
    scenario = load_scenario(manifest.scenario_path, manifest.dt)
    _prepare_out(manifest.out_dir)
    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            results = list(pool.map(_run_one, [scenario] * len(names), names))
    else:
        results = [_run_one(scenario, n) for n in names]
    traces = dict(zip(names, results))
    for n, tr in traces.items():
        _save_run(tr, manifest.out_dir, n)
    report = compare(traces)
    _write(manifest.out_dir / "comparison.csv", report.metrics_csv())
    _write(manifest.out_dir / "orderings.csv", report.orderings_csv())
    _write(manifest.out_dir / "parameters.csv", _parameters_csv(traces))
    print(report.table())
    if "proposed" in traces:
        print()
        for other in names:
            if other == "proposed":
                continue
            for metric in ("overshoot_pct", "max_freq_dev_hz", "j_peak_ratio"):
                o = report.ordering(metric, "proposed", other)
                print(f"{metric:>16}: proposed {o.relation} {other}  (margin {o.rel_margin:.1%})")
    return EXIT_OK


def analysis_rows(scenario: Scenario) -> list[tuple[str, str]]:
    plant = Plant(scenario.grid)
    cfg = scenario.vsg
    h, w0 = plant.h_pdelta, plant.omega_0
    imp = plant.imp
    p0 = LoopParams(j=cfg.j0, d_p=cfg.d_p0, k_t=0.0, h_pdelta=h, omega_0=w0)
    modes = closed_loop_modes(p0)
    rep = stability_check(p0)

    def c(z):
        return f"{z.real:.9g}{z.imag:+.9g}j"

    rows = [
        ("r_ohm", f"{imp.r:.9g}"),
        ("x_ohm", f"{imp.x:.9g}"),
        ("z_mag_ohm", f"{imp.z_mag:.9g}"),
        ("alpha_rad", f"{imp.alpha:.9g}"),
        ("h_pdelta_w_per_rad", f"{h:.9g}"),
        ("zeta_open_loop", f"{open_loop_zeta(cfg.j0, cfg.d_p0, h, w0):.9g}"),
        ("omega_n_rad_s", f"{modes.omega_n:.9g}"),
        (f"k_t_zeta_{cfg.zeta_nominal:g}", f"{kt_for_zeta(cfg.zeta_nominal, cfg.j0, cfg.d_p0, h, w0):.9g}"),
        (f"k_t_zeta_{cfg.zeta_boost:g}", f"{kt_for_zeta(cfg.zeta_boost, cfg.j0, cfg.d_p0, h, w0):.9g}"),
        ("s1", c(modes.s1)),
        ("s2", c(modes.s2)),
        ("A", f"{rep.a:.9g}"),
        ("B", f"{rep.b:.9g}"),
        ("A2_minus_B", f"{rep.a2_minus_b:.9g}"),
        ("k_t_min", f"{rep.k_t_min:.9g}"),
        ("stable", str(rep.stable).lower()),
        ("root_case", rep.case),
    ]
    return rows


def cmd_analyze(args) -> int:
    scenario = load_scenario(Path(args.config))
    rows = analysis_rows(scenario)
    width = max(len(k) for k, _ in rows)
    print("small-signal analysis at nominal parameters (k_t = 0 for roots and margins)")
    for k, v in rows:
        print(f"  {k.ljust(width)}  {v}")
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["quantity", "value"])
    w.writerows(rows)
    if args.csv:
        _write(Path(args.csv), buf.getvalue())
    else:
        print()
        print(buf.getvalue(), end="")
    return EXIT_OK


def cmd_sweep(args) -> int:
    scenario = load_scenario(Path(args.config), args.dt)
    out = Path(args.out)
    _prepare_out(out)
    plant = Plant(scenario.grid)
    k_min = -scenario.vsg.d_p0 * plant.omega_0 / plant.h_pdelta
    values = kt_grid(k_min, args.points, args.span)
    points = kt_sweep(scenario, values)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["k_t", "predicted_stable", "max_dev_hz", "final_dev_hz", "diverged", "converged", "agrees"])
    for p in points:
        agrees = p.converged if p.predicted_stable else p.diverged
        w.writerow([f"{p.k_t:.9g}", str(p.predicted_stable).lower(), f"{p.max_dev_hz:.9g}",
                    f"{p.final_dev_hz:.9g}", str(p.diverged).lower(), str(p.converged).lower(), str(agrees).lower()])
        print(f"k_t={p.k_t:+.6f}  predicted {'stable  ' if p.predicted_stable else 'unstable'}"
              f"  max|df|={p.max_dev_hz:9.4f} Hz  {'agree' if agrees else 'DISAGREE'}")
    _write(out / "sweep.csv", buf.getvalue())
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="vsgsim", description="VSG active-power loop simulator")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="simulate one strategy")
    r.add_argument("--config", required=True)
    r.add_argument("--strategy", required=True)
    r.add_argument("--out", required=True)
    r.add_argument("--dt", type=float)
    r.set_defaults(func=cmd_run)

    c = sub.add_parser("compare", help="simulate several strategies on one scenario")
    c.add_argument("--config", required=True)
    c.add_argument("--strategies", default=",".join(STRATEGIES))
    c.add_argument("--out", required=True)
    c.add_argument("--dt", type=float)
    c.add_argument("--jobs", type=int, default=1)
    c.set_defaults(func=cmd_compare)

    a = sub.add_parser("analyze", help="small-signal report")
    a.add_argument("--config", required=True)
    a.add_argument("--csv")
    a.set_defaults(func=cmd_analyze)

    s = sub.add_parser("sweep", help="fixed-gain k_t sweep across the stability bound")
    s.add_argument("--config", required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--points", type=int, default=22)
    s.add_argument("--span", type=float, default=1.05)
    s.add_argument("--dt", type=float)
    s.set_defaults(func=cmd_sweep)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SimulationError as exc:
        print(f"integration failure: {exc}", file=sys.stderr)
        return EXIT_INTEGRATION


if __name__ == "__main__":
    sys.exit(main())
