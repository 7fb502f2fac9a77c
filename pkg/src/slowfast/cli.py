"""Command-line entry point.

Every command takes a scenario JSON file (or a run manifest written by an
earlier run, which replays the recorded inputs) and writes CSV tables plus a
``manifest.json`` into the output directory.  Exit status: 0 on success,
1 on a validation error, 2 on a solver failure, 64 on a usage error.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
import time
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from . import __version__, kernels
from .energy import energy_report
from .experiments import (
    ERROR_COLUMNS, SweepError, energy_csv, fits_csv, layer_decay,
    ratios_csv, rows_csv, run_convergence, run_energy_uniformity, run_initial_layer,
)
from .fast_solver import SolverError, integrate_fast
from .limit_solver import integrate_limit
from .manifold import lattice_table
from .model import exponents
from .plots import line_plot
from .scenario import Scenario, ScenarioError, parse_scenario, scenario_from_dict

OUTPUT_ENV = "SLOWFAST_OUTPUT_DIR"
COMMANDS = ("validate", "manifold", "simulate", "converge", "layer", "energy", "energy-uniformity")
EXIT_OK, EXIT_INVALID, EXIT_SOLVER, EXIT_USAGE = 0, 1, 2, 64
MANIFEST_VERSION = 1


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.format_usage()}{self.prog}: error: {message}")


def _floats(text: str) -> list[float]:
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="slowfast", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"slowfast {__version__}")
    sub = ap.add_subparsers(dest="command", metavar="command", parser_class=_Parser)

    def cmd(name, help_):
        p = sub.add_parser(name, help=help_)
        p.add_argument("scenario", help="scenario JSON file or run manifest")
        p.add_argument("--out", help=f"output directory (default: scenario value, ${OUTPUT_ENV}, ./runs)")
        p.add_argument("--plot", action="store_true", default=None, help="also write SVG plots")
        return p

    cmd("validate", "check a scenario and print the resolved document")
    p = cmd("manifold", "tabulate the slow manifold on a (u, v) lattice")
    p.add_argument("--u-max", type=float)
    p.add_argument("--v-max", type=float)
    p.add_argument("--nu", type=int)
    p.add_argument("--nv", type=int)
    p = cmd("simulate", "run one solver and write snapshots and monitors")
    p.add_argument("--system", choices=("fast", "limit"))
    p.add_argument("--eps", type=float)
    p = cmd("converge", "epsilon sweep against the limit reference")
    p.add_argument("--eps", type=_floats, help="comma-separated eps values")
    g = p.add_mutually_exclusive_group()
    g.add_argument("--prepared", dest="prepared", action="store_const", const=True)
    g.add_argument("--unprepared", dest="prepared", action="store_const", const=False)
    p.add_argument("--reference", choices=("split", "explicit"))
    p.add_argument("--jobs", type=int, default=1)
    p = cmd("layer", "initial-layer study at fixed eps")
    p.add_argument("--eps", type=float)
    p.add_argument("--eps-init", type=_floats)
    p.add_argument("--window", type=float, help="decay fit window in units of eps")
    p.add_argument("--jobs", type=int, default=1)
    p = cmd("energy", "energy diagnostics along one fast run")
    p.add_argument("--eps", type=float)
    p.add_argument("--p", type=_floats)
    p = cmd("energy-uniformity", "sup-in-time energies across eps")
    p.add_argument("--eps", type=_floats)
    p.add_argument("--p", type=_floats)
    p.add_argument("--jobs", type=int, default=1)
    return ap


# -- inputs --------------------------------------------------------------------------

def load_input(path: str, command: str) -> tuple[dict, dict]:
    """Return ``(scenario_document, recorded_options)`` from a scenario or manifest."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ScenarioError(f"cannot read {path}: {exc.strerror}") from None
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"malformed JSON: {exc}") from None
    if isinstance(doc, dict) and "manifest_version" in doc:
        if doc.get("command") != command:
            raise ScenarioError(f"manifest records command {doc.get('command')!r}, not {command!r}")
        return doc["scenario"], dict(doc.get("options", {}))
    parse_scenario(text)
    return doc, {}


def _pick(cli_value, recorded: dict, key: str, default):
    if cli_value is not None:
        return cli_value
    return recorded.get(key, default)


def resolve(args: argparse.Namespace) -> tuple[Scenario, dict[str, Any]]:
    """Merge CLI overrides into the scenario; returns it and the effective options."""
    doc, rec = load_input(args.scenario, args.command)
    sc = scenario_from_dict(doc)
    d = sc.to_dict()
    ex = d["experiments"]
    opts: dict[str, Any] = {}
    c = args.command
    if c == "manifold":
        opts = {"u_max": _pick(args.u_max, rec, "u_max", 2.0), "v_max": _pick(args.v_max, rec, "v_max", 2.0),
                "nu": _pick(args.nu, rec, "nu", 9), "nv": _pick(args.nv, rec, "nv", 9)}
        if opts["nu"] < 1 or opts["nv"] < 1 or opts["u_max"] < 0 or opts["v_max"] < 0:
            raise ScenarioError("lattice sizes must be >= 1 and maxima >= 0")
    elif c == "simulate":
        opts = {"system": _pick(args.system, rec, "system", "fast")}
        if args.eps is not None:
            d["solver"]["eps"] = args.eps
    elif c == "converge":
        if args.eps is not None:
            ex["eps_list"] = args.eps
        if args.reference is not None:
            ex["reference"] = args.reference
        if args.prepared is not None:
            d["initial"]["well_prepared"] = args.prepared
    elif c == "layer":
        if args.eps is not None:
            ex["layer_eps"] = args.eps
        if args.eps_init is not None:
            ex["eps_init_list"] = args.eps_init
        if args.window is not None:
            ex["layer_window"] = args.window
    elif c == "energy":
        if args.eps is not None:
            d["solver"]["eps"] = args.eps
        if args.p is not None:
            d["solver"]["energy_p"] = args.p
    elif c == "energy-uniformity":
        if args.eps is not None:
            ex["eps_list"] = args.eps
        if args.p is not None:
            ex["p_list"] = args.p
    plot = _pick(args.plot, rec, "plot", None)
    if plot is not None:
        d["outputs"]["plot"] = bool(plot)
    return scenario_from_dict(d), opts


def output_dir(args, sc: Scenario, opts: dict) -> Path:
    base = args.out or sc.output_dir or os.environ.get(OUTPUT_ENV) or "runs"
    name = args.command
    if args.command == "simulate":
        name += "-" + opts["system"]
    return Path(base) / name


# -- outputs -------------------------------------------------------------------------

class Writer:
    def __init__(self, root: Path):
        self.root = root
        self.files: dict[str, str] = {}
        root.mkdir(parents=True, exist_ok=True)

    def text(self, name: str, content: str) -> None:
        (self.root / name).write_text(content)
        self.files[name] = hashlib.sha256(content.encode()).hexdigest()

    def manifest(self, command: str, sc: Scenario, opts: dict, summary: dict,
                 wall_time: float = 0.0) -> None:
        doc = {
            "wall_time_s": wall_time,
            "manifest_version": MANIFEST_VERSION,
            "command": command,
            "package_version": __version__,
            "backend": kernels.BACKEND,
            "options": {**opts, "plot": sc.plot},
            "scenario": sc.to_dict(),
            "summary": summary,
            "outputs": dict(sorted(self.files.items())),
        }
        (self.root / "manifest.json").write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")


def _csv(header: Sequence[str], cols: Sequence[Sequence[float]]) -> str:
    lines = [",".join(header)]
    for row in zip(*cols):
        lines.append(",".join(repr(float(x)) for x in row))
    return "\n".join(lines) + "\n"


def cmd_validate(sc: Scenario, opts, w: Writer | None) -> dict:
    print(sc.to_json())
    for p in sc.solver.energy_p:
        if p > 1:
            ex = exponents(p, sc.params)
            print(f"p={p:g}: q(p)={ex.q_p:g} r(p)={ex.r_p:g} admissible={ex.admissible}")
    print("eps_init =", repr(sc.eps_init()))
    print("valid")
    return {}


def cmd_manifold(sc: Scenario, opts, w: Writer) -> dict:
    us = np.linspace(0.0, opts["u_max"], opts["nu"])
    vs = np.linspace(0.0, opts["v_max"], opts["nv"])
    rows = lattice_table(us, vs, sc.params)
    w.text("manifold.csv", _csv(["u", "v", "u_a_star", "u_b_star", "du_ub", "dv_ub", "A"],
                                list(zip(*rows))))
    print(f"wrote {len(rows)} lattice points")
    return {"points": len(rows)}


def cmd_simulate(sc: Scenario, opts, w: Writer) -> dict:
    if opts["system"] == "fast":
        final, log = integrate_fast(sc.fast_state(), sc.solver, sc.params,
                                    snapshot_times=sc.snapshot_times)
    else:
        final, log = integrate_limit(sc.limit_state(), sc.solver, sc.params,
                                     snapshot_times=sc.snapshot_times, scheme=sc.limit_scheme)
    w.text("monitor.csv", log.to_csv())
    for i, snap in enumerate(log.snapshots):
        w.text(f"snapshot_{i:03d}_t{snap.t:.6g}.csv", snap.snapshot_csv())
    w.text("final.csv", final.snapshot_csv())
    if sc.plot:
        x = sc.grid.x
        series = ({"u_a": (x, final.u_a), "u_b": (x, final.u_b), "v": (x, final.v)}
                  if opts["system"] == "fast" else {"u": (x, final.u), "v": (x, final.v)})
        w.text("final.svg", line_plot(series, title=f"t = {final.t:g}", xlabel="x"))
    for f in log.flags:
        print("bound flag:", f)
    print(f"{opts['system']} run reached t={final.t:g}; {len(log)} monitor rows")
    return {"t_final": final.t, "flags": log.flags}


def _fit_summary(fits) -> dict:
    return {k: (None if f is None else {"slope": f.slope, "r_squared": f.r_squared})
            for k, f in fits.items()}


def _loglog(rows, fits, cols) -> str:
    series, dashed = {}, []
    eps = [r.eps for r in rows]
    for c in cols:
        series[c] = (eps, [getattr(r, c) for r in rows])
        f = fits.get(c)
        if f is not None:
            name = f"{c} fit {f.slope:.2f}"
            series[name] = (eps, [float(np.exp(f.intercept) * e**f.slope) for e in eps])
            dashed.append(name)
    return line_plot(series, title="error vs eps", xlabel="eps", ylabel="error",
                     loglog=True, dashed=dashed)


def cmd_converge(sc: Scenario, opts, w: Writer, jobs: int = 1) -> dict:
    rows, fits = run_convergence(sc, sc.experiments["eps_list"], sc.well_prepared, jobs=jobs)
    w.text("rows.csv", rows_csv(rows))
    w.text("fits.csv", fits_csv(fits))
    if sc.plot:
        w.text("convergence.svg", _loglog(rows, fits, ERROR_COLUMNS))
    for k, f in fits.items():
        print(f"{k}: " + ("n/a" if f is None else f"slope {f.slope:.4f}  r2 {f.r_squared:.5f}"))
    return {"fits": _fit_summary(fits)}


def cmd_layer(sc: Scenario, opts, w: Writer, jobs: int = 1) -> dict:
    ex = sc.experiments
    rows = run_initial_layer(sc, ex["layer_eps"], ex["eps_init_list"], jobs=jobs)
    fit, t, d = layer_decay(sc)
    w.text("layer_rows.csv", rows_csv(rows))
    w.text("layer_decay.csv", _csv(["t", "manifold_dist"], [t, d]))
    w.text("layer_fit.csv", _csv(["eps", "eps_init", "tau", "amplitude", "r_squared", "tau_over_2eps"],
                                 [[fit.eps], [fit.eps_init], [fit.tau], [fit.amplitude],
                                  [fit.r_squared], [fit.ratio]]))
    if sc.plot:
        w.text("layer_decay.svg", line_plot({"dist": (t, np.log10(np.maximum(d, 1e-300)))},
                                            title="manifold distance", xlabel="t",
                                            ylabel="log10 dist"))
    print(f"decay time {fit.tau:.4g} = {fit.ratio:.3f} x (2 eps), r2 {fit.r_squared:.5f}")
    return {"tau": fit.tau, "tau_over_2eps": fit.ratio}


def cmd_energy(sc: Scenario, opts, w: Writer) -> dict:
    ps = [p for p in sc.solver.energy_p if p > 1]
    names = ["t", *(f"E_{p:g}" for p in ps), "I2_fast", "Q_L2", "manifold_dist"]
    rows: list[list[float]] = []

    def obs(s, _step):
        reps = [energy_report(s, p, sc.params) for p in ps]
        if not reps:
            reps = [energy_report(s, 2.0, sc.params)]
        r0 = reps[0]
        rows.append([s.t, *(r.E_p for r in reps[:len(ps)]), r0.I2_fast, r0.Q_L2, r0.manifold_dist])

    integrate_fast(sc.fast_state(), sc.solver, sc.params, monitors=False, observer=obs)
    w.text("energy.csv", _csv(names, list(zip(*rows))))
    worst = max(r[-3] for r in rows)
    print(f"{len(rows)} rows; max eps-scaled fast dissipation {worst:.3g}")
    return {"max_I2_fast": worst}


def cmd_energy_uniformity(sc: Scenario, opts, w: Writer, jobs: int = 1) -> dict:
    ex = sc.experiments
    table = run_energy_uniformity(sc, ex["eps_list"], ex["p_list"], jobs=jobs)
    w.text("energy_rows.csv", energy_csv(table))
    w.text("energy_ratios.csv", ratios_csv(table))
    for p, r in table.ratios.items():
        print(f"p={p:g}: " + "  ".join(f"{k} ratio {v:.4f}" for k, v in r.items()))
    return {"ratios": {str(p): r for p, r in table.ratios.items()}}


HANDLERS = {
    "validate": cmd_validate, "manifold": cmd_manifold, "simulate": cmd_simulate,
    "converge": cmd_converge, "layer": cmd_layer, "energy": cmd_energy,
    "energy-uniformity": cmd_energy_uniformity,
}


def main(argv: Sequence[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        if argv and not argv[0].startswith("-") and argv[0] not in COMMANDS:
            raise UsageError(f"{parser.format_usage()}slowfast: error: unknown command {argv[0]!r}")
        args = parser.parse_args(argv)
        if args.command is None:
            raise UsageError(parser.format_usage().rstrip())
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    try:
        sc, opts = resolve(args)
        if args.command == "validate":
            cmd_validate(sc, opts, None)
            return EXIT_OK
        w = Writer(output_dir(args, sc, opts))
        extra = {"jobs": args.jobs} if hasattr(args, "jobs") else {}
        t0 = time.perf_counter()
        summary = HANDLERS[args.command](sc, opts, w, **extra)
        w.manifest(args.command, sc, opts, summary, time.perf_counter() - t0)
        print(f"outputs in {w.root}")
        return EXIT_OK
    except ScenarioError as exc:
        print(f"invalid scenario: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (SolverError, SweepError) as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except ValueError as exc:
        print(f"invalid input: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
