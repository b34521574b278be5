"""Command-line entry point.

Every subcommand writes into ``<out>/<subcommand>/``: a ``result.json`` with
its checks, a ``manifest.json`` with resolved parameters and wall time, and
one or more CSV tables.  ``report`` gathers the result files, writes an
acceptance summary and renders figures beside the tables.

Exit codes: 0 all checks passed, 1 a check failed, 2 usage or config error.
"""

from __future__ import annotations

import argparse
import logging
import math
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .constants import beta_integrals, toda_constants
from .experiments import run_validation
from .grid import Grid
from .output import ConfigError, read_config, read_csv, read_json, write_csv, write_json
from .output import manifest as make_manifest
from .parabolic import FORCING_PRESETS, SpaceTimeWindow, forcing_preset, solve_linear
from .pde import SimulationBlowUp, domain_half_width, energy, evolve, initial_field
from .profile import SQRT2, check_even_k, kink_deriv, weight_phi
from .spectral import rayleigh_trials, spectral_gap
from .toda import (
    FixedPointDiverged,
    OrderingLost,
    build_reduction,
    explicit_path,
    explicit_positions,
    integrate,
    toda_residual,
)
from .tracker import InterfaceCountError, track

log = logging.getLogger("kinkflow")

COMMANDS = ("constants", "toda", "spectral", "linear", "simulate", "validate", "report")
DEFAULT_OUT = "kinkflow-out"


def _flag(v) -> bool:
    v = str(v).strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ValueError(v)


def _forcing(v) -> str:
    if v not in FORCING_PRESETS:
        raise ValueError(v)
    return v


# per-command defaults; a linear window with no t_end spans 50 time units
DEFAULTS = {
    "constants": {"k": 4},
    "toda": {"k": 4, "t_start": -1e4, "t_end": -1e3, "dt": 0.1},
    "spectral": {"half_width": 40.0, "h": 0.01, "seed": 0},
    "linear": {"k": 2, "sigma": 1.0, "t_start": -1e3, "t_end": None, "dt": 0.01, "h": 0.05,
               "forcing": "phi", "projections": True},
    "simulate": {"k": 2, "t_start": -2000.0, "t_end": -1000.0, "dt": 0.01, "h": 0.05, "stride": 1000},
    "validate": {"k": 2, "t_start": -2000.0, "t_end": -1000.0, "dt": 0.01, "h": 0.05},
    "report": {},
}
TYPES = {
    "k": int,
    "seed": int,
    "stride": int,
    "sigma": float,
    "t_start": float,
    "t_end": float,
    "dt": float,
    "h": float,
    "half_width": float,
    "paper_normalization": _flag,
    "projections": _flag,
    "forcing": _forcing,
}


class UsageError(ValueError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--k", type=int, help="number of interfaces (even)")
    common.add_argument("--sigma", type=float, help="weight exponent in (sqrt2/2, sqrt2)")
    common.add_argument("--t-start", type=float, dest="t_start")
    common.add_argument("--t-end", type=float, dest="t_end")
    common.add_argument("--dt", type=float, help="time step")
    common.add_argument("--h", type=float, help="grid spacing")
    common.add_argument("--half-width", type=float, dest="half_width", help="domain is [-L, L]")
    common.add_argument("--stride", type=int, help="snapshot stride in steps (simulate)")
    common.add_argument("--seed", type=int)
    common.add_argument("--paper-normalization", action="store_true", default=None, dest="paper_normalization",
                        help="use the printed gap constants instead of the residual-free ones")
    common.add_argument("--out", help=f"output root (default $KINKFLOW_OUT or {DEFAULT_OUT})")
    common.add_argument("--config", help="flat key = value file; flags override it")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = _Parser(prog="kinkflow", description="Allen-Cahn multi-kink dynamics and the Toda interface law")
    parser.add_argument("--version", action="version", version=f"kinkflow {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    helps = {
        "constants": "beta and the explicit-solution constants",
        "toda": "integrate the Toda system against the explicit solution",
        "spectral": "spectrum of the operator linearised at a kink",
        "linear": "projected linear solve forced by the weight",
        "simulate": "evolve the Allen-Cahn equation from the ansatz",
        "validate": "simulate, track interfaces and compare with Toda",
        "report": "aggregate earlier results and render figures",
    }
    subs = {name: sub.add_parser(name, parents=[common], help=helps[name]) for name in COMMANDS}
    subs["linear"].add_argument("--forcing", choices=FORCING_PRESETS, help="forcing preset (default phi)")
    subs["linear"].add_argument("--no-projections", action="store_false", default=None, dest="projections",
                                help="drop the c_i terms and the projection step")
    return parser


def resolve(args: argparse.Namespace) -> dict:
    """Command defaults, then config file values, then explicit flags."""
    params = {"paper_normalization": False}
    params.update(DEFAULTS[args.command])
    if args.config:
        for key, raw in read_config(Path(args.config)).items():
            if key not in TYPES:
                raise ConfigError(f"unknown config key {key!r}")
            try:
                params[key] = TYPES[key](raw)
            except ValueError as exc:
                raise ConfigError(f"bad value for {key!r}: {raw!r}") from exc
    for key in TYPES:
        value = getattr(args, key, None)
        if value is not None:
            params[key] = value
    _validate(args.command, params)
    return params


def _validate(command: str, p: dict):
    try:
        if "k" in p and p["k"] is not None:
            check_even_k(p["k"])
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    for key in ("dt", "h", "half_width", "stride"):
        if p.get(key) is not None and not p[key] > 0:
            raise UsageError(f"--{key.replace('_', '-')} must be positive")
    if p.get("sigma") is not None and not SQRT2 / 2 < p["sigma"] < SQRT2:
        raise UsageError("--sigma must lie in (sqrt2/2, sqrt2)")
    if command == "linear" and p.get("t_end") is None:
        p["t_end"] = p["t_start"] + 50.0
    if p.get("t_start") is not None:
        if not p["t_start"] < p["t_end"] < 0:
            raise UsageError(f"need t-start < t-end < 0, got {p['t_start']}, {p['t_end']}")


def output_root(args) -> Path:
    return Path(args.out or os.environ.get("KINKFLOW_OUT") or DEFAULT_OUT)


def _result(command: str, summary: dict, checks: dict) -> dict:
    return {
        "command": command,
        "summary": summary,
        "checks": {k: bool(v) for k, v in checks.items()},
        "passed": all(checks.values()),
    }


# ---------------------------------------------------------------------------
# subcommands: each returns (result, {filename: (header, rows)})


def cmd_constants(p: dict):
    k = p["k"]
    ints = beta_integrals(1e-10)
    beta = ints.beta
    samples = -np.logspace(1, 6, 200)
    norms = {}
    for mode in ("residual", "paper"):
        consts = toda_constants(k, beta, mode)
        norms[mode] = consts.as_dict()
        norms[mode]["residual"] = toda_residual(
            lambda t, c=consts: (explicit_positions(t, c, validate=False), explicit_path(c)(t)[1]), beta, samples
        )
    summary = {
        "k": k,
        "beta": beta,
        "beta_closed_form": 12 * SQRT2,
        "numerator": ints.numerator,
        "denominator": ints.denominator,
        "half_width": ints.half_width,
        "tail_bound_numerator": ints.tail_bound_numerator,
        "tail_bound_denominator": ints.tail_bound_denominator,
        "selected": "paper" if p["paper_normalization"] else "residual",
        "normalizations": norms,
    }
    checks = {
        "beta_matches_closed_form": abs(beta - 12 * SQRT2) <= 1e-8,
        "residual_normalization_exact": norms["residual"]["residual"] < 1e-12,
    }
    rows = [[mode, l + 1, norms[mode]["b"][l], norms[mode]["gap_exponentials"][l]] for mode in norms for l in range(k - 1)]
    return _result("constants", summary, checks), {"gaps.csv": (["normalization", "l", "b", "gap_exponential"], rows)}


def cmd_toda(p: dict):
    k = p["k"]
    beta = beta_integrals(1e-10).beta
    consts = toda_constants(k, beta, "paper" if p["paper_normalization"] else "residual")
    xi0 = explicit_positions(p["t_start"], consts)
    steps = (p["t_end"] - p["t_start"]) / p["dt"]
    traj = integrate(xi0, p["t_start"], p["t_end"], p["dt"], beta, record_stride=max(1, int(steps // 1000)))
    target = explicit_positions(p["t_end"], consts)
    end_error = float(np.max(np.abs(traj.states[-1] - target)))
    sum_drift = float(np.max(np.abs(traj.states.sum(axis=1) - xi0.sum())))
    antisym = float(np.max(np.abs(traj.states + traj.states[:, ::-1])))
    red = build_reduction(k, consts)
    summary = {
        "k": k,
        "normalization": consts.normalization,
        "endpoint_error": end_error,
        "sum_drift": sum_drift,
        "antisymmetry_defect": antisym,
        "xi_end": traj.states[-1].tolist(),
        "xi_end_explicit": target.tolist(),
        "A_eigenvalues": red.lambdas.tolist(),
        "C_eigenvalues": np.linalg.eigvalsh(red.C).tolist(),
    }
    checks = {
        "matches_explicit": end_error <= 1e-6,
        "sum_conserved": sum_drift <= 1e-10,
        "antisymmetric": antisym <= 1e-10,
    }
    header = traj.header() + [f"gap_{l}" for l in range(1, k)] + ["log_scale"]
    gaps = traj.gaps()
    rows = [
        row + gaps[i].tolist() + [math.log(-consts.c_log * row[0]) / SQRT2]
        for i, row in enumerate(traj.rows())
    ]
    return _result("toda", summary, checks), {"toda.csv": (header, rows)}


def cmd_spectral(p: dict):
    grid = Grid.from_spacing(p["half_width"], p["h"])
    gap = spectral_gap(grid, 0.0, seed=p["seed"])
    trials = rayleigh_trials(grid, 100, seed=p["seed"])
    summary = dict(gap.summary(), nodes=grid.n, spacing=grid.h, rayleigh_min=float(trials.min()),
                   rayleigh_max=float(trials.max()), seed=p["seed"])
    checks = {
        "zero_eigenvalue": abs(gap.lambda0) <= 1e-3,
        "zero_mode_is_translation": gap.zero_mode_cosine >= 0.9999,
        "second_eigenvalue": abs(gap.lambda1 - 1.5) <= 0.01,
        "random_trials_above_gap": trials.min() >= 1.4,
    }
    wp = kink_deriv(gap.x, 1)
    wp = wp / np.linalg.norm(wp)
    mode1 = gap.mode1 * np.sign(gap.mode1[np.argmax(np.abs(gap.mode1))])
    every = max(1, gap.x.size // 2000)
    rows = [[gap.x[i], gap.mode0[i], mode1[i], wp[i]] for i in range(0, gap.x.size, every)]
    return _result("spectral", summary, checks), {"modes.csv": (["x", "mode0", "mode1", "translation"], rows)}


def cmd_linear(p: dict):
    k, sigma = p["k"], p["sigma"]
    consts = toda_constants(k, beta_integrals(1e-10).beta)
    path = explicit_path(consts)
    L = p.get("half_width") or domain_half_width(explicit_positions(p["t_start"], consts))
    grid = Grid.from_spacing(L, p["h"])
    window = SpaceTimeWindow(grid, p["t_start"], p["t_end"], p["dt"])
    forcing = forcing_preset(p["forcing"], sigma)
    sol = solve_linear(window, path, forcing, with_projections=p["projections"],
                       snapshot_stride=max(1, int(round(1.0 / p["dt"]))))
    x = grid.nodes
    per_snap = [
        float(np.max(np.abs(u) / weight_phi(x, path(t)[0], sigma))) for t, u in zip(sol.snapshot_times, sol.psi)
    ]
    psi_norm = max(per_snap)
    forcing_norm = max(
        float(np.max(np.abs(forcing(t, x, path(t)[0])) / weight_phi(x, path(t)[0], sigma))) for t in sol.snapshot_times
    )
    summary = {
        "k": k,
        "sigma": sigma,
        "window": [p["t_start"], p["t_end"]],
        "psi_weighted_norm": psi_norm,
        "forcing_weighted_norm": forcing_norm,
        "forcing": p["forcing"],
        "projections": p["projections"],
        "ratio": psi_norm / forcing_norm if forcing_norm > 0 else 0.0,
        "max_defect_after_projection": sol.max_defect(),
        "max_defect_before_projection": float(np.max(sol.defect_before)),
    }
    checks = {"orthogonality": sol.max_defect() <= 1e-8} if p["projections"] else {}
    rows = [[t, v] for t, v in zip(sol.snapshot_times, per_snap)]
    return _result("linear", summary, checks), {"norms.csv": (["t", "psi_over_phi"], rows)}


def cmd_simulate(p: dict):
    k = p["k"]
    consts = toda_constants(k, beta_integrals(1e-10).beta)
    xi = explicit_positions(p["t_start"], consts)
    grid = Grid.from_spacing(p.get("half_width") or domain_half_width(xi), p["h"])
    sim = evolve(initial_field(grid, xi), grid, p["t_start"], p["t_end"], p["dt"], snapshot_stride=p["stride"])
    traj = track(sim.times, sim.fields, grid.nodes, k)
    energies = np.array([energy(u, grid) for u in sim.fields])
    rise = float(np.max(np.diff(energies), initial=0.0))
    overshoot = float(np.max(np.abs(sim.fields)) - 1.0)
    summary = {
        "k": k,
        "nodes": grid.n,
        "half_width": grid.half_width,
        "snapshots": int(sim.times.size),
        "xi_start": traj.states[0].tolist(),
        "xi_end": traj.states[-1].tolist(),
        "energy_start": float(energies[0]),
        "energy_end": float(energies[-1]),
        "max_energy_increase": rise,
        "max_overshoot": overshoot,
    }
    checks = {"energy_non_increasing": rise <= 10 * p["dt"] ** 2, "bounded": overshoot <= p["dt"]}
    snap_rows = ([t, xv, uv] for t, u in zip(sim.times, sim.fields) for xv, uv in zip(grid.nodes, u))
    iface_rows = [row + [e] for row, e in zip(traj.rows(), energies)]
    return _result("simulate", summary, checks), {
        "snapshots.csv": (["t", "x", "u"], snap_rows),
        "interfaces.csv": (traj.header() + ["energy"], iface_rows),
    }


def cmd_validate(p: dict):
    v = run_validation(p["k"], p["t_start"], p["t_end"], p["h"], p["dt"])
    verdict = v.verdict()
    checks = {
        "within_deviation_tol": v.deviation_ok,
        "gap_change_within_10pct": v.gap_change_ok,
        "frozen_control_rejected": verdict["frozen_exceeds_tol"],
    }
    c_log = toda_constants(p["k"], beta_integrals(1e-10).beta).c_log
    k = p["k"]
    header = (
        ["t", "log_scale"]
        + [f"xi_obs_{j}" for j in range(1, k + 1)]
        + [f"xi_toda_{j}" for j in range(1, k + 1)]
        + [f"gap_obs_{l}" for l in range(1, k)]
        + [f"gap_toda_{l}" for l in range(1, k)]
    )
    go, gt = v.observed.gaps(), v.predicted.gaps()
    rows = [
        [t, math.log(-c_log * t) / SQRT2] + v.observed.states[i].tolist() + v.predicted.states[i].tolist()
        + go[i].tolist() + gt[i].tolist()
        for i, t in enumerate(v.observed.times)
    ]
    return _result("validate", verdict, checks), {"trajectories.csv": (header, rows)}


def cmd_report(root: Path):
    found = sorted(p for p in root.glob("*/result.json") if p.parent.name in COMMANDS and p.parent.name != "report")
    if not found:
        raise UsageError(f"no results under {root}; run other subcommands first")
    rows, sections, figures = [], {}, []
    for path in found:
        res = read_json(path)
        sections[res["command"]] = {"passed": res["passed"], "checks": res["checks"]}
        rows.extend([res["command"], name, ok] for name, ok in res["checks"].items())
    try:
        from .plotting import FIGURES
    except ImportError:  # pragma: no cover - plotting module itself has no hard imports
        FIGURES = {}
    for command in sections:
        if command not in FIGURES:
            continue
        table, draw = FIGURES[command]
        src = root / command / table
        if not src.exists():
            continue
        try:
            header, data = read_csv(src)
            figures.append(str(draw(header, data, src.with_suffix(".png")).relative_to(root)))
        except ImportError:
            log.warning("matplotlib is not installed; skipping figures")
            break
    summary = {"results": sections, "figures": figures}
    checks = {f"{cmd}": sec["passed"] for cmd, sec in sections.items()}
    return _result("report", summary, checks), {"report.csv": (["command", "check", "passed"], rows)}


HANDLERS = {
    "constants": cmd_constants,
    "toda": cmd_toda,
    "spectral": cmd_spectral,
    "linear": cmd_linear,
    "simulate": cmd_simulate,
    "validate": cmd_validate,
}


def run(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
        params = resolve(args)
    except (UsageError, ConfigError) as exc:
        print(f"kinkflow: error: {exc}", file=sys.stderr)
        return 2
    except SystemExit as exc:  # --help / --version
        return int(exc.code or 0)

    root = output_root(args)
    outdir = root / args.command
    started = time.perf_counter()
    try:
        if args.command == "report":
            result, tables = cmd_report(root)
        else:
            result, tables = HANDLERS[args.command](params)
    except UsageError as exc:
        print(f"kinkflow: error: {exc}", file=sys.stderr)
        return 2
    except (OrderingLost, SimulationBlowUp, InterfaceCountError, FixedPointDiverged) as exc:
        print(f"kinkflow {args.command}: failed: {exc}", file=sys.stderr)
        return 1
    wall = time.perf_counter() - started

    for name, (header, rows) in tables.items():
        write_csv(outdir / name, header, rows)
    write_json(outdir / "result.json", result)
    write_json(outdir / "manifest.json", make_manifest(args.command, params, wall, {"out": str(outdir)}))

    failed = [name for name, ok in result["checks"].items() if not ok]
    status = "PASS" if not failed else "FAIL (" + ", ".join(failed) + ")"
    print(f"kinkflow {args.command}: {status} -> {outdir} [{wall:.2f}s]")
    return 0 if not failed else 1


def main():  # pragma: no cover
    sys.exit(run())
