"""Command-line driver.

Every command writes plain data files plus ``manifest.json`` recording the
exact parameters and tool version.  Exit status: 0 on success, 2 on a
configuration error, 3 when a solver fails to converge.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .bethe.components import ConvergenceFailure, RootCountMismatch
from .bethe.doublons import BranchNotFound, doublon_branches, write_branches_csv
from .bethe.finite import analytic_sector
from .bethe.regions import region_enumerate_infU, write_regions_csv
from .dynamics import StepTooLarge, evolve, initial_state, write_trajectory_csv, write_trajectory_json
from .ed import write_state_json
from .model import BadParameters, ModelParams
from .observables import entanglement_entropy, ipr

COMMANDS = ("spectrum", "doublon", "regions", "eigenstate", "evolve")
PARAM_KEYS = ("n", "j1", "j2", "u1", "u2", "u3", "omega", "delta")
OPTION_KEYS = {
    "p": int,
    "all_p": bool,
    "hardcore": bool,
    "u1_infinite": bool,
    "u2_infinite": bool,
    "out": str,
    "format": str,
    "p_grid": int,
    "index": int,
    "initial": str,
    "t_max": float,
    "dt_out": float,
    "method": str,
    "workers": int,
}
SWEEP_KEYS = ("p", "u", "omega")


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    command: str
    params: ModelParams
    output_dir: Path
    format: str = "csv"
    sweep: dict[str, list[float]] = field(default_factory=dict)
    options: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.command not in COMMANDS:
            raise ConfigError(f"command: must be one of {', '.join(COMMANDS)}")
        if self.format not in ("csv", "json"):
            raise ConfigError("format: must be csv or json")
        for key, grid in self.sweep.items():
            if key not in SWEEP_KEYS:
                raise ConfigError(f"sweep.{key}: unknown sweep axis (use {', '.join(SWEEP_KEYS)})")
            if not grid or not all(isinstance(v, (int, float)) and math.isfinite(v) for v in grid):
                raise ConfigError(f"sweep.{key}: grid must be a non-empty list of finite numbers")


def fmt(x) -> str:
    return f"{x:.12g}"


# --------------------------------------------------------------------------
# configuration


def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="coupled-bh", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", type=Path, help="JSON file with parameters and options")
        for key in PARAM_KEYS:
            p.add_argument(f"--{key.replace('_', '-')}", dest=key, type=int if key == "n" else float)
        p.add_argument("--hardcore", action="store_const", const=True, help="hard-core bosons in both species")
        grp = p.add_mutually_exclusive_group()
        grp.add_argument("--p", dest="p", type=int, metavar="INDEX", help="total momentum 2 pi INDEX / N")
        grp.add_argument("--all-p", dest="all_p", action="store_const", const=True)
        p.add_argument("--out", type=str, metavar="DIR")
        p.add_argument("--format", choices=("csv", "json"))
        p.add_argument("--workers", type=int, help="processes for sweeps")
        if name == "doublon":
            p.add_argument("--p-grid", dest="p_grid", type=int, metavar="M", help="M momenta in [-pi, pi)")
        if name == "eigenstate":
            p.add_argument("--index", type=int, help="position of the state in the sorted sector")
        if name == "evolve":
            p.add_argument("--initial", choices=("ab00", "aa00"))
            p.add_argument("--t-max", dest="t_max", type=float)
            p.add_argument("--dt-out", dest="dt_out", type=float)
            p.add_argument("--method", choices=("spectral", "integrator"))
    return ap


def _read_config(path: Path) -> dict:
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: line {exc.lineno}: {exc.msg}") from exc
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: top level must be an object")
    return data


def build_config(args: argparse.Namespace) -> RunConfig:
    """Merge the optional JSON file with command-line flags (flags win)."""
    merged: dict = {}
    sweep = {}
    if args.config is not None:
        data = _read_config(args.config)
        for key, value in data.items():
            if key == "command":
                if value != args.command:
                    raise ConfigError(f"command: config says {value!r} but {args.command!r} was run")
                continue
            if key == "sweep":
                if not isinstance(value, dict):
                    raise ConfigError("sweep: must be an object of grids")
                sweep = value
                continue
            key_n = key.replace("-", "_")
            if key_n in PARAM_KEYS:
                if not isinstance(value, (int, float)) or isinstance(value, bool):
                    raise ConfigError(f"{key}: must be a number")
            elif key_n in OPTION_KEYS:
                want = OPTION_KEYS[key_n]
                ok = isinstance(value, bool) if want is bool else (
                    isinstance(value, want) or (want is float and isinstance(value, int))
                )
                if not ok or (want is not bool and isinstance(value, bool)):
                    raise ConfigError(f"{key}: must be of type {want.__name__}")
            else:
                raise ConfigError(f"{key}: unknown configuration key")
            merged[key_n] = value
    for key, value in vars(args).items():
        if key in ("command", "config") or value is None:
            continue
        merged[key] = value
    if merged.pop("hardcore", False):
        merged["u1_infinite"] = merged["u2_infinite"] = True
    pdata = {k: merged.pop(k) for k in (*PARAM_KEYS, "u1_infinite", "u2_infinite") if k in merged}
    try:
        params = ModelParams(**pdata)
    except (BadParameters, TypeError) as exc:
        raise ConfigError(str(exc)) from exc
    out = Path(merged.pop("out", "out"))
    form = merged.pop("format", "csv")
    return RunConfig(args.command, params, out, form, sweep, merged)


# --------------------------------------------------------------------------
# commands


def _p_indices(cfg: RunConfig) -> list[int]:
    opts = cfg.options
    if "p" in opts and not opts.get("all_p"):
        r = opts["p"]
        if not 0 <= r < cfg.params.n:
            raise ConfigError(f"p: index must lie in 0..{cfg.params.n - 1}")
        return [r]
    if "sweep_p" in opts:
        return [int(v) for v in opts["sweep_p"]]
    return list(range(cfg.params.n))


def _write_table(path: Path, header: list[str], rows: list[list], form: str) -> Path:
    if form == "csv":
        path = path.with_suffix(".csv")
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(header)
            w.writerows(rows)
    else:
        path = path.with_suffix(".json")
        path.write_text(json.dumps({"columns": header, "rows": rows}, indent=1))
    return path


def _spectrum(cfg: RunConfig) -> list[Path]:
    p = cfg.params
    rows = []
    for r in _p_indices(cfg):
        sol = analytic_sector(p, r, strict=True)
        for st in sol.states:
            rep = entanglement_entropy(st.state)
            rows.append([r, fmt(p.momentum(r)), fmt(st.energy), st.kind, fmt(ipr(st.state)), fmt(rep.S_total),
                         f"{st.residual:.3e}", sol.route])
    header = ["p_index", "P [rad]", "energy [J]", "type", "ipr", "S [nat]", "residual [J]", "route"]
    return [_write_table(cfg.output_dir / "spectrum", header, rows, cfg.format)]


def _momentum_grid(cfg: RunConfig) -> list[float]:
    if "sweep_p" in cfg.options:
        return [float(v) for v in cfg.options["sweep_p"]]
    m = cfg.options.get("p_grid")
    if m is not None:
        if m < 1:
            raise ConfigError("p_grid: must be a positive integer")
        return [-math.pi + 2 * math.pi * i / m for i in range(m)]
    return [cfg.params.momentum(r) for r in _p_indices(cfg)]


def _doublon(cfg: RunConfig) -> list[Path]:
    branches = doublon_branches(cfg.params, _momentum_grid(cfg))
    if cfg.format == "csv":
        path = cfg.output_dir / "doublon_branches.csv"
        write_branches_csv(path, branches)
        return [path]
    rows = []
    for br in branches:
        for (P, e), k, v in zip(br.samples, br.decay_constants, br.group_velocity):
            rows.append([fmt(P), fmt(e), fmt(min(k)) if k else "nan", br.branch_id, br.kind, br.order, fmt(v)])
    header = ["P [rad]", "energy [J]", "K", "branch", "kind", "order", "group_velocity [J]"]
    return [_write_table(cfg.output_dir / "doublon_branches", header, rows, "json")]


def _regions(cfg: RunConfig) -> list[Path]:
    p = cfg.params
    if not p.hardcore:
        raise ConfigError("hardcore: region enumeration needs --hardcore")
    states = []
    for r in _p_indices(cfg):
        states += region_enumerate_infU(p, r)
    if cfg.format == "csv":
        path = cfg.output_dir / "regions.csv"
        write_regions_csv(path, p, states)
        return [path]
    rows = [[s.p_index, fmt(p.momentum(s.p_index)), fmt(s.energy), s.region, f"{s.residual:.3e}"] for s in states]
    return [_write_table(cfg.output_dir / "regions", ["p_index", "P [rad]", "energy [J]", "region", "residual"],
                         rows, "json")]


def _eigenstate(cfg: RunConfig) -> list[Path]:
    if "p" not in cfg.options:
        raise ConfigError("p: eigenstate needs --p INDEX")
    r = _p_indices(cfg)[0]
    sol = analytic_sector(cfg.params, r, strict=True)
    idx = cfg.options.get("index", 0)
    if not 0 <= idx < len(sol.states):
        raise ConfigError(f"index: must lie in 0..{len(sol.states) - 1}")
    st = sol.states[idx]
    st.state.total_momentum_index = r
    st.state.energy = st.energy
    path = cfg.output_dir / f"eigenstate_p{r}_i{idx}.json"
    write_state_json(path, st.state)
    return [path]


def _evolve(cfg: RunConfig) -> list[Path]:
    o = cfg.options
    t_max = o.get("t_max", 40.0)
    dt_out = o.get("dt_out", 0.05)
    if not (t_max > 0 and dt_out > 0):
        raise ConfigError("t_max/dt_out: must be positive")
    m = int(round(t_max / dt_out))
    times = np.linspace(0.0, m * dt_out, m + 1)
    try:
        psi0 = initial_state(o.get("initial", "ab00"), cfg.params.n)
    except ValueError as exc:
        raise ConfigError(f"initial: {exc}") from exc
    method = o.get("method", "spectral")
    if method not in ("spectral", "integrator"):
        raise ConfigError("method: must be spectral or integrator")
    try:
        traj = evolve(psi0, cfg.params, times, method, store_states=False)
    except StepTooLarge as exc:
        raise ConfigError(str(exc)) from exc
    if cfg.format == "csv":
        path = cfg.output_dir / "trajectory.csv"
        write_trajectory_csv(path, traj)
    else:
        path = cfg.output_dir / "trajectory.json"
        write_trajectory_json(path, traj)
    return [path]


HANDLERS = {"spectrum": _spectrum, "doublon": _doublon, "regions": _regions, "eigenstate": _eigenstate,
            "evolve": _evolve}


def _sweep_points(cfg: RunConfig) -> list[tuple[str, RunConfig]]:
    """Expand the sweep into ``(label, config)`` pairs; ``p`` is carried as an option."""
    if not cfg.sweep:
        return [("", cfg)]
    points = [("", cfg.params, {})]
    for axis in ("u", "omega"):
        grid = cfg.sweep.get(axis)
        if not grid:
            continue
        new = []
        for label, params, extra in points:
            for v in grid:
                change = {"u1": v, "u2": v} if axis == "u" else {"omega": v}
                new.append((f"{label}{axis}{fmt(v)}_", params.with_(**change), extra))
        points = new
    out = []
    for label, params, extra in points:
        opts = dict(cfg.options)
        if "p" in cfg.sweep:
            opts["sweep_p"] = cfg.sweep["p"]
        sub = cfg.output_dir / label.rstrip("_") if label else cfg.output_dir
        out.append((label.rstrip("_"), RunConfig(cfg.command, params, sub, cfg.format, {}, opts)))
    return out


def _run_one(cfg: RunConfig) -> list[Path]:
    cfg.output_dir.mkdir(parents=True, exist_ok=True)
    return HANDLERS[cfg.command](cfg)


def run(cfg: RunConfig) -> int:
    points = _sweep_points(cfg)
    workers = cfg.options.get("workers", 1)
    try:
        if workers > 1 and len(points) > 1:
            with ProcessPoolExecutor(max_workers=workers) as pool:
                files = list(pool.map(_run_one, [c for _, c in points]))
        else:
            files = [_run_one(c) for _, c in points]
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except (ConvergenceFailure, RootCountMismatch, BranchNotFound) as exc:
        print(f"solver failed: {exc}", file=sys.stderr)
        return 3
    manifest = {
        "tool": "coupled-bh",
        "version": __version__,
        "command": cfg.command,
        "params": cfg.params.to_dict(),
        "options": {k: v for k, v in sorted(cfg.options.items())},
        "sweep": cfg.sweep,
        "format": cfg.format,
        "points": [
            {"label": label, "params": c.params.to_dict(), "files": [str(f) for f in fs]}
            for (label, c), fs in zip(points, files)
        ],
    }
    (cfg.output_dir / "manifest.json").write_text(json.dumps(manifest, indent=1, sort_keys=True))
    return 0


def main(argv: list[str] | None = None) -> int:
    args = _parser().parse_args(argv)
    try:
        cfg = build_config(args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    cfg.output_dir.mkdir(parents=True, exist_ok=True)
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())
