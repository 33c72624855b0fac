"""Command-line surface tying the modules together.

Subcommands: ground, excited, fiber-scan, gn-constant, regime, validate.
Configuration comes from a file of key=value lines or a single JSON object;
--seed/--n/--L/--out override it.  Exit codes: 0 success, 2 unconverged
numerical run, 1 configuration or usage error.  All floating-point output is
printed with 17 significant digits so reruns are byte-identical.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

import numpy as np

from logsp.grid import (
    make_grid,
    make_log_kernel_table,
    read_field,
    write_field,
    write_radial_csv,
)
from logsp.functionals import ModelParams, make_state
from logsp.fiber import (
    FiberProfile,
    FiberRoots,
    SingleRoot,
    fiber_roots,
    two_root_lhs,
)
from logsp.regimes import classify_regime, gn_constant, mass_threshold
from logsp.solver import SolveOptions, SolveReport, solve_excited, solve_ground
from logsp.validate import identity_report
from logsp.functionals import multipliers as _multipliers

COMMANDS = ("ground", "excited", "fiber-scan", "gn-constant", "regime", "validate")


class ConfigError(ValueError):
    """Raised for malformed or invalid run configuration."""


# ---------------------------------------------------------------------------
# Configuration
# ---------------------------------------------------------------------------

def _as_float(v):
    if isinstance(v, bool):
        raise ConfigError(f"expected a number, got {v!r}")
    try:
        return float(v)
    except (TypeError, ValueError):
        raise ConfigError(f"expected a number, got {v!r}") from None


def _as_int(v):
    f = _as_float(v)
    if f != int(f):
        raise ConfigError(f"expected an integer, got {v!r}")
    return int(f)


def _as_str(v):
    if not isinstance(v, str):
        raise ConfigError(f"expected a string, got {v!r}")
    return v


def _as_float_list(v):
    if isinstance(v, str):
        parts = [p for p in v.split(",") if p.strip()]
        return [_as_float(p) for p in parts]
    if isinstance(v, (list, tuple)):
        return [_as_float(x) for x in v]
    raise ConfigError(f"expected a list of numbers, got {v!r}")


_KEY_TYPES = {
    "p": _as_float, "mu1": _as_float, "mu2": _as_float, "beta": _as_float,
    "c1": _as_float, "c2": _as_float,
    "n": _as_int, "L": _as_float,
    "max_iters": _as_int, "grad_tol": _as_float, "manifold_tol": _as_float,
    "step0": _as_float, "armijo_shrink": _as_float, "armijo_c": _as_float,
    "seed": _as_int,
    "q": _as_float,
    "A": _as_float, "B": _as_float, "C": _as_float, "W": _as_float,
    "t_min": _as_float, "t_max": _as_float, "points": _as_int,
    "t_list": _as_float_list,
    "u_file": _as_str, "v_file": _as_str,
    "K4": _as_float, "K2p": _as_float,
    "output_dir": _as_str,
}


@dataclass
class RunConfig:
    """Validated, losslessly parsed run configuration; every field optional
    until the chosen command requires it."""

    p: float | None = None
    mu1: float | None = None
    mu2: float | None = None
    beta: float | None = None
    c1: float | None = None
    c2: float | None = None
    n: int = 128
    L: float = 8.0
    max_iters: int = 5000
    grad_tol: float = 5e-4
    manifold_tol: float = 1e-4
    step0: float = 0.5
    armijo_shrink: float = 0.5
    armijo_c: float = 1e-4
    seed: int = 0
    q: float | None = None
    A: float | None = None
    B: float | None = None
    C: float | None = None
    W: float = 0.0
    t_min: float = 0.05
    t_max: float = 20.0
    points: int = 201
    t_list: list = field(default_factory=lambda: [0.5, 1.0, 2.0])
    u_file: str | None = None
    v_file: str | None = None
    K4: float | None = None
    K2p: float | None = None
    output_dir: str = "out"

    def params(self) -> ModelParams:
        missing = [k for k in ("p", "mu1", "mu2", "beta", "c1", "c2")
                   if getattr(self, k) is None]
        if missing:
            raise ConfigError(f"missing model parameters: {', '.join(missing)}")
        try:
            return ModelParams(p=self.p, mu1=self.mu1, mu2=self.mu2,
                               beta=self.beta, c1=self.c1, c2=self.c2)
        except ValueError as e:
            raise ConfigError(str(e)) from None

    def solve_options(self) -> SolveOptions:
        try:
            return SolveOptions(
                max_iters=self.max_iters, grad_tol=self.grad_tol,
                manifold_tol=self.manifold_tol, step0=self.step0,
                armijo=(self.armijo_shrink, self.armijo_c), seed=self.seed,
            )
        except ValueError as e:
            raise ConfigError(str(e)) from None


def _reject_duplicates(pairs):
    seen = {}
    for k, v in pairs:
        if k in seen:
            raise ConfigError(f"duplicate key {k!r}")
        seen[k] = v
    return seen


def parse_config(text: str) -> RunConfig:
    """Parse key=value lines or one JSON object into a validated RunConfig."""
    text = text.strip()
    if text.startswith("{"):
        try:
            raw = json.loads(text, object_pairs_hook=_reject_duplicates)
        except json.JSONDecodeError as e:
            raise ConfigError(f"invalid JSON config: {e}") from None
        if not isinstance(raw, dict):
            raise ConfigError("JSON config must be an object")
    else:
        raw = {}
        for lineno, line in enumerate(text.splitlines(), 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ConfigError(f"line {lineno}: expected key=value, got {line!r}")
            key, _, value = line.partition("=")
            key, value = key.strip(), value.strip()
            if key in raw:
                raise ConfigError(f"duplicate key {key!r}")
            raw[key] = value

    cfg = RunConfig()
    for key, value in raw.items():
        if key not in _KEY_TYPES:
            raise ConfigError(f"unknown key {key!r}")
        setattr(cfg, key, _KEY_TYPES[key](value))
    _validate(cfg)
    return cfg


def _validate(cfg: RunConfig) -> None:
    if cfg.p is not None and not cfg.p > 1:
        raise ConfigError("p must exceed 1")
    for k in ("c1", "c2"):
        v = getattr(cfg, k)
        if v is not None and not v > 0:
            raise ConfigError(f"{k} must be positive")
    if cfg.n <= 0 or (cfg.n & (cfg.n - 1)) != 0:
        raise ConfigError(f"n must be a positive power of two, got {cfg.n}")
    if not cfg.L > 0:
        raise ConfigError("L must be positive")
    if cfg.q is not None and not cfg.q > 2:
        raise ConfigError("q must exceed 2")
    if not (cfg.t_min > 0 and cfg.t_max > cfg.t_min and cfg.points >= 2):
        raise ConfigError("fiber scan needs 0 < t_min < t_max and points >= 2")
    if any(t <= 0 for t in cfg.t_list):
        raise ConfigError("t_list entries must be positive")


# ---------------------------------------------------------------------------
# Deterministic JSON with 17 significant digits
# ---------------------------------------------------------------------------

def _fmt(x) -> str:
    if isinstance(x, bool):
        return "true" if x else "false"
    if x is None:
        return "null"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        v = float(x)
        if v != v or v in (float("inf"), float("-inf")):
            raise ValueError(f"non-finite value in JSON output: {v}")
        return format(v, ".17g")
    if isinstance(x, str):
        return json.dumps(x)
    if isinstance(x, (list, tuple)):
        return "[" + ", ".join(_fmt(v) for v in x) + "]"
    if isinstance(x, dict):
        items = (f"{json.dumps(str(k))}: {_fmt(v)}" for k, v in x.items())
        return "{" + ", ".join(items) + "}"
    raise TypeError(f"cannot serialize {type(x)}")


def dump_json(obj, path=None) -> str:
    text = _fmt(obj) + "\n"
    if path is not None:
        Path(path).write_text(text)
    return text


# ---------------------------------------------------------------------------
# Report serialization
# ---------------------------------------------------------------------------

def _regime_dict(regime) -> dict:
    return {
        "kind": regime.kind.value,
        "mu0": regime.mu0,
        "threshold": regime.threshold,
        "slack": regime.slack,
    }


def _report_dict(rep: SolveReport, cfg: RunConfig) -> dict:
    prm = rep.state.params
    return {
        "branch": rep.branch,
        "converged": rep.converged,
        "energy": rep.energy,
        "lambda1": rep.lambda1,
        "lambda2": rep.lambda2,
        "iterations": rep.iterations,
        "residuals": dict(rep.residuals),
        "regime": _regime_dict(rep.regime),
        "params": {"p": prm.p, "mu1": prm.mu1, "mu2": prm.mu2,
                   "beta": prm.beta, "c1": prm.c1, "c2": prm.c2},
        "grid": {"n": cfg.n, "L": cfg.L},
        "seed": cfg.seed,
        "energy_trace": rep.energy_trace,
    }


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------

def _cmd_solve(name: str, cfg: RunConfig, out: Path) -> int:
    params = cfg.params()
    grid = make_grid(cfg.n, cfg.L)
    table = make_log_kernel_table(grid)
    solver = solve_ground if name == "ground" else solve_excited
    rep = solver(params, grid, cfg.solve_options(), table)
    dump_json(_report_dict(rep, cfg), out / f"{name}_report.json")
    write_field(out / "u.lspf", rep.state.u)
    write_field(out / "v.lspf", rep.state.v)
    write_radial_csv(out / "u_radial.csv", rep.state.u)
    write_radial_csv(out / "v_radial.csv", rep.state.v)
    with open(out / "energy_trace.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["iter", "energy"])
        for i, e in enumerate(rep.energy_trace):
            writer.writerow([i, format(e, ".17g")])
    print(f"{name}: converged={rep.converged} energy={rep.energy:.10g} "
          f"iterations={rep.iterations} -> {out}")
    return 0 if rep.converged else 2


def _cmd_fiber_scan(cfg: RunConfig, out: Path) -> int:
    missing = [k for k in ("A", "B", "C", "q") if getattr(cfg, k) is None]
    if missing:
        raise ConfigError(f"fiber-scan needs profile keys: {', '.join(missing)}")
    pr = FiberProfile(A=cfg.A, B=cfg.B, C=cfg.C, q=cfg.q, W=cfg.W)
    ts = np.geomspace(cfg.t_min, cfg.t_max, cfg.points)
    with open(out / "fiber_scan.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t", "F", "f", "g"])
        for t in ts:
            writer.writerow([format(v, ".17g")
                             for v in (t, pr.F(t), pr.f(t), pr.g(t))])
    lhs = two_root_lhs(pr)
    roots = fiber_roots(pr)
    if isinstance(roots, FiberRoots):
        roots_doc = {"kind": "two", "t_plus": roots.t_plus,
                     "t_bar": roots.t_bar, "t_minus": roots.t_minus}
    elif isinstance(roots, SingleRoot):
        roots_doc = {"kind": "single", "t": roots.t}
    else:
        roots_doc = None
    doc = {
        "profile": {"A": pr.A, "B": pr.B, "C": pr.C, "q": pr.q, "W": pr.W},
        "condition": {
            "lhs": lhs,
            "rhs": pr.C / 2.0,
            "two_roots": bool(pr.C > 0 and lhs > pr.C / 2.0),
        },
        "roots": roots_doc,
    }
    text = dump_json(doc, out / "fiber_roots.json")
    print(text, end="")
    return 0


def _cmd_gn_constant(cfg: RunConfig, out: Path) -> int:
    if cfg.q is None:
        raise ConfigError("gn-constant needs q")
    grid = make_grid(cfg.n, cfg.L)
    gc = gn_constant(cfg.q, grid)
    doc = {
        "q": gc.q, "K": gc.K, "method": gc.method, "residual": gc.residual,
        "K_ascent": gc.K_ascent, "K_shooting": gc.K_shooting,
        "agreement": gc.agreement, "n": cfg.n, "L": cfg.L,
    }
    text = dump_json(doc, out / "gn_constant.json")
    cache_path = out / "gn_cache.json"
    cache = {}
    if cache_path.exists():
        cache = json.loads(cache_path.read_text())
    cache[f"q={gc.q:.17g}|n={cfg.n}|L={cfg.L:.17g}"] = doc
    dump_json(cache, cache_path)
    print(text, end="")
    return 0


def _cmd_regime(cfg: RunConfig, out: Path) -> int:
    params = cfg.params()
    K4, K2p = cfg.K4, cfg.K2p
    if params.p == 2.0 and K4 is None:
        K4 = gn_constant(4.0).K
    if params.p > 2.0 and min(params.mu1, params.mu2, params.beta) > 0 and K2p is None:
        K2p = gn_constant(2.0 * params.p).K
    regime = classify_regime(params, K4=K4, K2p=K2p)
    text = dump_json(_regime_dict(regime), out / "regime.json")
    print(text, end="")
    return 0


def _cmd_validate(cfg: RunConfig, out: Path) -> int:
    if cfg.u_file is None or cfg.v_file is None:
        raise ConfigError("validate needs u_file and v_file")
    params = cfg.params()
    u = read_field(cfg.u_file)
    v = read_field(cfg.v_file)
    if (u.grid.n, u.grid.L) != (cfg.n, cfg.L):
        raise ConfigError(
            f"field dump grid ({u.grid.n}, {u.grid.L}) does not match config "
            f"({cfg.n}, {cfg.L})"
        )
    state = make_state(u, v, params, renormalize=False, check_decay=False)
    table = make_log_kernel_table(u.grid)
    lam1, lam2 = _multipliers(state, table)
    rep = identity_report(state, table, lam1, lam2, t_list=cfg.t_list)
    doc = rep.as_dict()
    doc["lambda1"] = lam1
    doc["lambda2"] = lam2
    text = dump_json(doc, out / "identity_report.json")
    print(text, end="")
    return 0


def run_command(name: str, cfg: RunConfig) -> int:
    """Dispatch one subcommand; returns the process exit status."""
    if name not in COMMANDS:
        raise ConfigError(f"unknown command {name!r}")
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    if name in ("ground", "excited"):
        return _cmd_solve(name, cfg, out)
    if name == "fiber-scan":
        return _cmd_fiber_scan(cfg, out)
    if name == "gn-constant":
        return _cmd_gn_constant(cfg, out)
    if name == "regime":
        return _cmd_regime(cfg, out)
    return _cmd_validate(cfg, out)


# ---------------------------------------------------------------------------
# Entry point
# ---------------------------------------------------------------------------

def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="logsp",
        description="Normalized ground and excited states of the planar "
                    "two-component Schrodinger-Poisson system with "
                    "logarithmic interaction.",
        epilog="Config keys (key=value lines or one JSON object): "
               + ", ".join(sorted(_KEY_TYPES)) + ". "
               "Defaults: n=128, L=8, seed=0, grad_tol=5e-4, manifold_tol=1e-4, "
               "step0=0.5, armijo_shrink=0.5, armijo_c=1e-4, max_iters=5000, "
               "t_list=0.5,1,2, output_dir=out.",
    )
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--config", help="path to a config file")
    parser.add_argument("--out", help="output directory (overrides output_dir)")
    parser.add_argument("--seed", type=int, help="RNG seed override")
    parser.add_argument("--n", type=int, help="grid size override")
    parser.add_argument("--L", type=float, help="domain half-width override")
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.config is not None:
            cfg = parse_config(Path(args.config).read_text())
        else:
            cfg = RunConfig()
        overrides = {}
        if args.out is not None:
            overrides["output_dir"] = args.out
        if args.seed is not None:
            overrides["seed"] = args.seed
        if args.n is not None:
            overrides["n"] = args.n
        if args.L is not None:
            overrides["L"] = args.L
        if overrides:
            cfg = replace(cfg, **overrides)
            _validate(cfg)
        return run_command(args.command, cfg)
    except ConfigError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    except FileNotFoundError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
