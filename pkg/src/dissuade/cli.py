"""Command-line front end: thresholds, sweeps, simulation and the verification suite."""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from dataclasses import dataclass
from typing import Callable, Mapping, Sequence

import numpy as np

from .benchmark import n_cost, pi
from .engine import compliance, evaluate_exact, ic_check, simulate
from .model import GameParams, ParameterError, Regime, thresholds
from .oracle import brute_force_optimal_cost, verify_lemma1, verify_orderings
from .scenarios import (
    action_based_cost,
    action_precvx_cost,
    equilibrium,
    equilibrium_cost,
    signal_based_cost,
    signal_precvx_cost,
    unconditional_cost,
)

SWEEP_COLUMNS = ("q", "pi", "n", "n_u", "n_a", "n_s", "precvx_a", "precvx_s")
BRUTE_FORCE_PRIORS = (0.3, 0.5, 0.56, 0.7, 0.8, 0.95)
SEED_ENV = "DISSUADE_SEED"


class UsageError(Exception):
    """Bad command-line input; reported with exit status 2."""


@dataclass(frozen=True)
class RunConfig:
    params: GameParams
    q: float | None = None
    q_grid: tuple[float, float, int] = (0.0, 1.0, 101)
    regime: Regime | None = None
    n_samples: int = 100_000
    seed: int = 0
    output_path: str | None = None
    format: str | None = None
    grid_step: float = 1e-3


def _fmt12(x: float) -> str:
    return f"{x:.12g}"


def _round12(x: float | None) -> float | None:
    return None if x is None else float(_fmt12(x))


# ---------------------------------------------------------------------------
# Argument handling


def parse_grid(text: str) -> tuple[float, float, int]:
    parts = text.split(":")
    if len(parts) != 3:
        raise UsageError(f"--grid expects start:stop:points, got {text!r}")
    try:
        start, stop, points = float(parts[0]), float(parts[1]), int(parts[2])
    except ValueError:
        raise UsageError(f"--grid expects numbers, got {text!r}") from None
    if not 0.0 <= start < stop <= 1.0:
        raise UsageError(f"--grid needs 0 <= start < stop <= 1, got {start}:{stop}")
    if points < 2:
        raise UsageError(f"--grid needs at least 2 points, got {points}")
    return start, stop, points


def _load_params(args: argparse.Namespace) -> GameParams:
    values: dict[str, float] = {}
    if args.config:
        try:
            with open(args.config, encoding="utf-8") as fh:
                loaded = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read config {args.config}: {exc}") from None
        if not isinstance(loaded, dict):
            raise UsageError("config file must hold a JSON object")
        values.update({k: loaded[k] for k in ("c", "alpha_g", "alpha_l") if k in loaded})
    for key in ("c", "alpha_g", "alpha_l"):
        flag = getattr(args, key)
        if flag is not None:
            values[key] = flag
    missing = [k for k in ("c", "alpha_g", "alpha_l") if k not in values]
    if missing:
        raise UsageError(f"missing parameter(s): {', '.join(missing)} (use flags or --config)")
    return GameParams(values["c"], values["alpha_g"], values["alpha_l"])


def _resolve_seed(flag: int | None) -> int:
    if flag is not None:
        seed = flag
    elif os.environ.get(SEED_ENV):
        try:
            seed = int(os.environ[SEED_ENV])
        except ValueError:
            raise UsageError(f"{SEED_ENV} must be an integer, got {os.environ[SEED_ENV]!r}") from None
    else:
        seed = 0
    if not 0 <= seed < 2**64:
        raise UsageError(f"seed must be a 64-bit unsigned integer, got {seed}")
    return seed


def build_config(args: argparse.Namespace) -> RunConfig:
    params = _load_params(args)
    grid = parse_grid(args.grid) if args.grid else (0.0, 1.0, 101)
    if args.q is not None and not 0.0 <= args.q <= 1.0:
        raise UsageError(f"--q must lie in [0, 1], got {args.q}")
    if args.n is not None and args.n < 1:
        raise UsageError(f"--n must be a positive integer, got {args.n}")
    if not 0 < args.grid_step <= 0.01:
        raise UsageError(f"--grid-step must lie in (0, 0.01], got {args.grid_step}")
    return RunConfig(
        params=params,
        q=args.q,
        q_grid=grid,
        regime=Regime(args.regime) if args.regime else None,
        n_samples=args.n if args.n is not None else 100_000,
        seed=_resolve_seed(args.seed),
        output_path=args.out,
        format=args.format,
        grid_step=args.grid_step,
    )


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--c", type=float, help="loss magnitude in state L")
    common.add_argument("--alpha-g", dest="alpha_g", type=float, help="P(+ | G, act)")
    common.add_argument("--alpha-l", dest="alpha_l", type=float, help="P(+ | L, act)")
    common.add_argument("--config", help="JSON file with c, alpha_g, alpha_l (flags override)")
    common.add_argument("--q", type=float, help="prior belief in state G")
    common.add_argument("--grid", help="sweep grid as start:stop:points")
    common.add_argument("--regime", choices=[r.value for r in Regime])
    common.add_argument("--n", type=int, help="Monte Carlo sample size")
    common.add_argument("--seed", type=int, help=f"RNG seed (default: ${SEED_ENV}, else 0)")
    common.add_argument("--grid-step", dest="grid_step", type=float, default=1e-3)
    common.add_argument("--format", choices=["csv", "json"])
    common.add_argument("--out", help="write output to this path instead of stdout")

    parser = argparse.ArgumentParser(prog="dissuade", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("thresholds", parents=[common], help="print cutoff beliefs")
    sub.add_parser("sweep", parents=[common], help="tabulate payoff and cost curves over a grid")
    sub.add_parser("simulate", parents=[common], help="Monte Carlo run of a canonical equilibrium")
    sub.add_parser("verify", parents=[common], help="run the closed-form verification suite")
    return parser


def _emit(text: str, config: RunConfig) -> None:
    if config.output_path:
        with open(config.output_path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


# ---------------------------------------------------------------------------
# Commands


def cmd_thresholds(config: RunConfig) -> int:
    t = thresholds(config.params).as_dict()
    if config.format == "json":
        text = json.dumps({k: _round12(v) for k, v in t.items()}, indent=2) + "\n"
    elif config.format == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["name", "value"])
        for k, v in t.items():
            writer.writerow([k, "" if v is None else f"{v:#.12g}"])
        text = buf.getvalue()
    else:
        text = "".join(f"{k}={'null' if v is None else f'{v:#.12g}'}\n" for k, v in t.items())
    _emit(text, config)
    return 0


def sweep_rows(params: GameParams, grid: np.ndarray) -> list[dict[str, float | None]]:
    t = thresholds(params)
    columns = {
        "q": grid,
        "pi": pi(grid, params),
        "n": n_cost(grid, params),
        "n_u": unconditional_cost(grid, params),
        "n_a": action_based_cost(grid, params),
        "n_s": signal_based_cost(grid, params),
    }
    rows = []
    for k, q in enumerate(grid):
        row = {name: float(values[k]) for name, values in columns.items()}
        row["precvx_a"] = action_precvx_cost(float(q), params) if q >= t.p_star else None
        row["precvx_s"] = signal_precvx_cost(float(q), params) if t.p_e is not None else None
        rows.append(row)
    return rows


def _metadata(params: GameParams) -> dict:
    return {
        "params": params.as_dict(),
        "thresholds": {k: _round12(v) for k, v in thresholds(params).as_dict().items()},
    }


def cmd_sweep(config: RunConfig) -> int:
    start, stop, points = config.q_grid
    rows = sweep_rows(config.params, np.linspace(start, stop, points))
    if config.format == "json":
        payload = {
            "metadata": _metadata(config.params),
            "columns": list(SWEEP_COLUMNS),
            "rows": [{k: _round12(row[k]) for k in SWEEP_COLUMNS} for row in rows],
        }
        text = json.dumps(payload, indent=2) + "\n"
    else:
        buf = io.StringIO()
        buf.write("# " + json.dumps(_metadata(config.params), sort_keys=True) + "\n")
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(SWEEP_COLUMNS)
        for row in rows:
            writer.writerow(["" if row[k] is None else _fmt12(row[k]) for k in SWEEP_COLUMNS])
        text = buf.getvalue()
    _emit(text, config)
    return 0


def cmd_simulate(config: RunConfig) -> int:
    if config.regime is None or config.q is None:
        raise UsageError("simulate needs --regime and --q")
    report = equilibrium(config.regime, config.q, config.params)
    sender = report.sender_strategy()
    receiver = compliance(sender, config.q, config.params)
    exact = evaluate_exact(sender, receiver, config.q, config.params)
    result = simulate(sender, receiver, config.q, config.params, config.n_samples, config.seed)
    payload = {
        "regime": config.regime.value,
        "q": config.q,
        "params": config.params.as_dict(),
        "n": result.n,
        "seed": result.seed,
        "exact": exact.as_dict(),
        "empirical": result.mean.as_dict(),
        "standard_error": {
            k: (None if math.isnan(v) else v) for k, v in result.standard_error.as_dict().items()
        },
    }
    _emit(json.dumps(payload, indent=2) + "\n", config)
    return 0


def _check(name: str, residual: float, tolerance: float, detail: str = "") -> dict:
    return {
        "name": name,
        "passed": bool(residual <= tolerance),
        "residual": residual,
        "tolerance": tolerance,
        "detail": detail,
    }


def run_verification(
    config: RunConfig, curves: Mapping[str, Callable] | None = None, engine_points: int = 200
) -> list[dict]:
    """Every check as a dict with name, passed, residual (worst case) and tolerance."""
    params = config.params
    checks = [dict(c.as_dict(), name=f"lemma1:{c.name}") for c in verify_lemma1(params).checks]
    checks += [
        dict(c.as_dict(), name=f"ordering:{c.name}")
        for c in verify_orderings(params, 2000, curves=curves).checks
    ]

    for regime in Regime:
        worst_match = worst_ic = worst_interior = 0.0
        for q in np.linspace(0.0, 1.0, engine_points):
            q = float(q)
            report = equilibrium(regime, q, params)
            sender = report.sender_strategy()
            receiver = compliance(sender, q, params)
            stats = evaluate_exact(sender, receiver, q, params)
            worst_match = max(
                worst_match,
                abs(stats.sender_cost - report.sender_cost),
                abs(stats.receiver_payoff - report.receiver_payoff),
            )
            worst_ic = max(worst_ic, ic_check(sender, receiver, q, params))
            worst_interior = max(worst_interior, stats.prob_act_at_interior_belief)
        checks.append(_check(f"engine:{regime.value}:closed_form", worst_match, 1e-12))
        checks.append(_check(f"engine:{regime.value}:incentive", worst_ic, 1e-9))
        checks.append(_check(f"engine:{regime.value}:interior_acts", worst_interior, 0.0))

    tolerance = 5 * config.grid_step
    for regime in Regime:
        worst, where = 0.0, None
        for q in BRUTE_FORCE_PRIORS:
            cost, _ = brute_force_optimal_cost(regime, q, params, config.grid_step)
            gap = abs(cost - equilibrium_cost(regime, q, params))
            if gap >= worst:
                worst, where = gap, q
        checks.append(_check(f"brute_force:{regime.value}", worst, tolerance, f"worst at q={where}"))
    return checks


def cmd_verify(config: RunConfig, curves: Mapping[str, Callable] | None = None) -> int:
    checks = run_verification(config, curves)
    passed = all(c["passed"] for c in checks)
    payload = {"passed": passed, "params": config.params.as_dict(), "checks": checks}
    _emit(json.dumps(payload, indent=2) + "\n", config)
    for c in checks:
        if not c["passed"]:
            print(f"FAILED {c['name']}: residual {c['residual']:.3e} > {c['tolerance']:.1e} {c['detail']}", file=sys.stderr)
    return 0 if passed else 1


COMMANDS = {
    "thresholds": cmd_thresholds,
    "sweep": cmd_sweep,
    "simulate": cmd_simulate,
}


def main(argv: Sequence[str] | None = None, curves: Mapping[str, Callable] | None = None) -> int:
    """Entry point. ``curves`` overrides closed-form curves in ``verify`` (used by negative-control tests)."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse usage errors exit 2, --help exits 0
        return int(exc.code or 0)
    try:
        config = build_config(args)
        if args.command == "verify":
            return cmd_verify(config, curves)
        return COMMANDS[args.command](config)
    except (UsageError, ParameterError) as exc:
        print(f"dissuade {args.command}: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
