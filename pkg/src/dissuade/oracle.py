"""Independent checks of the closed forms.

Three tools live here. ``convex_envelope`` builds lower convex hulls of
sampled curves. ``brute_force_optimal_cost`` grid-searches the sender's plan
over a split-then-extreme-split family. The ``verify_*`` functions scan
grids for the threshold and ordering claims.

The brute-force search does not call the game engine in its inner loop.
It scores each plan with its own vectorised model of the receiver's choice
on the pooled branch, and tests cross-check that model against
``engine.best_response`` on sampled plans.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Mapping

import numpy as np

from .benchmark import n_cost, pi
from .engine import SenderStrategy
from .model import (
    Action,
    GameParams,
    Message,
    ParameterError,
    Regime,
    Signal,
    check_belief,
    make_split,
    split_with_gamma,
    thresholds,
)
from .scenarios import action_based_cost, signal_based_cost, unconditional_cost

ORDER_TOL = 1e-9
CHOICE_TOL = 1e-12


# ---------------------------------------------------------------------------
# Convex envelope


@dataclass(frozen=True)
class EnvelopeFunction:
    knots: np.ndarray  # shape (k, 2), increasing abscissae

    def __call__(self, q):
        out = np.interp(q, self.knots[:, 0], self.knots[:, 1])
        return float(out) if np.ndim(q) == 0 else out

    def is_convex(self, tol: float = 1e-12) -> bool:
        x, y = self.knots[:, 0], self.knots[:, 1]
        if len(x) < 3:
            return True
        slopes = np.diff(y) / np.diff(x)
        return bool(np.all(np.diff(slopes) >= -tol))


def convex_envelope(samples) -> EnvelopeFunction:
    """Lower convex hull of ``(q, value)`` samples (Andrew's monotone chain)."""
    pts = np.asarray(samples, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 2 or len(pts) < 2:
        raise ParameterError("convex_envelope needs at least 2 (q, value) samples")
    if np.any(np.diff(pts[:, 0]) <= 0):
        raise ParameterError("sample abscissae must be strictly increasing (unsorted or duplicate q)")
    hull: list[int] = []
    for k in range(len(pts)):
        while len(hull) >= 2:
            (x0, y0), (x1, y1) = pts[hull[-2]], pts[hull[-1]]
            x2, y2 = pts[k]
            # drop the middle point unless it lies strictly below the chord
            if (x1 - x0) * (y2 - y0) - (y1 - y0) * (x2 - x0) <= 0:
                hull.pop()
            else:
                break
        hull.append(k)
    return EnvelopeFunction(pts[hull].copy())


# ---------------------------------------------------------------------------
# Brute-force search over split-then-extreme-split plans


@dataclass(frozen=True)
class ExtremeFamilyPoint:
    """Period-1 split ``<r1;1>`` and, on the pooled branch, an extreme split per condition."""

    r1: float
    gammas: Mapping = field(default_factory=dict)

    def sender_strategy(self, regime: Regime, q: float) -> SenderStrategy:
        period1 = make_split(q, self.r1)
        period2 = {}
        if period1.branch(Message.l) is not None:
            for cond, gamma in self.gammas.items():
                if gamma > 0:
                    period2[(Message.l, cond)] = split_with_gamma(self.r1, gamma)
        return SenderStrategy(regime, period1, period2)


def gamma_grid(step: float) -> np.ndarray:
    count = round(1.0 / step)
    if abs(count * step - 1.0) < 1e-9:
        return np.linspace(0.0, 1.0, count + 1)
    return np.append(np.arange(0.0, 1.0, step), 1.0)


def _leaf(mass_g: float, mass_l: float, gamma: np.ndarray, c: float):
    """Receiver payoff and acts at one signal leaf after an extreme split with intensity ``gamma``."""
    revealed = gamma * mass_g
    pooled = (1.0 - gamma) * mass_g - c * mass_l
    act = pooled > CHOICE_TOL
    payoff = revealed + np.where(act, pooled, 0.0)
    cost = revealed + np.where(act, (1.0 - gamma) * mass_g + mass_l, 0.0)
    return payoff, cost


def _branch_options(r: float, params: GameParams, gammas: np.ndarray):
    """Per-gamma payoff/cost of refraining and of acting in period 1 at belief ``r``.

    Returns ``refrain`` (payoff, cost) indexed by the gamma that applies after R,
    and ``act_pos`` / ``act_neg`` contributions after A indexed by the gamma
    applying at each signal.
    """
    c, ag, al = params.c, params.alpha_g, params.alpha_l
    refrain = _leaf(r, 1.0 - r, gammas, c)
    pos = _leaf(r * ag, (1.0 - r) * al, gammas, c)
    neg = _leaf(r * (1.0 - ag), (1.0 - r) * (1.0 - al), gammas, c)
    base = r - (1.0 - r) * c
    return refrain, pos, neg, base


def _pooled_cost_fast(regime: Regime, r: float, params: GameParams, gammas: np.ndarray) -> float:
    """Least expected acts on the pooled branch over all gamma choices, without forming the grid product."""
    (pr, cr), (pp, cp), (pn, cn), base = _branch_options(r, params, gammas)
    if regime is Regime.UNCONDITIONAL:
        pa, ca = base + pp + pn, 1.0 + cp + cn
        value = np.where(pr > pa + CHOICE_TOL, cr, np.where(pa > pr + CHOICE_TOL, ca, np.minimum(cr, ca)))
        return float(value.min())
    if regime is Regime.ACTION_BASED:
        # refrain and act are governed by separate gammas, so feasibility decouples
        pa, ca = base + pp + pn, 1.0 + cp + cn
        best_r = cr[pr >= pa.min() - CHOICE_TOL]
        best_a = ca[pa >= pr.min() - CHOICE_TOL]
        return float(min(best_r.min(initial=math.inf), best_a.min(initial=math.inf)))
    # signal-based: the positive-signal gamma also governs the refrain branch
    worst_act = base + pp + pn.min()
    best_r = cr[pr >= worst_act - CHOICE_TOL].min(initial=math.inf)
    order = np.argsort(pn, kind="stable")
    pn_sorted = pn[order]
    suffix_min = np.minimum.accumulate(cn[order][::-1])[::-1]
    need = pr - base - pp - CHOICE_TOL
    pos = np.searchsorted(pn_sorted, need, side="left")
    ok = pos < len(gammas)
    if ok.any():
        best_a = (1.0 + cp[ok] + suffix_min[pos[ok]]).min()
    else:
        best_a = math.inf
    return float(min(best_r, best_a))


def pooled_cost_matrix(regime: Regime, r: float, params: GameParams, gammas: np.ndarray) -> np.ndarray:
    """Acts on the pooled branch for every gamma pair (rows: first condition, columns: second).

    For the unconditional regime the result is a vector. This is the direct
    route; ``_pooled_cost_fast`` must agree with its minimum.
    """
    (pr, cr), (pp, cp), (pn, cn), base = _branch_options(r, params, gammas)
    if regime is Regime.UNCONDITIONAL:
        pa, ca = base + pp + pn, 1.0 + cp + cn
        pr_m, cr_m = pr, cr
    elif regime is Regime.ACTION_BASED:
        # rows: gamma after R; columns: gamma after A
        pa = (base + pp + pn)[None, :]
        ca = (1.0 + cp + cn)[None, :]
        pr_m, cr_m = pr[:, None], cr[:, None]
    else:
        # rows: gamma after +; columns: gamma after -
        pa = base + np.add.outer(pp, pn)
        ca = 1.0 + np.add.outer(cp, cn)
        pr_m, cr_m = pr[:, None], cr[:, None]
    return np.where(
        pr_m > pa + CHOICE_TOL, cr_m, np.where(pa > pr_m + CHOICE_TOL, ca, np.minimum(cr_m, ca))
    ) + np.zeros(np.broadcast(pr_m, pa).shape)


@lru_cache(maxsize=200_000)
def _pooled_cost_cached(regime: Regime, r: float, params: GameParams, step: float) -> float:
    return _pooled_cost_fast(regime, r, params, gamma_grid(step))


def _conditions(regime: Regime) -> tuple:
    if regime is Regime.UNCONDITIONAL:
        return (None,)
    return (Action.R, Action.A) if regime is Regime.ACTION_BASED else (Signal.POS, Signal.NEG)


def family_cost(regime: Regime, q: float, point: ExtremeFamilyPoint, params: GameParams) -> float:
    """Oracle-side cost of one plan; the engine route must agree."""
    grid = np.array([point.gammas.get(cond, 0.0) for cond in _conditions(regime)])
    matrix = pooled_cost_matrix(regime, point.r1, params, grid)
    pooled = float(matrix[0]) if regime is Regime.UNCONDITIONAL else float(matrix[0, 1])
    return _total_cost(q, point.r1, pooled)


def _total_cost(q: float, r1: float, pooled: float) -> float:
    if r1 >= q:
        return pooled
    return 2.0 * (q - r1) / (1.0 - r1) + (1.0 - q) / (1.0 - r1) * pooled


def r1_grid(q: float, step: float) -> np.ndarray:
    count = int(math.floor(q / step + 1e-9))
    grid = np.minimum(np.arange(count + 1) * step, q)
    if grid[-1] < q:
        grid = np.append(grid, q)
    return grid


def brute_force_optimal_cost(
    regime: Regime, q: float, params: GameParams, grid_step: float = 1e-3
) -> tuple[float, ExtremeFamilyPoint]:
    """Least sender cost over ``<r1;1>`` period-1 splits and gamma-grid period-2 extreme splits.

    Ties go to the smallest r1 and then to the smallest gammas in condition order.
    """
    if not 0 < grid_step <= 0.01:
        raise ParameterError(f"grid_step must lie in (0, 0.01], got {grid_step}")
    check_belief(q)
    if not 0 < q < 1:
        raise ParameterError(f"brute force needs an interior prior, got {q}")
    gammas = gamma_grid(grid_step)
    r1s = r1_grid(q, grid_step)
    pooled = np.array([_pooled_cost_cached(regime, float(r), params, grid_step) for r in r1s])
    totals = np.where(
        r1s >= q, pooled, 2.0 * (q - r1s) / (1.0 - r1s) + (1.0 - q) / (1.0 - r1s) * pooled
    )
    best = float(totals.min())
    k = int(np.flatnonzero(totals <= best + CHOICE_TOL)[0])
    r1 = float(r1s[k])
    matrix = pooled_cost_matrix(regime, r1, params, gammas)
    flat = int(np.flatnonzero(matrix.ravel() <= pooled[k] + CHOICE_TOL)[0])
    conds = _conditions(regime)
    if regime is Regime.UNCONDITIONAL:
        chosen = {None: float(gammas[flat])}
    else:
        i, j = np.unravel_index(flat, matrix.shape)
        chosen = {conds[0]: float(gammas[i]), conds[1]: float(gammas[j])}
    return float(totals[k]), ExtremeFamilyPoint(r1, chosen)


# ---------------------------------------------------------------------------
# Grid verifiers


@dataclass(frozen=True)
class Check:
    name: str
    passed: bool
    residual: float
    tolerance: float
    detail: str = ""

    def as_dict(self) -> dict:
        return {
            "name": self.name,
            "passed": self.passed,
            "residual": self.residual,
            "tolerance": self.tolerance,
            "detail": self.detail,
        }


@dataclass(frozen=True)
class VerificationReport:
    checks: tuple[Check, ...]

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def failures(self) -> list[Check]:
        return [c for c in self.checks if not c.passed]

    def as_dict(self) -> dict:
        return {"passed": self.passed, "checks": [c.as_dict() for c in self.checks]}


def verify_lemma1(params: GameParams, grid_points: int = 10_000) -> VerificationReport:
    """Scan for the fixed point of the benchmark payoff and the facts built on it."""
    t = thresholds(params)
    grid = np.linspace(0.0, 1.0, grid_points + 1)[1:]
    value = pi(grid, params)
    gap = value - grid
    signs = np.sign(np.where(np.abs(gap) <= 1e-12, 0.0, gap))
    nonzero = signs[signs != 0]
    changes = int(np.count_nonzero(np.diff(nonzero)))
    # locate the crossing independently of the closed form
    above = np.flatnonzero(gap > 0)
    crossing = float(grid[above[0]]) if len(above) else math.nan
    spacing = 1.0 / grid_points
    locate_err = abs(crossing - t.p_star)
    checks = [
        Check(
            "fixed_point_unique",
            changes == 1 and locate_err <= spacing + 1e-12,
            locate_err,
            spacing,
            f"{changes} sign change(s) of pi(q)-q; first q above at {crossing:.6g}, p_star={t.p_star:.12g}",
        ),
        Check(
            "fixed_point_residual",
            abs(float(pi(t.p_star, params)) - t.p_star) <= 1e-12,
            abs(float(pi(t.p_star, params)) - t.p_star),
            1e-12,
        ),
    ]
    branch_low = 2 * params.alpha_g - params.alpha_l <= 1
    above_q_ii = t.p_star >= t.q_ii - 1e-12
    checks.append(
        Check(
            "branch_condition",
            branch_low == above_q_ii,
            t.p_star - t.q_ii,
            1e-12,
            f"2*alpha_g-alpha_l={2 * params.alpha_g - params.alpha_l:.12g}, p_star-q_ii={t.p_star - t.q_ii:.3e}",
        )
    )
    checks.append(Check("p_star_above_q_m", t.p_star > t.q_m, t.q_m - t.p_star, 0.0))
    low = np.append(grid[grid <= t.p_star], t.p_star)
    low_pi = pi(low, params)
    residual = (low - low_pi) / (1.0 - low_pi)
    worst = float(residual.min())
    checks.append(
        Check(
            "xi_nonnegative",
            worst >= -1e-12,
            max(0.0, -worst),
            1e-12,
            f"min xi on [0, p_star] = {worst:.3e}",
        )
    )
    return VerificationReport(tuple(checks))


CurveMap = Mapping[str, Callable]


def default_curves() -> dict[str, Callable]:
    return {
        "pi": pi,
        "n_a": action_based_cost,
        "n_s": signal_based_cost,
        "n_u": unconditional_cost,
        "n": n_cost,
    }


ORDERING_CHAIN = ("pi", "n_a", "n_s", "n_u", "n")


def verify_orderings(
    params: GameParams, grid_points: int = 2000, curves: CurveMap | None = None
) -> VerificationReport:
    """Check the pointwise chain pi <= N^A <= N^S <= N^U <= N and the threshold order.

    ``curves`` replaces any of the named curves, which lets tests inject a
    corrupted closed form and watch the check fail.
    """
    if grid_points < 100:
        raise ParameterError(f"grid_points must be at least 100, got {grid_points}")
    funcs = default_curves()
    if curves:
        funcs.update(curves)
    grid = np.linspace(0.0, 1.0, grid_points)
    values = {name: np.asarray(funcs[name](grid, params), dtype=float) for name in ORDERING_CHAIN}
    checks = []
    for lower, upper in zip(ORDERING_CHAIN, ORDERING_CHAIN[1:]):
        excess = values[lower] - values[upper]
        worst = float(excess.max())
        bad = np.flatnonzero(excess > ORDER_TOL)
        detail = f"first violation at q={grid[bad[0]]:.12g}" if len(bad) else ""
        checks.append(Check(f"{lower}<={upper}", len(bad) == 0, max(0.0, worst), ORDER_TOL, detail))
    t = thresholds(params)
    if t.p_e is not None:
        margin = min(t.p_e - t.q_i, t.p_star - t.p_e)
        checks.append(
            Check("q_i<p_e<p_star", margin > 0, max(0.0, -margin), 0.0, f"margin {margin:.3e}")
        )
    return VerificationReport(tuple(checks))
