"""Bounded Nelder-Mead simplex maximization with a persisted evaluation
trace. Deterministic for a fixed initial point and bounds; one
shrink-restart on stagnation, then stop (bounded runtime over expensive
objectives)."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field


@dataclass
class OptimizationResult:
    best_x: list[float]
    best_value: float
    evaluations: int
    trace: list[dict]
    budget_exhausted: bool
    converged: bool


def _clip(x, bounds):
    return [min(max(v, lo), hi) for v, (lo, hi) in zip(x, bounds)]


def nelder_mead_maximize(
    objective,
    initial: list[float],
    bounds: list[tuple[float, float]],
    budget: int = 100,
    xtol: float = 1e-8,
    ftol: float = 1e-10,
    initial_step: float = 0.05,
    trace_path=None,
) -> OptimizationResult:
    """Maximize objective(x) over box bounds with at most `budget`
    evaluations. Out-of-bound trial points are clipped to the box.

    trace_path, when given, receives one JSON line per evaluation so an
    interrupted run can be inspected or resumed by reusing best_x.
    """
    if budget < 10:
        raise ValueError("budget must be >= 10 evaluations")
    ndim = len(initial)
    if len(bounds) != ndim:
        raise ValueError("bounds/initial dimension mismatch")
    for v, (lo, hi) in zip(initial, bounds):
        if lo > hi:
            raise ValueError(f"invalid bound ({lo}, {hi})")
        if not lo <= v <= hi:
            raise ValueError(f"initial point {v} outside bound ({lo}, {hi})")

    trace: list[dict] = []
    n_eval = 0
    trace_fh = open(trace_path, "w") if trace_path else None

    def f(x):
        nonlocal n_eval
        x = _clip(x, bounds)
        val = float(objective(x))
        n_eval += 1
        rec = {"eval": n_eval, "x": list(x), "value": val}
        trace.append(rec)
        if trace_fh:
            trace_fh.write(json.dumps(rec) + "\n")
            trace_fh.flush()
        return val

    collapsed = all(hi - lo == 0.0 for lo, hi in bounds)
    try:
        x0 = _clip(initial, bounds)
        v0 = f(x0)
        best_x, best_v = list(x0), v0
        if collapsed:
            return OptimizationResult(best_x, best_v, n_eval, trace, False, True)

        def build_simplex(center, step):
            pts = [list(center)]
            for i in range(ndim):
                p = list(center)
                lo, hi = bounds[i]
                h = step * max(hi - lo, abs(p[i]), 1e-3)
                p[i] = min(p[i] + h, hi) if p[i] + h <= hi else max(p[i] - h, lo)
                pts.append(p)
            return pts

        alpha, gamma_e, rho, sigma = 1.0, 2.0, 0.5, 0.5
        restarted = False
        simplex = build_simplex(x0, initial_step)
        values = [v0] + [f(p) for p in simplex[1:]]
        converged = False

        while n_eval < budget:
            order = sorted(range(len(simplex)), key=lambda i: -values[i])
            simplex = [simplex[i] for i in order]
            values = [values[i] for i in order]
            if values[0] > best_v:
                best_v, best_x = values[0], list(simplex[0])

            spread_x = max(
                max(abs(simplex[i][d] - simplex[0][d]) for i in range(1, ndim + 1))
                for d in range(ndim)
            )
            spread_f = abs(values[0] - values[-1])
            if spread_x < xtol and spread_f < ftol * max(1.0, abs(values[0])):
                if restarted:
                    converged = True
                    break
                restarted = True
                simplex = build_simplex(simplex[0], initial_step * 0.1)
                values = [values[0]] + [f(p) for p in simplex[1:]]
                if n_eval >= budget:
                    break
                continue

            centroid = [
                sum(simplex[i][d] for i in range(ndim)) / ndim for d in range(ndim)
            ]
            worst = simplex[-1]
            refl = [c + alpha * (c - w) for c, w in zip(centroid, worst)]
            v_refl = f(refl)
            if n_eval >= budget:
                if v_refl > best_v:
                    best_v, best_x = v_refl, _clip(refl, bounds)
                break

            if values[0] >= v_refl > values[-2]:
                simplex[-1], values[-1] = _clip(refl, bounds), v_refl
            elif v_refl > values[0]:
                exp = [c + gamma_e * (c - w) for c, w in zip(centroid, worst)]
                v_exp = f(exp)
                if v_exp > v_refl:
                    simplex[-1], values[-1] = _clip(exp, bounds), v_exp
                else:
                    simplex[-1], values[-1] = _clip(refl, bounds), v_refl
            else:
                contr = [c + rho * (w - c) for c, w in zip(centroid, worst)]
                v_contr = f(contr)
                if v_contr > values[-1]:
                    simplex[-1], values[-1] = _clip(contr, bounds), v_contr
                else:
                    for i in range(1, ndim + 1):
                        if n_eval >= budget:
                            break
                        simplex[i] = [
                            s0 + sigma * (si - s0)
                            for s0, si in zip(simplex[0], simplex[i])
                        ]
                        values[i] = f(simplex[i])

        for v, p in zip(values, simplex):
            if v > best_v:
                best_v, best_x = v, list(p)
        return OptimizationResult(
            best_x=best_x,
            best_value=best_v,
            evaluations=n_eval,
            trace=trace,
            budget_exhausted=n_eval >= budget and not converged,
            converged=converged,
        )
    finally:
        if trace_fh:
            trace_fh.close()
