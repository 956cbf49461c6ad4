import json
import math

import pytest

from phckit.neldermead import nelder_mead_maximize


def neg_quadratic(x):
    return -((x[0] - 0.3) ** 2 + 2.0 * (x[1] + 0.1) ** 2)


BOUNDS2 = [(-1.0, 1.0), (-1.0, 1.0)]


def test_converges_on_quadratic():
    res = nelder_mead_maximize(neg_quadratic, [0.0, 0.0], BOUNDS2, budget=200)
    assert res.evaluations <= 200
    assert abs(res.best_x[0] - 0.3) < 1e-4
    assert abs(res.best_x[1] + 0.1) < 1e-4
    assert res.best_value > -1e-7


def test_collapsed_bounds_single_evaluation():
    res = nelder_mead_maximize(neg_quadratic, [0.5, -0.2],
                               [(0.5, 0.5), (-0.2, -0.2)], budget=50)
    assert res.evaluations == 1
    assert res.best_x == [0.5, -0.2]
    assert res.converged


def test_budget_exhaustion_flag():
    def rosenbrock(x):
        return -((1 - x[0]) ** 2 + 100 * (x[1] - x[0] ** 2) ** 2)

    res = nelder_mead_maximize(rosenbrock, [-1.0, 1.0], BOUNDS2, budget=10)
    assert res.evaluations == 10
    assert res.budget_exhausted
    assert not res.converged


def test_trace_persisted(tmp_path):
    path = tmp_path / "trace.jsonl"
    res = nelder_mead_maximize(neg_quadratic, [0.0, 0.0], BOUNDS2,
                               budget=40, trace_path=path)
    lines = path.read_text().splitlines()
    assert len(lines) == res.evaluations
    rec = json.loads(lines[-1])
    assert set(rec) == {"eval", "x", "value"}
    assert rec["eval"] == res.evaluations


def test_all_evaluations_within_bounds():
    bounds = [(0.0, 0.5), (-0.3, 0.0)]
    res = nelder_mead_maximize(neg_quadratic, [0.25, -0.15], bounds, budget=100)
    for rec in res.trace:
        for v, (lo, hi) in zip(rec["x"], bounds):
            assert lo - 1e-15 <= v <= hi + 1e-15
    # the unconstrained optimum (0.3, -0.1) is feasible here
    assert abs(res.best_x[0] - 0.3) < 1e-3
    assert abs(res.best_x[1] + 0.1) < 1e-3


def test_best_never_below_first_evaluation():
    def noisy_bowl(x):
        return -(x[0] ** 2) + 0.1 * math.sin(40.0 * x[0])

    res = nelder_mead_maximize(noisy_bowl, [0.8], [(-1.0, 1.0)], budget=60)
    assert res.best_value >= res.trace[0]["value"]


def test_validation():
    with pytest.raises(ValueError):
        nelder_mead_maximize(neg_quadratic, [0.0, 0.0], BOUNDS2, budget=5)
    with pytest.raises(ValueError):
        nelder_mead_maximize(neg_quadratic, [2.0, 0.0], BOUNDS2, budget=20)
    with pytest.raises(ValueError):
        nelder_mead_maximize(neg_quadratic, [0.0], BOUNDS2, budget=20)


def test_deterministic():
    a = nelder_mead_maximize(neg_quadratic, [0.1, 0.1], BOUNDS2, budget=80)
    b = nelder_mead_maximize(neg_quadratic, [0.1, 0.1], BOUNDS2, budget=80)
    assert a.trace == b.trace
    assert a.best_x == b.best_x
