import math

import pytest
from hypothesis import given, settings, strategies as st

from safestock.optimizer import (
    FEAS_TOL, InfeasibleError, ItemOptions, Problem, build_problem, solve_bb, solve_exhaustive,
    summarize,
)
from safestock.simulator import GridCell, GridResults
from tests.conftest import make_dataset, random_problem


def one_item(target):
    it = ItemOptions("item_1", "A", 1.0, (0.9, 0.99), (5.0, 9.0), (0.9, 0.99))
    return Problem((it,), {"A": target} if target is not None else {})


@pytest.mark.parametrize("solver", [solve_bb, solve_exhaustive])
def test_two_option_example(solver):
    plan = solver(one_item(0.95))
    assert plan.choices == {"item_1": 1} and plan.total_cost == 9.0


@pytest.mark.parametrize("solver", [solve_bb, solve_exhaustive])
def test_no_target_takes_cheapest(solver):
    assert solver(one_item(None)).total_cost == 5.0


@pytest.mark.parametrize("solver", [solve_bb, solve_exhaustive])
def test_unreachable_target(solver):
    with pytest.raises(InfeasibleError) as err:
        solver(one_item(1.01))
    assert err.value.classes == {"A": 0.99}


def test_negative_cost_rejected():
    with pytest.raises(ValueError):
        ItemOptions("x", "A", 1.0, (0.5,), (-1.0,), (0.5,))


def test_all_zero_weights_rejected():
    it = ItemOptions("x", "A", 0.0, (0.5,), (1.0,), (0.5,))
    with pytest.raises(ValueError):
        Problem((it,), {"A": 0.5})


def test_tie_prefers_higher_service_then_lower_index():
    it = ItemOptions("x", "A", 1.0, (0.5, 0.6, 0.7), (4.0, 4.0, 4.0), (0.8, 0.9, 0.9))
    for solver in (solve_bb, solve_exhaustive):
        assert solver(Problem((it,), {"A": 0.5})).choices == {"x": 1}


def test_oracle_equivalence_200_instances():
    for seed in range(200):
        p = random_problem(seed)
        a, b = solve_bb(p), solve_exhaustive(p)
        assert a.total_cost == b.total_cost, seed
        assert a.choices == b.choices, seed


def _check_feasible(plan, problem):
    assert set(plan.choices) == {it.item_id for it in problem.items}
    for cls, target in problem.targets.items():
        got = math.fsum(it.weighted(plan.choices[it.item_id]) for it in problem.class_items(cls))
        assert got >= target - FEAS_TOL


@settings(max_examples=80, deadline=None)
@given(st.integers(0, 10 ** 6))
def test_plans_feasible(seed):
    p = random_problem(seed, max_items=6)
    _check_feasible(solve_bb(p), p)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10 ** 6), st.sampled_from([2.0, 0.5, 10.0]))
def test_cost_scaling_keeps_assignment(seed, factor):
    p = random_problem(seed, max_items=6)
    base, scaled = solve_bb(p), solve_bb(p.scaled(factor))
    assert scaled.choices == base.choices
    if factor == 2.0:
        assert scaled.total_cost == 2 * base.total_cost


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10 ** 6), st.floats(0.0, 0.2))
def test_raising_target_never_cheaper(seed, bump):
    p = random_problem(seed, max_items=5)
    higher = Problem(p.items, {**p.targets, "A": p.targets["A"] + bump}, p.model)
    try:
        hi = solve_bb(higher)
    except InfeasibleError:
        return
    assert hi.class_cost["A"] >= solve_bb(p).class_cost["A"]


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10 ** 6))
def test_classes_solve_independently(seed):
    p = random_problem(seed, max_items=5)
    joint = solve_bb(p)
    for cls in ("A", "B"):
        alone = solve_bb(Problem(tuple(p.class_items(cls)), {cls: p.targets[cls]}, p.model))
        assert alone.total_cost == joint.class_cost[cls]
        assert all(joint.choices[k] == v for k, v in alone.choices.items())


def test_unconstrained_class_c():
    p = random_problem(3, classes=("A", "C"))
    p = Problem(p.items, {"A": p.targets["A"]}, p.model)
    plan = solve_bb(p)
    for it in p.class_items("C"):
        assert it.costs[plan.choices[it.item_id]] == min(it.costs)


def _grid_for(ds, table):
    cells = []
    for item_id, rows in table.items():
        for model in ("kde", "normal"):
            for a, sl, cost in rows:
                cells.append(GridCell(item_id, model, a, sl, min(1.0, sl + 0.01), cost / 10, cost))
    return GridResults(cells)


def test_build_problem_and_summary():
    ds = make_dataset({"item_1": ([5, 6, 7], [6, 6]), "item_2": ([1, 2, 3], [2, 2])},
                      classes={"item_1": "A", "item_2": "B"})
    grid = _grid_for(ds, {"item_1": [(0.5, 0.6, 1.0), (0.9, 0.93, 4.0), (0.99, 0.99, 9.0)],
                          "item_2": [(0.5, 0.55, 2.0), (0.9, 0.91, 3.0), (0.99, 0.97, 8.0)]})
    problems = build_problem(grid, ds)
    assert set(problems) == {"kde", "normal"}
    assert problems["kde"].targets == {"A": 0.95, "B": 0.90}
    assert len(problems["kde"].items) == 2 and problems["kde"].items[0].weight == 1.0
    plans = {m: solve_bb(p) for m, p in problems.items()}
    rows = summarize(plans, problems, grid, ds)
    assert [(r.item_class, r.model) for r in rows] == [
        ("A", "kde"), ("A", "normal"), ("B", "kde"), ("B", "normal")]
    a = rows[0]
    assert (a.expected_cycle_sl, a.safety_stock_value) == (0.99, 9.0)
    assert a.expected_period_sl == 1.0
    assert rows[2].safety_stock_value == 3.0


def test_build_problem_cell_count(bundled):
    cells = [GridCell(i, m, a, 0.9, 0.95, 1.0, 1.0) for i in bundled.item_ids()
             for a in bundled.config.service_level_grid for m in ("kde", "normal")]
    problems = build_problem(GridResults(cells), bundled)
    for p in problems.values():
        assert sum(len(it.levels) for it in p.items) == 140


def test_missing_cell_reported(bundled):
    ds = bundled.filter(["item_1"])
    cells = [GridCell("item_1", "kde", 0.5, 0.9, 0.9, 1.0, 1.0)]
    with pytest.raises(ValueError, match="missing"):
        build_problem(GridResults(cells), ds)


def test_target_at_tolerance_edge():
    # Target just inside the feasibility tolerance above the best reachable service.
    p = random_problem(3485, max_items=5)
    edge = Problem(p.items, {**p.targets, "A": p.targets["A"] + 1e-9}, p.model)
    assert solve_bb(edge).choices == solve_exhaustive(edge).choices


def test_oracle_equivalence_at_max_targets():
    for seed in range(200):
        p = random_problem(seed, max_items=6)
        tight = {c: math.fsum(max(it.weighted(k) for k in range(len(it.levels)))
                              for it in p.class_items(c)) + 5e-10 for c in p.targets}
        q = Problem(p.items, tight, p.model)
        assert solve_bb(q).choices == solve_exhaustive(q).choices, seed
