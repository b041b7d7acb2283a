"""Cost-minimal service-level assignment per item class.

Every item picks exactly one simulated service level; each class with a target must
reach a weighted realized service of at least that target. Classes share no items,
so the binary program splits into one multiple-choice knapsack per class.

Plans compare by (total cost, -weighted service, level indices), with totals formed
by ``math.fsum`` so that equal selections always give bit-identical sums.
"""
from __future__ import annotations

import itertools
import math
from bisect import bisect_left
from dataclasses import dataclass

import numpy as np

from .ingest import CLASSES, ValidatedDataset, item_sort_key
from .simulator import MODEL_ORDER, GridResults

FEAS_TOL = 1e-9
EXHAUSTIVE_LIMIT = 10 ** 6


class InfeasibleError(RuntimeError):
    """One or more class targets cannot be reached; ``classes`` maps class -> best reachable."""

    def __init__(self, classes: dict[str, float], model: str = ""):
        self.classes = dict(classes)
        self.model = model
        detail = ", ".join(f"class {c}: target unreachable, max weighted SL {v:.6f}"
                           for c, v in sorted(self.classes.items()))
        super().__init__(f"{model + ': ' if model else ''}{detail}")


@dataclass(frozen=True)
class ItemOptions:
    item_id: str
    item_class: str
    weight: float
    levels: tuple[float, ...]
    costs: tuple[float, ...]
    services: tuple[float, ...]

    def __post_init__(self):
        if not self.levels:
            raise ValueError(f"{self.item_id}: no service levels")
        if not len(self.levels) == len(self.costs) == len(self.services):
            raise ValueError(f"{self.item_id}: ragged option lists")
        if any(c < 0 or not math.isfinite(c) for c in self.costs):
            raise ValueError(f"{self.item_id}: negative or non-finite cost")
        if any(not 0.0 <= s <= 1.0 for s in self.services):
            raise ValueError(f"{self.item_id}: realized service outside [0, 1]")
        if self.weight < 0:
            raise ValueError(f"{self.item_id}: negative weight")

    def weighted(self, k: int) -> float:
        return self.weight * self.services[k]


@dataclass(frozen=True)
class Problem:
    items: tuple[ItemOptions, ...]
    targets: dict[str, float]
    model: str = ""

    def __post_init__(self):
        for cls in self.targets:
            members = self.class_items(cls)
            if members and not any(it.weight > 0 for it in members):
                raise ValueError(f"class {cls}: all weights are zero")

    def classes(self) -> list[str]:
        present = {it.item_class for it in self.items}
        return [c for c in CLASSES if c in present]

    def class_items(self, cls: str) -> list[ItemOptions]:
        return [it for it in self.items if it.item_class == cls]

    def scaled(self, factor: float) -> "Problem":
        items = tuple(ItemOptions(it.item_id, it.item_class, it.weight, it.levels,
                                  tuple(c * factor for c in it.costs), it.services)
                      for it in self.items)
        return Problem(items, dict(self.targets), self.model)


@dataclass(frozen=True)
class Plan:
    model: str
    choices: dict[str, int]
    total_cost: float
    class_cost: dict[str, float]
    class_service: dict[str, float]

    def level(self, problem: Problem, item_id: str) -> float:
        it = next(i for i in problem.items if i.item_id == item_id)
        return it.levels[self.choices[item_id]]


def _key(items, choice):
    cost = math.fsum(it.costs[k] for it, k in zip(items, choice))
    service = math.fsum(it.weighted(k) for it, k in zip(items, choice))
    return cost, -service, tuple(choice)


def _feasible(service: float, target: float | None) -> bool:
    return target is None or service >= target - FEAS_TOL


def _unconstrained(items) -> tuple[int, ...]:
    return tuple(min(range(len(it.costs)), key=lambda k: (it.costs[k], -it.weighted(k), k))
                 for it in items)


def _max_service(items) -> float:
    return math.fsum(max(it.weighted(k) for k in range(len(it.costs))) for it in items)


def _assemble(problem: Problem, picks: dict[str, tuple[int, ...]]) -> Plan:
    choices, class_cost, class_service = {}, {}, {}
    for cls in problem.classes():
        items = problem.class_items(cls)
        choice = picks[cls]
        cost, neg_service, _ = _key(items, choice)
        class_cost[cls], class_service[cls] = cost, -neg_service
        choices.update({it.item_id: k for it, k in zip(items, choice)})
    total = math.fsum(it.costs[choices[it.item_id]] for it in problem.items)
    return Plan(problem.model, choices, total, class_cost, class_service)


def _solve(problem: Problem, class_solver) -> Plan:
    picks, infeasible = {}, {}
    for cls in problem.classes():
        items = problem.class_items(cls)
        target = problem.targets.get(cls)
        if target is None:
            picks[cls] = _unconstrained(items)
            continue
        best = _max_service(items)
        if best < target - FEAS_TOL:
            infeasible[cls] = best
            continue
        picks[cls] = class_solver(items, target)
    if infeasible:
        raise InfeasibleError(infeasible, problem.model)
    return _assemble(problem, picks)


def _exhaustive_class(items, target: float) -> tuple[int, ...]:
    sizes = [len(it.costs) for it in items]
    if math.prod(sizes) > EXHAUSTIVE_LIMIT:
        raise ValueError(f"instance too large for enumeration: {math.prod(sizes)} plans")
    cost = np.zeros(())
    service = np.zeros(())
    for it in items:
        cost = np.add.outer(cost, np.asarray(it.costs))
        service = np.add.outer(service, np.array([it.weighted(k) for k in range(len(it.costs))]))
    cost, service = cost.ravel(), service.ravel()
    # Float sums only shortlist candidates; the winner is chosen on exact fsum keys.
    loose = np.flatnonzero(service >= target - FEAS_TOL - 1e-12)
    order = loose[np.argsort(cost[loose], kind="stable")]
    best = None
    for flat in order:
        if best is not None and cost[flat] > best[0] + 1e-9 * max(1.0, abs(best[0])):
            break
        choice = np.unravel_index(flat, sizes)
        key = _key(items, [int(k) for k in choice])
        if _feasible(-key[1], target) and (best is None or key < best):
            best = key
    return best[2]


def solve_exhaustive(problem: Problem) -> Plan:
    """Reference solver: enumerate every assignment within each class."""
    return _solve(problem, _exhaustive_class)


def _pareto_options(it: ItemOptions) -> list[int]:
    """Indices not dominated in (lower cost, higher weighted service), ascending cost."""
    order = sorted(range(len(it.costs)), key=lambda k: (it.costs[k], -it.weighted(k), k))
    kept, best_service = [], -math.inf
    for k in order:
        if it.weighted(k) > best_service:
            kept.append(k)
            best_service = it.weighted(k)
    return kept


def _hull_steps(it: ItemOptions, kept: list[int]) -> list[tuple[float, float]]:
    """(service gain, cost) increments along the lower convex hull of the kept options."""
    pts = [(it.weighted(k), it.costs[k]) for k in kept]
    hull = [pts[0]]
    for p in pts[1:]:
        while len(hull) >= 2:
            (s0, c0), (s1, c1) = hull[-2], hull[-1]
            if (c1 - c0) * (p[0] - s0) >= (p[1] - c0) * (s1 - s0):
                hull.pop()
            else:
                break
        hull.append(p)
    return [(b[0] - a[0], b[1] - a[1]) for a, b in zip(hull, hull[1:])]


class _Relaxation:
    """Continuous MCKP bound for every suffix of the branching order.

    Each item starts at its cheapest option; hull increments from all suffix items
    are bought in ascending cost-per-service order, the last one fractionally.
    """

    def __init__(self, items, kept):
        n = len(items)
        self.base = [0.0] * (n + 1)
        self.cum_gain: list[list[float]] = [[] for _ in range(n + 1)]
        self.cum_cost: list[list[float]] = [[] for _ in range(n + 1)]
        steps: list[tuple[float, float, float]] = []
        for d in range(n - 1, -1, -1):
            it = items[d]
            self.base[d] = self.base[d + 1] + it.costs[kept[d][0]]
            steps += [(dc / ds, ds, dc) for ds, dc in _hull_steps(it, kept[d])]
            steps.sort()
            self.cum_gain[d] = list(itertools.accumulate(s[1] for s in steps))
            self.cum_cost[d] = list(itertools.accumulate(s[2] for s in steps))

    def bound(self, depth: int, need: float) -> float:
        """Least cost for items depth.. to add `need` service over their cheapest options."""
        base = self.base[depth]
        if need <= 0:
            return base
        gains, costs = self.cum_gain[depth], self.cum_cost[depth]
        # Slack absorbs summation noise so boundary-feasible plans are not pruned.
        if need > (gains[-1] if gains else 0.0) + 1e-12:
            return math.inf
        if not gains:
            return base
        j = min(bisect_left(gains, need), len(gains) - 1)
        prev_gain = gains[j - 1] if j else 0.0
        prev_cost = costs[j - 1] if j else 0.0
        frac = min(1.0, (need - prev_gain) / (gains[j] - prev_gain))
        return base + prev_cost + frac * (costs[j] - prev_cost)


def _bb_class(items, target: float) -> tuple[int, ...]:
    n = len(items)
    kept = [_pareto_options(it) for it in items]
    relax = _Relaxation(items, kept)
    # Service from the cheapest option of every item at or after each depth.
    floor_after = [0.0] * (n + 1)
    for d in range(n - 1, -1, -1):
        floor_after[d] = floor_after[d + 1] + items[d].weighted(kept[d][0])
    goal = target - FEAS_TOL
    best = None
    choice = [0] * n

    def dive(depth: int, cost: float, service: float):
        nonlocal best
        if depth == n:
            key = _key(items, choice)
            if _feasible(-key[1], target) and (best is None or key < best):
                best = key
            return
        lb = cost + relax.bound(depth, goal - service - floor_after[depth])
        if math.isinf(lb):
            return
        if best is not None and lb > best[0] + 1e-9 * max(1.0, abs(best[0])):
            return
        it = items[depth]
        for k in kept[depth]:
            choice[depth] = k
            dive(depth + 1, cost + it.costs[k], service + it.weighted(k))

    dive(0, 0.0, 0.0)
    return best[2]


def solve_bb(problem: Problem) -> Plan:
    """Exact branch-and-bound over each constrained class."""
    return _solve(problem, _bb_class)


def _weights(dataset: ValidatedDataset) -> dict[str, float]:
    sizes = {}
    for e in dataset.items.values():
        sizes[e.record.item_class] = sizes.get(e.record.item_class, 0) + 1
    return {i: (e.record.weight if e.record.weight is not None
                else 1.0 / sizes[e.record.item_class])
            for i, e in dataset.items.items()}


def build_problem(grid: GridResults, dataset: ValidatedDataset, config=None) -> dict[str, Problem]:
    """One Problem per model: costs are safety-stock values, services realized cycle SLs."""
    config = config or dataset.config
    weights = _weights(dataset)
    levels = grid.levels()
    problems = {}
    for kind in MODEL_ORDER:
        items = []
        for item_id in dataset.item_ids():
            rec = dataset.items[item_id].record
            try:
                cells = [grid.get(item_id, a, kind) for a in levels]
            except KeyError:
                raise ValueError(f"grid is missing cells for {item_id} ({kind.value})") from None
            items.append(ItemOptions(item_id, rec.item_class, weights[item_id], tuple(levels),
                                     tuple(c.safety_stock_value for c in cells),
                                     tuple(c.realized_cycle_sl for c in cells)))
        present = {it.item_class for it in items}
        targets = {c: t for c, t in config.wsl_target.items() if c in present}
        problems[kind.value] = Problem(tuple(items), targets, kind.value)
    return problems


@dataclass(frozen=True)
class ClassSummaryRow:
    item_class: str
    model: str
    expected_cycle_sl: float
    expected_period_sl: float
    safety_stock_value: float


def summarize(plans: dict[str, Plan], problems: dict[str, Problem], grid: GridResults,
              dataset: ValidatedDataset) -> list[ClassSummaryRow]:
    """Per class and model: unweighted mean realized SLs and total value of the chosen cells."""
    rows = []
    classes = [c for c in CLASSES
               if any(e.record.item_class == c for e in dataset.items.values())]
    for cls in classes:
        for kind in MODEL_ORDER:
            plan, problem = plans.get(kind.value), problems.get(kind.value)
            if plan is None:
                continue
            ids = sorted((i for i, e in dataset.items.items() if e.record.item_class == cls),
                         key=item_sort_key)
            cells = [grid.get(i, plan.level(problem, i), kind) for i in ids]
            rows.append(ClassSummaryRow(
                cls, kind.value,
                math.fsum(c.realized_cycle_sl for c in cells) / len(cells),
                math.fsum(c.realized_period_sl for c in cells) / len(cells),
                math.fsum(c.safety_stock_value for c in cells)))
    return rows
