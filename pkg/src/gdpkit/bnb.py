"""Global solver for flattened models.

Best-bound branch and bound: binaries are branched to integrality,
continuous variables in nonlinear terms are split spatially so the
envelope relaxations tighten. Incumbents come only from LP points that
pass an exact feasibility check against the original rows. Defaults
match a 0.01 % relative gap and a 3600 s wall clock budget.
"""

from __future__ import annotations

import heapq
import logging
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .lp import LpSolution, lp_solve
from .model import BINARY
from .relax import build_lp_relaxation, envelope_violations
from .transforms import FlatModel, _negated

logger = logging.getLogger(__name__)

DEFAULT_GAP = 1e-4
DEFAULT_TIME_LIMIT = 3600.0
FEAS_TOL = 1e-6
INT_TOL = 1e-6
MIN_WIDTH = 1e-9


@dataclass
class BnbNode:
    lo: np.ndarray
    hi: np.ndarray
    bound: float
    depth: int
    resplit: bool = False


@dataclass
class SolveResult:
    """Outcome of a global solve.

    status is one of optimal, feasible, infeasible, time_limit (plus
    unknown for the corner where a limit stopped the search before any
    incumbent or infeasibility proof existed).
    """

    status: str
    x: np.ndarray | None
    objective: float | None
    bound: float
    gap: float
    nodes: int
    wall_time: float


def relative_gap(objective: float | None, bound: float) -> float:
    if objective is None:
        return math.inf
    return abs(objective - bound) / max(1e-10, abs(objective))


def feasibility_check(point, flat: FlatModel, tol: float = FEAS_TOL):
    """Exact check of every original row plus binary integrality.

    Returns (feasible, violations) where violations lists
    (label, amount) for every row or integrality breach beyond tol.
    """
    violations: list[tuple[str, float]] = []
    for v in flat.variables:
        if v.kind == BINARY:
            err = abs(point[v.id] - round(point[v.id]))
            if err > tol:
                violations.append((f"integrality[{v.name}]", err))
    for c in flat.constraints:
        amount = c.violation(point)
        if amount > tol:
            violations.append((c.label, amount))
    return not violations, violations


def branch_select(node: BnbNode, lp, sol: LpSolution, flat: FlatModel,
                  int_tol: float = INT_TOL):
    """Pick the branching decision at an unpruned, infeasible LP point.

    Fractional binaries first (most fractional, median index among
    ties); otherwise the variable carrying the largest total envelope
    violation, split at the LP point clamped to the middle 40 % of its
    interval. Returns ("binary", id), ("spatial", id, point) or None.
    """
    x = sol.x
    scored = []
    for v in flat.variables:
        if v.kind != BINARY or node.hi[v.id] - node.lo[v.id] <= 0.0:
            continue
        frac = min(x[v.id], 1.0 - x[v.id])
        if frac > int_tol:
            scored.append((frac, v.id))
    if scored:
        best = max(s for s, _ in scored)
        tied = [vid for s, vid in scored if s >= best - 1e-9]
        return ("binary", tied[len(tied) // 2])

    n_model = len(flat.variables)
    weight = np.zeros(n_model)
    for term, amount in zip(lp.aux_terms, envelope_violations(lp, x)):
        for vid in term.participants():
            weight[vid] += amount
    order = np.argsort(-weight, kind="stable")
    for vid in order:
        vid = int(vid)
        width = node.hi[vid] - node.lo[vid]
        if weight[vid] <= 0.0:
            break
        if width > MIN_WIDTH:
            split = min(max(x[vid], node.lo[vid] + 0.3 * width),
                        node.lo[vid] + 0.7 * width)
            return ("spatial", vid, float(split))
    return None


def _midsplit_decision(node: BnbNode, flat: FlatModel, lp):
    """Fallback split for nodes whose LP failed: widest participant."""
    candidates = set()
    for term in lp.aux_terms:
        candidates.update(term.participants())
    candidates.update(v.id for v in flat.variables if v.kind == BINARY)
    best, best_w = None, MIN_WIDTH
    for vid in sorted(candidates):
        w = node.hi[vid] - node.lo[vid]
        if w > best_w:
            best, best_w = vid, w
    if best is None:
        return None
    if flat.variables[best].kind == BINARY:
        return ("binary", best)
    return ("spatial", best, node.lo[best] + 0.5 * best_w)


def _children(node: BnbNode, decision) -> list[BnbNode]:
    kids = []
    if decision[0] == "binary":
        vid = decision[1]
        for val in (0.0, 1.0):
            lo, hi = node.lo.copy(), node.hi.copy()
            lo[vid] = hi[vid] = val
            kids.append(BnbNode(lo, hi, node.bound, node.depth + 1))
    else:
        _, vid, split = decision
        lo1, hi1 = node.lo.copy(), node.hi.copy()
        hi1[vid] = split
        lo2, hi2 = node.lo.copy(), node.hi.copy()
        lo2[vid] = split
        kids.append(BnbNode(lo1, hi1, node.bound, node.depth + 1))
        kids.append(BnbNode(lo2, hi2, node.bound, node.depth + 1))
    return kids


def solve_global(flat: FlatModel, gap: float = DEFAULT_GAP,
                 time_limit: float = DEFAULT_TIME_LIMIT,
                 node_limit: int | None = None, workers: int = 1,
                 n_tangents: int = 3, log_every: int = 100) -> SolveResult:
    """Solve a flattened model to the requested relative gap.

    Maximization is handled by negating the objective on the way in and
    the incumbent/bound on the way out. Every reported incumbent passes
    feasibility_check against the original rows at 1e-6.
    """
    t0 = time.monotonic()
    maximize = flat.sense == "max"
    work = flat
    if maximize:
        work = FlatModel(sense="min", variables=flat.variables,
                         objective=_negated(flat.objective),
                         constraints=flat.constraints,
                         provenance=flat.provenance,
                         binary_of_guard=flat.binary_of_guard)

    n_model = len(work.variables)
    lo0 = np.array([v.lower for v in work.variables])
    hi0 = np.array([v.upper for v in work.variables])

    z = math.inf
    best_x: np.ndarray | None = None
    unexplored: list[float] = []
    heap: list[tuple[float, int, int, BnbNode]] = []
    seq = 0
    heapq.heappush(heap, (-math.inf, 0, seq,
                          BnbNode(lo0, hi0, -math.inf, 0)))
    nodes_done = 0
    next_log = log_every
    stop: str | None = None

    def process(node: BnbNode):
        lp = build_lp_relaxation(work, node.lo, node.hi, n_tangents)
        return lp, lp_solve(lp)

    def open_bound() -> float:
        vals = [z]
        if heap:
            vals.append(heap[0][0])
        if unexplored:
            vals.append(min(unexplored))
        return min(vals)

    pool = ThreadPoolExecutor(max_workers=workers) if workers > 1 else None
    try:
        while heap:
            if time.monotonic() - t0 > time_limit:
                stop = "time_limit"
                break
            if node_limit is not None and nodes_done >= node_limit:
                stop = "node_limit"
                break
            bound_now = open_bound()
            if z < math.inf and relative_gap(z, bound_now) <= gap:
                stop = "gap"
                break

            batch: list[BnbNode] = []
            want = workers if workers > 1 else 1
            while heap and len(batch) < want:
                _, _, _, node = heapq.heappop(heap)
                if node.bound >= z:
                    continue
                batch.append(node)
            if not batch:
                continue

            if pool is not None:
                results = list(pool.map(process, batch))
            else:
                results = [process(node) for node in batch]

            for node, (lp, sol) in zip(batch, results):
                nodes_done += 1
                if sol.status == "infeasible":
                    continue
                if sol.status != "optimal":
                    decision = _midsplit_decision(node, work, lp)
                    if node.resplit or decision is None:
                        unexplored.append(node.bound)
                        continue
                    for kid in _children(node, decision):
                        kid.resplit = True
                        seq += 1
                        heapq.heappush(heap, (kid.bound, -kid.depth, seq, kid))
                    continue

                node_bound = max(node.bound, sol.objective)
                if node_bound >= z:
                    continue
                point = sol.x[:n_model]
                feasible, _ = feasibility_check(point, work, FEAS_TOL)
                if feasible:
                    z_point = work.objective.evaluate(point)
                    if z_point < z:
                        z = z_point
                        best_x = point.copy()
                    if node_bound >= z:
                        continue
                decision = branch_select(node, lp, sol, work)
                if decision is None:
                    unexplored.append(node_bound)
                    continue
                for kid in _children(node, decision):
                    kid.bound = node_bound
                    seq += 1
                    heapq.heappush(heap, (kid.bound, -kid.depth, seq, kid))

            if nodes_done >= next_log:
                next_log += log_every
                logger.info(
                    "nodes=%d open=%d bound=%.10g incumbent=%s gap=%.4g elapsed=%.2f",
                    nodes_done, len(heap), open_bound(),
                    "none" if best_x is None else f"{z:.10g}",
                    relative_gap(z if best_x is not None else None, open_bound()),
                    time.monotonic() - t0)
    finally:
        if pool is not None:
            pool.shutdown(wait=False)

    have_inc = best_x is not None
    if stop is None:
        candidates = list(unexplored) + ([z] if have_inc else [])
        bound = min(candidates) if candidates else math.inf
        if have_inc:
            status = "optimal" if relative_gap(z, bound) <= gap else "feasible"
        else:
            status = "unknown" if unexplored else "infeasible"
    elif stop == "gap":
        bound = open_bound()
        status = "optimal"
    elif stop == "time_limit":
        bound = open_bound()
        status = "time_limit"
    else:  # node_limit
        bound = open_bound()
        status = "feasible" if have_inc else "unknown"

    objective = z if have_inc else None
    if maximize:
        objective = -objective if objective is not None else None
        bound = -bound
    return SolveResult(
        status=status,
        x=best_x,
        objective=objective,
        bound=bound,
        gap=relative_gap(objective, bound),
        nodes=nodes_done,
        wall_time=time.monotonic() - t0,
    )
