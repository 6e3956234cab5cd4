"""Branch and bound over the integer truck variables.

Best-first search on the LP bound with a depth-first dive first to find an
incumbent quickly.  Child LPs warm-start from the parent basis via the
dual simplex.  Branching variable: most fractional, ties broken by lowest
column index.  Node order is deterministic, so repeated solves of the same
instance produce identical trees.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass, field

import numpy as np

from hsc_plan.solver.simplex import BasisSnapshot, Simplex, SimplexOptions


@dataclass
class BnbOptions:
    gap_tol: float = 1e-4  # relative incumbent/bound gap at which to stop
    int_tol: float = 1e-6
    node_limit: int = 20_000
    dive_limit: int = 400  # bound fixings attempted while diving for an incumbent
    lp_options: SimplexOptions = field(default_factory=SimplexOptions)


@dataclass(order=True)
class _Node:
    bound: float
    seq: int
    tight: dict = field(compare=False)  # col -> (lb, ub) overrides
    snap: BasisSnapshot | None = field(compare=False, default=None)


@dataclass
class BnbResult:
    status: str  # optimal | infeasible | unbounded | node-limit | iteration-limit
    x: np.ndarray | None
    objective: float | None
    bound: float | None
    gap: float | None
    nodes: int
    iterations: int


def _fractional(x, int_idx, int_tol):
    vals = x[int_idx]
    frac = np.abs(vals - np.round(vals))
    mask = frac > int_tol
    return int_idx[mask], frac[mask]


def _branch_var(x, int_idx, int_tol):
    idx, frac = _fractional(x, int_idx, int_tol)
    if len(idx) == 0:
        return None
    # most fractional: distance to nearest integer closest to 0.5
    score = np.abs(frac - 0.5)
    best = score.min()
    ties = idx[score <= best + 1e-12]
    return int(ties.min())


def solve_bnb(c, A, senses, rhs, lb, ub, int_mask, options: BnbOptions | None = None) -> BnbResult:
    opt = options or BnbOptions()
    lb = np.asarray(lb, dtype=float).copy()
    ub = np.asarray(ub, dtype=float).copy()
    int_idx = np.nonzero(np.asarray(int_mask, dtype=bool))[0]

    sx = Simplex(c, A, senses, rhs, lb, ub, opt.lp_options)
    total_iters = 0

    def _solve(tight: dict, snap: BasisSnapshot | None):
        nonlocal total_iters
        node_lb = lb.copy()
        node_ub = ub.copy()
        for j, (lo, hi) in tight.items():
            node_lb[j] = max(node_lb[j], lo)
            node_ub[j] = min(node_ub[j], hi)
        if np.any(node_lb > node_ub):
            return "infeasible", None, None
        sx.set_structural_bounds(node_lb, node_ub)
        before = sx.iterations
        if snap is not None:
            status = sx.solve_from_snapshot(snap)
        else:
            status = sx.solve()
        total_iters += sx.iterations - before
        if status != "optimal":
            return status, None, None
        return status, sx.structural_values(), sx.objective()

    root_status, root_x, root_obj = _solve({}, None)
    if root_status != "optimal":
        return BnbResult(root_status, None, None, None, None, 1, total_iters)
    if len(int_idx) == 0 or _branch_var(root_x, int_idx, opt.int_tol) is None:
        return BnbResult("optimal", root_x, root_obj, root_obj, 0.0, 1, total_iters)

    incumbent_x = None
    incumbent_obj = np.inf
    nodes = 1
    seq = 0
    root_snap = sx.snapshot()

    def rel_gap(obj, bound):
        return (obj - bound) / max(1.0, abs(obj))

    # Depth-first dive: repeatedly bound the most fractional variable toward
    # its nearest integer.  Cheap because each step is one dual-simplex
    # repair, and it usually lands an integer-feasible incumbent.
    dive_tight: dict = {}
    dive_snap = root_snap
    dive_x, dive_obj = root_x, root_obj
    for _ in range(opt.dive_limit):
        j = _branch_var(dive_x, int_idx, opt.int_tol)
        if j is None:
            incumbent_x, incumbent_obj = dive_x.copy(), dive_obj
            break
        v = dive_x[j]
        nearest = float(np.round(v))
        lo, hi = dive_tight.get(j, (lb[j], ub[j]))
        dive_tight[j] = (max(lo, nearest), min(hi, nearest))
        status, dive_x, dive_obj = _solve(dive_tight, dive_snap)
        nodes += 1
        if status != "optimal":
            break
        dive_snap = sx.snapshot()

    heap: list[_Node] = []
    seq += 1
    heapq.heappush(heap, _Node(bound=root_obj, seq=seq, tight={}, snap=root_snap))
    best_bound = root_obj
    status = "optimal"
    while heap:
        if nodes >= opt.node_limit:
            status = "node-limit"
            break
        node = heapq.heappop(heap)
        best_bound = node.bound
        if incumbent_x is not None and rel_gap(incumbent_obj, best_bound) <= opt.gap_tol:
            best_bound = node.bound
            break
        lp_status, x, obj = _solve(node.tight, node.snap)
        nodes += 1
        if lp_status != "optimal":
            continue  # pruned by infeasibility (or solver gave up on the node)
        if obj >= incumbent_obj - 1e-12:
            continue  # dominated
        j = _branch_var(x, int_idx, opt.int_tol)
        if j is None:
            incumbent_x, incumbent_obj = x.copy(), obj
            continue
        snap = sx.snapshot()
        v = x[j]
        lo, hi = node.tight.get(j, (lb[j], ub[j]))
        down = dict(node.tight)
        down[j] = (lo, min(hi, float(np.floor(v))))
        up = dict(node.tight)
        up[j] = (max(lo, float(np.ceil(v))), hi)
        for tight in (down, up):
            seq += 1
            heapq.heappush(heap, _Node(bound=obj, seq=seq, tight=tight, snap=snap))

    if not heap and status == "optimal":
        best_bound = incumbent_obj if incumbent_x is not None else best_bound

    if incumbent_x is None:
        final = "infeasible" if status == "optimal" else status
        return BnbResult(final, None, None, best_bound, None, nodes, total_iters)
    gap = rel_gap(incumbent_obj, best_bound)
    return BnbResult(status, incumbent_x, incumbent_obj, best_bound, max(0.0, gap),
                     nodes, total_iters)
