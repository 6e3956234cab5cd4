"""Bounded-variable revised simplex, the built-in reference LP solver.

Correctness and determinism are the design goals; speed is secondary.
The implementation keeps a dense basis inverse with rank-one updates and
periodic refactorization, prices with Dantzig's rule, and falls back to
Bland's rule after a streak of degenerate pivots so cycling cannot occur.
A bounded-variable dual simplex provides warm starts after bound changes
(used by branch and bound).

Computational form: every row gets a logical column (slack with bounds
matching the row sense), infeasible starts are handled by a phase-1 with
explicit artificial columns.  Instances beyond a few tens of thousands of
nonzeros belong in an industrial solver via the MPS export path.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np
from scipy import sparse
from scipy.linalg.blas import dger

NB_LB, NB_UB, BASIC, NB_FREE = 0, 1, 2, 3

_STATUS_OPTIMAL = "optimal"
_STATUS_INFEASIBLE = "infeasible"
_STATUS_UNBOUNDED = "unbounded"
_STATUS_ITER_LIMIT = "iteration-limit"


@dataclass
class SimplexOptions:
    feas_tol: float = 1e-7
    opt_tol: float = 1e-7
    max_iterations: int = 500_000
    refactor_every: int = 500
    degen_streak: int = 80  # consecutive degenerate pivots before Bland mode
    max_repair_rounds: int = 5


@dataclass
class BasisSnapshot:
    """Enough state to warm-start another solve: basis columns and
    nonbasic bound sides."""

    basis: np.ndarray
    vstat: np.ndarray


class Simplex:
    """One LP in computational form.  Bounds may be tightened between
    solves (branch and bound); rows are fixed."""

    def __init__(self, c, A, senses, rhs, lb, ub, options: SimplexOptions | None = None):
        self.opt = options or SimplexOptions()
        keep = self._drop_empty_rows(A, senses, rhs)
        self._empty_row_conflict = keep is None
        if keep is None:
            keep = np.zeros(len(rhs), dtype=bool)
        A = A[keep]
        senses = senses[keep]
        rhs = rhs[keep]

        self.n = A.shape[1]  # structural columns
        self.m = A.shape[0]
        self.b = np.asarray(rhs, dtype=float)
        self.c_struct = np.asarray(c, dtype=float)

        log_lb = np.zeros(self.m)
        log_ub = np.zeros(self.m)
        for i, s in enumerate(senses):
            if s == "L":
                log_lb[i], log_ub[i] = 0.0, np.inf
            elif s == "G":
                log_lb[i], log_ub[i] = -np.inf, 0.0
            elif s == "E":
                log_lb[i], log_ub[i] = 0.0, 0.0
            else:
                raise ValueError(f"unknown row sense {s!r}")

        self.N = self.n + self.m  # structural + logical
        self.A = sparse.hstack(
            [sparse.csc_matrix(A), sparse.identity(self.m, format="csc")],
            format="csc",
        )
        self.At = self.A.T.tocsr()
        self.lb = np.concatenate([np.asarray(lb, dtype=float), log_lb, np.zeros(self.m)])
        self.ub = np.concatenate([np.asarray(ub, dtype=float), log_ub, np.zeros(self.m)])
        self.art_sign = np.zeros(self.m)  # 0 = artificial unused
        self.c2 = np.concatenate([self.c_struct, np.zeros(2 * self.m)])

        self.basis = np.zeros(self.m, dtype=np.int64)
        self.vstat = np.zeros(self.N + self.m, dtype=np.int8)
        self.binv = np.zeros((self.m, self.m))
        self.xB = np.zeros(self.m)
        self.iterations = 0

    # -- construction helpers ------------------------------------------------
    @staticmethod
    def _drop_empty_rows(A, senses, rhs):
        """Mask of rows to keep; None when an empty row is unsatisfiable."""
        counts = np.diff(sparse.csr_matrix(A).indptr)
        keep = counts > 0
        for i in np.nonzero(~keep)[0]:
            r, s = rhs[i], senses[i]
            bad = (s == "E" and abs(r) > 1e-9) or (s == "L" and r < -1e-9) \
                or (s == "G" and r > 1e-9)
            if bad:
                return None
        return keep

    def set_structural_bounds(self, lb, ub) -> None:
        self.lb[: self.n] = lb
        self.ub[: self.n] = ub

    # -- column access (artificials are virtual +/- unit columns) -----------
    def _col(self, j):
        if j < self.N:
            sl = slice(self.A.indptr[j], self.A.indptr[j + 1])
            return self.A.indices[sl], self.A.data[sl]
        i = j - self.N
        return np.array([i]), np.array([self.art_sign[i]])

    def _ftran(self, j) -> np.ndarray:
        rows, vals = self._col(j)
        return self.binv[:, rows] @ vals

    def _nb_value(self, j) -> float:
        s = self.vstat[j]
        if s == NB_LB:
            return self.lb[j]
        if s == NB_UB:
            return self.ub[j]
        return 0.0

    def _nonbasic_values(self) -> np.ndarray:
        x = np.where(self.vstat[: self.N] == NB_UB, self.ub[: self.N], self.lb[: self.N])
        x[self.vstat[: self.N] == NB_FREE] = 0.0
        x[self.vstat[: self.N] == BASIC] = 0.0
        x[~np.isfinite(x)] = 0.0
        return x

    def _recompute_xB(self) -> None:
        x = self._nonbasic_values()
        rhs_eff = self.b - self.A @ x  # nonbasic artificials are always 0
        self.xB = self.binv @ rhs_eff

    def _refactor(self) -> None:
        B = np.zeros((self.m, self.m), order="F")
        main = self.basis < self.N
        if main.any():
            B[:, main] = self.A[:, self.basis[main]].toarray()
        for k in np.nonzero(~main)[0]:
            i = self.basis[k] - self.N
            B[i, k] = self.art_sign[i]
        self.binv = np.asfortranarray(np.linalg.inv(B))
        self._recompute_xB()

    def _update_binv(self, w: np.ndarray, r: int) -> None:
        """Replace basis column r given w = binv @ a_enter, in place."""
        self.binv[r, :] /= w[r]
        scale = w.copy()
        scale[r] = 0.0
        # binv -= outer(scale, binv[r, :]) without the m*m temporary
        self.binv = dger(-1.0, scale, self.binv[r, :].copy(),
                         a=self.binv, overwrite_a=1)

    # -- pricing -------------------------------------------------------------
    def _duals_and_reduced(self, c):
        cB = c[self.basis]
        pi = self.binv.T @ cB
        d = np.empty(self.N + self.m)
        d[: self.N] = c[: self.N] - self.At @ pi
        d[self.N:] = c[self.N:] - self.art_sign * pi
        return pi, d

    # -- cold start ------------------------------------------------------------
    def _crash_basis(self) -> None:
        """Logical basis where feasible, artificials where not."""
        for j in range(self.N + self.m):
            if np.isfinite(self.lb[j]):
                self.vstat[j] = NB_LB
            elif np.isfinite(self.ub[j]):
                self.vstat[j] = NB_UB
            else:
                self.vstat[j] = NB_FREE
        self.art_sign[:] = 0.0
        self.lb[self.N:] = 0.0
        self.ub[self.N:] = 0.0

        x_struct = self._nonbasic_values()[: self.n]
        resid = self.b - self.A[:, : self.n] @ x_struct
        diag = np.zeros(self.m)
        for i in range(self.m):
            log_j = self.n + i
            lo, hi = self.lb[log_j], self.ub[log_j]
            if lo - 1e-12 <= resid[i] <= hi + 1e-12:
                self.basis[i] = log_j
                self.vstat[log_j] = BASIC
                self.xB[i] = resid[i]
                diag[i] = 1.0
            else:
                nb = min(max(resid[i], lo), hi)
                self.vstat[log_j] = NB_LB if nb == lo else NB_UB
                leftover = resid[i] - nb
                art = self.N + i
                self.art_sign[i] = 1.0 if leftover >= 0 else -1.0
                self.ub[art] = np.inf
                self.basis[i] = art
                self.vstat[art] = BASIC
                self.xB[i] = abs(leftover)
                diag[i] = self.art_sign[i]
        self.binv = np.asfortranarray(np.diag(diag))

    # -- primal iteration ------------------------------------------------------
    def _primal(self, c, max_iterations) -> str:
        opt = self.opt
        dtol = opt.opt_tol * (1.0 + np.abs(c))
        movable = self.lb < self.ub
        bland = False
        degen = 0
        while True:
            if self.iterations >= max_iterations:
                return _STATUS_ITER_LIMIT
            if self.iterations and self.iterations % opt.refactor_every == 0:
                self._refactor()
            _, d = self._duals_and_reduced(c)
            score = np.zeros_like(d)
            at_lb = (self.vstat == NB_LB) & movable
            at_ub = (self.vstat == NB_UB) & movable
            at_fr = self.vstat == NB_FREE
            score[at_lb] = np.maximum(0.0, -d[at_lb] - dtol[at_lb])
            score[at_ub] = np.maximum(0.0, d[at_ub] - dtol[at_ub])
            score[at_fr] = np.maximum(0.0, np.abs(d[at_fr]) - dtol[at_fr])
            if not score.any():
                return _STATUS_OPTIMAL
            if bland:
                j = int(np.nonzero(score > 0)[0][0])
            else:
                j = int(np.argmax(score))
            direction = 1.0
            if self.vstat[j] == NB_UB or (self.vstat[j] == NB_FREE and d[j] > 0):
                direction = -1.0

            w = self._ftran(j)
            denom = direction * w
            lbB = self.lb[self.basis]
            ubB = self.ub[self.basis]
            theta = np.full(self.m, np.inf)
            pos = denom > 1e-11
            neg = denom < -1e-11
            with np.errstate(invalid="ignore"):
                theta[pos] = (self.xB[pos] - lbB[pos]) / denom[pos]
                theta[neg] = (self.xB[neg] - ubB[neg]) / denom[neg]
            theta = np.where(np.isnan(theta), np.inf, theta)
            theta = np.maximum(theta, 0.0)
            own = self.ub[j] - self.lb[j] if self.vstat[j] != NB_FREE else np.inf
            t_basic = theta.min() if self.m else np.inf
            step = min(own, t_basic)
            if not np.isfinite(step):
                return _STATUS_UNBOUNDED

            self.iterations += 1
            if own <= t_basic:  # bound flip, no basis change
                self.xB -= own * denom
                self.vstat[j] = NB_UB if self.vstat[j] == NB_LB else NB_LB
                degen = 0
                bland = False
                continue

            candidates = np.nonzero(theta <= t_basic + 1e-12)[0]
            if bland:
                r = int(candidates[np.argmin(self.basis[candidates])])
            else:
                r = int(candidates[np.argmax(np.abs(denom[candidates]))])
            if step <= 1e-10:
                degen += 1
                if degen > opt.degen_streak:
                    bland = True
            else:
                degen = 0
                bland = False

            enter_val = self._nb_value(j) + direction * step
            self.xB -= step * denom
            leaving = int(self.basis[r])
            self.vstat[leaving] = NB_LB if denom[r] > 0 else NB_UB
            if not np.isfinite(self.lb[leaving]) and self.vstat[leaving] == NB_LB:
                self.vstat[leaving] = NB_FREE
            if not np.isfinite(self.ub[leaving]) and self.vstat[leaving] == NB_UB:
                self.vstat[leaving] = NB_FREE

            self._update_binv(w, r)
            self.basis[r] = j
            self.vstat[j] = BASIC
            self.xB[r] = enter_val

    # -- dual iteration ---------------------------------------------------------
    def _dual(self, c, max_iterations) -> str:
        """Restore primal feasibility from a dual-feasible basis.

        Returns 'feasible' when primal feasibility is restored,
        'infeasible' when the subproblem has no feasible point, or
        'stalled' when the caller should fall back to a cold primal solve.
        """
        opt = self.opt
        zero_steps = 0
        for k in range(max_iterations):
            if k and k % opt.refactor_every == 0:
                self._refactor()
            lbB = self.lb[self.basis]
            ubB = self.ub[self.basis]
            below = np.where(np.isfinite(lbB), lbB - self.xB, -np.inf)
            above = np.where(np.isfinite(ubB), self.xB - ubB, -np.inf)
            viol = np.maximum(below, above)
            worst = viol.max() if self.m else 0.0
            if worst <= opt.feas_tol * 10:
                return "feasible"
            r = int(np.argmax(viol))
            leaving_above = above[r] >= below[r]

            rho = self.binv[r, :]
            alpha = np.empty(self.N + self.m)
            alpha[: self.N] = self.At @ rho
            alpha[self.N:] = self.art_sign * rho
            a_eff = alpha if leaving_above else -alpha

            movable = self.lb < self.ub
            elig = movable & (
                ((self.vstat == NB_LB) & (a_eff > 1e-11))
                | ((self.vstat == NB_UB) & (a_eff < -1e-11))
                | ((self.vstat == NB_FREE) & (np.abs(a_eff) > 1e-11))
            )
            if not elig.any():
                return _STATUS_INFEASIBLE
            _, d = self._duals_and_reduced(c)
            ratios = np.full_like(d, np.inf)
            ratios[elig] = np.maximum(d[elig] / a_eff[elig], 0.0)
            j = int(np.argmin(ratios))

            bound_r = ubB[r] if leaving_above else lbB[r]
            delta = (self.xB[r] - bound_r) / alpha[j]
            w = self._ftran(j)
            self.iterations += 1
            if abs(delta) <= 1e-12:
                zero_steps += 1
                if zero_steps > 200:
                    return "stalled"
            else:
                zero_steps = 0

            enter_val = self._nb_value(j) + delta
            self.xB -= delta * w
            leaving = int(self.basis[r])
            self.vstat[leaving] = NB_UB if leaving_above else NB_LB
            self._update_binv(w, r)
            self.basis[r] = j
            self.vstat[j] = BASIC
            self.xB[r] = enter_val
        return "stalled"

    # -- drivers ------------------------------------------------------------
    def solve(self, max_iterations: int | None = None) -> str:
        """Cold start: phase 1 with artificials, then phase 2."""
        if self._empty_row_conflict:
            return _STATUS_INFEASIBLE
        cap = max_iterations or self.opt.max_iterations
        self._crash_basis()
        if np.any(self.art_sign != 0.0):
            c1 = np.zeros(self.N + self.m)
            c1[self.N:][self.art_sign != 0.0] = 1.0
            status = self._primal(c1, cap)
            if status != _STATUS_OPTIMAL:
                # phase 1 is bounded below by 0, so only the limit can stop it
                return _STATUS_ITER_LIMIT
            self._refactor()
            infeas = float(c1 @ self._full_values())
            if infeas > 1e-6 * max(1.0, float(np.abs(self.b).max(initial=0.0))):
                return _STATUS_INFEASIBLE
            self.ub[self.N:] = 0.0  # freeze artificials out of phase 2
        return self._phase2(cap)

    def _phase2(self, cap) -> str:
        for _ in range(self.opt.max_repair_rounds):
            status = self._primal(self.c2, cap)
            if status != _STATUS_OPTIMAL:
                return status
            self._refactor()
            if self._verify():
                return _STATUS_OPTIMAL
        return _STATUS_ITER_LIMIT

    def solve_from_snapshot(self, snap: BasisSnapshot, max_iterations: int | None = None) -> str:
        """Warm start after bound changes, via dual simplex.

        Falls back to a cold solve when the snapshot basis is singular or
        the dual iteration stalls.
        """
        if self._empty_row_conflict:
            return _STATUS_INFEASIBLE
        cap = max_iterations or self.opt.max_iterations
        self.basis = snap.basis.copy()
        self.vstat = snap.vstat.copy()
        # nonbasic variables whose bound side vanished move to the other side
        for j in np.nonzero(self.vstat == NB_LB)[0]:
            if not np.isfinite(self.lb[j]):
                self.vstat[j] = NB_UB if np.isfinite(self.ub[j]) else NB_FREE
        for j in np.nonzero(self.vstat == NB_UB)[0]:
            if not np.isfinite(self.ub[j]):
                self.vstat[j] = NB_LB if np.isfinite(self.lb[j]) else NB_FREE
        try:
            self._refactor()
        except np.linalg.LinAlgError:
            return self.solve(cap)
        status = self._dual(self.c2, max(200, 4 * self.m))
        if status == _STATUS_INFEASIBLE:
            return _STATUS_INFEASIBLE
        if status == "stalled":
            return self.solve(cap)
        return self._phase2(cap)

    def snapshot(self) -> BasisSnapshot:
        return BasisSnapshot(basis=self.basis.copy(), vstat=self.vstat.copy())

    # -- results ---------------------------------------------------------------
    def _full_values(self) -> np.ndarray:
        x = np.empty(self.N + self.m)
        x[: self.N] = self._nonbasic_values()
        x[self.N:] = 0.0
        x[self.basis] = self.xB
        return x

    def _verify(self) -> bool:
        x = self._full_values()
        scale = np.maximum(1.0, np.abs(x))
        lo_ok = np.all(x >= self.lb - self.opt.feas_tol * scale * 10)
        hi_ok = np.all(x <= self.ub + self.opt.feas_tol * scale * 10)
        if not (lo_ok and hi_ok):
            return False
        _, d = self._duals_and_reduced(self.c2)
        dtol = 10 * self.opt.opt_tol * (1.0 + np.abs(self.c2))
        movable = self.lb < self.ub
        bad = (
            ((self.vstat == NB_LB) & movable & (d < -dtol))
            | ((self.vstat == NB_UB) & movable & (d > dtol))
            | ((self.vstat == NB_FREE) & (np.abs(d) > dtol))
        )
        return not bad.any()

    def structural_values(self) -> np.ndarray:
        return self._full_values()[: self.n]

    def objective(self) -> float:
        return float(self.c_struct @ self.structural_values())


def solve_arrays(c, A, senses, rhs, lb, ub, options: SimplexOptions | None = None):
    """Convenience cold solve; returns (status, x, objective, iterations)."""
    t0 = time.perf_counter()
    if A.shape[0] == 0:
        x, status = _solve_unconstrained(c, lb, ub)
        obj = float(c @ x) if status == _STATUS_OPTIMAL else None
        return status, x, obj, 0, time.perf_counter() - t0
    sx = Simplex(c, A, senses, rhs, lb, ub, options)
    status = sx.solve()
    x = sx.structural_values()
    obj = sx.objective() if status == _STATUS_OPTIMAL else None
    return status, x, obj, sx.iterations, time.perf_counter() - t0


def _solve_unconstrained(c, lb, ub):
    x = np.zeros(len(c))
    for j, cost in enumerate(c):
        if lb[j] > ub[j]:
            return x, _STATUS_INFEASIBLE
        if cost > 0:
            if not np.isfinite(lb[j]):
                return x, _STATUS_UNBOUNDED
            x[j] = lb[j]
        elif cost < 0:
            if not np.isfinite(ub[j]):
                return x, _STATUS_UNBOUNDED
            x[j] = ub[j]
        else:
            x[j] = lb[j] if np.isfinite(lb[j]) else min(ub[j], 0.0) if np.isfinite(ub[j]) else 0.0
    return x, _STATUS_OPTIMAL
