"""Self-contained LP / binary MILP kernel.

The LP solver is a bounded-variable primal simplex on a compact tableau. Every
constraint row gets a logical variable ``w_i = a_i . x`` whose bounds encode
the relation, so the tableau only ever has one column per structural
variable. Phase 1 minimises the sum of bound infeasibilities of the basic
variables; phase 2 minimises the objective. Pricing is Dantzig's rule with a
fallback to Bland's rule after a run of degenerate pivots, which keeps the
finite-termination guarantee.

Binary programs are solved by best-bound branch and bound on the most
fractional binary (ties to the lowest index).
"""

from __future__ import annotations

import heapq
import itertools
import math
from dataclasses import dataclass, field

import numpy as np

FEAS_TOL = 1e-7
INT_TOL = 1e-6
PIVOT_TOL = 1e-9

_OPT_TOL = 1e-9
_BOUND_TOL = 1e-9
_DEGENERATE_RUN = 50
_REFACTOR_EVERY = 100
_MAX_BINARIES_BRUTE = 20

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"

_RELATIONS = {"<=": "<=", "=<": "<=", "≤": "<=", ">=": ">=", "=>": ">=", "≥": ">=", "=": "=", "==": "="}


class SolverError(RuntimeError):
    pass


@dataclass
class Variable:
    name: str
    lower: float = 0.0
    upper: float = math.inf
    binary: bool = False


@dataclass
class Constraint:
    indices: np.ndarray
    coefs: np.ndarray
    relation: str
    rhs: float
    name: str | None = None


class ModelSpec:
    """A minimisation problem ``min c.x + offset`` over bounded variables."""

    def __init__(self, name: str = "model"):
        self.name = name
        self.variables: list[Variable] = []
        self.constraints: list[Constraint] = []
        self.objective: dict[int, float] = {}
        self.objective_offset = 0.0
        self.metadata: dict = {}
        self._names: dict[str, int] = {}

    @property
    def num_variables(self) -> int:
        return len(self.variables)

    @property
    def num_constraints(self) -> int:
        return len(self.constraints)

    @property
    def binary_indices(self) -> np.ndarray:
        return np.array([i for i, v in enumerate(self.variables) if v.binary], dtype=int)

    def add_variable(self, name: str, lower: float = 0.0, upper: float = math.inf, binary: bool = False) -> int:
        if name in self._names:
            raise ValueError(f"duplicate variable name {name!r}")
        if binary:
            lower, upper = max(lower, 0.0), min(upper, 1.0)
        if lower > upper:
            raise ValueError(f"variable {name!r}: lower bound exceeds upper bound")
        self._names[name] = len(self.variables)
        self.variables.append(Variable(name, float(lower), float(upper), binary))
        return len(self.variables) - 1

    def index(self, name: str) -> int:
        return self._names[name]

    def add_constraint(self, coefs, relation: str, rhs: float, name: str | None = None) -> int:
        """Add ``sum coefs[i]*x_i  relation  rhs``; ``coefs`` maps index -> value."""
        if relation not in _RELATIONS:
            raise ValueError(f"unknown relation {relation!r}")
        if isinstance(coefs, dict):
            idx = np.fromiter(coefs.keys(), dtype=int, count=len(coefs))
            val = np.fromiter(coefs.values(), dtype=float, count=len(coefs))
        else:
            idx, val = coefs
            idx = np.asarray(idx, dtype=int)
            val = np.asarray(val, dtype=float)
        if idx.size and (idx.min() < 0 or idx.max() >= self.num_variables):
            raise ValueError("constraint references an unknown variable")
        if not np.isfinite(rhs) or not np.all(np.isfinite(val)):
            raise ValueError("constraint data must be finite")
        self.constraints.append(Constraint(idx, val, _RELATIONS[relation], float(rhs), name))
        return len(self.constraints) - 1

    def add_dense_rows(self, columns, block, relation: str, rhs, names=None) -> None:
        """Add one constraint per row of ``block`` over the given variable columns."""
        columns = np.asarray(columns, dtype=int)
        block = np.atleast_2d(np.asarray(block, dtype=float))
        rhs = np.broadcast_to(np.asarray(rhs, dtype=float), (block.shape[0],))
        for r in range(block.shape[0]):
            nz = block[r] != 0
            self.add_constraint((columns[nz], block[r, nz]), relation, rhs[r],
                                None if names is None else names[r])

    def set_objective(self, coefs: dict[int, float], offset: float = 0.0) -> None:
        self.objective = {int(k): float(v) for k, v in coefs.items() if v != 0}
        self.objective_offset = float(offset)

    # -- dense views -------------------------------------------------------

    def cost_vector(self) -> np.ndarray:
        c = np.zeros(self.num_variables)
        for k, v in self.objective.items():
            c[k] += v
        return c

    def bounds(self) -> tuple[np.ndarray, np.ndarray]:
        lo = np.array([v.lower for v in self.variables], dtype=float)
        hi = np.array([v.upper for v in self.variables], dtype=float)
        return lo, hi

    def matrix(self) -> np.ndarray:
        a = np.zeros((self.num_constraints, self.num_variables))
        for r, con in enumerate(self.constraints):
            np.add.at(a[r], con.indices, con.coefs)
        return a

    def row_bounds(self) -> tuple[np.ndarray, np.ndarray]:
        lo = np.full(self.num_constraints, -math.inf)
        hi = np.full(self.num_constraints, math.inf)
        for r, con in enumerate(self.constraints):
            if con.relation in ("<=", "="):
                hi[r] = con.rhs
            if con.relation in (">=", "="):
                lo[r] = con.rhs
        return lo, hi

    def validate(self) -> None:
        for v in self.variables:
            if v.lower > v.upper:
                raise ValueError(f"variable {v.name!r}: lower bound exceeds upper bound")
            if v.binary and (v.lower < 0 or v.upper > 1):
                raise ValueError(f"binary variable {v.name!r} has bounds outside [0, 1]")
        for k in self.objective:
            if not 0 <= k < self.num_variables:
                raise ValueError("objective references an unknown variable")

    def is_feasible(self, x, tol: float = FEAS_TOL) -> bool:
        x = np.asarray(x, dtype=float)
        lo, hi = self.bounds()
        if np.any(x < lo - tol) or np.any(x > hi + tol):
            return False
        act = self.matrix() @ x
        rlo, rhi = self.row_bounds()
        return bool(np.all(act >= rlo - tol) and np.all(act <= rhi + tol))

    def objective_value(self, x) -> float:
        return float(self.cost_vector() @ np.asarray(x, dtype=float) + self.objective_offset)

    def to_lp_format(self) -> str:
        """Render the model in CPLEX LP text format."""
        names = [_lp_name(v.name, i) for i, v in enumerate(self.variables)]

        def expr(pairs):
            terms = []
            for k, v in pairs:
                sign = "-" if v < 0 else "+"
                terms.append(f"{sign} {abs(v):.17g} {names[k]}")
            if not terms:
                return "0"
            text = " ".join(terms)
            return text[2:] if text.startswith("+ ") else text

        lines = [f"\\ {self.name}", "Minimize", f" obj: {expr(sorted(self.objective.items()))}"]
        if self.objective_offset:
            lines[-1] += f" {'-' if self.objective_offset < 0 else '+'} {abs(self.objective_offset):.17g}"
        lines.append("Subject To")
        for r, con in enumerate(self.constraints):
            rel = {"<=": "<=", ">=": ">=", "=": "="}[con.relation]
            label = _lp_name(con.name, r, prefix="c") if con.name else f"c{r}"
            lines.append(f" {label}: {expr(zip(con.indices.tolist(), con.coefs.tolist()))} {rel} {con.rhs:.17g}")
        lines.append("Bounds")
        for k, v in enumerate(self.variables):
            if v.binary:
                continue
            if math.isinf(v.lower) and math.isinf(v.upper):
                lines.append(f" {names[k]} free")
            elif math.isinf(v.upper):
                lines.append(f" {names[k]} >= {v.lower:.17g}")
            elif math.isinf(v.lower):
                lines.append(f" -inf <= {names[k]} <= {v.upper:.17g}")
            else:
                lines.append(f" {v.lower:.17g} <= {names[k]} <= {v.upper:.17g}")
        binaries = [names[k] for k, v in enumerate(self.variables) if v.binary]
        if binaries:
            lines.append("Binary")
            lines.extend(f" {n}" for n in binaries)
        lines.append("End")
        return "\n".join(lines) + "\n"


def _lp_name(name, index, prefix="v"):
    if not name:
        return f"{prefix}{index}"
    clean = "".join(ch if ch.isalnum() or ch in "_.[]" else "_" for ch in name)
    return clean if clean[0].isalpha() else f"{prefix}_{clean}"


@dataclass
class Solution:
    status: str
    objective: float = math.nan
    x: np.ndarray | None = None
    nodes: int = 0
    pivots: int = 0
    duals: np.ndarray | None = field(default=None, repr=False)
    reduced_costs: np.ndarray | None = field(default=None, repr=False)

    @property
    def optimal(self) -> bool:
        return self.status == OPTIMAL


# ---------------------------------------------------------------------------
# simplex core


@dataclass
class _LPResult:
    status: str
    x: np.ndarray | None
    objective: float
    pivots: int
    duals: np.ndarray | None = None
    reduced_costs: np.ndarray | None = None
    basis: tuple | None = None  # (basis, nonbasic, x_nonbasic) for warm starts


class _Tableau:
    """Compact tableau: ``x_B = -M @ x_N`` with bounds on every variable."""

    def __init__(self, a, c, lo, hi, row_lo, row_hi):
        m, n = a.shape
        self.a, self.m, self.n = a, m, n
        self.cost = np.concatenate([c, np.zeros(m)])
        self.lower = np.concatenate([lo, row_lo])
        self.upper = np.concatenate([hi, row_hi])
        self.basis = np.arange(n, n + m)
        self.nonbasic = np.arange(n)
        self.M = -a.copy()
        self.xN = np.where(np.isfinite(lo), lo, np.where(np.isfinite(hi), hi, 0.0))
        self.xB = -self.M @ self.xN
        self.pivots = 0

    def warm(self, basis, nonbasic, x_nonbasic) -> bool:
        """Adopt a basis from a related LP; False if it is singular here."""
        self.basis = basis.copy()
        self.nonbasic = nonbasic.copy()
        lower, upper = self.lower[self.nonbasic], self.upper[self.nonbasic]
        self.xN = np.clip(x_nonbasic, lower, upper)
        return self.refactor()

    def refactor(self) -> bool:
        n, m = self.n, self.m
        in_basis = self.basis < n
        sb = self.basis[in_basis]
        nb_log = self.nonbasic >= n
        rows_r = self.nonbasic[nb_log] - n
        sn_mask = ~nb_log
        sn = self.nonbasic[sn_mask]
        if sb.size:
            a_rb = self.a[np.ix_(rows_r, sb)]
            try:
                g = np.linalg.inv(a_rb)
            except np.linalg.LinAlgError:
                return False
            if not np.all(np.isfinite(g)):
                return False
        else:
            g = np.zeros((0, 0))
        a_rn = self.a[np.ix_(rows_r, sn)]
        # derivatives of basic structurals wrt (w_R, x_SN)
        d_sb_w = g
        d_sb_x = -g @ a_rn
        other_rows = self.basis[~in_basis] - n
        a_ob = self.a[np.ix_(other_rows, sb)]
        d_w_w = a_ob @ d_sb_w
        d_w_x = self.a[np.ix_(other_rows, sn)] + a_ob @ d_sb_x
        deriv = np.zeros((m, n))
        col_w = np.flatnonzero(nb_log)
        col_x = np.flatnonzero(sn_mask)
        rb = np.flatnonzero(in_basis)
        ro = np.flatnonzero(~in_basis)
        # the ordering of rows_r / sb follows nonbasic / basis order
        if rb.size:
            deriv[np.ix_(rb, col_w)] = d_sb_w
            deriv[np.ix_(rb, col_x)] = d_sb_x
        if ro.size:
            deriv[np.ix_(ro, col_w)] = d_w_w
            deriv[np.ix_(ro, col_x)] = d_w_x
        self.M = -deriv
        self.xB = -self.M @ self.xN
        return True

    def run(self, max_pivots: int) -> str:
        lower, upper = self.lower, self.upper
        degenerate = 0
        bland = False
        d = None  # phase-2 reduced costs, updated in place between refactors
        while True:
            if self.pivots and self.pivots % _REFACTOR_EVERY == 0:
                self.refactor()
                d = None
            lb = lower[self.basis]
            ub = upper[self.basis]
            below = self.xB < lb - _BOUND_TOL
            above = self.xB > ub + _BOUND_TOL
            bad = np.flatnonzero(below | above)
            phase_one = bad.size > 0
            if phase_one:
                c_bad = above[bad].astype(float) - below[bad].astype(float)
                price = -(c_bad @ self.M[bad])
                d = None
            else:
                if d is None:
                    d = self.cost[self.nonbasic] - (self.cost[self.basis] @ self.M if self.m else 0.0)
                price = d

            ln = lower[self.nonbasic]
            un = upper[self.nonbasic]
            eligible = (((price < -_OPT_TOL) & (self.xN < un - _BOUND_TOL))
                        | ((price > _OPT_TOL) & (self.xN > ln + _BOUND_TOL)))
            cand = np.flatnonzero(eligible)
            if cand.size == 0:
                return INFEASIBLE if phase_one else OPTIMAL
            if bland:
                q = cand[np.argmin(self.nonbasic[cand])]
            else:
                score = np.abs(price[cand])
                ties = cand[score >= score.max() * (1 - 1e-12)]
                q = ties[np.argmin(self.nonbasic[ties])]
            direction = 1.0 if price[q] < 0 else -1.0

            col = self.M[:, q]
            if phase_one:
                theta, leave, leave_value = self._ratio_long(col, direction, lb, ub, below, above, abs(price[q]))
            else:
                theta, leave, leave_value = self._ratio(col, direction, lb, ub, below, above, bland)
            flip = upper[self.nonbasic[q]] - lower[self.nonbasic[q]]
            if flip <= theta:
                theta = flip
                leave = -1
            if math.isinf(theta):
                if phase_one:
                    raise SolverError("phase 1 ray without breakpoint")
                return UNBOUNDED

            if theta:
                self.xB -= (direction * theta) * col
            self.xN[q] += direction * theta
            if leave < 0:
                var = self.nonbasic[q]
                self.xN[q] = upper[var] if direction > 0 else lower[var]
            else:
                if d is not None:
                    row = self.M[leave] / self.M[leave, q]
                    dq = d[q]
                    d -= dq * row
                    d[q] = -dq / self.M[leave, q]
                self._pivot(leave, q, leave_value)
            self.pivots += 1
            if self.pivots > max_pivots:
                raise SolverError("simplex iteration limit reached")

            if theta <= 1e-12:
                degenerate += 1
                if degenerate >= _DEGENERATE_RUN:
                    bland = True
            else:
                degenerate = 0
                bland = False

    def _ratio(self, col, direction, lb, ub, below, above, bland):
        """Bounded ratio test; basic i moves at rate ``-direction * col[i]``."""
        idx = np.flatnonzero(np.abs(col) > PIVOT_TOL)
        if idx.size == 0:
            return math.inf, -1, 0.0
        rate = -direction * col[idx]
        xb = self.xB[idx]
        lo, hi = lb[idx], ub[idx]
        bl, ab = below[idx], above[idx]
        up = rate > 0
        # moving up: feasible vars stop at their upper bound, vars below stop at lower
        target = np.where(up, np.where(bl, lo, np.where(ab, np.inf, hi)),
                          np.where(ab, hi, np.where(bl, -np.inf, lo)))
        with np.errstate(invalid="ignore"):
            ratios = (target - xb) / rate
        ratios[~np.isfinite(ratios)] = np.inf
        np.maximum(ratios, 0.0, out=ratios)
        k = int(np.argmin(ratios))
        theta = float(ratios[k])
        if math.isinf(theta):
            return theta, -1, 0.0
        ties = np.flatnonzero(ratios <= theta + 1e-12 * max(1.0, theta))
        if ties.size > 1:
            if bland:
                k = ties[np.argmin(self.basis[idx[ties]])]
            else:
                mag = np.abs(rate[ties])
                keep = ties[mag >= mag.max() * (1 - 1e-12)]
                k = keep[np.argmin(self.basis[idx[keep]])]
        return theta, int(idx[k]), float(target[k])

    def _ratio_long(self, col, direction, lb, ub, below, above, slope):
        """Phase-1 ratio test that steps past rows turning feasible.

        The sum of infeasibilities falls at rate ``slope``; each infeasible row
        reaching its violated bound adds ``|rate|`` to that slope. We stop where
        the slope turns nonnegative, or earlier where a row would leave its
        box on the far side.
        """
        idx = np.flatnonzero(np.abs(col) > PIVOT_TOL)
        if idx.size == 0:
            return math.inf, -1, 0.0
        rate = -direction * col[idx]
        xb = self.xB[idx]
        lo, hi = lb[idx], ub[idx]
        bl, ab = below[idx], above[idx]
        up = rate > 0
        # hard stop: the bound that would be crossed into infeasibility
        hard = np.where(up, hi, lo)
        with np.errstate(invalid="ignore"):
            hard_ratio = (hard - xb) / rate
        hard_ratio[~np.isfinite(hard_ratio)] = np.inf
        # infeasible rows moving away from their box never stop us
        hard_ratio[(up & ab) | (~up & bl)] = np.inf
        np.maximum(hard_ratio, 0.0, out=hard_ratio)
        k_hard = int(np.argmin(hard_ratio))
        theta_hard = float(hard_ratio[k_hard])

        fixing = np.flatnonzero((up & bl) | (~up & ab))
        if fixing.size:
            near = np.where(up[fixing], lo[fixing], hi[fixing])
            soft = np.maximum((near - xb[fixing]) / rate[fixing], 0.0)
            order = np.argsort(soft, kind="stable")
            remaining = slope
            last = None
            for o in order:
                if soft[o] > theta_hard:
                    break
                last = o
                remaining -= abs(rate[fixing[o]])
                if remaining <= _OPT_TOL:
                    break
            if last is not None and (remaining <= _OPT_TOL or math.isinf(theta_hard)):
                return float(soft[last]), int(idx[fixing[last]]), float(near[last])
        if math.isinf(theta_hard):
            return theta_hard, -1, 0.0
        return theta_hard, int(idx[k_hard]), float(hard[k_hard])

    def _pivot(self, r: int, q: int, leave_value: float) -> None:
        M = self.M
        p = M[r, q]
        entering_value = self.xN[q]
        col = M[:, q].copy()
        row = M[r, :] / p
        rows = np.flatnonzero(col)
        if rows.size * 2 < col.size:
            M[rows] -= col[rows, None] * row[None, :]
        else:
            M -= np.outer(col, row)
        M[r, :] = row
        M[:, q] = -col / p
        M[r, q] = 1.0 / p
        leaving = self.basis[r]
        self.basis[r] = self.nonbasic[q]
        self.nonbasic[q] = leaving
        self.xB[r] = entering_value
        self.xN[q] = leave_value

    def primal(self) -> np.ndarray:
        x = np.zeros(self.n + self.m)
        x[self.basis] = self.xB
        x[self.nonbasic] = self.xN
        return x[: self.n]

    def duals(self) -> np.ndarray:
        """Row multipliers ``y = d(objective)/d(rhs)``, zero for basic logicals."""
        c_b = self.cost[self.basis]
        d = self.cost[self.nonbasic] - (c_b @ self.M if self.m else 0.0)
        y = np.zeros(self.m)
        logical = self.nonbasic >= self.n
        y[self.nonbasic[logical] - self.n] = d[logical]
        return y


def _solve_dense_lp(c, a, lo, hi, row_lo, row_hi, max_pivots=None, start=None) -> _LPResult:
    m, n = a.shape
    if np.any(lo > hi) or np.any(row_lo > row_hi):
        return _LPResult(INFEASIBLE, None, math.nan, 0)
    tab = _Tableau(a, c, lo, hi, row_lo, row_hi)
    if start is not None and not tab.warm(*start):
        tab = _Tableau(a, c, lo, hi, row_lo, row_hi)
    limit = max_pivots if max_pivots is not None else 50 * (m + n) + 1000
    status = tab.run(limit)
    if status != OPTIMAL:
        return _LPResult(status, None, math.nan, tab.pivots)
    tab.refactor()
    x = tab.primal()
    # snap structurals that sit on a bound up to round-off
    x = np.where(np.abs(x - lo) <= 1e-11, lo, x)
    x = np.where(np.abs(x - hi) <= 1e-11, hi, x)
    y = tab.duals()
    d = c - a.T @ y
    return _LPResult(OPTIMAL, x, float(c @ x), tab.pivots, y, d,
                     (tab.basis.copy(), tab.nonbasic.copy(), tab.xN.copy()))


def _check_spec(spec: ModelSpec) -> None:
    if not isinstance(spec, ModelSpec):
        raise TypeError("expected a ModelSpec")
    spec.validate()


def solve_lp(spec: ModelSpec, lower=None, upper=None) -> Solution:
    """Solve the continuous relaxation (binaries relaxed to their bounds)."""
    _check_spec(spec)
    lo, hi = spec.bounds()
    if lower is not None:
        lo = np.asarray(lower, dtype=float)
    if upper is not None:
        hi = np.asarray(upper, dtype=float)
    return _solve_with_bounds(spec, spec.cost_vector(), spec.matrix(), *spec.row_bounds(), lo, hi)


def _solve_with_bounds(spec, c, a, row_lo, row_hi, lo, hi) -> Solution:
    res = _solve_dense_lp(c, a, lo, hi, row_lo, row_hi)
    if res.status != OPTIMAL:
        return Solution(res.status, pivots=res.pivots, nodes=1)
    return Solution(OPTIMAL, res.objective + spec.objective_offset, res.x, nodes=1,
                    pivots=res.pivots, duals=res.duals, reduced_costs=res.reduced_costs)


def _gap_tol(value: float) -> float:
    return 1e-9 * max(1.0, abs(value))


def solve_milp(spec: ModelSpec, max_nodes: int = 200_000) -> Solution:
    """Best-bound branch and bound over the binary variables."""
    _check_spec(spec)
    c = spec.cost_vector()
    a = spec.matrix()
    row_lo, row_hi = spec.row_bounds()
    base_lo, base_hi = spec.bounds()
    binaries = spec.binary_indices
    nodes = 0
    pivots = 0

    def relax(lo, hi, start=None):
        nonlocal nodes, pivots
        res = _solve_dense_lp(c, a, lo, hi, row_lo, row_hi, start=start)
        nodes += 1
        pivots += res.pivots
        return res

    root = relax(base_lo, base_hi)
    if root.status != OPTIMAL:
        return Solution(root.status, nodes=nodes, pivots=pivots)

    best_obj = math.inf
    best_x = None
    counter = itertools.count()
    heap: list = []

    def consider(res, lo, hi):
        nonlocal best_obj, best_x
        if res.status == UNBOUNDED:
            raise SolverError("unbounded relaxation below the root")
        if res.status != OPTIMAL or res.objective >= best_obj - _gap_tol(best_obj):
            return
        frac = np.abs(res.x[binaries] - np.round(res.x[binaries])) if binaries.size else np.zeros(0)
        if frac.size == 0 or frac.max() <= INT_TOL:
            best_obj = res.objective
            best_x = res.x
            return
        heapq.heappush(heap, (res.objective, next(counter), lo, hi, res.x, res.basis))

    consider(root, base_lo, base_hi)
    while heap:
        bound, _, lo, hi, x, start = heapq.heappop(heap)
        if bound >= best_obj - _gap_tol(best_obj):
            break
        frac = np.abs(x[binaries] - np.round(x[binaries]))
        j = int(binaries[int(np.argmax(frac))])
        for value in (0.0, 1.0):
            clo, chi = lo.copy(), hi.copy()
            clo[j] = chi[j] = value
            consider(relax(clo, chi, start), clo, chi)
        if nodes > max_nodes:
            raise SolverError("branch-and-bound node limit reached")

    if best_x is None:
        return Solution(INFEASIBLE, nodes=nodes, pivots=pivots)
    x = best_x.copy()
    x[binaries] = np.round(x[binaries])
    return Solution(OPTIMAL, float(c @ x) + spec.objective_offset, x, nodes=nodes, pivots=pivots)


def brute_force_binary(spec: ModelSpec) -> Solution:
    """Enumerate every binary assignment; test oracle for small models."""
    _check_spec(spec)
    binaries = spec.binary_indices
    if binaries.size > _MAX_BINARIES_BRUTE:
        raise ValueError(f"brute force refuses more than {_MAX_BINARIES_BRUTE} binaries")
    c = spec.cost_vector()
    a = spec.matrix()
    row_lo, row_hi = spec.row_bounds()
    lo, hi = spec.bounds()
    n = spec.num_variables
    continuous = np.setdiff1d(np.arange(n), binaries)
    # assignments compatible with each binary's own bounds
    choices = [[v for v in (0.0, 1.0) if lo[j] - FEAS_TOL <= v <= hi[j] + FEAS_TOL] for j in binaries]
    best_obj = math.inf
    best_x = None
    count = 0
    if continuous.size == 0:
        grid = np.array(list(itertools.product(*choices)), dtype=float).reshape(-1, binaries.size)
        count = grid.shape[0]
        if count:
            x_all = np.zeros((count, n))
            x_all[:, binaries] = grid
            act = x_all @ a.T
            ok = np.all((act >= row_lo - FEAS_TOL) & (act <= row_hi + FEAS_TOL), axis=1)
            if ok.any():
                obj = x_all @ c
                obj[~ok] = math.inf
                k = int(np.argmin(obj))
                best_obj, best_x = float(obj[k]), x_all[k]
    else:
        # rows over binaries alone are checked directly; the LP runs only for the survivors
        pure = np.flatnonzero(~np.any(a[:, continuous] != 0, axis=1))
        a_pure = a[np.ix_(pure, binaries)]
        for combo in itertools.product(*choices):
            count += 1
            act = a_pure @ np.asarray(combo)
            if np.any((act < row_lo[pure] - FEAS_TOL) | (act > row_hi[pure] + FEAS_TOL)):
                continue
            clo, chi = lo.copy(), hi.copy()
            clo[binaries] = combo
            chi[binaries] = combo
            res = _solve_dense_lp(c, a, clo, chi, row_lo, row_hi)
            if res.status == UNBOUNDED:
                return Solution(UNBOUNDED, nodes=count)
            if res.status == OPTIMAL and (best_x is None or res.objective < best_obj - _gap_tol(best_obj)):
                best_obj, best_x = res.objective, res.x
    if best_x is None:
        return Solution(INFEASIBLE, nodes=count)
    return Solution(OPTIMAL, best_obj + spec.objective_offset, best_x, nodes=count)


def dual_objective(spec: ModelSpec, sol: Solution) -> float:
    """Objective of the dual certificate carried by an optimal LP solution."""
    if sol.duals is None or sol.reduced_costs is None:
        raise ValueError("solution carries no dual information")
    row_lo, row_hi = spec.row_bounds()
    lo, hi = spec.bounds()
    # multipliers at round-off level carry no sign information
    y = np.where(np.abs(sol.duals) <= _OPT_TOL, 0.0, sol.duals)
    d = np.where(np.abs(sol.reduced_costs) <= _OPT_TOL, 0.0, sol.reduced_costs)
    with np.errstate(invalid="ignore"):
        rows = np.where(y > 0, y * row_lo, np.where(y < 0, y * row_hi, 0.0))
        cols = np.where(d > 0, d * lo, np.where(d < 0, d * hi, 0.0))
    return float(np.sum(rows) + np.sum(cols) + spec.objective_offset)
