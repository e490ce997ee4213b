"""Dense linear programming by two-phase revised simplex.

Problems are stated as

    minimize    c @ x
    subject to  a_ub @ x <= b_ub
                a_eq @ x == b_eq
                lo_i <= x_i <= hi_i   (None = unbounded)

and converted internally to standard form (equalities over nonnegative
variables).  Pricing is Dantzig's rule with an automatic switch to Bland's
rule after a run of degenerate pivots, which guarantees termination.  The
basis inverse is kept explicitly and refreshed periodically.
"""

import numpy as np

FEAS_TOL = 1e-9
COST_TOL = 1e-9
PIVOT_TOL = 1e-10
REFACTOR_EVERY = 64

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"


class LpNumericalError(RuntimeError):
    """Raised when the simplex cannot certify any of the three outcomes."""


class LpProblem:
    def __init__(self, c, a_ub=None, b_ub=None, a_eq=None, b_eq=None, bounds=None):
        self.c = np.asarray(c, dtype=float)
        n = self.c.shape[0]
        self.a_ub = np.zeros((0, n)) if a_ub is None else np.asarray(a_ub, dtype=float)
        self.b_ub = np.zeros(0) if b_ub is None else np.asarray(b_ub, dtype=float)
        self.a_eq = np.zeros((0, n)) if a_eq is None else np.asarray(a_eq, dtype=float)
        self.b_eq = np.zeros(0) if b_eq is None else np.asarray(b_eq, dtype=float)
        if bounds is None:
            bounds = [(None, None)] * n
        self.bounds = list(bounds)
        for arr, name in ((self.c, "c"), (self.a_ub, "a_ub"), (self.b_ub, "b_ub"),
                          (self.a_eq, "a_eq"), (self.b_eq, "b_eq")):
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"non-finite data in {name}")
        if self.a_ub.shape != (self.b_ub.shape[0], n):
            raise ValueError("a_ub/b_ub shape mismatch")
        if self.a_eq.shape != (self.b_eq.shape[0], n):
            raise ValueError("a_eq/b_eq shape mismatch")
        if len(self.bounds) != n:
            raise ValueError("bounds length mismatch")

    @property
    def n_vars(self):
        return self.c.shape[0]


class LpResult:
    def __init__(self, status, x=None, value=None, dual_eq=None, dual_ub=None,
                 iterations=0):
        self.status = status
        self.x = x
        self.value = value
        self.dual_eq = dual_eq
        self.dual_ub = dual_ub
        self.iterations = iterations

    def __repr__(self):
        return f"LpResult({self.status}, value={self.value})"


def _to_standard_form(p):
    """Rewrite as min c z, A z = b, z >= 0.

    Returns (A, b, c, recover, n_eq, n_ub) where ``recover`` maps a standard
    vector z back to the original variables, rows are ordered [eq; ub], and
    row signs are not yet normalized.
    """
    n = p.n_vars
    cols = []          # per original var: list of (std_index, sign)
    shifts = np.zeros(n)
    c_std = []
    extra_ub = []      # upper-bound rows appended to a_ub

    k = 0
    for j, (lo, hi) in enumerate(p.bounds):
        if lo is None:
            cols.append([(k, 1.0), (k + 1, -1.0)])
            c_std.extend([p.c[j], -p.c[j]])
            k += 2
        else:
            shifts[j] = lo
            cols.append([(k, 1.0)])
            c_std.append(p.c[j])
            k += 1
        if hi is not None:
            row = np.zeros(n)
            row[j] = 1.0
            extra_ub.append((row, hi))

    a_ub = p.a_ub
    b_ub = p.b_ub
    if extra_ub:
        a_ub = np.vstack([a_ub] + [r for r, _ in extra_ub])
        b_ub = np.concatenate([b_ub, [h for _, h in extra_ub]])

    m_eq, m_ub = p.a_eq.shape[0], a_ub.shape[0]
    n_std = k + m_ub
    A = np.zeros((m_eq + m_ub, n_std))
    orig = np.vstack([p.a_eq, a_ub]) if m_eq + m_ub else np.zeros((0, n))
    for j in range(n):
        for idx, sgn in cols[j]:
            A[:, idx] += sgn * orig[:, j]
    for i in range(m_ub):
        A[m_eq + i, k + i] = 1.0
    b = np.concatenate([p.b_eq, b_ub]) - orig @ shifts
    c_full = np.concatenate([np.asarray(c_std), np.zeros(m_ub)])

    def recover(z):
        x = shifts.copy()
        for j in range(n):
            for idx, sgn in cols[j]:
                x[j] += sgn * z[idx]
        return x

    return A, b, c_full, recover, m_eq, m_ub


class _Simplex:
    """Revised simplex on min c z, A z = b (b >= 0 after sign flips), z >= 0."""

    def __init__(self, A, b, c):
        flip = b < 0
        self.A = np.where(flip[:, None], -A, A)
        self.b = np.where(flip, -b, b)
        self.flip = flip
        self.c = c
        self.m, self.n = self.A.shape
        self.iterations = 0

    def solve(self):
        m, n = self.m, self.n
        # Phase 1.  Unflipped slack columns (unit columns with +1) can serve
        # directly as the starting basis; other rows get an artificial.
        basis = [-1] * m
        col_is_unit = (np.abs(self.A) > 0).sum(axis=0) == 1
        for j in np.flatnonzero(col_is_unit):
            i = int(np.argmax(np.abs(self.A[:, j])))
            if basis[i] == -1 and self.A[i, j] == 1.0:
                basis[i] = j
        need_art = [i for i in range(m) if basis[i] == -1]
        art = np.zeros((m, len(need_art)))
        for k, i in enumerate(need_art):
            art[i, k] = 1.0
            basis[i] = n + k
        A1 = np.hstack([self.A, art])
        c1 = np.concatenate([np.zeros(n), np.ones(len(need_art))])
        basis, xB, ok = self._iterate(A1, c1, basis, phase=1)
        if not ok:
            raise LpNumericalError("phase 1 did not terminate cleanly")
        scale = 1.0 + np.abs(self.b).sum()
        if float(c1[basis] @ xB) > 1e-7 * scale:
            return INFEASIBLE, None, None, None
        basis, keep_rows = self._drive_out_artificials(A1, basis, n)
        rows = np.asarray(keep_rows, dtype=int)
        A = A1[np.ix_(rows, np.arange(n))]
        saved_b = self.b
        self.b = saved_b[rows]
        basis, xB, ok = self._iterate(A, self.c, basis, phase=2)
        self.b = saved_b
        if not ok:
            return UNBOUNDED, None, None, None
        z = np.zeros(n)
        z[np.asarray(basis)] = xB
        Binv = self._invert(A, basis)
        y_rows = np.zeros(self.m)
        y_rows[rows] = self.c[np.asarray(basis)] @ Binv
        y_rows = np.where(self.flip, -y_rows, y_rows)
        return OPTIMAL, z, float(self.c @ z), y_rows

    def _drive_out_artificials(self, A1, basis, n):
        """Replace zero-level artificial basics by real columns; rows whose
        Binv-row is zero on all real columns are redundant and dropped."""
        m = self.m
        basis = list(basis)
        redundant = []
        Binv = self._invert(A1, basis)
        for i in range(m):
            if basis[i] < n:
                continue
            row = Binv[i] @ A1[:, :n]
            cand = [j for j in np.flatnonzero(np.abs(row) > 1e-9)
                    if j not in basis]
            if cand:
                basis[i] = int(cand[0])
                Binv = self._invert(A1, basis)
            else:
                redundant.append(i)
        keep_rows = [i for i in range(m) if i not in redundant]
        basis = [basis[i] for i in keep_rows]
        return basis, keep_rows

    def _iterate(self, A, c, basis, phase):
        basis = list(basis)
        Binv = self._invert(A, basis)
        xB = np.maximum(Binv @ self.b, 0.0)
        bland = False
        degenerate_run = 0
        max_iter = 2000 + 40 * (A.shape[0] + A.shape[1])
        since_refactor = 0
        for _ in range(max_iter):
            self.iterations += 1
            y = c[np.asarray(basis)] @ Binv
            reduced = c - y @ A
            reduced[np.asarray(basis)] = 0.0
            if bland:
                cand = np.flatnonzero(reduced < -COST_TOL)
                if cand.size == 0:
                    return basis, xB, True
                enter = int(cand[0])
            else:
                enter = int(np.argmin(reduced))
                if reduced[enter] >= -COST_TOL:
                    return basis, xB, True
            d = Binv @ A[:, enter]
            pos = d > PIVOT_TOL
            if not np.any(pos):
                return basis, xB, False  # unbounded (phase 1 cannot reach here)
            ratios = np.full(d.shape, np.inf)
            ratios[pos] = xB[pos] / d[pos]
            theta = ratios.min()
            ties = np.flatnonzero(ratios <= theta + 1e-12)
            leave = int(min(ties, key=lambda i: basis[i]))
            if theta <= 1e-12:
                degenerate_run += 1
                if degenerate_run > 2 * (A.shape[0] + 10):
                    bland = True
            else:
                degenerate_run = 0
            # pivot
            basis[leave] = enter
            xB = xB - theta * d
            xB[leave] = theta
            np.maximum(xB, 0.0, out=xB)
            since_refactor += 1
            if since_refactor >= REFACTOR_EVERY:
                Binv = self._invert(A, basis)
                xB = np.maximum(Binv @ self.b, 0.0)
                since_refactor = 0
            else:
                # rank-1 eta update of the basis inverse
                row = Binv[leave].copy()
                coef = -d / d[leave]
                coef[leave] = 0.0
                Binv += np.outer(coef, row)
                Binv[leave] = row / d[leave]
        raise LpNumericalError(
            f"simplex iteration cap hit in phase {phase} "
            f"(m={A.shape[0]}, n={A.shape[1]})")

    @staticmethod
    def _invert(A, basis):
        try:
            return np.linalg.inv(A[:, basis])
        except np.linalg.LinAlgError as exc:
            raise LpNumericalError(f"singular working basis: {exc}") from exc


def lp_solve(problem):
    """Solve an LpProblem; returns an LpResult with status optimal /
    infeasible / unbounded.  Numerical breakdown raises LpNumericalError."""
    A, b, c, recover, m_eq, m_ub = _to_standard_form(problem)
    if A.shape[0] == 0:
        # no constraints: bounded only if c vanishes on free directions
        x = np.zeros(problem.n_vars)
        for j, (lo, hi) in enumerate(problem.bounds):
            base = 0.0 if lo is None else lo
            if problem.c[j] > 0 and lo is None:
                return LpResult(UNBOUNDED)
            if problem.c[j] < 0 and hi is None:
                return LpResult(UNBOUNDED)
            x[j] = base if problem.c[j] >= 0 else hi
        return LpResult(OPTIMAL, x=x, value=float(problem.c @ x))
    simplex = _Simplex(A, b, c)
    status, z, value, y = simplex.solve()
    if status != OPTIMAL:
        return LpResult(status, iterations=simplex.iterations)
    x = recover(z)
    dual_eq = y[:m_eq] if y is not None else None
    dual_ub = y[m_eq:m_eq + problem.a_ub.shape[0]] if y is not None else None
    return LpResult(OPTIMAL, x=x, value=float(problem.c @ x),
                    dual_eq=dual_eq, dual_ub=dual_ub,
                    iterations=simplex.iterations)


def lp_minimize_linf(M, q):
    """min_w || M w + q ||_inf, a Chebyshev problem used by analysis gauges.

    Returns (value, w).  M may have zero columns, in which case the value is
    just ||q||_inf.
    """
    M = np.asarray(M, dtype=float)
    q = np.asarray(q, dtype=float)
    if M.ndim == 1:
        M = M[:, None]
    r, k = M.shape
    if k == 0 or r == 0:
        return float(np.max(np.abs(q), initial=0.0)), np.zeros(k)
    # variables (w, t): rows M w + q <= t, -(M w + q) <= t
    c = np.concatenate([np.zeros(k), [1.0]])
    a_ub = np.vstack([np.hstack([M, -np.ones((r, 1))]),
                      np.hstack([-M, -np.ones((r, 1))])])
    b_ub = np.concatenate([-q, q])
    res = lp_solve(LpProblem(c, a_ub=a_ub, b_ub=b_ub))
    if res.status != OPTIMAL:
        raise LpNumericalError(f"Chebyshev LP ended with status {res.status}")
    return float(res.value), res.x[:k]
