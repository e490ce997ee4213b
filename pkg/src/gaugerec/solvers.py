"""First-order and LP solvers for the penalized and equality-constrained
recovery problems.

``solve_penalized`` runs FISTA with adaptive restart when the regularizer
has a proximal map, and a primal-dual splitting (analysis form) when it is
a pre-composition or a polyhedral H-gauge.  Convergence is declared from
the first-order conditions at the iterate's own model decomposition, never
from step sizes alone.  ``solve_noiseless`` prefers exact LP formulations
and falls back to a primal-dual method for non-polyhedral gauges.
"""

import numpy as np

from .linalg import check_finite, svd_pinv, power_operator_norm
from .lp import LpProblem, lp_solve, OPTIMAL
from .gauges import (Gauge, L1, L2, Linf, GroupL1L2, PolyhedralH, Precomposed,
                     UnsupportedGaugeError, project_l1_ball,
                     project_simplex_interior)
from . import model as model_mod
from . import certificates as cert_mod


class SolverError(RuntimeError):
    pass


class SolveResult:
    def __init__(self, x_hat, iterations, primal_residual, dual_residual,
                 converged, method, objective_log=None):
        self.x_hat = x_hat
        self.iterations = int(iterations)
        self.primal_residual = float(primal_residual)
        self.dual_residual = float(dual_residual)
        self.converged = bool(converged)
        self.method = method
        self.objective_log = objective_log

    def to_json_dict(self):
        return {
            "x_hat": list(map(float, self.x_hat)),
            "iterations": self.iterations,
            "primal_residual": self.primal_residual,
            "dual_residual": self.dual_residual,
            "converged": self.converged,
            "method": self.method,
        }

    def __repr__(self):
        return (f"SolveResult(iters={self.iterations}, "
                f"converged={self.converged}, method={self.method!r})")


class SolveOptions:
    def __init__(self, tol=1e-8, max_iter=200000, check_every=100,
                 solver="auto", x0=None, log_objective=False):
        self.tol = float(tol)
        self.max_iter = int(max_iter)
        self.check_every = int(check_every)
        self.solver = solver
        self.x0 = x0
        self.log_objective = bool(log_objective)


def _first_order_residuals(Phi, y, lam, g, x):
    """(equality residual, gauge slack beyond 1) of the penalized problem
    at x, evaluated on the decomposition of the iterate itself."""
    r = y - Phi @ x
    corr = Phi.T @ r
    if np.max(np.abs(x)) == 0.0:
        try:
            slack = g.polar(corr / lam) - 1.0
        except UnsupportedGaugeError:
            return np.inf, np.inf
        return 0.0, max(slack, 0.0)
    try:
        md = model_mod.decompose(g, x)
    except (model_mod.DegenerateModelError, UnsupportedGaugeError):
        return np.inf, np.inf
    eq = np.max(np.abs(md.T.coords(corr) - lam * md.T.coords(md.e)),
                initial=0.0) / (1.0 + lam)
    slack = md.antig.value(md.S.project(corr / lam - md.f)) - 1.0
    return eq, max(slack, 0.0)


def _objective(Phi, y, lam, g, x):
    r = y - Phi @ x
    return 0.5 * float(r @ r) + lam * g.value(x)


def solve_penalized(Phi, y, lam, g, opts=None):
    """Minimize 0.5 || y - Phi x ||^2 + lam * J(x).

    Parameters
    ----------
    Phi, y : measurement operator and data
    lam : positive regularization weight
    g : the regularizer (L1 / GroupL1L2 / Linf via FISTA; Precomposed /
        PolyhedralH via a primal-dual splitting)
    opts : SolveOptions; ``tol`` bounds the first-order residuals at exit.
    """
    Phi = check_finite(Phi, "Phi")
    y = check_finite(y, "y")
    if lam <= 0:
        raise ValueError("lam must be positive")
    opts = opts or SolveOptions()
    route = opts.solver
    if route == "auto":
        if isinstance(g, (L1, GroupL1L2, Linf)):
            route = "fista"
        elif isinstance(g, (Precomposed, PolyhedralH)):
            route = "pd"
        else:
            raise UnsupportedGaugeError(
                f"no penalized solver for {type(g).__name__}")
    if route == "fista":
        return _fista(Phi, y, lam, g, opts)
    if route == "pd":
        return _primal_dual_penalized(Phi, y, lam, g, opts)
    raise ValueError(f"unknown solver route {route!r}")


def _fista(Phi, y, lam, g, opts):
    n = Phi.shape[1]
    L = power_operator_norm(Phi) ** 2
    step = 1.0 / L if L > 0 else 1.0
    x = np.zeros(n) if opts.x0 is None else np.asarray(opts.x0, dtype=float).copy()
    z = x.copy()
    t = 1.0
    obj_prev = _objective(Phi, y, lam, g, x)
    log = [] if opts.log_objective else None
    eq = slack = np.inf
    for it in range(1, opts.max_iter + 1):
        grad = Phi.T @ (Phi @ z - y)
        x_new = g.prox(lam * step, z - step * grad)
        t_new = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * t * t))
        z = x_new + ((t - 1.0) / t_new) * (x_new - x)
        # adaptive restart on objective increase
        if it % 10 == 0:
            obj = _objective(Phi, y, lam, g, x_new)
            if obj > obj_prev:
                z = x_new.copy()
                t_new = 1.0
            obj_prev = min(obj, obj_prev)
        x = x_new
        t = t_new
        if it % opts.check_every == 0:
            if log is not None:
                log.append(_objective(Phi, y, lam, g, x))
            eq, slack = _first_order_residuals(Phi, y, lam, g, x)
            if eq <= opts.tol and slack <= opts.tol:
                return SolveResult(x, it, eq, slack, True, "fista",
                                   objective_log=log)
    eq, slack = _first_order_residuals(Phi, y, lam, g, x)
    return SolveResult(x, opts.max_iter, eq, slack,
                       eq <= opts.tol and slack <= opts.tol, "fista",
                       objective_log=log)


def _dual_ball_projection(base):
    """Euclidean projection onto lam * (polar ball of the base gauge)."""
    if isinstance(base, L1):
        return lambda p, lam: np.clip(p, -lam, lam)
    if isinstance(base, Linf):
        return lambda p, lam: project_l1_ball(p, lam)
    if isinstance(base, GroupL1L2):
        def proj(p, lam):
            out = p.copy()
            for b in base.partition:
                nb = np.linalg.norm(p[b])
                if nb > lam:
                    out[b] *= lam / nb
            return out
        return proj
    if isinstance(base, PolyhedralH):
        raise UnsupportedGaugeError("nested polyhedral pre-composition")
    return None


def _splitting_pieces(g):
    """(K, dual projection) so that J(x) = base(K x) with a prox-able dual."""
    if isinstance(g, PolyhedralH):
        K = g.H.T
        return K, (lambda p, lam: project_simplex_interior(p, lam))
    if isinstance(g, Precomposed):
        proj = _dual_ball_projection(g.base)
        if proj is None:
            raise UnsupportedGaugeError(
                f"no dual projection for base {type(g.base).__name__}")
        return g.dstar, proj
    raise UnsupportedGaugeError(f"no splitting for {type(g).__name__}")


def _primal_dual_penalized(Phi, y, lam, g, opts):
    """Chambolle-Pock on min_x 0.5||y - Phi x||^2 + lam * base(K x)."""
    K, dual_proj = _splitting_pieces(g)
    n = Phi.shape[1]
    normK = power_operator_norm(K)
    sigma = tau = 0.99 / normK if normK > 0 else 1.0
    # prox of tau * 0.5||y - Phi x||^2: solve (I + tau Phi^T Phi) x = v + tau Phi^T y
    A = np.eye(n) + tau * (Phi.T @ Phi)
    import scipy.linalg
    chol = scipy.linalg.cho_factor(A)
    Pty = Phi.T @ y
    x = np.zeros(n)
    xbar = x.copy()
    p = np.zeros(K.shape[0])
    eq = slack = np.inf
    for it in range(1, opts.max_iter + 1):
        p = dual_proj(p + sigma * (K @ xbar), lam)
        x_new = scipy.linalg.cho_solve(chol, x - tau * (K.T @ p) + tau * Pty)
        xbar = 2.0 * x_new - x
        x = x_new
        if it % opts.check_every == 0:
            eq, slack = _first_order_residuals(Phi, y, lam, g, x)
            if eq <= opts.tol and slack <= opts.tol:
                return SolveResult(x, it, eq, slack, True, "pd")
    eq, slack = _first_order_residuals(Phi, y, lam, g, x)
    return SolveResult(x, opts.max_iter, eq, slack,
                       eq <= opts.tol and slack <= opts.tol, "pd")


# ---------------------------------------------------------------------------
# noiseless (equality-constrained) solver
# ---------------------------------------------------------------------------

def solve_noiseless(Phi, y, g, opts=None):
    """Minimize J(x) subject to Phi x = y.

    LP formulations are used for L1 / Linf / PolyhedralH and for
    pre-compositions with an L1 or Linf base; other gauges run a
    primal-dual method with the affine constraint enforced by projection.
    """
    Phi = check_finite(Phi, "Phi")
    y = check_finite(y, "y")
    opts = opts or SolveOptions()
    # feasibility of y
    xls, *_ = np.linalg.lstsq(Phi, y, rcond=None)
    if np.linalg.norm(Phi @ xls - y) > 1e-8 * (1.0 + np.linalg.norm(y)):
        raise ValueError("y is not in the range of Phi")
    route = opts.solver
    if route in ("auto", "lp"):
        built = _noiseless_lp(Phi, y, g)
        if built is not None:
            prob, extract = built
            res = lp_solve(prob)
            if res.status != OPTIMAL:
                raise SolverError(f"noiseless LP ended with {res.status}")
            x = extract(res.x)
            feas = np.linalg.norm(Phi @ x - y) / (1.0 + np.linalg.norm(y))
            return SolveResult(x, res.iterations, feas, 0.0, True, "lp")
        if route == "lp":
            raise UnsupportedGaugeError(
                f"no LP formulation for {type(g).__name__}")
    return _primal_dual_noiseless(Phi, y, g, opts)


def _noiseless_lp(Phi, y, g):
    """(LpProblem, extractor) for min J(x), Phi x = y; None off the LP map."""
    Q, n = Phi.shape
    take_x = lambda z: z[:n]
    if isinstance(g, L1):
        # x = u - v, u,v >= 0; min sum(u+v)
        c = np.ones(2 * n)
        a_eq = np.hstack([Phi, -Phi])
        prob = LpProblem(c, a_eq=a_eq, b_eq=y, bounds=[(0, None)] * (2 * n))
        return prob, (lambda z: z[:n] - z[n:])
    if isinstance(g, Linf):
        c = np.zeros(n + 1)
        c[-1] = 1.0
        eye = np.eye(n)
        a_ub = np.vstack([np.hstack([eye, -np.ones((n, 1))]),
                          np.hstack([-eye, -np.ones((n, 1))])])
        a_eq = np.hstack([Phi, np.zeros((Q, 1))])
        prob = LpProblem(c, a_ub=a_ub, b_ub=np.zeros(2 * n), a_eq=a_eq,
                         b_eq=y, bounds=[(None, None)] * n + [(0, None)])
        return prob, take_x
    if isinstance(g, PolyhedralH):
        m = g.H.shape[1]
        c = np.zeros(n + 1)
        c[-1] = 1.0
        a_ub = np.hstack([g.H.T, -np.ones((m, 1))])
        a_eq = np.hstack([Phi, np.zeros((Q, 1))])
        prob = LpProblem(c, a_ub=a_ub, b_ub=np.zeros(m), a_eq=a_eq, b_eq=y,
                         bounds=[(None, None)] * n + [(0, None)])
        return prob, take_x
    if isinstance(g, Precomposed) and isinstance(g.base, L1):
        p = g.dstar.shape[0]
        # variables (x, u, v) with dstar x = u - v
        c = np.concatenate([np.zeros(n), np.ones(2 * p)])
        a_eq = np.vstack([
            np.hstack([Phi, np.zeros((Q, 2 * p))]),
            np.hstack([g.dstar, -np.eye(p), np.eye(p)]),
        ])
        b_eq = np.concatenate([y, np.zeros(p)])
        bounds = [(None, None)] * n + [(0, None)] * (2 * p)
        return LpProblem(c, a_eq=a_eq, b_eq=b_eq, bounds=bounds), take_x
    if isinstance(g, Precomposed) and isinstance(g.base, Linf):
        p = g.dstar.shape[0]
        c = np.zeros(n + 1)
        c[-1] = 1.0
        a_ub = np.vstack([np.hstack([g.dstar, -np.ones((p, 1))]),
                          np.hstack([-g.dstar, -np.ones((p, 1))])])
        a_eq = np.hstack([Phi, np.zeros((Q, 1))])
        prob = LpProblem(c, a_ub=a_ub, b_ub=np.zeros(2 * p), a_eq=a_eq,
                         b_eq=y, bounds=[(None, None)] * n + [(0, None)])
        return prob, take_x
    return None


def _primal_dual_noiseless(Phi, y, g, opts):
    """Chambolle-Pock with the indicator of {Phi x = y} as the smooth block."""
    if isinstance(g, (Precomposed, PolyhedralH)):
        K, dual_proj = _splitting_pieces(g)
    elif isinstance(g, (L1, Linf, GroupL1L2)):
        K = np.eye(g.dim)
        dual_proj = _dual_ball_projection(g)
    elif isinstance(g, L2):
        K = np.eye(g.dim)
        dual_proj = lambda p, lam: p * min(1.0, lam / max(np.linalg.norm(p), 1e-300))
    else:
        raise UnsupportedGaugeError(
            f"no noiseless solver for {type(g).__name__}")
    pinv = svd_pinv(Phi)
    n = Phi.shape[1]

    def affine_proj(v):
        return v - pinv @ (Phi @ v - y)

    normK = power_operator_norm(K)
    sigma = tau = 0.99 / normK if normK > 0 else 1.0
    x = affine_proj(np.zeros(n))
    xbar = x.copy()
    p = np.zeros(K.shape[0])
    obj_prev = np.inf
    for it in range(1, opts.max_iter + 1):
        p = dual_proj(p + sigma * (K @ xbar), 1.0)
        x_new = affine_proj(x - tau * (K.T @ p))
        xbar = 2.0 * x_new - x
        x = x_new
        if it % opts.check_every == 0:
            obj = g.value(x)
            feas = np.linalg.norm(Phi @ x - y) / (1.0 + np.linalg.norm(y))
            if feas <= opts.tol and abs(obj - obj_prev) <= \
                    max(opts.tol, 1e-12) * (1.0 + abs(obj)):
                return SolveResult(x, it, feas, 0.0, True, "pd")
            obj_prev = obj
    feas = np.linalg.norm(Phi @ x - y) / (1.0 + np.linalg.norm(y))
    return SolveResult(x, opts.max_iter, feas, 0.0, feas <= opts.tol, "pd")


# ---------------------------------------------------------------------------
# restricted-subspace solver
# ---------------------------------------------------------------------------

def solve_restricted(Phi, y, lam, md, opts=None):
    """Minimize the penalized objective over the model subspace of md.

    When the sign-like vector is locally constant on the model cone (L1,
    Linf, polyhedral and analysis kinds) the minimizer has the closed form
    Phi_T^+ y - lam (Phi_T^* Phi_T)^{-1} e restricted to T; for the group
    regularizer the vector e varies with the point and a damped fixed-point
    iteration is used, with FISTA on the subspace as a fallback.
    """
    Phi = check_finite(Phi, "Phi")
    y = check_finite(y, "y")
    opts = opts or SolveOptions()
    from .linalg import restricted_injectivity
    if not restricted_injectivity(Phi, md.T):
        raise cert_mod.RestrictedInjectivityError(
            "restricted problem is not strongly convex on T")
    U = md.T.basis
    M = Phi @ U
    Mp = svd_pinv(M)
    Ginv = np.linalg.inv(M.T @ M)
    if not isinstance(md.gauge, GroupL1L2):
        coeff = Mp @ y - lam * (Ginv @ U.T @ md.e)
        x = U @ coeff
        res = np.max(np.abs(M.T @ (y - Phi @ x) - lam * (U.T @ md.e)),
                     initial=0.0)
        return SolveResult(x, 1, res / (1.0 + lam), 0.0, True, "closed-form")
    # group: e(x) varies; damped fixed point
    part = md.gauge.partition
    x = U @ (Mp @ y)
    for it in range(1, 10001):
        e = np.zeros(md.ambient_dim)
        for b in part:
            nb = np.linalg.norm(x[b])
            if nb > 1e-15:
                e[b] = x[b] / nb
        target = U @ (Mp @ y - lam * (Ginv @ (U.T @ e)))
        x_next = 0.5 * x + 0.5 * target
        if np.linalg.norm(x_next - x) <= 1e-10 * (1.0 + np.linalg.norm(x)):
            x = x_next
            res = np.max(np.abs(M.T @ (y - Phi @ x) - lam * (U.T @ e)),
                         initial=0.0)
            return SolveResult(x, it, res / (1.0 + lam), 0.0, True,
                               "fixed-point")
        x = x_next
    # fall back to FISTA in subspace coordinates
    sub = _group_subspace_fista(M, y, lam, part, U, opts)
    return SolveResult(sub, opts.max_iter, np.nan, np.nan, False,
                       "fista-on-T")


def _group_subspace_fista(M, y, lam, part, U, opts):
    blocks = []
    for b in part:
        cols = [j for j in range(U.shape[1]) if np.any(np.abs(U[b, j]) > 0)]
        if cols:
            blocks.append(np.asarray(cols, dtype=int))
    L = power_operator_norm(M) ** 2
    step = 1.0 / L if L > 0 else 1.0
    c = np.zeros(M.shape[1])
    z = c.copy()
    t = 1.0
    for _ in range(opts.max_iter):
        grad = M.T @ (M @ z - y)
        v = z - step * grad
        c_new = v.copy()
        for b in blocks:
            nb = np.linalg.norm(v[b])
            c_new[b] = 0.0 if nb <= lam * step else v[b] * (1 - lam * step / nb)
        t_new = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * t * t))
        z = c_new + ((t - 1.0) / t_new) * (c_new - c)
        c, t = c_new, t_new
    return U @ c
