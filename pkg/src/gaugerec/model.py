"""Model decomposition of supported regularizers.

For a regularizer J and a point x this module produces the quadruple
(T, S, e, f) together with an exact evaluator of the gauge of the shifted
subdifferential ``partial J(x) - f`` (finite exactly on S), the calculus
rules that combine decompositions (sums, smooth perturbations,
pre-composition by a linear operator), and the local stability parameters
(nu, mu, tau, xi) with their comparison gauge.
"""

import numpy as np

from .linalg import Subspace, check_finite, null_space, svd_pinv
from .lp import LpProblem, lp_solve, OPTIMAL
from .polytopes import Polytope, PolytopeError, MAX_ENUM_DIM
from . import linalg
from .gauges import (Gauge, L1, L2, Linf, GroupL1L2, PolyhedralH, Precomposed,
                     SumGauge, MaxGauge, UnsupportedGaugeError)

SUPPORT_TOL = 1e-10       # relative threshold for "entry is nonzero"
SATURATION_TOL = 1e-9     # relative threshold for "entry attains the max"
MEMBERSHIP_BAND = 1e-8    # half-width of the boundary band in classification


class DegenerateModelError(ValueError):
    """Raised when a decomposition is requested at an excluded point."""


class GroupLinf2(Gauge):
    """Blockwise max of Euclidean block norms (polar of the group l1-l2)."""

    def __init__(self, partition):
        super().__init__(partition.n)
        self.partition = partition
        self.linf2_blocks = [np.asarray(b, dtype=int) for b in partition]

    def value(self, x):
        x = self._check(x)
        return float(max((np.linalg.norm(x[b]) for b in self.partition),
                         default=0.0))

    def polar(self, u):
        u = self._check(u)
        return float(sum(np.linalg.norm(u[b]) for b in self.partition))


class SubdiffGauge:
    """Gauge of the shifted subdifferential; finite exactly on S.

    ``atoms`` (when present) give the exact support form
    value(v) = max_j <atoms[j], v> for v in S; ``linf2_blocks`` marks a
    blockwise max-of-norms structure instead.  ``exact`` records whether
    ``value`` is closed form / LP-backed (True) or a numerical fallback.
    """

    is_euclidean = False

    def __init__(self, S, value_fn, atoms=None, ball_verts=None,
                 linf2_blocks=None, exact=True):
        self.S = S
        self.dim = S.ambient_dim
        self._value_fn = value_fn
        self.atoms = None if atoms is None else np.asarray(atoms, dtype=float)
        self._ball_verts = ball_verts
        self.linf2_blocks = linf2_blocks
        self.exact = exact

    def value(self, eta):
        eta = np.asarray(eta, dtype=float)
        if not self.S.contains(eta, tol=1e-9 * (1.0 + np.linalg.norm(eta))):
            return np.inf
        return float(self._value_fn(eta))

    def support_atoms(self):
        return self.atoms

    def ball_vertices(self, domain=None):
        if self._ball_verts is None:
            return None
        verts = np.asarray(self._ball_verts, dtype=float)
        if domain is None:
            return verts
        if all(domain.contains(v) for v in verts):
            return verts
        return None

    def kernel_directions(self, domain=None):
        return np.zeros((0, self.dim))


def _max_atoms(atoms):
    atoms = np.asarray(atoms, dtype=float)

    def fn(v):
        return float(np.max(atoms @ v, initial=0.0))

    return fn


class PsflParams:
    """Local stability parameters and the comparison gauge they refer to."""

    def __init__(self, nu, mu, tau, xi, gamma, exact=True):
        self.nu = float(nu)
        self.mu = float(mu)
        self.tau = float(tau)
        self.xi = float(xi)
        self.gamma = gamma
        self.exact = bool(exact)

    def __repr__(self):
        return (f"PsflParams(nu={self.nu:.6g}, mu={self.mu:.6g}, "
                f"tau={self.tau:.6g}, xi={self.xi:.6g})")


class ModelDecomposition:
    """(T, S, e, f) plus the subdifferential-gauge evaluator at a point x."""

    def __init__(self, gauge, x, T, S, e, f, antig, polar_fn=None,
                 _skip_checks=False):
        self.gauge = gauge
        self.x = np.asarray(x, dtype=float)
        self.T = T
        self.S = S
        self.e = np.asarray(e, dtype=float)
        self.f = np.asarray(f, dtype=float)
        self.antig = antig
        self._polar_fn = polar_fn
        if not _skip_checks:
            self._validate()

    def _validate(self):
        n = self.T.ambient_dim
        if self.T.dim + self.S.dim != n:
            raise ValueError("dim T + dim S must equal the ambient dimension")
        if self.T.dim and self.S.dim:
            cross = np.abs(self.T.basis.T @ self.S.basis).max()
            if cross > 1e-8:
                raise ValueError("T and S are not orthogonal")
        scale = 1.0 + np.linalg.norm(self.e)
        if np.linalg.norm(self.T.project(self.e) - self.e) > 1e-8 * scale:
            raise ValueError("e does not lie in T")
        if np.linalg.norm(self.T.project(self.f) - self.e) > 1e-8 * scale:
            raise ValueError("the T-part of f must equal e")
        if not self.T.contains(self.x, tol=1e-8 * (1.0 + np.linalg.norm(self.x))):
            raise ValueError("anchor point does not lie in its model subspace")

    @property
    def ambient_dim(self):
        return self.T.ambient_dim

    def antig_value(self, eta):
        return self.antig.value(eta)

    def antig_polar(self, d):
        """Polar of the subdifferential gauge: J(d_S) - <P_S f, d_S>."""
        d = np.asarray(d, dtype=float)
        dS = self.S.project(d)
        if self._polar_fn is not None:
            return self._polar_fn(dS)
        fS = self.S.project(self.f)
        return self.gauge.value(dS) - float(fS @ dS)

    def __repr__(self):
        return (f"ModelDecomposition(dim={self.ambient_dim}, "
                f"dim_T={self.T.dim}, J={type(self.gauge).__name__})")


# ---------------------------------------------------------------------------
# concrete regularizers
# ---------------------------------------------------------------------------

def support_indices(x):
    x = np.asarray(x, dtype=float)
    thr = SUPPORT_TOL * (1.0 + np.max(np.abs(x), initial=0.0))
    return [int(i) for i in np.flatnonzero(np.abs(x) > thr)]


def saturation_indices(x):
    x = np.asarray(x, dtype=float)
    m = np.max(np.abs(x))
    return [int(i) for i in np.flatnonzero(np.abs(x) >= m * (1.0 - SATURATION_TOL))]


def decompose_l1(x, delta=0.5):
    """Decomposition of the absolute-sum regularizer at x."""
    x = check_finite(x, "x")
    n = x.shape[0]
    I = support_indices(x)
    Ic = [i for i in range(n) if i not in I]
    T = Subspace.coordinate(n, I)
    S = Subspace.coordinate(n, Ic)
    e = np.zeros(n)
    e[I] = np.sign(x[I])
    atoms = np.zeros((2 * len(Ic), n))
    for j, i in enumerate(Ic):
        atoms[2 * j, i] = 1.0
        atoms[2 * j + 1, i] = -1.0
    ball = Linf(n).ball_vertices(S) if len(Ic) <= 16 else None

    def value_fn(eta):
        return float(np.max(np.abs(eta[Ic]), initial=0.0))

    antig = SubdiffGauge(S, value_fn, atoms=atoms, ball_verts=ball)
    md = ModelDecomposition(L1(n), x, T, S, e, e.copy(), antig)
    nu = (1.0 - delta) * np.min(np.abs(x[I])) if I else 0.0
    return md, PsflParams(nu, 0.0, 0.0, 0.0, Linf(n))


def decompose_linf(x, delta=0.5):
    """Decomposition of the max-abs regularizer at x != 0."""
    x = check_finite(x, "x")
    n = x.shape[0]
    if np.max(np.abs(x), initial=0.0) <= 0.0:
        raise DegenerateModelError(
            "the max-abs regularizer is degenerate at x = 0 (T = {0})")
    I = saturation_indices(x)
    s = np.zeros(n)
    s[I] = np.sign(x[I])
    k = len(I)
    # S = {eta : eta off I is 0, <eta_I, s_I> = 0}
    inner = null_space(s[I][None, :])         # (k, k-1)
    SB = np.zeros((n, k - 1))
    SB[I, :] = inner
    S = Subspace(SB, _skip_checks=True)
    TB = np.zeros((n, n - k + 1))
    TB[I, 0] = s[I] / np.sqrt(k)
    rest = [i for i in range(n) if i not in I]
    for j, i in enumerate(rest):
        TB[i, 1 + j] = 1.0
    T = Subspace(TB, _skip_checks=True)
    e = s / k
    atoms = np.zeros((k + 1, n))
    for j, i in enumerate(I):
        atoms[j, i] = -k * s[i]
    ball = np.zeros((k, n))
    for j, i in enumerate(I):
        ball[j, i] = s[i]
        ball[j] -= e
    Ia = np.asarray(I, dtype=int)

    def value_fn(eta):
        return float(np.max(np.maximum(-k * s[Ia] * eta[Ia], 0.0), initial=0.0))

    antig = SubdiffGauge(S, value_fn, atoms=atoms, ball_verts=ball)
    md = ModelDecomposition(Linf(n), x, T, S, e, e.copy(), antig)
    off = [abs(x[j]) for j in range(n) if j not in I]
    gap = np.max(np.abs(x)) - (max(off) if off else 0.0)
    nu = (1.0 - delta) * gap
    return md, PsflParams(nu, 0.0, 0.0, 0.0, L1(n))


def decompose_group(x, partition, delta=0.5):
    """Decomposition of the group l1-l2 regularizer at x."""
    x = check_finite(x, "x")
    n = x.shape[0]
    if partition.n != n:
        raise ValueError("partition does not match the vector length")
    thr = SUPPORT_TOL * (1.0 + np.max(np.abs(x), initial=0.0))
    active = [b for b in partition if np.linalg.norm(x[b]) > thr]
    inactive = [b for b in partition if np.linalg.norm(x[b]) <= thr]
    act_idx = sorted(int(i) for b in active for i in b)
    ina_idx = sorted(int(i) for b in inactive for i in b)
    T = Subspace.coordinate(n, act_idx)
    S = Subspace.coordinate(n, ina_idx)
    e = np.zeros(n)
    for b in active:
        e[b] = x[b] / np.linalg.norm(x[b])

    def value_fn(eta):
        return float(max((np.linalg.norm(eta[b]) for b in inactive),
                         default=0.0))

    antig = SubdiffGauge(S, value_fn, linf2_blocks=[np.asarray(b) for b in inactive])
    md = ModelDecomposition(GroupL1L2(partition), x, T, S, e, e.copy(), antig)
    if active:
        nu = (1.0 - delta) * min(np.linalg.norm(x[b]) for b in active)
        mu = np.sqrt(2.0) / nu if nu > 0 else 0.0
    else:
        nu, mu = 0.0, 0.0
    return md, PsflParams(nu, mu, 0.0, 0.0, GroupLinf2(partition))


def decompose_polyhedral(u, mu_choice=0.5, delta=0.5):
    """Decomposition of u -> max_i (u_i)_+ on the analysis domain.

    ``mu_choice`` in (0,1) fixes the anchor subgradient of the all-nonpositive
    branch at f = (mu_choice/|I0|) * sum of active coordinate vectors; the
    scaling by |I0| keeps f in the relative interior of the subdifferential.
    """
    u = check_finite(u, "u")
    if not 0.0 < mu_choice < 1.0:
        raise ValueError("mu_choice must lie in (0, 1)")
    p = u.shape[0]
    top = np.max(u, initial=-np.inf)
    if top > 0.0:
        Ip = [int(i) for i in np.flatnonzero(u >= top * (1.0 - SATURATION_TOL))]
        k = len(Ip)
        s = np.zeros(p)
        s[Ip] = 1.0
        inner = null_space(np.ones((1, k)))
        SB = np.zeros((p, k - 1))
        SB[Ip, :] = inner
        S = Subspace(SB, _skip_checks=True)
        TB = np.zeros((p, p - k + 1))
        TB[Ip, 0] = 1.0 / np.sqrt(k)
        rest = [i for i in range(p) if i not in Ip]
        for j, i in enumerate(rest):
            TB[i, 1 + j] = 1.0
        T = Subspace(TB, _skip_checks=True)
        e = s / k
        atoms = np.zeros((k + 1, p))
        for j, i in enumerate(Ip):
            atoms[j, i] = -k
        ball = np.zeros((k, p))
        for j, i in enumerate(Ip):
            ball[j, i] = 1.0
            ball[j] -= e
        Ia = np.asarray(Ip, dtype=int)

        def value_fn(eta):
            return float(np.max(np.maximum(-k * eta[Ia], 0.0), initial=0.0))

        antig = SubdiffGauge(S, value_fn, atoms=atoms, ball_verts=ball)
        md = ModelDecomposition(_positive_part_max_gauge(p), u, T, S, e,
                                e.copy(), antig)
        below = [u[j] for j in range(p) if j not in Ip and u[j] > 0]
        gap = top - (max(below) if below else 0.0)
        nu = (1.0 - delta) * gap
        return md, PsflParams(nu, 0.0, 0.0, 0.0, L1(p))

    # all entries nonpositive; active set I0 = {i : u_i = 0}
    thr = SUPPORT_TOL * (1.0 + np.max(np.abs(u), initial=0.0))
    I0 = [int(i) for i in np.flatnonzero(u >= -thr)]
    if not I0:
        # smooth point: subdifferential is {0}
        T = Subspace.full(p)
        S = Subspace.zero(p)
        antig = SubdiffGauge(S, lambda eta: 0.0,
                             atoms=np.zeros((1, p)), ball_verts=np.zeros((1, p)))
        md = ModelDecomposition(_positive_part_max_gauge(p), u, T, S,
                                np.zeros(p), np.zeros(p), antig)
        nu = (1.0 - delta) * float(np.min(-u))
        return md, PsflParams(nu, 0.0, 0.0, 0.0, L1(p))
    k = len(I0)
    mu_eff = mu_choice / k
    Ic = [i for i in range(p) if i not in I0]
    S = Subspace.coordinate(p, I0)
    T = Subspace.coordinate(p, Ic)
    f = np.zeros(p)
    f[I0] = mu_eff
    denom = 1.0 - mu_choice        # = 1 - mu_eff * k
    atoms = np.zeros((k + 2, p))
    for j, i in enumerate(I0):
        atoms[j, i] = -1.0 / mu_eff
    atoms[k, I0] = 1.0 / denom
    ball = np.zeros((k + 1, p))
    ball[:k, :] = 0.0
    for j, i in enumerate(I0):
        ball[j, i] = 1.0
    ball -= f[None, :]
    ball[k] = -f
    I0a = np.asarray(I0, dtype=int)

    def value_fn(eta):
        lo = np.max(np.maximum(-eta[I0a] / mu_eff, 0.0), initial=0.0)
        hi = float(np.sum(eta[I0a])) / denom
        return float(max(lo, hi, 0.0))

    antig = SubdiffGauge(S, value_fn, atoms=atoms, ball_verts=ball)
    md = ModelDecomposition(_positive_part_max_gauge(p), u, T, S,
                            np.zeros(p), f, antig)
    below = [-u[j] for j in Ic]
    nu = (1.0 - delta) * (min(below) if below else 0.0)
    return md, PsflParams(nu, 0.0, 0.0, 0.0, L1(p))


def _positive_part_max_gauge(p):
    """The analysis-domain gauge u -> max_i (u_i)_+ as a PolyhedralH."""
    return PolyhedralH(np.eye(p))


# ---------------------------------------------------------------------------
# calculus rules
# ---------------------------------------------------------------------------

def precompose(md0, D, x):
    """Decomposition of J = J0(D^T .) at x from the one of J0 at u = D^T x."""
    D = check_finite(D, "D")
    x = check_finite(x, "x")
    n, p = D.shape
    if md0.ambient_dim != p:
        raise ValueError("analysis decomposition dimension mismatch")
    u = D.T @ x
    if np.linalg.norm(u - md0.x) > 1e-8 * (1.0 + np.linalg.norm(u)):
        raise ValueError("md0 is not anchored at D^T x")
    B0 = md0.S.basis
    DS = D @ B0           # n x dim(S0) (the S0-restricted analysis operator)
    T = Subspace.kernel_of(DS.T)
    S = T.complement()
    e = T.project(D @ md0.e)
    f = D @ md0.f
    DS_pinv = B0 @ svd_pinv(DS)            # maps R^n into S0 coordinates of R^p
    Z = B0 @ null_space(DS)                # basis of Ker(D_{S0}) within S0

    base = md0.antig
    if base.atoms is not None:
        atoms0 = base.atoms

        def value_fn(eta):
            q = DS_pinv @ eta
            if Z.shape[1] == 0:
                return float(np.max(atoms0 @ q, initial=0.0))
            rows = np.hstack([atoms0 @ Z, -np.ones((len(atoms0), 1))])
            rhs = -(atoms0 @ q)
            c = np.zeros(Z.shape[1] + 1)
            c[-1] = 1.0
            res = lp_solve(LpProblem(c, a_ub=rows, b_ub=rhs,
                                     bounds=[(None, None)] * Z.shape[1]
                                     + [(0, None)]))
            if res.status != OPTIMAL:
                return np.inf
            return max(float(res.value), 0.0)

        exact = True
    else:

        def value_fn(eta):
            q = DS_pinv @ eta
            return _min_over_affine(base.value, q, Z)

        exact = False

    ball = None
    if base.ball_vertices() is not None and S.dim <= MAX_ENUM_DIM and S.dim > 0:
        imgs = (D @ base.ball_vertices().T).T
        coords = imgs @ S.basis
        try:
            ball = Polytope.from_vertices(coords).vertices @ S.basis.T
        except PolytopeError:
            ball = imgs
    antig = SubdiffGauge(S, value_fn, atoms=None, ball_verts=ball, exact=exact)
    gauge = Precomposed(md0.gauge, D.T)

    def polar_fn(dS):
        return md0.antig_polar(D.T @ dS)

    return ModelDecomposition(gauge, x, T, S, e, f, antig, polar_fn=polar_fn)


def _min_over_affine(fn, q, Z, iters=400):
    """Coordinate golden-section fallback for min_w fn(q + Z w)."""
    if Z.shape[1] == 0:
        return float(fn(q))
    from scipy.optimize import minimize
    res = minimize(lambda w: fn(q + Z @ w), np.zeros(Z.shape[1]),
                   method="Nelder-Mead",
                   options={"maxiter": iters * Z.shape[1], "xatol": 1e-10,
                            "fatol": 1e-12})
    return float(res.fun)


def sum_decompositions(mdJ, mdG):
    """Decomposition of J + G from the decompositions of J and G at x."""
    if mdJ.ambient_dim != mdG.ambient_dim:
        raise ValueError("ambient dimension mismatch")
    n = mdJ.ambient_dim
    T = mdJ.T.intersection(mdG.T)
    S = T.complement()
    e = T.project(mdJ.e + mdG.e)
    f = mdJ.f + mdG.f
    BJ, BG = mdJ.S.basis, mdG.S.basis
    stacked = np.hstack([BJ, BG]) if BJ.size or BG.size else np.zeros((n, 0))
    W = mdJ.S.intersection(mdG.S).basis     # the split's degrees of freedom
    aJ, aG = mdJ.antig, mdG.antig

    def split(eta):
        c, *_ = np.linalg.lstsq(stacked, eta, rcond=None)
        eta1 = BJ @ c[:BJ.shape[1]]
        return eta1

    if aJ.atoms is not None and aG.atoms is not None:
        atJ, atG = aJ.atoms, aG.atoms

        def value_fn(eta):
            eta1 = split(eta)
            k = W.shape[1]
            rows = np.vstack([
                np.hstack([atJ @ W, -np.ones((len(atJ), 1))]),
                np.hstack([-(atG @ W), -np.ones((len(atG), 1))]),
            ])
            rhs = np.concatenate([-(atJ @ eta1), atG @ (eta - eta1)])
            c = np.zeros(k + 1)
            c[-1] = 1.0
            res = lp_solve(LpProblem(c, a_ub=rows, b_ub=rhs,
                                     bounds=[(None, None)] * k + [(0, None)]))
            if res.status != OPTIMAL:
                return np.inf
            return max(float(res.value), 0.0)

        exact = True
    else:

        def value_fn(eta):
            eta1 = split(eta)

            def cost(w):
                d = W @ w
                return max(aJ.value(mdJ.S.project(eta1 + d)),
                           aG.value(mdG.S.project(eta - eta1 - d)))

            if W.shape[1] == 0:
                return cost(np.zeros(0))
            from scipy.optimize import minimize
            res = minimize(cost, np.zeros(W.shape[1]), method="Nelder-Mead",
                           options={"xatol": 1e-10, "fatol": 1e-12})
            return float(res.fun)

        exact = False

    ball = None
    vJ, vG = aJ.ball_vertices(), aG.ball_vertices()
    if vJ is not None and vG is not None and 0 < S.dim <= MAX_ENUM_DIM:
        pts = (vJ[:, None, :] + vG[None, :, :]).reshape(-1, n) @ S.basis
        try:
            ball = Polytope.from_vertices(pts).vertices @ S.basis.T
        except PolytopeError:
            ball = None
    antig = SubdiffGauge(S, value_fn, atoms=None, ball_verts=ball, exact=exact)
    gauge = SumGauge([mdJ.gauge, mdG.gauge])

    pJ, pG = mdJ._polar_fn, mdG._polar_fn

    def polar_fn(dS):
        left = pJ(mdJ.S.project(dS)) if pJ is not None else (
            mdJ.gauge.value(mdJ.S.project(dS))
            - float(mdJ.S.project(mdJ.f) @ dS))
        right = pG(mdG.S.project(dS)) if pG is not None else (
            mdG.gauge.value(mdG.S.project(dS))
            - float(mdG.S.project(mdG.f) @ dS))
        return left + right

    md = ModelDecomposition(gauge, mdJ.x, T, S, e, f, antig, polar_fn=polar_fn)
    return md


def smooth_perturb(md, gradG):
    """Decomposition of J + G for differentiable G with gradient gradG at x.

    T, S and the subdifferential gauge are unchanged; e and f shift by the
    gradient (projected for e).
    """
    gradG = check_finite(gradG, "gradG")
    e = md.e + md.T.project(gradG)
    f = md.f + gradG
    parent = md

    def polar_fn(dS):
        return parent.antig_polar(dS)

    return ModelDecomposition(md.gauge, md.x, md.T, md.S, e, f, md.antig,
                              polar_fn=polar_fn, _skip_checks=True)


# ---------------------------------------------------------------------------
# membership and derivatives
# ---------------------------------------------------------------------------

INTERIOR, BOUNDARY, OUTSIDE = "interior", "boundary", "outside"


def subdiff_membership(md, eta, band=MEMBERSHIP_BAND):
    """Classify eta against the subdifferential at md.x.

    interior / boundary / outside per the decomposability description:
    the T-part must equal e, and the subdifferential gauge of the shifted
    S-part decides strict interiority.
    """
    eta = check_finite(eta, "eta")
    scale = 1.0 + np.max(np.abs(md.e), initial=0.0)
    if np.max(np.abs(md.T.project(eta) - md.e), initial=0.0) > band * scale:
        return OUTSIDE
    a = md.antig.value(md.S.project(eta - md.f))
    if a < 1.0 - band:
        return INTERIOR
    if a <= 1.0 + band:
        return BOUNDARY
    return OUTSIDE


def directional_derivative(md, delta):
    """One-sided derivative of the regularizer at md.x in direction delta."""
    delta = check_finite(delta, "delta")
    dT = md.T.project(delta)
    dS = md.S.project(delta)
    fS = md.S.project(md.f)
    return float(md.e @ dT) + float(fS @ dS) + md.antig_polar(delta)


# ---------------------------------------------------------------------------
# stability-parameter calculus
# ---------------------------------------------------------------------------

def psfl_sum(pJ, pG, mdJ, mdG, mdH, samples=10000):
    """Stability parameters of J + G from those of the summands.

    ``samples`` caps the sampled-lower-bound fallback of the operator
    bounds; whenever that fallback fires the result is tagged inexact.
    """
    gamma = _merge_gamma(pJ.gamma, pG.gamma)
    nu = min(pJ.nu, pG.nu)
    xi = max(pJ.xi, pG.xi)
    exact = pJ.exact and pG.exact
    mu = 0.0
    tau = pJ.tau + pG.tau
    if pJ.mu > 0.0 or pG.mu > 0.0:
        PT = mdH.T.basis @ mdH.T.basis.T
        bJ = linalg.operator_bound(PT, pJ.gamma, gamma, samples=samples)
        bG = linalg.operator_bound(PT, pG.gamma, gamma, samples=samples)
        mu = pJ.mu * bJ.value + pG.mu * bG.value
        SJ = mdH.S.intersection(mdJ.T)
        SG = mdH.S.intersection(mdG.T)
        prJ = SJ.basis @ SJ.basis.T
        prG = SG.basis @ SG.basis.T
        tJ = linalg.operator_bound(prJ, pJ.gamma, mdH.antig, samples=samples)
        tG = linalg.operator_bound(prG, pG.gamma, mdH.antig, samples=samples)
        tau += pJ.mu * tJ.value + pG.mu * tG.value
        exact = exact and all(b.exact for b in (bJ, bG, tJ, tG))
    return PsflParams(nu, mu, tau, xi, gamma, exact=exact)


def psfl_smooth_perturb(pJ, grad_lipschitz, mdJ):
    """Stability parameters after adding a smooth term with the given
    gradient Lipschitz constant."""
    gamma = _merge_gamma(pJ.gamma, L2(mdJ.ambient_dim))
    PT = mdJ.T.basis @ mdJ.T.basis.T
    exact = pJ.exact
    mu = pJ.mu
    if pJ.mu > 0.0 or grad_lipschitz > 0.0:
        b1 = linalg.operator_bound(PT, pJ.gamma, gamma)
        b2 = linalg.operator_bound(PT, L2(mdJ.ambient_dim), gamma)
        mu = pJ.mu * b1.value + grad_lipschitz * b2.value
        exact = exact and b1.exact and b2.exact
    return PsflParams(pJ.nu, mu, pJ.tau, pJ.xi, gamma, exact=exact)


def psfl_precompose(p0, D, md0, md, gamma=None, samples=10000):
    """Stability parameters of J0(D^T .) from those of J0 at D^T x."""
    n = D.shape[0]
    if gamma is None:
        gamma = Linf(n)
    nD = linalg.operator_bound(D.T, gamma, p0.gamma, samples=samples)
    exact = p0.exact and nD.exact
    if nD.value == 0.0 or not np.isfinite(nD.value):
        raise ValueError("comparison-gauge bound of D^T is degenerate")
    nu = p0.nu / nD.value
    mu = tau = xi = 0.0
    if p0.mu > 0.0 or p0.tau > 0.0 or p0.xi > 0.0:
        PT = md.T.basis @ md.T.basis.T
        b_mu = linalg.operator_bound(PT @ D, p0.gamma, gamma, samples=samples)
        mu = p0.mu * b_mu.value * nD.value
        B0 = md0.S.basis
        DS_pinv = B0 @ svd_pinv(D @ B0)
        PS = md.S.basis @ md.S.basis.T
        M = DS_pinv @ PS @ D
        b_t1 = linalg.operator_bound(M, md0.antig, md0.antig, samples=samples)
        b_t2 = linalg.operator_bound(M, p0.gamma, md0.antig, samples=samples)
        tau = (p0.tau * b_t1.value + p0.mu * b_t2.value) * nD.value
        xi = p0.xi * nD.value
        exact = exact and b_mu.exact and b_t1.exact and b_t2.exact
    return PsflParams(nu, mu, tau, xi, gamma, exact=exact)


def _merge_gamma(g1, g2):
    if g1 is g2:
        return g1
    if type(g1) is type(g2) and g1.dim == g2.dim and not isinstance(
            g1, (GroupL1L2, GroupLinf2, PolyhedralH, Precomposed)):
        return g1
    return MaxGauge([g1, g2])


# ---------------------------------------------------------------------------
# dispatcher
# ---------------------------------------------------------------------------

def decompose(gauge, x, delta=0.5):
    """Model decomposition of any supported regularizer kind at x."""
    x = np.asarray(x, dtype=float)
    if isinstance(gauge, L1):
        return decompose_l1(x, delta=delta)[0]
    if isinstance(gauge, Linf):
        return decompose_linf(x, delta=delta)[0]
    if isinstance(gauge, GroupL1L2):
        return decompose_group(x, gauge.partition, delta=delta)[0]
    if isinstance(gauge, PolyhedralH):
        md0, _ = decompose_polyhedral(gauge.H.T @ x, delta=delta)
        return precompose(md0, gauge.H, x)
    if isinstance(gauge, Precomposed):
        u = gauge.dstar @ x
        if isinstance(gauge.base, L1):
            md0, _ = decompose_l1(u, delta=delta)
        elif isinstance(gauge.base, Linf):
            md0, _ = decompose_linf(u, delta=delta)
        elif isinstance(gauge.base, GroupL1L2):
            md0, _ = decompose_group(u, gauge.base.partition, delta=delta)
        else:
            raise UnsupportedGaugeError(
                f"no decomposition for base {type(gauge.base).__name__}")
        return precompose(md0, gauge.dstar.T, x)
    if isinstance(gauge, SumGauge):
        mds = [decompose(g, x, delta=delta) for g in gauge.parts]
        md = mds[0]
        for other in mds[1:]:
            md = sum_decompositions(md, other)
        return md
    raise UnsupportedGaugeError(
        f"no decomposition for gauge kind {type(gauge).__name__}")


def tv1d_gauge(n):
    """Anisotropic 1-d total variation: sum of |x_{i+1} - x_i|."""
    dstar = np.zeros((n - 1, n))
    for i in range(n - 1):
        dstar[i, i] = -1.0
        dstar[i, i + 1] = 1.0
    return Precomposed(L1(n - 1), dstar)
