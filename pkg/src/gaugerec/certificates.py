"""Dual certificates and recovery criteria.

Given measurements Phi and a model decomposition at a candidate point, this
module evaluates the minimal-norm precertificate, the irrepresentability
criterion IC, first-order (and uniqueness) checks for the penalized and
equality-constrained problems, a sampling-based falsifier of the strong
null-space property, and the constants that certify a regularization-
parameter range for stable model selection.
"""

import numpy as np

from .linalg import (check_finite, svd_pinv, null_space,
                     restricted_injectivity, operator_bound, OperatorBound)
from .lp import LpProblem, lp_solve, OPTIMAL
from .model import directional_derivative
from .gauges import L2

IC_MARGIN = 1e-9

UNIQUE_OPTIMAL = "unique_optimal"
OPTIMAL_MAYBE_NONUNIQUE = "optimal_maybe_nonunique"
NOT_OPTIMAL = "not_optimal"


class RestrictedInjectivityError(ValueError):
    """Phi is not injective on the model subspace; certificates undefined."""


class CertificateReport:
    def __init__(self, alpha_f, ic_value, restricted_injective, identifiable,
                 method):
        self.alpha_f = alpha_f
        self.ic_value = float(ic_value)
        self.restricted_injective = bool(restricted_injective)
        self.identifiable = bool(identifiable)
        self.method = method

    def to_json_dict(self):
        return {
            "ic": self.ic_value,
            "identifiable": self.identifiable,
            "restricted_injective": self.restricted_injective,
            "alpha_f": [] if self.alpha_f is None else list(map(float, self.alpha_f)),
            "method": self.method,
        }

    def __repr__(self):
        return (f"CertificateReport(ic={self.ic_value:.6g}, "
                f"identifiable={self.identifiable}, method={self.method!r})")


def linearized_precertificate(Phi, md):
    """Minimal Euclidean-norm alpha with Phi_T^* alpha = e."""
    Phi = check_finite(Phi, "Phi")
    if not restricted_injectivity(Phi, md.T):
        raise RestrictedInjectivityError(
            "Ker(Phi) meets the model subspace; no closed-form precertificate")
    M = Phi @ md.T.basis
    target = md.T.coords(md.e)
    alpha, *_ = np.linalg.lstsq(M.T, target, rcond=None)
    return alpha


def irrepresentability(Phi, md):
    """Evaluate IC at md.x and package the verdict.

    identifiable is asserted only with the exact subdifferential-gauge
    evaluator and a strict margin below one.
    """
    Phi = check_finite(Phi, "Phi")
    if not restricted_injectivity(Phi, md.T):
        raise RestrictedInjectivityError("restricted injectivity fails")
    alpha = linearized_precertificate(Phi, md)
    v = md.S.project(Phi.T @ alpha - md.f)
    ic = md.antig.value(v)
    method = "exact" if md.antig.exact else "approximate"
    identifiable = bool(md.antig.exact and ic < 1.0 - IC_MARGIN)
    return CertificateReport(alpha, ic, True, identifiable, method)


def check_noisy_optimality(Phi, y, lam, x, md=None, gauge=None,
                           eq_tol=1e-7, strict_margin=1e-9):
    """First-order classification of x for the penalized problem.

    Needs either the model decomposition at x or, for x = 0, the regularizer
    itself (the zero condition is a polar-ball membership).
    """
    Phi = check_finite(Phi, "Phi")
    y = check_finite(y, "y")
    x = check_finite(x, "x")
    if lam <= 0:
        raise ValueError("lam must be positive")
    r = y - Phi @ x
    if md is None:
        if gauge is None or np.linalg.norm(x) > 0:
            raise ValueError("need md, or gauge together with x = 0")
        pol = gauge.polar(Phi.T @ r / lam)
        if pol < 1.0 - strict_margin:
            return UNIQUE_OPTIMAL if Phi.shape[1] <= np.linalg.matrix_rank(Phi) \
                else OPTIMAL_MAYBE_NONUNIQUE
        if pol <= 1.0 + strict_margin:
            return OPTIMAL_MAYBE_NONUNIQUE
        return NOT_OPTIMAL
    scale = (1.0 + lam) * (1.0 + np.max(np.abs(md.e), initial=0.0))
    eq_res = np.max(np.abs(md.T.coords(Phi.T @ r) - lam * md.T.coords(md.e)),
                    initial=0.0)
    if eq_res > eq_tol * scale:
        return NOT_OPTIMAL
    slack = md.antig.value(md.S.project(Phi.T @ r / lam - md.f))
    # the inequality side is accepted at the measurement tolerance; the
    # strict margin only gates the uniqueness claim
    if slack > 1.0 + eq_tol:
        return NOT_OPTIMAL
    if slack < 1.0 - strict_margin and restricted_injectivity(Phi, md.T):
        return UNIQUE_OPTIMAL
    return OPTIMAL_MAYBE_NONUNIQUE


def check_noiseless_optimality(Phi, y, x, md, feas_tol=1e-8,
                               strict_margin=1e-9, slack_tol=1e-7):
    """First-order classification of x for the equality-constrained problem.

    Tries the minimal-norm dual vector first; if that certificate is not
    strictly inside, searches the whole dual affine set by LP (support-form
    subdifferential gauges only).  ``slack_tol`` accepts the inequality
    side; ``strict_margin`` gates the uniqueness claim.
    """
    Phi = check_finite(Phi, "Phi")
    y = check_finite(y, "y")
    x = check_finite(x, "x")
    if np.linalg.norm(Phi @ x - y) > feas_tol * (1.0 + np.linalg.norm(y)):
        raise ValueError("x is not feasible for the equality constraint")
    M = Phi @ md.T.basis
    target = md.T.coords(md.e)
    alpha, *_ = np.linalg.lstsq(M.T, target, rcond=None)
    if np.linalg.norm(M.T @ alpha - target) > 1e-8 * (1.0 + np.linalg.norm(target)):
        return NOT_OPTIMAL  # e not reachable: no dual vector at all
    cert_ok = restricted_injectivity(Phi, md.T)
    a = md.antig.value(md.S.project(Phi.T @ alpha - md.f))
    if a < 1.0 - strict_margin:
        return UNIQUE_OPTIMAL if cert_ok else OPTIMAL_MAYBE_NONUNIQUE
    best = _min_antig_over_duals(Phi, md)
    if best is None:
        if a <= 1.0 + slack_tol:
            return OPTIMAL_MAYBE_NONUNIQUE
        return NOT_OPTIMAL
    if best < 1.0 - strict_margin:
        return UNIQUE_OPTIMAL if cert_ok else OPTIMAL_MAYBE_NONUNIQUE
    if best <= 1.0 + slack_tol:
        return OPTIMAL_MAYBE_NONUNIQUE
    return NOT_OPTIMAL


def _min_antig_over_duals(Phi, md):
    """min over alpha with Phi_T^* alpha = e of antig(P_S(Phi^* alpha - f)).

    LP when the subdifferential gauge is in support form; None otherwise.
    """
    atoms = md.antig.support_atoms()
    Q = Phi.shape[0]
    M = Phi @ md.T.basis
    target = md.T.coords(md.e)
    PS = md.S.basis @ md.S.basis.T
    shift = PS @ md.f
    if atoms is None:
        blocks = md.antig.linf2_blocks
        if blocks is None:
            return None
        from scipy.optimize import minimize

        def cost(alpha):
            v = PS @ (Phi.T @ alpha) - shift
            return max((np.linalg.norm(v[b]) for b in blocks), default=0.0)

        alpha0, *_ = np.linalg.lstsq(M.T, target, rcond=None)
        cons = {"type": "eq", "fun": lambda a: M.T @ a - target}
        res = minimize(cost, alpha0, method="SLSQP", constraints=[cons],
                       options={"maxiter": 500, "ftol": 1e-12})
        return float(res.fun) if res.success else None
    W = atoms @ PS @ Phi.T          # rows: <w_j, P_S Phi^T alpha>
    base = atoms @ shift
    rows = np.hstack([W, -np.ones((len(atoms), 1))])
    c = np.zeros(Q + 1)
    c[-1] = 1.0
    res = lp_solve(LpProblem(c, a_ub=rows, b_ub=base,
                             a_eq=np.hstack([M.T, np.zeros((M.shape[1], 1))]),
                             b_eq=target,
                             bounds=[(None, None)] * Q + [(0, None)]))
    if res.status != OPTIMAL:
        return None
    return max(float(res.value), 0.0)


def nsp_falsify(Phi, md, samples=10000, seed=0):
    """Search kernel directions violating the strong null-space property.

    Samples unit directions of Ker(Phi) (both signs) and tests the
    directional derivative; a nonpositive value exhibits a violation.  A
    ``no_violation_found`` outcome is evidence, not a certificate.
    Returns (found: bool, delta or None).
    """
    Phi = check_finite(Phi, "Phi")
    K = null_space(Phi)
    if K.shape[1] == 0:
        return False, None
    rng = np.random.default_rng(seed)
    tol = 1e-12
    for _ in range(samples):
        z = rng.standard_normal(K.shape[1])
        nz = np.linalg.norm(z)
        if nz == 0.0:
            continue
        delta = K @ (z / nz)
        if directional_derivative(md, delta) <= tol:
            return True, delta
        if directional_derivative(md, -delta) <= tol:
            return True, -delta
    return False, None


def phi_fn(u):
    """sqrt(1+u) - 1."""
    return np.sqrt(1.0 + u) - 1.0


def h_fn(beta, e_t):
    """(beta + 1/2) / (E_T beta) * phi(2 beta / (beta+1)^2)."""
    return (beta + 0.5) / (e_t * beta) * phi_fn(2.0 * beta / (beta + 1.0) ** 2)


class StabilityConstants:
    """Constants certifying a regularization range for model selection.

    Operator-bound inputs: c1 = A = |(Phi_T^* Phi_T)^{-1}|_{G->G} *
    |Phi_T^*|_{l2->G}, c2 = B = Gamma(e) |(Phi_T^* Phi_T)^{-1}|_{G->G},
    c3 = |-Phi_S^* Phi_T^{+,*}|_{G->antig}, c4 = |Phi_S^* Q_T|_{l2->antig}
    with Q_T the projector onto Ker(Phi_T^*).  Derived: A_T = 2 c4,
    B_T = (A/(2 c4) + B)^{-1}, D_T = c3, E_T = c1/c4 + 2 c2, and C_x0 built
    from H and phi; C_x0 = +inf when xi = 0 and mu*c3 + tau = 0.
    """

    def __init__(self, c1, c2, c3, c4, ic_value, nu, mu, tau, xi, exact):
        self.c1, self.c2, self.c3, self.c4 = c1, c2, c3, c4
        self.A, self.B = c1, c2
        self.ic_value = ic_value
        self.nu, self.mu, self.tau, self.xi = nu, mu, tau, xi
        self.exact = exact
        self.mu_bar = mu * c3 + tau
        self.A_T = 2.0 * c4
        self.D_T = c3
        if c4 > 0:
            self.B_T = 1.0 / (c1 / (2.0 * c4) + c2) if (c1 > 0 or c2 > 0) else np.inf
            self.E_T = c1 / c4 + 2.0 * c2
        else:
            self.B_T = (1.0 / c2) if c2 > 0 else np.inf
            self.E_T = np.inf
        self.C_x0 = self._c_x0()
        one_m_ic = 1.0 - ic_value
        self.lambda_min_per_noise = (self.A_T / one_m_ic) if one_m_ic > 0 else np.inf
        self.lambda_max = nu * min(self.B_T, self.C_x0)
        if one_m_ic > 0 and np.isfinite(self.lambda_max) and self.A_T > 0:
            self.noise_budget = one_m_ic * self.lambda_max / self.A_T
        elif self.A_T == 0 and one_m_ic > 0:
            self.noise_budget = nu / (2.0 * c1) if c1 > 0 else np.inf
        else:
            self.noise_budget = 0.0

    def _c_x0(self):
        one_m_ic = 1.0 - self.ic_value
        if one_m_ic <= 0 or self.nu <= 0:
            return 0.0
        if self.xi > 0:
            if self.mu_bar <= 0 or not np.isfinite(self.E_T):
                return np.inf
            return one_m_ic / (self.xi * self.nu) * h_fn(self.mu_bar / self.xi,
                                                         self.E_T)
        if self.mu_bar > 0 and np.isfinite(self.E_T):
            # xi -> 0 limit of the quadratic range: linear-root cap
            return one_m_ic / (self.E_T * self.mu_bar * self.nu)
        return np.inf

    def lambda_range(self, noise_norm):
        """Certified [lo, hi] for the given noise norm; empty -> (nan, nan)."""
        lo = self.lambda_min_per_noise * noise_norm
        hi = self.lambda_max
        if self.A_T == 0 and self.c1 > 0:
            hi = min(hi, (self.nu - self.c1 * noise_norm) / self.c2) \
                if self.c2 > 0 else hi
        if not np.isfinite(lo) or lo > hi:
            return float("nan"), float("nan")
        return float(lo), float(hi)

    def to_json_dict(self):
        keys = ("c1", "c2", "c3", "c4", "A_T", "B_T", "D_T", "E_T", "C_x0",
                "ic_value", "nu", "lambda_min_per_noise", "lambda_max",
                "noise_budget")
        out = {k: float(getattr(self, k)) for k in keys}
        out["exact"] = bool(self.exact)
        return out


def stability_constants(Phi, md, p):
    """Operator-bound constants of the model-selection guarantee.

    All four bounds must come out exact for the lambda range to be
    certified; otherwise ``exact`` is False and downstream consumers must
    treat the range as advisory.
    """
    Phi = check_finite(Phi, "Phi")
    if not restricted_injectivity(Phi, md.T):
        raise RestrictedInjectivityError("restricted injectivity fails")
    n = md.ambient_dim
    Q = Phi.shape[0]
    U = md.T.basis
    M = Phi @ U
    G = np.linalg.inv(M.T @ M)
    gamma = p.gamma
    l2_in = L2(Q)

    report = irrepresentability(Phi, md)
    ic = report.ic_value

    if md.S.dim == 0:
        zero = OperatorBound(0.0, OperatorBound.EXACT_CLOSED_FORM)
        b3 = b4 = zero
    else:
        W3 = -(md.S.basis @ md.S.basis.T) @ Phi.T @ M @ G @ U.T
        b3 = operator_bound(W3, gamma, md.antig, domain=md.T)
        Q_T = np.eye(Q) - M @ svd_pinv(M)
        W4 = (md.S.basis @ md.S.basis.T) @ Phi.T @ Q_T
        b4 = operator_bound(W4, l2_in, md.antig)
    if md.T.dim == 0:
        b1a = b1b = OperatorBound(0.0, OperatorBound.EXACT_CLOSED_FORM)
    else:
        W1 = U @ G @ U.T
        b1a = operator_bound(W1, gamma, gamma, domain=md.T)
        b1b = operator_bound(U @ U.T @ Phi.T, l2_in, gamma)
    alpha1 = gamma.value(md.e)
    c1 = b1a.value * b1b.value
    c2 = alpha1 * b1a.value
    exact = all(b.exact for b in (b1a, b1b, b3, b4)) and md.antig.exact
    return StabilityConstants(c1, c2, b3.value, b4.value, ic, p.nu, p.mu,
                              p.tau, p.xi, exact)
