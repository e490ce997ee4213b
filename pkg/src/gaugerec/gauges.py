"""Gauge functions: evaluation, polars, proximal maps.

Every gauge here is nonnegative, positively homogeneous and sublinear.
Kinds with closed-form polars (l1 <-> linf, l2 self-polar, group l1-l2 <->
blockwise linf-l2) use them; polyhedral and precomposed kinds fall back to
linear programs over their unit balls.  ``ball_vertices`` /
``kernel_directions`` / ``support_atoms`` feed the operator-bound machinery
in :mod:`gaugerec.linalg`.
"""

import numpy as np

from .linalg import check_finite, null_space, svd_pinv
from .lp import LpProblem, lp_solve, lp_minimize_linf, OPTIMAL
from .polytopes import Polytope, PolytopeError, MAX_ENUM_DIM

SIGN_VERTEX_LIMIT = 16  # 2^k vertex enumerations are refused beyond this


class UnsupportedGaugeError(NotImplementedError):
    pass


class BlockPartition:
    """Disjoint index blocks covering {0, ..., n-1}."""

    def __init__(self, blocks, n):
        blocks = [np.asarray(sorted(b), dtype=int) for b in blocks]
        seen = np.concatenate(blocks) if blocks else np.array([], dtype=int)
        if len(np.unique(seen)) != len(seen):
            raise ValueError("blocks are not disjoint")
        if len(seen) != n or (len(seen) and (seen.min() < 0 or seen.max() >= n)):
            raise ValueError("blocks do not cover the index range")
        self.blocks = blocks
        self.n = n

    def __len__(self):
        return len(self.blocks)

    def __iter__(self):
        return iter(self.blocks)


def _sign_patterns(k):
    if k > SIGN_VERTEX_LIMIT:
        return None
    if k == 0:
        return np.zeros((1, 0))
    span = np.array(np.meshgrid(*([[-1.0, 1.0]] * k), indexing="ij"))
    return span.reshape(k, -1).T


class Gauge:
    """Base class; subclasses implement ``value`` and whatever else they can."""

    def __init__(self, dim):
        self.dim = int(dim)

    # -- required ----------------------------------------------------------

    def value(self, x):
        raise NotImplementedError

    # -- optional capabilities ----------------------------------------------

    def polar(self, u):
        raise UnsupportedGaugeError(
            f"{type(self).__name__} has no supported polar evaluation")

    def prox(self, lam, v):
        raise UnsupportedGaugeError(
            f"{type(self).__name__} has no proximal map")

    def ball_vertices(self, domain=None):
        """Vertices of {x in domain: value(x) <= 1}, or None if unavailable."""
        hrep = self._ball_halfspaces()
        if hrep is None:
            return None
        return _section_vertices(hrep, self.dim, domain)

    def _ball_halfspaces(self):
        """(normals, offsets) of the unit ball, or None if not polytopal."""
        return None

    def support_atoms(self):
        """Rows w with value(v) = max_j <w_j, v> on the domain, or None."""
        return None

    def kernel_directions(self, domain=None):
        """Generators of {value = 0} (possibly a cone), restricted to domain."""
        return _restrict_directions(np.zeros((0, self.dim)), domain)

    is_euclidean = False

    def _check(self, x):
        x = check_finite(x, "x")
        if x.shape[0] != self.dim:
            raise ValueError(f"expected length {self.dim}, got {x.shape[0]}")
        return x


def _restrict_directions(dirs, domain):
    if domain is None or len(dirs) == 0:
        return dirs
    kept = [d for d in dirs if domain.contains(d)]
    return np.asarray(kept) if kept else np.zeros((0, dirs.shape[1] if dirs.ndim > 1 else 0))


def _section_vertices(hrep, dim, domain):
    """Vertices of an H-rep ball intersected with a subspace."""
    normals, offsets = hrep
    if domain is None:
        if dim > MAX_ENUM_DIM:
            return None
        try:
            return Polytope.from_halfspaces(normals, offsets).vertices
        except PolytopeError:
            return None
    if domain.dim == 0:
        return np.zeros((1, dim))
    if domain.dim > MAX_ENUM_DIM:
        return None
    B = domain.basis
    try:
        sect = Polytope.from_halfspaces(normals @ B, offsets)
    except PolytopeError:
        return None
    return sect.vertices @ B.T


class L1(Gauge):
    """Sum of absolute values."""

    def value(self, x):
        return float(np.sum(np.abs(self._check(x))))

    def polar(self, u):
        return float(np.max(np.abs(self._check(u)), initial=0.0))

    def prox(self, lam, v):
        v = self._check(v)
        return np.sign(v) * np.maximum(np.abs(v) - lam, 0.0)

    def ball_vertices(self, domain=None):
        if domain is None or domain.coord_idx is not None:
            idx = range(self.dim) if domain is None else domain.coord_idx
            out = []
            for i in idx:
                e = np.zeros(self.dim)
                e[i] = 1.0
                out.extend([e, -e])
            return np.asarray(out) if out else np.zeros((1, self.dim))
        return super().ball_vertices(domain)

    def _ball_halfspaces(self):
        S = _sign_patterns(self.dim)
        if S is None:
            return None
        return S, np.ones(len(S))


class L2(Gauge):
    """Euclidean norm."""

    is_euclidean = True

    def value(self, x):
        return float(np.linalg.norm(self._check(x)))

    def polar(self, u):
        return float(np.linalg.norm(self._check(u)))

    def support_atoms(self):
        return None


class Linf(Gauge):
    """Max absolute entry."""

    def value(self, x):
        return float(np.max(np.abs(self._check(x)), initial=0.0))

    def polar(self, u):
        return float(np.sum(np.abs(self._check(u))))

    def prox(self, lam, v):
        v = self._check(v)
        return v - project_l1_ball(v, lam)

    def support_atoms(self):
        atoms = np.vstack([np.eye(self.dim), -np.eye(self.dim)])
        return atoms

    def ball_vertices(self, domain=None):
        if domain is None or domain.coord_idx is not None:
            idx = list(range(self.dim)) if domain is None else list(domain.coord_idx)
            S = _sign_patterns(len(idx))
            if S is None:
                return None
            out = np.zeros((len(S), self.dim))
            out[:, idx] = S
            return out
        return super().ball_vertices(domain)

    def _ball_halfspaces(self):
        eye = np.eye(self.dim)
        return np.vstack([eye, -eye]), np.ones(2 * self.dim)


class GroupL1L2(Gauge):
    """Sum over blocks of block Euclidean norms."""

    def __init__(self, partition):
        super().__init__(partition.n)
        self.partition = partition

    def value(self, x):
        x = self._check(x)
        return float(sum(np.linalg.norm(x[b]) for b in self.partition))

    def polar(self, u):
        u = self._check(u)
        return float(max((np.linalg.norm(u[b]) for b in self.partition),
                         default=0.0))

    def prox(self, lam, v):
        v = self._check(v)
        out = v.copy()
        for b in self.partition:
            nb = np.linalg.norm(v[b])
            out[b] = 0.0 if nb <= lam else v[b] * (1.0 - lam / nb)
        return out


class PolyhedralH(Gauge):
    """max_i (<x, h_i>)_+ for directions h_i given as columns of H."""

    def __init__(self, H):
        H = check_finite(H, "H")
        super().__init__(H.shape[0])
        self.H = H
        self._ball_cache = None

    def value(self, x):
        x = self._check(x)
        return float(np.max(self.H.T @ x, initial=0.0))

    def polar(self, u):
        """Support function of the unit ball {x : H^T x <= 1} (an LP)."""
        u = self._check(u)
        ball = self._bounded_ball()
        if ball is not None:
            return ball.support(u)
        res = lp_solve(LpProblem(-u, a_ub=self.H.T, b_ub=np.ones(self.H.shape[1]),
                                 bounds=[(None, None)] * self.dim))
        if res.status != OPTIMAL:
            return np.inf
        return -float(res.value)

    def _bounded_ball(self):
        if self._ball_cache is None:
            if self.dim > MAX_ENUM_DIM:
                self._ball_cache = (None,)
            else:
                try:
                    self._ball_cache = (Polytope.from_halfspaces(
                        self.H.T, np.ones(self.H.shape[1])),)
                except PolytopeError:
                    self._ball_cache = (None,)
        return self._ball_cache[0]

    def _ball_halfspaces(self):
        return self.H.T, np.ones(self.H.shape[1])

    def ball_vertices(self, domain=None):
        if domain is None:
            ball = self._bounded_ball()
            return None if ball is None else ball.vertices
        return super().ball_vertices(domain)

    def kernel_directions(self, domain=None):
        # kernel cone {x : H^T x <= 0}; generators via a boxed section
        lin = null_space(self.H.T)
        dirs = [v for v in lin.T] + [-v for v in lin.T]
        if self.dim <= MAX_ENUM_DIM:
            eye = np.eye(self.dim)
            try:
                box = Polytope.from_halfspaces(
                    np.vstack([self.H.T, eye, -eye]),
                    np.concatenate([np.zeros(self.H.shape[1]),
                                    np.ones(2 * self.dim)]))
                for v in box.vertices:
                    if np.linalg.norm(v) > 1e-7:
                        dirs.append(v)
            except PolytopeError:
                pass
        out = np.asarray(dirs) if dirs else np.zeros((0, self.dim))
        return _restrict_directions(out, domain)


class Precomposed(Gauge):
    """base(dstar @ x): analysis-type gauge built from a base gauge."""

    def __init__(self, base, dstar):
        dstar = check_finite(dstar, "dstar")
        if dstar.shape[0] != base.dim:
            raise ValueError("dstar rows must match the base gauge dimension")
        super().__init__(dstar.shape[1])
        self.base = base
        self.dstar = dstar
        self._d = dstar.T             # maps analysis coefficients back
        self._d_pinv = svd_pinv(self._d)
        self._d_null = null_space(self._d)

    def value(self, x):
        return self.base.value(self.dstar @ self._check(x))

    def polar(self, u):
        """gauge of the image of the base polar ball (LP over Ker)."""
        u = self._check(u)
        q = self._d_pinv @ u
        if np.linalg.norm(self._d @ q - u) > 1e-9 * (1.0 + np.linalg.norm(u)):
            return np.inf
        Z = self._d_null
        if Z.shape[1] == 0:
            return self.base.polar(q)
        if isinstance(self.base, L1):
            val, _ = lp_minimize_linf(Z, q)
            return val
        if isinstance(self.base, Linf):
            # min ||q + Z w||_1
            r, k = Z.shape
            c = np.concatenate([np.zeros(k), np.ones(r)])
            a_ub = np.vstack([np.hstack([Z, -np.eye(r)]),
                              np.hstack([-Z, -np.eye(r)])])
            b_ub = np.concatenate([-q, q])
            res = lp_solve(LpProblem(c, a_ub=a_ub, b_ub=b_ub,
                                     bounds=[(None, None)] * k + [(0, None)] * r))
            return float(res.value)
        raise UnsupportedGaugeError(
            f"polar of Precomposed({type(self.base).__name__}) with a "
            "nontrivial kernel is not supported")

    def _ball_halfspaces(self):
        hrep = self.base._ball_halfspaces()
        if hrep is None:
            return None
        normals, offsets = hrep
        return normals @ self.dstar, offsets

    def kernel_directions(self, domain=None):
        base_kernel = self.base.kernel_directions()
        if len(base_kernel) == 0:
            lin = null_space(self.dstar)
            dirs = np.vstack([lin.T, -lin.T]) if lin.shape[1] else np.zeros((0, self.dim))
            return _restrict_directions(dirs, domain)
        raise UnsupportedGaugeError(
            "kernel of a precomposed gauge over a non-coercive base")


class SumGauge(Gauge):
    """Pointwise sum of gauges on a common space."""

    def __init__(self, parts):
        dims = {g.dim for g in parts}
        if len(dims) != 1:
            raise ValueError("summands live on different spaces")
        super().__init__(dims.pop())
        self.parts = list(parts)

    def value(self, x):
        x = self._check(x)
        return float(sum(g.value(x) for g in self.parts))

    def polar(self, u):
        """inf over splits of max of part polars (LP for polytopal parts)."""
        u = self._check(u)
        hreps = [g._ball_halfspaces() for g in self.parts]
        if any(h is None for h in hreps):
            raise UnsupportedGaugeError("polar of a sum of non-polytopal gauges")
        # polar ball of the sum = Minkowski sum of part polar balls;
        # gauge via min_z max splits, LP in (z_2..z_k, t)
        k = len(self.parts)
        n = self.dim
        # variables: z_1..z_{k-1} (n each) and t; part k gets the remainder
        rows = []
        rhs = []
        for j, g in enumerate(self.parts):
            # polar gauge of part j at its share <= t; polar ball of g has
            # H-rep from the ball vertices of g (support form)
            verts = g.ball_vertices()
            if verts is None:
                raise UnsupportedGaugeError("sum polar needs ball vertices")
            share = np.zeros((len(verts), (k - 1) * n + 1))
            if j < k - 1:
                share[:, j * n:(j + 1) * n] = verts
            else:
                for i in range(k - 1):
                    share[:, i * n:(i + 1) * n] = -verts
            share[:, -1] = -1.0
            rows.append(share)
            rhs.append(np.zeros(len(verts)) if j < k - 1 else -(verts @ u))
        c = np.zeros((k - 1) * n + 1)
        c[-1] = 1.0
        res = lp_solve(LpProblem(c, a_ub=np.vstack(rows),
                                 b_ub=np.concatenate(rhs),
                                 bounds=[(None, None)] * ((k - 1) * n) + [(0, None)]))
        if res.status != OPTIMAL:
            return np.inf
        return float(res.value)

    def _ball_halfspaces(self):
        # {x: sum of gauges <= 1}: pairwise-summed scaled normals, as in the
        # inverse-sum construction
        hreps = [g._ball_halfspaces() for g in self.parts]
        if any(h is None for h in hreps):
            return None
        scaled = []
        for normals, offsets in hreps:
            if np.min(offsets) <= 1e-12:
                return None
            scaled.append(normals / offsets[:, None])
        acc = scaled[0]
        for nxt in scaled[1:]:
            acc = (acc[:, None, :] + nxt[None, :, :]).reshape(-1, self.dim)
        return acc, np.ones(len(acc))

    def kernel_directions(self, domain=None):
        outs = [g.kernel_directions() for g in self.parts]
        if all(len(o) == 0 for o in outs):
            return _restrict_directions(np.zeros((0, self.dim)), domain)
        raise UnsupportedGaugeError("kernel of a sum with non-coercive parts")


class Restricted(Gauge):
    """base on a subspace S, +inf off S (membership up to a relative tol)."""

    def __init__(self, base, S):
        if S.ambient_dim != base.dim:
            raise ValueError("subspace ambient dim mismatch")
        super().__init__(base.dim)
        self.base = base
        self.S = S

    def value(self, x):
        x = self._check(x)
        if not self.S.contains(x, tol=1e-9 * (1.0 + np.linalg.norm(x))):
            return np.inf
        return self.base.value(x)

    def polar(self, u):
        """Support of (base ball ∩ S) at u."""
        u = self._check(u)
        if isinstance(self.base, L2):
            return float(np.linalg.norm(self.S.project(u)))
        verts = self.base.ball_vertices(self.S)
        if verts is None:
            raise UnsupportedGaugeError("polar of this restriction")
        return float(np.max(verts @ u, initial=0.0))

    def ball_vertices(self, domain=None):
        dom = self.S if domain is None else _subspace_meet(self.S, domain)
        return self.base.ball_vertices(dom)

    def kernel_directions(self, domain=None):
        dirs = self.base.kernel_directions(self.S)
        return _restrict_directions(dirs, domain)


class MaxGauge(Gauge):
    """Pointwise max of gauges; the comparison gauge of summed regularizers."""

    def __init__(self, parts):
        dims = {g.dim for g in parts}
        if len(dims) != 1:
            raise ValueError("parts live on different spaces")
        super().__init__(dims.pop())
        self.parts = list(parts)

    def value(self, x):
        x = self._check(x)
        return float(max(g.value(x) for g in self.parts))

    def polar(self, u):
        raise UnsupportedGaugeError("polar of a max of gauges")

    def _ball_halfspaces(self):
        hreps = [g._ball_halfspaces() for g in self.parts]
        if any(h is None for h in hreps):
            return None
        normals = np.vstack([h[0] for h in hreps])
        offsets = np.concatenate([h[1] for h in hreps])
        return normals, offsets

    def kernel_directions(self, domain=None):
        outs = [g.kernel_directions() for g in self.parts]
        if all(len(o) == 0 for o in outs):
            return _restrict_directions(np.zeros((0, self.dim)), domain)
        raise UnsupportedGaugeError("kernel of a max with non-coercive parts")


def _subspace_meet(S1, S2):
    if S2 is None:
        return S1
    return S1.intersection(S2)


def eval_gauge(g, x):
    """Module-level alias for g.value(x)."""
    return g.value(x)


def polar_eval(g, u):
    """Module-level alias for g.polar(u)."""
    return g.polar(u)


def prox(g, lam, v):
    """Proximal map of lam * g at v (supported kinds only)."""
    if lam <= 0:
        raise ValueError("lam must be positive")
    return g.prox(lam, v)


def project_l1_ball(v, radius):
    """Exact Euclidean projection onto {z : ||z||_1 <= radius} (sort-based)."""
    v = np.asarray(v, dtype=float)
    if radius < 0:
        raise ValueError("radius must be nonnegative")
    a = np.abs(v)
    if a.sum() <= radius:
        return v.copy()
    if radius == 0.0:
        return np.zeros_like(v)
    u = np.sort(a)[::-1]
    css = np.cumsum(u)
    ks = np.arange(1, len(u) + 1)
    mask = u * ks > css - radius
    rho = int(np.max(np.flatnonzero(mask))) + 1
    theta = (css[rho - 1] - radius) / rho
    return np.sign(v) * np.maximum(a - theta, 0.0)


def project_simplex_interior(v, radius):
    """Euclidean projection onto {p : p >= 0, sum(p) <= radius}."""
    p = np.maximum(np.asarray(v, dtype=float), 0.0)
    if p.sum() <= radius:
        return p
    # project onto the simplex {p >= 0, sum = radius}
    u = np.sort(p)[::-1]
    css = np.cumsum(u) - radius
    ks = np.arange(1, len(u) + 1)
    cond = u - css / ks > 0
    rho = int(np.max(np.flatnonzero(cond))) + 1
    theta = css[rho - 1] / rho
    return np.maximum(p - theta, 0.0)
