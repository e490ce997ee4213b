"""Exact polytope calculus for compact convex sets containing the origin.

Both representations are kept: vertices (V-rep) and halfspaces (H-rep,
``<normal, x> <= offset``).  Vertex enumeration from an H-rep goes through
the polar correspondence (facets of conv{a_i/b_i} are the vertices), so one
convex-hull primitive backs everything.  All enumeration is gated at
dimension <= 8; the identities verified here are dimension-free, so
low-dimensional checks suffice.
"""

import numpy as np
from scipy.spatial import ConvexHull, QhullError

from .lp import LpProblem, lp_solve, OPTIMAL

MAX_ENUM_DIM = 8
VERTEX_TOL = 1e-9


class PolytopeError(ValueError):
    pass


class UnboundedPolarError(PolytopeError):
    """Polar of a set without 0 in its interior is unbounded."""


def _dedupe_rows(rows, tol):
    rows = np.asarray(rows)
    n = len(rows)
    if n <= 1:
        return rows
    # cheap exact pass first, then a vectorized pairwise pass within tol
    _, idx = np.unique(np.round(rows / max(tol, 1e-300)).astype(np.int64),
                       axis=0, return_index=True)
    rows = rows[np.sort(idx)]
    n = len(rows)
    if n <= 1 or n > 4000:
        return rows
    d2 = np.sum((rows[:, None, :] - rows[None, :, :]) ** 2, axis=-1)
    keep = np.ones(n, dtype=bool)
    for i in range(n):
        if keep[i]:
            dup = np.flatnonzero(d2[i] <= tol * tol)
            keep[dup[dup > i]] = False
    return rows[keep]


def _hull_equations(points):
    """Facets of conv(points) as (normals, offsets) with <n,x> <= b inside."""
    points = np.asarray(points, dtype=float)
    d = points.shape[1]
    if d == 1:
        lo, hi = points.min(), points.max()
        if hi - lo <= VERTEX_TOL:
            raise PolytopeError("degenerate 1-d point set")
        return (np.array([[1.0], [-1.0]]), np.array([hi, -lo]),
                np.array([[hi], [lo]]))
    try:
        hull = ConvexHull(points)
    except QhullError:
        # near-degenerate merges: retry with joggled input (error ~1e-11,
        # well inside the 1e-9 vertex tolerance used downstream)
        try:
            hull = ConvexHull(points, qhull_options="QJ")
        except QhullError as exc:
            raise PolytopeError(f"degenerate point set for hull: {exc}") \
                from exc
    eqs = _dedupe_rows(hull.equations, 1e-9)
    normals = eqs[:, :-1]
    offsets = -eqs[:, -1]
    return normals, offsets, points[hull.vertices]


class Polytope:
    """Compact convex polytope with consistent V- and H-representations."""

    def __init__(self, vertices, normals, offsets, _skip_checks=False):
        self.vertices = np.asarray(vertices, dtype=float)
        self.normals = np.asarray(normals, dtype=float)
        self.offsets = np.asarray(offsets, dtype=float)
        if not _skip_checks:
            self._validate()

    def _validate(self):
        scale = 1.0 + np.abs(self.vertices).max(initial=0.0)
        if np.min(self.offsets, initial=0.0) < -1e-9 * scale:
            raise PolytopeError("origin violates an H-rep constraint")
        prod = self.vertices @ self.normals.T - self.offsets[None, :]
        if prod.max(initial=0.0) > 1e-8 * scale:
            raise PolytopeError("a vertex violates a halfspace")

    @property
    def dim(self):
        return self.vertices.shape[1]

    @classmethod
    def from_vertices(cls, points):
        points = np.asarray(points, dtype=float)
        if points.ndim != 2:
            raise PolytopeError("points must be 2-d")
        if points.shape[1] > MAX_ENUM_DIM:
            raise PolytopeError(
                f"polytope calculus is limited to dimension {MAX_ENUM_DIM}")
        normals, offsets, verts = _hull_equations(points)
        return cls(verts, normals, offsets)

    @classmethod
    def from_halfspaces(cls, normals, offsets):
        normals = np.asarray(normals, dtype=float)
        offsets = np.asarray(offsets, dtype=float)
        d = normals.shape[1]
        if d > MAX_ENUM_DIM:
            raise PolytopeError(
                f"polytope calculus is limited to dimension {MAX_ENUM_DIM}")
        center = np.zeros(d)
        if np.min(offsets) <= VERTEX_TOL:
            center = _chebyshev_center(normals, offsets)
        shifted = offsets - normals @ center
        if np.min(shifted) <= VERTEX_TOL:
            raise PolytopeError("H-rep has empty or lower-dimensional interior")
        # vertices of {x: <a,x> <= b'} are facet normals of conv{a_i/b'_i}
        pts = normals / shifted[:, None]
        fn, fo, _ = _hull_equations(pts)
        if np.min(fo) <= VERTEX_TOL:
            raise PolytopeError("H-rep describes an unbounded set")
        verts = fn / fo[:, None] + center[None, :]
        verts = _dedupe_rows(verts, VERTEX_TOL * (1.0 + np.abs(verts).max()))
        # prune halfspaces never tight at a vertex
        slack = offsets[:, None] - normals @ verts.T
        tight = (slack <= 1e-7 * (1.0 + np.abs(offsets)[:, None])).any(axis=1)
        return cls(verts, normals[tight], offsets[tight])

    # -- basic queries ----------------------------------------------------

    def support(self, u):
        """sup_{x in P} <u, x> from the V-rep."""
        return float(np.max(self.vertices @ np.asarray(u, dtype=float)))

    def gauge(self, x):
        """inf {t > 0 : x in t P} from the H-rep (0 must be inside)."""
        x = np.asarray(x, dtype=float)
        vals = self.normals @ x
        out = 0.0
        for a, b in zip(vals, self.offsets):
            if b <= VERTEX_TOL:
                if a > VERTEX_TOL * (1.0 + np.linalg.norm(x)):
                    return np.inf
            else:
                out = max(out, a / b)
        return out

    def contains(self, x, tol=1e-9):
        x = np.asarray(x, dtype=float)
        scale = 1.0 + np.linalg.norm(x)
        return bool(np.all(self.normals @ x <= self.offsets + tol * scale))

    def scale(self, rho):
        if rho <= 0:
            raise PolytopeError("scale factor must be positive")
        return Polytope(self.vertices * rho, self.normals, self.offsets * rho,
                        _skip_checks=True)

    # -- calculus ---------------------------------------------------------

    def polar(self):
        """Polar polytope; requires 0 in the interior."""
        norms = np.linalg.norm(self.normals, axis=1)
        if np.min(self.offsets / np.maximum(norms, 1e-300)) <= VERTEX_TOL:
            raise UnboundedPolarError(
                "0 is not interior; the polar set is unbounded")
        pts = self.normals / self.offsets[:, None]
        return Polytope.from_vertices(pts)

    def intersection(self, other):
        return Polytope.from_halfspaces(
            np.vstack([self.normals, other.normals]),
            np.concatenate([self.offsets, other.offsets]))

    def minkowski_sum(self, other):
        pts = (self.vertices[:, None, :] + other.vertices[None, :, :])
        return Polytope.from_vertices(pts.reshape(-1, self.dim))

    def linear_image(self, D):
        """Image polytope {D v : v in P}; target space must be filled."""
        D = np.asarray(D, dtype=float)
        return Polytope.from_vertices(self.vertices @ D.T)

    def to_json_dict(self):
        return {
            "vertices": self.vertices.tolist(),
            "halfspaces": [{"normal": n.tolist(), "offset": float(b)}
                           for n, b in zip(self.normals, self.offsets)],
        }

    @classmethod
    def from_json_dict(cls, data):
        verts = np.asarray(data["vertices"], dtype=float)
        if data.get("halfspaces"):
            normals = np.asarray([h["normal"] for h in data["halfspaces"]])
            offsets = np.asarray([h["offset"] for h in data["halfspaces"]])
            return cls(verts, normals, offsets)
        return cls.from_vertices(verts)

    def __repr__(self):
        return (f"Polytope(dim={self.dim}, vertices={len(self.vertices)}, "
                f"halfspaces={len(self.normals)})")


def _chebyshev_center(normals, offsets):
    """Interior point maximizing distance to all facets (an LP)."""
    d = normals.shape[1]
    norms = np.linalg.norm(normals, axis=1)
    c = np.zeros(d + 1)
    c[-1] = -1.0
    a_ub = np.hstack([normals, norms[:, None]])
    res = lp_solve(LpProblem(c, a_ub=a_ub, b_ub=offsets,
                             bounds=[(None, None)] * d + [(0, None)]))
    if res.status != OPTIMAL or res.x[-1] <= VERTEX_TOL:
        raise PolytopeError("H-rep has empty interior")
    return res.x[:d]


def polar_set(P):
    """Polar polytope of P (bounded iff 0 is interior to P)."""
    return P.polar()


def polytope_intersection_polar(P1, P2):
    """conv(P1_polar ∪ P2_polar); equals the polar of P1 ∩ P2."""
    Q1, Q2 = P1.polar(), P2.polar()
    return Polytope.from_vertices(np.vstack([Q1.vertices, Q2.vertices]))


def minkowski_sum_gauge(g1_ball, g2_ball, x):
    """Gauge of g1_ball + g2_ball at x via the min-max split (an LP).

    Solves min_z max(gauge1(z), gauge2(x - z)); equals the gauge of the
    Minkowski-sum polytope.
    """
    x = np.asarray(x, dtype=float)
    d = g1_ball.dim
    # variables (z, t): <a, z> <= t b for ball 1, <a, x - z> <= t b for ball 2
    rows = []
    rhs = []
    for a, b in zip(g1_ball.normals, g1_ball.offsets):
        rows.append(np.concatenate([a, [-b]]))
        rhs.append(0.0)
    for a, b in zip(g2_ball.normals, g2_ball.offsets):
        rows.append(np.concatenate([-a, [-b]]))
        rhs.append(-float(a @ x))
    c = np.zeros(d + 1)
    c[-1] = 1.0
    res = lp_solve(LpProblem(c, a_ub=np.asarray(rows), b_ub=np.asarray(rhs),
                             bounds=[(None, None)] * d + [(0, None)]))
    if res.status != OPTIMAL:
        return np.inf
    return float(res.value)


def linear_image_gauge(C, D, x):
    """Gauge of the image polytope D(C) at x, by LP over the kernel of D.

    Evaluates inf {gauge_C(D^+ x + z) : z in Ker(D)}; returns +inf when x is
    not in the image of D.
    """
    from .linalg import svd_pinv, null_space
    D = np.asarray(D, dtype=float)
    if D.ndim == 1:
        D = D[None, :]
    x = np.atleast_1d(np.asarray(x, dtype=float))
    q = svd_pinv(D) @ x
    if np.linalg.norm(D @ q - x) > 1e-9 * (1.0 + np.linalg.norm(x)):
        return np.inf
    Z = null_space(D)
    k = Z.shape[1]
    # variables (w, t): <a, q + Z w> <= t b
    rows = np.hstack([C.normals @ Z, -C.offsets[:, None]])
    rhs = -C.normals @ q
    c = np.zeros(k + 1)
    c[-1] = 1.0
    res = lp_solve(LpProblem(c, a_ub=rows, b_ub=rhs,
                             bounds=[(None, None)] * k + [(0, None)]))
    if res.status != OPTIMAL:
        return np.inf
    return float(res.value)


def _chebyshev_grid(n):
    k = np.arange(n)
    return 0.5 * (1.0 - np.cos(np.pi * k / (n - 1)))


def inverse_sum_set(Q1, Q2):
    """Inverse sum of Q1 and Q2 as a polytope (both need 0 interior).

    Uses the identity gauge(Q1 inv-sum Q2) = gauge(Q1) + gauge(Q2) together
    with max_i f_i + max_j g_j = max_{ij} (f_i + g_j): the set is exactly
    {x : <a_i/b_i + c_j/d_j, x> <= 1 for all facet pairs}.
    """
    if np.min(Q1.offsets) <= VERTEX_TOL or np.min(Q2.offsets) <= VERTEX_TOL:
        raise UnboundedPolarError("inverse sum needs 0 interior to both sets")
    A = Q1.normals / Q1.offsets[:, None]
    C = Q2.normals / Q2.offsets[:, None]
    pairs = (A[:, None, :] + C[None, :, :]).reshape(-1, Q1.dim)
    return Polytope.from_halfspaces(pairs, np.ones(len(pairs)))


def inverse_sum_polar_check(P1, P2, directions=200, grid=129, tol=1e-5, seed=0,
                            method="gauge-sum"):
    """Check (P1 + P2)_polar equals the inverse sum of the polars.

    Support functions of both sides are compared on random directions to
    ``tol`` (relative).  ``method`` selects how the right-hand side is
    evaluated: "gauge-sum" solves one exact LP per direction; "rho-grid"
    builds sup over a Chebyshev rho-grid of rho*Q1 ∩ (1-rho)*Q2 sections
    with golden-section refinement of the (concave in rho) bracket.
    Returns (passed, worst_gap).
    """
    lhs = P1.minkowski_sum(P2).polar()
    Q1, Q2 = P1.polar(), P2.polar()
    rng = np.random.default_rng(seed)
    U = rng.standard_normal((directions, P1.dim))
    U /= np.linalg.norm(U, axis=1, keepdims=True)

    rhos = _chebyshev_grid(grid)
    if method == "gauge-sum":
        pts = inverse_sum_set(Q1, Q2).vertices

    ok = True
    worst = 0.0
    for u in U:
        target = lhs.support(u)
        if method == "gauge-sum":
            got = float(np.max(pts @ u))
        else:
            vals = [_section_support(Q1, Q2, rho, u) for rho in rhos]
            k = int(np.argmax(vals))
            lo = rhos[max(k - 1, 0)]
            hi = rhos[min(k + 1, len(rhos) - 1)]
            got = max(vals[k], _golden_max(
                lambda rho: _section_support(Q1, Q2, rho, u), lo, hi,
                iters=24))
        gap = abs(got - target)
        worst = max(worst, gap)
        if gap > tol * (1.0 + abs(target)):
            ok = False
    return ok, worst


def _golden_max(fn, lo, hi, iters=40):
    phi = (np.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c = b - phi * (b - a)
    d = a + phi * (b - a)
    fc, fd = fn(c), fn(d)
    for _ in range(iters):
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - phi * (b - a)
            fc = fn(c)
        else:
            a, c, fc = c, d, fd
            d = a + phi * (b - a)
            fd = fn(d)
    return max(fc, fd)


def _section_support(Q1, Q2, rho, u):
    d = Q1.dim
    a_ub = np.vstack([Q1.normals, Q2.normals])
    b_ub = np.concatenate([rho * Q1.offsets, (1.0 - rho) * Q2.offsets])
    res = lp_solve(LpProblem(-np.asarray(u, dtype=float), a_ub=a_ub, b_ub=b_ub,
                             bounds=[(None, None)] * d))
    if res.status != OPTIMAL:
        return -np.inf
    return -res.value


def random_polytope(dim, n_points=None, seed=0):
    """Random full-dimensional polytope with 0 strictly inside."""
    rng = np.random.default_rng(seed)
    if n_points is None:
        n_points = 3 * dim + 4
    pts = rng.standard_normal((n_points, dim))
    pts = np.vstack([pts, -0.7 * pts])
    return Polytope.from_vertices(pts)
