"""Löwner and John ellipsoids, contact points, and the capped-ball test body.

An :class:`Ellipsoid` is ``{x : (x - c)^T S (x - c) <= 1}``. Löwner ellipsoids
come from Khachiyan's barycentric ascent with Todd-Yildirim away steps. John
ellipsoids of centrally symmetric bodies are polars of the Löwner ellipsoid of
the polar body.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import ConvexHull, QhullError

from .errors import InputError, NumericError, UnsupportedOperationError
from .normspace import NormModel, _facets_from_hull, unit_sphere_samples
from .operators import _jsonable
from .sip import duality_map

__all__ = [
    "Ellipsoid",
    "lowner",
    "john",
    "john_from_polar",
    "john_of_points",
    "contact_points",
    "coplanar_contacts",
    "remark_body_vertices",
    "remark_body_support",
    "remark_body_gauge",
    "remark_body_samples",
    "remark_body_polar_samples",
]

SMOOTH_SAMPLES = 4096


@dataclass
class Ellipsoid:
    center: np.ndarray
    S: np.ndarray
    info: dict = field(default_factory=dict)

    def __post_init__(self):
        self.center = np.asarray(self.center, dtype=float)
        S = np.asarray(self.S, dtype=float)
        if S.ndim != 2 or S.shape != (len(self.center), len(self.center)):
            raise InputError("S must be square and match the center")
        S = 0.5 * (S + S.T)
        if np.linalg.eigvalsh(S).min() <= 0:
            raise InputError("S must be positive definite")
        self.S = S

    @property
    def dim(self) -> int:
        return len(self.center)

    def gauge(self, x) -> np.ndarray:
        z = np.asarray(x, dtype=float) - self.center
        q = np.einsum("...i,ij,...j->...", z, self.S, z)
        return np.sqrt(np.maximum(q, 0.0))

    def support(self, u) -> np.ndarray:
        """``max_{x in E} u . x``."""
        u = np.asarray(u, dtype=float)
        w = np.linalg.solve(self.S, u.reshape(-1, self.dim).T).T.reshape(u.shape)
        return u @ self.center + np.sqrt(np.maximum(np.sum(u * w, axis=-1), 0.0))

    def semi_axes(self) -> np.ndarray:
        return np.sort(1.0 / np.sqrt(np.linalg.eigvalsh(self.S)))

    def polar(self) -> "Ellipsoid":
        if np.abs(self.center).max() > 1e-9:
            raise InputError("polar is only defined here for centered ellipsoids")
        return Ellipsoid(np.zeros(self.dim), np.linalg.inv(self.S))

    def to_dict(self) -> dict:
        d = {"center": self.center.tolist(), "S": self.S.tolist()}
        if self.info:
            d["info"] = _jsonable(self.info)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "Ellipsoid":
        try:
            return cls(d["center"], d["S"])
        except (KeyError, TypeError) as exc:
            raise InputError("ellipsoid JSON needs 'center' and 'S'") from exc


def _is_symmetric_cloud(P: np.ndarray) -> bool:
    scale = np.abs(P).max()
    key = np.round(P / scale, 9)
    a = {tuple(r) for r in key}
    return all(tuple(-r + 0.0) in a for r in key)


def _design_gap(Q: np.ndarray, u: np.ndarray):
    M = Q.T @ (u[:, None] * Q)
    g = np.einsum("ij,ij->i", Q, np.linalg.solve(M, Q.T).T)
    return g


def _khachiyan(Q: np.ndarray, eps: float, max_iter: int):
    """Todd-Yildirim ascent with away steps; ``M^{-1}`` and ``g`` updated in rank one."""
    m, d = Q.shape
    u = np.full(m, 1.0 / m)
    Minv = np.linalg.inv(Q.T @ (u[:, None] * Q))
    g = np.einsum("ij,ij->i", Q, Q @ Minv)
    for it in range(int(max_iter)):
        j = int(np.argmax(g))
        live = np.flatnonzero(u > 0)
        k = int(live[np.argmin(g[live])])
        up, down = g[j] / d - 1.0, 1.0 - g[k] / d
        if up <= eps and down <= eps:
            return u, it, True
        if up >= down:
            i, a = j, (g[j] / d - 1.0) / (g[j] - 1.0)
        elif g[k] <= 1.0:
            # log det keeps increasing all the way to u_k = 0
            i, a = k, -u[k] / (1.0 - u[k])
        else:
            i, a = k, -min((1.0 - g[k] / d) / (g[k] - 1.0), u[k] / (1.0 - u[k]))
        # M <- (1 - a) M + a q q^T
        u *= 1.0 - a
        u[i] += a
        if u[i] < 0:
            u[i] = 0.0
        w = Minv @ Q[i] / (1.0 - a)
        denom = 1.0 + a * (Q[i] @ w)
        Minv = Minv / (1.0 - a) - a * np.outer(w, w) / denom
        Qw = Q @ w
        g = g / (1.0 - a) - a * Qw**2 / denom
        if it % 500 == 499:
            # refresh to keep the rank-one updates from drifting
            Minv = np.linalg.inv(Q.T @ (u[:, None] * Q))
            g = np.einsum("ij,ij->i", Q, Q @ Minv)
    return u, int(max_iter), False


def _barrier_polish(Q: np.ndarray, eps: float, u0: np.ndarray):
    """Log-barrier Newton on ``min -log det X`` s.t. ``q_i^T X q_i <= 1``.

    Returns design weights ``u_i ~ 1 / (t s_i)`` from the central path.
    """
    m, d = Q.shape
    iu = np.triu_indices(d)
    c = np.where(iu[0] == iu[1], 1.0, 2.0)
    A = Q[:, iu[0]] * Q[:, iu[1]] * c
    Es = []
    for a, b in zip(*iu):
        E = np.zeros((d, d))
        E[a, b] = E[b, a] = 1.0
        Es.append(E)
    Es = np.array(Es)

    def unvec(x):
        X = np.zeros((d, d))
        X[iu] = x
        return X + np.triu(X, 1).T

    M0 = Q.T @ (u0[:, None] * Q)
    X = np.linalg.inv(M0) / d
    X /= (np.einsum("ij,jk,ik->i", Q, X, Q).max() * 1.001)
    x = X[iu]
    t = 1.0
    for _outer in range(60):
        for _inner in range(100):
            X = unvec(x)
            Xi = np.linalg.inv(X)
            s = 1.0 - A @ x
            grad = -t * c * Xi[iu] + A.T @ (1.0 / s)
            XE = np.einsum("ij,kjl->kil", Xi, Es)
            H = t * np.einsum("kij,lji->kl", XE, XE) + (A / s[:, None]).T @ (A / s[:, None])
            step = -np.linalg.solve(H, grad)
            dec = -grad @ step
            if dec < 1e-12:
                break
            a = 1.0
            f0 = -t * np.linalg.slogdet(X)[1] - np.log(s).sum()
            while a > 1e-12:
                xn = x + a * step
                sn = 1.0 - A @ xn
                if sn.min() > 0 and np.linalg.eigvalsh(unvec(xn)).min() > 0:
                    fn = -t * np.linalg.slogdet(unvec(xn))[1] - np.log(sn).sum()
                    if fn <= f0 - 0.25 * a * dec:
                        break
                a *= 0.5
            x = x + a * step
        s = 1.0 - A @ x
        u = 1.0 / s
        u /= u.sum()
        g = _design_gap(Q, u)
        if g.max() / d - 1.0 <= eps:
            return u, True
        t *= 10.0
    return u, False


def _d_optimal(Q: np.ndarray, eps: float, max_iter: int, switch_iter: int = 5000):
    """D-optimal design weights on the rows of ``Q``.

    Khachiyan ascent runs first; on sampled smooth bodies it can stall far
    from ``eps``, and after ``switch_iter`` steps a barrier Newton polish
    finishes the job. Either way the gap ``max g_i / d - 1`` is certified.
    """
    m, d = Q.shape
    u, it, ok = _khachiyan(Q, eps, min(max_iter, switch_iter))
    method = "khachiyan"
    if not ok:
        u, ok = _barrier_polish(Q, eps, u)
        method = "khachiyan+barrier"
    g = _design_gap(Q, u)
    gap = g.max() / d - 1.0
    if not ok and gap > eps:
        raise NumericError(f"ellipsoid iteration stalled at gap {gap:.3e}", gap)
    return u, {"iterations": it, "method": method, "gap": float(gap)}


def lowner(points, eps: float = 1e-6, max_iter: int = 100_000) -> Ellipsoid:
    """Minimum-volume ellipsoid enclosing ``points``.

    Centrally symmetric clouds are solved with the center pinned at 0; other
    clouds are lifted to ``(p, 1)``. On return every point has gauge at most
    ``sqrt(1 + eps)`` and the volume is within ``(1 + eps)^(n/2)`` of optimal.
    """
    P = np.array(points, dtype=float)
    if P.ndim != 2 or len(P) < 2:
        raise InputError("points must be an (m, n) array with m >= 2")
    if not np.all(np.isfinite(P)):
        raise InputError("points contain non-finite values")
    m, n = P.shape
    if _is_symmetric_cloud(P):
        if np.linalg.matrix_rank(P) < n:
            raise InputError("point cloud is rank deficient")
        u, stats = _d_optimal(P, eps, max_iter)
        M = P.T @ (u[:, None] * P)
        S = np.linalg.inv(M) / n
        E = Ellipsoid(np.zeros(n), S)
    else:
        Q = np.hstack([P, np.ones((m, 1))])
        if np.linalg.matrix_rank(Q) < n + 1:
            raise InputError("point cloud is affinely rank deficient")
        u, stats = _d_optimal(Q, eps * n / (n + 1), max_iter)
        c = u @ P
        M = P.T @ (u[:, None] * P) - np.outer(c, c)
        E = Ellipsoid(c, np.linalg.inv(M) / n)
    E.info = dict(stats, max_gauge=float(E.gauge(P).max()))
    return E


def john_from_polar(polar_points, eps: float = 1e-6) -> Ellipsoid:
    """John ellipsoid of a symmetric body given boundary points of its polar."""
    L = lowner(polar_points, eps)
    if np.abs(L.center).max() > 1e-9:
        raise InputError("polar cloud is not centrally symmetric")
    return Ellipsoid(np.zeros(L.dim), np.linalg.inv(L.S), {"lowner_of_polar": L.to_dict()})


def john_of_points(points, eps: float = 1e-6) -> Ellipsoid:
    """John ellipsoid of ``conv(points)`` for a symmetric cloud around 0."""
    P = np.array(points, dtype=float)
    try:
        hull = ConvexHull(P)
    except QhullError as exc:
        raise InputError(f"convex hull failed: {exc}") from exc
    return john_from_polar(_facets_from_hull(hull), eps)


def john(model: NormModel, eps: float = 1e-6, samples: int = SMOOTH_SAMPLES, seed: int = 0) -> Ellipsoid:
    """John ellipsoid of the unit ball of ``model``.

    Polytopal balls use the facet normals (the polar vertices) exactly;
    smooth balls use the duality map of ``samples`` unit vectors and are
    certified only to that resolution.
    """
    if model.kind == "polytopal":
        polar = model.facets
    elif model.is_smooth:
        X = unit_sphere_samples(model, samples, seed)
        polar = duality_map(model, X)
        polar = np.vstack([polar, -polar])
    else:
        raise UnsupportedOperationError(f"john does not support {model.kind} models")
    if np.linalg.matrix_rank(polar) < model.dim:
        raise NumericError("polar cloud is rank deficient")
    E = john_from_polar(polar, eps)
    U = unit_sphere_samples(model, 2000, seed + 1)
    E.info["min_unit_gauge"] = float(E.gauge(U).min())
    if model.kind == "polytopal":
        E.info["max_facet_support"] = float(E.support(model.facets).max())
    return E


def _cluster(X: np.ndarray, angular_tol: float) -> np.ndarray:
    reps = []
    U = X / np.linalg.norm(X, axis=1, keepdims=True)
    cos_tol = np.cos(angular_tol)
    for x, u in zip(X, U):
        if reps and np.max(np.array([r[1] for r in reps]) @ u) >= cos_tol:
            continue
        reps.append((x, u))
    return np.array([r[0] for r in reps]).reshape(-1, X.shape[1])


def contact_points(body, E: Ellipsoid, tol: float = 1e-6, samples: int = SMOOTH_SAMPLES,
                   angular_tol: float = 1e-3, seed: int = 0) -> np.ndarray:
    """Common boundary points of ``E`` and the body, one representative per angular cluster.

    ``body`` is a :class:`NormModel` or an ``(m, n)`` array of boundary points
    of the body. Polytopal models use exact facet tangency: facet ``a`` touches
    ``E`` iff the support of ``E`` in direction ``a`` equals 1.
    """
    if isinstance(body, NormModel):
        if body.kind == "polytopal":
            A = body.facets
            s = E.support(A)
            hit = np.abs(s - 1.0) <= tol
            X = np.linalg.solve(E.S, A[hit].T).T / (s[hit] - A[hit] @ E.center)[:, None] + E.center
        else:
            X = unit_sphere_samples(body, samples, seed)
            X = X[np.abs(E.gauge(X) - 1.0) <= tol]
    else:
        X = np.array(body, dtype=float)
        if X.ndim != 2 or X.shape[1] != E.dim:
            raise InputError("boundary points must be an (m, n) array")
        X = X[np.abs(E.gauge(X) - 1.0) <= tol]
    if len(X) == 0:
        return np.zeros((0, E.dim))
    return _cluster(X, angular_tol)


def coplanar_contacts(points, tol: float = 1e-7, min_count: int = 64, trials: int = 4000, seed: int = 0) -> dict:
    """Find the plane holding the most points (sampled triples, then refit).

    Returns ``{"count", "normal", "offset", "through_origin", "radius"}``;
    ``radius`` is the radius of the circle through the coplanar points when
    they are concyclic.
    """
    X = np.asarray(points, dtype=float)
    out = {"count": 0, "normal": None, "offset": None, "through_origin": False, "radius": None,
           "found": False, "min_count": int(min_count)}
    if len(X) < 3 or X.shape[1] != 3:
        return out
    rng = np.random.default_rng(seed)
    best = (0, None, None)
    for _ in range(int(trials)):
        i, j, k = rng.choice(len(X), 3, replace=False)
        nrm = np.cross(X[j] - X[i], X[k] - X[i])
        ln = np.linalg.norm(nrm)
        if ln < 1e-6:
            continue
        nrm /= ln
        off = nrm @ X[i]
        cnt = int(np.count_nonzero(np.abs(X @ nrm - off) <= tol))
        if cnt > best[0]:
            best = (cnt, nrm, off)
    cnt, nrm, off = best
    if nrm is None:
        return out
    # refit on the inliers and recount
    inl = X[np.abs(X @ nrm - off) <= tol]
    c = inl.mean(axis=0)
    _, _, Vt = np.linalg.svd(inl - c)
    nrm = Vt[-1] * np.sign(Vt[-1] @ nrm)
    off = float(nrm @ c)
    if off < 0:
        nrm, off = -nrm, -off
    on = X[np.abs(X @ nrm - off) <= tol]
    if len(on) >= cnt:
        cnt = len(on)
    else:
        on = inl
    foot = off * nrm
    r = np.linalg.norm(on - foot, axis=1)
    out.update(
        count=int(cnt),
        normal=nrm.tolist(),
        offset=float(off),
        through_origin=bool(abs(off) <= tol),
        radius=float(r.mean()) if np.ptp(r) <= 1e-6 else None,
        found=bool(cnt >= min_count),
    )
    return out


def remark_body_vertices(n: int, eps: float) -> np.ndarray:
    """The ``2n``-gon in the ``xy``-plane circumscribed about the circle of radius ``1 + eps``."""
    n = int(n)
    if n < 3:
        raise InputError("n must be at least 3")
    if not eps > 0:
        raise InputError("eps must be positive")
    R = (1.0 + eps) / np.cos(np.pi / (2 * n))
    t = np.arange(2 * n) * np.pi / n
    return np.column_stack([R * np.cos(t), R * np.sin(t), np.zeros(2 * n)])


def remark_body_support(u, n: int, eps: float) -> np.ndarray:
    """Support function of ``conv(B u H)``: max of ``|u|`` and the vertex supports."""
    u = np.asarray(u, dtype=float)
    V = remark_body_vertices(n, eps)
    return np.maximum(np.linalg.norm(u, axis=-1), (u @ V.T).max(axis=-1))


def _gauge_one(x, V, R):
    # gauge = max{x . y : |y| <= 1, v_k . y <= 1}, by enumerating active sets
    def feasible(y):
        return np.linalg.norm(y) <= 1 + 1e-12 and np.all(V @ y <= 1 + 1e-12)

    nx = np.linalg.norm(x)
    if nx == 0:
        return 0.0
    if feasible(x / nx):
        return nx
    best = -np.inf
    rho = np.sqrt(max(1.0 - 1.0 / R**2, 0.0))
    m = len(V)
    for k in range(m):
        v = V[k]
        c = v / R**2
        w = x - (x @ v) / R**2 * v
        lw = np.linalg.norm(w)
        y = c + (rho * w / lw if lw > 0 else 0.0)
        if feasible(y):
            best = max(best, x @ y)
        # edge between facets k and k+1: a vertical line, ends on the sphere
        v2 = V[(k + 1) % m]
        A = np.array([v[:2], v2[:2]])
        h = np.linalg.solve(A, np.ones(2))
        hz = 1.0 - h @ h
        if hz >= 0:
            for s in (np.sqrt(hz), -np.sqrt(hz)):
                y = np.array([h[0], h[1], s])
                if feasible(y):
                    best = max(best, x @ y)
    if not np.isfinite(best):
        raise NumericError("gauge enumeration found no feasible candidate")
    return float(best)


def remark_body_gauge(x, n: int, eps: float) -> np.ndarray:
    """Exact gauge of ``conv(B u H)`` via its polar ``B n {y : v_k . y <= 1}``."""
    X = np.atleast_2d(np.asarray(x, dtype=float))
    if X.shape[1] != 3:
        raise InputError("the test body lives in 3-space")
    V = remark_body_vertices(n, eps)
    R = np.linalg.norm(V[0])
    out = np.array([_gauge_one(row, V, R) for row in X])
    return out if np.ndim(x) > 1 else float(out[0])


def _ring_directions(m: int) -> np.ndarray:
    rings = max(4, int(round(np.sqrt(m / 4.0))))
    per = 2 * int(np.ceil(m / rings / 2.0))
    th = (np.arange(rings) + 0.5) * np.pi / rings
    ph = np.arange(per) * 2.0 * np.pi / per
    T, Ph = np.meshgrid(th, ph, indexing="ij")
    return np.column_stack([(np.sin(T) * np.cos(Ph)).ravel(), (np.sin(T) * np.sin(Ph)).ravel(), np.cos(T).ravel()])


def remark_body_samples(n: int = 16, eps: float = 0.05, m: int = 4096) -> np.ndarray:
    """Exposed boundary points of ``conv(B u H)`` for about ``m`` ring directions.

    Directions lie on latitude rings so that spherical parts of the boundary
    are sampled along whole circles. A direction exposes the sphere point
    ``u`` when the ball support wins and a polygon vertex otherwise.
    """
    if int(m) < 100:
        raise InputError("m must be at least 100")
    V = remark_body_vertices(n, eps)
    U = _ring_directions(int(m))
    vs = U @ V.T
    sphere = vs.max(axis=1) <= 1.0
    return np.vstack([U[sphere], V])


def remark_body_polar_samples(n: int = 16, eps: float = 0.05, m: int = 4096) -> np.ndarray:
    """Boundary points ``u / h(u)`` of the polar body for ring directions ``u``."""
    if int(m) < 100:
        raise InputError("m must be at least 100")
    U = _ring_directions(int(m))
    return U / remark_body_support(U, n, eps)[:, None]
