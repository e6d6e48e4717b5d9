"""Left reflections, their compositions, and the Euclidean characterization battery.

A left reflection in a line (or hyperplane) ``G`` is the affine involution that
fixes ``G`` pointwise and moves every point along the direction ``d`` with
``d _|_B G``, so that the midpoint of ``p`` and its image lies on ``G``.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import brentq, minimize, minimize_scalar

from .errors import InputError, NumericError, UnsupportedOperationError
from .normspace import NormModel, norm, unit_sphere_samples
from .operators import _jsonable, is_isometry
from .ortho import birkhoff, birkhoff_direction, james_residual
from .sip import duality_map, riesz_representer, sip

__all__ = [
    "LineSpec",
    "AffineMap",
    "translation",
    "left_reflection",
    "left_reflection_hyperplane",
    "compose",
    "classify_composition",
    "fixed_lines_scan",
    "euclidean_battery",
    "birkhoff_preservation_probe",
]

CHECK_POINTS = 50


@dataclass
class LineSpec:
    """A line (one direction) or hyperplane (``n - 1`` directions) through ``point``."""

    point: np.ndarray
    directions: np.ndarray

    def __post_init__(self):
        self.point = np.asarray(self.point, dtype=float)
        D = np.atleast_2d(np.asarray(self.directions, dtype=float))
        if D.shape[1] != self.point.shape[0]:
            raise InputError("direction vectors and point have different dimensions")
        if not (np.all(np.isfinite(D)) and np.all(np.isfinite(self.point))):
            raise InputError("non-finite line data")
        if np.linalg.matrix_rank(D, tol=1e-12 * max(1.0, np.abs(D).max())) < D.shape[0]:
            raise InputError("directions are linearly dependent")
        self.directions = D

    @classmethod
    def through(cls, point, angle: float) -> "LineSpec":
        """Plane line through ``point`` at polar ``angle``."""
        return cls(point, [[np.cos(angle), np.sin(angle)]])

    def to_dict(self) -> dict:
        return {"point": self.point.tolist(), "directions": self.directions.tolist()}


@dataclass
class AffineMap:
    """``x -> L x + t``."""

    L: np.ndarray
    t: np.ndarray
    checks: dict = field(default_factory=dict)

    def __post_init__(self):
        self.L = np.asarray(self.L, dtype=float)
        self.t = np.asarray(self.t, dtype=float)
        if self.L.ndim != 2 or self.L.shape[0] != self.L.shape[1] or self.t.shape != (self.L.shape[0],):
            raise InputError("AffineMap needs a square L and a matching t")
        if not (np.all(np.isfinite(self.L)) and np.all(np.isfinite(self.t))):
            raise InputError("AffineMap has non-finite entries")

    def __call__(self, x):
        return np.asarray(x, dtype=float) @ self.L.T + self.t

    def to_dict(self) -> dict:
        d = {"L": self.L.tolist(), "t": self.t.tolist()}
        if self.checks:
            d["checks"] = _jsonable(self.checks)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "AffineMap":
        try:
            return cls(d["L"], d["t"])
        except (KeyError, TypeError) as exc:
            raise InputError("affine map JSON needs 'L' and 't'") from exc


def translation(p) -> AffineMap:
    p = np.asarray(p, dtype=float)
    return AffineMap(np.eye(len(p)), p)


def _reflection_from(g_cols: np.ndarray, d: np.ndarray, q: np.ndarray) -> np.ndarray:
    n = len(d)
    B = np.column_stack([g_cols, d])
    D = np.diag([1.0] * (n - 1) + [-1.0])
    L = B @ D @ np.linalg.inv(B)
    return L, q - L @ q


def _cross2(a, b):
    return a[..., 0] * b[..., 1] - a[..., 1] * b[..., 0]


def _verify_line_clauses(model, m: AffineMap, G: LineSpec, tol: float, seed: int = 0) -> dict:
    """Check involution, pointwise fixing of ``G`` and the two pair clauses."""
    n = model.dim
    rng = np.random.default_rng(seed)
    P = G.point + rng.uniform(-2.0, 2.0, size=(CHECK_POINTS, n))
    Pi = m(P)
    g = G.directions[0]
    involution = float(np.abs(m(Pi) - P).max())
    on_g = G.point + np.outer(np.linspace(-2, 2, 9), g)
    fixes = float(np.abs(m(on_g) - on_g).max())
    mids = 0.5 * (P + Pi) - G.point
    # distance of the midpoint from G measured across g
    mid_res = float(np.abs(_cross2(mids, g)).max() / np.linalg.norm(g))
    orth = []
    for p, pi in zip(P, Pi):
        v = p - pi
        if norm(model, v) > 1e-9:
            orth.append(abs(birkhoff(model, v, g, tol=max(tol, 1e-9)).minimizer_t))
    return {
        "involution_residual": involution,
        "fixes_line_residual": fixes,
        "midpoint_residual": mid_res,
        "orthogonality_residual": float(max(orth, default=0.0)),
        "det": float(np.linalg.det(m.L)),
    }


def left_reflection(model: NormModel, G: LineSpec, tol: float = 1e-9, verify: bool = True) -> AffineMap:
    """Left reflection in the line ``G`` of a strictly convex plane."""
    if model.dim != 2:
        raise InputError("left_reflection works in planes; use left_reflection_hyperplane")
    if not model.is_strictly_convex:
        raise UnsupportedOperationError("left reflections need a strictly convex plane")
    if G.directions.shape != (1, 2):
        raise InputError("G must be a line (one direction vector)")
    g = G.directions[0]
    d = birkhoff_direction(model, g)
    L, t = _reflection_from(g[:, None], d, G.point)
    m = AffineMap(L, t)
    if verify:
        m.checks = _verify_line_clauses(model, m, G, tol)
        m.checks["direction"] = d.tolist()
    return m


def _hyperplane_direction(model: NormModel, H: np.ndarray, tol: float):
    """Minimize ``||nu + H^T c||`` over ``c``; the minimizer is Birkhoff orthogonal to ``span(H)``."""
    n = model.dim
    Q, _ = np.linalg.qr(np.vstack([H, np.eye(n)]).T)
    nu = Q[:, n - 1]
    nu = nu - H.T @ np.linalg.lstsq(H.T, nu, rcond=None)[0]
    nu /= np.linalg.norm(nu)

    def f(c):
        return norm(model, nu + H.T @ c)

    def grad(c):
        z = nu + H.T @ c
        return H @ duality_map(model, z) / norm(model, z)

    res = minimize(f, np.zeros(H.shape[0]), jac=grad, method="BFGS", options={"gtol": 1e-13, "maxiter": 500})
    d = nu + H.T @ res.x
    d /= norm(model, d)
    resid = float(np.abs(H @ duality_map(model, d)).max() / np.linalg.norm(H, axis=1).max())
    if resid > max(tol, 1e-9):
        raise NumericError(f"no Birkhoff-orthogonal direction found (residual {resid:.3e})", resid)
    return d, nu, resid


def left_reflection_hyperplane(model: NormModel, G: LineSpec, tol: float = 1e-9, verify: bool = True) -> AffineMap:
    """Left reflection in a hyperplane of a strictly convex space of dimension >= 3."""
    n = model.dim
    if n < 3:
        raise InputError("left_reflection_hyperplane needs dimension >= 3")
    if not (model.is_strictly_convex and model.is_smooth):
        raise UnsupportedOperationError("hyperplane reflections need a smooth strictly convex model")
    H = G.directions
    if H.shape != (n - 1, n):
        raise InputError(f"G must have {n - 1} direction vectors")
    d, nu, resid = _hyperplane_direction(model, H, tol)
    L, t = _reflection_from(H.T, d, G.point)
    m = AffineMap(L, t)
    if verify:
        rng = np.random.default_rng(0)
        P = G.point + rng.uniform(-2.0, 2.0, size=(CHECK_POINTS, n))
        Pi = m(P)
        mids = 0.5 * (P + Pi) - G.point
        V = P - Pi
        keep = np.linalg.norm(V, axis=1) > 1e-9
        J = duality_map(model, V[keep]) if np.any(keep) else np.zeros((0, n))
        m.checks = {
            "involution_residual": float(np.abs(m(Pi) - P).max()),
            "midpoint_residual": float(np.abs(mids @ nu).max()),
            "orthogonality_residual": float(np.abs(J @ H.T).max(initial=0.0) / max(1.0, np.abs(J).max(initial=1.0))),
            "direction_residual": resid,
            "det": float(np.linalg.det(L)),
            "direction": d.tolist(),
        }
    return m


def compose(maps: Sequence[AffineMap]) -> AffineMap:
    """Compose affine maps; ``maps[0]`` is applied first."""
    if not maps:
        raise InputError("compose needs at least one map")
    L = maps[0].L.copy()
    t = maps[0].t.copy()
    for m in maps[1:]:
        if m.L.shape != L.shape:
            raise InputError("maps have different dimensions")
        L, t = m.L @ L, m.L @ t + m.t
    return AffineMap(L, t)


def _fixed_set(m: AffineMap, tol: float):
    """Point and direction basis of ``{x : L x + t = x}``; ``None`` if empty."""
    n = len(m.t)
    A = m.L - np.eye(n)
    x, *_ = np.linalg.lstsq(A, -m.t, rcond=None)
    if np.abs(A @ x + m.t).max() > tol * max(1.0, np.abs(m.t).max()):
        return None
    _, s, Vt = np.linalg.svd(A)
    null = Vt[np.sum(s > tol * max(1.0, s.max(initial=0.0))):]
    return x, null


def is_left_reflection(model: NormModel, m: AffineMap, tol: float = 1e-8) -> bool:
    n = model.dim
    L = m.L
    if abs(np.linalg.det(L) + 1.0) > tol or np.abs(L @ L - np.eye(n)).max() > tol:
        return False
    fixed = _fixed_set(m, tol)
    if fixed is None or fixed[1].shape[0] != n - 1:
        return False
    _, H = fixed
    w, V = np.linalg.eig(L)
    d = np.real(V[:, np.argmin(np.abs(w + 1.0))])
    if n == 2:
        return birkhoff(model, d, H[0], tol=1e-6).orthogonal
    if not model.is_smooth:
        return False
    return bool(np.abs(sip(model, H, np.broadcast_to(d / norm(model, d), H.shape))).max() <= tol)


def classify_composition(model: NormModel, m: AffineMap, tol: float = 1e-8) -> str:
    """Label an affine map: identity, translation, shear, left-reflection, isometry or general."""
    n = model.dim
    if m.L.shape != (n, n):
        raise InputError("map and model have different dimensions")
    I = np.eye(n)
    scale = max(1.0, np.abs(m.L).max())
    if np.abs(m.L - I).max() <= tol * scale:
        return "identity" if np.abs(m.t).max() <= tol else "translation"
    N = m.L - I
    if np.abs(N @ N).max() <= tol * scale**2:
        return "shear"
    if model.is_strictly_convex and is_left_reflection(model, m, tol):
        return "left-reflection"
    if is_isometry(model, m.L, samples=200, tol=max(tol, 1e-9)).verdict:
        return "isometry"
    return "general"


def fixed_lines_scan(model: NormModel, G: LineSpec, count: int = 90, tol: float = 1e-9) -> dict:
    """Compare invariant lines through a point of ``G`` with Birkhoff orthogonality to ``G``.

    Lines are spaced ``pi / count`` apart starting at the reflection direction,
    and the line ``G`` itself is skipped.
    """
    m = left_reflection(model, G, verify=False)
    g = G.directions[0] / norm(model, G.directions[0])
    w, V = np.linalg.eig(m.L)
    d = np.real(V[:, np.argmin(np.abs(w + 1.0))])
    th0 = np.arctan2(d[1], d[0])
    rows = []
    for k in range(count):
        th = th0 + k * np.pi / count
        u = np.array([np.cos(th), np.sin(th)])
        if abs(_cross2(u, g)) <= 1e-12:
            continue
        Lu = m.L @ u
        invariant = abs(_cross2(u, Lu)) <= tol * max(1.0, np.linalg.norm(Lu))
        orth = birkhoff(model, u, g, tol=1e-7).orthogonal
        rows.append({"angle": float(th), "invariant": bool(invariant), "orthogonal": bool(orth)})
    agree = all(r["invariant"] == r["orthogonal"] for r in rows)
    return {
        "lines": len(rows),
        "invariant": sum(r["invariant"] for r in rows),
        "orthogonal": sum(r["orthogonal"] for r in rows),
        "agree": bool(agree),
        "rows": rows,
    }


def _threads() -> int:
    try:
        k = int(os.environ.get("MINKKIT_THREADS", "1"))
    except ValueError:
        k = 1
    return max(1, k)


def _map_trials(fn: Callable, items: list) -> list:
    # results are gathered in submission order, so the output is deterministic
    k = _threads()
    if k == 1 or len(items) < 2:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=k) as ex:
        return list(ex.map(fn, items))


def _linear_reflections(model: NormModel, angles: np.ndarray) -> np.ndarray:
    """Linear parts of left reflections in lines through 0 at ``angles``.

    Uses ``d = riesz(rot90(g))``: for a smooth plane ``[g, d] = 0`` says the
    functional of ``d`` annihilates ``g``.
    """
    g = np.column_stack([np.cos(angles), np.sin(angles)])
    c = np.column_stack([-g[:, 1], g[:, 0]])
    d = riesz_representer(model, c)
    B = np.stack([g, d], axis=2)
    D = np.diag([1.0, -1.0])
    return B @ D @ np.linalg.inv(B)


def _reflections_through(model, p, angles):
    Ls = _linear_reflections(model, angles)
    ts = p - np.einsum("kij,j->ki", Ls, p)
    return Ls, ts


def _james_partner(model: NormModel, x: np.ndarray):
    """Unit ``y`` with ``||x + y|| = ||x - y||`` on the half-turn after ``x``."""
    th0 = np.arctan2(x[1], x[0])

    def h(th):
        y = np.array([np.cos(th), np.sin(th)])
        y /= norm(model, y)
        return norm(model, x + y) - norm(model, x - y)

    th = brentq(h, th0 + 1e-9, th0 + np.pi - 1e-9, xtol=1e-15)
    y = np.array([np.cos(th), np.sin(th)])
    return y / norm(model, y)


def _three_defect(model, p, angles, test_pts, grid: int = 2048):
    Ls, ts = _reflections_through(model, p, np.asarray(angles))
    prod = compose([AffineMap(L, t) for L, t in zip(Ls, ts)])
    target = prod(test_pts)

    def defect_many(th):
        L4, t4 = _reflections_through(model, p, np.atleast_1d(th))
        img = np.einsum("kij,mj->kmi", L4, test_pts) + t4[:, None, :]
        return norm(model, img - target[None]).max(axis=1)

    cand = np.arange(grid) * np.pi / grid
    vals = defect_many(cand)
    k = int(np.argmin(vals))
    h = np.pi / grid
    res = minimize_scalar(lambda th: float(defect_many(th)[0]), bounds=(cand[k] - h, cand[k] + h),
                          method="bounded", options={"xatol": 1e-14})
    options = [(float(vals[k]), float(cand[k])), (float(res.fun), float(res.x))]
    # the fitted candidate: the +1 eigendirection of the product, when real
    w, V = np.linalg.eig(prod.L)
    j = int(np.argmin(np.abs(w - 1.0)))
    if abs(w[j] - 1.0) < 1e-6 and abs(np.imag(w[j])) == 0.0:
        u = np.real(V[:, j])
        th = float(np.arctan2(u[1], u[0]) % np.pi)
        options.append((float(defect_many(th)[0]), th))
    return min(options)


def euclidean_battery(model: NormModel, trials: int = 20, tol: float = 1e-7, seed: int = 0) -> dict:
    """Run the four Euclidean-plane characterizations of left reflections.

    (a) products of two reflections in lines through 0 are isometries;
    (b) reflections preserve James orthogonality;
    (c) the image of the unit circle is a circle (best-fit radius);
    (d) the product of three reflections in concurrent lines is a reflection
    in a fourth line of the same pencil.
    Each failing criterion stores the worst witness.
    """
    if model.dim != 2 or not (model.is_strictly_convex and model.is_smooth):
        raise UnsupportedOperationError("the battery needs a smooth strictly convex plane")
    trials = int(trials)
    if trials < 1:
        raise InputError("trials must be positive")
    rng = np.random.default_rng(seed)
    pair_angles = rng.uniform(0, np.pi, size=(trials, 2))
    james_angles = rng.uniform(0, np.pi, size=trials)
    james_x = rng.uniform(0, 2 * np.pi, size=trials)
    circle_lines = rng.uniform(0, np.pi, size=trials)
    circle_offsets = rng.uniform(-1, 1, size=(trials, 2))
    triple_angles = rng.uniform(0, np.pi, size=(trials, 3))
    triple_points = rng.uniform(-1, 1, size=(trials, 2))
    r = np.sqrt(rng.uniform(0, 1, 64))
    a = rng.uniform(0, 2 * np.pi, 64)
    test_pts = np.column_stack([r * np.cos(a), r * np.sin(a)])
    circle = unit_sphere_samples(model, 256, seed)

    def trial_a(k):
        Ls = _linear_reflections(model, pair_angles[k])
        rep = is_isometry(model, Ls[1] @ Ls[0], samples=100, tol=tol, seed=seed)
        return rep.max_residual, {"angles": pair_angles[k].tolist(), "product": (Ls[1] @ Ls[0]).tolist()}

    def trial_b(k):
        L = _linear_reflections(model, james_angles[k : k + 1])[0]
        x = np.array([np.cos(james_x[k]), np.sin(james_x[k])])
        x /= norm(model, x)
        y = _james_partner(model, x)
        return james_residual(model, L @ x, L @ y), {"angle": float(james_angles[k]), "x": x.tolist(), "y": y.tolist()}

    def trial_c(k):
        p = circle_offsets[k]
        Ls, ts = _reflections_through(model, p, circle_lines[k : k + 1])
        img = circle @ Ls[0].T + ts[0]
        c = Ls[0] @ np.zeros(2) + ts[0]
        rad = norm(model, img - c)
        return float(np.abs(rad - rad.mean()).max()), {"angle": float(circle_lines[k]), "point": p.tolist()}

    def trial_d(k):
        defect, th4 = _three_defect(model, triple_points[k], triple_angles[k], test_pts)
        return defect, {"angles": triple_angles[k].tolist(), "point": triple_points[k].tolist(), "best_angle": th4}

    report = {"trials": trials, "tol": tol, "criteria": {}}
    for name, fn in (("a", trial_a), ("b", trial_b), ("c", trial_c), ("d", trial_d)):
        out = _map_trials(fn, list(range(trials)))
        defects = np.array([o[0] for o in out])
        passed = defects <= tol
        worst = int(np.argmax(defects))
        entry = {
            "pass_rate": float(passed.mean()),
            "passed": bool(passed.all()),
            "max_defect": float(defects.max()),
            "witness": None,
        }
        if not passed.all():
            entry["witness"] = dict(out[worst][1], defect=float(defects[worst]))
        report["criteria"][name] = entry
    report["all_passed"] = all(c["passed"] for c in report["criteria"].values())
    return report


def birkhoff_preservation_probe(model: NormModel, trials: int = 50, tol: float = 1e-7, seed: int = 0) -> dict:
    """Fraction of Birkhoff-orthogonal pairs whose images under left reflections stay orthogonal."""
    if model.dim != 2 or not (model.is_strictly_convex and model.is_smooth):
        raise UnsupportedOperationError("the probe needs a smooth strictly convex plane")
    rng = np.random.default_rng(seed)
    ys = rng.uniform(0, 2 * np.pi, size=trials)
    lines = rng.uniform(0, np.pi, size=trials)

    def one(k):
        y = np.array([np.cos(ys[k]), np.sin(ys[k])])
        x = birkhoff_direction(model, y)
        L = _linear_reflections(model, lines[k : k + 1])[0]
        # the images stay orthogonal iff [L y, L x] = 0
        r = abs(float(sip(model, L @ y, L @ x))) / (norm(model, L @ x) * norm(model, L @ y))
        return r, {"x": x.tolist(), "y": y.tolist(), "line_angle": float(lines[k])}

    out = _map_trials(one, list(range(int(trials))))
    res = np.array([o[0] for o in out])
    ok = res <= tol
    rep = {"trials": int(trials), "rate": float(ok.mean()), "max_residual": float(res.max()), "counterexample": None}
    if not ok.all():
        k = int(np.argmax(res))
        rep["counterexample"] = dict(out[k][1], residual=float(res[k]))
    return rep
