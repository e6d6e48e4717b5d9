"""Norm models for finite-dimensional real normed spaces.

Three concrete families are supported:

* ``lp``: the coordinate p-norm, ``1.01 <= p <= 100``;
* ``quadratic``: ``||x|| = sqrt(x^T G x)`` for a symmetric positive-definite ``G``;
* ``polytopal``: the gauge (Minkowski functional) of ``conv(V)`` for a centrally
  symmetric, full-dimensional vertex set ``V``.

All norm evaluations are vectorized over leading axes: ``x`` may have shape
``(n,)`` or ``(m, n)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.spatial import ConvexHull, QhullError

from .errors import InputError, NumericError

__all__ = [
    "NormModel",
    "SpaceClassification",
    "norm",
    "dual_norm",
    "unit_sphere_samples",
    "classify",
    "named_polytope",
    "model_to_dict",
    "model_from_dict",
]

P_MIN = 1.01
P_MAX = 100.0
_VERTEX_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class NormModel:
    """A concrete norm on ``R^dim``.

    Use the constructors :meth:`lp`, :meth:`quadratic` and :meth:`polytopal`
    rather than calling the class directly; they validate the invariants.
    """

    kind: str
    dim: int
    p: Optional[float] = None
    G: Optional[np.ndarray] = None
    V: Optional[np.ndarray] = None
    # facet normals a_j with conv(V) = {x : a_j . x <= 1}
    facets: Optional[np.ndarray] = field(default=None, repr=False)

    @classmethod
    def lp(cls, p: float, dim: int = 2) -> "NormModel":
        p = float(p)
        if not np.isfinite(p) or not (P_MIN <= p <= P_MAX):
            raise InputError(f"p must lie in [{P_MIN}, {P_MAX}], got {p}")
        if int(dim) < 1:
            raise InputError("dimension must be positive")
        return cls(kind="lp", dim=int(dim), p=p)

    @classmethod
    def quadratic(cls, G) -> "NormModel":
        G = np.array(G, dtype=float)
        if G.ndim != 2 or G.shape[0] != G.shape[1] or G.shape[0] < 1:
            raise InputError("G must be a square matrix")
        if not np.all(np.isfinite(G)):
            raise InputError("G has non-finite entries")
        if not np.allclose(G, G.T, rtol=0, atol=1e-12 * max(1.0, np.abs(G).max())):
            raise InputError("G must be symmetric")
        G = 0.5 * (G + G.T)
        if np.linalg.eigvalsh(G).min() <= 0:
            raise InputError("G must be positive definite")
        G.setflags(write=False)
        return cls(kind="quadratic", dim=G.shape[0], G=G)

    @classmethod
    def euclidean(cls, dim: int = 2) -> "NormModel":
        return cls.quadratic(np.eye(dim))

    @classmethod
    def polytopal(cls, V) -> "NormModel":
        V = np.array(V, dtype=float)
        if V.ndim != 2 or V.shape[0] < 2:
            raise InputError("V must be a list of at least two vectors")
        n = V.shape[1]
        if n < 2:
            raise InputError("polytopal models need dimension >= 2")
        if not np.all(np.isfinite(V)):
            raise InputError("V has non-finite entries")
        scale = np.abs(V).max()
        if np.linalg.matrix_rank(V, tol=1e-10 * scale) < n:
            raise InputError("V is not full-dimensional")
        # central symmetry: -v must be a vertex for every v
        d = np.linalg.norm(V[:, None, :] + V[None, :, :], axis=2)
        if np.any(d.min(axis=1) > _VERTEX_TOL * scale):
            raise InputError("V is not centrally symmetric")
        dup = np.linalg.norm(V[:, None, :] - V[None, :, :], axis=2)
        np.fill_diagonal(dup, np.inf)
        if np.any(dup.min(axis=1) <= _VERTEX_TOL * scale):
            raise InputError("V contains duplicate vertices")
        try:
            hull = ConvexHull(V)
        except QhullError as exc:
            raise InputError(f"convex hull of V failed: {exc}") from exc
        if len(hull.vertices) != len(V):
            raise InputError("some points of V lie inside the hull of the others")
        facets = _facets_from_hull(hull)
        V.setflags(write=False)
        facets.setflags(write=False)
        return cls(kind="polytopal", dim=n, V=V, facets=facets)

    @property
    def is_smooth(self) -> bool:
        return self.kind in ("lp", "quadratic")

    @property
    def is_strictly_convex(self) -> bool:
        return self.kind in ("lp", "quadratic")

    def __call__(self, x):
        return norm(self, x)


def _facets_from_hull(hull: ConvexHull) -> np.ndarray:
    eq = hull.equations
    offsets = -eq[:, -1]
    if np.any(offsets <= 0):
        raise InputError("origin is not interior to conv(V)")
    A = eq[:, :-1] / offsets[:, None]
    # Qhull triangulates non-simplicial facets; drop the repeated planes
    scale = np.abs(A).max()
    keys = np.round(A / scale, 10)
    _, idx = np.unique(keys, axis=0, return_index=True)
    return A[np.sort(idx)]


@dataclass(frozen=True)
class SpaceClassification:
    smooth: bool
    strictly_convex: bool


def _as_vectors(model: NormModel, x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.shape[-1:] != (model.dim,):
        raise InputError(f"expected vectors of dimension {model.dim}, got shape {x.shape}")
    if not np.all(np.isfinite(x)):
        raise InputError("non-finite vector entries")
    return x


def _lp_norm(x: np.ndarray, p: float) -> np.ndarray:
    a = np.abs(x)
    m = a.max(axis=-1)
    safe = np.where(m > 0, m, 1.0)
    r = (a / safe[..., None]) ** p
    return np.where(m > 0, m * r.sum(axis=-1) ** (1.0 / p), 0.0)


def norm(model: NormModel, x):
    """Evaluate the norm of ``x`` (shape ``(n,)`` or ``(..., n)``)."""
    x = _as_vectors(model, x)
    if model.kind == "lp":
        out = _lp_norm(x, model.p)
    elif model.kind == "quadratic":
        q = np.einsum("...i,ij,...j->...", x, model.G, x)
        out = np.sqrt(np.maximum(q, 0.0))
    else:
        out = np.max(x @ model.facets.T, axis=-1)
        if np.any(out < -1e-12 * (np.abs(x).max() + 1.0)):
            raise NumericError("negative gauge value; facet data inconsistent")
        out = np.maximum(out, 0.0)
    if np.ndim(out) == 0:
        return float(out)
    return out


def dual_norm(model: NormModel, u):
    """Support function of the unit ball, ``max_{||x|| <= 1} u . x``."""
    u = _as_vectors(model, u)
    if model.kind == "lp":
        q = model.p / (model.p - 1.0)
        out = _lp_norm(u, q)
    elif model.kind == "quadratic":
        flat = u.reshape(-1, model.dim)
        w = np.linalg.solve(model.G, flat.T).T
        out = np.sqrt(np.maximum(np.sum(flat * w, axis=1), 0.0)).reshape(u.shape[:-1])
    else:
        out = np.max(np.abs(u @ model.V.T), axis=-1)
    if np.ndim(out) == 0:
        return float(out)
    return out


def unit_sphere_samples(model: NormModel, m: int, seed: int = 0) -> np.ndarray:
    """Return ``m`` points on the unit sphere of ``model`` as an ``(m, n)`` array.

    Directions are standard Gaussian and then normalized by the model norm.
    In dimension 2 the rows are sorted by polar angle.
    """
    m = int(m)
    if m < 1:
        raise InputError("sample count must be at least 1")
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((m, model.dim))
    nx = norm(model, X)
    # a zero Gaussian draw has probability zero, but guard anyway
    bad = nx == 0
    X[bad] = 1.0
    nx = np.atleast_1d(norm(model, X))
    X = X / nx[:, None]
    X = X / np.atleast_1d(norm(model, X))[:, None]
    if model.dim == 2:
        X = X[np.argsort(np.arctan2(X[:, 1], X[:, 0]), kind="stable")]
    return X


def classify(model: NormModel) -> SpaceClassification:
    return SpaceClassification(smooth=model.is_smooth, strictly_convex=model.is_strictly_convex)


def named_polytope(name: str) -> np.ndarray:
    """Vertex sets for the standard test bodies.

    ``square`` is the max-norm ball (vertices ``(+-1, +-1)``), ``diamond`` the
    l1 ball in the plane, ``hexagon`` the regular hexagon with a vertex on the
    x-axis, ``cube3`` and ``cross3`` the cube and octahedron in 3-space.
    """
    name = name.lower()
    if name == "square":
        return np.array([[1, 1], [-1, 1], [-1, -1], [1, -1]], dtype=float)
    if name in ("diamond", "cross2"):
        return np.array([[1, 0], [0, 1], [-1, 0], [0, -1]], dtype=float)
    if name == "hexagon":
        t = np.arange(6) * np.pi / 3
        return np.column_stack([np.cos(t), np.sin(t)])
    if name in ("cube3", "cube"):
        return np.array([[a, b, c] for a in (1, -1) for b in (1, -1) for c in (1, -1)], dtype=float)
    if name in ("cross3", "octahedron"):
        return np.vstack([np.eye(3), -np.eye(3)])
    raise InputError(f"unknown polytope name {name!r}")


def model_to_dict(model: NormModel) -> dict:
    d = {"kind": model.kind, "dim": model.dim}
    if model.kind == "lp":
        d["p"] = model.p
    elif model.kind == "quadratic":
        d["G"] = model.G.tolist()
    else:
        d["V"] = model.V.tolist()
    return d


def model_from_dict(d: dict) -> NormModel:
    try:
        kind = d["kind"]
    except (KeyError, TypeError) as exc:
        raise InputError("model JSON needs a 'kind' field") from exc
    if kind == "lp":
        if "p" not in d:
            raise InputError("lp model needs 'p'")
        model = NormModel.lp(d["p"], d.get("dim", 2))
    elif kind == "quadratic":
        if "G" not in d:
            raise InputError("quadratic model needs 'G'")
        model = NormModel.quadratic(d["G"])
    elif kind == "polytopal":
        if "V" not in d:
            raise InputError("polytopal model needs 'V'")
        model = NormModel.polytopal(d["V"])
    else:
        raise InputError(f"unknown model kind {kind!r}")
    if "dim" in d and int(d["dim"]) != model.dim:
        raise InputError(f"declared dim {d['dim']} does not match data dimension {model.dim}")
    return model
