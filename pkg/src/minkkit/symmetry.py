"""Finite linear isometry groups of polytopal unit balls.

A linear isometry of a polytopal norm permutes the vertices of the unit ball,
so it also preserves the vertex second-moment matrix ``M = sum v v^T``. In
coordinates where ``M`` is the identity every such map is orthogonal, and it
is pinned down by the images of ``n`` linearly independent vertices. The
search below runs over those images with Gram-matrix pruning and keeps a
candidate only when it maps the vertex set onto itself; the resulting vertex
permutation is stored as an exact certificate.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import InputError, MinkkitError, ResourceError, UnsupportedOperationError
from .normspace import NormModel
from .operators import _jsonable, is_isometry

__all__ = ["PointGroup", "polytopal_isometry_group", "group_report", "orbit_probe"]

MAX_CANDIDATES = 1_000_000


@dataclass
class PointGroup:
    elements: list
    order: int
    classification: str
    closure_verified: bool
    perms: Optional[np.ndarray] = None
    determinants: list = field(default_factory=list)

    def to_dict(self, with_elements: bool = True) -> dict:
        d = {
            "order": self.order,
            "classification": self.classification,
            "closure_verified": bool(self.closure_verified),
            "determinants": sorted({int(round(x)) for x in self.determinants}),
        }
        if with_elements:
            d["elements"] = [np.asarray(U).tolist() for U in self.elements]
        return d


def _inv_sqrt(M):
    w, Q = np.linalg.eigh(M)
    return Q @ np.diag(w**-0.5) @ Q.T, Q @ np.diag(w**0.5) @ Q.T


def _reference_tuple(Y: np.ndarray) -> list:
    """Greedy choice of ``n`` well-conditioned linearly independent rows."""
    n = Y.shape[1]
    chosen = [int(np.argmax(np.linalg.norm(Y, axis=1)))]
    for _ in range(1, n):
        B = Y[chosen]
        P = np.eye(n) - B.T @ np.linalg.pinv(B.T)
        r = np.linalg.norm(Y @ P, axis=1)
        chosen.append(int(np.argmax(r)))
    return chosen


def _match(A: np.ndarray, B: np.ndarray, tol: float):
    """Permutation ``p`` with ``A[i] = B[p[i]]`` within ``tol``, or ``None``."""
    D = np.linalg.norm(A[:, None, :] - B[None, :, :], axis=2)
    p = np.argmin(D, axis=1)
    if D[np.arange(len(A)), p].max() > tol or len(set(p.tolist())) != len(A):
        return None
    return p


def polytopal_isometry_group(V, tol: float = 1e-9, max_candidates: int = MAX_CANDIDATES) -> PointGroup:
    """Enumerate all linear maps that permute the vertex set ``V``."""
    model = NormModel.polytopal(V)  # validates symmetry, rank and vertex status
    V = np.array(model.V)
    m, n = V.shape
    if m > 200 or n > 4:
        raise InputError("enumeration is limited to 200 vertices in dimension <= 4")
    scale = np.abs(V).max()
    W, Winv = _inv_sqrt(V.T @ V / m)
    Y = V @ W  # rows w v_i with sum y y^T = m I
    ref = _reference_tuple(Y)
    lengths = np.linalg.norm(Y, axis=1)
    gram = Y @ Y.T
    gtol = 1e-7 * max(1.0, lengths.max() ** 2)
    R = Y[ref]
    Rinv = np.linalg.inv(R)
    visited = 0
    found = {}

    def extend(tup):
        nonlocal visited
        k = len(tup)
        if k == n:
            visited += 1
            if visited > max_candidates:
                raise ResourceError(f"more than {max_candidates} candidate tuples")
            # Q^T maps ref rows to image rows: R Q^T = Y[tup]
            Qt = Rinv @ Y[tup]
            if np.abs(Qt.T @ Qt - np.eye(n)).max() > 1e-9:
                return
            p = _match(Y @ Qt, Y, 1e-7 * max(1.0, lengths.max()))
            if p is None:
                return
            found[tuple(p.tolist())] = p
            return
        r = ref[k]
        ok = np.abs(lengths - lengths[r]) <= gtol
        for a, c in enumerate(tup):
            ok &= np.abs(gram[:, c] - gram[ref[a], r]) <= gtol
        ok[list(tup)] = False
        for j in np.flatnonzero(ok):
            extend(tup + [int(j)])

    extend([])
    perms = np.array(sorted(found.values(), key=lambda p: p.tolist()))
    # exact elements in the original coordinates from the vertex permutation
    Vr_inv = np.linalg.inv(V[ref])
    elements = []
    for p in perms:
        U = np.eye(n) if np.array_equal(p, np.arange(m)) else (Vr_inv @ V[p[ref]]).T
        if np.abs(V @ U.T - V[p]).max() > tol * max(1.0, scale) * 10:
            raise MinkkitError("accepted candidate fails the vertex certificate")
        elements.append(U)
    order = len(elements)
    key = {tuple(p.tolist()): i for i, p in enumerate(perms)}
    ident = tuple(range(m))
    neg = tuple(_match(-V, V, 1e-9 * scale).tolist())
    closed = ident in key and neg in key
    for p in perms:
        inv = np.empty(m, dtype=int)
        inv[p] = np.arange(m)
        closed &= tuple(inv.tolist()) in key
        for q in perms:
            closed &= tuple(p[q].tolist()) in key
    if not closed:
        raise MinkkitError("enumerated maps do not form a group")
    # identity first, then the rest in permutation order
    order_idx = sorted(range(order), key=lambda i: (tuple(perms[i].tolist()) != ident, perms[i].tolist()))
    elements = [np.where(np.abs(elements[i]) < 1e-13, 0.0, elements[i]) for i in order_idx]
    perms = perms[order_idx]
    dets = [float(np.linalg.det(U)) for U in elements]
    return PointGroup(
        elements=elements,
        order=order,
        classification=_classify(n, dets),
        closure_verified=bool(closed),
        perms=perms,
        determinants=dets,
    )


def _classify(n: int, dets) -> str:
    rot = sum(1 for d in dets if d > 0)
    if n == 2:
        return f"cyclic({rot})" if rot == len(dets) else f"dihedral({rot})"
    return "finite-other"


def _rotation_family(model: NormModel, angles) -> list:
    G = model.G if model.kind == "quadratic" else np.eye(model.dim)
    Lc = np.linalg.cholesky(G)  # G = Lc Lc^T, so x -> Lc^T x is an isometry onto l2
    out = []
    for th in angles:
        R = np.eye(model.dim)
        c, s = np.cos(th), np.sin(th)
        R[:2, :2] = [[c, -s], [s, c]]
        out.append(np.linalg.solve(Lc.T, R @ Lc.T))
    return out


def group_report(model: NormModel, tol: float = 1e-9) -> dict:
    """Point group and the semidirect structure ``T(n) x| G_0`` of the isometry group."""
    base = {"semidirect": {"translations": f"all of R^{model.dim}"}}
    if model.kind == "polytopal":
        pg = polytopal_isometry_group(model.V, tol)
        base.update(
            point_group=pg.to_dict(),
            order=pg.order,
            classification=pg.classification,
            finiteness_flag="finite",
            ellipse_free=True,
        )
        base["semidirect"]["point_stabilizer"] = pg.classification
        return base
    if model.kind == "quadratic" or (model.kind == "lp" and model.p == 2.0):
        angles = [np.pi / 7, np.pi / 5, 1.0, np.sqrt(2.0)]
        fam = _rotation_family(model, angles)
        res = [is_isometry(model, U, samples=200, tol=1e-8).max_residual for U in fam]
        base.update(
            point_group=None,
            order=None,
            classification="infinite-detected",
            finiteness_flag="infinite-detected",
            witness_family={
                "description": "conjugated rotations in the first coordinate plane",
                "angles": angles,
                "elements": [U.tolist() for U in fam],
                "isometry_residuals": res,
            },
        )
        base["semidirect"]["point_stabilizer"] = "infinite-detected"
        return _jsonable(base)
    raise UnsupportedOperationError(
        f"group_report supports polytopal and quadratic models, not {model.kind} with p = {model.p}"
    )


def orbit_probe(model: NormModel, x, group: PointGroup, tol: float = 1e-9) -> np.ndarray:
    """Distinct images of ``x`` under the group, deduplicated at ``tol``."""
    if not group.closure_verified:
        raise InputError("group closure has not been verified")
    x = np.asarray(x, dtype=float)
    if x.shape != (model.dim,):
        raise InputError(f"x must have dimension {model.dim}")
    orbit = []
    for U in group.elements:
        y = U @ x
        if not any(np.abs(y - z).max() <= tol for z in orbit):
            orbit.append(y)
    return np.array(orbit)
