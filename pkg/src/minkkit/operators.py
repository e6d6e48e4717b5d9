"""Generalized adjoints and operator-class predicates.

Every predicate samples pairs of unit vectors (plus all ordered pairs of
standard basis vectors), evaluates a residual per pair and reports the worst
one together with the pair that attains it.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import InputError
from .normspace import NormModel, norm, unit_sphere_samples
from .sip import _ctx, _require_smooth, duality_map, rho_plus, riesz_representer, sip

__all__ = [
    "PredicateReport",
    "as_operator",
    "generalized_rotation",
    "ellipse_example_operator",
    "gen_adjoint_apply",
    "is_self_adjoint",
    "is_adjoint_abelian",
    "is_isometry",
    "iso_abelian_check",
    "adjoint_algebra_check",
    "lp_scan_value",
    "lp_rotation_scan",
]

DEFAULT_SAMPLES = 500
DEFAULT_TOL = 1e-6


@dataclass
class PredicateReport:
    verdict: bool
    max_residual: float
    witness: Optional[tuple] = None
    samples: int = 0
    details: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        d = {
            "verdict": bool(self.verdict),
            "max_residual": float(self.max_residual),
            "witness": None,
            "samples": int(self.samples),
        }
        if self.witness is not None:
            d["witness"] = {"x": np.asarray(self.witness[0]).tolist(), "y": np.asarray(self.witness[1]).tolist()}
        if self.details:
            d["details"] = _jsonable(self.details)
        return d


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.floating, np.integer, np.bool_)):
        return obj.item()
    return obj


def as_operator(A, dim: Optional[int] = None) -> np.ndarray:
    A = np.array(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise InputError(f"operator must be a square matrix, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise InputError("operator has non-finite entries")
    if dim is not None and A.shape[0] != dim:
        raise InputError(f"operator is {A.shape[0]}x{A.shape[0]} but the model has dimension {dim}")
    return A


def generalized_rotation(phi: float, modulus: float = 1.0) -> np.ndarray:
    """``modulus * [[cos phi, sin phi], [-sin phi, cos phi]]``."""
    c, s = np.cos(phi), np.sin(phi)
    return modulus * np.array([[c, s], [-s, c]])


def ellipse_example_operator(a: float, b: float, phi: float) -> np.ndarray:
    """``diag(1/a, 1/b) @ F_phi @ diag(a, b)`` in the orthonormal basis ``{e, f}``.

    Note that as a column-vector map this matrix preserves the ellipse
    ``(a x)^2 + (b y)^2 = 1``; its transpose preserves ``(x/a)^2 + (y/b)^2 = 1``.
    """
    c, s = np.cos(phi), np.sin(phi)
    return np.array([[c, b / a * s], [-a / b * s, c]])


def _sample_pairs(model: NormModel, samples: int, seed: int):
    n = model.dim
    X = unit_sphere_samples(model, samples, seed)
    Y = unit_sphere_samples(model, samples, seed + 1)
    E = np.eye(n)
    bi, bj = np.meshgrid(np.arange(n), np.arange(n), indexing="ij")
    X = np.vstack([X, E[bi.ravel()]])
    Y = np.vstack([Y, E[bj.ravel()]])
    return X, Y


def _worst(residuals: np.ndarray, X: np.ndarray, Y: np.ndarray):
    r = np.nan_to_num(residuals, nan=np.inf)
    top = r.max()
    ties = np.flatnonzero(r == top)
    if len(ties) > 1:
        keys = np.hstack([X[ties], Y[ties]])
        order = np.lexsort(keys.T[::-1])
        k = ties[order[0]]
    else:
        k = ties[0]
    return float(top), (X[k].copy(), Y[k].copy())


def _report(residuals, X, Y, tol, details=None) -> PredicateReport:
    top, wit = _worst(np.asarray(residuals), X, Y)
    return PredicateReport(
        verdict=bool(top <= tol),
        max_residual=top,
        witness=wit,
        samples=len(residuals),
        details=details or {},
    )


def gen_adjoint_apply(ctx, A, y) -> np.ndarray:
    """Generalized adjoint ``A^T(y)``: the vector with ``[A x, y] = [x, A^T(y)]``.

    Vectorized over rows of ``y``. Zero rows map to zero.
    """
    ctx = _ctx(ctx)
    model = ctx.model
    _require_smooth(model, "gen_adjoint_apply")
    A = as_operator(A, model.dim)
    y = np.asarray(y, dtype=float)
    Y = np.atleast_2d(y)
    out = np.zeros_like(Y)
    nz = np.any(Y != 0, axis=1)
    if np.any(nz):
        # c_i = [A e_i, y] = duality_map(y) . (A e_i)
        c = duality_map(ctx, Y[nz]) @ A
        live = np.any(c != 0, axis=1)
        rows = np.flatnonzero(nz)[live]
        if len(rows):
            out[rows] = riesz_representer(ctx, c[live])
    return out.reshape(y.shape)


def is_self_adjoint(ctx, A, samples: int = DEFAULT_SAMPLES, tol: float = DEFAULT_TOL, seed: int = 0) -> PredicateReport:
    """Check ``rho_plus(A x, y) = rho_plus(x, A y)`` on sampled pairs.

    Works on non-smooth models through the norm derivative.
    """
    ctx = _ctx(ctx)
    A = as_operator(A, ctx.model.dim)
    X, Y = _sample_pairs(ctx.model, samples, seed)
    r = np.abs(rho_plus(ctx, X @ A.T, Y) - rho_plus(ctx, X, Y @ A.T))
    return _report(r, X, Y, tol)


def is_adjoint_abelian(ctx, A, samples: int = DEFAULT_SAMPLES, tol: float = DEFAULT_TOL, seed: int = 0) -> PredicateReport:
    """Check ``[A x, y] = [x, A y]`` on sampled pairs (smooth models only)."""
    ctx = _ctx(ctx)
    _require_smooth(ctx.model, "is_adjoint_abelian")
    A = as_operator(A, ctx.model.dim)
    X, Y = _sample_pairs(ctx.model, samples, seed)
    r = np.abs(sip(ctx, X @ A.T, Y) - sip(ctx, X, Y @ A.T))
    return _report(r, X, Y, tol)


def is_isometry(ctx, U, samples: int = DEFAULT_SAMPLES, tol: float = DEFAULT_TOL, seed: int = 0) -> PredicateReport:
    """Check norm preservation and, on smooth models, s.i.p. preservation.

    The residual per pair is ``max(| ||Ux|| - ||x|| |, | ||Uy|| - ||y|| |,
    |[Ux, Uy] - [x, y]|)``; the last term is omitted for non-smooth models.
    """
    ctx = _ctx(ctx)
    model = ctx.model
    U = as_operator(U, model.dim)
    X, Y = _sample_pairs(model, samples, seed)
    UX, UY = X @ U.T, Y @ U.T
    r_norm = np.maximum(np.abs(norm(model, UX) - norm(model, X)), np.abs(norm(model, UY) - norm(model, Y)))
    details = {"norm_residual": float(r_norm.max())}
    r = r_norm
    if model.is_smooth:
        r_sip = np.abs(sip(ctx, UX, UY) - sip(ctx, X, Y))
        details["sip_residual"] = float(r_sip.max())
        r = np.maximum(r_norm, r_sip)
    return _report(r, X, Y, tol, details)


def iso_abelian_check(ctx, U, samples: int = DEFAULT_SAMPLES, tol: float = DEFAULT_TOL, seed: int = 0) -> PredicateReport:
    """Test ``U^{-1} = U^T`` pointwise, i.e. that ``U`` is iso-abelian.

    The residual is ``max_y ||U^{-1} y - A^T(y)||`` over sampled unit ``y``.
    ``details['isometry_verdict']`` carries the independent :func:`is_isometry`
    verdict and ``details['agrees']`` whether the two coincide.
    """
    ctx = _ctx(ctx)
    model = ctx.model
    _require_smooth(model, "iso_abelian_check")
    U = as_operator(U, model.dim)
    if np.linalg.cond(U) >= 1e12:
        raise InputError("U is singular (condition number >= 1e12)")
    Y = np.vstack([unit_sphere_samples(model, samples, seed), np.eye(model.dim)])
    inv = np.linalg.solve(U, Y.T).T
    adj = gen_adjoint_apply(ctx, U, Y)
    r = norm(model, inv - adj)
    top, (y, _) = _worst(r, Y, Y)
    k = int(np.flatnonzero(np.all(Y == y, axis=1))[0])
    iso = is_isometry(ctx, U, samples=samples, tol=tol, seed=seed)
    verdict = bool(top <= tol)
    return PredicateReport(
        verdict=verdict,
        max_residual=top,
        witness=(y, adj[k]),
        samples=len(Y),
        details={"isometry_verdict": iso.verdict, "agrees": iso.verdict == verdict},
    )


def adjoint_algebra_check(ctx, A, B, lam: float, samples: int = DEFAULT_SAMPLES, tol: float = DEFAULT_TOL, seed: int = 0) -> PredicateReport:
    """Check ``(AB)^T = B^T A^T`` and ``(lam A)^T = lam A^T`` pointwise."""
    ctx = _ctx(ctx)
    model = ctx.model
    _require_smooth(model, "adjoint_algebra_check")
    A = as_operator(A, model.dim)
    B = as_operator(B, model.dim)
    Y = np.vstack([unit_sphere_samples(model, samples, seed), np.eye(model.dim)])
    AtY = gen_adjoint_apply(ctx, A, Y)
    prod = norm(model, gen_adjoint_apply(ctx, A @ B, Y) - gen_adjoint_apply(ctx, B, AtY))
    scal = norm(model, gen_adjoint_apply(ctx, lam * A, Y) - lam * AtY)
    r = np.maximum(prod, scal)
    top, wit = _worst(r, Y, AtY)
    return PredicateReport(
        verdict=bool(top <= tol),
        max_residual=top,
        witness=wit,
        samples=len(Y),
        details={"product_residual": float(prod.max()), "scalar_residual": float(scal.max())},
    )


def lp_scan_value(p: float, t: float, branch: int) -> float:
    """The two sign functions from the l_p diagonalizability argument.

    ``t`` is ``|tan phi|``. Branch 1 is
    ``(1 + t^p)^((p-2)/p) (1 + t) - 1 + t^(p-1)``, branch 2 is
    ``1 + t^(p-1) - (1 + t^p)^((p-2)/p) (1 - t)``.
    """
    if branch == 1:
        return (1.0 + t**p) ** ((p - 2.0) / p) * (1.0 + t) - 1.0 + t ** (p - 1.0)
    if branch == 2:
        return 1.0 + t ** (p - 1.0) - (1.0 + t**p) ** ((p - 2.0) / p) * (1.0 - t)
    raise InputError("branch must be 1 or 2")


def lp_rotation_scan(p_grid: Sequence[float], phi_grid: Sequence[float], branches: Sequence[int] = (1, 2)) -> dict:
    """Evaluate both sign functions over a ``p`` by ``phi`` grid.

    Returns ``{"rows": [...], "all_positive": bool, "minima": {branch: row}}``.
    Branch 2 requires ``|tan phi| < 1`` for every angle.
    """
    p_grid = [float(p) for p in p_grid]
    phi_grid = [float(f) for f in phi_grid]
    if not p_grid or not phi_grid:
        raise InputError("empty grid")
    for p in p_grid:
        if not (1.0 < p <= 100.0):
            raise InputError(f"p = {p} outside (1, 100]")
    tans = []
    for phi in phi_grid:
        if abs(np.cos(phi)) < 1e-12:
            raise InputError(f"tan is singular at phi = {phi}")
        t = abs(np.tan(phi))
        if t == 0.0:
            raise InputError("phi with tan(phi) = 0 is the identity rotation; excluded")
        if 2 in branches and t >= 1.0:
            raise InputError(f"branch 2 needs |tan phi| < 1, got {t} at phi = {phi}")
        tans.append(t)
    rows = []
    for p in p_grid:
        for phi, t in zip(phi_grid, tans):
            for br in branches:
                rows.append({"p": p, "phi": phi, "tan_phi": t, "branch": br, "f": lp_scan_value(p, t, br)})
    minima = {}
    for br in branches:
        sub = [r for r in rows if r["branch"] == br]
        minima[str(br)] = min(sub, key=lambda r: r["f"])
    return {"rows": rows, "all_positive": all(r["f"] > 0 for r in rows), "minima": minima}
