"""Norm derivatives, the semi-inner product, and the duality map.

Conventions: ``rho_plus(x, y)`` and ``rho_minus(x, y)`` are the one-sided
derivatives ``lim_{t -> 0+/-} (||x + t y||^2 - ||x||^2) / (2 t)``. On smooth
models they coincide and define the semi-inner product with swapped slots,
``sip(u, v) = [u, v] = rho_plus(v, u)``; ``[u, v]`` is linear in ``u`` and
``[v, v] = ||v||^2``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InputError, NumericError, UnsupportedOperationError
from .normspace import NormModel, _as_vectors, _lp_norm, dual_norm, norm

__all__ = [
    "SipContext",
    "rho_plus",
    "rho_minus",
    "rho_fd",
    "sip",
    "duality_map",
    "riesz_representer",
]


@dataclass(frozen=True)
class SipContext:
    model: NormModel
    fd_step: float = 1e-5
    tol: float = 1e-12

    def __post_init__(self):
        if not (1e-10 <= self.fd_step <= 1e-3):
            raise InputError("fd_step must lie in [1e-10, 1e-3]")
        if not self.tol >= 1e-12:
            raise InputError("tol must be at least 1e-12")


def _ctx(ctx) -> SipContext:
    # accept a bare model wherever a context is expected
    return ctx if isinstance(ctx, SipContext) else SipContext(ctx)


def _scalar(out):
    return float(out) if np.ndim(out) == 0 else out


def _lp_rho(x, y, p):
    nx = _lp_norm(x, p)
    safe = np.where(nx > 0, nx, 1.0)
    u = x / safe[..., None]
    w = np.abs(u) ** (p - 1.0) * np.sign(u)
    return np.where(nx > 0, nx * np.sum(w * y, axis=-1), 0.0)


def rho_fd(ctx, x, y, side: int = 1):
    """Finite-difference oracle for ``rho_plus`` (``side=1``) or ``rho_minus``.

    One-sided steps ``h, h/2, h/4`` combined by two rounds of Richardson
    extrapolation. Works for every model kind.
    """
    ctx = _ctx(ctx)
    model = ctx.model
    x = _as_vectors(model, x)
    y = _as_vectors(model, y)
    x, y = np.broadcast_arrays(x, y)
    nx = np.asarray(norm(model, x))
    ny = np.asarray(norm(model, y))
    h = side * ctx.fd_step * np.maximum(1.0, nx) / np.maximum(1.0, ny)

    def quotient(t):
        return (np.asarray(norm(model, x + t[..., None] * y)) ** 2 - nx**2) / (2.0 * t)

    d1, d2, d4 = quotient(h), quotient(h / 2), quotient(h / 4)
    r1 = 2.0 * d2 - d1
    r2 = 2.0 * d4 - d2
    out = (4.0 * r2 - r1) / 3.0
    return _scalar(np.where(nx > 0, out, 0.0))


def _rho(ctx, x, y, side):
    ctx = _ctx(ctx)
    model = ctx.model
    x = _as_vectors(model, x)
    y = _as_vectors(model, y)
    if model.kind == "lp":
        x, y = np.broadcast_arrays(x, y)
        return _scalar(_lp_rho(x, y, model.p))
    if model.kind == "quadratic":
        return _scalar(np.einsum("...i,ij,...j->...", x, model.G, y))
    return rho_fd(ctx, x, y, side)


def rho_plus(ctx, x, y):
    """Right norm derivative. Closed form on lp and quadratic models."""
    return _rho(ctx, x, y, 1)


def rho_minus(ctx, x, y):
    """Left norm derivative, ``rho_minus(x, y) = -rho_plus(x, -y)``."""
    return _rho(ctx, x, y, -1)


def _require_smooth(model: NormModel, what: str):
    if not model.is_smooth:
        raise UnsupportedOperationError(
            f"{what} needs a smooth model; classify() reports {model.kind} as non-smooth"
        )


def sip(ctx, u, v):
    """Semi-inner product ``[u, v]``: linear in ``u``, ``[v, v] = ||v||^2``."""
    ctx = _ctx(ctx)
    _require_smooth(ctx.model, "sip")
    return rho_plus(ctx, v, u)


def duality_map(ctx, y) -> np.ndarray:
    """Coefficients ``c`` of the functional ``x -> [x, y]``.

    Accepts ``(n,)`` or ``(m, n)``; rows of ``y`` must be nonzero.
    """
    ctx = _ctx(ctx)
    model = ctx.model
    _require_smooth(model, "duality_map")
    y = _as_vectors(model, y)
    ny = np.asarray(norm(model, y))
    if np.any(ny == 0):
        raise InputError("duality_map is undefined at y = 0")
    if model.kind == "quadratic":
        return y @ model.G
    u = y / ny[..., None]
    return ny[..., None] * np.abs(u) ** (model.p - 1.0) * np.sign(u)


def riesz_representer(ctx, c, method: str = "auto", max_iter: int = 200, tol: float = 1e-8):
    """Inverse duality map: the vector ``y`` with ``[x, y] = c . x`` for all ``x``.

    ``method="auto"`` uses the closed forms (conjugate-exponent map for lp,
    ``G^{-1} c`` for quadratic models); ``method="newton"`` runs a damped Newton
    iteration on ``y -> duality_map(y) - c`` and is kept as a generic fallback.
    """
    ctx = _ctx(ctx)
    model = ctx.model
    _require_smooth(model, "riesz_representer")
    c = _as_vectors(model, c)
    scale = np.abs(c).max(axis=-1)
    if np.any(scale == 0):
        raise InputError("riesz_representer is undefined at c = 0")
    if method == "newton":
        flat = c.reshape(-1, model.dim)
        out = np.array([_riesz_newton(ctx, row, max_iter, tol) for row in flat])
        return out.reshape(c.shape)
    if method != "auto":
        raise InputError(f"unknown method {method!r}")
    if model.kind == "quadratic":
        return np.linalg.solve(model.G, c.reshape(-1, model.dim).T).T.reshape(c.shape)
    p = model.p
    chat = c / scale[..., None]
    w = np.sign(chat) * np.abs(chat) ** (1.0 / (p - 1.0))
    # duality_map(w) = ||w||^(2-p) * chat and duality_map is 1-homogeneous
    nw = _lp_norm(w, p)
    return scale[..., None] * w * nw[..., None] ** (p - 2.0)


def _riesz_newton(ctx: SipContext, c: np.ndarray, max_iter: int, tol: float) -> np.ndarray:
    # minimize f(y) = ||y||^2 / 2 - c . y, whose gradient is duality_map(y) - c
    model = ctx.model
    n = model.dim
    cnorm = np.abs(c).max()
    y = c / max(np.linalg.norm(c), 1e-300) * dual_norm(model, c)

    def f(z):
        return 0.5 * norm(model, z) ** 2 - c @ z

    resid = np.inf
    for _ in range(max_iter):
        g = duality_map(ctx, y) - c
        resid = np.abs(g).max() / cnorm
        if resid <= tol:
            return y
        h = 1e-6 * max(1.0, np.abs(y).max())
        H = np.empty((n, n))
        for j in range(n):
            e = np.zeros(n)
            e[j] = h
            H[:, j] = (duality_map(ctx, y + e) - duality_map(ctx, y - e)) / (2 * h)
        H = 0.5 * (H + H.T) + 1e-14 * np.eye(n)
        try:
            step = -np.linalg.solve(H, g)
        except np.linalg.LinAlgError:
            step = -g
        if step @ g >= 0:
            step = -g
        fy = f(y)
        a = 1.0
        while a > 1e-12:
            cand = y + a * step
            if np.any(cand != 0) and f(cand) <= fy + 1e-4 * a * (g @ step):
                break
            a *= 0.5
        y = y + a * step
    g = duality_map(ctx, y) - c
    resid = np.abs(g).max() / cnorm
    if resid <= tol:
        return y
    raise NumericError(f"Newton iteration for the Riesz representer stalled at residual {resid:.3e}", resid)
