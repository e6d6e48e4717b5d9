"""Birkhoff and James orthogonality.

``x`` is Birkhoff orthogonal to ``y`` (``x _|_B y``) when ``||x + t y|| >= ||x||``
for every real ``t``. The relation is not symmetric outside Radon planes.
James orthogonality is ``||x + y|| = ||x - y||``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .errors import InputError, UnsupportedOperationError
from .normspace import NormModel, _as_vectors, norm
from .sip import rho_minus, rho_plus

__all__ = ["OrthoResult", "birkhoff", "birkhoff_direction", "james", "james_residual", "direction_sign_changes"]

GOLDEN_ITERS = 200
_INVPHI = (np.sqrt(5.0) - 1.0) / 2.0


@dataclass
class OrthoResult:
    """Outcome of a Birkhoff test.

    ``margin`` is ``min_t ||x + t y|| - ||x||`` (zero or negative);
    ``rho_interval`` holds ``(rho_minus(x, y), rho_plus(x, y))`` and
    ``rho_agrees`` whether the derivative test gives the same verdict.
    """

    orthogonal: bool
    margin: float
    minimizer_t: float
    rho_interval: tuple = (0.0, 0.0)
    rho_agrees: bool = True

    def to_dict(self) -> dict:
        return {
            "orthogonal": bool(self.orthogonal),
            "margin": float(self.margin),
            "minimizer_t": float(self.minimizer_t),
            "rho_interval": [float(v) for v in self.rho_interval],
            "rho_agrees": bool(self.rho_agrees),
        }


def _golden(f, lo: float, hi: float, iters: int = GOLDEN_ITERS):
    a, b = lo, hi
    c = b - _INVPHI * (b - a)
    d = a + _INVPHI * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(iters):
        if b - a <= 1e-15 * max(1.0, abs(a) + abs(b)):
            break
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - _INVPHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + _INVPHI * (b - a)
            fd = f(d)
    return (c, fc) if fc <= fd else (d, fd)


def birkhoff(model: NormModel, x, y, tol: float = 1e-9) -> OrthoResult:
    """Test ``x _|_B y`` by minimizing ``t -> ||x + t y||``.

    The search runs golden-section over ``[-10 ||x||/||y||, 10 ||x||/||y||]``.
    Floating point cannot resolve ``t`` below the flat bottom of the
    minimum, so ``t = 0`` is reported whenever ``||x||`` is within a few ulps
    of the minimal value.
    """
    x = _as_vectors(model, x)
    y = _as_vectors(model, y)
    if x.ndim != 1 or y.ndim != 1:
        raise InputError("birkhoff expects single vectors")
    nx, ny = norm(model, x), norm(model, y)
    if nx == 0 or ny == 0:
        raise InputError("birkhoff needs x != 0 and y != 0")
    R = 10.0 * nx / ny

    def f(t):
        return norm(model, x + t * y)

    t_star, f_star = _golden(f, -R, R)
    if nx <= f_star + 8.0 * np.finfo(float).eps * nx:
        t_star, f_star = 0.0, nx
    orth = abs(t_star) <= tol
    lo, hi = rho_minus(model, x, y), rho_plus(model, x, y)
    # derivative test: rho_minus <= 0 <= rho_plus
    slack = 1e-6 * nx * ny if model.kind == "polytopal" else 1e-10 * nx * ny
    by_rho = lo <= slack and hi >= -slack
    return OrthoResult(
        orthogonal=bool(orth),
        margin=float(min(f_star, nx) - nx),
        minimizer_t=float(t_star),
        rho_interval=(float(lo), float(hi)),
        rho_agrees=bool(by_rho == orth),
    )


def _unit_dir(model, theta):
    u = np.array([np.cos(theta), np.sin(theta)])
    return u / norm(model, u)


def birkhoff_direction(model: NormModel, g, tol: float = 1e-12) -> np.ndarray:
    """The unit ``d`` with ``d _|_B g`` in a strictly convex plane.

    The sign is fixed by ``det[g d] > 0``. Found by root bracketing on
    ``theta -> rho_plus(d(theta), g)`` over the half-turn after ``g``.
    """
    if model.dim != 2:
        raise InputError("birkhoff_direction works in planes (dim 2)")
    if not model.is_strictly_convex:
        raise UnsupportedOperationError("birkhoff_direction needs a strictly convex plane")
    g = _as_vectors(model, g)
    if not np.any(g != 0):
        raise InputError("g must be nonzero")
    g = g / norm(model, g)
    th0 = np.arctan2(g[1], g[0])

    def h(th):
        return rho_plus(model, _unit_dir(model, th), g)

    # h > 0 just after g and h < 0 just before -g
    a, b = th0 + 1e-9, th0 + np.pi - 1e-9
    th = brentq(h, a, b, xtol=max(tol, 1e-15), rtol=4 * np.finfo(float).eps, maxiter=200)
    d = _unit_dir(model, th)
    if g[0] * d[1] - g[1] * d[0] < 0:
        d = -d
    return d


def direction_sign_changes(model: NormModel, g, count: int = 720) -> int:
    """Number of sign changes of ``rho_plus(d(theta), g)`` around the full circle."""
    g = _as_vectors(model, g)
    th = np.arange(count) * 2.0 * np.pi / count
    U = np.column_stack([np.cos(th), np.sin(th)])
    U /= norm(model, U)[:, None]
    h = rho_plus(model, U, np.broadcast_to(g, U.shape))
    s = np.sign(h)
    return int(np.count_nonzero(s != np.roll(s, -1)))


def james_residual(model: NormModel, x, y) -> float:
    x = _as_vectors(model, x)
    y = _as_vectors(model, y)
    return float(abs(norm(model, x + y) - norm(model, x - y)))


def james(model: NormModel, x, y, tol: float = 1e-9) -> bool:
    """James orthogonality ``||x + y|| = ||x - y||`` within ``tol``."""
    return james_residual(model, x, y) <= tol
