"""Real block normal forms of operators on normed spaces.

An operator that is diagonalizable over C splits into 1-D real eigenblocks and
2-D blocks ``|lambda| * [[cos phi, sin phi], [-sin phi, cos phi]]`` (one per
conjugate pair ``alpha +- beta i``). For adjoint-abelian operators and
isometries of a smooth model, the block bases are further chosen to be
s.i.p.-orthogonal and the orthogonality residuals are recorded.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np
from scipy.optimize import brentq

from .errors import DefectiveOperatorError, InputError, NumericError
from .normspace import norm
from .operators import as_operator, generalized_rotation, is_adjoint_abelian, is_isometry
from .sip import _ctx, _require_smooth, duality_map, sip

__all__ = [
    "Block",
    "NormalForm",
    "AuerbachResult",
    "real_block_decomposition",
    "auerbach_pair",
    "isometry_normal_form",
    "adjoint_abelian_normal_form",
    "reconstruct",
]

_GOLDEN = (np.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class Block:
    """One diagonal block. ``kind`` is ``"real"`` (1-D) or ``"plane"`` (2-D)."""

    kind: str
    cols: tuple
    value: float = 0.0
    modulus: float = 0.0
    angle: float = 0.0

    @property
    def dim(self) -> int:
        return len(self.cols)

    def matrix(self) -> np.ndarray:
        if self.kind == "real":
            return np.array([[self.value]])
        return generalized_rotation(self.angle, self.modulus)

    def to_dict(self) -> dict:
        if self.kind == "real":
            return {"kind": "real", "lambda": self.value, "cols": list(self.cols)}
        return {"kind": "plane", "modulus": self.modulus, "angle": self.angle, "cols": list(self.cols)}


@dataclass
class NormalForm:
    P: np.ndarray
    blocks: List[Block]
    residual: float
    checks: dict = field(default_factory=dict)

    def block_diagonal(self) -> np.ndarray:
        n = self.P.shape[0]
        D = np.zeros((n, n))
        for blk in self.blocks:
            idx = np.array(blk.cols)
            D[np.ix_(idx, idx)] = blk.matrix()
        return D

    def to_dict(self) -> dict:
        from .operators import _jsonable

        return {
            "P": self.P.tolist(),
            "blocks": [b.to_dict() for b in self.blocks],
            "residual": float(self.residual),
            "checks": _jsonable(self.checks),
        }


@dataclass
class AuerbachResult:
    found: bool
    a: Optional[np.ndarray]
    b: Optional[np.ndarray]
    residual: float

    def to_dict(self) -> dict:
        return {
            "found": self.found,
            "a": None if self.a is None else self.a.tolist(),
            "b": None if self.b is None else self.b.tolist(),
            "residual": self.residual,
        }


def reconstruct(nf: NormalForm) -> np.ndarray:
    """``P @ blockdiag @ P^{-1}``."""
    P = np.asarray(nf.P, dtype=float)
    if np.linalg.cond(P) >= 1e12:
        raise NumericError("basis matrix P is singular")
    return P @ nf.block_diagonal() @ np.linalg.inv(P)


def _relative_residual(P, D, A) -> float:
    R = P @ D @ np.linalg.inv(P) - A
    scale = np.linalg.norm(A)
    return float(np.linalg.norm(R) / scale) if scale > 0 else float(np.linalg.norm(R))


def _angle(alpha: float, beta: float) -> float:
    phi = np.arctan2(beta, alpha)
    return float(phi if phi > 0 else phi + 2 * np.pi)


def real_block_decomposition(A, tol: float = 1e-8) -> NormalForm:
    """Split ``A`` into real 1-D and 2-D blocks via a dense eigensolver.

    Raises :class:`DefectiveOperatorError` if ``A`` is not diagonalizable
    over C (a nontrivial Jordan block).
    """
    A = as_operator(A)
    n = A.shape[0]
    w, V = np.linalg.eig(A)
    scale = max(1.0, float(np.abs(A).max()))
    Vn = V / np.linalg.norm(V, axis=0)
    cond = np.linalg.cond(Vn)
    if not np.isfinite(cond) or cond > 1e8:
        G = np.abs(Vn.conj().T @ Vn)
        np.fill_diagonal(G, 0)
        i, j = np.unravel_index(np.argmax(G), G.shape)
        raise DefectiveOperatorError(
            f"operator is not diagonalizable: eigenvalue {w[i]:.6g} carries a Jordan block "
            f"(eigenvector matrix condition number {cond:.3g})",
            cond,
        )
    pair_tol = 1e-9 * scale
    is_real = np.abs(w.imag) <= pair_tol
    upper = np.flatnonzero(~is_real & (w.imag > 0))
    lower = np.flatnonzero(~is_real & (w.imag < 0))
    if len(upper) != len(lower):
        raise NumericError("complex eigenvalues do not pair with their conjugates")
    # pair each upper-half eigenvalue with its conjugate
    remaining = list(lower)
    for k in upper:
        d = [abs(w[j] - np.conj(w[k])) for j in remaining]
        j = int(np.argmin(d))
        if d[j] > max(pair_tol, 1e-9 * abs(w[k])) * 1e3:
            raise NumericError(f"eigenvalue {w[k]} has no conjugate partner")
        remaining.pop(j)

    reals = sorted(np.flatnonzero(is_real), key=lambda k: (-w[k].real, k))
    planes = sorted(upper, key=lambda k: (abs(w[k]), _angle(w[k].real, w[k].imag), k))
    cols, blocks = [], []
    for k in reals:
        v = V[:, k].real.copy()
        v /= np.linalg.norm(v)
        blocks.append(Block("real", (len(cols),), value=float(w[k].real)))
        cols.append(v)
    for k in planes:
        u = V[:, k]
        # rotate the phase so that Re u and Im u are Euclidean-orthogonal
        t = 0.5 * np.arctan2(-2 * (u.real @ u.imag), u.real @ u.real - u.imag @ u.imag)
        u = u * np.exp(1j * t)
        if np.linalg.norm(u.real) < np.linalg.norm(u.imag):
            u = u * 1j
        a, b = u.real, u.imag
        s = np.linalg.norm(a)
        lam = w[k]
        blocks.append(
            Block("plane", (len(cols), len(cols) + 1), modulus=float(abs(lam)), angle=_angle(lam.real, lam.imag))
        )
        cols.extend([a / s, b / s])
    P = np.column_stack(cols) if cols else np.zeros((n, 0))
    nf = NormalForm(P=P, blocks=blocks, residual=0.0)
    nf.residual = _relative_residual(P, nf.block_diagonal(), A)
    if nf.residual > tol:
        raise NumericError(f"block reconstruction residual {nf.residual:.3e} exceeds {tol:.1e}", nf.residual)
    return nf


def _golden_min(f, lo, hi, iters=100):
    c = hi - _GOLDEN * (hi - lo)
    d = lo + _GOLDEN * (hi - lo)
    fc, fd = f(c), f(d)
    for _ in range(iters):
        if fc < fd:
            hi, d, fd = d, c, fc
            c = hi - _GOLDEN * (hi - lo)
            fc = f(c)
        else:
            lo, c, fc = c, d, fd
            d = lo + _GOLDEN * (hi - lo)
            fd = f(d)
        if hi - lo < 1e-15:
            break
    return (c, fc) if fc < fd else (d, fd)


def auerbach_pair(ctx, plane_basis, tol: float = 1e-9, grid: int = 2048) -> AuerbachResult:
    """Find unit ``a, b`` spanning the plane with ``[a, b] = [b, a] = 0``.

    For each direction ``a(theta)`` the partner ``b`` is the unit vector of the
    plane with ``[b, a] = 0``; the search then looks for ``[a, b] = 0`` on a
    ``grid``-point scan of the half circle, refined by root bracketing (or by
    golden-section on ``|[a, b]|`` when no sign change is seen). Failure is
    reported, not raised.
    """
    ctx = _ctx(ctx)
    model = ctx.model
    _require_smooth(model, "auerbach_pair")
    B = np.asarray(plane_basis, dtype=float)
    if B.shape != (2, model.dim):
        raise InputError("plane_basis must be two vectors of the model dimension")
    B = B.T
    Q, R = np.linalg.qr(B)
    if abs(np.linalg.det(R)) < 1e-12 * max(1.0, np.abs(B).max()) ** 2:
        raise InputError("plane_basis vectors are linearly dependent")
    # keep the orientation and the first direction of the given basis
    Q = Q * np.sign(np.diag(R))

    def pair(theta):
        theta = np.atleast_1d(theta)
        a = np.column_stack([np.cos(theta), np.sin(theta)]) @ Q.T
        a /= norm(model, a)[:, None]
        g = duality_map(ctx, a) @ Q
        b = np.column_stack([-g[:, 1], g[:, 0]]) @ Q.T
        b /= norm(model, b)[:, None]
        return a, b

    def gap(theta):
        a, b = pair(theta)
        return sip(ctx, a, b)

    thetas = np.arange(grid) * np.pi / grid
    vals = gap(thetas)
    root = None
    zero = np.flatnonzero(vals == 0)
    flips = np.flatnonzero(np.sign(vals[:-1]) * np.sign(vals[1:]) < 0)
    if len(zero) and (not len(flips) or zero[0] <= flips[0]):
        root = thetas[zero[0]]
    elif len(flips):
        k = flips[0]
        root = brentq(lambda t: float(gap(t)[0]), thetas[k], thetas[k + 1], xtol=1e-15, rtol=4 * np.finfo(float).eps)
    else:
        k = int(np.argmin(np.abs(vals)))
        lo, hi = thetas[k] - np.pi / grid, thetas[k] + np.pi / grid
        root, _ = _golden_min(lambda t: abs(float(gap(t)[0])), lo, hi)
    a, b = pair(root)
    a, b = a[0], b[0]
    residual = float(max(abs(sip(ctx, a, b)), abs(sip(ctx, b, a))))
    return AuerbachResult(found=residual <= tol, a=a, b=b, residual=residual)


def _flag_basis(ctx, E: np.ndarray) -> np.ndarray:
    """Unit basis ``u_1..u_k`` of span(E) with ``[u_j, u_i] = 0`` for ``j > i``."""
    model = ctx.model
    k = E.shape[1]
    out = []
    for j in range(k):
        if out:
            U = np.column_stack(out)
            C = duality_map(ctx, U.T) @ E  # constraints on coefficients
            _, _, Vt = np.linalg.svd(C)
            N = Vt[len(out):].T
            # pick the admissible vector closest to the j-th input column
            coef = N @ (N.T @ np.eye(k)[:, j])
            if np.linalg.norm(coef) < 1e-8:
                coef = N[:, 0]
            v = E @ coef
        else:
            v = E[:, 0].copy()
        out.append(v / norm(model, v))
    return np.column_stack(out)


def _plane_auerbach_basis(ctx, a: np.ndarray, b: np.ndarray, grid: int = 2048):
    """Rotate ``(a, b)`` inside its compatible family towards an Auerbach pair.

    The family ``(cos t a - sin t b, sin t a + cos t b)`` leaves the block matrix
    unchanged. Returns the best member (both scaled by the same factor so that
    the first has unit norm) and its residual.
    """
    model = ctx.model

    def members(t):
        t = np.atleast_1d(t)
        c, s = np.cos(t)[:, None], np.sin(t)[:, None]
        return c * a - s * b, s * a + c * b

    def resid(t):
        x, y = members(t)
        nx, ny = norm(model, x), norm(model, y)
        r1 = np.abs(sip(ctx, x, y)) / (nx * ny)
        r2 = np.abs(sip(ctx, y, x)) / (nx * ny)
        r3 = np.abs(nx / ny - 1.0)
        return np.maximum(np.maximum(r1, r2), r3)

    ts = np.arange(grid) * (np.pi / 2) / grid
    vals = resid(ts)
    k = int(np.argmin(vals))
    h = (np.pi / 2) / grid
    t, r = _golden_min(lambda s: float(resid(s)[0]), ts[k] - h, ts[k] + h)
    if vals[k] <= r:
        t, r = ts[k], float(vals[k])
    x, y = members(t)
    s = norm(model, x[0])
    return x[0] / s, y[0] / s, float(r)


def _orthogonality_table(ctx, P: np.ndarray, blocks: List[Block]):
    model = ctx.model
    unit = P / norm(model, P.T)[None, :]
    rows = []
    flag = 0.0
    mutual = 0.0
    for i, bi in enumerate(blocks):
        for j, bj in enumerate(blocks):
            if i == j:
                continue
            X = unit[:, list(bj.cols)].T
            Y = unit[:, list(bi.cols)].T
            # residual of [v, u] = 0 with v from block j, u from block i
            r = float(max(abs(sip(ctx, x, y)) for x in X for y in Y))
            rows.append({"later": j, "earlier": i, "residual": r})
            mutual = max(mutual, r)
            if j > i:
                flag = max(flag, r)
    return rows, flag, mutual


def _refine_real_groups(ctx, nf: NormalForm, tol: float) -> np.ndarray:
    P = nf.P.copy()
    reals = [b for b in nf.blocks if b.kind == "real"]
    used = set()
    for b in reals:
        if b.cols[0] in used:
            continue
        group = [c.cols[0] for c in reals if abs(c.value - b.value) <= 1e3 * tol * max(1.0, abs(b.value))]
        used.update(group)
        if len(group) == 1:
            P[:, group[0]] /= norm(ctx.model, P[:, group[0]])
            continue
        E = P[:, group]
        if len(group) == 2:
            res = auerbach_pair(ctx, E.T)
            if res.found:
                P[:, group[0]], P[:, group[1]] = res.a, res.b
                continue
        P[:, group] = _flag_basis(ctx, E)
    return P


def _restricted_isometry_residual(ctx, A, basis, scale: float, m: int = 64) -> float:
    """Max deviation of ``A / scale`` from an isometry on ``span(basis)``."""
    model = ctx.model
    t = np.arange(m) * 2 * np.pi / m
    Z = np.column_stack([np.cos(t), np.sin(t)]) @ basis.T
    Z /= norm(model, Z)[:, None]
    W = np.roll(Z, m // 3, axis=0)
    AZ, AW = Z @ A.T / scale, W @ A.T / scale
    r1 = np.abs(norm(model, AZ) - 1.0)
    r2 = np.abs(sip(ctx, AZ, AW) - sip(ctx, Z, W))
    return float(max(r1.max(), r2.max()))


def _plane_checks(ctx, A, nf: NormalForm, tol: float, adjoint_abelian: bool = False):
    P = nf.P
    out = []
    for idx, blk in enumerate(nf.blocks):
        if blk.kind != "plane":
            continue
        i, j = blk.cols
        a, b = _plane_auerbach_basis(ctx, P[:, i], P[:, j])[:2]
        P[:, i], P[:, j] = a, b
        basis = P[:, [i, j]]
        generic = auerbach_pair(ctx, basis.T, tol=max(tol, 1e-9))
        own = float(max(abs(sip(ctx, a, b)), abs(sip(ctx, b, a)), abs(norm(ctx.model, b) - 1.0)))
        entry = {
            "block": idx,
            "basis_auerbach_residual": own,
            "auerbach_pair": generic.to_dict(),
            "restricted_isometry_residual": _restricted_isometry_residual(ctx, A, basis, blk.modulus),
        }
        if adjoint_abelian:
            # F_phi itself must be adjoint abelian on the plane
            Fop = basis @ generalized_rotation(blk.angle) @ np.linalg.pinv(basis)
            X, Y = unit_circle_pairs(ctx, basis)
            entry["rotation_adjoint_abelian_residual"] = float(
                np.max(np.abs(sip(ctx, X @ Fop.T, Y) - sip(ctx, X, Y @ Fop.T)))
            )
        out.append(entry)
    return out


def unit_circle_pairs(ctx, basis, m: int = 48):
    t = np.arange(m) * 2 * np.pi / m
    Z = np.column_stack([np.cos(t), np.sin(t)]) @ np.asarray(basis).T
    Z /= norm(ctx.model, Z)[:, None]
    ii, jj = np.meshgrid(np.arange(m), np.arange(m), indexing="ij")
    return Z[ii.ravel()], Z[jj.ravel()]


def isometry_normal_form(ctx, U, tol: float = 1e-8, check_tol: float = 1e-6) -> NormalForm:
    """Normal form of an isometry: ``+1`` blocks, ``-1`` blocks, rotation planes.

    ``checks`` records the modulus and eigenvalue deviations, the pairwise
    s.i.p. orthogonality table between blocks, and an Auerbach residual for
    each rotation plane.
    """
    ctx = _ctx(ctx)
    _require_smooth(ctx.model, "isometry_normal_form")
    U = as_operator(U, ctx.model.dim)
    rep = is_isometry(ctx, U, tol=check_tol)
    if not rep.verdict:
        raise InputError(f"operator is not an isometry (residual {rep.max_residual:.3e})")
    nf = real_block_decomposition(U, tol=tol)
    nf.P = _refine_real_groups(ctx, nf, tol)
    planes = _plane_checks(ctx, U, nf, tol)
    nf.residual = _relative_residual(nf.P, nf.block_diagonal(), U)
    rows, flag, mutual = _orthogonality_table(ctx, nf.P, nf.blocks)
    n = U.shape[0]
    n_real = sum(1 for b in nf.blocks if b.kind == "real")
    nf.checks = {
        "isometry_residual": rep.max_residual,
        "modulus_deviation": max([abs(b.modulus - 1.0) for b in nf.blocks if b.kind == "plane"], default=0.0),
        "eigenvalue_deviation": max([abs(abs(b.value) - 1.0) for b in nf.blocks if b.kind == "real"], default=0.0),
        "n_minus_l_even": (n - n_real) % 2 == 0,
        "orthogonality": rows,
        "max_flag_orthogonality": flag,
        "max_mutual_orthogonality": mutual,
        "planes": planes,
    }
    return nf


def adjoint_abelian_normal_form(ctx, A, tol: float = 1e-8, check_tol: float = 1e-6) -> NormalForm:
    """Normal form of an adjoint-abelian operator with the flag residuals.

    ``checks['max_flag_orthogonality']`` is the largest ``|[v, u]|`` over unit
    basis vectors ``u`` of a block and ``v`` of any later block.
    """
    ctx = _ctx(ctx)
    _require_smooth(ctx.model, "adjoint_abelian_normal_form")
    A = as_operator(A, ctx.model.dim)
    rep = is_adjoint_abelian(ctx, A, tol=check_tol)
    if not rep.verdict:
        raise InputError(f"operator is not adjoint abelian (residual {rep.max_residual:.3e})")
    nf = real_block_decomposition(A, tol=tol)
    nf.P = _refine_real_groups(ctx, nf, tol)
    planes = _plane_checks(ctx, A, nf, tol, adjoint_abelian=True)
    nf.residual = _relative_residual(nf.P, nf.block_diagonal(), A)
    rows, flag, mutual = _orthogonality_table(ctx, nf.P, nf.blocks)
    nf.checks = {
        "adjoint_abelian_residual": rep.max_residual,
        "orthogonality": rows,
        "max_flag_orthogonality": flag,
        "max_mutual_orthogonality": mutual,
        "planes": planes,
    }
    return nf
