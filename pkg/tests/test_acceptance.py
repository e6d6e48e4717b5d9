"""Acceptance gate: one PASS/FAIL line per criterion.

Each ``criterion_k`` function computes a JSON-serializable artifact and a
verdict at the stated tolerance. The tests print the line, then assert the
verdict. Run this file directly to print only the summary lines.
"""

import json
import os
import sys

import numpy as np
import pytest

from minkkit import (
    LineSpec,
    NormModel,
    classify_composition,
    compose,
    group_report,
    is_adjoint_abelian,
    is_isometry,
    isometry_normal_form,
    john,
    left_reflection,
    lowner,
    named_polytope,
    norm,
    polytopal_isometry_group,
    real_block_decomposition,
    rho_minus,
    rho_plus,
    sip,
    unit_sphere_samples,
)
from minkkit.ellipsoid import contact_points, coplanar_contacts, john_from_polar, remark_body_polar_samples, remark_body_samples
from minkkit.operators import _jsonable, ellipse_example_operator, lp_rotation_scan, lp_scan_value
from minkkit.reflect import euclidean_battery, fixed_lines_scan
from minkkit.sip import rho_fd
from minkkit.spectral import reconstruct

sys.path.insert(0, os.path.dirname(__file__))
from test_spectral import random_diagonalizable  # noqa: E402

SEED = 20240601
LINES = {}


def report(k, passed, summary):
    line = f"criterion {k}: {'PASS' if passed else 'FAIL'}  {summary}"
    LINES[k] = line
    print(line)
    return line


# 1. semi-inner product axioms and the norm-derivative properties


def _derivative_residuals(model, rng, count=200):
    X = rng.standard_normal((count, 2))
    Y = rng.standard_normal((count, 2))
    Z = rng.standard_normal((count, 2))
    a = rng.uniform(0.1, 3.0, count)
    lam = rng.uniform(-3.0, 3.0, count)
    nX = norm(model, X)
    nY = norm(model, Y)
    rp, rm = rho_plus(model, X, Y), rho_minus(model, X, Y)
    res = {}
    res["p1_shift"] = max(
        np.abs(rho_plus(model, X, lam[:, None] * X + Y) - (lam * nX**2 + rp)).max(),
        np.abs(rho_minus(model, X, lam[:, None] * X + Y) - (lam * nX**2 + rm)).max(),
    )
    res["p2_positive_scale"] = max(
        np.abs(rho_plus(model, a[:, None] * X, Y) - a * rp).max(),
        np.abs(rho_plus(model, X, a[:, None] * Y) - a * rp).max(),
        np.abs(rho_minus(model, a[:, None] * X, Y) - a * rm).max(),
    )
    res["p3_negative_scale"] = max(
        np.abs(rho_plus(model, -a[:, None] * X, Y) + a * rm).max(),
        np.abs(rho_plus(model, X, -a[:, None] * Y) + a * rm).max(),
        np.abs(rho_minus(model, -a[:, None] * X, Y) + a * rp).max(),
    )
    res["p4_diagonal"] = np.abs(rho_plus(model, a[:, None] * X, X) - a * nX**2).max()
    res["p5_bound"] = np.maximum(np.abs(rp) - nX * nY, 0).max()
    res["p6_order"] = np.maximum(rm - rp, 0).max()
    res["p7_subadditive"] = np.maximum(rho_plus(model, X, Y + Z) - rp - rho_plus(model, X, Z), 0).max()
    res["p8_superadditive"] = np.maximum(rm + rho_minus(model, X, Z) - rho_minus(model, X, Y + Z), 0).max()
    h = 1e-9
    # Lipschitz in the second slot with constant ||x||: scale out the step
    res["p9_continuity"] = np.maximum(np.abs(rho_plus(model, X, Y + h * Z) - rp) - h * nX * norm(model, Z) * (1 + 1e-6), 0).max()
    res["p10_smooth_sip"] = max(np.abs(rp - rm).max(), np.abs(sip(model, Y, X) - rp).max())
    # semi-inner product axioms s1-s4
    res["s1_additive"] = np.abs(sip(model, X + Z, Y) - sip(model, X, Y) - sip(model, Z, Y)).max()
    res["s2_homogeneous"] = max(
        np.abs(sip(model, lam[:, None] * X, Y) - lam * sip(model, X, Y)).max(),
        np.abs(sip(model, X, lam[:, None] * Y) - lam * sip(model, X, Y)).max(),
    )
    res["s3_positive"] = max(np.abs(sip(model, X, X) - nX**2).max(), float(np.any(sip(model, X, X) <= 0)))
    res["s4_cauchy_schwarz"] = np.maximum(sip(model, X, Y) ** 2 - sip(model, X, X) * sip(model, Y, Y), 0).max()
    fd = max(np.abs(rho_fd(model, X, Y) - rp).max(), np.abs(rho_fd(model, X, Y, -1) - rm).max())
    return {k: float(v) for k, v in res.items()}, float(fd)


def criterion_1():
    rng = np.random.default_rng(SEED)
    models = {f"lp{p}": NormModel.lp(p) for p in (1.5, 2.0, 3.0, 4.0)}
    models["quadratic"] = NormModel.quadratic([[2.0, 0.5], [0.5, 1.0]])
    models["ellipse"] = NormModel.quadratic(np.diag([0.25, 1.0]))
    art = {}
    worst, worst_fd = 0.0, 0.0
    for name, model in models.items():
        res, fd = _derivative_residuals(model, rng)
        art[name] = {"residuals": res, "fd_agreement": fd}
        worst = max(worst, max(res.values()))
        worst_fd = max(worst_fd, fd)
    ok = worst <= 1e-7 and worst_fd <= 1e-6
    return ok, {"models": art, "max_residual": worst, "max_fd": worst_fd}, (
        f"s.i.p. axioms and ten derivative properties on {len(models)} models x 200 instances: "
        f"max residual {worst:.2e} (<= 1e-7), finite-difference agreement {worst_fd:.2e} (<= 1e-6)"
    )


# 2. the ellipse example


def criterion_2():
    a, b = 2.0, 1.0
    model = NormModel.quadratic(np.diag([1 / a**2, 1 / b**2]))
    e, f = np.eye(2)
    art = {}
    iso_ok, wit_ok = True, True
    for phi in (np.pi / 6, np.pi / 2):
        F = ellipse_example_operator(a, b, phi)
        iso = is_isometry(model, F, tol=1e-9, seed=SEED)
        aa = is_adjoint_abelian(model, F, seed=SEED)
        lhs, rhs = sip(model, F @ e, f), sip(model, e, F @ f)
        dl = abs(lhs + a / b**3 * np.sin(phi))
        dr = abs(rhs - b / a**3 * np.sin(phi))
        art[f"{phi:.6f}"] = {
            "isometry_residual": iso.max_residual,
            "adjoint_abelian_verdict": aa.verdict,
            "F(e)_f": lhs,
            "e_F(f)": rhs,
            "witness_errors": [dl, dr],
        }
        iso_ok &= iso.max_residual <= 1e-9
        wit_ok &= (not aa.verdict) and dl <= 1e-10 and dr <= 1e-10
    worst_iso = max(v["isometry_residual"] for v in art.values())
    ok = iso_ok and wit_ok
    return ok, art, (
        f"ellipse example a=2 b=1: witness values {'match' if wit_ok else 'MISMATCH'} to 1e-10 and "
        f"adjoint-abelian fails as stated; is_isometry residual {worst_iso:.3g} "
        f"({'<=' if iso_ok else '>'} 1e-9) for the displayed matrix"
    )


# 3. the l_p sign functions


def criterion_3():
    tans = np.linspace(0.05, 0.95, 21)
    phi = np.arctan(tans)
    p_grid = np.linspace(1.1, 10.0, 21)
    at2 = lp_rotation_scan([2.0], phi, (1,))["rows"]
    err2 = max(abs(r["f"] - 2 * r["tan_phi"]) for r in at2)
    dev50 = np.array([abs(lp_scan_value(50.0, t, 1) - t) for t in tans])
    scan = lp_rotation_scan(p_grid, phi, (1, 2))
    ok2, ok50, okpos = err2 <= 1e-12, bool(dev50.max() <= 0.05), scan["all_positive"]
    bad = tans[dev50 > 0.05]
    art = {
        "p2_max_error": err2,
        "p50_deviation": dev50.tolist(),
        "p50_failing_tan": bad.tolist(),
        "grid_points": len(p_grid) * len(phi),
        "all_positive": okpos,
        "minima": scan["minima"],
    }
    return ok2 and ok50 and okpos, art, (
        f"l_p scan: f(2,phi)=2tan(phi) error {err2:.1e}; both branches positive on "
        f"{art['grid_points']} grid points: {okpos}; |f(50,phi)-tan(phi)| max {dev50.max():.3f} "
        f"({'<=' if ok50 else '>'} 0.05; fails at tan(phi) in {np.round(bad, 3).tolist()})"
    )


# 4. normal forms


def criterion_4():
    rng = np.random.default_rng(SEED)
    rt = 0.0
    for _ in range(100):
        A = random_diagonalizable(rng, int(rng.integers(2, 6)))
        nf = real_block_decomposition(A)
        rt = max(rt, float(np.abs(reconstruct(nf) - A).max() / max(1.0, np.abs(A).max())))
    lp4 = NormModel.lp(4)
    F = np.array([[0.0, 1.0], [-1.0, 0.0]])
    nf = isometry_normal_form(lp4, F)
    single = len(nf.blocks) == 1 and nf.blocks[0].kind == "plane"
    mod_err = abs(nf.blocks[0].modulus - 1.0) if single else np.inf
    X = unit_sphere_samples(lp4, 100, SEED)
    Y = unit_sphere_samples(lp4, 100, SEED + 1)
    pres = float(np.abs(sip(lp4, X @ F.T, Y @ F.T) - sip(lp4, X, Y)).max())
    sw = isometry_normal_form(lp4, [[0.0, 1.0], [1.0, 0.0]])
    vals = sorted(b.value for b in sw.blocks if b.kind == "real")
    pm = len(vals) == 2 and abs(vals[0] + 1) <= 1e-9 and abs(vals[1] - 1) <= 1e-9
    mut = sw.checks["max_mutual_orthogonality"]
    ok = rt <= 1e-8 and single and mod_err <= 1e-9 and pres <= 1e-8 and pm and mut <= 1e-9
    art = {"round_trip": rt, "quarter_turn": nf.to_dict(), "sip_preservation": pres, "swap": sw.to_dict()}
    return ok, art, (
        f"normal forms: round trip {rt:.1e} on 100 operators; quarter turn in l_4 is one rotation block, "
        f"modulus error {mod_err:.1e}, s.i.p. preservation {pres:.1e}; swap gives +-1 blocks, "
        f"mutual orthogonality {mut:.1e}"
    )


# 5. left reflections


def criterion_5():
    planes = {"lp4": NormModel.lp(4), "ellipse": NormModel.quadratic(np.diag([0.25, 1.0]))}
    art, worst, labels_ok = {}, 0.0, True
    for name, model in planes.items():
        m = left_reflection(model, LineSpec.through([0.3, -0.2], 0.8))
        c = m.checks
        clause = max(c["involution_residual"], c["fixes_line_residual"], c["midpoint_residual"],
                     c["orthogonality_residual"], abs(c["det"] + 1))
        scan = fixed_lines_scan(model, LineSpec.through([0.3, -0.2], 0.8))
        g = np.array([1.0, 0.4])
        two = compose([left_reflection(model, LineSpec(p, [g])) for p in ([0, 0], [0, 1])])
        three = compose([left_reflection(model, LineSpec(p, [g])) for p in ([0, 0], [0, 0.7], [0.3, -1.5])])
        lab2, lab3 = classify_composition(model, two), classify_composition(model, three)
        w, V = np.linalg.eig(three.L)
        u = np.real(V[:, np.argmin(np.abs(w - 1))])
        pencil = abs(u[0] * g[1] - u[1] * g[0]) / np.linalg.norm(u)
        worst = max(worst, clause, np.abs(two.L - np.eye(2)).max(), pencil)
        labels_ok &= scan["agree"] and scan["lines"] >= 89 and lab2 == "translation" and lab3 == "left-reflection"
        art[name] = {"clauses": clause, "scan_agree": scan["agree"], "two": lab2, "three": lab3, "pencil": pencil}
    bq = euclidean_battery(planes["ellipse"], trials=20, seed=SEED)
    b4 = euclidean_battery(planes["lp4"], trials=20, seed=SEED)
    failing = [k for k, c in b4["criteria"].items() if not c["passed"]]
    stored = all(b4["criteria"][k]["witness"] is not None for k in failing)
    art["battery_quadratic"], art["battery_lp4"] = bq, b4
    ok = worst <= 1e-8 and labels_ok and bq["all_passed"] and bool(failing) and stored
    return ok, art, (
        f"left reflections: clause residuals {worst:.1e} on l_4 and quadratic planes, 90-line scan agrees, "
        f"parallel products translation / reflection; battery on quadratic all pass: {bq['all_passed']}; "
        f"on l_4 failing {failing} each with a stored counterexample: {stored}"
    )


# 6. ellipsoids


def criterion_6():
    sq = lowner(named_polytope("square"))
    r_sq = float(sq.semi_axes().max())
    cr = john(NormModel.polytopal(named_polytope("cross3")))
    r_cr = float(cr.semi_axes().max())
    rng = np.random.default_rng(SEED)
    P = rng.standard_normal((40, 3))
    A, b = rng.standard_normal((3, 3)), rng.standard_normal(3)
    E1, E2 = lowner(P), lowner(P @ A.T + b)
    Ai = np.linalg.inv(A)
    equi = max(float(np.abs(E2.S - Ai.T @ E1.S @ Ai).max() / np.abs(E2.S).max()),
               float(np.abs(E2.center - (A @ E1.center + b)).max()))
    E = john_from_polar(remark_body_polar_samples(16, 0.05, 4096))
    ball = float(np.abs(E.S - np.eye(3)).max())
    C = contact_points(remark_body_samples(16, 0.05, 4096), E)
    plane = coplanar_contacts(C, seed=SEED)
    great = plane["found"] and plane["through_origin"]
    ok_fixed = abs(r_sq - np.sqrt(2)) <= 1e-5 and abs(r_cr - 1 / np.sqrt(3)) <= 1e-4 and equi <= 1e-5
    ok = ok_fixed and ball <= 0.01 and plane["found"] and great
    art = {"square_radius": r_sq, "cross_radius": r_cr, "equivariance": equi, "remark_ball_deviation": ball,
           "contacts": int(len(C)), "coplanar": plane}
    return ok, art, (
        f"ellipsoids: square Lowner radius error {abs(r_sq - np.sqrt(2)):.1e}, cross-polytope John radius "
        f"error {abs(r_cr - 1 / np.sqrt(3)):.1e}, equivariance {equi:.1e}; capped ball John deviation {ball:.1e}, "
        f"{plane['count']} coplanar contact clusters (>= 64: {plane['found']}) on the plane at offset "
        f"{plane['offset']:.3f}, great circle: {great}"
    )


# 7. symmetry groups


def criterion_7():
    art, ok = {}, True
    expect = {"square": (8, "dihedral(4)"), "hexagon": (12, "dihedral(6)"), "cube3": (48, None), "cross3": (48, None)}
    for name, (order, label) in expect.items():
        G = polytopal_isometry_group(named_polytope(name))
        art[name] = G.to_dict(with_elements=False)
        ok &= G.order == order and G.closure_verified and G.order % 2 == 0
        if label:
            ok &= G.classification == label
    for name, model in {"euclidean": NormModel.euclidean(), "ellipse": NormModel.quadratic(np.diag([0.25, 1.0])),
                        "quadratic3": NormModel.quadratic(np.diag([1.0, 2.0, 3.0]))}.items():
        rep = group_report(model)
        art[name] = rep["finiteness_flag"]
        ok &= rep["finiteness_flag"] == "infinite-detected"
    orders = {k: v["order"] for k, v in art.items() if isinstance(v, dict)}
    return ok, art, f"symmetry groups: orders {orders}, closure verified, quadratic models infinite-detected"


CRITERIA = {1: criterion_1, 2: criterion_2, 3: criterion_3, 4: criterion_4, 5: criterion_5, 6: criterion_6,
            7: criterion_7}
_CACHE = {}


def run_criterion(k):
    if k not in _CACHE:
        ok, art, summary = CRITERIA[k]()
        _CACHE[k] = (ok, _jsonable(art), summary)
    return _CACHE[k]


def artifacts_json(fresh=False):
    arts = {}
    for k, fn in CRITERIA.items():
        ok, art, _ = fn() if fresh else run_criterion(k)
        arts[str(k)] = {"passed": bool(ok), "artifact": _jsonable(art)}
    return json.dumps(arts, sort_keys=True, allow_nan=True)


def criterion_8(tmp_dir=None):
    first = artifacts_json()
    second = artifacts_json(fresh=True)
    same = first.encode() == second.encode()
    if tmp_dir is not None:
        (tmp_dir / "run1.json").write_text(first)
        (tmp_dir / "run2.json").write_text(second)
    return same, {"bytes": len(first)}, f"determinism: two runs give byte-identical JSON ({len(first)} bytes): {same}"


@pytest.mark.parametrize("k", sorted(CRITERIA))
def test_criterion(k):
    ok, _, summary = run_criterion(k)
    line = report(k, ok, summary)
    assert ok, line


def test_criterion_8(tmp_path):
    ok, _, summary = criterion_8(tmp_path)
    line = report(8, ok, summary)
    assert ok, line


if __name__ == "__main__":
    for k in sorted(CRITERIA):
        ok, _, summary = run_criterion(k)
        report(k, ok, summary)
    ok, _, summary = criterion_8()
    report(8, ok, summary)
