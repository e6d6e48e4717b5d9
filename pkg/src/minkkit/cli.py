"""Command-line interface: ``minkkit <command> ...``.

Exit codes: 0 success or true verdict, 1 false verdict (a witness is
printed), 2 input error, 3 numeric error. Output is JSON with sorted keys.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import ellipsoid as ell
from . import operators as ops
from . import ortho, reflect, spectral, symmetry
from .errors import InputError, MinkkitError, NumericError, ResourceError
from .normspace import NormModel, model_from_dict, model_to_dict, named_polytope, norm
from .operators import _jsonable
from .sip import SipContext, rho_minus, rho_plus, sip

EXIT_OK, EXIT_FALSE, EXIT_INPUT, EXIT_NUMERIC = 0, 1, 2, 3


def _read_arg(text: str) -> str:
    if text.startswith("@"):
        try:
            return Path(text[1:]).read_text()
        except OSError as exc:
            raise InputError(f"cannot read {text[1:]}: {exc}") from exc
    return text


def _json(text: str):
    try:
        return json.loads(_read_arg(text))
    except json.JSONDecodeError as exc:
        raise InputError(f"invalid JSON: {exc}") from exc


def parse_model(spec: str) -> NormModel:
    """``lp:P[:DIM]``, ``quadratic:<G json>``, ``polytopal:<name|V json>``, ``euclidean[:DIM]``, JSON or ``@file``."""
    text = _read_arg(spec).strip()
    if text.startswith("{"):
        return model_from_dict(_json(text))
    kind, _, rest = text.partition(":")
    if kind in ("lp", "euclidean"):
        parts = rest.split(":") if rest else []
        try:
            nums = [float(parts[0])] + [int(v) for v in parts[1:]] if kind == "lp" else [int(v) for v in parts]
        except (ValueError, IndexError) as exc:
            raise InputError(f"bad model spec {spec!r}") from exc
        if kind == "lp":
            return NormModel.lp(nums[0], nums[1] if len(nums) > 1 else 2)
        return NormModel.euclidean(nums[0] if nums else 2)
    if kind == "quadratic":
        return NormModel.quadratic(_json(rest))
    if kind == "polytopal":
        rest = rest.strip()
        V = _json(rest) if rest.startswith(("[", "@")) else named_polytope(rest)
        return NormModel.polytopal(V)
    raise InputError(f"unknown model spec {spec!r}")


def parse_array(text: str, ndim: int | None = None) -> np.ndarray:
    a = np.array(_json(text), dtype=float)
    if ndim is not None and a.ndim != ndim:
        raise InputError(f"expected a {ndim}-d array, got shape {a.shape}")
    return a


def parse_range(text: str) -> np.ndarray:
    """``a:step:b`` inclusive of ``b``, or a comma list."""
    try:
        if ":" in text:
            a, h, b = (float(v) for v in text.split(":"))
            if h <= 0 or b < a:
                raise InputError(f"bad range {text!r}")
            k = int(round((b - a) / h))
            return np.round(a + h * np.arange(k + 1), 12)
        return np.array([float(v) for v in text.split(",")])
    except ValueError as exc:
        raise InputError(f"bad range {text!r}") from exc


def _emit(obj, args) -> None:
    text = json.dumps(_jsonable(obj), sort_keys=True, indent=2, allow_nan=True)
    if getattr(args, "output", None):
        Path(args.output).write_text(text + "\n")
    else:
        sys.stdout.write(text + "\n")


CHECKS = {
    "self-adjoint": ops.is_self_adjoint,
    "adjoint-abelian": ops.is_adjoint_abelian,
    "isometry": ops.is_isometry,
    "iso-abelian": ops.iso_abelian_check,
}


def cmd_sip(args):
    model = parse_model(args.model)
    u, v = parse_array(args.u), parse_array(args.v)
    out = {"rho_plus": rho_plus(model, v, u), "rho_minus": rho_minus(model, v, u)}
    out["sip"] = sip(model, u, v) if model.is_smooth else None
    _emit(out, args)
    return EXIT_OK


def cmd_adjoint(args):
    model = parse_model(args.model)
    A, y = parse_array(args.op, 2), parse_array(args.y)
    _emit({"adjoint": ops.gen_adjoint_apply(model, A, y)}, args)
    return EXIT_OK


def cmd_check(args):
    model = parse_model(args.model)
    A = parse_array(args.op, 2)
    rep = CHECKS[args.predicate](SipContext(model), A, samples=args.samples, tol=args.tol, seed=args.seed)
    out = rep.to_dict()
    out["predicate"] = args.predicate
    if not rep.verdict:
        out["replay"] = {
            "command": "check",
            "predicate": args.predicate,
            "model": model_to_dict(model),
            "op": A.tolist(),
            "tol": args.tol,
            "witness": out["witness"],
        }
    _emit(out, args)
    return EXIT_OK if rep.verdict else EXIT_FALSE


def _pair_residual(predicate: str, model, A, x, y) -> float:
    if predicate == "self-adjoint":
        return abs(rho_plus(model, A @ x, y) - rho_plus(model, x, A @ y))
    if predicate == "adjoint-abelian":
        return abs(sip(model, A @ x, y) - sip(model, x, A @ y))
    if predicate == "isometry":
        r = max(abs(norm(model, A @ x) - norm(model, x)), abs(norm(model, A @ y) - norm(model, y)))
        if model.is_smooth:
            r = max(r, abs(sip(model, A @ x, A @ y) - sip(model, x, y)))
        return float(r)
    if predicate == "iso-abelian":
        return float(norm(model, np.linalg.solve(A, x) - ops.gen_adjoint_apply(model, A, x)))
    raise InputError(f"unknown predicate {predicate!r}")


def cmd_replay(args):
    rec = _json(args.record)
    if "replay" in rec:
        rec = rec["replay"]
    try:
        model = model_from_dict(rec["model"])
        A = np.array(rec["op"], dtype=float)
        x = np.array(rec["witness"]["x"], dtype=float)
        y = np.array(rec["witness"]["y"], dtype=float)
        pred, tol = rec["predicate"], float(rec["tol"])
    except (KeyError, TypeError) as exc:
        raise InputError("replay record needs model, op, predicate, tol and witness") from exc
    r = _pair_residual(pred, model, A, x, y)
    _emit({"predicate": pred, "residual": r, "reproduced": r > tol}, args)
    return EXIT_FALSE if r > tol else EXIT_OK


def cmd_normal_form(args):
    model = parse_model(args.model)
    A = parse_array(args.op, 2)
    fn = spectral.isometry_normal_form if args.kind == "isometry" else spectral.adjoint_abelian_normal_form
    _emit(fn(SipContext(model), A, tol=args.tol).to_dict(), args)
    return EXIT_OK


def cmd_birkhoff(args):
    model = parse_model(args.model)
    if args.g is not None:
        d = ortho.birkhoff_direction(model, parse_array(args.g))
        _emit({"direction": d}, args)
        return EXIT_OK
    if args.x is None or args.y is None:
        raise InputError("birkhoff needs --x and --y (or --g for the orthogonal direction)")
    res = ortho.birkhoff(model, parse_array(args.x), parse_array(args.y), tol=args.tol)
    _emit(res.to_dict(), args)
    return EXIT_OK if res.orthogonal else EXIT_FALSE


def cmd_james(args):
    model = parse_model(args.model)
    x, y = parse_array(args.x), parse_array(args.y)
    r = ortho.james_residual(model, x, y)
    ok = r <= args.tol
    _emit({"james": ok, "residual": r}, args)
    return EXIT_OK if ok else EXIT_FALSE


def _line(args, model):
    point = parse_array(args.point) if args.point else np.zeros(model.dim)
    return reflect.LineSpec(point, parse_array(args.dirs))


def cmd_reflect(args):
    if args.action == "compose":
        maps = [reflect.AffineMap.from_dict(d) for d in _json(args.maps)]
        _emit(reflect.compose(maps).to_dict(), args)
        return EXIT_OK
    model = parse_model(args.model)
    if args.action == "build":
        if args.dirs is None:
            raise InputError("reflect build needs --dirs")
        G = _line(args, model)
        fn = reflect.left_reflection if model.dim == 2 else reflect.left_reflection_hyperplane
        _emit(fn(model, G).to_dict(), args)
        return EXIT_OK
    if args.action == "classify":
        m = reflect.AffineMap.from_dict(_json(args.map))
        _emit({"label": reflect.classify_composition(model, m, tol=args.tol)}, args)
        return EXIT_OK
    if args.action == "battery":
        rep = reflect.euclidean_battery(model, trials=args.trials, tol=args.tol, seed=args.seed)
        _emit(rep, args)
        return EXIT_OK if rep["all_passed"] else EXIT_FALSE
    if args.action == "probe":
        rep = reflect.birkhoff_preservation_probe(model, trials=args.trials, tol=args.tol, seed=args.seed)
        _emit(rep, args)
        return EXIT_OK if rep["rate"] == 1.0 else EXIT_FALSE
    raise InputError(f"unknown reflect action {args.action!r}")


def cmd_ellipsoid(args):
    if args.action == "lowner":
        _emit(ell.lowner(parse_array(args.points, 2), eps=args.eps).to_dict(), args)
        return EXIT_OK
    if args.action == "remark-body":
        X = ell.remark_body_samples(args.n, args.body_eps, args.m)
        E = ell.john_from_polar(ell.remark_body_polar_samples(args.n, args.body_eps, args.m), eps=args.eps)
        C = ell.contact_points(X, E, tol=args.contact_tol)
        plane = ell.coplanar_contacts(C, seed=args.seed)
        _emit({"samples": len(X), "john": E.to_dict(), "contacts": len(C), "coplanar": plane,
               "ball_deviation": float(np.abs(E.S - np.eye(3)).max())}, args)
        return EXIT_OK
    model = parse_model(args.model)
    if args.action == "john":
        _emit(ell.john(model, eps=args.eps, samples=args.samples, seed=args.seed).to_dict(), args)
        return EXIT_OK
    if args.action == "contacts":
        E = ell.Ellipsoid.from_dict(_json(args.ellipsoid)) if args.ellipsoid else ell.john(model, eps=args.eps)
        C = ell.contact_points(model, E, tol=args.contact_tol, samples=args.samples, seed=args.seed)
        _emit({"count": len(C), "points": C}, args)
        return EXIT_OK if len(C) else EXIT_FALSE
    raise InputError(f"unknown ellipsoid action {args.action!r}")


def cmd_symmetry(args):
    model = parse_model(args.model)
    if args.action == "report":
        _emit(symmetry.group_report(model, tol=args.tol), args)
        return EXIT_OK
    if model.kind != "polytopal":
        raise InputError("symmetry group and orbit need a polytopal model")
    G = symmetry.polytopal_isometry_group(model.V, tol=args.tol)
    if args.action == "group":
        _emit(G.to_dict(), args)
        return EXIT_OK
    if args.action == "orbit":
        if args.x is None:
            raise InputError("symmetry orbit needs --x")
        orb = symmetry.orbit_probe(model, parse_array(args.x), G)
        _emit({"size": len(orb), "orbit": orb, "transitive": False}, args)
        return EXIT_OK
    raise InputError(f"unknown symmetry action {args.action!r}")


def cmd_lp_scan(args):
    p = parse_range(args.p)
    if args.tanphi:
        phi = np.arctan(parse_range(args.tanphi))
    elif args.phi:
        phi = parse_range(args.phi)
    else:
        raise InputError("lp-scan needs --tanphi or --phi")
    branches = tuple(int(b) for b in args.branches.split(","))
    res = ops.lp_rotation_scan(p, phi, branches)
    if not args.rows:
        res = {k: v for k, v in res.items() if k != "rows"} | {"points": len(res["rows"])}
    _emit(res, args)
    return EXIT_OK if res["all_positive"] else EXIT_FALSE


def _polyline(P, scale, color, width=1.5):
    pts = " ".join(f"{256 + scale * x:.3f},{256 - scale * y:.3f}" for x, y in P)
    return f'<polyline points="{pts}" fill="none" stroke="{color}" stroke-width="{width}"/>'


def render_svg(model: NormModel, reflect_angle=None, contacts: bool = False) -> str:
    """Unit circle (720 samples), optionally its left-reflected image and John contacts."""
    if model.dim != 2:
        raise InputError("render needs a plane model")
    th = np.arange(721) * 2.0 * np.pi / 720
    U = np.column_stack([np.cos(th), np.sin(th)])
    X = U / norm(model, U)[:, None]
    layers = [X]
    if reflect_angle is not None:
        m = reflect.left_reflection(model, reflect.LineSpec.through([0.0, 0.0], reflect_angle), verify=False)
        layers.append(m(X))
    E = None
    if contacts:
        E = ell.john(model)
        layers.append(U / E.gauge(U)[:, None])
    scale = 200.0 / max(np.linalg.norm(L, axis=1).max() for L in layers)
    parts = [
        '<svg xmlns="http://www.w3.org/2000/svg" width="512" height="512" viewBox="0 0 512 512">',
        '<rect width="512" height="512" fill="white"/>',
        '<line x1="0" y1="256" x2="512" y2="256" stroke="#ccc"/>',
        '<line x1="256" y1="0" x2="256" y2="512" stroke="#ccc"/>',
        _polyline(X, scale, "black"),
    ]
    if reflect_angle is not None:
        c, s = np.cos(reflect_angle), np.sin(reflect_angle)
        parts.append(_polyline(np.array([[-2 * c, -2 * s], [2 * c, 2 * s]]), scale, "#888", 1))
        parts.append(_polyline(layers[1], scale, "#c03030"))
    if E is not None:
        parts.append(_polyline(layers[-1], scale, "#3060c0"))
        for x, y in ell.contact_points(model, E, tol=1e-6):
            parts.append(f'<circle cx="{256 + scale * x:.3f}" cy="{256 - scale * y:.3f}" r="4" fill="#3060c0"/>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def cmd_render(args):
    model = parse_model(args.model)
    svg = render_svg(model, args.reflect_angle, args.contacts)
    Path(args.svg).write_text(svg)
    sys.stdout.write(json.dumps({"svg": args.svg}, sort_keys=True) + "\n")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="minkkit", description="Computations in finite-dimensional normed spaces.")
    sub = ap.add_subparsers(dest="command", required=True)

    def add(name, fn, help_, model=True):
        p = sub.add_parser(name, help=help_)
        if model:
            p.add_argument("--model", required=True, help="lp:P[:DIM], quadratic:<G>, polytopal:<name|V>, JSON or @file")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--output", "-o", help="write JSON here instead of stdout")
        p.set_defaults(func=fn)
        return p

    p = add("sip", cmd_sip, "evaluate [u, v] and the norm derivatives")
    p.add_argument("--u", required=True)
    p.add_argument("--v", required=True)

    p = add("adjoint", cmd_adjoint, "apply the generalized adjoint")
    p.add_argument("--op", required=True)
    p.add_argument("--y", required=True)

    p = add("check", cmd_check, "operator predicates")
    p.add_argument("predicate", choices=sorted(CHECKS))
    p.add_argument("--op", required=True)
    p.add_argument("--samples", type=int, default=ops.DEFAULT_SAMPLES)
    p.add_argument("--tol", type=float, default=ops.DEFAULT_TOL)

    p = add("replay", cmd_replay, "re-evaluate a stored witness", model=False)
    p.add_argument("record", help="JSON record or @file from a failed check")

    p = add("normal-form", cmd_normal_form, "real block normal forms")
    p.add_argument("kind", choices=["adjoint-abelian", "isometry"])
    p.add_argument("--op", required=True)
    p.add_argument("--tol", type=float, default=1e-8)

    p = add("birkhoff", cmd_birkhoff, "Birkhoff orthogonality, or the orthogonal direction with --g")
    p.add_argument("--x")
    p.add_argument("--y")
    p.add_argument("--g")
    p.add_argument("--tol", type=float, default=1e-9)

    p = add("james", cmd_james, "James orthogonality")
    p.add_argument("--x", required=True)
    p.add_argument("--y", required=True)
    p.add_argument("--tol", type=float, default=1e-9)

    p = sub.add_parser("reflect", help="left reflections")
    p.add_argument("action", choices=["build", "compose", "classify", "battery", "probe"])
    p.add_argument("--model")
    p.add_argument("--point")
    p.add_argument("--dirs", help="direction vectors of the line or hyperplane")
    p.add_argument("--maps", help="JSON list of {L, t}; the first is applied first")
    p.add_argument("--map")
    p.add_argument("--trials", type=int, default=20)
    p.add_argument("--tol", type=float, default=1e-7)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--output", "-o")
    p.set_defaults(func=cmd_reflect)

    p = sub.add_parser("ellipsoid", help="John and Löwner ellipsoids")
    p.add_argument("action", choices=["john", "lowner", "contacts", "remark-body"])
    p.add_argument("--model")
    p.add_argument("--points")
    p.add_argument("--ellipsoid")
    p.add_argument("--eps", type=float, default=1e-6)
    p.add_argument("--samples", type=int, default=ell.SMOOTH_SAMPLES)
    p.add_argument("--contact-tol", type=float, default=1e-6)
    p.add_argument("--n", type=int, default=16)
    p.add_argument("--body-eps", type=float, default=0.05)
    p.add_argument("--m", type=int, default=4096)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--output", "-o")
    p.set_defaults(func=cmd_ellipsoid)

    p = sub.add_parser("symmetry", help="isometry groups")
    p.add_argument("action", choices=["group", "report", "orbit"])
    p.add_argument("--model", required=True)
    p.add_argument("--x")
    p.add_argument("--tol", type=float, default=1e-9)
    p.add_argument("--output", "-o")
    p.set_defaults(func=cmd_symmetry)

    p = sub.add_parser("lp-scan", help="sign functions of the l_p rotation argument")
    p.add_argument("--p", required=True, help="a:step:b or comma list")
    p.add_argument("--tanphi")
    p.add_argument("--phi")
    p.add_argument("--branches", default="1,2")
    p.add_argument("--rows", action="store_true", help="include every grid point")
    p.add_argument("--output", "-o")
    p.set_defaults(func=cmd_lp_scan)

    p = sub.add_parser("render", help="SVG of the unit circle")
    p.add_argument("--model", required=True)
    p.add_argument("--svg", required=True)
    p.add_argument("--reflect-angle", type=float)
    p.add_argument("--contacts", action="store_true")
    p.set_defaults(func=cmd_render)
    return ap


def run(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if getattr(args, "model", None) is None and args.command in ("reflect", "ellipsoid"):
        if not (args.command == "reflect" and args.action == "compose") and not (
            args.command == "ellipsoid" and args.action in ("lowner", "remark-body")
        ):
            sys.stderr.write("error: --model is required for this action\n")
            return EXIT_INPUT
    try:
        return args.func(args)
    except InputError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_INPUT
    except (NumericError, ResourceError) as exc:
        sys.stderr.write(f"numeric error: {exc}\n")
        return EXIT_NUMERIC
    except MinkkitError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_NUMERIC


def main(argv=None) -> int:
    return run(argv)
