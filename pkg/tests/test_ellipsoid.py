import json

import numpy as np
import pytest

from minkkit import Ellipsoid, InputError, NormModel, UnsupportedOperationError, contact_points, john, lowner, named_polytope
from minkkit.ellipsoid import (
    coplanar_contacts,
    john_from_polar,
    john_of_points,
    remark_body_gauge,
    remark_body_polar_samples,
    remark_body_samples,
    remark_body_support,
    remark_body_vertices,
)

import oracles


def test_lowner_square():
    E = lowner(named_polytope("square"))
    np.testing.assert_allclose(E.S, np.eye(2) / 2, atol=1e-6)
    np.testing.assert_allclose(E.semi_axes(), np.sqrt(2), atol=1e-5)
    assert E.info["gap"] <= 1e-6 and E.info["max_gauge"] <= np.sqrt(1 + 1e-6)


def test_lowner_ellipse_samples():
    t = np.linspace(0, 2 * np.pi, 200, endpoint=False)
    P = np.column_stack([2 * np.cos(t), np.sin(t)])
    np.testing.assert_allclose(lowner(P).S, np.diag([0.25, 1.0]), atol=1e-5)


def test_lowner_hexagon():
    E = lowner(named_polytope("hexagon"))
    np.testing.assert_allclose(E.S, np.eye(2), atol=1e-6)


def test_lowner_matches_conic_solver():
    rng = np.random.default_rng(0)
    P = rng.standard_normal((40, 3))
    P = np.vstack([P, -P])
    np.testing.assert_allclose(lowner(P, eps=1e-9).S, oracles.mvee(P), atol=1e-5)


def test_lowner_drops_interior_points():
    # most points are deep inside; the away steps must remove their weight
    rng = np.random.default_rng(1)
    P = np.vstack([named_polytope("cube3"), 0.1 * rng.standard_normal((200, 3))])
    P = np.vstack([P, -P])
    np.testing.assert_allclose(lowner(P).S, np.eye(3) / 3, atol=1e-5)


def test_lowner_uncentered_and_equivariant():
    rng = np.random.default_rng(2)
    P = rng.standard_normal((40, 3))
    A, b = rng.standard_normal((3, 3)), rng.standard_normal(3)
    E1, E2 = lowner(P), lowner(P @ A.T + b)
    Ai = np.linalg.inv(A)
    assert np.abs(E2.S - Ai.T @ E1.S @ Ai).max() / np.abs(E2.S).max() <= 1e-5
    np.testing.assert_allclose(E2.center, A @ E1.center + b, atol=1e-5)
    assert E1.gauge(P).max() <= np.sqrt(1 + 1e-6) + 1e-12


def test_lowner_errors():
    with pytest.raises(InputError):
        lowner([[1.0, 0.0]])
    with pytest.raises(InputError):
        lowner([[1.0, 0.0], [-1.0, 0.0], [2.0, 0.0], [-2.0, 0.0]])
    with pytest.raises(InputError):
        lowner([[np.nan, 0.0], [1.0, 1.0], [0.0, 1.0]])


def test_john_square():
    E = john(NormModel.polytopal(named_polytope("square")))
    np.testing.assert_allclose(E.S, np.eye(2), atol=1e-6)


def test_john_cross_polytope():
    model = NormModel.polytopal(named_polytope("cross3"))
    E = john(model)
    np.testing.assert_allclose(E.semi_axes(), 1 / np.sqrt(3), atol=1e-4)
    assert E.info["max_facet_support"] <= 1 + 1e-9
    S, d = oracles.mvie_polytope(model.facets)
    np.testing.assert_allclose(E.S, S, atol=1e-4)
    np.testing.assert_allclose(d, 0, atol=1e-7)


def test_john_hexagon_matches_conic_solver():
    model = NormModel.polytopal(named_polytope("hexagon"))
    S, _ = oracles.mvie_polytope(model.facets)
    np.testing.assert_allclose(john(model).S, S, atol=1e-6)


def test_john_quadratic_is_body():
    G = np.array([[2.0, 0.5], [0.5, 1.0]])
    E = john(NormModel.quadratic(G), samples=512)
    np.testing.assert_allclose(E.S, G, atol=1e-5)


def test_john_lp4_inside_ball():
    E = john(NormModel.lp(4), samples=1024)
    assert E.info["min_unit_gauge"] >= 1 - 1e-5
    np.testing.assert_allclose(E.S, E.S[0, 0] * np.eye(2), atol=1e-5)


def test_john_of_points():
    E = john_of_points(named_polytope("cube3"))
    np.testing.assert_allclose(E.S, np.eye(3), atol=1e-6)
    with pytest.raises(UnsupportedOperationError):
        john(NormModel(kind="other", dim=2))


def test_ellipsoid_object():
    E = Ellipsoid([0.0, 0.0], np.diag([4.0, 1.0]))
    assert E.gauge([0.5, 0.0]) == pytest.approx(1.0)
    assert E.support([1.0, 0.0]) == pytest.approx(0.5)
    np.testing.assert_allclose(E.polar().S, np.diag([0.25, 1.0]))
    back = Ellipsoid.from_dict(json.loads(json.dumps(E.to_dict())))
    np.testing.assert_array_equal(back.S, E.S)
    with pytest.raises(InputError):
        Ellipsoid([0.0, 0.0], -np.eye(2))
    with pytest.raises(InputError):
        Ellipsoid([1.0, 0.0], np.eye(2)).polar()


def test_contacts_square():
    model = NormModel.polytopal(named_polytope("square"))
    C = contact_points(model, john(model))
    assert len(C) == 4
    key = sorted(tuple(np.round(c, 6) + 0.0) for c in C)
    assert key == [(-1.0, 0.0), (0.0, -1.0), (0.0, 1.0), (1.0, 0.0)]


def test_contacts_quadratic_body_itself():
    G = np.diag([0.25, 1.0])
    model = NormModel.quadratic(G)
    C = contact_points(model, Ellipsoid(np.zeros(2), G), samples=200, angular_tol=1e-6)
    assert len(C) == 200


def test_contacts_from_array():
    E = Ellipsoid(np.zeros(2), np.eye(2))
    C = contact_points(np.array([[1.0, 0.0], [0.5, 0.0], [0.0, 2.0]]), E)
    np.testing.assert_array_equal(C, [[1.0, 0.0]])
    with pytest.raises(InputError):
        contact_points(np.zeros((3, 3)), E)


def test_remark_body_geometry():
    V = remark_body_vertices(16, 0.05)
    assert V.shape == (32, 3)
    # edge midpoints touch the circle of radius 1 + eps
    mids = 0.5 * (V + np.roll(V, -1, axis=0))
    np.testing.assert_allclose(np.linalg.norm(mids, axis=1), 1.05, atol=1e-12)
    np.testing.assert_allclose(remark_body_support(np.eye(3), 16, 0.05), [V[:, 0].max(), V[:, 1].max(), 1.0])
    with pytest.raises(InputError):
        remark_body_vertices(2, 0.05)
    with pytest.raises(InputError):
        remark_body_vertices(16, 0.0)


def test_remark_gauge_matches_conic_solver():
    V = remark_body_vertices(16, 0.05)
    rng = np.random.default_rng(3)
    X = rng.standard_normal((8, 3))
    g = remark_body_gauge(X, 16, 0.05)
    for x, gx in zip(X, g):
        assert gx == pytest.approx(oracles.remark_gauge(x, V), abs=1e-6)
    np.testing.assert_allclose(remark_body_gauge(V, 16, 0.05), 1.0, atol=1e-12)


def test_remark_samples_on_boundary():
    X = remark_body_samples(16, 0.05, 1024)
    np.testing.assert_allclose(remark_body_gauge(X, 16, 0.05), 1.0, atol=1e-9)
    Y = remark_body_polar_samples(16, 0.05, 1024)
    # polar boundary: support of the body along y equals 1
    np.testing.assert_allclose(remark_body_support(Y, 16, 0.05), 1.0, atol=1e-12)


def test_remark_body_john_and_contacts():
    E = john_from_polar(remark_body_polar_samples(16, 0.05, 4096))
    assert np.abs(E.S - np.eye(3)).max() <= 0.01
    C = contact_points(remark_body_samples(16, 0.05, 4096), E)
    plane = coplanar_contacts(C)
    assert plane["found"] and plane["count"] >= 64
    # the contact circle is a latitude circle of the ball, parallel to the polygon plane
    np.testing.assert_allclose(np.abs(plane["normal"]), [0, 0, 1], atol=1e-9)
    assert plane["radius"] ** 2 + plane["offset"] ** 2 == pytest.approx(1.0, abs=1e-6)


def test_remark_body_large_eps_is_not_ball():
    E = john_from_polar(remark_body_polar_samples(16, 10.0, 1024))
    ax = E.semi_axes()
    assert ax[-1] > 5 and ax[0] < 1


def test_coplanar_detects_great_circle():
    t = np.arange(100) * 2 * np.pi / 100
    ring = np.column_stack([np.cos(t), np.sin(t), np.zeros(100)])
    noise = np.random.default_rng(4).standard_normal((50, 3))
    res = coplanar_contacts(np.vstack([ring, noise]))
    assert res["count"] == 100 and res["through_origin"] and res["radius"] == pytest.approx(1.0)
    assert not coplanar_contacts(np.zeros((2, 3)))["found"]
