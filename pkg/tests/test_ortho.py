import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from minkkit import InputError, NormModel, UnsupportedOperationError, birkhoff, birkhoff_direction, james, named_polytope, norm
from minkkit.ortho import direction_sign_changes, james_residual

import oracles


def test_euclidean_orthogonal():
    res = birkhoff(NormModel.lp(2), [1, 0], [0, 1])
    assert res.orthogonal and res.rho_agrees and res.margin == 0.0


def test_lp4_orthogonal_pair(lp4):
    res = birkhoff(lp4, [1, 1], [1, -1])
    assert res.orthogonal and res.minimizer_t == 0.0 and res.rho_agrees


def test_lp4_not_orthogonal(lp4):
    res = birkhoff(lp4, [1, 0], [1, 1])
    assert not res.orthogonal and res.minimizer_t < 0 and res.margin < 0 and res.rho_agrees
    margin, t = oracles.birkhoff_margin(lambda v: norm(lp4, v), [1, 0], [1, 1])
    assert res.margin == pytest.approx(margin, abs=1e-9)
    assert res.minimizer_t == pytest.approx(t, abs=1e-5)


def test_birkhoff_is_not_symmetric(lp4):
    # [y, x] = 0 makes x _|_B y; swap the roles and the relation breaks
    x = np.array([1.0, 0.5])
    y = birkhoff_direction(lp4, x)  # y _|_B x
    assert birkhoff(lp4, y, x).orthogonal
    assert not birkhoff(lp4, x, y).orthogonal


def test_polytopal_birkhoff(square):
    res = birkhoff(square, [1, 0], [0, 1])
    assert res.orthogonal and res.rho_agrees
    res = birkhoff(square, [1, 0.5], [1, 1])
    assert not res.orthogonal and res.rho_agrees


def test_birkhoff_errors(lp4):
    with pytest.raises(InputError):
        birkhoff(lp4, [0, 0], [1, 0])
    with pytest.raises(InputError):
        birkhoff(lp4, [1, 0], [0, 0])
    with pytest.raises(InputError):
        birkhoff(lp4, [[1, 0]], [[0, 1]])


@pytest.mark.parametrize("seed", range(3))
def test_birkhoff_margin_matches_oracle(seed, smooth_model):
    rng = np.random.default_rng(seed)
    x, y = rng.standard_normal((2, 2))
    res = birkhoff(smooth_model, x, y)
    margin, _ = oracles.birkhoff_margin(lambda v: norm(smooth_model, v), x, y)
    assert res.margin == pytest.approx(margin, abs=1e-9)
    assert res.rho_agrees


def test_direction_examples(lp4):
    np.testing.assert_allclose(birkhoff_direction(NormModel.lp(2), [1, 0]), [0, 1], atol=1e-12)
    d = birkhoff_direction(lp4, [1, 1])
    assert abs(d[0] + d[1]) <= 1e-12 and d[1] > 0
    assert birkhoff(lp4, d, [1, 1]).orthogonal
    G = np.array([[2.0, 0.5], [0.5, 1.0]])
    g = np.array([0.3, 1.0])
    d = birkhoff_direction(NormModel.quadratic(G), g)
    c = G @ g
    assert abs(d @ c) <= 1e-12 and norm(NormModel.quadratic(G), d) == pytest.approx(1.0)
    assert g[0] * d[1] - g[1] * d[0] > 0


def test_direction_errors(square):
    with pytest.raises(UnsupportedOperationError):
        birkhoff_direction(square, [1, 0])
    with pytest.raises(InputError):
        birkhoff_direction(NormModel.lp(4, 3), [1, 0, 0])
    with pytest.raises(InputError):
        birkhoff_direction(NormModel.lp(4), [0, 0])


@settings(max_examples=40, deadline=None)
@given(p=st.floats(1.2, 12), th=st.floats(0, 2 * np.pi))
def test_direction_is_orthogonal(p, th):
    model = NormModel.lp(p)
    g = np.array([np.cos(th), np.sin(th)])
    d = birkhoff_direction(model, g)
    assert norm(model, d) == pytest.approx(1.0)
    assert birkhoff(model, d, g).orthogonal
    assert direction_sign_changes(model, g) == 2


def test_james():
    model = NormModel.lp(2)
    assert james(model, [1, 0], [0, 1])
    assert james(NormModel.lp(4), [1, 2], [0, 0])
    assert james(NormModel.polytopal(named_polytope("hexagon")), [0.3, 0.1], [0, 0])
    assert not james(model, [1, 0], [1, 1])
    assert james_residual(model, [1, 0], [1, 1]) == pytest.approx(np.sqrt(5) - 1)
