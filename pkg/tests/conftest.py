import os
import sys

import numpy as np
import pytest

from minkkit import NormModel, named_polytope

sys.path.insert(0, os.path.dirname(__file__))


SMOOTH_MODELS = {
    "lp1.5": lambda: NormModel.lp(1.5),
    "lp2": lambda: NormModel.lp(2),
    "lp3": lambda: NormModel.lp(3),
    "lp4": lambda: NormModel.lp(4),
    "quad": lambda: NormModel.quadratic([[2.0, 0.5], [0.5, 1.0]]),
    "ellipse": lambda: NormModel.quadratic(np.diag([0.25, 1.0])),
}


@pytest.fixture(params=sorted(SMOOTH_MODELS))
def smooth_model(request):
    return SMOOTH_MODELS[request.param]()


@pytest.fixture
def lp4():
    return NormModel.lp(4)


@pytest.fixture
def ellipse():
    return NormModel.quadratic(np.diag([0.25, 1.0]))


@pytest.fixture
def square():
    return NormModel.polytopal(named_polytope("square"))


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "LINES", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for k in sorted(lines):
            terminalreporter.write_line(lines[k])
