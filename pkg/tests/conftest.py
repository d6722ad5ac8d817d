import contextlib
import io
import json
import time

import numpy as np
import pytest

from arakelov import cli
from arakelov import invariants as inv
from arakelov.elliptic import curve_from_tau
from arakelov.numerics import QuadratureConfig
from arakelov.surface import RiemannSurface

EXAMPLE_CURVE = [4, 20, -8, -39, 2, 17, 4, 0]
QUINTIC = [1, 0, 0, 0, 0, -1]
SEXTIC = [1, 2, 0, 3, -1, 0, 1]
FAST = QuadratureConfig(quad_rel_tol=1e-7)

# one pass/fail line per acceptance criterion, printed at the end of the run
ACCEPTANCE_LINES = {}


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for key in sorted(ACCEPTANCE_LINES):
            for line in ACCEPTANCE_LINES[key]:
                terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def example_surface():
    return RiemannSurface.from_coeffs(EXAMPLE_CURVE)


@pytest.fixture(scope="session")
def quintic_surface():
    return RiemannSurface.from_coeffs(QUINTIC, cfg=FAST)


@pytest.fixture(scope="session")
def sextic_surface():
    return RiemannSurface.from_coeffs(SEXTIC, cfg=FAST)


@pytest.fixture(scope="session")
def square_surface():
    """The curve with period lattice Z + iZ."""
    return RiemannSurface.from_coeffs(curve_from_tau(1j))


@pytest.fixture(scope="session")
def log_s_values(example_surface, quintic_surface, sextic_surface, square_surface):
    """``log S`` of the shared test surfaces, computed lazily once per session."""
    cache = {}

    def get(name):
        if name not in cache:
            X = {"example": example_surface, "quintic": quintic_surface, "sextic": sextic_surface,
                 "square": square_surface}[name]
            cache[name] = inv.compute_s(X)
        return cache[name]

    return get


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture(scope="session")
def example_runs():
    """Two structured runs of the example command with the same seed: (bytes, bytes, parsed, seconds)."""
    outs, secs = [], []
    for _ in range(2):
        buf = io.StringIO()
        t0 = time.perf_counter()
        with contextlib.redirect_stdout(buf):
            code = cli.main(["example", "--format", "structured", "--seed", "0"])
        secs.append(time.perf_counter() - t0)
        assert code == 0
        outs.append(buf.getvalue())
    return outs[0], outs[1], json.loads(outs[0]), secs
