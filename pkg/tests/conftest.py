import numpy as np
import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from gou_ergo.families import make_component
from gou_ergo.levy_model import Atom, JumpMeasure, LevyTriplet2D, ProcessSpec

settings.register_profile("default", deadline=None, max_examples=25,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

small = st.floats(-1.0, 1.0, allow_nan=False)


@st.composite
def atoms(draw, max_atoms=3):
    out = []
    for _ in range(draw(st.integers(0, max_atoms))):
        z1 = draw(st.floats(-0.9, 2.0))
        z2 = draw(st.floats(-2.0, 2.0))
        if abs(z1) < 1e-3 and abs(z2) < 1e-3:
            z2 = 0.5
        out.append(Atom(z1, z2, draw(st.floats(0.05, 1.5))))
    return tuple(out)


@st.composite
def rects(draw, max_rects=1):
    out = []
    for _ in range(draw(st.integers(0, max_rects))):
        a1 = draw(st.floats(-0.8, 0.5))
        a2 = draw(st.floats(-1.5, 0.5))
        comp = make_component("uniform_rect", {"a1": a1, "b1": a1 + draw(st.floats(0.1, 1.2)),
                                               "a2": a2, "b2": a2 + draw(st.floats(0.1, 2.0))})
        out.append((draw(st.floats(0.1, 1.0)), comp))
    return tuple(out)


@st.composite
def specs(draw, gaussian=True, jumps=True, x0=None):
    s2u = draw(st.floats(0.0, 0.5)) if gaussian else 0.0
    s2l = draw(st.floats(0.0, 1.0)) if gaussian else 0.0
    rho = draw(st.floats(-0.9, 0.9))
    nu = JumpMeasure(draw(atoms()), draw(rects())) if jumps else JumpMeasure()
    t = LevyTriplet2D(draw(st.floats(-1.5, 0.5)), draw(small), s2u, rho * np.sqrt(s2u * s2l), s2l, nu)
    return ProcessSpec(t, draw(st.floats(-5, 5)) if x0 is None else x0)


def ou(mu=1.0, s2=1.0, x0=10.0):
    return ProcessSpec(LevyTriplet2D(-mu, 0.0, 0.0, 0.0, s2), x0)


@pytest.fixture
def classical_ou():
    return ou()


ACCEPTANCE: dict[int, tuple[bool, str]] = {}


@pytest.fixture
def verdict():
    """Record one acceptance line: ``verdict(k, passed, detail)``."""

    def record(k, passed, detail):
        ACCEPTANCE[k] = (bool(passed), detail)
        print(f"\nACCEPTANCE {k:2d} {'PASS' if passed else 'FAIL'}  {detail}")
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[k]
        terminalreporter.write_line(f"{k:2d} {'PASS' if ok else 'FAIL'}  {detail}")
