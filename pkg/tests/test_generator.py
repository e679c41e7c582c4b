import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gou_ergo.fixtures import fixture
from gou_ergo.generator import (apply_generator, bump, check_lemma_hypotheses, combine, drift_scan,
                                generator_richardson, lemma_integral_gap, log_grid, polynomial,
                                truncated_generator)
from gou_ergo.levy_model import Atom, JumpMeasure, LevyTriplet2D, ProcessSpec
from gou_ergo.lyapunov import AbsPow, LogPow

from conftest import ou, specs

wide = bump(0.5, 4.0)


@given(st.floats(-1, 1), st.floats(-1, 1), st.floats(0, 1), st.floats(-0.5, 0.5), st.floats(0, 1),
       st.floats(-10, 10))
def test_diffusion_quadratic_closed_form(gU, gL, s2U, rho, s2L, x):
    sUL = rho * math.sqrt(s2U * s2L)
    s = ProcessSpec(LevyTriplet2D(gU, gL, s2U, sUL, s2L))
    got = apply_generator(s, polynomial([0, 0, 1]), x).value
    assert got == pytest.approx(2 * x * (x * gU + gL) + x * x * s2U + 2 * x * sUL + s2L, abs=1e-10)


@pytest.mark.parametrize("z1, z2", [(0.3, -0.4), (-0.5, 2.0), (1.5, 0.2)])
@pytest.mark.parametrize("x", [-2.0, 0.0, 1.3])
def test_single_atom_formula(z1, z2, x):
    lam = 0.8
    s = ProcessSpec(LevyTriplet2D(-0.4, 0.1, 0.0, 0.0, 0.0, JumpMeasure((Atom(z1, z2, lam),))))
    dz = x * z1 + z2
    ind = math.hypot(z1, z2) <= 1
    expect = ((x * -0.4 + 0.1) * float(wide.d1(x))
              + lam * (float(wide(x + dz)) - float(wide(x)) - float(wide.d1(x)) * dz * ind))
    assert apply_generator(s, wide, x).value == pytest.approx(expect, abs=1e-12)


@given(specs(), st.floats(-3, 3), st.floats(-2, 2))
@settings(max_examples=10)
def test_linear_in_f(spec, x, c):
    g = bump(-1.0, 2.0)
    lhs = apply_generator(spec, combine([(1.0, wide), (c, g)]), x)
    a, b = apply_generator(spec, wide, x), apply_generator(spec, g, x)
    assert lhs.value == pytest.approx(a.value + c * b.value, abs=10 * (lhs.err + a.err + abs(c) * b.err) + 1e-9)


@given(specs(jumps=False), st.floats(-20, 20))
def test_local_without_jumps(spec, x):
    f = bump(x + 5.0, 1.0)
    assert apply_generator(spec, f, x).value == 0.0


def test_truncated_generator():
    s = fixture("bivariate-atom-mix")
    An = truncated_generator(s, wide, 2.0)
    assert An(1.0).value == apply_generator(s, wide, 1.0).value
    assert An(2.5).value == 0.0 and An(-2.0).value == 0.0


def test_ou_abspow_contracts_at_rate_one():
    scan = drift_scan(ou(), AbsPow(1.0))
    assert scan.condition == "CD3" and scan.satisfied
    assert scan.c_hat == pytest.approx(1.0, rel=1e-9)


def test_log_drift_violated_when_unstable():
    scan = drift_scan(fixture("diffusion-nonrecurrent"), LogPow(1.0))
    assert not scan.satisfied and scan.witness is not None
    # A log|x| = gamma_U - s_U^2 / 2 far out
    assert scan.asymptote[0] == pytest.approx(0.5, rel=1e-3)


def test_log_asymptote_is_log_drift_for_ou():
    scan = drift_scan(ou(mu=0.7), LogPow(1.0))
    assert scan.satisfied
    assert scan.asymptote == (pytest.approx(-0.7, rel=1e-3), "const")


def test_error_bars_cover_refinement():
    s = fixture("bivariate-atom-mix")
    f = LogPow(1.5)
    x = log_grid(10, 1e5, 20)
    coarse = [apply_generator(s, f, xi, rtol=1e-6) for xi in x]
    fine = [apply_generator(s, f, xi, rtol=5e-7) for xi in x]
    covered = [abs(a.value - b.value) <= a.err for a, b in zip(coarse, fine)]
    assert np.mean(covered) >= 0.95


def test_lemma_gap_shrinks():
    s = fixture("bivariate-atom-mix")
    gaps = [abs(lemma_integral_gap(s, LogPow(1.0), x).gap) for x in (1e2, 1e3, 1e4)]
    assert gaps[0] > gaps[1] > gaps[2]


def test_lemma_rejects_odd_inputs():
    assert "f is not even" in check_lemma_hypotheses(bump(1.0, 1.0))
    with pytest.raises(ValueError):
        lemma_integral_gap(fixture("classical-ou"), bump(1.0, 1.0), 10.0)
    assert check_lemma_hypotheses(LogPow(1.0)) == []


def test_richardson_matches_quadrature():
    s = fixture("bivariate-atom-mix")
    f = bump(0.0, 3.0)
    for x in (-1.0, 0.5):
        mc, se = generator_richardson(s, f, x, 0.02, 200_000, 3)
        assert abs(mc - apply_generator(s, f, x).value) < 3 * se
