"""The ten acceptance criteria, each at its stated tolerance.

Every test records a PASS/FAIL line that is printed in the terminal
summary, then asserts.
"""

import json
import math
import time

import numpy as np
import pytest
from click.testing import CliRunner

from gou_ergo.classifier import classify, drift_integral_beta, drift_integral_log
from gou_ergo.cli import main
from gou_ergo.families import make_component
from gou_ergo.fixtures import fixture, fixtures
from gou_ergo.generator import (apply_generator, bump, drift_scan, generator_richardson,
                                lemma_integral_gap, log_grid)
from gou_ergo.levy_model import Atom, JumpMeasure, LevyTriplet2D, ProcessSpec
from gou_ergo.lyapunov import AbsPow, ExpLogPow, LogPow
from gou_ergo.mcdiag import decay_curve, select_curve
from gou_ergo.pathsim import ensemble, euler_V, simulate_path
from gou_ergo.rng import stream

pytestmark = pytest.mark.slow


# 1 ---------------------------------------------------------------------------

def fuzzed_spec(i: int, gaussian: bool) -> ProcessSpec:
    """Finite-activity spec with moderate coefficients and no restart atoms."""
    r = stream(2024, 77, i)
    atoms = tuple(Atom(r.uniform(-0.9, 1.0), r.uniform(-1, 1), r.uniform(0.05, 0.5))
                  for _ in range(r.integers(1, 4)))
    a1, a2 = r.uniform(-0.8, 0.5), r.uniform(-1.0, 0.5)
    rect = make_component("uniform_rect", {"a1": a1, "b1": a1 + r.uniform(0.1, 0.5),
                                           "a2": a2, "b2": a2 + r.uniform(0.1, 1.0)})
    nu = JumpMeasure(atoms, ((r.uniform(0.1, 0.5), rect),))
    s2u, s2l = (r.uniform(0.05, 0.3), r.uniform(0.1, 0.5)) if gaussian else (0.0, 0.0)
    rho = r.uniform(-0.9, 0.9)
    t = LevyTriplet2D(r.uniform(-1, -0.1), r.uniform(-0.5, 0.5), s2u, rho * math.sqrt(s2u * s2l), s2l, nu)
    return ProcessSpec(t, r.uniform(-2, 2))


def sup_gap(spec, path, dt):
    e = euler_V(spec, path, dt)
    return float(np.max(np.abs(e.V - path.V[e.source_index])))


def test_1_explicit_solution_matches_euler(verdict):
    t0 = time.perf_counter()
    dts = (1e-2, 1e-3, 1e-4)
    bad = []
    worst = {True: 0.0, False: 0.0}
    slopes = {True: [], False: []}
    for i in range(20):
        gaussian = i % 2 == 0
        spec = fuzzed_spec(i, gaussian)
        gap = sup_gap(spec, simulate_path(spec, 5.0, 1e-4, 100 + i), 1e-4)
        worst[gaussian] = max(worst[gaussian], gap)
        if gap >= (1e-2 if gaussian else 1e-4):
            bad.append(f"spec {i} sup {gap:.2e}")
        # strong error against the explicit solution on a 10x finer grid,
        # averaged over paths when there is Brownian noise
        errs = np.zeros(len(dts))
        for k in range(8 if gaussian else 1):
            fine = simulate_path(spec, 5.0, 1e-5, 100 + i, index=k + 1)
            errs += [sup_gap(spec, fine, dt) for dt in dts]
        slope = float(np.polyfit(np.log(dts), np.log(errs), 1)[0])
        slopes[gaussian].append(slope)
        if slope < (0.4 if gaussian else 0.9):
            bad.append(f"spec {i} order {slope:.2f}")
    elapsed = time.perf_counter() - t0
    if elapsed >= 300:
        bad.append(f"runtime {elapsed:.0f}s")
    detail = (f"sup gap Σ≠0 {worst[True]:.2e} (<1e-2), Σ=0 {worst[False]:.2e} (<1e-4); "
              f"min order Σ≠0 {min(slopes[True]):.2f} (>=0.4), Σ=0 {min(slopes[False]):.2f} (>=0.9); "
              f"{elapsed:.0f}s" + (f"; failing: {', '.join(bad)}" if bad else ""))
    assert verdict(1, not bad, detail), detail


# 2 ---------------------------------------------------------------------------

def test_2_generator_matches_monte_carlo(verdict):
    t0 = time.perf_counter()
    names = ["classical-ou", "diffusion-recurrent", "bivariate-atom-mix", "restart-lambda05",
             "levy-ou-pareto-heavy"]
    # supports reach at least 3 past every evaluation point
    tests = [bump(0.0, 8.0), bump(1.0, 7.0), bump(-1.0, 8.0, 2.0)]
    zs, bad = [], []
    for name in names:
        spec = fixture(name)
        for j, f in enumerate(tests):
            for x in (-2.0, 0.0, 3.0):
                mc, se = generator_richardson(spec, f, x, 0.01, 1_000_000, 1000 + j)
                z = (mc - apply_generator(spec, f, x).value) / se
                zs.append(abs(z))
                if abs(z) > 3:
                    bad.append(f"{name} f{j} x={x:g} z={z:.2f}")
    elapsed = time.perf_counter() - t0
    if elapsed >= 600:
        bad.append(f"runtime {elapsed:.0f}s")
    detail = f"{len(zs)} comparisons, max |z| {max(zs):.2f} (<=3); {elapsed:.0f}s" + (
        f"; failing: {', '.join(bad)}" if bad else "")
    assert verdict(2, not bad, detail), detail


# 3 ---------------------------------------------------------------------------

# reference values from scripts/oracles.py
UNIFORM_LOG_INTEGRAL = -0.045228747557780772
ATOM_BETA_INTEGRAL = -0.05051025721682212


def test_3_drift_integrals_match_closed_forms(verdict):
    rect = make_component("uniform_rect", {"a1": -0.5, "b1": 0.5, "a2": -0.01, "b2": 0.01})
    uni = ProcessSpec(LevyTriplet2D(0.0, 0.0, 0.0, 0.0, 0.0, JumpMeasure((), ((1.0, rect),))))
    atom = ProcessSpec(LevyTriplet2D(0.0, 0.0, 0.0, 0.0, 0.0, JumpMeasure((Atom(0.5, 0.0, 1.0),))))
    e_uni = abs(drift_integral_log(uni).value - UNIFORM_LOG_INTEGRAL)
    e_atom = abs(drift_integral_beta(atom, 0.5).value - ATOM_BETA_INTEGRAL)
    e_lim = max(abs(drift_integral_beta(s, 1e-3).value - drift_integral_log(s).value)
                for s in (uni, atom, fixture("bivariate-atom-mix")))
    ok = e_uni < 1e-9 and e_atom < 1e-12 and e_lim < 1e-2
    detail = f"uniform err {e_uni:.1e}, atom err {e_atom:.1e}, beta->0 gap {e_lim:.1e} (<1e-2)"
    assert verdict(3, ok, detail), detail


# 4 ---------------------------------------------------------------------------

def test_4_classifier_fixtures(verdict):
    ou = classify(fixture("classical-ou"))
    restart = classify(fixture("restart-lambda05"))
    non = classify(fixture("diffusion-nonrecurrent"))
    # log-Pareto index 2.5: the (log|z|)^a moment is finite exactly for a < 2.5
    law = fixture("levy-ou-loglaw")
    coarse = classify(law)
    fine = classify(law, alphas=(2.0, 2.4, 2.49, 2.51, 3.0))
    checks = {
        "ou": ou.verdict == "Exponential" and ou.params["beta"] == 1.0 and ou.params["drift_value"] == -1.0,
        "restart": restart.label() == "RestartExponential(0.5)",
        "nonrecurrent": non.verdict == "Nonrecurrent",
        "cap": coarse.label() == "Polynomial(alpha=2)" and fine.params.get("alpha") == 2.49,
    }
    detail = ", ".join(f"{k} {'ok' if v else 'WRONG'}" for k, v in checks.items()) + (
        f"; ou drift {ou.params['drift_value']!r}, cap {fine.params.get('alpha')}")
    assert verdict(4, all(checks.values()), detail), detail


# 5 ---------------------------------------------------------------------------

def test_5_restart_decay_below_explicit_bound(verdict):
    t0 = time.perf_counter()
    t = np.arange(1.0, 11.0)
    c = decay_curve(fixture("restart-lambda05"), 10.0, t, 100_000, 5)
    bound = 2 * np.exp(-0.5 * t)
    excess = c.dist - (bound + (c.hi - c.dist))
    elapsed = time.perf_counter() - t0
    ok = np.all(excess <= 0) and elapsed < 600
    k = int(np.argmax(excess))
    detail = (f"max dist - (2e^-0.5t + CI) = {excess[k]:+.4f} at t={t[k]:g} (<=0); {elapsed:.0f}s")
    assert verdict(5, ok, detail), detail


# 6 ---------------------------------------------------------------------------

# exact L1 distance between N(10 e^-t, (1 - e^-2t)/2) and N(0, 1/2), t = 0, 0.5, ..., 8
# (scripts/oracles.py: ou_l1)
OU_L1 = [2.0, 1.9999964912182207, 1.9859674068257096, 1.779897235489641, 1.3272962816454243,
         0.8780744782157375, 0.5507235021456787, 0.338245451897556, 0.20611078809360944,
         0.1252266744469219, 0.07600169985250474, 0.04610805308943853, 0.02796833423069777,
         0.016964184721887765, 0.010289416974268741, 0.006240873378910434, 0.0037852869636733613]


def test_6_ou_matches_gaussian_truth(verdict):
    t = np.arange(0.0, 8.01, 0.5)
    c = decay_curve(fixture("classical-ou"), 10.0, t, 100_000, 6)
    ex = np.array(OU_L1)
    gap = np.maximum(ex - c.hi, 0) + np.maximum(c.lo - ex, 0)
    k = int(np.argmax(gap))
    detail = f"max distance outside CI {gap[k]:.4f} at t={t[k]:g} (<=0.02)"
    assert verdict(6, np.all(gap <= 0.02), detail), detail


# 7 ---------------------------------------------------------------------------

def test_7_rate_shapes(verdict):
    heavy = select_curve(decay_curve(fixture("levy-ou-pareto-heavy"), 10.0, np.arange(0, 25.01, 0.5),
                                     100_000, 7))
    ou = select_curve(decay_curve(fixture("classical-ou"), 10.0, np.arange(0, 12.01, 0.5), 100_000, 7))
    fr = select_curve(decay_curve(fixture("fort-roberts-neg"), 10.0, np.arange(0, 25.01, 0.5), 100_000, 7))
    aic = lambda s: " ".join(f"{k} {v.aic:.1f}" for k, v in s.fits.items())
    checks = {
        "pareto-heavy poly over exp": heavy.prefers("poly", "exp"),
        "classical-ou exp over poly": ou.prefers("exp", "poly"),
        "fort-roberts exp rejected": "exp" in fr.rejected,
    }
    detail = "; ".join(f"{k}: {'yes' if v else 'NO'}" for k, v in checks.items()) + (
        f" | AIC pareto-heavy [{aic(heavy)}], ou [{aic(ou)}], fort-roberts [{aic(fr)}]")
    assert verdict(7, all(checks.values()), detail), detail


# 8 ---------------------------------------------------------------------------

def lemma_specs():
    # the reduction concerns the U-jumps, so every spec here has them
    g2 = make_component("gaussian2d", {"mean": [-0.2, 0.3], "cov": [[0.04, 0.01], [0.01, 0.25]]})
    shift = make_component("pareto_z1shift", {"z2": 0.5, "theta": 1.5, "shift": 0.0})
    rect = make_component("uniform_rect", {"a1": -0.5, "b1": 1.5, "a2": -2.0, "b2": 2.0})
    mk = lambda atoms=(), comps=(): ProcessSpec(LevyTriplet2D(-0.5, 0.1, 0.0, 0.0, 0.2, JumpMeasure(atoms, comps)))
    return {
        "bivariate-atom-mix": fixture("bivariate-atom-mix"),
        "gaussian jumps": mk(comps=((0.8, g2),)),
        "pareto U-jumps": mk(comps=((0.5, shift),)),
        "wide rectangle": mk(comps=((0.7, rect),)),
        "far atoms": mk(atoms=(Atom(3.0, 4.0, 0.2), Atom(-0.7, -3.0, 0.6))),
    }


def test_8_lemma_gap_vanishes(verdict):
    rows, bad = [], []
    for name, spec in lemma_specs().items():
        g = [lemma_integral_gap(spec, LogPow(1.0), x) for x in (1e2, 1e3, 1e4)]
        rel = abs(g[-1].gap) / abs(g[-1].rhs_1d)
        dec = abs(g[0].gap) > abs(g[1].gap) > abs(g[2].gap)
        rows.append(f"{name} {rel:.1e}")
        if not (rel < 0.05 and dec):
            bad.append(f"{name} (rel {rel:.2e}, decreasing {dec})")
    detail = "|gap|/|rhs| at 1e4: " + ", ".join(rows) + (f"; failing: {', '.join(bad)}" if bad else "")
    assert verdict(8, not bad, detail), detail


# 9 ---------------------------------------------------------------------------

def matching_function(report):
    p = report.params
    if report.verdict == "Exponential":
        return AbsPow(p["beta"])
    if report.verdict == "AlmostExponential":
        return ExpLogPow(p["gamma"], p["alpha"])
    if report.verdict == "Polynomial":
        return LogPow(p["alpha"])
    return LogPow(1.0)


def test_9_drift_scans_confirm_verdicts(verdict):
    rows, bad = [], []
    for name, spec in fixtures().items():
        report = classify(spec)
        if not report.positive or report.verdict == "RestartExponential":
            # the restart bound comes from a coupling, not a drift condition
            continue
        f = matching_function(report)
        scan = drift_scan(spec, f, log_grid(1.0, 1e5, 40), far=10 * f.cutoff)
        if not scan.satisfied:
            bad.append(f"{name} {scan.condition} fails at x={scan.witness:g}")
        # the log asymptote converges like 1/log x for log-law tails: fit far out
        log_scan = drift_scan(spec, LogPow(1.0), log_grid(10.0, 1e15, 60))
        ref = drift_integral_log(spec).value
        rel = abs(log_scan.asymptote[0] - ref) / abs(ref)
        rows.append(f"{name} {scan.condition} c={scan.c_hat:.3g}, asym {rel:.1%}")
        if rel >= 0.05:
            bad.append(f"{name} asymptote off by {rel:.1%}")
    detail = "; ".join(rows) + (f" | failing: {', '.join(bad)}" if bad else "")
    assert verdict(9, not bad, detail), detail


# 10 --------------------------------------------------------------------------

def test_10_determinism(verdict, tmp_path):
    cli = CliRunner()
    runs = [
        ("validate", "--fixture", "bivariate-atom-mix"),
        ("simulate", "--fixture", "restart-lambda05", "--horizon", "4", "--dt", "0.01", "--paths", "3"),
        ("generator", "--fixture", "levy-ou-loglaw", "--f", "logpow:2", "--points", "10"),
        ("classify", "--fixture", "fort-roberts-neg"),
        ("decay", "--fixture", "bivariate-atom-mix", "--tmax", "4", "--paths", "30000", "--boot", "50"),
        ("fixtures", "--write"),
    ]
    bad = []
    for args in runs:
        out = tmp_path / args[0]
        r = cli.invoke(main, ["--seed", "11", "--out-dir", str(out), *args])
        r2 = cli.invoke(main, ["--replay", str(out / f"{args[0]}.record.json")])
        if r.exit_code != 0 or r2.exit_code != 0:
            bad.append(f"{args[0]} replay exit {r2.exit_code}")
    # thread independence
    spec = fixture("bivariate-atom-mix")
    ref = ensemble(spec, [0.5, 3.0], 40_000, 3, threads=1)
    for n in (2, 3, 8):
        if not np.array_equal(ref, ensemble(spec, [0.5, 3.0], 40_000, 3, threads=n)):
            bad.append(f"ensemble differs at {n} threads")
    one = cli.invoke(main, ["--seed", "2", "--threads", "1", "--out-dir", str(tmp_path / "t1"), *runs[4]])
    four = cli.invoke(main, ["--seed", "2", "--threads", "4", "--out-dir", str(tmp_path / "t4"), *runs[4]])
    for name in ("decay.csv", "decay.json"):
        if (tmp_path / "t1" / name).read_bytes() != (tmp_path / "t4" / name).read_bytes():
            bad.append(f"{name} differs between 1 and 4 threads")
    detail = f"{len(runs)} replays, threads 1/2/3/4/8" + (f"; failing: {', '.join(bad)}" if bad else ": identical")
    assert verdict(10, not bad and one.exit_code == four.exit_code == 0, detail), detail
