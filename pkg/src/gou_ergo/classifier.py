"""Decision procedure for the ergodicity regime of a GOU process.

The procedure evaluates the moment conditions on ``nu`` and the two drift
integrals

    I_log     = g_U - s_U^2/2 + ∫[log|1+z| - z I(|z|<=1)] nu_U(dz) + ∫ z nu'(dz)
    I_beta(b) = g_U - s_U^2(1-b)/2 + ∫(|1+z|^b - 1 - b z I(|z|<=1))/b nu_U(dz) + ∫ z nu'(dz)

and reports the strongest regime whose conditions pass with margin
(value + 3 err < 0), in the order restart > exponential >
almost-exponential > polynomial > ergodic.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .levy_model import (AbsPow, ExpLogPow, Log, LogNearMinus1, LogPow, ProcessSpec,
                         marginal_nu_U, moment_check, nu_prime)
from .quadrature import QuadResult

BETA_GRID = (1.0, 0.75, 0.5, 0.25, 0.1)
ALPHA_GRID = (1.25, 1.5, 2.0, 3.0)
GAMMA_ALPHA_GRID = tuple((g, a) for g in (0.5, 1.0) for a in (0.25, 0.5, 0.75))
MARGIN_SIGMAS = 3.0


@dataclass(frozen=True)
class DriftValue:
    value: float
    err: float
    status: str = "converged"

    @property
    def negative(self) -> bool:
        """Strictly negative with margin."""
        return self.status in ("converged", "maxiter") and self.value + MARGIN_SIGMAS * self.err < 0


def _nu_prime_mean(spec: ProcessSpec) -> QuadResult:
    return nu_prime(spec).integrate(lambda z: np.asarray(z, dtype=float))


def drift_integral_log(spec: ProcessSpec) -> DriftValue:
    t = spec.triplet

    def g(z):
        z = np.asarray(z, dtype=float)
        with np.errstate(divide="ignore"):
            return np.log(np.abs(1.0 + z)) - z * (np.abs(z) <= 1)

    def g_log(lv, lw):
        return (lv + np.log1p(np.exp(-lv))) * np.exp(lw)

    if spec.lambda_minus1 > 0:
        return DriftValue(-math.inf, math.inf, "divergent")
    j = marginal_nu_U(spec).integrate(g, points=[-1.0, 1.0], g_log=g_log)
    p = _nu_prime_mean(spec)
    tot = j + p
    return DriftValue(t.gamma_U - 0.5 * t.sigma2_U + tot.value, tot.err, tot.status)


def drift_integral_beta(spec: ProcessSpec, beta: float) -> DriftValue:
    if not 0 < beta <= 1:
        raise ValueError("beta must lie in (0, 1]")
    t = spec.triplet

    def g(z):
        z = np.asarray(z, dtype=float)
        return (np.abs(1.0 + z) ** beta - 1.0 - z * beta * (np.abs(z) <= 1)) / beta

    def g_log(lv, lw):
        with np.errstate(all="ignore"):
            Ly = lv + np.log1p(np.exp(-lv))
            return (np.exp(beta * Ly + lw) - np.exp(lw)) / beta

    j = marginal_nu_U(spec).integrate(g, points=[-1.0, 1.0], g_log=g_log)
    p = _nu_prime_mean(spec)
    tot = j + p
    return DriftValue(t.gamma_U - 0.5 * t.sigma2_U * (1 - beta) + tot.value, tot.err, tot.status)


# ---------------------------------------------------------------------------
# rates
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RateFn:
    """Shape of the total-variation bound, up to the unknown constant."""

    tag: str                 # restart | exponential | almostexp | polynomial | none
    params: dict = field(default_factory=dict)
    heuristic: bool = False

    def _raw(self, t):
        p = self.params
        if self.tag == "restart":
            return 2.0 * np.exp(-p["lambda"] * t)
        if self.tag == "exponential":
            return np.exp(-p["c"] * t)
        if self.tag == "polynomial":
            a = p["alpha"]
            return (1.0 + t / a) ** (-(a - 1.0))
        if self.tag == "almostexp":
            return _almostexp_envelope(t, p["alpha"])
        return np.full(np.shape(t), 2.0)

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        if np.any(t < 0):
            raise ValueError("rate defined for t >= 0")
        return np.minimum(self._raw(t), 2.0)


def _almostexp_shape(t, a):
    s = np.asarray(t, dtype=float) / a
    with np.errstate(divide="ignore"):
        return np.exp(-s ** a) * s ** (1.0 - a)


def _almostexp_envelope(t, a):
    """``sup_{s>=t} g(s) / sup g`` for ``g(t) = exp(-(t/a)^a) (t/a)^(1-a)``.

    ``g`` increases up to ``t* = a ((1-a)/a)^(1/a)`` and decreases after, so
    the envelope is 1 before ``t*`` and ``g / g(t*)`` after.
    """
    tstar = a * ((1.0 - a) / a) ** (1.0 / a)
    peak = float(_almostexp_shape(tstar, a))
    t = np.asarray(t, dtype=float)
    return np.where(t <= tstar, 1.0, _almostexp_shape(np.maximum(t, tstar), a) / peak)


# ---------------------------------------------------------------------------
# report
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Check:
    id: str
    holds: bool
    value: float
    err: float
    note: str = ""


@dataclass(frozen=True)
class ErgodicityReport:
    verdict: str      # RestartExponential | Exponential | AlmostExponential | Polynomial | Ergodic | Nonrecurrent | Inconclusive
    params: dict
    checklist: tuple
    petite_assumed: bool
    rate: RateFn | None
    blocking: str = ""

    @property
    def positive(self) -> bool:
        return self.verdict not in ("Nonrecurrent", "Inconclusive")

    def label(self) -> str:
        p = self.params
        if self.verdict == "RestartExponential":
            return f"RestartExponential({p['lambda']:g})"
        if self.verdict == "Exponential":
            return f"Exponential(beta={p['beta']:g})"
        if self.verdict == "AlmostExponential":
            return f"AlmostExponential(gamma={p['gamma']:g}, alpha={p['alpha']:g})"
        if self.verdict == "Polynomial":
            return f"Polynomial(alpha={p['alpha']:g})"
        return self.verdict

    def to_dict(self) -> dict:
        return {
            "verdict": self.verdict,
            "label": self.label(),
            "params": self.params,
            "petite_assumed": self.petite_assumed,
            "blocking": self.blocking,
            "rate": None if self.rate is None else {"tag": self.rate.tag, "params": self.rate.params,
                                                    "heuristic": self.rate.heuristic},
            "checklist": [asdict(c) for c in self.checklist],
        }


def _moment_row(spec, kind, cid) -> Check:
    r = moment_check(spec, kind)
    return Check(cid, r.holds, r.value, r.err, r.diagnostic)


def _drift_row(d: DriftValue, cid) -> Check:
    note = "" if d.negative else ("inside the error band" if d.value < 0 else "nonnegative")
    if d.status not in ("converged", "maxiter"):
        note = f"quadrature {d.status}"
    return Check(cid, d.negative, d.value, d.err, note)


def classify(spec: ProcessSpec, betas=BETA_GRID, alphas=ALPHA_GRID,
             gamma_alphas=GAMMA_ALPHA_GRID) -> ErgodicityReport:
    """Strongest regime whose sufficient conditions pass on the search grids."""
    t = spec.triplet
    pure_diff = spec.pure_diffusion
    petite = not (pure_diff and np.linalg.det(t.cov) > 0)
    rows: list[Check] = []
    lam = spec.lambda_minus1
    rows.append(Check("restart-mass", lam > 0, lam, 0.0, "mass of dU = -1"))
    if lam > 0:
        return ErgodicityReport("RestartExponential", {"lambda": lam}, tuple(rows), petite,
                                RateFn("restart", {"lambda": lam}))

    log_m = _moment_row(spec, Log(), "log-moment")
    near = _moment_row(spec, LogNearMinus1(), "log-near-minus-one")
    dlog = drift_integral_log(spec)
    dlog_row = _drift_row(dlog, "log-drift<0")
    rows += [log_m, near, dlog_row]

    exp_ok = []
    for b in betas:
        m = _moment_row(spec, AbsPow(b), f"pow-moment(beta={b:g})")
        if m.holds:
            d = drift_integral_beta(spec, b)
            dr = _drift_row(d, f"pow-drift<0(beta={b:g})")
        else:
            d = None
            dr = Check(f"pow-drift<0(beta={b:g})", False, math.nan, math.nan, "moment fails")
        rows += [m, dr]
        if m.holds and dr.holds:
            exp_ok.append((b, d))

    sub2_ok = []
    for g, a in gamma_alphas:
        m = _moment_row(spec, ExpLogPow(g, a), f"explogpow-moment(gamma={g:g},alpha={a:g})")
        rows.append(m)
        if m.holds:
            sub2_ok.append((g, a))

    poly_ok = []
    for a in alphas:
        m = _moment_row(spec, LogPow(a), f"logpow-moment(alpha={a:g})")
        rows.append(m)
        if m.holds:
            poly_ok.append(a)

    base = near.holds and dlog_row.holds
    rows = tuple(rows)
    if exp_ok:
        b, d = max(exp_ok, key=lambda p: p[0])
        c = b * abs(d.value)
        return ErgodicityReport("Exponential", {"beta": b, "drift_value": d.value, "drift_err": d.err},
                                rows, petite, RateFn("exponential", {"beta": b, "c": c}, heuristic=True))
    if base and sub2_ok:
        g, a = max(sub2_ok)
        return ErgodicityReport("AlmostExponential",
                                {"gamma": g, "alpha": a, "drift_value": dlog.value, "drift_err": dlog.err},
                                rows, petite, RateFn("almostexp", {"gamma": g, "alpha": a}))
    if base and poly_ok:
        a = max(poly_ok)
        return ErgodicityReport("Polynomial", {"alpha": a, "drift_value": dlog.value, "drift_err": dlog.err},
                                rows, petite, RateFn("polynomial", {"alpha": a}))
    if base and log_m.holds:
        return ErgodicityReport("Ergodic", {"drift_value": dlog.value, "drift_err": dlog.err}, rows, petite,
                                RateFn("none"))
    if pure_diff and t.gamma_U - 0.5 * t.sigma2_U > 1e-12:
        return ErgodicityReport("Nonrecurrent", {"drift_value": dlog.value}, rows, petite, None,
                                "gamma_U > sigma2_U / 2")
    blocking = next((r.id for r in (log_m, near, dlog_row) if not r.holds), "no condition passed")
    return ErgodicityReport("Inconclusive", {"drift_value": dlog.value, "drift_err": dlog.err}, rows, petite,
                            None, blocking)


def rate_bound(report: ErgodicityReport, t) -> np.ndarray | float:
    """Shape of the TV bound at ``t``; only for positive verdicts."""
    if not report.positive or report.rate is None:
        raise ValueError(f"no rate for verdict {report.verdict}")
    out = report.rate(t)
    return float(out) if np.ndim(out) == 0 else out
