"""The extended generator of the GOU process and drift-condition scans.

    A f(x) = (x gamma_U + gamma_L) f'(x)
             + (x^2 s_U^2 + 2 x s_UL + s_L^2) f''(x) / 2
             + ∫∫ [f(x + x z1 + z2) - f(x) - f'(x)(x z1 + z2) I(|z| <= 1)] nu(dz)

The jump integral is split at the unit circle; inside and outside the
disk are integrated separately so the indicator never sits inside a
quadrature panel.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .families import Region
from .levy_model import ProcessSpec, marginal_nu_U, nu_prime
from .lyapunov import LyapunovFn, subadditivity_constant
from .pathsim import ensemble
from .quadrature import QuadResult

INSIDE = Region(disk="in")
OUTSIDE = Region(disk="out")


@dataclass(frozen=True)
class SmoothFn:
    """A C^2 test function given with its first two derivatives.

    ``support`` bounds the set where ``f`` is nonzero (``None`` when
    unbounded); ``log_value_at_log`` plays the same role as for
    :class:`LyapunovFn` for unbounded functions.
    """

    f: Callable
    df: Callable
    d2f: Callable
    support: float | None = None
    log_value_at_log: Callable | None = None
    cutoff: float = 1.0

    def __call__(self, x):
        return self.f(np.asarray(x, dtype=float))

    def d1(self, x):
        return self.df(np.asarray(x, dtype=float))

    def d2(self, x):
        return self.d2f(np.asarray(x, dtype=float))

    def __add__(self, other: "SmoothFn") -> "SmoothFn":
        return combine([(1.0, self), (1.0, other)])


def combine(terms) -> SmoothFn:
    """Linear combination ``sum c_i f_i`` of compactly supported functions."""
    terms = list(terms)
    sup = None if any(t.support is None for _, t in terms) else max(t.support for _, t in terms)
    return SmoothFn(
        lambda x: sum(c * t(x) for c, t in terms),
        lambda x: sum(c * t.d1(x) for c, t in terms),
        lambda x: sum(c * t.d2(x) for c, t in terms),
        support=sup,
    )


def bump(center: float = 0.0, width: float = 1.0, height: float = 1.0) -> SmoothFn:
    """``height * exp(1 - 1/(1-u^2))`` on ``|u| < 1``, ``u = (x - center)/width``."""

    def parts(x):
        u = (x - center) / width
        inside = np.abs(u) < 1
        q = np.where(inside, 1 - u * u, 1.0)
        e = np.where(inside, height * np.exp(1 - 1 / q), 0.0)
        # derivatives of exp(1 - 1/q) with q = 1 - u^2
        du = -2 * u / q ** 2
        d2u = (6 * u ** 4 - 2) / q ** 4
        return e, e * du / width, e * d2u / width ** 2

    return SmoothFn(lambda x: parts(x)[0], lambda x: parts(x)[1], lambda x: parts(x)[2],
                    support=abs(center) + width)


def polynomial(coefs) -> SmoothFn:
    """``sum c_k x^k`` (unbounded; only for specs without jumps)."""
    p = np.polynomial.Polynomial(coefs)
    return SmoothFn(p, p.deriv(1), p.deriv(2))


# ---------------------------------------------------------------------------
# generator
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GenValue:
    value: float
    err: float
    status: str = "converged"
    drift_part: float = 0.0
    jump_part: float = 0.0

    @property
    def finite(self) -> bool:
        return self.status in ("converged", "maxiter") and math.isfinite(self.value)


def _cut_points(f):
    c = getattr(f, "cutoff", None)
    if getattr(f, "support", None) is not None:
        c = f.support
    return [] if c is None else [-c, c]


def jump_integral(spec: ProcessSpec, f, x: float, rtol: float = 1e-8) -> QuadResult:
    x = float(x)
    fx = float(f(x))
    f1 = float(f.d1(x))
    cuts = [0.0, *_cut_points(f)]
    if getattr(f, "support", None) is not None:
        s = f.support
        cuts += [-s, s]

    def g_in(z1, z2):
        return f(x + x * z1 + z2) - fx - f1 * (x * z1 + z2)

    def g_out(z1, z2):
        return f(x + x * z1 + z2) - fx

    def z2_points(z1):
        return [y - x * (1 + z1) for y in cuts]

    z1_points = [-1.0, 0.0, 1.0]
    if x != 0:
        z1_points += [(y - 0.0) / x - 1 for y in cuts]

    log_f = getattr(f, "log_value_at_log", None)
    bounded = getattr(f, "support", None) is not None

    def tail(lv, lw, axis, fixed):
        with np.errstate(all="ignore"):
            if bounded:
                return (0.0 - fx) * np.exp(lw)
            if axis == "z2":
                Ly = lv + np.log(np.abs(1 + x * (1 + fixed) * np.exp(-lv)))
            elif x == 0:
                return (float(f(fixed)) - fx) * np.exp(lw)
            else:
                Ly = math.log(abs(x)) + lv + np.log(np.abs(1 + (1 + fixed / x) * np.exp(-lv)))
            return np.exp(log_f(Ly) + lw) - fx * np.exp(lw)

    use_tail = tail if (bounded or log_f is not None) else None
    nu = spec.nu
    a = nu.integrate(g_in, INSIDE, z1_points, z2_points, None, None, rtol)
    b = nu.integrate(g_out, OUTSIDE, z1_points, z2_points, use_tail, 30.0, rtol)
    return a + b


def apply_generator(spec: ProcessSpec, f, x: float, rtol: float = 1e-8) -> GenValue:
    """``A f(x)`` with a quadrature error estimate."""
    t = spec.triplet
    x = float(x)
    drift = (x * t.gamma_U + t.gamma_L) * float(f.d1(x)) + 0.5 * (
        x * x * t.sigma2_U + 2 * x * t.sigma_UL + t.sigma2_L) * float(f.d2(x))
    if spec.nu.is_zero:
        return GenValue(drift, 0.0, "converged", drift, 0.0)
    j = jump_integral(spec, f, x, rtol)
    return GenValue(drift + j.value, j.err + 1e-15 * abs(drift), j.status, drift, j.value)


def truncated_generator(spec: ProcessSpec, f, n: float) -> Callable[[float], GenValue]:
    """Generator of the process stopped outside ``(-n, n)``."""

    def An(x):
        if abs(x) < n:
            return apply_generator(spec, f, x)
        return GenValue(0.0, 0.0)

    return An


def generator_mc(spec: ProcessSpec, f, x: float, h: float, n: int, seed: int, threads=None,
                 flow_h: float = 0.01) -> tuple[float, float]:
    """Monte Carlo ``(E_x f(V_h) - f(x)) / h`` with its standard error."""
    V = ensemble(spec, [h], n, seed, x0=x, h=min(flow_h, h), threads=threads)[0]
    y = (np.asarray(f(V)) - float(f(x))) / h
    return float(y.mean()), float(y.std(ddof=1) / math.sqrt(n))


def generator_richardson(spec: ProcessSpec, f, x: float, h: float, n: int, seed: int,
                         threads=None) -> tuple[float, float]:
    """``2 D(h/2) - D(h)`` from two independent ensembles, with its standard error."""
    d1, s1 = generator_mc(spec, f, x, h, n, seed, threads)
    d2, s2 = generator_mc(spec, f, x, h / 2, n, seed + 1, threads)
    return 2 * d2 - d1, math.sqrt(4 * s2 * s2 + s1 * s1)


# ---------------------------------------------------------------------------
# drift scans
# ---------------------------------------------------------------------------

def log_grid(xmin: float, xmax: float, points: int, both_signs: bool = True) -> np.ndarray:
    pos = np.geomspace(xmin, xmax, points)
    return np.concatenate([-pos[::-1], pos]) if both_signs else pos


@dataclass
class DriftScan:
    f: LyapunovFn
    x_grid: np.ndarray
    Af: np.ndarray
    err: np.ndarray
    status: list
    condition: str                     # CD2 | CDsubexp | CD3
    far: float                         # condition checked for |x| >= far
    c_hat: float                       # best constant in the condition
    d_hat: float
    satisfied: bool
    witness: float | None              # grid point violating the condition
    asymptote: tuple = field(default=(math.nan, ""))   # (coefficient, reference tag)

    def rows(self):
        return list(zip(self.x_grid, self.Af, self.err))


def _reference(f: LyapunovFn, x):
    """Reference function of the asymptote fit: ``x f'(x)``."""
    return np.abs(x) * np.abs(f.d1(x))


def drift_scan(spec: ProcessSpec, f: LyapunovFn, grid=None, far: float | None = None,
               rtol: float = 1e-8) -> DriftScan:
    """Evaluate ``A f`` on ``grid`` and test the drift condition matching ``f``.

    CD2: ``A f <= -c`` for ``|x| >= far``; CDsubexp: ``A f <= -c phi(f)``;
    CD3: ``A f <= -c f``.  ``c_hat`` is the largest such ``c`` supported by
    the grid (values padded by three error bars); ``d_hat`` bounds the
    excess inside ``{|x| < far}``.
    """
    if grid is None:
        grid = log_grid(10.0, 1e5, 40)
    x = np.asarray(grid, dtype=float)
    far = 10.0 * f.cutoff if far is None else far
    vals = [apply_generator(spec, f, xi, rtol) for xi in x]
    Af = np.array([v.value for v in vals])
    err = np.array([v.err for v in vals])
    status = [v.status for v in vals]
    cond = f.condition
    fv = f(x)
    if cond == "CD2":
        scale = np.ones_like(x)
    elif cond == "CD3":
        scale = fv
    else:
        scale = f.phi(fv)
    upper = Af + 3 * err
    sel = np.abs(x) >= far
    ok = np.array([s in ("converged", "maxiter") for s in status])
    witness = None
    if np.any(sel):
        ratio = -upper[sel] / scale[sel]
        c_hat = float(np.min(ratio)) if np.all(ok[sel]) else -math.inf
        satisfied = c_hat > 0
        if not satisfied:
            bad = np.flatnonzero(sel)[np.argmin(np.where(ok[sel], ratio, -math.inf))]
            witness = float(x[bad])
    else:
        c_hat, satisfied = math.nan, False
    inner = ~sel
    d_hat = float(np.max(upper[inner] + max(c_hat, 0) * scale[inner])) if np.any(inner) and math.isfinite(c_hat) else 0.0
    return DriftScan(f, x, Af, err, status, cond, far, c_hat, max(d_hat, 0.0), bool(satisfied), witness,
                     fit_asymptote(f, x, Af))


def fit_asymptote(f: LyapunovFn, x, Af) -> tuple[float, str]:
    """Least-squares coefficient of ``A f`` on ``x f'(x)`` over the last decade."""
    x = np.asarray(x, dtype=float)
    ax = np.abs(x)
    top = ax.max()
    sel = (ax >= top / 10) & np.isfinite(Af)
    ref = _reference(f, x[sel])
    tag = "const" if f.tag == "logpow" and f.params[0] == 1.0 else "x*f'(x)"
    coef = float(np.dot(Af[sel], ref) / np.dot(ref, ref))
    return coef, tag


# ---------------------------------------------------------------------------
# 2D -> 1D reduction of the jump integral
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class LemmaGap:
    x: float
    lhs_2d: float
    rhs_1d: float
    gap: float
    err: float


def check_lemma_hypotheses(f, scan_max: float = 1e6) -> list[str]:
    """Problems with ``f`` as an input to the reduction (empty when fine)."""
    problems = []
    xs = np.geomspace(1e-2, scan_max, 200)
    if not np.allclose(f(xs), f(-xs), rtol=1e-12, atol=1e-12):
        problems.append("f is not even")
    if np.any(f(xs) < 0):
        problems.append("f is negative somewhere")
    if not math.isfinite(subadditivity_constant(f, xmax=scan_max)):
        problems.append("f is not subadditive up to a constant")
    if not isinstance(f, LyapunovFn):
        # x sup_{|y|>=x} |f''(y)| must decay over the last three decades
        big = np.geomspace(scan_max / 1e3, scan_max, 7)
        tailsup = [x * np.max(np.abs(f.d2(np.geomspace(x, 10 * scan_max, 50)))) for x in big]
        if not tailsup[-1] < tailsup[0] or not tailsup[-1] < 1e-2:
            problems.append("x sup|f''| does not vanish at infinity")
    return problems


def lemma_integral_gap(spec: ProcessSpec, f, x: float, rtol: float = 1e-9) -> LemmaGap:
    """Compare the 2D jump integral with its one-dimensional reduction

        ∫[f(x + x z) - f(x) - f'(x) x z I(|z| <= 1)] nu_U(dz) + f'(x) x ∫ z nu'(dz).
    """
    problems = check_lemma_hypotheses(f)
    if problems:
        raise ValueError("; ".join(problems))
    x = float(x)
    fx, f1 = float(f(x)), float(f.d1(x))
    lhs = jump_integral(spec, f, x, rtol)
    cuts = _cut_points(f)
    pts = [-1.0, 1.0] + ([y / x - 1 for y in cuts] if x != 0 else [])
    log_f = getattr(f, "log_value_at_log", None)

    def g(z):
        z = np.asarray(z, dtype=float)
        return f(x + x * z) - fx - f1 * x * z * (np.abs(z) <= 1)

    def g_log(lv, lw):
        with np.errstate(all="ignore"):
            Ly = math.log(abs(x)) + lv + np.log1p(np.exp(-lv))
            return np.exp(log_f(Ly) + lw) - fx * np.exp(lw)

    one = marginal_nu_U(spec).integrate(g, points=pts, g_log=g_log if (log_f and x != 0) else None, rtol=rtol)
    proj = nu_prime(spec).integrate(lambda z: np.asarray(z, dtype=float), rtol=rtol)
    rhs = one.value + f1 * x * proj.value
    return LemmaGap(x, lhs.value, rhs, lhs.value - rhs, lhs.err + one.err + abs(f1 * x) * proj.err)
