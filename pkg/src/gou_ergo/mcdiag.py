"""Monte Carlo diagnostics: distance-to-stationarity curves and rate fits.

The distance between ``law(V_t | V_0 = x0)`` and the invariant law is
estimated by the L1 distance of binned samples on bins that carry equal
mass in the pooled sample (both samples together, at each time point).  The plug-in sum ``Σ|p_b - q_b|`` is biased upward by
sampling noise (each bin adds about ``E|N(0, v_b)|``); the reported
``dist`` subtracts the noise variance bin by bin,

    D_b = sqrt(max((p_b - q_b)^2 - v_b, 0)),  v_b = p(1-p)/n + q(1-q)/m,

which removes most of that floor.  The raw plug-in value is kept as ``raw``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize

from .levy_model import ProcessSpec
from .pathsim import Flow, ensemble, sample_stationary
from .rng import map_blocks, stream

N_BOOT = 200
# E sqrt(max(Z^2 - 1, 0)) for standard normal Z: the per-bin noise floor of
# the debiased distance in units of the bin's noise standard deviation
FLOOR_CONST = 0.3426


def equal_mass_edges(sample: np.ndarray, n_bins: int) -> np.ndarray:
    """Interior edges of ``n_bins`` equal-mass bins (duplicates removed).

    A value repeated at least ``size / n_bins`` times (a point mass, e.g.
    every path still at ``x0``) gets a bin of its own.
    """
    qs = np.quantile(sample, np.linspace(0, 1, n_bins + 1)[1:-1])
    vals, counts = np.unique(sample, return_counts=True)
    atoms = vals[counts >= sample.size / n_bins]
    return np.unique(np.concatenate([qs, atoms, np.nextafter(atoms, -np.inf)]))


def default_bins(n: int) -> int:
    return max(2, int(round(2 * n ** (1 / 3))))


def bin_counts(x: np.ndarray, edges: np.ndarray) -> np.ndarray:
    # bins are (-inf, e0], (e0, e1], ..., (e_last, inf)
    return np.bincount(np.searchsorted(edges, x, side="left"), minlength=edges.size + 1)


def l1_raw(p: np.ndarray, q: np.ndarray) -> float:
    return float(np.abs(p - q).sum())


def l1_debiased(cp: np.ndarray, n: int, cq: np.ndarray, m: int) -> float:
    p, q = cp / n, cq / m
    v = p * (1 - p) / n + q * (1 - q) / m
    return float(np.sqrt(np.maximum((p - q) ** 2 - v, 0.0)).sum())


@dataclass(frozen=True)
class HistDistance:
    dist: float
    lo: float
    hi: float
    raw: float
    weighted: float | None = None


def histogram_l1(x: np.ndarray, y: np.ndarray, edges: np.ndarray, rng=None, n_boot: int = N_BOOT,
                 weights: np.ndarray | None = None) -> HistDistance:
    """Debiased L1 distance of the binned laws of ``x`` and ``y`` with a
    percentile bootstrap interval (multinomial resampling of both samples)."""
    n, m = x.size, y.size
    cx, cy = bin_counts(x, edges), bin_counts(y, edges)
    d = l1_debiased(cx, n, cy, m)
    raw = l1_raw(cx / n, cy / m)
    wd = None
    if weights is not None:
        wd = float((np.abs(cx / n - cy / m) * weights).sum())
    lo = hi = d
    if n_boot and rng is not None:
        bx = rng.multinomial(n, cx / n, size=n_boot)
        by = rng.multinomial(m, cy / m, size=n_boot)
        p, q = bx / n, by / m
        v = p * (1 - p) / n + q * (1 - q) / m
        boots = np.sqrt(np.maximum((p - q) ** 2 - v, 0.0)).sum(axis=1)
        # resampling adds a second layer of noise and shifts the bootstrap
        # law upward; recentre it on the estimate before taking percentiles
        boots += d - boots.mean()
        lo, hi = (float(v) for v in np.percentile(boots, [2.5, 97.5]))
        lo, hi = max(min(lo, d), 0.0), max(hi, d)
    return HistDistance(d, lo, hi, raw, wd)


@dataclass
class DecayCurve:
    t_grid: np.ndarray
    dist: np.ndarray
    lo: np.ndarray
    hi: np.ndarray
    raw: np.ndarray
    n_paths: int
    n_bins: int
    seed: int
    weighted: np.ndarray | None = None
    flag: str = ""
    floor: np.ndarray | float = 0.0     # expected dist between two samples of one law

    @property
    def halfwidth(self) -> np.ndarray:
        return 0.5 * (self.hi - self.lo)

    @property
    def se(self) -> np.ndarray:
        return self.halfwidth / 1.96

    def rows(self):
        return list(zip(self.t_grid, self.dist, self.lo, self.hi))


def decay_curve(spec: ProcessSpec, x0, t_grid, n_paths: int, seed: int, n_pi: int | None = None,
                pi_sample: np.ndarray | None = None, n_bins: int | None = None, n_boot: int = N_BOOT,
                beta: float | None = None, threads: int | None = None, h: float = 0.01) -> DecayCurve:
    """Distance between ``law(V_t)`` started at ``x0`` and a stationary sample.

    ``x0`` may be an array of starting points (one per path).
    """
    from .classifier import classify

    flag = ""
    verdict = classify(spec).verdict
    if verdict in ("Nonrecurrent", "Inconclusive"):
        flag = f"verdict {verdict}: no decay expected"
    t_grid = np.asarray(t_grid, dtype=float)
    if pi_sample is None:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            pi_sample = sample_stationary(spec, n_pi or n_paths, seed + 7919, h=h, threads=threads).values
    k = n_bins or default_bins(n_paths + pi_sample.size)
    V = ensemble(spec, t_grid, n_paths, seed, x0=x0, h=h, threads=threads)
    rng = stream(seed, 99)
    res, floors, used = [], [], []
    for i in range(t_grid.size):
        # bins are equal-mass for the pooled sample, so they follow both laws
        pooled = np.concatenate([V[i], pi_sample])
        edges = equal_mass_edges(pooled[np.isfinite(pooled)], k)
        weights = None
        if beta is not None:
            reps = np.concatenate([[edges[0]], 0.5 * (edges[1:] + edges[:-1]), [edges[-1]]])
            weights = 1 + np.abs(reps) ** beta
        res.append(histogram_l1(V[i], pi_sample, edges, rng, n_boot, weights))
        floors.append(noise_floor(pooled, edges, n_paths, pi_sample.size))
        used.append(edges.size + 1)
    arr = lambda a: np.array([getattr(r, a) for r in res])
    return DecayCurve(t_grid, arr("dist"), arr("lo"), arr("hi"), arr("raw"), n_paths, max(used),
                      seed, arr("weighted") if beta is not None else None, flag, np.array(floors))


def noise_floor(sample: np.ndarray, edges: np.ndarray, n: int, m: int) -> float:
    """Expected debiased distance between samples of sizes ``n`` and ``m``
    drawn from one law with bin probabilities estimated from ``sample``."""
    q = bin_counts(sample, edges) / sample.size
    return float(FLOOR_CONST * np.sqrt(q * (1 - q) * (1 / n + 1 / m)).sum())


# ---------------------------------------------------------------------------
# rate fits
# ---------------------------------------------------------------------------

class FitRefused(ValueError):
    pass


@dataclass(frozen=True)
class RateFit:
    family: str
    params: dict
    rss: float
    n: int
    aic: float


FIT_CAP = 1.0


def _usable(curve_t, curve_d, se, floor):
    # the bounds are statements about the tail: drop the saturated start
    # (distance near its maximum 2) and points lost in the noise floor
    t = np.asarray(curve_t, dtype=float)
    d = np.asarray(curve_d, dtype=float)
    keep = (t > 0) & (d > 0) & (d < FIT_CAP)
    noise = floor + (0.0 if se is None else np.asarray(se))
    keep &= d > 2 * noise
    return t[keep], d[keep]


def _aic(rss, n, k):
    return n * math.log(max(rss, 1e-300) / n) + 2 * k


def fit_rate(t, dist, family: str, se=None, floor: float = 0.0) -> RateFit:
    """Least squares on ``log dist`` against the family's regressor.

    exp: ``log d = a - c t``; poly: ``log d = a + p log t``;
    almostexp: ``log d = a - (t/alpha)^alpha + (1 - alpha) log t``.
    Only points with ``2 (floor + se) < dist < 1`` enter the fit.
    """
    t, d = _usable(t, dist, se, floor)
    if t.size < 3:
        raise FitRefused("fewer than three points above the noise level")
    y = np.log(d)
    if np.polyfit(t, y, 1)[0] >= 0:
        raise FitRefused("curve does not decay")
    if family == "exp":
        c, a = np.polyfit(t, y, 1)
        rss = float(np.sum((y - (a + c * t)) ** 2))
        return RateFit("exp", {"rate": -c, "log_C": a}, rss, t.size, _aic(rss, t.size, 2))
    if family == "poly":
        p, a = np.polyfit(np.log(t), y, 1)
        rss = float(np.sum((y - (a + p * np.log(t))) ** 2))
        return RateFit("poly", {"exponent": p, "log_C": a}, rss, t.size, _aic(rss, t.size, 2))
    if family == "almostexp":
        def resid(alpha):
            reg = -(t / alpha) ** alpha + (1 - alpha) * np.log(t)
            a = float(np.mean(y - reg))
            return y - reg - a, a

        r = optimize.minimize_scalar(lambda al: float(np.sum(resid(al)[0] ** 2)), bounds=(1e-3, 0.999),
                                     method="bounded")
        e, a = resid(r.x)
        rss = float(np.sum(e ** 2))
        return RateFit("almostexp", {"alpha": float(r.x), "log_C": a}, rss, t.size, _aic(rss, t.size, 2))
    raise ValueError(f"unknown family {family!r}")


@dataclass(frozen=True)
class Selection:
    fits: dict
    best: str
    rejected: tuple      # families whose AIC exceeds the best by more than 2

    def prefers(self, a: str, b: str) -> bool:
        return self.fits[a].aic < self.fits[b].aic


def fit_curve(curve: DecayCurve, family: str) -> RateFit:
    return fit_rate(curve.t_grid, curve.dist, family, curve.se, curve.floor)


def select_family(t, dist, se=None, families=("exp", "poly", "almostexp"), floor: float = 0.0) -> Selection:
    fits = {f: fit_rate(t, dist, f, se, floor) for f in families}
    best = min(fits, key=lambda f: fits[f].aic)
    rejected = tuple(f for f in families if fits[f].aic > fits[best].aic + 2)
    return Selection(fits, best, rejected)


def select_curve(curve: DecayCurve, families=("exp", "poly", "almostexp")) -> Selection:
    return select_family(curve.t_grid, curve.dist, curve.se, families, curve.floor)


# ---------------------------------------------------------------------------
# recurrence
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RecurrenceProbe:
    return_fraction: float
    mean_return_time: float
    n_paths: int
    T: float


def recurrence_probe(spec: ProcessSpec, x0: float, T: float, n_paths: int, seed: int,
                     h: float = 0.01, threads: int | None = None) -> RecurrenceProbe:
    """Fraction of diffusion paths entering ``[-1, 1]`` before ``T`` (monitored every ``h``)."""
    if not spec.pure_diffusion:
        raise ValueError("recurrence_probe needs a pure diffusion spec")
    if abs(x0) <= 1:
        return RecurrenceProbe(1.0, 0.0, n_paths, T)
    flow = Flow(spec.triplet, h)
    steps = int(math.ceil(T / h))

    def block(rng, size, first):
        V = np.full(size, float(x0))
        hit = np.full(size, math.inf)
        act = np.arange(size)
        for k in range(1, steps + 1):
            A, B = flow.pairs(rng, np.full(act.size, h))
            V[act] = A * V[act] + B
            now = np.abs(V[act]) <= 1
            hit[act[now]] = k * h
            act = act[~now]
            if not act.size:
                break
        return hit

    hits = np.concatenate(map_blocks(block, n_paths, seed, threads, tag=5))
    ok = np.isfinite(hits)
    frac = float(ok.mean())
    return RecurrenceProbe(frac, float(hits[ok].mean()) if ok.any() else math.inf, n_paths, T)
