"""Simulation of (U, L), the stochastic exponential and the GOU process V.

Single paths live on a grid of uniform steps merged with the exact jump
times.  Each interval ``(t_i, t_{i+1}]`` carries the continuous increments
``dUc, dLc`` (Brownian part plus the drift applied between jumps) and the
jump ``(jU, jL)`` occurring at ``t_{i+1}`` (zero on pure grid points).

Ensembles of many paths use a vectorised event-driven engine built on
one-step affine maps ``V -> A V + B``; the same maps, composed in reverse
order, give the exponential functional used to sample the stationary law.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .levy_model import (AbsPow, Atom, JumpMeasure, LevyTriplet2D, ProcessSpec, marginal_nu_U,
                         moment_check)
from .rng import map_blocks, stream


class ConsistencyError(RuntimeError):
    pass


def phi1(x):
    """``(e^x - 1) / x`` with the removable singularity filled in."""
    x = np.asarray(x, dtype=float)
    small = np.abs(x) < 1e-8
    with np.errstate(all="ignore"):
        out = np.expm1(x) / np.where(small, 1.0, x)
    return np.where(small, 1.0 + 0.5 * x, out)


@dataclass
class SamplePath:
    times: np.ndarray
    dUc: np.ndarray          # per interval
    dLc: np.ndarray
    jU: np.ndarray           # jump at the right end of each interval
    jL: np.ndarray
    sigma2_U: float
    sigma_UL: float
    seed: int
    dt: float
    V: np.ndarray | None = None         # post-jump values at ``times``
    V_minus: np.ndarray | None = None   # left limits at ``times``

    @property
    def is_jump(self) -> np.ndarray:
        out = np.zeros(self.times.size, dtype=bool)
        out[1:] = (self.jU != 0) | (self.jL != 0)
        return out

    @property
    def jump_times(self) -> np.ndarray:
        return self.times[self.is_jump]

    @property
    def jump_marks(self) -> np.ndarray:
        m = self.is_jump[1:]
        return np.column_stack([self.jU[m], self.jL[m]])

    @property
    def U(self) -> np.ndarray:
        return np.concatenate([[0.0], np.cumsum(self.dUc + self.jU)])

    @property
    def L(self) -> np.ndarray:
        return np.concatenate([[0.0], np.cumsum(self.dLc + self.jL)])

    def with_V(self, V, V_minus) -> "SamplePath":
        return SamplePath(self.times, self.dUc, self.dLc, self.jU, self.jL, self.sigma2_U,
                          self.sigma_UL, self.seed, self.dt, V, V_minus)


def _grid(T: float, dt: float) -> np.ndarray:
    n = int(math.ceil(T / dt - 1e-9))
    g = np.arange(n + 1) * dt
    g[-1] = T
    return g


def simulate_UL(triplet: LevyTriplet2D, T: float, dt: float, seed: int, index: int = 0) -> SamplePath:
    """Compound-Poisson jumps at exact times plus correlated Brownian motion.

    ``index`` selects one of many independent paths under the same seed.
    """
    if not (T > 0 and dt > 0):
        raise ValueError("need T > 0 and dt > 0")
    rng = stream(seed, 0, index)
    lam = triplet.nu.total_rate
    nj = rng.poisson(lam * T) if lam > 0 else 0
    tj = np.sort(rng.uniform(0.0, T, nj))
    z1, z2 = triplet.nu.sample_marks(rng, nj)
    grid = _grid(T, dt)
    times = np.union1d(grid, tj)
    idx = np.searchsorted(times, tj)                  # jump positions in ``times``
    d = np.diff(times)
    m = d.size
    aU, aL = triplet.actual_drift
    W = triplet.chol @ rng.standard_normal((2, m)) * np.sqrt(d)
    jU, jL = np.zeros(m), np.zeros(m)
    np.add.at(jU, idx - 1, z1)
    np.add.at(jL, idx - 1, z2)
    return SamplePath(times, aU * d + W[0], aL * d + W[1], jU, jL,
                      triplet.sigma2_U, triplet.sigma_UL, int(seed), float(dt))


@dataclass
class StochExp:
    times: np.ndarray
    values: np.ndarray

    def restricted(self, s_index: int) -> np.ndarray:
        """``E(U)_{(s, t]}`` for ``t >= times[s_index]`` (needs no zero before s)."""
        return self.values[s_index:] / self.values[s_index]


def stoch_exp(path: SamplePath) -> StochExp:
    """``E(U)_t = exp(U_t - sigma_U^2 t / 2) prod (1 + dU) exp(-dU)``."""
    U = path.U
    jumps = np.concatenate([[1.0], np.cumprod((1.0 + path.jU) * np.exp(-path.jU))])
    return StochExp(path.times, np.exp(U - 0.5 * path.sigma2_U * path.times) * jumps)


def xi_path(path: SamplePath) -> np.ndarray:
    """``xi_t = -U_t + sigma_U^2 t / 2 - sum(log(1 + dU) - dU)``."""
    with np.errstate(divide="ignore", invalid="ignore"):
        corr = np.concatenate([[0.0], np.cumsum(np.log1p(path.jU) - path.jU)])
    return -path.U + 0.5 * path.sigma2_U * path.times - corr


def _explicit_segment(x0, dUc, dLc, jU, jL, dts, s2u, sul):
    """``E_t (x0 + ∫ E_{s-}^{-1} d eta_s)`` over consecutive intervals.

    Returns post-jump values at the m+1 interval ends and the left limits
    at the m right ends.
    """
    cont = dUc - 0.5 * s2u * dts
    with np.errstate(divide="ignore"):
        jl = np.log(np.abs(1.0 + jU))
    sj = np.sign(1.0 + jU)
    logE = np.concatenate([[0.0], np.cumsum(cont + jl)])
    sgn = np.concatenate([[1.0], np.cumprod(sj)])
    # continuous eta increment, weighted by the mean of E^{-1} over the
    # interval when U has no Brownian part (E is then exponential in time)
    deta = dLc - sul * dts
    w = phi1(-dUc) if s2u == 0 else 1.0
    inv_left = sgn[:-1] * np.exp(-logE[:-1])
    with np.errstate(all="ignore"):
        inv_right = np.where(jL != 0, sgn[1:] * np.exp(-logE[1:]), 0.0)
    J = np.concatenate([[0.0], np.cumsum(inv_left * w * deta + jL * inv_right)])
    Jm = J[:-1] + inv_left * w * deta
    V = sgn * np.exp(logE) * (x0 + J)
    Vm = sgn[:-1] * np.exp(logE[:-1] + cont) * (x0 + Jm)
    return V, Vm


def solve_V_explicit(spec: ProcessSpec, path: SamplePath) -> SamplePath:
    """Fill V from the stochastic-exponential representation.

    With restart jumps (``dU = -1``) the path is cut at each of them and
    restarted from the concurrent ``dL``.
    """
    restart = np.flatnonzero(path.jU == -1.0)
    if restart.size and spec.lambda_minus1 == 0:
        raise ConsistencyError("jump with dU = -1 on a spec without restart atoms")
    dts = np.diff(path.times)
    m = dts.size
    V = np.empty(m + 1)
    Vm = np.empty(m + 1)
    Vm[0] = spec.x0
    starts = [0, *(restart + 1)]
    ends = [*(restart + 1), m]
    x = spec.x0
    for a, b in zip(starts, ends):
        if a > 0:
            # restart interval: V jumps to dL at the right end of interval a-1
            x = path.jL[a - 1]
        if b > a:
            s = slice(a, b)
            # the restart jump itself belongs to the next segment
            jU, jL = path.jU[s].copy(), path.jL[s].copy()
            if b - 1 in restart:
                jU[-1] = jL[-1] = 0.0
            seg_V, seg_Vm = _explicit_segment(x, path.dUc[s], path.dLc[s], jU, jL, dts[s],
                                              path.sigma2_U, path.sigma_UL)
            V[a:b + 1] = seg_V
            Vm[a + 1:b + 1] = seg_Vm
        else:
            V[a] = x
    for r in restart:
        # left limit before the restart jump and the restarted value
        V[r + 1] = path.jL[r]
    return path.with_V(V, Vm)


def euler_V(spec: ProcessSpec, path: SamplePath, dt: float) -> SamplePath:
    """Euler scheme ``V += V dU + dL`` on a coarser grid with exact jumps.

    ``dt`` must be an integer multiple of the path step.  Jumps are applied
    at their exact times as ``V -> V (1 + dU) + dL``.
    """
    ratio = dt / path.dt
    k = int(round(ratio))
    if k < 1 or abs(ratio - k) > 1e-9 * ratio:
        raise ValueError("euler dt must be an integer multiple of the path dt")
    Uc = np.concatenate([[0.0], np.cumsum(path.dUc)])
    Lc = np.concatenate([[0.0], np.cumsum(path.dLc)])
    coarse = _grid(path.times[-1], dt)
    on_grid = np.isin(path.times, coarse) | np.isclose(
        path.times, np.round(path.times / dt) * dt, rtol=0, atol=1e-12 * max(1.0, path.times[-1]))
    keep = np.flatnonzero(on_grid | path.is_jump)
    dU = np.diff(Uc[keep])
    dL = np.diff(Lc[keep])
    jU = np.zeros(keep.size)
    jL = np.zeros(keep.size)
    jU[1:] = np.where(path.is_jump[keep[1:]], path.jU[keep[1:] - 1], 0.0)
    jL[1:] = np.where(path.is_jump[keep[1:]], path.jL[keep[1:] - 1], 0.0)
    V = np.empty(keep.size)
    Vm = np.empty(keep.size)
    v = spec.x0
    V[0] = Vm[0] = v
    for i in range(1, keep.size):
        v = v + v * dU[i - 1] + dL[i - 1]
        Vm[i] = v
        v = v * (1.0 + jU[i]) + jL[i]
        V[i] = v
    sub = SamplePath(path.times[keep], dU, dL, jU[1:], jL[1:], path.sigma2_U, path.sigma_UL,
                     path.seed, dt, V, Vm)
    sub.source_index = keep
    return sub


def simulate_path(spec: ProcessSpec, T: float, dt: float, seed: int, index: int = 0) -> SamplePath:
    return solve_V_explicit(spec, simulate_UL(spec.triplet, T, dt, seed, index))


def path_to_csv(path: SamplePath, fh) -> None:
    E = stoch_exp(path).values
    fh.write("t,U,L,V,E\n")
    for row in zip(path.times, path.U, path.L, path.V, E):
        fh.write(",".join(f"{v:.17g}" for v in row) + "\n")


# ---------------------------------------------------------------------------
# ensemble engine
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Flow:
    """Affine one-step maps of the GOU flow between jumps."""

    triplet: LevyTriplet2D
    h: float = 0.01

    @property
    def exact(self) -> bool:
        return self.triplet.sigma2_U == 0.0

    def pairs(self, rng, d: np.ndarray):
        """``(A, B)`` with ``V_{t+d} = A V_t + B`` for durations ``d``."""
        t = self.triplet
        aU, aL = t.actual_drift
        n = d.size
        if self.exact:
            A = np.exp(aU * d)
            B = aL * d * phi1(aU * d)
            if t.sigma2_L > 0:
                B = B + math.sqrt(t.sigma2_L) * np.sqrt(d * phi1(2 * aU * d)) * rng.standard_normal(n)
            return A, B
        z = rng.standard_normal((2, n)) * np.sqrt(d)
        c = t.chol
        dU = aU * d + c[0, 0] * z[0]
        dL = aL * d + c[1, 0] * z[0] + c[1, 1] * z[1]
        A = np.exp(dU - 0.5 * t.sigma2_U * d)
        return A, A * (dL - t.sigma_UL * d)

    def max_step(self) -> float:
        return math.inf if self.exact else self.h


def _advance(flow: Flow, rng, V, dur, P=None):
    """Advance ``V`` (or the functional pair ``(V, P)``) over durations ``dur``.

    Forward mode (``P is None``): ``V <- A V + B``.
    Functional mode: ``V <- V + P B``, ``P <- P A`` (reversed composition).
    """
    nu = flow.triplet.nu
    lam = nu.total_rate
    rem = np.array(dur, dtype=float)
    n = rem.size
    clock = rng.exponential(1.0 / lam, n) if lam > 0 else np.full(n, math.inf)
    hmax = flow.max_step()
    act = np.flatnonzero(rem > 0)
    while act.size:
        d = np.minimum(np.minimum(rem[act], clock[act]), hmax)
        A, B = flow.pairs(rng, d)
        if P is None:
            V[act] = A * V[act] + B
        else:
            # a divergent functional overflows; the caller has already warned
            with np.errstate(over="ignore", invalid="ignore"):
                V[act] += P[act] * B
                P[act] *= A
        rem[act] -= d
        clock[act] -= d
        jumped = act[(clock[act] <= 0) & (rem[act] > 0)]
        if jumped.size:
            z1, z2 = nu.sample_marks(rng, jumped.size)
            if P is None:
                V[jumped] = V[jumped] * (1.0 + z1) + z2
            else:
                # an overflowed mark times an underflowed weight stays 0
                with np.errstate(invalid="ignore"):
                    V[jumped] += np.where(P[jumped] == 0, 0.0, P[jumped] * z2)
                P[jumped] *= 1.0 + z1
            clock[jumped] = rng.exponential(1.0 / lam, jumped.size)
        act = act[rem[act] > 0]
        if P is not None:
            # weights that reached 0 cannot change the functional any more
            act = act[P[act] != 0]
    return V if P is None else (V, P)


def ensemble(spec: ProcessSpec, t_grid, n: int, seed: int, x0=None, h: float = 0.01,
             threads: int | None = None, tag: int = 1) -> np.ndarray:
    """Values of ``V_t`` at each ``t`` in ``t_grid`` for ``n`` paths.

    Returns an array of shape ``(len(t_grid), n)``.  ``x0`` may be a scalar
    or an array of starting values (one per path).
    """
    t_grid = np.asarray(t_grid, dtype=float)
    if np.any(np.diff(t_grid) < 0) or (t_grid.size and t_grid[0] < 0):
        raise ValueError("t_grid must be nonnegative and nondecreasing")
    flow = Flow(spec.triplet, h)
    start = spec.x0 if x0 is None else x0
    start = np.broadcast_to(np.asarray(start, dtype=float), (n,))

    def block(rng, size, first):
        V = start[first:first + size].copy()
        out = np.empty((t_grid.size, size))
        now = 0.0
        for k, t in enumerate(t_grid):
            if t > now:
                _advance(flow, rng, V, np.full(size, t - now))
                now = t
            out[k] = V
        return out

    parts = map_blocks(block, n, seed, threads, tag=tag)
    return np.concatenate(parts, axis=1) if parts else np.empty((t_grid.size, 0))


# ---------------------------------------------------------------------------
# stationary law
# ---------------------------------------------------------------------------

def levy_exponent_E(triplet: LevyTriplet2D, kappa: float) -> float:
    """``Psi(kappa)`` with ``E|E(U)_t|^kappa = exp(t Psi(kappa))``."""
    aU, _ = triplet.actual_drift
    s2 = triplet.sigma2_U
    nuU = marginal_nu_U(ProcessSpec(triplet))

    def g(z):
        return np.abs(1.0 + np.asarray(z, dtype=float)) ** kappa - 1.0

    def g_log(lv, lw):
        return np.exp(kappa * lv + lw) - np.exp(lw)

    jump = nuU.integrate(g, points=[-1.0], g_log=g_log)
    if not jump.finite:
        return math.inf
    return kappa * (aU - 0.5 * s2) + 0.5 * kappa * kappa * s2 + jump.value


@dataclass
class StationarySample:
    values: np.ndarray
    horizon: float | None
    tail_indicator: float
    warning: str | None = None


TAIL_TOL = 1e-4
KAPPAS = (1.0, 0.5, 0.25, 0.1, 0.05, 0.02)
MAX_HORIZON = 2000.0


def stationary_horizon(spec: ProcessSpec) -> tuple[float, float, str | None]:
    """Horizon ``T`` with ``E|E(U)_T|^k (1 + |x0|)^k < 1e-4``.

    The truncated remainder is ``E(U)_T Z'`` with ``Z'`` a copy of the full
    functional, so ``k`` must also be an order with ``E|Z'|^k < inf``: the
    first order in ``KAPPAS`` with a decaying exponent and a finite jump
    moment is used.
    """
    for kappa in KAPPAS:
        psi = levy_exponent_E(spec.triplet, kappa)
        if psi < 0 and moment_check(spec, AbsPow(kappa)).holds:
            T = (math.log(TAIL_TOL) - kappa * math.log1p(abs(spec.x0))) / psi
            T = max(T, 1.0)
            if T > MAX_HORIZON:
                ind = math.exp(MAX_HORIZON * psi) * (1 + abs(spec.x0)) ** kappa
                return MAX_HORIZON, ind, f"horizon capped at {MAX_HORIZON:g}; tail indicator {ind:.3g}"
            return T, TAIL_TOL, None
    if levy_exponent_E(spec.triplet, KAPPAS[-1]) < 0:
        return MAX_HORIZON, math.nan, "no finite fractional jump moment; horizon capped"
    return MAX_HORIZON, math.inf, "stochastic exponential does not contract; stationary law may not exist"


def restart_parts(spec: ProcessSpec) -> tuple[ProcessSpec, JumpMeasure]:
    """The process run between restarts and the law of the restart values.

    Dropping the ``dU = -1`` atoms changes the compensator, so ``gamma``
    is adjusted to keep the drift applied between jumps unchanged.
    """
    nu = spec.nu
    minus1 = tuple(a for a in nu.atoms if a.z1 == -1.0)
    rest = JumpMeasure(tuple(a for a in nu.atoms if a.z1 != -1.0), nu.components)
    aU, aL = spec.triplet.actual_drift
    t = spec.triplet
    base = LevyTriplet2D(0.0, 0.0, t.sigma2_U, t.sigma_UL, t.sigma2_L, rest)
    c1, c2 = base.compensator
    tilde = LevyTriplet2D(aU + c1.value, aL + c2.value, t.sigma2_U, t.sigma_UL, t.sigma2_L, rest)
    return ProcessSpec(tilde, 0.0), JumpMeasure(minus1)


def sample_stationary(spec: ProcessSpec, n: int, seed: int, T: float | None = None, h: float = 0.01,
                      threads: int | None = None) -> StationarySample:
    """``n`` draws approximating the invariant law.

    Restart case: ``V~`` started at a restart value and run for an
    independent ``Exp(lambda)`` time.  Otherwise the exponential functional
    ``∫_0^T E(U)_{s-} dL``-type sum of the reversed one-step maps.
    """
    if spec.is_restart:
        tilde, restarts = restart_parts(spec)
        lam = spec.lambda_minus1
        flow = Flow(tilde.triplet, h)

        def block(rng, size, first):
            _, x = restarts.sample_marks(rng, size)
            dur = rng.exponential(1.0 / lam, size)
            return _advance(flow, rng, x, dur)

        vals = np.concatenate(map_blocks(block, n, seed, threads, tag=2))
        return StationarySample(vals, None, 0.0)

    warn = None
    if T is None:
        T, ind, warn = stationary_horizon(spec)
    else:
        psi = levy_exponent_E(spec.triplet, 1.0)
        ind = math.exp(T * psi) * (1 + abs(spec.x0)) if psi < math.inf else math.inf
        if ind > TAIL_TOL:
            warn = f"horizon {T:g} leaves tail indicator {ind:.3g}"
    if warn:
        warnings.warn(warn, RuntimeWarning, stacklevel=2)
    flow = Flow(spec.triplet, h)

    def block(rng, size, first):
        Z, P = _advance(flow, rng, np.zeros(size), np.full(size, T), np.ones(size))
        return Z

    vals = np.concatenate(map_blocks(block, n, seed, threads, tag=3))
    return StationarySample(vals, T, ind, warn)
