"""Independent reference values used by the test suite.

Each value is computed here with mpmath/scipy directly from its defining
integral, without importing gou_ergo, and then frozen into the tests.
Run: python3 scripts/oracles.py
"""

import mpmath as mp
import numpy as np
from scipy import integrate, stats

mp.mp.dps = 30


def uniform_log_integral():
    # ∫_{-1/2}^{1/2} (log|1+z| - z) dz for a Unif[-1/2, 1/2] jump density of mass 1
    return mp.quad(lambda z: mp.log(1 + z) - z, [-0.5, 0.5])


def pareto_log_moment(theta=0.5):
    return mp.quad(lambda z: mp.log(z) * theta * z ** (-1 - theta), [1, mp.inf])


def logpareto_log_moment(index=2.5, a=2.0):
    # v = exp(Y), Y ~ Pareto(index, 1): E (log v)^a = E Y^a
    return mp.quad(lambda y: y ** a * index * y ** (-index - 1), [1, mp.inf])


def atom_beta_integral(a=0.5, m=1.0, beta=0.5):
    return m * (abs(1 + a) ** beta - 1 - beta * a * (abs(a) <= 1)) / beta


def atom_log_integral(a=1.0, m=1.0):
    return m * (mp.log(2) - 1) if a == 1.0 else m * (mp.log(abs(1 + a)) - a * (abs(a) <= 1))


def ou_l1(t, x0=10.0, mu=1.0, s2=1.0):
    """L1 distance between N(x0 e^{-mu t}, s2(1-e^{-2 mu t})/(2mu)) and N(0, s2/(2mu))."""
    var_inf = s2 / (2 * mu)
    var_t = var_inf * (1 - np.exp(-2 * mu * t))
    m = x0 * np.exp(-mu * t)
    if var_t == 0:
        return 2.0
    p = stats.norm(m, np.sqrt(var_t)).pdf
    q = stats.norm(0, np.sqrt(var_inf)).pdf
    lo, hi = min(m, 0) - 12, max(m, 0) + 12
    return integrate.quad(lambda x: abs(p(x) - q(x)), lo, hi, points=[0, m], limit=400)[0]


def restart_drift_only_mean(c=1.0, lam=0.5):
    # V~ grows like c t between restarts at 0; pi is c * Exp(lam)
    return c / lam


if __name__ == "__main__":
    print("uniform log integral", mp.nstr(uniform_log_integral(), 17))
    print("  closed form 1.5 log1.5 - 0.5 log0.5 - 1 =",
          mp.nstr(1.5 * mp.log(1.5) - 0.5 * mp.log(0.5) - 1, 17))
    print("pareto(0.5) log moment", mp.nstr(pareto_log_moment(), 17))
    print("logpareto(2.5) (log z)^2 moment", mp.nstr(logpareto_log_moment(), 17))
    print("atom beta integral a=.5 m=1 b=.5", repr(atom_beta_integral()))
    print("atom log integral a=1 m=1", mp.nstr(atom_log_integral(), 17))
    for t in range(0, 9):
        print(f"ou L1 t={t}", repr(ou_l1(float(t))))
    print("restart drift-only mean", restart_drift_only_mean())
