"""Distance-to-stationarity curve and rate fits for one fixture.

Usage: python3 scripts/decay_demo.py [fixture] [--paths N] [--tmax T]
"""

import argparse
import warnings

import numpy as np

from gou_ergo import classify, fixture
from gou_ergo.mcdiag import FitRefused, decay_curve, select_curve


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("name", nargs="?", default="classical-ou")
    ap.add_argument("--paths", type=int, default=20_000)
    ap.add_argument("--tmax", type=float, default=12.0)
    ap.add_argument("--seed", type=int, default=0)
    a = ap.parse_args()

    spec = fixture(a.name)
    print(f"{a.name}: {classify(spec).label()}")
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        c = decay_curve(spec, spec.x0, np.arange(0, a.tmax + 0.25, 0.5), a.paths, a.seed)
    print(f"{'t':>5} {'dist':>8} {'lo':>8} {'hi':>8} {'floor':>8}")
    for (t, d, lo, hi), fl in zip(c.rows(), np.broadcast_to(c.floor, c.t_grid.shape)):
        print(f"{t:5.1f} {d:8.4f} {lo:8.4f} {hi:8.4f} {fl:8.4f}")
    try:
        sel = select_curve(c)
    except FitRefused as e:
        print("no fit:", e)
        return
    for fam, fit in sel.fits.items():
        mark = "best" if fam == sel.best else ("rejected" if fam in sel.rejected else "")
        params = ", ".join(f"{k}={v:.3g}" for k, v in fit.params.items())
        print(f"{fam:10s} AIC {fit.aic:8.1f}  {params}  {mark}")


if __name__ == "__main__":
    main()
