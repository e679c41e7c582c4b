"""Named process specs for the special cases of the theory."""

from __future__ import annotations

from .levy_model import SPEC_VERSION, ProcessSpec, spec_from_dict


def _doc(**kw) -> dict:
    d = {"spec_version": SPEC_VERSION, "gamma_U": 0.0, "gamma_L": 0.0, "sigma2_U": 0.0,
         "sigma_UL": 0.0, "sigma2_L": 0.0, "x0": 10.0, "atoms": [], "components": []}
    d.update(kw)
    return d


FIXTURE_DOCS = {
    # U = -t, L Brownian: pi = N(0, 1/2)
    "classical-ou": _doc(gamma_U=-1.0, sigma2_L=1.0),
    # compound Poisson OU with Pareto(0.4) jumps: only |z|^b moments with b < 0.4
    "levy-ou-pareto-heavy": _doc(gamma_U=-1.0, components=[
        {"weight": 1.0, "family": "pareto_z2", "params": {"theta": 0.4}}]),
    # jumps exp(Y), Y Pareto(2.5): (log z)^a moments only for a < 2.5
    "levy-ou-loglaw": _doc(gamma_U=-1.0, components=[
        {"weight": 1.0, "family": "logpareto_z2", "params": {"index": 2.5}}]),
    "restart-lambda05": _doc(gamma_U=-1.0, gamma_L=1.0, sigma2_L=1.0, atoms=[[-1.0, 0.0, 0.5]]),
    "diffusion-recurrent": _doc(sigma2_U=1.0, sigma2_L=1.0),
    "diffusion-nonrecurrent": _doc(gamma_U=1.0, sigma2_U=1.0, sigma2_L=1.0),
    "bivariate-atom-mix": _doc(
        gamma_U=-0.5, gamma_L=0.2, sigma2_U=0.04, sigma_UL=0.02, sigma2_L=0.25, x0=5.0,
        atoms=[[0.3, 2.0, 0.5], [-0.4, -1.0, 0.8], [0.5, 0.5, 0.3]],
        components=[{"weight": 0.5, "family": "uniform_rect",
                     "params": {"a1": -0.5, "b1": 0.2, "a2": -1.0, "b2": 1.0}}]),
    # E X^a = inf for every a > 0 but E log X < inf: not exponentially ergodic
    "fort-roberts-neg": _doc(gamma_U=-1.0, components=[
        {"weight": 1.0, "family": "logpareto_z2", "params": {"index": 2.0}}]),
}


def fixtures() -> dict[str, ProcessSpec]:
    return {name: spec_from_dict(d) for name, d in FIXTURE_DOCS.items()}


def fixture(name: str) -> ProcessSpec:
    try:
        return spec_from_dict(FIXTURE_DOCS[name])
    except KeyError:
        raise KeyError(f"unknown fixture {name!r}; known: {', '.join(FIXTURE_DOCS)}") from None
