"""Command line interface: ``gou-ergo <command>``.

Every command writes its outputs plus ``<command>.record.json`` into
``--out-dir``.  The record holds the full parameter set (including the spec
document itself), the seed and a sha256 manifest of the outputs, so
``gou-ergo --replay record.json`` can rerun the command and compare bytes.

Exit codes: 0 success, 2 invalid spec or arguments, 3 numerical divergence
diagnostic, 4 replay mismatch.
"""

from __future__ import annotations

import hashlib
import json
import math
import sys
import tempfile
import time
import warnings
from dataclasses import asdict, dataclass, field
from pathlib import Path

import click
import numpy as np

from . import __version__
from .classifier import BETA_GRID, classify, rate_bound
from .fixtures import FIXTURE_DOCS
from .generator import drift_scan, log_grid
from .levy_model import ProcessSpec, spec_errors, spec_from_dict
from .lyapunov import parse_lyapunov
from .mcdiag import FitRefused, decay_curve, fit_curve, select_curve
from .pathsim import path_to_csv, simulate_path, stationary_horizon
from .rng import ENV_THREADS

EXIT_OK, EXIT_INVALID, EXIT_DIVERGENT, EXIT_REPLAY = 0, 2, 3, 4


class CommandExit(Exception):
    def __init__(self, code: int, message: str = ""):
        super().__init__(message)
        self.code = code


@dataclass
class RunRecord:
    command: str
    params: dict
    seed: int
    spec_hash: str | None
    outputs: dict = field(default_factory=dict)      # file name -> sha256
    exit_code: int = 0
    version: str = __version__
    wall_clock: float = 0.0

    def write(self, path: Path) -> None:
        path.write_text(json.dumps(asdict(self), indent=2, sort_keys=True) + "\n")

    @classmethod
    def read(cls, path) -> "RunRecord":
        return cls(**json.loads(Path(path).read_text()))


def fmt(v) -> str:
    return f"{float(v):.17g}"


def _plain(obj):
    """Convert numpy scalars/arrays so ``json`` can serialise them."""
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_plain(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating, float)):
        f = float(obj)
        return f if math.isfinite(f) else str(f)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def dump_json(obj) -> str:
    # repr of a float is its shortest round-trip form: replay-exact
    return json.dumps(_plain(obj), indent=2, sort_keys=True) + "\n"


def write_csv(path: Path, header: str, rows) -> None:
    with path.open("w", newline="") as fh:
        fh.write(header + "\n")
        for r in rows:
            fh.write(",".join(fmt(v) for v in r) + "\n")


def _sha(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


# ---------------------------------------------------------------------------
# commands: each takes (params, out_dir, threads) and returns (outputs, exit code)
# ---------------------------------------------------------------------------

def _spec(params) -> ProcessSpec:
    doc = params["spec"]
    errs = spec_errors(doc)
    if errs:
        raise CommandExit(EXIT_INVALID, "invalid spec:\n  " + "\n  ".join(errs))
    spec = spec_from_dict(doc)
    if params.get("x0") is not None:
        spec = spec.with_x0(params["x0"])
    return spec


def run_validate(p, out: Path, threads):
    errs = spec_errors(p["spec"])
    summary = {"valid": not errs, "errors": errs}
    if not errs:
        spec = spec_from_dict(p["spec"])
        summary.update(spec_hash=spec.spec_hash(), lambda_minus1=spec.lambda_minus1,
                       total_rate=spec.nu.total_rate)
    (out / "validate.json").write_text(dump_json(summary))
    if errs:
        click.echo("invalid spec:\n  " + "\n  ".join(errs), err=True)
        return ["validate.json"], EXIT_INVALID
    click.echo("ok")
    return ["validate.json"], EXIT_OK


def run_simulate(p, out: Path, threads):
    spec = _spec(p)
    names = []
    for i in range(p["paths"]):
        path = simulate_path(spec, p["horizon"], p["dt"], p["seed"], i)
        name = f"path_{i:04d}.csv"
        with (out / name).open("w", newline="") as fh:
            path_to_csv(path, fh)
        names.append(name)
    meta = {"seed": p["seed"], "dt": p["dt"], "horizon": p["horizon"], "paths": p["paths"],
            "spec_hash": spec.spec_hash(), "files": names}
    (out / "simulate.json").write_text(dump_json(meta))
    click.echo(f"wrote {len(names)} path(s)")
    return names + ["simulate.json"], EXIT_OK


def run_generator(p, out: Path, threads):
    spec = _spec(p)
    f = parse_lyapunov(p["f"])
    grid = log_grid(p["xmin"], p["xmax"], p["points"], both_signs=p["both_signs"])
    scan = drift_scan(spec, f, grid)
    write_csv(out / "generator.csv", "x,Af,err", scan.rows())
    summary = {"f": f.spec_string(), "condition": scan.condition, "satisfied": scan.satisfied,
               "c_hat": scan.c_hat, "d_hat": scan.d_hat, "far": scan.far, "witness": scan.witness,
               "asymptote": {"coefficient": scan.asymptote[0], "reference": scan.asymptote[1]},
               "status": sorted(set(scan.status))}
    (out / "generator.json").write_text(dump_json(summary))
    bad = [s for s in scan.status if s not in ("converged", "maxiter")]
    click.echo(f"{scan.condition} {'satisfied' if scan.satisfied else 'violated'}  c_hat={scan.c_hat:.6g}")
    if bad:
        click.echo(f"quadrature did not converge at {len(bad)} point(s): {sorted(set(bad))}", err=True)
        return ["generator.csv", "generator.json"], EXIT_DIVERGENT
    return ["generator.csv", "generator.json"], EXIT_OK


def _unresolved(report) -> bool:
    # "divergent" moments are answers; unresolved tails are not
    return report.verdict == "Inconclusive" and any(
        ("not resolved" in c.note or "undetermined" in c.note) for c in report.checklist)


def run_classify(p, out: Path, threads):
    spec = _spec(p)
    report = classify(spec, betas=tuple(p["beta_grid"]))
    doc = report.to_dict()
    doc["spec_hash"] = spec.spec_hash()
    names = ["classify.json"]
    (out / "classify.json").write_text(dump_json(doc))
    if p.get("json"):
        Path(p["json"]).write_text(dump_json(doc))
    click.echo(report.label() + (f"  (blocked by {report.blocking})" if report.blocking else ""))
    return names, EXIT_DIVERGENT if _unresolved(report) else EXIT_OK


def run_decay(p, out: Path, threads):
    spec = _spec(p)
    _, indicator, _ = stationary_horizon(spec)
    if not spec.is_restart and indicator == math.inf:
        raise CommandExit(EXIT_DIVERGENT, "stochastic exponential does not contract: no stationary law to compare with")
    t_grid = np.arange(0.0, p["tmax"] + 0.5 * p["tstep"], p["tstep"])
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        curve = decay_curve(spec, spec.x0, t_grid, p["paths"], p["seed"], n_pi=p["n_pi"],
                            n_bins=p["bins"], n_boot=p["boot"], threads=threads)
    write_csv(out / "decay.csv", "t,dist,lo,hi", curve.rows())
    report = classify(spec)
    fits = {}
    for fam in ("exp", "poly", "almostexp"):
        try:
            fits[fam] = asdict(fit_curve(curve, fam))
        except FitRefused as e:
            fits[fam] = {"refused": str(e)}
    try:
        sel = select_curve(curve)
        selection = {"best": sel.best, "rejected": list(sel.rejected)}
    except FitRefused as e:
        selection = {"refused": str(e)}
    summary = {"verdict": report.label(), "flag": curve.flag, "n_paths": curve.n_paths, "n_bins": curve.n_bins,
               "noise_floor": curve.floor, "fits": fits, "selection": selection, "seed": p["seed"]}
    if report.positive and report.rate is not None:
        summary["bound_shape"] = {"tag": report.rate.tag, "params": report.rate.params,
                                  "heuristic": report.rate.heuristic,
                                  "values": rate_bound(report, t_grid)}
    (out / "decay.json").write_text(dump_json(summary))
    click.echo(f"{t_grid.size} grid points; best fit {selection.get('best', 'none')}")
    return ["decay.csv", "decay.json"], EXIT_OK


def run_fixtures(p, out: Path, threads):
    rows = {}
    names = []
    for name, doc in FIXTURE_DOCS.items():
        spec = spec_from_dict(doc)
        rows[name] = {"label": classify(spec).label(), "spec_hash": spec.spec_hash()}
        if p["write"]:
            fn = f"{name}.json"
            (out / fn).write_text(dump_json(doc))
            names.append(fn)
        click.echo(f"{name:24s} {rows[name]['label']}")
    (out / "fixtures.json").write_text(dump_json(rows))
    return names + ["fixtures.json"], EXIT_OK


COMMANDS = {"validate": run_validate, "simulate": run_simulate, "generator": run_generator,
            "classify": run_classify, "decay": run_decay, "fixtures": run_fixtures}


def execute(command: str, params: dict, out_dir: Path, threads) -> RunRecord:
    out_dir.mkdir(parents=True, exist_ok=True)
    t0 = time.perf_counter()
    try:
        names, code = COMMANDS[command](params, out_dir, threads)
    except CommandExit as e:
        click.echo(str(e), err=True)
        names, code = [], e.code
    spec_hash = None
    if "spec" in params and not spec_errors(params["spec"]):
        spec_hash = spec_from_dict(params["spec"]).spec_hash()
    rec = RunRecord(command, params, params.get("seed", 0), spec_hash,
                    {n: _sha(out_dir / n) for n in names}, code, wall_clock=time.perf_counter() - t0)
    rec.write(out_dir / f"{command}.record.json")
    return rec


def replay(record_path, threads) -> int:
    rec = RunRecord.read(record_path)
    with tempfile.TemporaryDirectory() as tmp:
        new = execute(rec.command, rec.params, Path(tmp), threads)
        diffs = [n for n in rec.outputs if new.outputs.get(n) != rec.outputs[n]]
        diffs += [n for n in new.outputs if n not in rec.outputs]
    if diffs or new.exit_code != rec.exit_code:
        click.echo(f"replay mismatch: {', '.join(diffs) or 'exit code'}", err=True)
        return EXIT_REPLAY
    click.echo(f"replay ok: {len(rec.outputs)} output(s) byte-identical")
    return EXIT_OK


# ---------------------------------------------------------------------------
# click wiring
# ---------------------------------------------------------------------------

def _load_spec_doc(spec_path, fixture_name) -> dict:
    if fixture_name:
        if fixture_name not in FIXTURE_DOCS:
            raise click.BadParameter(f"unknown fixture {fixture_name!r}", param_hint="--fixture")
        return dict(FIXTURE_DOCS[fixture_name])
    if not spec_path:
        raise click.UsageError("one of --spec or --fixture is required")
    try:
        return json.loads(Path(spec_path).read_text())
    except json.JSONDecodeError as e:
        raise CommandExit(EXIT_INVALID, f"spec is not valid JSON: {e}") from None


def spec_options(fn):
    fn = click.option("--fixture", "fixture_name", help="Use a named fixture instead of --spec.")(fn)
    fn = click.option("--spec", "spec_path", type=click.Path(exists=True, dir_okay=False),
                      help="Spec JSON file.")(fn)
    return fn


def _dispatch(ctx, command, **params):
    obj = ctx.obj
    params["seed"] = obj["seed"]
    if "spec_path" in params:
        try:
            params["spec"] = _load_spec_doc(params.pop("spec_path"), params.pop("fixture_name"))
        except CommandExit as e:
            click.echo(str(e), err=True)
            ctx.exit(e.code)
    rec = execute(command, params, Path(obj["out_dir"]), obj["threads"])
    ctx.exit(rec.exit_code)


@click.group(invoke_without_command=True)
@click.option("--seed", type=int, default=0, show_default=True, help="Master seed.")
@click.option("--threads", type=int, default=None,
              help=f"Worker threads (default ${ENV_THREADS}, then all cores).")
@click.option("--out-dir", type=click.Path(file_okay=False), default=".", show_default=True)
@click.option("--replay", "replay_path", type=click.Path(exists=True, dir_okay=False),
              help="Rerun a RunRecord and compare outputs byte for byte.")
@click.version_option(__version__)
@click.pass_context
def main(ctx, seed, threads, out_dir, replay_path):
    """Simulate generalized Ornstein-Uhlenbeck processes and classify their ergodicity."""
    ctx.obj = {"seed": seed, "threads": threads, "out_dir": out_dir}
    if replay_path:
        ctx.exit(replay(replay_path, threads))
    if ctx.invoked_subcommand is None:
        click.echo(ctx.get_help())


@main.command()
@spec_options
@click.pass_context
def validate(ctx, **kw):
    """Check a spec document and list every problem."""
    _dispatch(ctx, "validate", **kw)


@main.command()
@spec_options
@click.option("--horizon", type=float, default=5.0, show_default=True)
@click.option("--dt", type=float, default=1e-3, show_default=True)
@click.option("--paths", type=int, default=1, show_default=True)
@click.option("--x0", type=float, default=None, help="Override the spec's x0.")
@click.pass_context
def simulate(ctx, **kw):
    """Write sample paths as CSV (t,U,L,V,E)."""
    _dispatch(ctx, "simulate", **kw)


@main.command()
@spec_options
@click.option("--f", "f", default="log", show_default=True, help="log | logpow:a | explogpow:g,a | abspow:b")
@click.option("--xmin", type=float, default=10.0, show_default=True)
@click.option("--xmax", type=float, default=1e5, show_default=True)
@click.option("--points", type=int, default=40, show_default=True)
@click.option("--both-signs/--positive-only", default=True, show_default=True)
@click.pass_context
def generator(ctx, **kw):
    """Evaluate A f on a log grid and test the matching drift condition."""
    _dispatch(ctx, "generator", **kw)


def _beta_grid(ctx, param, value):
    if value is None:
        return list(BETA_GRID)
    try:
        grid = [float(v) for v in value.split(",") if v.strip()]
    except ValueError:
        raise click.BadParameter("comma separated numbers expected") from None
    if not grid or any(not 0 < b <= 1 for b in grid):
        raise click.BadParameter("each beta must lie in (0, 1]")
    return sorted(grid, reverse=True)


@main.command("classify")
@spec_options
@click.option("--beta-grid", callback=_beta_grid, default=None, help="Comma separated betas in (0, 1].")
@click.option("--json", "json", type=click.Path(dir_okay=False), default=None,
              help="Also write the report to this path.")
@click.pass_context
def classify_cmd(ctx, **kw):
    """Classify the ergodicity regime."""
    _dispatch(ctx, "classify", **kw)


@main.command()
@spec_options
@click.option("--x0", type=float, default=None, help="Override the spec's x0.")
@click.option("--tmax", type=float, default=20.0, show_default=True)
@click.option("--tstep", type=float, default=1.0, show_default=True)
@click.option("--paths", type=int, default=100000, show_default=True)
@click.option("--n-pi", type=int, default=None, help="Stationary sample size (default --paths).")
@click.option("--bins", type=int, default=None, help="Histogram bins (default 2 n^(1/3)).")
@click.option("--boot", type=int, default=200, show_default=True)
@click.pass_context
def decay(ctx, **kw):
    """Distance-to-stationarity curve with rate fits."""
    _dispatch(ctx, "decay", **kw)


@main.command()
@click.option("--write/--no-write", default=False, help="Also write each fixture as a spec file.")
@click.pass_context
def fixtures(ctx, **kw):
    """List the built-in fixtures and their verdicts."""
    _dispatch(ctx, "fixtures", **kw)


if __name__ == "__main__":
    sys.exit(main())
