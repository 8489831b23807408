"""Command-line runner: `mohardy norm|decompose|factorize|divcurl|suite|fixture|schema`."""

from __future__ import annotations

import csv
import functools
import hashlib
import json
import math
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import click
import numpy as np
from pydantic import ValidationError

from . import constants
from .atoms import closed_atomic_decompose
from .bmo import bmo_report
from .config import ExperimentConfig, GridConfig, load_config, schema
from .errors import DomainError, GridMismatchError, NotClosedError, SolverError, SupportError
from .factorize import divcurl_check, scalar_weak_factorize, weak_factorize
from .fixtures import FIXTURE_KINDS, closed_field, generate_fixture
from .grid_forms import DiscreteForm, read_dff
from .growth import from_name, luxembourg_norm
from .maximal import h1_norm, hardy_norm, hlog_norm, mollifier_from_name
from .suite import divcurl_pair, run_suite

EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2, 3
NUMERIC_ERRORS = (DomainError, GridMismatchError, NotClosedError, SolverError, SupportError)


def frozen_constants() -> dict:
    return {k: getattr(constants, k) for k in sorted(dir(constants)) if k.isupper()}


def _dump(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True)


def _digest(form: DiscreteForm) -> str:
    return hashlib.sha256(np.ascontiguousarray(form.components, dtype="<f8").tobytes()).hexdigest()


def _config_error(exc) -> None:
    if isinstance(exc, ValidationError):
        for err in exc.errors():
            path = ".".join(str(p) for p in err["loc"]) or "<root>"
            click.echo(f"config error at {path}: {err['msg']}", err=True)
    else:
        click.echo(f"config error: {exc}", err=True)
    sys.exit(EXIT_CONFIG)


def common_options(fn):
    @click.option("--config", "config_path", type=click.Path(dir_okay=False), default=None,
                  help="JSON experiment config.")
    @click.option("--seed", type=int, default=None, help="64-bit seed.")
    @click.option("--out", type=click.Path(file_okay=False), default="out", show_default=True,
                  help="Output directory.")
    @click.option("--grid", "grid_spec", default=None, help="Grid as n,N,L.")
    @click.option("--growth", default=None, help="Growth function: theta, power:p or power_weight:p:alpha.")
    @click.option("--jobs", type=int, default=None, help="Worker threads.")
    @functools.wraps(fn)
    def wrapper(config_path, seed, out, grid_spec, growth, jobs, **kwargs):
        try:
            overrides = {"seed": seed, "growth": growth, "jobs": jobs}
            if grid_spec is not None:
                overrides["grid"] = GridConfig.parse(grid_spec).model_dump()
            cfg = load_config(config_path, overrides)
        except (ValidationError, ValueError, OSError) as exc:
            _config_error(exc)
        out_dir = Path(out)
        out_dir.mkdir(parents=True, exist_ok=True)
        start = time.perf_counter()
        try:
            report, timings, ok = fn(cfg, out_dir, **kwargs)
        except NUMERIC_ERRORS as exc:
            click.echo(f"numeric error ({type(exc).__name__}): {exc}", err=True)
            sys.exit(EXIT_NUMERIC)
        timings["total_seconds"] = time.perf_counter() - start
        (out_dir / "report.json").write_text(_dump(report))
        (out_dir / "timings.json").write_text(_dump(timings))
        click.echo(f"report written to {out_dir / 'report.json'}")
        sys.exit(EXIT_OK if ok else EXIT_FAIL)

    return wrapper


def _load_input(path: str | None, cfg: ExperimentConfig, degree: int | None) -> tuple:
    grid = cfg.grid.build()
    if path is not None:
        try:
            f = read_dff(path)
        except OSError as exc:
            _config_error(exc)
        return f, {"input": str(path), "sha256": _digest(f)}
    degree = grid.n if degree is None else degree
    f = closed_field(grid, np.random.default_rng(cfg.seed), degree)
    return f, {"input": f"closed_field(degree={degree})", "sha256": _digest(f)}


def _mapper(jobs: int):
    if jobs <= 1:
        return map, None
    pool = ThreadPoolExecutor(max_workers=jobs)
    return pool.map, pool


@click.group()
@click.version_option(package_name="mohardy")
def main():
    """Musielak-Orlicz Hardy spaces of differential forms on a periodic grid."""


@main.command()
@click.argument("input_path", required=False, type=click.Path(exists=True, dir_okay=False))
@common_options
def norm(cfg: ExperimentConfig, out: Path, input_path=None):
    """Luxembourg, Hardy and BMO norms of a .dff field."""
    path = input_path or cfg.norm.input
    if path is None:
        _config_error(ValueError("norm needs an input .dff (argument or norm.input)"))
    f, meta = _load_input(path, cfg, None)
    gf = from_name(cfg.growth, f.grid.n)
    m = mollifier_from_name(cfg.mollifier)
    tol = cfg.tolerances.luxembourg
    t0 = time.perf_counter()
    bmo = bmo_report(f, gf, cfg.norm.q_prime)
    metrics = {
        "luxembourg": luxembourg_norm(gf, f, f.grid, tol),
        "hardy": hardy_norm(gf, f, m, tol),
        "hlog": hlog_norm(f, m, tol),
        "h1": h1_norm(f, m),
        "bmo": bmo.as_dict(),
    }
    report = {"command": "norm", "config": cfg.echo(), "grid": f.grid.spec(), "degree": f.degree, **meta,
              "metrics": metrics}
    for k in ("luxembourg", "hardy", "hlog", "h1"):
        click.echo(f"{k:>10}: {metrics[k]:.6g}")
    click.echo(f"{'bmo_plus':>10}: {bmo.bmo_plus:.6g}")
    return report, {"norms_seconds": time.perf_counter() - t0}, True


@main.command()
@click.argument("input_path", required=False, type=click.Path(exists=True, dir_okay=False))
@common_options
def decompose(cfg: ExperimentConfig, out: Path, input_path=None):
    """Closed atomic decomposition of a closed form; writes out/decomposition/."""
    f, meta = _load_input(input_path or cfg.decompose.input, cfg, cfg.decompose.degree)
    gf = from_name(cfg.growth, f.grid.n)
    t0 = time.perf_counter()
    dec = closed_atomic_decompose(f, gf, closed_tol=cfg.tolerances.closed)
    seconds = time.perf_counter() - t0
    dec.save(out / "decomposition")
    manifest = dec.manifest()
    valid = all(a["validation"] is None or a["validation"]["passed"] for a in manifest["atoms"])
    summary = {k: v for k, v in manifest.items() if k != "atoms"}
    summary["atom_count"] = len(dec.atoms)
    summary["all_atoms_valid"] = valid
    report = {"command": "decompose", "config": cfg.echo(), **meta, "decomposition": summary}
    click.echo(f"{len(dec.atoms)} atoms, reconstruction error {dec.reconstruction_error:.3e}, "
               f"N_q {dec.nq_value:.6g}")
    return report, {"decompose_seconds": seconds}, valid and dec.reconstruction_error <= 1e-3


@main.command()
@click.argument("input_path", required=False, type=click.Path(exists=True, dir_okay=False))
@click.option("--ell", type=int, default=None, help="Degree of the H¹ factor (default: degree - 1).")
@click.option("--scalar/--no-scalar", default=None, help="Scalar div-curl factorization of a top-degree form.")
@common_options
def factorize(cfg: ExperimentConfig, out: Path, input_path=None, ell=None, scalar=None):
    """Weak factorization f = Σ u_k∧v_k with the norm-sum certificate; writes out/factorization/."""
    f, meta = _load_input(input_path or cfg.factorize.input, cfg, None)
    ell = cfg.factorize.ell if ell is None else ell
    scalar = cfg.factorize.scalar if scalar is None else scalar
    bound = constants.FACTOR_RATIO_C
    mapper, pool = _mapper(cfg.jobs)
    t0 = time.perf_counter()
    try:
        if scalar:
            if f.degree != f.grid.n:
                raise DomainError("--scalar needs a top-degree input")
            sf = scalar_weak_factorize(f, mapper=mapper)
            fac = sf.factorization
            extra = {"scalar_reconstruction_error": sf.reconstruction_error, "div_residual": sf.div_residual,
                     "curl_residual": sf.curl_residual, "max_products_per_atom": sf.max_products_per_atom}
        else:
            fac = weak_factorize(f, f.degree - 1 if ell is None else ell, closed_tol=cfg.tolerances.closed,
                                 mapper=mapper)
            extra = {}
    finally:
        if pool is not None:
            pool.shutdown()
    seconds = time.perf_counter() - t0
    fac.save(out / "factorization", bound)
    cert = fac.certificate(bound)
    cert.pop("pairs")
    report = {"command": "factorize", "config": cfg.echo(), **meta, "certificate": {**cert, **extra}}
    ok = fac.reconstruction_error <= 1e-3 and fac.ratio <= bound
    click.echo(f"{len(fac.pairs)} pairs, reconstruction error {fac.reconstruction_error:.3e}, "
               f"norm-sum/hlog {fac.ratio:.4g} (bound {bound:g})")
    return report, {"factorize_seconds": seconds}, ok


@main.command()
@common_options
def divcurl(cfg: ExperimentConfig, out: Path):
    """Monte-Carlo sweep of hlog(u∧v)/(‖u‖_{H¹}‖v‖_{BMO⁺}) over random closed pairs."""
    grid = cfg.grid.build()
    count = cfg.divcurl.pairs
    seeds = [int(s.generate_state(1)[0]) for s in np.random.SeedSequence([cfg.seed, 7]).spawn(count)]
    mapper, pool = _mapper(cfg.jobs)
    t0 = time.perf_counter()
    try:
        rows = list(mapper(lambda s: divcurl_check(*divcurl_pair(grid, s)).as_dict(), seeds))
    finally:
        if pool is not None:
            pool.shutdown()
    ratios = [r["ratio"] for r in rows]
    bound = constants.DIVCURL_RATIO_C
    max_ratio = max(ratios)
    ok = all(math.isfinite(x) for x in ratios) and max_ratio <= bound
    with open(out / "divcurl.csv", "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=["seed"] + list(rows[0]))
        writer.writeheader()
        for s, r in zip(seeds, rows):
            writer.writerow({"seed": s, **r})
    report = {"command": "divcurl", "config": cfg.echo(), "pairs": rows, "seeds": seeds,
              "max_ratio": max_ratio, "bound": bound, "within_bound": ok}
    click.echo(f"{count} pairs, max ratio {max_ratio:.4g} (bound {bound:g})")
    return report, {"divcurl_seconds": time.perf_counter() - t0}, ok


@main.command()
@common_options
def suite(cfg: ExperimentConfig, out: Path):
    """Run the acceptance battery and print one line per criterion."""
    grid = cfg.grid.build()
    results = run_suite(grid, cfg.seed, cfg.suite.counts(), jobs=cfg.jobs, select=tuple(cfg.suite.criteria),
                        progress=lambda r: click.echo(r.summary()))
    passed = all(r.passed for r in results)
    runtime_ok = all(r.runtime_ok for r in results)
    report = {
        "command": "suite",
        "config": cfg.echo(),
        "criteria": [r.as_dict() for r in results],
        "constants": frozen_constants(),
        "passed": passed,
    }
    timings = {"criteria": {str(r.number): {"seconds": r.seconds, "runtime_ok": r.runtime_ok} for r in results}}
    click.echo(f"suite: {'PASS' if passed and runtime_ok else 'FAIL'} "
               f"({sum(r.passed and r.runtime_ok for r in results)}/{len(results)} criteria)")
    return report, timings, passed and runtime_ok


@main.command()
@click.argument("kind", type=click.Choice(FIXTURE_KINDS))
@click.option("--param", "params", multiple=True, help="Fixture parameter key=value (repeatable).")
@common_options
def fixture(cfg: ExperimentConfig, out: Path, kind: str, params=()):
    """Write a deterministic fixture (.dff/.dfs plus manifest.json)."""
    parsed = {}
    for item in params:
        key, sep, value = item.partition("=")
        if not sep:
            _config_error(ValueError(f"--param expects key=value, got {item!r}"))
        parsed[key] = int(value) if value.lstrip("-").isdigit() else value
    manifest = generate_fixture(kind, cfg.grid.build(), cfg.seed, out, parsed)
    click.echo(f"{kind} fixture written to {out} (sha256 {manifest['sha256'][:12]})")
    report = {"command": "fixture", "config": cfg.echo(), "manifest": manifest}
    return report, {}, True


@main.command("schema")
def schema_cmd():
    """Print the JSON schema of the experiment config."""
    click.echo(_dump(schema()))


if __name__ == "__main__":
    main()
