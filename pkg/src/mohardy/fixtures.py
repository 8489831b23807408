"""Deterministic fixture generators shared by the suite, the tests and the CLI."""

from __future__ import annotations

import hashlib
import json
import math
from pathlib import Path

import numpy as np

from .atoms import Atom, AtomTolerances, make_atom, poly_bump, validate_atom
from .errors import DomainError
from .factorize import GridCube, bmo_factor_case1, bmo_factor_case2
from .grid_forms import Ball, DiscreteForm, Grid, exterior_derivative, random_form, write_dff
from .growth import AdmissibleTriple, GrowthFunction, theta
from .maximal import LevelGrid, SpaceTimeField, area_function, write_dfs

FIXTURE_KINDS = ("atom", "closed_field", "bmo_field", "tent_atom", "simple_function")
MIN_RADIUS_CELLS = 5.6
# fixed lower radius so the same seed draws the same ball on refined grids
CASE1_MIN_RADIUS = 0.7


def _min_radius(grid: Grid) -> float:
    return MIN_RADIUS_CELLS * grid.h


def random_ball(grid: Grid, rng: np.random.Generator, r_range=(0.75, 0.95), center_box: float = 0.5) -> Ball:
    """Ball with radius in r_range and center in [-center_box, center_box]ⁿ, with 2B inside the box."""
    r = float(rng.uniform(*r_range))
    reach = min(center_box, grid.L - 2.0 * r)
    if r < _min_radius(grid) - 1e-12 or reach < 0:
        raise DomainError("no resolved ball with 2B inside the box for these parameters")
    return Ball(tuple(rng.uniform(-reach, reach, grid.n)), r)


def case1_ball(grid: Grid, rng: np.random.Generator) -> Ball:
    """Ball with r ≤ min(1, |c_k|/2) on every axis and 2B inside the box."""
    r_lo = max(_min_radius(grid), CASE1_MIN_RADIUS)
    r_hi = min(1.0, grid.L / 4.0, r_lo * 1.2)
    if r_lo > r_hi:
        raise DomainError("grid too coarse for a resolved case-I ball")
    r = float(rng.uniform(r_lo, r_hi))
    mags = rng.uniform(2.0 * r, grid.L - 2.0 * r, grid.n)
    signs = rng.choice([-1.0, 1.0], grid.n)
    return Ball(tuple(mags * signs), r)


def case2_ball(grid: Grid, rng: np.random.Generator) -> Ball:
    """Ball with r ≥ min(1, |x_B|/2) and 2B inside the box."""
    r_lo = max(_min_radius(grid), 0.75)
    r_hi = min(max(1.25, r_lo), grid.L / 2.0 - 0.25)
    if r_lo > r_hi:
        raise DomainError("grid too coarse for a resolved case-II ball")
    r = float(rng.uniform(r_lo, r_hi))
    reach = min(0.5, grid.L - 2.0 * r)
    return Ball(tuple(rng.uniform(-reach, reach, grid.n)), r)


def closed_atom(grid: Grid, rng: np.random.Generator, degree: int, ball: Ball | None = None,
                triple: AdmissibleTriple | None = None, shape: str | None = None) -> Atom:
    triple = AdmissibleTriple(theta(), 2.0, 0) if triple is None else triple
    ball = random_ball(grid, rng) if ball is None else ball
    return make_atom(grid, ball, triple, degree, closed=True, rng=rng, shape=shape)


def closed_field(grid: Grid, rng: np.random.Generator, degree: int, r_range=(0.7, 0.9),
                 center_box: float = 0.3, fraction: float = 0.08) -> DiscreteForm:
    """d of a smooth random (ℓ-1)-form windowed by a polynomial bump; unit L² norm."""
    if not 1 <= degree <= grid.n:
        raise DomainError("closed_field degree must lie in [1, n]")
    ball = random_ball(grid, rng, r_range, center_box)
    window = poly_bump(ball.distance(grid), ball.radius, 10)
    psi = random_form(grid, degree - 1, rng, fraction)
    f = exterior_derivative(DiscreteForm(grid, degree - 1, psi.components * window))
    return f / f.norm()


def smooth_closed_one_form(grid: Grid, rng: np.random.Generator, modes: int = 2) -> DiscreteForm:
    """d of a random trigonometric polynomial with |m| ≤ modes plus a constant 1-form."""
    coeffs = rng.standard_normal((2 * modes + 1,) * grid.n) / (2 * modes + 1)
    freqs = np.arange(-modes, modes + 1)
    phase = np.zeros(grid.shape)
    for idx in np.ndindex(coeffs.shape):
        arg = sum(math.pi * freqs[i] * grid.coord(k) / grid.L for k, i in enumerate(idx))
        phase = phase + coeffs[idx] * np.cos(arg + 0.3 * sum(idx))
    v = exterior_derivative(DiscreteForm.scalar(grid, phase, 0))
    return v + DiscreteForm(grid, 1, np.stack([np.full(grid.shape, c) for c in rng.uniform(-0.5, 0.5, grid.n)]))


def bmo_field(grid: Grid, rng: np.random.Generator, kind: str | None = None) -> tuple:
    """A log-type BMO fixture as an array: case-I G, case-II G or log(e+|x-a|^{-1}) truncated."""
    kinds = ("case1", "case2", "log")
    kind = kinds[int(rng.integers(3))] if kind is None else kind
    axis = int(rng.integers(grid.n))
    if kind == "case1":
        ball = case1_ball(grid, rng)
        g1, _ = bmo_factor_case1(ball, axis, grid)
        meta = {"kind": kind, "axis": axis, "ball": ball.as_dict()}
    elif kind == "case2":
        g1 = bmo_factor_case2(axis, grid)
        meta = {"kind": kind, "axis": axis}
    elif kind == "log":
        a = rng.uniform(-1.0, 1.0, grid.n)
        dist = Ball(tuple(a), 1.0).distance(grid)
        with np.errstate(divide="ignore"):
            values = np.minimum(np.log(math.e + 1.0 / dist), math.log(math.e + 1.0 / grid.h))
        return values, {"kind": kind, "center": a.tolist()}
    else:
        raise DomainError(f"unknown bmo fixture kind {kind!r}")
    shape = [1] * grid.n
    shape[axis] = grid.N
    return np.broadcast_to(g1.reshape(shape), grid.shape).copy(), meta


def tent_atom_field(grid: Grid, rng: np.random.Generator, gf: GrowthFunction, levels: LevelGrid | None = None,
                    degree: int = 0) -> tuple:
    """Random field supported in the tent over a ball, scaled to a (℘,∞) tent atom."""
    from .atoms import TentAtom, tent_mask
    from .growth import chi_ball_norm

    levels = LevelGrid.default(grid, per_octave=1, t_min=2 * grid.h, t_max=1.0) if levels is None else levels
    ball = random_ball(grid, rng, (1.0, 1.5), 0.5)
    mask = tent_mask(ball, levels, grid)
    ncomp = math.comb(grid.n, degree)
    vals = rng.standard_normal((len(levels), ncomp) + grid.shape) * mask[:, None]
    F = SpaceTimeField(grid, degree, levels, vals)
    s = float(np.max(area_function(F))) * chi_ball_norm(gf, ball, grid)
    return TentAtom(F * (1.0 / s), ball)


def simple_function(grid: Grid, rng: np.random.Generator, count: int = 5) -> list:
    """`count` disjoint cubes of even cell side with random weights."""
    terms, cover = [], np.zeros(grid.shape, dtype=bool)
    tries = 0
    while len(terms) < count:
        tries += 1
        if tries > 1000:
            raise DomainError("could not place disjoint cubes")
        side = 2 * int(rng.integers(1, max(2, grid.N // 16) + 1))
        corner = tuple(int(c) for c in rng.integers(0, grid.N - side + 1, grid.n))
        cube = GridCube(corner, side)
        m = cube.mask(grid)
        if np.any(cover & m):
            continue
        cover |= m
        terms.append((float(rng.uniform(-2.0, 2.0)), cube))
    return terms


def _digest(arr: np.ndarray) -> str:
    return hashlib.sha256(np.ascontiguousarray(arr, dtype="<f8").tobytes()).hexdigest()


def generate_fixture(kind: str, grid: Grid, seed: int, out, params: dict | None = None,
                     tol: AtomTolerances = AtomTolerances()) -> dict:
    """Write a fixture (`.dff`/`.dfs` plus manifest.json) and return the manifest."""
    if kind not in FIXTURE_KINDS:
        raise DomainError(f"unknown fixture kind {kind!r}; expected one of {FIXTURE_KINDS}")
    params = dict(params or {})
    rng = np.random.default_rng(seed)
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    manifest = {"kind": kind, "seed": seed, "grid": grid.spec(), "params": params}
    if kind == "atom":
        degree = int(params.get("degree", grid.n))
        atom = closed_atom(grid, rng, degree, shape=params.get("shape"))
        report = validate_atom(atom, tol)
        write_dff(out / "atom.dff", atom.form)
        manifest.update(file="atom.dff", ball=atom.ball.as_dict(), validation=report.as_dict(),
                        sha256=_digest(atom.form.components))
    elif kind == "closed_field":
        degree = int(params.get("degree", grid.n))
        f = closed_field(grid, rng, degree)
        write_dff(out / "field.dff", f)
        manifest.update(file="field.dff", sha256=_digest(f.components))
    elif kind == "bmo_field":
        values, meta = bmo_field(grid, rng, params.get("type"))
        f = DiscreteForm.scalar(grid, values, 0)
        write_dff(out / "field.dff", f)
        manifest.update(file="field.dff", fixture=meta, sha256=_digest(values))
    elif kind == "tent_atom":
        A = tent_atom_field(grid, rng, theta())
        write_dfs(out / "tent.dfs", A.field)
        manifest.update(file="tent.dfs", ball=A.ball.as_dict(), sha256=_digest(A.field.values))
    else:
        terms = simple_function(grid, rng, int(params.get("count", 5)))
        f = np.zeros(grid.shape)
        for lam, cube in terms:
            f += lam * cube.mask(grid)
        write_dff(out / "field.dff", DiscreteForm.scalar(grid, f, grid.n))
        manifest.update(file="field.dff", cubes=[{"weight": lam, "corner": list(c.corner), "side": c.side}
                                                 for lam, c in terms], sha256=_digest(f))
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True))
    return manifest
