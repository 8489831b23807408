"""BMO-type functionals over a dyadic ball family, the duality pairing and the John-Nirenberg certificate."""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import DomainError, SupportError
from .grid_forms import Ball, DiscreteForm, Grid, wedge
from .growth import LEAK_TOL, GrowthFunction, chi_norms_batch, support_leak


@dataclass(frozen=True, eq=False)
class BallGroup:
    """All family balls of one radius: centers (m, n) and flat cell indices (m, P)."""

    radius: float
    centers: np.ndarray
    cells: np.ndarray

    def ball(self, i: int) -> Ball:
        return Ball(tuple(self.centers[i]), self.radius)


@dataclass(frozen=True, eq=False)
class BallFamily:
    grid: Grid
    groups: tuple

    def __len__(self):
        return sum(len(g.centers) for g in self.groups)

    def balls(self) -> list:
        return [g.ball(i) for g in self.groups for i in range(len(g.centers))]


@lru_cache(maxsize=16)
def dyadic_balls(grid: Grid) -> BallFamily:
    """Radii L·2^{-m}, m = 0..log2(N/4), centered on the lattice rℤⁿ, kept when inside the box.

    Every center is a cell corner, so one offset pattern serves all balls of a radius.
    """
    groups = []
    for m in range(int(math.log2(grid.N // 4)) + 1):
        r = grid.L * 2.0 ** (-m)
        reach = int(math.ceil(r / grid.h))
        o = np.arange(-reach, reach)
        mesh = np.meshgrid(*([o] * grid.n), indexing="ij")
        dist = np.sqrt(sum(((k + 0.5) * grid.h) ** 2 for k in mesh))
        keep = dist < r
        offsets = np.stack([k[keep] for k in mesh], axis=1)
        if len(offsets) < 2:
            continue
        lattice = np.arange(-grid.L + r, grid.L - r + 1e-9 * grid.L, r)
        cmesh = np.meshgrid(*([lattice] * grid.n), indexing="ij")
        centers = np.stack([c.ravel() for c in cmesh], axis=1)
        corner = np.rint((centers + grid.L) / grid.h).astype(np.int64)
        idx = corner[:, None, :] + offsets[None, :, :]
        flat = np.ravel_multi_index(tuple(np.moveaxis(idx, -1, 0)), grid.shape)
        groups.append(BallGroup(r, centers, flat))
    if not groups:
        raise DomainError("empty ball family")
    return BallFamily(grid, tuple(groups))


def _components(g, grid: Grid) -> np.ndarray:
    if isinstance(g, DiscreteForm):
        if g.grid != grid:
            raise DomainError("field and ball family live on different grids")
        comps = g.components
    else:
        comps = np.asarray(g, dtype=float)
        if comps.shape == grid.shape:
            comps = comps[None]
    if not np.all(np.isfinite(comps)):
        raise DomainError("non-finite field in BMO functional")
    return comps.reshape(comps.shape[0], -1)


def _grid_of(g, family: BallFamily | None, grid: Grid | None) -> tuple:
    if isinstance(g, DiscreteForm):
        grid = g.grid
    if family is None:
        if grid is None:
            raise DomainError("a grid is needed for array input")
        family = dyadic_balls(grid)
    return family.grid, family


def _oscillations(comps: np.ndarray, group: BallGroup) -> np.ndarray:
    """|g - g_B| at every cell of every ball of the group, shape (m, P)."""
    vals = comps[:, group.cells]
    dev = vals - vals.mean(axis=2, keepdims=True)
    return np.sqrt(np.sum(dev * dev, axis=0))


@lru_cache(maxsize=64)
def _chi_norms(gf: GrowthFunction, family: BallFamily) -> tuple:
    grid = family.grid
    out = []
    for group in family.groups:
        radii = grid.radius.ravel()[group.cells]
        out.append(chi_norms_batch(gf, radii, grid.cell_volume))
    return tuple(out)


def _sweep(values_per_group) -> tuple:
    best, where = -1.0, None
    for gi, vals in enumerate(values_per_group):
        i = int(np.argmax(vals))
        if vals[i] > best:
            best, where = float(vals[i]), (gi, i)
    return best, where


def bmo_wp_norm(g, gf: GrowthFunction, family: BallFamily | None = None, grid: Grid | None = None,
                return_ball: bool = False):
    """max over the family of ‖χ_B‖^{-1} ∫_B |g - g_B| dx."""
    grid, family = _grid_of(g, family, grid)
    comps = _components(g, grid)
    chis = _chi_norms(gf, family)
    vals = [np.sum(_oscillations(comps, grp), axis=1) * grid.cell_volume / chi
            for grp, chi in zip(family.groups, chis)]
    best, (gi, i) = _sweep(vals)
    if return_ball:
        return best, family.groups[gi].ball(i)
    return best


def bmo_seminorm(g, family: BallFamily | None = None, grid: Grid | None = None, return_ball: bool = False):
    """max over the family of |B|^{-1} ∫_B |g - g_B| dx."""
    grid, family = _grid_of(g, family, grid)
    comps = _components(g, grid)
    vals = [np.mean(_oscillations(comps, grp), axis=1) for grp in family.groups]
    best, (gi, i) = _sweep(vals)
    if return_ball:
        return best, family.groups[gi].ball(i)
    return best


def unit_cube_l1(g, grid: Grid) -> float:
    """∫_{(0,1)ⁿ} |g| dx."""
    if not grid.contains_unit_cube():
        raise DomainError("the unit cube (0,1)^n does not lie in the box")
    comps = _components(g, grid).reshape((-1,) + grid.shape)
    inside = (grid.axis > 0) & (grid.axis < 1)
    sel = np.ix_(*([inside] * grid.n))
    mag = np.sqrt(np.sum(comps ** 2, axis=0))
    return float(np.sum(mag[sel])) * grid.cell_volume


def bmo_plus_norm(g, family: BallFamily | None = None, grid: Grid | None = None) -> float:
    """∫_{(0,1)ⁿ}|g| + sup_B |B|^{-1}∫_B|g - g_B|."""
    grid, family = _grid_of(g, family, grid)
    return unit_cube_l1(g, grid) + bmo_seminorm(g, family, grid)


def john_nirenberg_certificate(g, gf: GrowthFunction, q_prime: float, family: BallFamily | None = None,
                               grid: Grid | None = None) -> float:
    """sup_B ‖χ_B‖^{-1} ∫_B |g - g_B|^{q'} ℘(x, ‖χ_B‖^{-1})^{1-q'} dx."""
    if not q_prime > 1:
        raise DomainError("q' must exceed 1")
    grid, family = _grid_of(g, family, grid)
    comps = _components(g, grid)
    chis = _chi_norms(gf, family)
    best = 0.0
    for grp, chi in zip(family.groups, chis):
        osc = _oscillations(comps, grp)
        r = grid.radius.ravel()[grp.cells]
        w = gf.rho(r, 1.0 / chi[:, None]) ** (1.0 - q_prime)
        vals = np.sum(osc ** q_prime * w, axis=1) * grid.cell_volume / chi
        best = max(best, float(np.max(vals)))
    return best


def pairing(g: DiscreteForm, f: DiscreteForm, ball: Ball | None = None, leak_tol: float = LEAK_TOL) -> float:
    """∫ f ∧ g; with `ball`, f must keep all but leak_tol of its L² mass inside it."""
    if f.degree + g.degree != f.grid.n:
        raise DomainError(f"degrees {f.degree} + {g.degree} do not add up to n = {f.grid.n}")
    if ball is not None:
        leak = support_leak(f.pointwise_norm(), ball.mask(f.grid))
        if leak > leak_tol:
            raise SupportError(f"f leaks {leak:.2e} of its L² mass outside {ball}")
    top = wedge(f, g)
    return float(np.sum(top.components[0])) * f.grid.cell_volume


@dataclass
class BmoReport:
    bmo_wp: float
    bmo_plus: float
    seminorm: float
    worst_ball: Ball
    jn_value: float
    q_prime: float

    def as_dict(self) -> dict:
        return {
            "bmo_wp": self.bmo_wp,
            "bmo_plus": self.bmo_plus,
            "seminorm": self.seminorm,
            "worst_ball": self.worst_ball.as_dict(),
            "jn_value": self.jn_value,
            "q_prime": self.q_prime,
        }


def bmo_report(g, gf: GrowthFunction, q_prime: float = 2.0, grid: Grid | None = None) -> BmoReport:
    grid, family = _grid_of(g, None, grid)
    wp, ball = bmo_wp_norm(g, gf, family, grid, return_ball=True)
    semi = bmo_seminorm(g, family, grid)
    return BmoReport(
        bmo_wp=wp,
        bmo_plus=unit_cube_l1(g, grid) + semi,
        seminorm=semi,
        worst_ball=ball,
        jn_value=john_nirenberg_certificate(g, gf, q_prime, family, grid),
        q_prime=q_prime,
    )
