"""Growth functions and the Musielak-Orlicz functionals built on them."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable

import numpy as np

from .errors import DomainError, SupportError
from .grid_forms import Ball, DiscreteForm, Grid

E = math.e
DEFAULT_TOL = 1e-8
DEFAULT_K = 20
LEAK_TOL = 5e-3


@dataclass(frozen=True)
class GrowthFunction:
    """A radial growth function ℘(x, t) = ℘(|x|, t).

    `lower_type` is the declared index i(℘) and `muckenhoupt_index` is q(℘);
    `muckenhoupt_q` is a class 𝔸_q the function is declared to belong to.
    """

    kind: str
    p: float = 1.0
    alpha: float = 0.0
    lower_type: float = 1.0
    upper_type: float = 1.0
    muckenhoupt_index: float = 1.0
    muckenhoupt_q: float = 1.5
    name: str = ""
    func: Callable | None = field(default=None, compare=False, repr=False)

    def rho(self, r, t):
        """Evaluate ℘ at |x| = r and level t (arrays broadcast)."""
        t = np.asarray(t, dtype=float)
        if self.kind == "theta":
            return t / (np.log(E + r) + np.log(E + t))
        if self.kind == "power":
            return np.broadcast_arrays(t ** self.p, np.asarray(r, dtype=float))[0]
        if self.kind == "power_weight":
            return np.asarray(r, dtype=float) ** self.alpha * t ** self.p
        return self.func(r, t)

    @property
    def label(self) -> str:
        if self.name:
            return self.name
        if self.kind == "theta":
            return "theta"
        if self.kind == "power":
            return f"power:{self.p:g}"
        if self.kind == "power_weight":
            return f"power_weight:{self.p:g}:{self.alpha:g}"
        return "custom"

    @property
    def n_wp_numerator(self) -> float:
        return self.muckenhoupt_index / self.lower_type

    def n_wp(self, n: int) -> int:
        """N_℘ = ⌈n(q(℘)/i(℘) − 1)⌉ from the declared parameters."""
        return max(0, math.ceil(n * (self.n_wp_numerator - 1.0) - 1e-12))


def theta() -> GrowthFunction:
    """θ(x,t) = t/(log(e+|x|) + log(e+t)); i(θ) = q(θ) = 1."""
    return GrowthFunction("theta")


def power(p: float) -> GrowthFunction:
    if not 0 < p <= 1:
        raise DomainError(f"power exponent must lie in (0, 1], got {p}")
    return GrowthFunction("power", p=p, lower_type=p)


def power_weight(p: float, alpha: float, n: int = 2) -> GrowthFunction:
    """|x|^α t^p; in 𝔸_q for q > 1 + α/n when α > 0, in 𝔸_1 for -n < α ≤ 0."""
    if not 0 < p <= 1:
        raise DomainError(f"power exponent must lie in (0, 1], got {p}")
    if alpha <= -n:
        raise DomainError(f"weight exponent must exceed -n, got {alpha}")
    index = 1.0 + max(alpha, 0.0) / n
    return GrowthFunction("power_weight", p=p, alpha=alpha, lower_type=p, muckenhoupt_index=index,
                          muckenhoupt_q=index + 0.5)


def custom(name: str, func: Callable, lower_type: float, muckenhoupt_index: float = 1.0,
           muckenhoupt_q: float = 1.5) -> GrowthFunction:
    """Wrap func(r, t) as a growth function; `name` identifies it in caches."""
    return GrowthFunction("custom", lower_type=lower_type, muckenhoupt_index=muckenhoupt_index,
                          muckenhoupt_q=muckenhoupt_q, name=name, func=func)


def from_name(spec: str, n: int = 2) -> GrowthFunction:
    """Parse `theta`, `power:p` or `power_weight:p:alpha`."""
    parts = spec.strip().split(":")
    try:
        if parts[0] == "theta" and len(parts) == 1:
            return theta()
        if parts[0] == "power" and len(parts) == 2:
            return power(float(parts[1]))
        if parts[0] == "power_weight" and len(parts) == 3:
            return power_weight(float(parts[1]), float(parts[2]), n)
    except ValueError as exc:
        raise DomainError(f"bad growth function spec {spec!r}: {exc}") from exc
    raise DomainError(f"unknown growth function spec {spec!r}")


@dataclass(frozen=True)
class AdmissibleTriple:
    growth: GrowthFunction
    q: float = 2.0
    s: int = 0

    def check(self, n: int):
        if not self.q > self.growth.muckenhoupt_index:
            raise DomainError(f"q={self.q} must exceed q(℘)={self.growth.muckenhoupt_index}")
        if self.s < self.growth.n_wp(n):
            raise DomainError(f"s={self.s} below N_℘={self.growth.n_wp(n)}")
        return self


def eval_growth(gf: GrowthFunction, x, t: float) -> float:
    if t < 0:
        raise DomainError(f"growth function evaluated at negative level {t}")
    r = float(np.linalg.norm(np.atleast_1d(np.asarray(x, dtype=float))))
    return float(gf.rho(r, t))


def _abs_values(f) -> np.ndarray:
    if isinstance(f, DiscreteForm):
        return f.pointwise_norm()
    return np.abs(np.asarray(f, dtype=float))


def modular(gf: GrowthFunction, f, grid: Grid) -> float:
    """∫℘(x, |f(x)|) dx by midpoint quadrature."""
    return float(np.sum(gf.rho(grid.radius, _abs_values(f))) * grid.cell_volume)


def _bisect(phi: Callable[[float], float], scale: float, tol: float) -> float:
    """Smallest λ with phi(λ) ≤ 1 for phi nonincreasing, to relative width tol."""
    hi = scale
    while phi(hi) > 1.0:
        hi *= 2.0
        if hi > 1e300:
            raise DomainError("Luxembourg bracket diverged")
    lo = hi / 2.0
    while phi(lo) <= 1.0:
        hi, lo = lo, lo / 2.0
        if lo < 1e-300:
            return 0.0
    while hi / lo - 1.0 > tol:
        mid = math.sqrt(lo * hi)
        if phi(mid) <= 1.0:
            hi = mid
        else:
            lo = mid
    return hi


def luxembourg_values(gf: GrowthFunction, values: np.ndarray, radii: np.ndarray, cell_volume: float,
                      tol: float = DEFAULT_TOL) -> float:
    """Luxembourg norm of samples `values` located at |x| = `radii`."""
    values = np.abs(np.asarray(values, dtype=float))
    if not np.all(np.isfinite(values)):
        raise DomainError("non-finite samples in Luxembourg norm input")
    radii = np.broadcast_to(np.asarray(radii, dtype=float), values.shape).ravel()
    values = values.ravel()
    keep = values > 0
    if not keep.any():
        return 0.0
    v = values[keep]
    r = radii[keep]
    return _bisect(lambda lam: float(np.sum(gf.rho(r, v / lam))) * cell_volume, float(v.max()), tol)


def luxembourg_norm(gf: GrowthFunction, f, grid: Grid, tol: float = DEFAULT_TOL) -> float:
    """inf{λ > 0 : ∫℘(x, |f|/λ) dx ≤ 1}; |f| is the pointwise Euclidean norm for forms."""
    if tol <= 0:
        raise DomainError("tol must be positive")
    values = _abs_values(f)
    return luxembourg_values(gf, np.broadcast_to(values, grid.shape), grid.radius, grid.cell_volume, tol)


def _check_ball(B: Ball, grid: Grid, clip: bool):
    if not clip:
        B.check_inside(grid)
    elif any(abs(c) >= grid.L for c in B.center):
        raise DomainError(f"ball center {B.center} lies outside the box")


def _ball_cells(B: Ball, grid: Grid) -> np.ndarray:
    mask = B.mask(grid)
    if not mask.any():
        raise DomainError(f"ball {B} contains no grid cells")
    return mask


def wp_ball_mass(gf: GrowthFunction, B: Ball, t: float, grid: Grid) -> float:
    """℘(B, t) = ∫_B ℘(x, t) dx."""
    B.check_inside(grid)
    if t < 0:
        raise DomainError("negative level")
    mask = _ball_cells(B, grid)
    return float(np.sum(gf.rho(grid.radius[mask], t))) * grid.cell_volume


def support_leak(values: np.ndarray, mask: np.ndarray) -> float:
    """Relative L² mass of `values` outside `mask`."""
    total = float(np.sum(values ** 2))
    if total == 0:
        return 0.0
    return math.sqrt(float(np.sum(values[~mask] ** 2)) / total)


def levels_2k(K: int = DEFAULT_K) -> np.ndarray:
    return 2.0 ** np.arange(-K, K + 1)


def lq_wp_ball_norm(triple: AdmissibleTriple, f, B: Ball, grid: Grid, K: int = DEFAULT_K,
                    leak_tol: float | None = LEAK_TOL, levels: np.ndarray | None = None,
                    clip: bool = False) -> float:
    """sup_t (℘(B,t)^{-1} ∫_B |f|^q ℘(x,t) dx)^{1/q} over t = 2^k, |k| ≤ K.

    With clip=True a ball reaching past the box edge is cut to the box.
    """
    _check_ball(B, grid, clip)
    q = triple.q
    if not 1 <= q < math.inf:
        raise DomainError("q must lie in [1, ∞)")
    mask = _ball_cells(B, grid)
    values = np.broadcast_to(_abs_values(f), grid.shape)
    if leak_tol is not None:
        leak = support_leak(values, mask)
        if leak > leak_tol:
            raise SupportError(f"field leaks {leak:.2e} of its L² mass outside {B}")
    ts = levels_2k(K) if levels is None else np.asarray(levels, dtype=float)
    r = grid.radius[mask]
    fq = values[mask] ** q
    w = triple.growth.rho(r[None, :], ts[:, None])
    ratio = (w @ fq) / np.sum(w, axis=1)
    return float(np.max(ratio)) ** (1.0 / q)


@lru_cache(maxsize=4096)
def chi_ball_norm(gf: GrowthFunction, B: Ball, grid: Grid, tol: float = DEFAULT_TOL,
                  clip: bool = False) -> float:
    """‖χ_B‖_{L^℘}, cached per (growth function, ball, grid)."""
    _check_ball(B, grid, clip)
    mask = _ball_cells(B, grid)
    r = grid.radius[mask]
    dv = grid.cell_volume
    return _bisect(lambda lam: float(np.sum(gf.rho(r, 1.0 / lam))) * dv, 1.0, tol)


def chi_norms_batch(gf: GrowthFunction, radii: np.ndarray, cell_volume: float,
                    tol: float = DEFAULT_TOL) -> np.ndarray:
    """‖χ_B‖_{L^℘} for many balls at once; `radii` has one row of |x| per ball."""
    radii = np.atleast_2d(radii)
    m = radii.shape[0]

    def phi(lam):
        return np.sum(gf.rho(radii, 1.0 / lam[:, None]), axis=1) * cell_volume

    hi = np.ones(m)
    for _ in range(2100):
        bad = phi(hi) > 1.0
        if not bad.any():
            break
        hi[bad] *= 2.0
    lo = hi / 2.0
    for _ in range(2100):
        good = phi(lo) <= 1.0
        if not good.any():
            break
        hi[good] = lo[good]
        lo[good] /= 2.0
    while np.max(hi / lo - 1.0) > tol:
        mid = np.sqrt(lo * hi)
        ok = phi(mid) <= 1.0
        hi = np.where(ok, mid, hi)
        lo = np.where(ok, lo, mid)
    return hi


def check_muckenhoupt(gf: GrowthFunction, q: float, balls: list, levels, grid: Grid) -> float:
    """sup over balls and levels of (avg ℘)(avg ℘^{-1/(q-1)})^{q-1}."""
    if not q > 1:
        raise DomainError("Muckenhoupt exponent must exceed 1")
    worst = 0.0
    for B in balls:
        B.check_inside(grid)
        r = grid.radius[_ball_cells(B, grid)]
        for t in levels:
            w = np.broadcast_to(gf.rho(r, t), r.shape)
            if np.any(w <= 0):
                raise DomainError(f"weight vanishes inside {B} at level {t}")
            val = float(np.mean(w)) * float(np.mean(w ** (-1.0 / (q - 1.0)))) ** (q - 1.0)
            worst = max(worst, val)
    return worst


def type_constant(gf: GrowthFunction, p: float, radii, ts, ss) -> float:
    """sup of ℘(x,st)/(s^p ℘(x,t)) over the sample lattice (lower type for s ≤ 1, upper for s ≥ 1)."""
    r = np.asarray(radii, dtype=float)[:, None, None]
    t = np.asarray(ts, dtype=float)[None, :, None]
    s = np.asarray(ss, dtype=float)[None, None, :]
    return float(np.max(gf.rho(r, s * t) / (s ** p * gf.rho(r, t))))
