"""Mollifiers, the maximal function f⁺, the area function and tent/Hardy norms."""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path

import numpy as np

from .errors import DomainError, GridMismatchError
from .grid_forms import DiscreteForm, Grid, dff_bytes, parse_dff
from .growth import GrowthFunction, luxembourg_norm, theta

DFS_MAGIC = b"DFS1"


def _offsets(grid: Grid) -> list:
    """Periodic displacement coordinates z_k on the grid, centered at index 0."""
    z = np.fft.fftfreq(grid.N, d=1.0 / grid.N) * grid.h
    out = []
    for k in range(grid.n):
        shp = [1] * grid.n
        shp[k] = grid.N
        out.append(z.reshape(shp))
    return out


@lru_cache(maxsize=16)
def _offset_radius(grid: Grid) -> np.ndarray:
    return np.sqrt(np.broadcast_to(sum(z ** 2 for z in _offsets(grid)), grid.shape))


def _base_profile(rho: np.ndarray, base: str) -> np.ndarray:
    inside = rho < 1.0
    out = np.zeros_like(rho)
    if base == "exp":
        out[inside] = np.exp(-1.0 / (1.0 - rho[inside] ** 2))
    else:
        out[inside] = (1.0 - rho[inside] ** 2) ** int(base[4:])
    return out


def _base_derivative(rho: np.ndarray, base: str) -> np.ndarray:
    """d/dρ of the base profile divided by ρ (finite at ρ = 0)."""
    inside = rho < 1.0
    out = np.zeros_like(rho)
    r2 = rho[inside] ** 2
    if base == "exp":
        out[inside] = -2.0 * np.exp(-1.0 / (1.0 - r2)) / (1.0 - r2) ** 2
    else:
        p = int(base[4:])
        out[inside] = -2.0 * p * (1.0 - r2) ** (p - 1)
    return out


@dataclass(frozen=True)
class Mollifier:
    """Compactly supported profile on the unit ball, sampled at periodic offsets.

    kind `bump` has unit discrete mass; `dbump` is ∂_axis of the normalized
    bump (zero mass); `radial` is a combination of dilated bumps whose discrete
    moments of order ≤ s vanish (s ≤ 3).  `base` is `exp` for exp(-1/(1-ρ²))
    or `polyP` for (1-ρ²)^P.
    """

    kind: str = "bump"
    axis: int = 0
    s: int = 0
    base: str = "exp"

    def __post_init__(self):
        if self.kind not in ("bump", "dbump", "radial"):
            raise DomainError(f"unknown mollifier kind {self.kind!r}")
        if self.base != "exp" and not (self.base.startswith("poly") and self.base[4:].isdigit()):
            raise DomainError(f"unknown profile base {self.base!r}")
        if self.kind == "radial" and not 0 <= self.s <= 3:
            raise DomainError("radial zero-moment profiles support s ≤ 3")

    @property
    def unit_mass(self) -> bool:
        return self.kind == "bump"

    @property
    def moment_order(self) -> int:
        """Highest order through which all moments vanish (-1: mass is 1)."""
        if self.kind == "bump":
            return -1
        if self.kind == "dbump":
            return 0
        return max(self.s, 1)

    @property
    def label(self) -> str:
        head = {"bump": "bump", "dbump": f"dbump:{self.axis}", "radial": f"radial:{self.s}"}[self.kind]
        return head if self.base == "exp" else f"{head}@{self.base}"

    def kernel(self, grid: Grid, t: float) -> np.ndarray:
        return _kernel(self, grid, float(t))

    def kernel_hat(self, grid: Grid, t: float) -> np.ndarray:
        return _kernel_hat(self, grid, float(t))


def mollifier_from_name(spec: str) -> Mollifier:
    """Parse `bump`, `dbump:k`, `radial:s`, optionally suffixed `@polyP`."""
    head, _, base = spec.partition("@")
    base = base or "exp"
    parts = head.split(":")
    try:
        if parts == ["bump"]:
            return Mollifier("bump", base=base)
        if parts[0] == "dbump" and len(parts) == 2:
            return Mollifier("dbump", axis=int(parts[1]), base=base)
        if parts[0] == "radial" and len(parts) == 2:
            return Mollifier("radial", s=int(parts[1]), base=base)
    except ValueError as exc:
        raise DomainError(f"bad mollifier spec {spec!r}") from exc
    raise DomainError(f"unknown mollifier spec {spec!r}")


def _normalized_bump(grid: Grid, t: float, base: str) -> np.ndarray:
    b = _base_profile(_offset_radius(grid) / t, base)
    return b / (np.sum(b) * grid.cell_volume)


@lru_cache(maxsize=2048)
def _kernel(m: Mollifier, grid: Grid, t: float) -> np.ndarray:
    if m.kind == "bump":
        return _normalized_bump(grid, t, m.base)
    if m.kind == "dbump":
        if not 0 <= m.axis < grid.n:
            raise DomainError(f"dbump axis {m.axis} outside the grid")
        rho = _offset_radius(grid) / t
        mass = np.sum(_base_profile(rho, m.base)) * grid.cell_volume
        z = _offsets(grid)[m.axis]
        return _base_derivative(rho, m.base) * z / t ** 2 / mass
    # radial zero-moment combination of dilated bumps
    scales = [t, t / 2.0] if m.s <= 1 else [t, t / 2.0, t / 4.0]
    bumps = [_normalized_bump(grid, u, m.base) for u in scales]
    if len(bumps) == 2:
        return bumps[0] - bumps[1]
    r2 = _offset_radius(grid) ** 2
    mom = [float(np.sum(b * r2)) for b in bumps]
    # masses are all 1, so a + b + c = 0 and Σ coef·mom = 0 with a = 1
    det = mom[2] - mom[1]
    if abs(det) < 1e-14 * max(mom[0], 1e-300):
        return np.zeros(grid.shape)
    c = (mom[1] - mom[0]) / det
    b = -1.0 - c
    return bumps[0] + b * bumps[1] + c * bumps[2]


@lru_cache(maxsize=2048)
def _kernel_hat(m: Mollifier, grid: Grid, t: float) -> np.ndarray:
    return grid.fft(_kernel(m, grid, t)) * grid.cell_volume


BUMP = Mollifier("bump")


@dataclass(frozen=True)
class LevelGrid:
    """Geometric level grid t_0 < ... < t_J with uniform log spacing."""

    levels: tuple
    dlog: float

    def __post_init__(self):
        object.__setattr__(self, "levels", tuple(float(t) for t in self.levels))

    @classmethod
    def default(cls, grid: Grid, per_octave: int = 1, t_min: float | None = None,
                t_max: float | None = None) -> "LevelGrid":
        """Levels t_max·2^{-j/P} down to t_min; defaults h/2 and L/2."""
        t_min = grid.h / 2.0 if t_min is None else t_min
        t_max = grid.L / 2.0 if t_max is None else t_max
        if t_max > grid.L / 2.0 * (1 + 1e-12):
            raise DomainError(f"t_max {t_max} exceeds L/2")
        count = int(math.floor(per_octave * math.log2(t_max / t_min) + 1e-9)) + 1
        levels = t_max * 2.0 ** (-np.arange(count)[::-1] / per_octave)
        return cls(tuple(levels), math.log(2.0) / per_octave)

    def __len__(self):
        return len(self.levels)

    @property
    def array(self) -> np.ndarray:
        return np.asarray(self.levels)


@dataclass
class SpaceTimeField:
    """Form-valued F(x, t) on grid × levels; values has shape (levels, comps, *grid)."""

    grid: Grid
    degree: int
    levels: LevelGrid
    values: np.ndarray

    def __post_init__(self):
        want = (len(self.levels), math.comb(self.grid.n, self.degree)) + self.grid.shape
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != want:
            raise GridMismatchError(f"space-time values have shape {self.values.shape}, expected {want}")

    @classmethod
    def zeros(cls, grid: Grid, degree: int, levels: LevelGrid) -> "SpaceTimeField":
        return cls(grid, degree, levels, np.zeros((len(levels), math.comb(grid.n, degree)) + grid.shape))

    def level(self, i: int) -> DiscreteForm:
        return DiscreteForm(self.grid, self.degree, self.values[i])

    def pointwise_norm(self) -> np.ndarray:
        return np.sqrt(np.sum(self.values ** 2, axis=1))

    def __mul__(self, c):
        return SpaceTimeField(self.grid, self.degree, self.levels, self.values * c)

    __rmul__ = __mul__

    def __add__(self, other):
        if other.grid != self.grid or other.levels != self.levels or other.degree != self.degree:
            raise GridMismatchError("space-time fields differ in grid, levels or degree")
        return SpaceTimeField(self.grid, self.degree, self.levels, self.values + other.values)


def write_dfs(path, F: SpaceTimeField):
    """DFS1: magic, u32 count, f64 levels, f64 log spacing, then one DFF1 payload per level."""
    with open(path, "wb") as fh:
        fh.write(DFS_MAGIC)
        fh.write(struct.pack("<I", len(F.levels)))
        fh.write(np.asarray(F.levels.levels, dtype="<f8").tobytes())
        fh.write(struct.pack("<d", F.levels.dlog))
        for i in range(len(F.levels)):
            fh.write(dff_bytes(F.level(i)))


def read_dfs(path) -> SpaceTimeField:
    data = Path(path).read_bytes()
    if data[:4] != DFS_MAGIC:
        raise ValueError(f"{path}: not a DFS1 file")
    (count,) = struct.unpack("<I", data[4:8])
    levels = np.frombuffer(data[8 : 8 + 8 * count], dtype="<f8")
    (dlog,) = struct.unpack("<d", data[8 + 8 * count : 16 + 8 * count])
    pos = 16 + 8 * count
    forms = []
    for _ in range(count):
        n, degree, N, _L = struct.unpack("<IIId", data[pos + 4 : pos + 24])
        size = 24 + 8 * math.comb(n, degree) * N ** n
        forms.append(parse_dff(data[pos : pos + size], str(path)))
        pos += size
    grid = forms[0].grid
    return SpaceTimeField(grid, forms[0].degree, LevelGrid(tuple(levels), dlog),
                          np.stack([f.components for f in forms]))


def convolve(grid: Grid, comps: np.ndarray, m: Mollifier, t: float) -> np.ndarray:
    return grid.ifft(grid.fft(comps) * m.kernel_hat(grid, t))


def mollify(f: DiscreteForm, t: float, m: Mollifier = BUMP) -> DiscreteForm:
    """Periodic convolution f ∗ φ_t via the sampled profile's transform."""
    if t > f.grid.L / 2.0 * (1 + 1e-12):
        raise DomainError(f"level {t} exceeds L/2 = {f.grid.L / 2}")
    if t <= 0:
        raise DomainError("level must be positive")
    return DiscreteForm(f.grid, f.degree, convolve(f.grid, f.components, m, t))


def maximal_levels(grid: Grid) -> LevelGrid:
    return LevelGrid.default(grid, per_octave=8)


def plus_maximal(f: DiscreteForm, m: Mollifier = BUMP, levels: LevelGrid | None = None) -> np.ndarray:
    """f⁺ = max over the level grid of |f ∗ φ_t| (Euclidean norm over components)."""
    if not m.unit_mass:
        raise DomainError("f⁺ needs a unit-mass profile")
    grid = f.grid
    levels = maximal_levels(grid) if levels is None else levels
    fh = grid.fft(f.components)
    out = np.zeros(grid.shape)
    for t in levels.levels:
        conv = grid.ifft(fh * m.kernel_hat(grid, t))
        np.maximum(out, np.sqrt(np.sum(conv ** 2, axis=0)), out=out)
    return out


@lru_cache(maxsize=512)
def _cone_hat(grid: Grid, t: float) -> np.ndarray:
    return grid.fft((_offset_radius(grid) < t).astype(float))


def area_function(F: SpaceTimeField) -> np.ndarray:
    """S(F)(x) = (Σ_t Δlog t · t^{-n} Σ_{|x-y|<t} |F(y,t)|² h^n)^{1/2}."""
    grid = F.grid
    total = np.zeros(grid.shape)
    sq = np.sum(F.values ** 2, axis=1)
    for i, t in enumerate(F.levels.levels):
        if not np.any(sq[i]):
            continue
        cone = _cone_hat(grid, t)
        conv = grid.ifft(grid.fft(sq[i]) * cone)
        hit = grid.ifft(grid.fft((sq[i] > 0).astype(float)) * cone) > 0.5
        total += np.where(hit, np.maximum(conv, 0.0), 0.0) * (F.levels.dlog * t ** (-grid.n) * grid.cell_volume)
    return np.sqrt(total)


def tent_norm(gf: GrowthFunction, F: SpaceTimeField, tol: float = 1e-8) -> float:
    """‖S(F)‖_{L^℘}."""
    return luxembourg_norm(gf, area_function(F), F.grid, tol)


def hardy_norm(gf: GrowthFunction, f: DiscreteForm, m: Mollifier = BUMP, tol: float = 1e-8,
               levels: LevelGrid | None = None) -> float:
    """‖f⁺‖_{L^℘}."""
    return luxembourg_norm(gf, plus_maximal(f, m, levels), f.grid, tol)


def hlog_norm(f: DiscreteForm, m: Mollifier = BUMP, tol: float = 1e-8) -> float:
    return hardy_norm(theta(), f, m, tol)


def h1_norm(f: DiscreteForm, m: Mollifier = BUMP) -> float:
    """Classical H¹ norm: ℘(x,t) = t, i.e. the L¹ norm of f⁺."""
    return float(np.sum(plus_maximal(f, m)) * f.grid.cell_volume)


def mollified_field(f: DiscreteForm, m: Mollifier, levels: LevelGrid) -> SpaceTimeField:
    """F(x, t) = f ∗ φ_t on every level."""
    grid = f.grid
    fh = grid.fft(f.components)
    vals = np.stack([grid.ifft(fh * m.kernel_hat(grid, t)) for t in levels.levels])
    return SpaceTimeField(grid, f.degree, levels, vals)
