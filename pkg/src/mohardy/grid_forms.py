"""Discrete exterior calculus on a periodic grid.

Fields live on the cell centers of the box [-L, L)^n with N points per axis.
All derivatives are Fourier multipliers, so d∘d = 0 and the adjointness of
d and δ hold to rounding error.  The Hodge Laplacian is taken positive
semidefinite, dδ + δd = -Σ ∂_j², which differs from the ordinary Laplacian
by a global sign.
"""

from __future__ import annotations

import itertools
import math
import struct
from dataclasses import dataclass
from functools import cached_property, lru_cache
from pathlib import Path

import numpy as np

from .errors import DomainError, GridMismatchError, NotClosedError, SolverError, SupportError

DFF_MAGIC = b"DFF1"


@dataclass(frozen=True)
class Grid:
    """Periodic cell-centered grid on [-L, L)^n."""

    n: int = 2
    N: int = 64
    L: float = 4.0

    def __post_init__(self):
        if self.n not in (2, 3):
            raise DomainError(f"dimension must be 2 or 3, got {self.n}")
        if self.N < 4 or self.N % 2:
            raise DomainError(f"N must be even and >= 4, got {self.N}")
        if not self.L > 0:
            raise DomainError(f"L must be positive, got {self.L}")
        object.__setattr__(self, "L", float(self.L))

    @property
    def h(self) -> float:
        return 2.0 * self.L / self.N

    @property
    def cell_volume(self) -> float:
        return self.h ** self.n

    @property
    def shape(self) -> tuple:
        return (self.N,) * self.n

    @cached_property
    def axis(self) -> np.ndarray:
        """Cell-center coordinates along one axis."""
        return -self.L + (np.arange(self.N) + 0.5) * self.h

    def coord(self, k: int) -> np.ndarray:
        """Coordinate x_k as an array broadcastable to the grid shape."""
        shp = [1] * self.n
        shp[k] = self.N
        return self.axis.reshape(shp)

    @cached_property
    def radius(self) -> np.ndarray:
        """|x| on the full grid."""
        r2 = sum(self.coord(k) ** 2 for k in range(self.n))
        return np.sqrt(np.broadcast_to(r2, self.shape))

    @cached_property
    def wavenumbers(self) -> np.ndarray:
        """Angular frequencies π·m/L along one axis, FFT order, Nyquist zeroed."""
        k = 2.0 * np.pi * np.fft.fftfreq(self.N, d=self.h)
        k[self.N // 2] = 0.0
        return k

    def _spectral_axis(self, k: int) -> np.ndarray:
        shp = [1] * self.n
        if k == self.n - 1:
            shp[k] = self.N // 2 + 1
            return self.wavenumbers[: self.N // 2 + 1].reshape(shp)
        shp[k] = self.N
        return self.wavenumbers.reshape(shp)

    @cached_property
    def ks(self) -> tuple:
        """Per-axis derivative frequencies on the half-spectrum (rfftn layout)."""
        return tuple(self._spectral_axis(k) for k in range(self.n))

    @cached_property
    def k2(self) -> np.ndarray:
        return sum(k ** 2 for k in self.ks)

    @cached_property
    def kernel_mask(self) -> np.ndarray:
        """Half-spectrum modes annihilated by every derivative."""
        return self.k2 == 0

    def fft(self, a: np.ndarray) -> np.ndarray:
        return np.fft.rfftn(a, axes=tuple(range(-self.n, 0)))

    def ifft(self, a: np.ndarray) -> np.ndarray:
        return np.fft.irfftn(a, s=self.shape, axes=tuple(range(-self.n, 0)))

    def integrate(self, a: np.ndarray) -> float:
        return float(np.sum(a) * self.cell_volume)

    def contains_unit_cube(self) -> bool:
        return self.L >= 1.0

    def spec(self) -> str:
        return f"{self.n},{self.N},{self.L:g}"


def tuples(n: int, degree: int) -> list:
    """Increasing index tuples of length `degree`, lexicographic order."""
    return list(itertools.combinations(range(n), degree))


@lru_cache(maxsize=None)
def _tuple_index(n: int, degree: int) -> dict:
    return {t: i for i, t in enumerate(tuples(n, degree))}


def _merge_sign(a: tuple, b: tuple):
    """Sign and sorted tuple for e^a ∧ e^b, or (0, None) if they overlap."""
    if set(a) & set(b):
        return 0, None
    seq = list(a) + list(b)
    inversions = sum(1 for i in range(len(seq)) for j in range(i + 1, len(seq)) if seq[i] > seq[j])
    return (-1) ** inversions, tuple(sorted(seq))


@dataclass
class DiscreteForm:
    """Degree-ℓ form with one real array per increasing ℓ-tuple."""

    grid: Grid
    degree: int
    components: np.ndarray

    def __post_init__(self):
        n = self.grid.n
        if not 0 <= self.degree <= n:
            raise DomainError(f"degree {self.degree} outside [0, {n}]")
        comps = np.asarray(self.components, dtype=float)
        want = (math.comb(n, self.degree),) + self.grid.shape
        if comps.shape != want:
            raise GridMismatchError(f"components have shape {comps.shape}, expected {want}")
        self.components = comps

    @classmethod
    def zeros(cls, grid: Grid, degree: int) -> "DiscreteForm":
        return cls(grid, degree, np.zeros((math.comb(grid.n, degree),) + grid.shape))

    @classmethod
    def scalar(cls, grid: Grid, values: np.ndarray, degree: int = 0) -> "DiscreteForm":
        """A 0-form, or an n-form when degree=n, from a single array."""
        if degree not in (0, grid.n):
            raise DomainError("scalar forms have degree 0 or n")
        return cls(grid, degree, np.broadcast_to(values, grid.shape)[None].copy())

    @property
    def tuples(self) -> list:
        return tuples(self.grid.n, self.degree)

    def component(self, idx: tuple) -> np.ndarray:
        return self.components[_tuple_index(self.grid.n, self.degree)[tuple(idx)]]

    def copy(self) -> "DiscreteForm":
        return DiscreteForm(self.grid, self.degree, self.components.copy())

    def _check(self, other: "DiscreteForm"):
        if not isinstance(other, DiscreteForm):
            raise TypeError("expected a DiscreteForm")
        if other.grid != self.grid or other.degree != self.degree:
            raise GridMismatchError("forms differ in grid or degree")

    def __add__(self, other):
        self._check(other)
        return DiscreteForm(self.grid, self.degree, self.components + other.components)

    def __sub__(self, other):
        self._check(other)
        return DiscreteForm(self.grid, self.degree, self.components - other.components)

    def __neg__(self):
        return DiscreteForm(self.grid, self.degree, -self.components)

    def __mul__(self, c):
        """Multiply by a scalar or by a scalar field on the grid."""
        return DiscreteForm(self.grid, self.degree, self.components * np.asarray(c))

    __rmul__ = __mul__

    def __truediv__(self, c):
        return DiscreteForm(self.grid, self.degree, self.components / np.asarray(c))

    def pointwise_norm(self) -> np.ndarray:
        """Euclidean norm across components at every grid point."""
        return np.sqrt(np.sum(self.components ** 2, axis=0))

    def inner(self, other: "DiscreteForm") -> float:
        """Grid inner product Σ_I Σ_x f_I g_I (no cell volume)."""
        self._check(other)
        return float(np.sum(self.components * other.components))

    def norm(self) -> float:
        """L² norm with cell-volume quadrature."""
        return math.sqrt(float(np.sum(self.components ** 2)) * self.grid.cell_volume)

    def means(self) -> np.ndarray:
        return self.components.reshape(len(self.components), -1).mean(axis=1)

    def restrict(self, mask: np.ndarray) -> "DiscreteForm":
        return DiscreteForm(self.grid, self.degree, self.components * mask)


@dataclass(frozen=True)
class Ball:
    """Euclidean ball; discrete membership is |x - c| < r without wrapping."""

    center: tuple
    radius: float

    def __post_init__(self):
        object.__setattr__(self, "center", tuple(float(c) for c in self.center))
        object.__setattr__(self, "radius", float(self.radius))
        if not self.radius > 0:
            raise DomainError(f"ball radius must be positive, got {self.radius}")

    def dilate(self, factor: float) -> "Ball":
        return Ball(self.center, self.radius * factor)

    def wraps(self, grid: Grid) -> bool:
        return any(c - self.radius < -grid.L or c + self.radius > grid.L for c in self.center)

    def check_inside(self, grid: Grid):
        if len(self.center) != grid.n:
            raise GridMismatchError("ball dimension differs from grid dimension")
        if self.wraps(grid):
            raise SupportError(f"ball {self} does not fit in the box [-{grid.L:g}, {grid.L:g})^{grid.n}")

    def distance(self, grid: Grid) -> np.ndarray:
        """Non-periodic distance |x - c| on the grid."""
        d2 = sum((grid.coord(k) - self.center[k]) ** 2 for k in range(grid.n))
        return np.sqrt(np.broadcast_to(d2, grid.shape))

    def mask(self, grid: Grid) -> np.ndarray:
        return self.distance(grid) < self.radius

    def volume(self, grid: Grid) -> float:
        """Discrete volume: cell count times cell volume."""
        return float(np.count_nonzero(self.mask(grid))) * grid.cell_volume

    def as_dict(self) -> dict:
        return {"center": list(self.center), "radius": self.radius}


def _same_grid(*forms):
    g = forms[0].grid
    for f in forms[1:]:
        if f.grid != g:
            raise GridMismatchError("forms live on different grids")
    return g


def wedge(f: DiscreteForm, g: DiscreteForm) -> DiscreteForm:
    """Pointwise exterior product f ∧ g."""
    grid = _same_grid(f, g)
    deg = f.degree + g.degree
    if deg > grid.n:
        raise DomainError(f"degree overflow {f.degree}+{g.degree} > {grid.n}")
    out = DiscreteForm.zeros(grid, deg)
    index = _tuple_index(grid.n, deg)
    for i, a in enumerate(f.tuples):
        for j, b in enumerate(g.tuples):
            sign, k = _merge_sign(a, b)
            if sign:
                out.components[index[k]] += sign * f.components[i] * g.components[j]
    return out


@lru_cache(maxsize=None)
def _d_table(n: int, degree: int) -> tuple:
    """(output index, input index, axis, sign) terms of d on degree-ℓ forms."""
    out_index = _tuple_index(n, degree + 1)
    terms = []
    for i, a in enumerate(tuples(n, degree)):
        for j in range(n):
            sign, k = _merge_sign((j,), a)
            if sign:
                terms.append((out_index[k], i, j, sign))
    return tuple(terms)


def _apply_d_hat(grid: Grid, degree: int, fh: np.ndarray) -> np.ndarray:
    out = np.zeros((math.comb(grid.n, degree + 1),) + fh.shape[1:], dtype=complex)
    for o, i, j, sign in _d_table(grid.n, degree):
        out[o] += sign * 1j * grid.ks[j] * fh[i]
    return out


def _apply_delta_hat(grid: Grid, degree: int, fh: np.ndarray) -> np.ndarray:
    # adjoint of d: ∂_j is skew-adjoint, so each term flips sign
    out = np.zeros((math.comb(grid.n, degree - 1),) + fh.shape[1:], dtype=complex)
    for o, i, j, sign in _d_table(grid.n, degree - 1):
        out[i] -= sign * 1j * grid.ks[j] * fh[o]
    return out


def exterior_derivative(f: DiscreteForm) -> DiscreteForm:
    """df = Σ_I Σ_j ∂_j f_I e^j ∧ e^I with spectral partials."""
    grid = f.grid
    if f.degree >= grid.n:
        raise DomainError("exterior derivative of a top-degree form")
    out = grid.ifft(_apply_d_hat(grid, f.degree, grid.fft(f.components)))
    return DiscreteForm(grid, f.degree + 1, out)


def codifferential(f: DiscreteForm) -> DiscreteForm:
    """δ, the exact adjoint of d for the grid inner product."""
    grid = f.grid
    if f.degree == 0:
        raise DomainError("codifferential of a 0-form")
    out = grid.ifft(_apply_delta_hat(grid, f.degree, grid.fft(f.components)))
    return DiscreteForm(grid, f.degree - 1, out)


def hodge_laplacian(f: DiscreteForm) -> DiscreteForm:
    """dδ + δd, positive semidefinite."""
    out = DiscreteForm.zeros(f.grid, f.degree)
    if f.degree > 0:
        out = out + exterior_derivative(codifferential(f))
    if f.degree < f.grid.n:
        out = out + codifferential(exterior_derivative(f))
    return out


def scalar_laplacian(f: DiscreteForm) -> DiscreteForm:
    """Componentwise multiplier |k|², the same operator as hodge_laplacian."""
    grid = f.grid
    return DiscreteForm(grid, f.degree, grid.ifft(grid.k2 * grid.fft(f.components)))


def riesz_transform(j: int, f: np.ndarray, grid: Grid) -> np.ndarray:
    """R_j with multiplier -i k_j/|k|, zero on the kernel modes."""
    if not 0 <= j < grid.n:
        raise DomainError(f"axis {j} outside [0, {grid.n})")
    k = np.sqrt(grid.k2)
    mult = np.where(grid.kernel_mask, 0.0, -1j * grid.ks[j] / np.where(grid.kernel_mask, 1.0, k))
    return grid.ifft(mult * grid.fft(np.asarray(f, dtype=float)))


def inv_laplacian(f: DiscreteForm, power: float = 1.0, tol: float = 1e-10) -> DiscreteForm:
    """Δ^{-power} on zero-mean forms; kernel modes are sent to zero."""
    if power not in (1, 1.0, 0.5):
        raise DomainError("power must be 1 or 1/2")
    grid = f.grid
    scale = max(float(np.max(np.abs(f.components))), 1e-300)
    if np.any(np.abs(f.means()) > tol * scale):
        raise DomainError("inv_laplacian needs zero-mean components")
    k2 = np.where(grid.kernel_mask, 1.0, grid.k2)
    mult = np.where(grid.kernel_mask, 0.0, k2 ** (-power))
    return DiscreteForm(grid, f.degree, grid.ifft(mult * grid.fft(f.components)))


def kernel_part(f: DiscreteForm) -> DiscreteForm:
    """Projection onto the modes annihilated by Δ (the mean, plus pure Nyquist modes)."""
    grid = f.grid
    return DiscreteForm(grid, f.degree, grid.ifft(grid.kernel_mask * grid.fft(f.components)))


def hodge_split(f: DiscreteForm):
    """Return (dδΔ^{-1}f, δdΔ^{-1}f, kernel part); the three sum to f."""
    grid = f.grid
    fh = grid.fft(f.components)
    k2 = np.where(grid.kernel_mask, 1.0, grid.k2)
    gh = np.where(grid.kernel_mask, 0.0, fh / k2)
    closed = np.zeros_like(fh)
    coclosed = np.zeros_like(fh)
    if f.degree > 0:
        closed = _apply_d_hat(grid, f.degree - 1, _apply_delta_hat(grid, f.degree, gh))
    if f.degree < grid.n:
        coclosed = _apply_delta_hat(grid, f.degree + 1, _apply_d_hat(grid, f.degree, gh))
    harmonic = np.where(grid.kernel_mask, fh, 0.0)
    return (
        DiscreteForm(grid, f.degree, grid.ifft(closed)),
        DiscreteForm(grid, f.degree, grid.ifft(coclosed)),
        DiscreteForm(grid, f.degree, grid.ifft(harmonic)),
    )


def band_limit(f: DiscreteForm, fraction: float = 0.25) -> DiscreteForm:
    """Zero every mode with |m_k| >= fraction·N on some axis."""
    grid = f.grid
    m = np.abs(np.fft.fftfreq(grid.N, d=1.0 / grid.N))
    fh = grid.fft(f.components)
    keep = np.ones(fh.shape[1:], dtype=bool)
    for k in range(grid.n):
        shp = [1] * grid.n
        mk = m[: grid.N // 2 + 1] if k == grid.n - 1 else m
        shp[k] = mk.size
        keep = keep & (mk.reshape(shp) < fraction * grid.N)
    return DiscreteForm(grid, f.degree, grid.ifft(fh * keep))


def random_form(grid: Grid, degree: int, rng: np.random.Generator, fraction: float = 0.25) -> DiscreteForm:
    """Random smooth form, band-limited below fraction·N."""
    f = DiscreteForm(grid, degree, rng.standard_normal((math.comb(grid.n, degree),) + grid.shape))
    return band_limit(f, fraction)


def relative(a: float, b: float) -> float:
    return a / b if b > 0 else (0.0 if a == 0 else math.inf)


@dataclass
class PrimitiveResult:
    """Output of local_primitive with its residual and norm certificates."""

    form: DiscreteForm
    residual: float
    iterations: int
    method: str
    support_leak: float
    primitive_ratio: float
    derivative_ratio: float


def _cgls(apply_a, apply_at, rhs, x0, tol, max_iter, stall_window=400):
    x = x0.copy()
    r = rhs - apply_a(x)
    s = apply_at(r)
    p = s.copy()
    gamma = float(np.sum(s * s))
    rhs_norm = math.sqrt(float(np.sum(rhs * rhs)))
    best = math.sqrt(float(np.sum(r * r)))
    best_it = 0
    it = 0
    while it < max_iter and best > tol * rhs_norm and gamma > 0:
        it += 1
        q = apply_a(p)
        qq = float(np.sum(q * q))
        if qq == 0:
            break
        alpha = gamma / qq
        x += alpha * p
        r -= alpha * q
        if it % 50 == 0:
            r = rhs - apply_a(x)
        s = apply_at(r)
        gamma_new = float(np.sum(s * s))
        p = s + (gamma_new / gamma) * p
        gamma = gamma_new
        res = math.sqrt(float(np.sum(r * r)))
        if res < 0.9 * best:
            best, best_it = res, it
        elif it - best_it > stall_window:
            break
    r = rhs - apply_a(x)
    return x, math.sqrt(float(np.sum(r * r))), it


def local_primitive(
    a: DiscreteForm,
    ball: Ball,
    tol: float = 1e-10,
    accept: float = 1e-6,
    closed_tol: float = 1e-8,
    q: float = 2.0,
    max_iter: int = 800,
    hint: DiscreteForm | None = None,
    method: str = "gauge",
    leak_tol: float = 5e-3,
) -> PrimitiveResult:
    """Solve d𝔟 = a with 𝔟 concentrated in 2B.

    method="gauge" (default) starts from the global primitive δΔ^{-1}a and
    subtracts the gauge terms dψ + c that minimize its mass outside 2B; d𝔟 = a
    holds to rounding and the leftover mass outside 2B is reported as
    `support_leak`.  method="cg" runs conjugate gradients on the operator
    restricted to 2B, which gives exact support but may stall.  A `hint` with
    d(hint) = a is used as is.  SupportError is raised when the leak exceeds
    leak_tol.
    """
    grid = a.grid
    ell = a.degree
    if ell < 1:
        raise DomainError("local_primitive needs degree >= 1")
    if len(ball.center) != grid.n:
        raise GridMismatchError("ball dimension differs from grid dimension")
    if any(abs(c) >= grid.L for c in ball.center):
        raise SupportError(f"ball center {ball.center} lies outside the box")
    a_norm = math.sqrt(float(np.sum(a.components ** 2)))
    deg = ell - 1
    if a_norm == 0:
        return PrimitiveResult(DiscreteForm.zeros(grid, deg), 0.0, 0, "zero", 0.0, 0.0, 0.0)
    if ell < grid.n:
        da = exterior_derivative(a)
        if math.sqrt(float(np.sum(da.components ** 2))) > closed_tol * a_norm:
            raise NotClosedError("local_primitive input is not closed")
    scale = float(np.max(np.abs(a.components)))
    if np.any(np.abs(a.means()) > closed_tol * scale):
        raise NotClosedError("local_primitive input has non-zero mean (not exact on the torus)")

    support = ball.dilate(2.0).mask(grid)
    outside = ~support
    its = 0
    if hint is not None and _residual(hint, a) <= accept:
        x, used = hint.components, "hint"
    elif method == "cg":
        x, its = _masked_cg(a, support, tol, max_iter * 8)
        used = "cg"
    elif method == "gauge":
        x, its = _gauge_primitive(a, outside, tol, max_iter)
        used = "gauge"
    else:
        raise DomainError(f"unknown primitive method {method!r}")
    b = DiscreteForm(grid, deg, x)
    rel = _residual(b, a)
    if rel > accept:
        raise SolverError(f"local_primitive residual {rel:.3e} above {accept:.1e}")
    pointwise = b.pointwise_norm()
    total = float(np.sum(pointwise ** 2))
    leak = math.sqrt(float(np.sum(pointwise[outside] ** 2)) / total) if total > 0 else 0.0
    if leak > leak_tol:
        raise SupportError(f"primitive leaks {leak:.2e} of its L² mass outside 2B")
    a_q = _lq(a.pointwise_norm(), q, grid)
    return PrimitiveResult(
        form=b,
        residual=rel,
        iterations=its,
        method=used,
        support_leak=leak,
        primitive_ratio=relative(_lq(pointwise, q, grid), ball.radius * a_q),
        derivative_ratio=relative(_lq(exterior_derivative(b).pointwise_norm(), q, grid), a_q),
    )


def _residual(b: DiscreteForm, a: DiscreteForm) -> float:
    diff = exterior_derivative(b).components - a.components
    return math.sqrt(float(np.sum(diff ** 2)) / float(np.sum(a.components ** 2)))


def _gauge_primitive(a: DiscreteForm, outside: np.ndarray, tol: float, max_iter: int):
    """δΔ^{-1}a - d(Pψ) + c with ψ, c fitted by least squares to vanish outside 2B.

    P = Δ^{-1/2} preconditions the (ℓ-2)-form ψ; c holds one constant per component.
    """
    grid = a.grid
    ell = a.degree
    b0 = codifferential(inv_laplacian(a, 1.0)).components
    if not outside.any():
        return b0, 0
    ncomp = b0.shape[0]
    count = float(np.count_nonzero(outside))
    if ell == 1:
        c = -np.array([float(np.sum(b0[i][outside])) / count for i in range(ncomp)])
        return b0 + c.reshape((ncomp,) + (1,) * grid.n), 0
    npsi = math.comb(grid.n, ell - 2)
    size = npsi * grid.N ** grid.n
    k = np.sqrt(grid.k2)
    precond = np.where(grid.kernel_mask, 0.0, 1.0 / np.where(grid.kernel_mask, 1.0, k))
    expand = (ncomp,) + (1,) * grid.n

    def d_psi(x):
        psi = x[:size].reshape((npsi,) + grid.shape)
        return grid.ifft(_apply_d_hat(grid, ell - 2, grid.fft(psi) * precond))

    def apply_a(x):
        return ((d_psi(x) - x[size:].reshape(expand)) * outside).ravel()

    def apply_at(y):
        y = y.reshape((ncomp,) + grid.shape) * outside
        psi = grid.ifft(_apply_delta_hat(grid, ell - 1, grid.fft(y)) * precond)
        c = -y.reshape(ncomp, -1).sum(axis=1)
        return np.concatenate([psi.ravel(), c])

    rhs = (b0 * outside).ravel()
    x, _, its = _cgls(apply_a, apply_at, rhs, np.zeros(size + ncomp), tol, max_iter)
    return b0 - d_psi(x) + x[size:].reshape(expand), its


def _masked_cg(a: DiscreteForm, support: np.ndarray, tol: float, max_iter: int):
    grid = a.grid
    deg = a.degree - 1

    def apply_a(b):
        return grid.ifft(_apply_d_hat(grid, deg, grid.fft(b * support)))

    def apply_at(y):
        return grid.ifft(_apply_delta_hat(grid, a.degree, grid.fft(y))) * support

    x0 = np.zeros((math.comb(grid.n, deg),) + grid.shape)
    x, _, its = _cgls(apply_a, apply_at, a.components, x0, tol, max_iter)
    return x * support, its


def _lq(values: np.ndarray, q: float, grid: Grid) -> float:
    return float(np.sum(np.abs(values) ** q) * grid.cell_volume) ** (1.0 / q)


def write_dff(path, form: DiscreteForm):
    """Write a form as DFF1: magic, u32 n, ℓ, N, f64 L, then f64 values."""
    g = form.grid
    with open(path, "wb") as fh:
        fh.write(DFF_MAGIC)
        fh.write(struct.pack("<IIId", g.n, form.degree, g.N, g.L))
        fh.write(np.ascontiguousarray(form.components, dtype="<f8").tobytes())


def dff_bytes(form: DiscreteForm) -> bytes:
    g = form.grid
    head = DFF_MAGIC + struct.pack("<IIId", g.n, form.degree, g.N, g.L)
    return head + np.ascontiguousarray(form.components, dtype="<f8").tobytes()


def parse_dff(data: bytes, origin: str = "<bytes>") -> DiscreteForm:
    if data[:4] != DFF_MAGIC:
        raise ValueError(f"{origin}: not a DFF1 file")
    n, degree, N, L = struct.unpack("<IIId", data[4:24])
    grid = Grid(n, N, L)
    count = math.comb(n, degree) * N ** n
    values = np.frombuffer(data[24:], dtype="<f8")
    if values.size != count:
        raise ValueError(f"{origin}: expected {count} values, found {values.size}")
    return DiscreteForm(grid, degree, values.reshape((math.comb(n, degree),) + grid.shape).astype(float))


def read_dff(path) -> DiscreteForm:
    return parse_dff(Path(path).read_bytes(), str(path))
