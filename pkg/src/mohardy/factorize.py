"""BMO factors per ball geometry, wedge factorization of closed atoms and the weak factorization."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .atoms import Atom, AtomicDecomposition, closed_atomic_decompose
from .bmo import bmo_plus_norm
from .errors import DomainError, NotClosedError
from .grid_forms import (
    Ball,
    DiscreteForm,
    Grid,
    exterior_derivative,
    local_primitive,
    tuples,
    wedge,
    write_dff,
)
from .growth import support_leak, theta
from .maximal import h1_norm, hlog_norm

E = math.e


@dataclass(frozen=True)
class BallCase:
    """Case tag of a ball (I when r ≤ min(1, |x_B|/2)) and per-axis tags for the projected 1-D balls."""

    tag: str
    axes: tuple

    @classmethod
    def of(cls, ball: Ball) -> "BallCase":
        r = ball.radius
        whole = "I" if r <= min(1.0, math.hypot(*ball.center) / 2.0) else "II"
        axes = tuple("I" if r <= min(1.0, abs(c) / 2.0) else "II" for c in ball.center)
        return cls(whole, axes)


def bmo_factor_case1(ball: Ball, axis: int, grid: Grid) -> tuple:
    """G_k(x_k) and its constant value γ_k on the slab |x_k - c_k| < r.

    G = min(log(e+2|s|), log(e+|c_k|)) when 1/r ≤ |c_k|/2, and
    G = min(log(e+1/|s-c_k|), log(e+1/r)) otherwise.
    """
    c = ball.center[axis]
    r = ball.radius
    if not r <= min(1.0, abs(c) / 2.0):
        raise DomainError(f"axis {axis} of {ball} is not case I (r ≤ min(1, |c_k|/2) fails); use case II")
    s = grid.axis
    if 1.0 / r <= abs(c) / 2.0:
        gamma = math.log(E + abs(c))
        g = np.minimum(np.log(E + 2.0 * np.abs(s)), gamma)
    else:
        gamma = math.log(E + 1.0 / r)
        with np.errstate(divide="ignore"):
            g = np.minimum(np.log(E + 1.0 / np.abs(s - c)), gamma)
    return g, gamma


def bmo_factor_case2(axis: int, grid: Grid) -> np.ndarray:
    """G_k(x_k) = log(e + x_k²)."""
    return np.log(E + grid.axis ** 2)


def _axis_field(g1d: np.ndarray, axis: int, grid: Grid) -> np.ndarray:
    shape = [1] * grid.n
    shape[axis] = grid.N
    return np.broadcast_to(g1d.reshape(shape), grid.shape).copy()


def pair_count(n: int, ell: int, m: int) -> int:
    """n!/((ℓ+m-1)!(n-ℓ-m+1)!)."""
    return math.comb(n, ell + m - 1)


@dataclass
class FactorPair:
    """weight·u∧v is one term; u is a normalized H¹ atom on `ball`, v = G_k dx_{I''}∧dx_k scaled."""

    u: DiscreteForm
    v: DiscreteForm
    weight: float
    axis: int
    index: tuple
    case: str
    ball: Ball
    u_h1: float = math.nan
    v_bmo_plus: float = math.nan
    u_size: float = math.nan
    u_leak: float = math.nan

    def product(self) -> DiscreteForm:
        return wedge(self.u, self.v) * self.weight

    def certify(self):
        self.u_h1 = h1_norm(self.u)
        self.v_bmo_plus = bmo_plus_norm(self.v)
        return self

    @property
    def norm_product(self) -> float:
        return abs(self.weight) * self.u_h1 * self.v_bmo_plus

    def as_dict(self) -> dict:
        return {
            "weight": self.weight,
            "axis": self.axis,
            "index": list(self.index),
            "case": self.case,
            "ball": self.ball.as_dict(),
            "u_h1": self.u_h1,
            "v_bmo_plus": self.v_bmo_plus,
            "u_size": self.u_size,
            "u_leak": self.u_leak,
        }


@dataclass
class AtomFactorization:
    pairs: list
    residual: float
    case: BallCase
    primitive_leak: float
    primitive_method: str
    certificates: dict = field(default_factory=dict)


def _lq(values: np.ndarray, q: float, grid: Grid) -> float:
    return float(np.sum(np.abs(values) ** q) * grid.cell_volume) ** (1.0 / q)


def _factor(a: DiscreteForm, ball: Ball, ell: int, m: int, g_of_axis, exponent: float,
            hint: DiscreteForm | None, weight: float, certify: bool) -> AtomFactorization:
    grid = a.grid
    n = grid.n
    if not (1 <= ell <= n - 1 and 1 <= m <= n - 1):
        raise DomainError("ℓ and m must lie in [1, n-1]")
    if a.degree != ell + m:
        raise DomainError(f"atom degree {a.degree} differs from ℓ+m = {ell + m}")
    prim = local_primitive(a, ball, hint=hint)
    phi = prim.form
    support = ball.dilate(2.0)
    vol = support.volume(grid)
    pairs = []
    total = np.zeros_like(a.components)
    for idx in tuples(n, ell + m - 1):
        k = idx[-1]
        rest = idx[:-1]
        i1, i2 = rest[: ell - 1], rest[ell - 1:]
        g_k, tag = g_of_axis(k)
        G = _axis_field(g_k, k, grid)
        inner = DiscreteForm.scalar(grid, phi.component(idx) / G, 0)
        u = exterior_derivative(inner)
        if i1:
            u = wedge(u, _basis(grid, i1))
        v = _basis(grid, tuple(i2) + (k,), G)
        scale = _lq(u.pointwise_norm(), exponent, grid) * vol ** (1.0 - 1.0 / exponent)
        if scale > 0:
            u, v = u / scale, v * scale
        pair = FactorPair(u, v, weight, k, idx, tag, support)
        pair.u_size = _lq(u.pointwise_norm(), exponent, grid) * vol ** (1.0 - 1.0 / exponent)
        pair.u_leak = support_leak(u.pointwise_norm(), support.mask(grid))
        if certify:
            pair.certify()
        total += wedge(u, v).components
        pairs.append(pair)
    norm = math.sqrt(float(np.sum(a.components ** 2)))
    residual = math.sqrt(float(np.sum((total - a.components) ** 2))) / norm if norm > 0 else 0.0
    return AtomFactorization(pairs, residual, BallCase.of(ball), prim.support_leak, prim.method,
                             {"primitive_ratio": prim.primitive_ratio, "derivative_ratio": prim.derivative_ratio})


def _basis(grid: Grid, idx: tuple, coeff: np.ndarray | None = None) -> DiscreteForm:
    """coeff·dx_idx with idx in increasing order."""
    f = DiscreteForm.zeros(grid, len(idx))
    pos = f.tuples.index(tuple(idx))
    f.components[pos] = 1.0 if coeff is None else coeff
    return f


def factor_atom_case1(a: DiscreteForm, ball: Ball, ell: int, m: int, hint: DiscreteForm | None = None,
                      q: float = 2.0, weight: float = 1.0, certify: bool = True) -> AtomFactorization:
    """Every axis must be case I; u is normalized as a q-atom of H¹ on 2B."""
    case = BallCase.of(ball)
    bad = [k for k, t in enumerate(case.axes) if t != "I"]
    if bad:
        raise DomainError(f"axes {bad} of {ball} are not case I; use factor_atom_case2 or factor_atom")

    def g_of_axis(k):
        return bmo_factor_case1(ball, k, a.grid)[0], "I"

    return _factor(a, ball, ell, m, g_of_axis, q, hint, weight, certify)


def factor_atom_case2(a: DiscreteForm, ball: Ball, ell: int, m: int, hint: DiscreteForm | None = None,
                      q: float = 2.0, r: float | None = None, weight: float = 1.0,
                      certify: bool = True) -> AtomFactorization:
    """Case II ball; G = log(e + x_k²) and u is normalized as an r-atom of H¹ with 1 < r < q."""
    r = (1.0 + q) / 2.0 if r is None else r
    if not 1.0 < r < q:
        raise DomainError(f"r={r} must lie in (1, q={q})")
    if BallCase.of(ball).tag != "II":
        raise DomainError(f"{ball} is case I; use factor_atom_case1")

    def g_of_axis(k):
        return bmo_factor_case2(k, a.grid), "II"

    out = _factor(a, ball, ell, m, g_of_axis, r, hint, weight, certify)
    out.certificates.update(_case2_bounds(a, ball, hint, q))
    return out


def _case2_bounds(a: DiscreteForm, ball: Ball, hint, q: float) -> dict:
    """‖dψ‖_q and ‖ψ‖_q against log(e+r_B)|B|^{1/q-1} and r_B·log(e+r_B)|B|^{1/q-1}."""
    grid = a.grid
    psi = local_primitive(a, ball, hint=hint).form
    bound = math.log(E + ball.radius) * ball.volume(grid) ** (1.0 / q - 1.0)
    return {
        "d_psi_ratio": _lq(a.pointwise_norm(), q, grid) / bound,
        "psi_ratio": _lq(psi.pointwise_norm(), q, grid) / (ball.radius * bound),
    }


def factor_atom(atom: Atom, ell: int, m: int, weight: float = 1.0, certify: bool = True) -> AtomFactorization:
    """Per-axis dispatch: case-I axes use the constant-on-the-slab factor, the others log(e + x_k²)."""
    a, ball = atom.form, atom.ball
    q = atom.triple.q
    case = BallCase.of(ball)
    if case.tag == "II":
        return factor_atom_case2(a, ball, ell, m, atom.primitive, q, weight=weight, certify=certify)
    if all(t == "I" for t in case.axes):
        return factor_atom_case1(a, ball, ell, m, atom.primitive, q, weight=weight, certify=certify)

    def g_of_axis(k):
        if case.axes[k] == "I":
            return bmo_factor_case1(ball, k, a.grid)[0], "I"
        return bmo_factor_case2(k, a.grid), "II"

    return _factor(a, ball, ell, m, g_of_axis, q, atom.primitive, weight, certify)


@dataclass
class Factorization:
    pairs: list
    decomposition: AtomicDecomposition | None
    atom_residuals: list
    reconstruction_error: float
    norm_sum: float
    hlog_value: float

    @property
    def ratio(self) -> float:
        return self.norm_sum / self.hlog_value if self.hlog_value > 0 else 0.0

    def certificate(self, bound: float | None = None) -> dict:
        out = {
            "pairs": [p.as_dict() for p in self.pairs],
            "pair_count": len(self.pairs),
            "atom_count": len(self.atom_residuals),
            "max_atom_residual": max(self.atom_residuals, default=0.0),
            "reconstruction_error": self.reconstruction_error,
            "norm_sum": self.norm_sum,
            "hlog_norm": self.hlog_value,
            "ratio": self.ratio,
        }
        if bound is not None:
            out["ratio_bound"] = bound
            out["within_bound"] = self.ratio <= bound
        return out

    def save(self, directory, bound: float | None = None):
        directory = Path(directory)
        (directory / "pairs").mkdir(parents=True, exist_ok=True)
        for i, p in enumerate(self.pairs):
            write_dff(directory / "pairs" / f"{i:03d}_u.dff", p.u * p.weight)
            write_dff(directory / "pairs" / f"{i:03d}_v.dff", p.v)
        (directory / "certificate.json").write_text(json.dumps(self.certificate(bound), indent=2, sort_keys=True))


def _resum(pairs, grid: Grid, degree: int) -> np.ndarray:
    total = np.zeros((math.comb(grid.n, degree),) + grid.shape)
    for p in pairs:
        total += p.weight * wedge(p.u, p.v).components
    return total


def weak_factorize(f: DiscreteForm, ell: int, m: int | None = None, ball: Ball | None = None,
                   closed_tol: float = 1e-8, mapper=map) -> Factorization:
    """f = Σ λ_j Σ u∧v over an atomic decomposition of f with ℘ = θ.

    `mapper` evaluates the per-atom factorizations (map or an ordered executor map).
    """
    grid = f.grid
    m = f.degree - ell if m is None else m
    if ell + m != f.degree:
        raise DomainError(f"ℓ + m = {ell + m} differs from the degree {f.degree}")
    norm = math.sqrt(float(np.sum(f.components ** 2)))
    if norm == 0:
        return Factorization([], None, [], 0.0, 0.0, 0.0)
    decomp = closed_atomic_decompose(f, theta(), ball=ball, closed_tol=closed_tol)
    jobs = list(zip(decomp.weights.tolist(), decomp.atoms))
    results = list(mapper(lambda job: factor_atom(job[1], ell, m, weight=job[0]), jobs))
    pairs = [p for r in results for p in r.pairs]
    total = _resum(pairs, grid, f.degree)
    err = math.sqrt(float(np.sum((total - f.components) ** 2))) / norm
    norm_sum = float(np.sum([p.norm_product for p in pairs]))
    return Factorization(pairs, decomp, [r.residual for r in results], err, norm_sum, hlog_norm(f))


# ---------------------------------------------------------------------------
# scalar corollary


def hodge_vector(u: DiscreteForm) -> np.ndarray:
    """Vector field F of an (n-1)-form with u∧v = (F·v) dx_1∧…∧dx_n for every 1-form v.

    F_i = (-1)^{n-1-i} u_{î}, where î omits index i.
    """
    grid = u.grid
    n = grid.n
    if u.degree != n - 1:
        raise DomainError("hodge_vector needs an (n-1)-form")
    out = np.zeros((n,) + grid.shape)
    for i in range(n):
        idx = tuple(j for j in range(n) if j != i)
        out[i] = (-1) ** (n - 1 - i) * u.component(idx)
    return out


def divergence(F: np.ndarray, grid: Grid) -> np.ndarray:
    return sum(grid.ifft(1j * grid.ks[i] * grid.fft(F[i])) for i in range(grid.n))


def curl_residual(G: np.ndarray, grid: Grid) -> float:
    """‖dG‖/‖G‖ for the 1-form with coefficients G."""
    norm = math.sqrt(float(np.sum(G ** 2)))
    if norm == 0:
        return 0.0
    dG = exterior_derivative(DiscreteForm(grid, 1, G)).components
    return math.sqrt(float(np.sum(dG ** 2))) / norm


@dataclass
class ScalarFactorization:
    factorization: Factorization
    vector_pairs: list
    scalar_pairs: list
    reconstruction_error: float
    div_residual: float
    curl_residual: float
    max_products_per_atom: int


def scalar_weak_factorize(f, grid: Grid | None = None, ball: Ball | None = None, mapper=map) -> ScalarFactorization:
    """f = Σ F_k·G_k with F_k div-free and G_k curl-free, and f = Σ u_k v_k as scalar products."""
    if isinstance(f, DiscreteForm):
        grid = f.grid
        values = f.components[0]
    else:
        values = np.asarray(f, dtype=float)
    if grid is None or grid.n < 2:
        raise DomainError("scalar_weak_factorize needs a grid with n ≥ 2")
    top = DiscreteForm.scalar(grid, values, grid.n)
    fact = weak_factorize(top, grid.n - 1, 1, ball=ball, mapper=mapper)
    vector_pairs, scalar_pairs = [], []
    div_res = curl_res = 0.0
    total = np.zeros(grid.shape)
    per_atom = {}
    for p in fact.pairs:
        F = hodge_vector(p.u) * p.weight
        G = p.v.components
        Fn = math.sqrt(float(np.sum(F ** 2)))
        if Fn > 0:
            div_res = max(div_res, math.sqrt(float(np.sum(divergence(F, grid) ** 2))) / Fn)
        curl_res = max(curl_res, curl_residual(G, grid))
        vector_pairs.append((F, G))
        key = p.ball
        for i in range(grid.n):
            if np.any(G[i]) and np.any(F[i]):
                scalar_pairs.append((F[i], G[i]))
                per_atom[key] = per_atom.get(key, 0) + 1
                total += F[i] * G[i]
    norm = math.sqrt(float(np.sum(values ** 2)))
    err = math.sqrt(float(np.sum((total - values) ** 2))) / norm if norm > 0 else 0.0
    return ScalarFactorization(fact, vector_pairs, scalar_pairs, err, div_res, curl_res,
                               max(per_atom.values(), default=0))


# ---------------------------------------------------------------------------
# L¹ part


@dataclass(frozen=True)
class GridCube:
    """A cube of whole cells: lower-corner cell index and side in cells."""

    corner: tuple
    side: int

    def mask(self, grid: Grid) -> np.ndarray:
        m = np.zeros(grid.shape, dtype=bool)
        m[tuple(slice(c, c + self.side) for c in self.corner)] = True
        return m


@dataclass
class L1Factorization:
    pairs: list
    norm_sum: float
    l1_norm: float
    reconstruction_error: float

    @property
    def ratio(self) -> float:
        return self.norm_sum / self.l1_norm if self.l1_norm > 0 else 0.0


def l1_factorize(terms, grid: Grid) -> L1Factorization:
    """f = Σ λ_j χ_{Q_j} written as Σ u_j v_j with u_j = |Q_j|^{-1} h_j and v_j = λ_j|Q_j| h_j.

    h_j = ±1 on the two halves of Q_j along the first axis, so h_j² = χ_{Q_j}
    and h_j has zero mean.
    """
    cover = np.zeros(grid.shape, dtype=bool)
    f = np.zeros(grid.shape)
    pairs = []
    norm_sum = 0.0
    for lam, cube in terms:
        if cube.side < 2 or cube.side % 2:
            raise DomainError("cube sides must be even cell counts")
        if any(c < 0 or c + cube.side > grid.N for c in cube.corner):
            raise DomainError(f"{cube} leaves the box")
        mask = cube.mask(grid)
        if np.any(cover & mask):
            raise DomainError("cubes overlap")
        cover |= mask
        f += lam * mask
        if lam == 0:
            continue
        h = mask.astype(float)
        half = list(slice(c, c + cube.side) for c in cube.corner)
        half[0] = slice(cube.corner[0], cube.corner[0] + cube.side // 2)
        h[tuple(half)] = -1.0
        vol = float(np.count_nonzero(mask)) * grid.cell_volume
        u = h / vol
        v = lam * vol * h
        u_h1 = h1_norm(DiscreteForm.scalar(grid, u, grid.n))
        norm_sum += u_h1 * float(np.max(np.abs(v)))
        pairs.append((u, v))
    total = sum((u * v for u, v in pairs), np.zeros(grid.shape))
    l1 = float(np.sum(np.abs(f))) * grid.cell_volume
    fn = math.sqrt(float(np.sum(f ** 2)))
    err = math.sqrt(float(np.sum((total - f) ** 2))) / fn if fn > 0 else 0.0
    return L1Factorization(pairs, norm_sum, l1, err)


# ---------------------------------------------------------------------------
# div-curl


@dataclass
class DivCurlReport:
    hlog: float
    u_h1: float
    v_bmo_plus: float
    ratio: float
    d_residual: float

    def as_dict(self) -> dict:
        return dict(self.__dict__)


def divcurl_check(u: DiscreteForm, v: DiscreteForm, closed_tol: float = 1e-10) -> DivCurlReport:
    """hlog_norm(u∧v)/(‖u‖_{H¹}‖v‖_{BMO⁺}) and the closedness of u∧v."""
    grid = u.grid
    n = grid.n
    if not (1 <= u.degree <= n - 1 and 1 <= v.degree <= n - 1):
        raise DomainError("degrees must lie in [1, n-1]")
    if u.degree + v.degree > n:
        raise DomainError(f"ℓ + m = {u.degree + v.degree} exceeds n = {n}")
    for name, w in (("u", u), ("v", v)):
        wn = math.sqrt(float(np.sum(w.components ** 2)))
        if wn > 0:
            dw = exterior_derivative(w).components
            if math.sqrt(float(np.sum(dw ** 2))) > closed_tol * wn:
                raise NotClosedError(f"{name} is not closed")
    prod = wedge(u, v)
    pn = math.sqrt(float(np.sum(prod.components ** 2)))
    d_res = 0.0
    if pn > 0 and prod.degree < n:
        d_res = math.sqrt(float(np.sum(exterior_derivative(prod).components ** 2))) / pn
    u_h1 = h1_norm(u)
    v_bmo = bmo_plus_norm(v)
    hl = hlog_norm(prod) if pn > 0 else 0.0
    denom = u_h1 * v_bmo
    ratio = hl / denom if denom > 0 else 0.0
    return DivCurlReport(hl, u_h1, v_bmo, ratio, d_res)

