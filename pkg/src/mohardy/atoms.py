"""Atoms, the 𝔑_q functional, tent-space decomposition and the closed-form pipeline."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import ndimage

from .errors import DomainError, GridMismatchError, NotClosedError
from .grid_forms import (
    Ball,
    DiscreteForm,
    Grid,
    exterior_derivative,
    kernel_part,
    read_dff,
    write_dff,
)
from .growth import (
    LEAK_TOL,
    AdmissibleTriple,
    GrowthFunction,
    _bisect,
    chi_ball_norm,
    lq_wp_ball_norm,
    luxembourg_norm,
    support_leak,
    theta,
)
from .maximal import (
    LevelGrid,
    Mollifier,
    SpaceTimeField,
    _offset_radius,
    area_function,
)

CALDERON_PROFILE = Mollifier("radial", s=1, base="poly8")
PIPELINE_PER_OCTAVE = 2
PIPELINE_MIN_CELLS = 8.0
WHITNEY_FACTOR = 0.25
REMAINDER_MARGIN = 4.0


@dataclass(frozen=True)
class AtomTolerances:
    """Pass/fail thresholds for validate_atom."""

    leak: float = LEAK_TOL
    size: float = 1.0 + 1e-6
    moment: float = 1e-8
    closed: float = 1e-10


@dataclass
class ValidationReport:
    support_leak: float
    size_ratio: float
    moment_residual: float
    d_residual: float
    failures: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.failures

    def as_dict(self) -> dict:
        return {
            "support_leak": self.support_leak,
            "size_ratio": self.size_ratio,
            "moment_residual": self.moment_residual,
            "d_residual": self.d_residual,
            "passed": self.passed,
            "failures": list(self.failures),
        }


@dataclass
class Atom:
    """A form together with its ball and admissible triple.

    `primitive`, when known, is an exact compactly supported primitive
    (d primitive = form); it is carried along to seed the primitive solver.
    """

    form: DiscreteForm
    ball: Ball
    triple: AdmissibleTriple
    closed: bool = True
    validation: ValidationReport | None = None
    primitive: DiscreteForm | None = None

    @property
    def grid(self) -> Grid:
        return self.form.grid


def poly_bump(dist: np.ndarray, radius: float, power: int = 10) -> np.ndarray:
    """(1 - (d/R)²)^p inside the ball of radius R, 0 outside."""
    x = dist / radius
    return np.where(x < 1.0, np.clip(1.0 - x * x, 0.0, None) ** power, 0.0)


def _unit_mass(b: np.ndarray) -> np.ndarray:
    return b / np.sum(b)


def _moments(form: DiscreteForm, ball: Ball, s: int) -> float:
    """max over |γ| ≤ s of |∫a (x-c)^γ| / ∫|a| |x-c|^{|γ|}, taken per component."""
    if s < 0:
        return 0.0
    grid = form.grid
    rel = [grid.coord(k) - ball.center[k] for k in range(grid.n)]
    dist = ball.distance(grid)
    worst = 0.0
    for order in range(s + 1):
        for gamma in _multi_indices(grid.n, order):
            mono = np.ones(grid.shape)
            for k, e in enumerate(gamma):
                if e:
                    mono = mono * rel[k] ** e
            for comp in form.components:
                denom = float(np.sum(np.abs(comp) * dist ** order))
                if denom > 0:
                    worst = max(worst, abs(float(np.sum(comp * mono))) / denom)
    return worst


def _multi_indices(n: int, order: int):
    if n == 1:
        yield (order,)
        return
    for first in range(order + 1):
        for rest in _multi_indices(n - 1, order - first):
            yield (first,) + rest


def _moment_vector(form: DiscreteForm, ball: Ball, s: int) -> np.ndarray:
    """Σ a_I (x-c)^γ / r^{|γ|} for every component I and every |γ| ≤ s."""
    grid = form.grid
    rel = [(grid.coord(k) - ball.center[k]) / ball.radius for k in range(grid.n)]
    out = []
    for order in range(s + 1):
        for gamma in _multi_indices(grid.n, order):
            mono = np.ones(grid.shape)
            for k, e in enumerate(gamma):
                if e:
                    mono = mono * rel[k] ** e
            out.extend(float(np.sum(comp * mono)) for comp in form.components)
    return np.asarray(out)


def _cancel_moments(primitive: DiscreteForm, profile: np.ndarray, ball: Ball, s: int) -> DiscreteForm:
    """Add Σ c·profile·(x-c)^α to each primitive component so d(primitive) has no moments through order s.

    The correction with the smallest coefficient norm is taken; moments of
    the spectral derivative are linear in the primitive, so one least-squares
    solve cancels them to roundoff.
    """
    grid = primitive.grid
    rel = [(grid.coord(k) - ball.center[k]) / ball.radius for k in range(grid.n)]
    basis = []
    for j in range(primitive.components.shape[0]):
        for order in range(s + 2):
            for alpha in _multi_indices(grid.n, order):
                comps = np.zeros_like(primitive.components)
                term = profile.copy()
                for k, e in enumerate(alpha):
                    if e:
                        term = term * rel[k] ** e
                comps[j] = term
                basis.append(DiscreteForm(grid, primitive.degree, comps))
    target = _moment_vector(exterior_derivative(primitive), ball, s)
    M = np.stack([_moment_vector(exterior_derivative(b), ball, s) for b in basis], axis=1)
    c = np.linalg.lstsq(M, -target, rcond=None)[0]
    out = primitive.components + sum(ci * b.components for ci, b in zip(c, basis))
    return DiscreteForm(grid, primitive.degree, out)


def size_ratio(form: DiscreteForm, ball: Ball, triple: AdmissibleTriple, clip: bool = False) -> float:
    """‖a‖_{L^q_℘(B)}·‖χ_B‖_{L^℘}; at most 1 for an atom."""
    grid = form.grid
    return lq_wp_ball_norm(triple, form, ball, grid, leak_tol=None, clip=clip) * chi_ball_norm(
        triple.growth, ball, grid, clip=clip
    )


def validate_atom(atom: Atom, tol: AtomTolerances = AtomTolerances(), clip: bool = False) -> ValidationReport:
    """Support leak, size ratio, moment residual and d-residual, with pass/fail flags."""
    form, ball, triple = atom.form, atom.ball, atom.triple
    grid = form.grid
    values = form.pointwise_norm()
    leak = support_leak(values, ball.mask(grid))
    ratio = size_ratio(form, ball, triple, clip=clip) if np.any(values) else 0.0
    moment = _moments(form, ball, triple.s)
    d_res = 0.0
    if atom.closed and form.degree < grid.n:
        norm = float(np.sqrt(np.sum(form.components ** 2)))
        if norm > 0:
            d_res = float(np.sqrt(np.sum(exterior_derivative(form).components ** 2))) / norm
    failures = []
    if leak > tol.leak:
        failures.append("support")
    if ratio > tol.size:
        failures.append("size")
    if moment > tol.moment:
        failures.append("moment")
    if d_res > tol.closed:
        failures.append("closed")
    report = ValidationReport(leak, ratio, moment, d_res, failures)
    atom.validation = report
    return report


def make_atom(grid: Grid, ball: Ball, triple: AdmissibleTriple, degree: int, closed: bool = True,
              rng: np.random.Generator | None = None, shape: str | None = None,
              bump_power: int = 10) -> Atom:
    """Fixture atom saturating the size bound.

    Closed atoms of degree ℓ < n are d of a bump (ℓ-1)-form whose support is
    0.85·B.  For ℓ = n the default is a zero-mean bump difference with its
    kernel modes removed; shape="exact" gives d of a bump (n-1)-form instead.
    Moment orders 1 ≤ s ≤ 2 are reached by correcting the primitive with
    bump·(x - c)^α terms chosen so that every discrete moment through order
    s cancels.  Non-closed atoms are zero-mean bump differences in every
    component.
    """
    ball.check_inside(grid)
    if not 1 <= degree <= grid.n:
        raise DomainError(f"atom degree must lie in [1, {grid.n}]")
    if ball.radius < 2.5 * grid.h:
        raise DomainError("ball too small to carry a resolved atom")
    if triple.s > 2:
        raise DomainError("fixture atoms support moment order s ≤ 2")
    if shape is None:
        shape = "difference" if (degree == grid.n or not closed) else "exact"
    rng = np.random.default_rng(0) if rng is None else rng
    dist = ball.distance(grid)
    R = 0.85 * ball.radius

    if shape == "exact":
        if not closed:
            raise DomainError("shape 'exact' is always closed")
        profile = poly_bump(dist, R, bump_power)
        ncomp = math.comb(grid.n, degree - 1)
        coeffs = rng.standard_normal(ncomp)
        coeffs = coeffs / np.linalg.norm(coeffs)
        primitive = DiscreteForm(grid, degree - 1, np.stack([c * profile for c in coeffs]))
        if triple.s >= 1:
            primitive = _cancel_moments(primitive, profile, ball, triple.s)
        form = exterior_derivative(primitive)
    elif shape == "difference":
        if triple.s > 1:
            raise DomainError("bump differences only cancel moments through order 1")
        diff = _unit_mass(poly_bump(dist, R, 4)) - _unit_mass(poly_bump(dist, 0.6 * R, 4))
        ncomp = math.comb(grid.n, degree)
        coeffs = rng.standard_normal(ncomp) if ncomp > 1 else np.ones(1)
        comps = np.stack([c * diff for c in coeffs])
        if degree < grid.n and closed:
            raise DomainError("bump differences are only closed in top degree")
        form = DiscreteForm(grid, degree, comps)
        if degree == grid.n:
            form = form - kernel_part(form)
        primitive = None
    else:
        raise DomainError(f"unknown atom shape {shape!r}")

    ratio = size_ratio(form, ball, triple)
    if not ratio > 0:
        raise DomainError("degenerate atom")
    form = form / ratio
    if primitive is not None:
        primitive = primitive / ratio
    return Atom(form, ball, triple, closed=closed, primitive=primitive)


# ---------------------------------------------------------------------------
# 𝔑_q functional and synthesis


def nq_functional(decomp, tol: float = 1e-8, K: int = 20) -> float:
    """inf{λ > 0 : Σ_j ℘(B_j, ‖λ_j 𝔞_j‖_{L^q_℘(B_j)}/λ) ≤ 1}."""
    terms = []
    for lam, atom in decomp:
        if lam == 0:
            continue
        grid = atom.grid
        size = abs(lam) * lq_wp_ball_norm(atom.triple, atom.form, atom.ball, grid, K=K, leak_tol=None, clip=True)
        if size == 0:
            continue
        r = grid.radius[atom.ball.mask(grid)]
        terms.append((atom.triple.growth, r, size, grid.cell_volume))
    if not terms:
        return 0.0

    def phi(lam):
        return sum(float(np.sum(gf.rho(r, size / lam))) * dv for gf, r, size, dv in terms)

    return _bisect(phi, max(t[2] for t in terms), tol)


def synthesize(decomp) -> DiscreteForm:
    """Σ_j λ_j 𝔞_j."""
    decomp = list(decomp)
    if not decomp:
        raise DomainError("cannot synthesize an empty decomposition without a grid")
    first = decomp[0][1].form
    total = np.zeros_like(first.components)
    for lam, atom in decomp:
        if atom.form.grid != first.grid or atom.form.degree != first.degree:
            raise GridMismatchError("atoms live on different grids or degrees")
        total += lam * atom.form.components
    return DiscreteForm(first.grid, first.degree, total)


# ---------------------------------------------------------------------------
# tent spaces


def tent_mask(ball: Ball, levels: LevelGrid, grid: Grid) -> np.ndarray:
    """Samples (y, t) with |y - x_B| + t ≤ r_B."""
    dist = ball.distance(grid)
    return np.stack([dist + t <= ball.radius * (1 + 1e-12) for t in levels.levels])


@dataclass
class TentAtom:
    field: SpaceTimeField
    ball: Ball

    def tent_leak(self) -> float:
        mag = self.field.pointwise_norm()
        return support_leak(mag, tent_mask(self.ball, self.field.levels, self.field.grid))

    def size_ratios(self, gf: GrowthFunction, ps=(2.0, math.inf), clip: bool = True) -> dict:
        """‖A‖_{T^p}·‖χ_B‖ / |B|^{1/p} for each p (at most 1 for an atom)."""
        return _tent_sizes(area_function(self.field), self.ball, self.field.grid, gf, ps, clip)


def _tent_sizes(S: np.ndarray, ball: Ball, grid: Grid, gf: GrowthFunction, ps, clip: bool) -> dict:
    vol = ball.volume(grid)
    chi = chi_ball_norm(gf, ball, grid, clip=clip)
    out = {}
    for p in ps:
        if math.isinf(p):
            norm = float(np.max(S)) if S.size else 0.0
            out["inf"] = norm * chi
        else:
            norm = float(np.sum(S ** p) * grid.cell_volume) ** (1.0 / p)
            out[f"{p:g}"] = norm * chi / vol ** (1.0 / p)
    return out


def _disc_footprint(grid: Grid, t: float) -> np.ndarray:
    """Offsets with |z| < t (always including 0), as a centered footprint."""
    r = int(math.ceil(t / grid.h))
    ax = np.arange(-r, r + 1) * grid.h
    mesh = np.meshgrid(*([ax] * grid.n), indexing="ij")
    d = np.sqrt(sum(m ** 2 for m in mesh))
    fp = d < t
    fp[(r,) * grid.n] = True
    return fp


def whitney_cubes(region: np.ndarray, max_side: int, factor: float = 0.25) -> np.ndarray:
    """Partition `region` into dyadic cubes with diam(Q) ≤ factor·dist(Q, complement).

    Returns an integer label per cell (-1 outside the region).  Larger cubes
    are taken first, cubes of equal size in lexicographic order; cells that
    admit no such cube become single-cell cubes.  The box edge counts as
    complement.
    """
    n = region.ndim
    N = region.shape[0]
    padded = np.pad(region, 1, constant_values=False)
    dist = ndimage.distance_transform_edt(padded)[(slice(1, -1),) * n]
    labels = np.full(region.shape, -1, dtype=np.int64)
    free = region.copy()
    next_label = 0
    side = 1
    while side * 2 <= max_side and N % (side * 2) == 0:
        side *= 2
    while side >= 1:
        m = N // side
        blocks = (m, side) * n
        order = tuple(range(0, 2 * n, 2)) + tuple(range(1, 2 * n, 2))
        fb = free.reshape(blocks).transpose(order).reshape((m,) * n + (-1,))
        db = dist.reshape(blocks).transpose(order).reshape((m,) * n + (-1,))
        ok = fb.all(axis=-1)
        if side > 1:
            ok &= side * math.sqrt(n) <= factor * (db.min(axis=-1) - 0.5)
        idx = np.argwhere(ok)
        if len(idx):
            ids = np.full((m,) * n, -1, dtype=np.int64)
            ids[tuple(idx.T)] = next_label + np.arange(len(idx))
            next_label += len(idx)
            cell_ids = np.repeat(ids, side, axis=0)
            for ax in range(1, n):
                cell_ids = np.repeat(cell_ids, side, axis=ax)
            newly = cell_ids >= 0
            labels[newly] = cell_ids[newly]
            free &= ~newly
        side //= 2
    return labels


def enclosing_tent_ball(active: np.ndarray, levels: LevelGrid, grid: Grid) -> Ball:
    """Smallest-radius ball, centered at the bounding-box center, whose tent holds `active`."""
    pts = np.argwhere(active)
    coords = grid.axis[pts[:, 1:]]
    lo, hi = coords.min(axis=0), coords.max(axis=0)
    center = (lo + hi) / 2.0
    t = np.asarray(levels.levels)[pts[:, 0]]
    r = float(np.max(np.sqrt(np.sum((coords - center) ** 2, axis=1)) + t))
    return Ball(tuple(center), r * (1 + 1e-9))


def tent_functional(pieces, gf: GrowthFunction, grid: Grid, tol: float = 1e-8) -> float:
    """inf{λ : Σ_j ℘(B_j, |λ_j| / (λ‖χ_{B_j}‖)) ≤ 1}."""
    terms = []
    for lam, A in pieces:
        if lam == 0:
            continue
        r = grid.radius[A.ball.mask(grid)]
        terms.append((r, abs(lam) / chi_ball_norm(gf, A.ball, grid, clip=True)))
    if not terms:
        return 0.0

    def phi(lam):
        return sum(float(np.sum(gf.rho(r, c / lam))) for r, c in terms) * grid.cell_volume

    return _bisect(phi, max(c for _, c in terms), tol)


def tent_decompose(F: SpaceTimeField, gf: GrowthFunction, allow_single: bool = True,
                   max_cube: int | None = None, whitney_factor: float = WHITNEY_FACTOR):
    """Stopping-time decomposition F = Σ λ_j A_j into (℘,∞) tent atoms.

    Each sample (y, t) goes to the largest k with S(F) > 2^k on the whole
    cone base {|x - y| < t}, and then to the Whitney cube of O_k = {S > 2^k}
    containing y.  The pieces partition the support of F exactly.  Each ball
    is centered on its cube with the smallest radius whose tent holds the
    piece, and λ_j = ‖χ_B‖·sup S(piece), which makes A_j a (℘,p)-atom for
    every p.
    """
    grid = F.grid
    mag = F.pointwise_norm()
    active = mag > 0
    if not active.any():
        return []
    S = area_function(F)
    if not np.all(np.isfinite(S)):
        raise DomainError("area function has non-finite samples")

    if allow_single:
        ball = enclosing_tent_ball(active, F.levels, grid)
        if not ball.wraps(grid):
            sizes = _tent_sizes(S, ball, grid, gf, (math.inf,), clip=False)
            if sizes["inf"] <= 1.0 + 1e-12:
                lam = sizes["inf"]
                return [(lam, TentAtom(F * (1.0 / lam), ball))]

    max_cube = grid.N // 8 if max_cube is None else max_cube
    kidx = np.full(mag.shape, np.iinfo(np.int64).min, dtype=np.int64)
    for i, t in enumerate(F.levels.levels):
        if not active[i].any():
            continue
        low = ndimage.minimum_filter(S, footprint=_disc_footprint(grid, t), mode="wrap")
        with np.errstate(divide="ignore"):
            k = np.ceil(np.log2(np.where(low > 0, low, np.nan))) - 1
        sel = active[i] & np.isfinite(k)
        if np.any(active[i] & ~np.isfinite(k)):
            raise DomainError("area function vanishes under an active sample")
        kidx[i][sel] = k[sel].astype(np.int64)

    pieces = []
    ts = np.asarray(F.levels.levels)
    for k in sorted(set(kidx[active].tolist()), reverse=True):
        region = S > 2.0 ** k
        labels = whitney_cubes(region, max_cube, whitney_factor)
        at_k = active & (kidx == k)
        lab = np.where(at_k, labels[None], -1)
        for cube in np.unique(lab[lab >= 0]):
            sel = lab == cube
            cells = np.argwhere(labels == cube)
            lo = grid.axis[cells.min(axis=0)] - grid.h / 2
            hi = grid.axis[cells.max(axis=0)] + grid.h / 2
            center = (lo + hi) / 2.0
            pts = np.argwhere(sel)
            y = grid.axis[pts[:, 1:]]
            r = float(np.max(np.sqrt(np.sum((y - center) ** 2, axis=1)) + ts[pts[:, 0]]))
            ball = Ball(tuple(center), r * (1 + 1e-9))
            values = F.values * sel[:, None]
            piece = SpaceTimeField(grid, F.degree, F.levels, values)
            sizes = _tent_sizes(area_function(piece), ball, grid, gf, (math.inf,), clip=True)
            lam = sizes["inf"]
            if lam == 0:
                continue
            pieces.append((lam, TentAtom(piece * (1.0 / lam), ball)))
    return pieces


def pi_phi(A: TentAtom, m: Mollifier = CALDERON_PROFILE, triple: AdmissibleTriple | None = None) -> Atom:
    """𝔞 = Σ_t (A(·,t) ∗ φ_t) Δlog t, an atom related to B̃ = 2B."""
    if m.unit_mass:
        raise DomainError("π_φ needs a zero-moment profile")
    F = A.field
    grid = F.grid
    out = np.zeros((F.values.shape[1],) + grid.shape)
    for i, t in enumerate(F.levels.levels):
        if np.any(F.values[i]):
            out += grid.ifft(grid.fft(F.values[i]) * m.kernel_hat(grid, t)) * F.levels.dlog
    out *= A.ball.mask(grid)
    triple = AdmissibleTriple(theta(), 2.0, max(m.moment_order, 0)) if triple is None else triple
    return Atom(DiscreteForm(grid, F.degree, out), A.ball.dilate(2.0), triple, closed=False)


# ---------------------------------------------------------------------------
# closed-form pipeline


@dataclass
class AtomicDecomposition:
    atoms: list
    weights: np.ndarray
    nq_value: float
    reconstruction_error: float
    calderon_constant: float = 1.0
    remainder_fraction: float = 0.0
    remainder_index: int | None = None
    levels: tuple = ()
    tent_value: float = 0.0
    tent_norm_value: float = 0.0
    pieces_dropped: int = 0

    def pairs(self):
        return list(zip(self.weights.tolist(), self.atoms))

    def manifest(self) -> dict:
        return {
            "nq_value": self.nq_value,
            "reconstruction_error": self.reconstruction_error,
            "calderon_constant": self.calderon_constant,
            "remainder_fraction": self.remainder_fraction,
            "remainder_index": self.remainder_index,
            "levels": list(self.levels),
            "tent_functional": self.tent_value,
            "tent_norm": self.tent_norm_value,
            "pieces_dropped": self.pieces_dropped,
            "atoms": [
                {
                    "file": f"atom_{i:03d}.dff",
                    "weight": float(w),
                    "ball": a.ball.as_dict(),
                    "q": a.triple.q,
                    "s": a.triple.s,
                    "validation": a.validation.as_dict() if a.validation else None,
                }
                for i, (w, a) in enumerate(zip(self.weights, self.atoms))
            ],
        }

    def save(self, directory):
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        for i, a in enumerate(self.atoms):
            write_dff(directory / f"atom_{i:03d}.dff", a.form)
        (directory / "manifest.json").write_text(json.dumps(self.manifest(), indent=2, sort_keys=True))


def load_decomposition(directory, triple: AdmissibleTriple | None = None) -> AtomicDecomposition:
    directory = Path(directory)
    man = json.loads((directory / "manifest.json").read_text())
    atoms, weights = [], []
    for entry in man["atoms"]:
        form = read_dff(directory / entry["file"])
        tr = triple or AdmissibleTriple(theta(), entry["q"], entry["s"])
        atoms.append(Atom(form, Ball(entry["ball"]["center"], entry["ball"]["radius"]), tr))
        weights.append(entry["weight"])
    return AtomicDecomposition(atoms, np.asarray(weights), man["nq_value"], man["reconstruction_error"],
                               man["calderon_constant"], man["remainder_fraction"], man["remainder_index"],
                               tuple(man["levels"]), man["tent_functional"], man["tent_norm"],
                               man["pieces_dropped"])


def support_ball(f: DiscreteForm, leak: float = 2e-3) -> Ball:
    """Ball around the |f|²-centroid holding all but `leak` of the relative L² mass."""
    grid = f.grid
    w = np.sum(f.components ** 2, axis=0)
    total = float(np.sum(w))
    if total == 0:
        raise DomainError("zero field has no support ball")
    center = tuple(float(np.sum(w * grid.coord(k)) / total) for k in range(grid.n))
    d = Ball(center, 1.0).distance(grid).ravel()
    order = np.argsort(d, kind="stable")
    tail = np.cumsum(w.ravel()[order][::-1])[::-1] / total
    idx = int(np.searchsorted(-tail, -(leak ** 2)))
    radius = float(d[order][min(idx, len(order) - 1)]) + grid.h / 2.0
    return Ball(center, radius)


def calderon_multiplier(grid: Grid, levels: LevelGrid, m: Mollifier) -> np.ndarray:
    """Σ_t Δlog t · t²|k|²φ̂_t(k)² on the half spectrum."""
    total = np.zeros(grid.k2.shape)
    for t in levels.levels:
        total += levels.dlog * t * t * grid.k2 * np.abs(m.kernel_hat(grid, t)) ** 2
    return total


def calderon_constant(f: DiscreteForm, levels: LevelGrid, m: Mollifier) -> float:
    """Least-squares normalization c0 minimizing ‖f - c0^{-1}·(multiplier)·f‖₂."""
    grid = f.grid
    mult = calderon_multiplier(grid, levels, m)
    power = np.sum(np.abs(grid.fft(f.components)) ** 2, axis=0)
    weight = np.ones(mult.shape)
    weight[..., 1:] = 2.0
    num = float(np.sum(weight * mult * mult * power))
    den = float(np.sum(weight * mult * power))
    if den <= 0:
        return float(np.max(mult))
    return num / den


def calderon_field(f: DiscreteForm, levels: LevelGrid, m: Mollifier) -> SpaceTimeField:
    """F(x, t) = t·δ(f ∗ φ_t)."""
    from .grid_forms import _apply_delta_hat

    grid = f.grid
    fh = _apply_delta_hat(grid, f.degree, grid.fft(f.components))
    vals = np.stack([t * grid.ifft(fh * m.kernel_hat(grid, t)) for t in levels.levels])
    return SpaceTimeField(grid, f.degree - 1, levels, vals)


def calderon_primitive(F: SpaceTimeField, m: Mollifier, c0: float) -> np.ndarray:
    """η = c0^{-1} Σ_t Δlog t · t·F(·,t) ∗ φ_t, so that d η is the synthesized form."""
    grid = F.grid
    out = np.zeros(F.values.shape[1:])
    for i, t in enumerate(F.levels.levels):
        if np.any(F.values[i]):
            out += t * grid.ifft(grid.fft(F.values[i]) * m.kernel_hat(grid, t))
    return out * (F.levels.dlog / c0)


def pipeline_levels(grid: Grid, ball: Ball, per_octave: int = PIPELINE_PER_OCTAVE,
                    min_cells: float = PIPELINE_MIN_CELLS) -> LevelGrid | None:
    """Levels min_cells·h ≤ t ≤ t_max with 2·t_max no larger than the room between the support ball and the box edge."""
    room = min(grid.L - abs(c) for c in ball.center) - ball.radius - REMAINDER_MARGIN * grid.h
    t_cap = min(grid.L / 2.0, room / 2.0)
    t_min = min_cells * grid.h
    if t_cap < t_min:
        return None
    steps = math.floor(per_octave * math.log2(t_cap / t_min) + 1e-9)
    t_max = t_min * 2.0 ** (steps / per_octave)
    return LevelGrid.default(grid, per_octave=per_octave, t_min=t_min, t_max=t_max)


def closed_atomic_decompose(
    f: DiscreteForm,
    gf: GrowthFunction | None = None,
    m: Mollifier = CALDERON_PROFILE,
    triple: AdmissibleTriple | None = None,
    ball: Ball | None = None,
    levels: LevelGrid | None = None,
    closed_tol: float = 1e-8,
    sample_threshold: float = 1e-3,
    whitney_factor: float | None = None,
    piece_threshold: float = 1e-2,
    tol: AtomTolerances | None = None,
) -> AtomicDecomposition:
    """Atomic decomposition of a closed form through the Calderón reproducing formula.

    F(x,t) = t·δ(f∗φ_t) is split into tent atoms A_j and each is mapped to
    𝔞_j = d η_j with η_j = c0^{-1} Σ_t Δlog t · t·A_j(·,t)∗φ_t, an exact
    closed atom related to 2B_j.  Scales above the largest usable level, as
    well as negligible samples and pieces, are collected in one coarse
    remainder atom R = f - Σ λ_j 𝔞_j computed directly from f.
    """
    grid = f.grid
    gf = theta() if gf is None else gf
    triple = AdmissibleTriple(gf, 2.0, 0) if triple is None else triple
    tol = AtomTolerances(size=math.inf) if tol is None else tol
    if f.degree < 1:
        raise DomainError("closed_atomic_decompose needs degree ≥ 1")
    if m.unit_mass:
        raise DomainError("the Calderón profile must have zero mass")
    norm = math.sqrt(float(np.sum(f.components ** 2)))
    if norm == 0:
        return AtomicDecomposition([], np.zeros(0), 0.0, 0.0)
    if f.degree < grid.n:
        df = exterior_derivative(f)
        if math.sqrt(float(np.sum(df.components ** 2))) > closed_tol * norm:
            raise NotClosedError("closed_atomic_decompose input is not closed")
    if np.any(np.abs(f.means()) > closed_tol * float(np.max(np.abs(f.components)))):
        raise DomainError("closed_atomic_decompose input must have zero-mean components")

    ball = support_ball(f) if ball is None else ball
    levels = pipeline_levels(grid, ball) if levels is None else levels
    atoms, weights = [], []
    c0 = 1.0
    tent_value = tent_norm_value = 0.0
    dropped = 0
    kept = None
    if levels is not None:
        c0 = calderon_constant(f, levels, m)
        F = calderon_field(f, levels, m)
        mag = F.pointwise_norm()
        F.values *= (mag > sample_threshold * mag.max())[:, None]
        pieces = tent_decompose(F, gf, allow_single=False,
                                whitney_factor=WHITNEY_FACTOR if whitney_factor is None else whitney_factor)
        tent_norm_value = luxembourg_norm(gf, area_function(F), grid)
        tent_value = tent_functional(pieces, gf, grid)
        lam_max = max((lam for lam, _ in pieces), default=0.0)
        kept = SpaceTimeField.zeros(grid, F.degree, levels)
        for lam, A in pieces:
            if lam < piece_threshold * lam_max:
                dropped += 1
                continue
            kept.values += lam * A.field.values
            eta = calderon_primitive(A.field, m, c0) * A.ball.mask(grid)
            eta_form = DiscreteForm(grid, F.degree, eta)
            atom = Atom(exterior_derivative(eta_form), A.ball.dilate(2.0), triple, True, primitive=eta_form)
            validate_atom(atom, tol, clip=True)
            atoms.append(atom)
            weights.append(lam)

    # coarse remainder, computed from f and the kept samples as a whole
    synth = np.zeros_like(f.components)
    if kept is not None:
        eta_all = DiscreteForm(grid, f.degree - 1, calderon_primitive(kept, m, c0))
        synth = exterior_derivative(eta_all).components
    remainder = DiscreteForm(grid, f.degree, f.components - synth)
    rem_norm = math.sqrt(float(np.sum(remainder.components ** 2)))
    remainder_index = None
    if rem_norm > 1e-14 * norm:
        rball = ball.dilate(1.0) if levels is None else Ball(ball.center, ball.radius + 2.0 * levels.levels[-1]
                                                                     + REMAINDER_MARGIN * grid.h)
        ratio = size_ratio(remainder, rball, triple, clip=True)
        atom = Atom(remainder / ratio, rball, triple, True)
        validate_atom(atom, tol, clip=True)
        remainder_index = len(atoms)
        atoms.append(atom)
        weights.append(ratio)

    weights = np.asarray(weights, dtype=float)
    decomp = list(zip(weights.tolist(), atoms))
    recon = synthesize(decomp) if decomp else DiscreteForm.zeros(grid, f.degree)
    err = math.sqrt(float(np.sum((recon.components - f.components) ** 2))) / norm
    return AtomicDecomposition(
        atoms=atoms,
        weights=weights,
        nq_value=nq_functional(decomp),
        reconstruction_error=err,
        calderon_constant=c0,
        remainder_fraction=rem_norm / norm,
        remainder_index=remainder_index,
        levels=tuple(levels.levels) if levels is not None else (),
        tent_value=tent_value,
        tent_norm_value=tent_norm_value,
        pieces_dropped=dropped,
    )
