"""The acceptance battery: nine property-based criteria with independent oracles."""

from __future__ import annotations

import hashlib
import json
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, replace

import numpy as np
from scipy.optimize import brentq

from . import constants as K
from .atoms import AtomTolerances, closed_atomic_decompose, nq_functional, synthesize, validate_atom
from .bmo import bmo_plus_norm, bmo_wp_norm, john_nirenberg_certificate
from .factorize import (
    bmo_factor_case1,
    bmo_factor_case2,
    divcurl_check,
    factor_atom,
    l1_factorize,
    pair_count,
    scalar_weak_factorize,
)
from .fixtures import bmo_field, case1_ball, case2_ball, closed_atom, closed_field, simple_function, \
    smooth_closed_one_form
from .grid_forms import (
    Ball,
    DiscreteForm,
    Grid,
    codifferential,
    exterior_derivative,
    hodge_split,
    kernel_part,
    random_form,
    riesz_transform,
)
from .growth import AdmissibleTriple, luxembourg_norm, power, theta
from .maximal import hardy_norm

E = math.e


@dataclass(frozen=True)
class SuiteCounts:
    """Sample sizes of the battery; the defaults are the full acceptance sizes."""

    calculus_fields: int = 20
    smoke: bool = True
    norm_balls: int = 10
    norm_fields: int = 10
    pipeline_atoms: int = 20
    nq_decompositions: int = 10
    nq_trials: int = 50
    nq_inputs: int = 5
    case_atoms: int = 20
    e2e_inputs: int = 10
    l1_trials: int = 10
    divcurl_pairs: int = 100
    divcurl_spot: int = 10
    lemma_balls: int = 50
    wide_balls: int = 10
    min_pairs: int = 20
    jn_fixtures: int = 20
    determinism: bool = True

    def reduced(self) -> "SuiteCounts":
        """Small counts used for the determinism re-runs."""
        return SuiteCounts(2, False, 2, 2, 1, 2, 3, 1, 1, 1, 1, 3, 1, 2, 1, 2, 2, False)


RUNTIME_LIMITS = {1: 10.0, 2: 30.0, 3: 300.0, 5: 600.0}
TITLES = {
    1: "exact calculus",
    2: "norm oracles",
    3: "atom pipeline",
    4: "N_q consistency",
    5: "factorization identity",
    6: "end-to-end factorization",
    7: "div-curl sweep",
    8: "BMO fixtures",
    9: "determinism",
}


@dataclass
class Check:
    value: float
    bound: float
    op: str = "<="

    @property
    def passed(self) -> bool:
        if self.op == "<=":
            return bool(self.value <= self.bound)
        if self.op == ">=":
            return bool(self.value >= self.bound)
        return bool(self.value == self.bound)

    def as_dict(self) -> dict:
        return {"value": self.value, "bound": self.bound, "op": self.op, "passed": self.passed}


@dataclass
class CriterionResult:
    number: int
    checks: dict
    info: dict = field(default_factory=dict)
    seconds: float = 0.0

    @property
    def title(self) -> str:
        return TITLES[self.number]

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks.values())

    @property
    def runtime_ok(self) -> bool:
        limit = RUNTIME_LIMITS.get(self.number)
        return limit is None or self.seconds < limit

    def as_dict(self) -> dict:
        """Deterministic part of the result (no timings)."""
        return {
            "criterion": self.number,
            "title": self.title,
            "passed": self.passed,
            "checks": {k: c.as_dict() for k, c in sorted(self.checks.items())},
            "info": self.info,
        }

    def summary(self) -> str:
        status = "PASS" if self.passed and self.runtime_ok else "FAIL"
        failed = [k for k, c in sorted(self.checks.items()) if not c.passed]
        if not self.runtime_ok:
            failed.append(f"runtime {self.seconds:.1f}s ≥ {RUNTIME_LIMITS[self.number]:.0f}s")
        tail = f" ({', '.join(failed)})" if failed else ""
        return f"criterion {self.number} [{self.title}]: {status} in {self.seconds:.1f}s{tail}"


@dataclass
class Context:
    grid: Grid
    seed: int
    counts: SuiteCounts
    jobs: int = 1
    executor: ThreadPoolExecutor | None = None

    def rngs(self, criterion: int, stream: int, count: int) -> list:
        ss = np.random.SeedSequence([self.seed, criterion, stream])
        return [np.random.default_rng(s) for s in ss.spawn(count)]

    def map(self, fn, items) -> list:
        """Ordered map, parallel when an executor is attached."""
        items = list(items)
        if self.executor is None or len(items) < 2:
            return [fn(x) for x in items]
        return list(self.executor.map(fn, items))


def _norm(a: np.ndarray) -> float:
    return math.sqrt(float(np.sum(np.asarray(a) ** 2)))


def _rel(a: np.ndarray, b: np.ndarray) -> float:
    nb = _norm(b)
    return _norm(np.asarray(a) - np.asarray(b)) / nb if nb > 0 else _norm(a)


def _max(values) -> float:
    values = list(values)
    return float(max(values)) if values else 0.0


def _min(values) -> float:
    values = list(values)
    return float(min(values)) if values else 0.0


# ---------------------------------------------------------------------------
# 1. exact calculus


def _calculus_item(grid: Grid, degree: int, rng: np.random.Generator) -> dict:
    n = grid.n
    a = random_form(grid, degree, rng, 0.5)
    out = {}
    if degree <= n - 2:
        da = exterior_derivative(a)
        out["dd"] = _norm(exterior_derivative(da).components) / _norm(da.components)
    if degree >= 2:
        da = codifferential(a)
        out["deltadelta"] = _norm(codifferential(da).components) / _norm(da.components)
    if degree < n:
        b = random_form(grid, degree + 1, rng, 0.5)
        da, db = exterior_derivative(a), codifferential(b)
        lhs, rhs = da.inner(b), a.inner(db)
        out["adjoint"] = abs(lhs - rhs) / (da.norm() * b.norm() + a.norm() * db.norm())
    if degree == 0:
        f = (a - kernel_part(a)).components[0]
        total = sum(riesz_transform(j, riesz_transform(j, f, grid), grid) for j in range(n))
        out["riesz"] = _norm(total + f) / _norm(f)
    closed, coclosed, harm = hodge_split(a)
    out["hodge"] = _rel(closed.components + coclosed.components + harm.components, a.components)
    parts = [closed] if degree < n else []
    out["hodge_closed"] = _max(_norm(exterior_derivative(p).components) / max(a.norm(), 1e-300) for p in parts)
    parts = [coclosed] if degree > 0 else []
    out["hodge_coclosed"] = _max(_norm(codifferential(p).components) / max(a.norm(), 1e-300) for p in parts)
    return out


def criterion_calculus(ctx: Context) -> CriterionResult:
    grids = [ctx.grid]
    if ctx.counts.smoke and ctx.grid.n != 3:
        grids.append(Grid(3, 32, ctx.grid.L))
    worst: dict = {}
    stream = 0
    for grid in grids:
        for degree in range(grid.n + 1):
            rngs = ctx.rngs(1, stream, ctx.counts.calculus_fields)
            stream += 1
            for item in ctx.map(lambda r, g=grid, d=degree: _calculus_item(g, d, r), rngs):
                for k, v in item.items():
                    worst[k] = max(worst.get(k, 0.0), v)
    checks = {f"max_{k}": Check(v, 1e-10) for k, v in sorted(worst.items())}
    return CriterionResult(1, checks, {"grids": [g.spec() for g in grids]})


# ---------------------------------------------------------------------------
# 2. Luxembourg norms against closed forms and a λ-scan oracle


def _theta_values(r, t):
    return t / (np.log(E + r) + np.log(E + t))


def theta_oracle(values: np.ndarray, radii: np.ndarray, cell_volume: float) -> float:
    """Luxembourg norm for θ by a dense logarithmic λ scan followed by brentq."""
    v = np.abs(values).ravel()
    r = np.broadcast_to(radii, values.shape).ravel()
    keep = v > 0
    v, r = v[keep], r[keep]
    if v.size == 0:
        return 0.0

    def excess(lam):
        return float(np.sum(_theta_values(r, v / lam))) * cell_volume - 1.0

    scale = float(v.max())
    lams = scale * np.logspace(-12, 12, 2401)
    signs = np.array([excess(x) > 0 for x in lams])
    idx = int(np.nonzero(signs[:-1] & ~signs[1:])[0][0])
    return brentq(excess, lams[idx], lams[idx + 1], xtol=1e-15 * scale, rtol=1e-13)


def _norm_item(grid: Grid, rng: np.random.Generator) -> dict:
    r = float(rng.uniform(3 * grid.h, grid.L / 2))
    reach = grid.L - r
    ball = Ball(tuple(rng.uniform(-reach, reach, grid.n)), r)
    p = float(rng.uniform(0.3, 1.0))
    chi = ball.mask(grid).astype(float)
    vol = float(np.count_nonzero(chi)) * grid.cell_volume
    got = luxembourg_norm(power(p), chi, grid)
    out = {"power_closed_form": abs(got / vol ** (1.0 / p) - 1.0)}
    amp = float(np.exp(rng.uniform(-4, 4)))
    kind = int(rng.integers(2))
    f = amp * chi if kind == 0 else amp * random_form(grid, 0, rng, 0.1).components[0]
    got = luxembourg_norm(theta(), f, grid)
    out["theta_oracle"] = abs(got / theta_oracle(f, grid.radius, grid.cell_volume) - 1.0)
    return out


def criterion_norms(ctx: Context) -> CriterionResult:
    count = max(ctx.counts.norm_balls, ctx.counts.norm_fields)
    items = ctx.map(lambda r: _norm_item(ctx.grid, r), ctx.rngs(2, 0, count))
    checks = {
        "max_power_closed_form": Check(_max(i["power_closed_form"] for i in items), 1e-6),
        "max_theta_oracle": Check(_max(i["theta_oracle"] for i in items), 1e-6),
    }
    return CriterionResult(2, checks, {"cases": count})


# ---------------------------------------------------------------------------
# 3. atom pipeline


def _pipeline_item(grid: Grid, degree: int, rng: np.random.Generator) -> dict:
    atom = closed_atom(grid, rng, degree)
    rep = validate_atom(atom)
    dec = closed_atomic_decompose(atom.form)
    recon = synthesize(dec.pairs())
    strict = AtomTolerances()
    reports = [validate_atom(a, strict, clip=True) for a in dec.atoms]
    return {
        "input_valid": rep.passed,
        "roundtrip": _rel(recon.components, atom.form.components),
        "d_residual": _max(r.d_residual for r in reports),
        "emitted_valid": all(r.passed for r in reports),
        "size": _max(r.size_ratio for r in reports),
        "leak": _max(r.support_leak for r in reports),
        "atoms": len(dec.atoms),
        "remainder_fraction": dec.remainder_fraction,
        "tent_ratio": dec.tent_value / dec.tent_norm_value if dec.tent_norm_value > 0 else 0.0,
    }


def criterion_pipeline(ctx: Context) -> CriterionResult:
    count = ctx.counts.pipeline_atoms
    rngs = ctx.rngs(3, 0, count)
    items = ctx.map(lambda ir: _pipeline_item(ctx.grid, 1 + ir[0] % ctx.grid.n, ir[1]), enumerate(rngs))
    checks = {
        "inputs_valid": Check(sum(i["input_valid"] for i in items), count, "=="),
        "max_roundtrip_error": Check(_max(i["roundtrip"] for i in items), 1e-3),
        "max_emitted_d_residual": Check(_max(i["d_residual"] for i in items), 1e-10),
        "emitted_valid": Check(sum(i["emitted_valid"] for i in items), count, "=="),
        "max_tent_weight_ratio": Check(_max(i["tent_ratio"] for i in items), K.TENT_WEIGHT_C),
    }
    info = {
        "atoms_emitted": [i["atoms"] for i in items],
        "max_size_ratio": _max(i["size"] for i in items),
        "max_leak": _max(i["leak"] for i in items),
        "remainder_fraction_range": [_min(i["remainder_fraction"] for i in items),
                                     _max(i["remainder_fraction"] for i in items)],
    }
    return CriterionResult(3, checks, info)


# ---------------------------------------------------------------------------
# 4. N_q consistency


def _random_decomposition(grid: Grid, rng: np.random.Generator, count: int) -> list:
    out = []
    for _ in range(count):
        atom = closed_atom(grid, rng, grid.n)
        out.append((float(np.exp(rng.uniform(-2, 2))) * float(rng.choice([-1, 1])), atom))
    return out


def _theta_sizes_oracle(decomp, K_levels: int = 20) -> list:
    """(radii, size) per atom with the L^q_θ ball size recomputed from the definition."""
    out = []
    for lam, atom in decomp:
        grid, ball, q = atom.grid, atom.ball, atom.triple.q
        mask = ball.mask(grid)
        r = grid.radius[mask]
        fq = atom.form.pointwise_norm()[mask] ** q
        best = 0.0
        for k in range(-K_levels, K_levels + 1):
            w = _theta_values(r, 2.0 ** k)
            best = max(best, float(np.sum(w * fq) / np.sum(w)))
        out.append((r, abs(lam) * best ** (1.0 / q)))
    return out


def nq_theta_oracle(decomp) -> float:
    terms = _theta_sizes_oracle(decomp)
    dv = decomp[0][1].grid.cell_volume

    def excess(lam):
        return sum(float(np.sum(_theta_values(r, s / lam))) for r, s in terms) * dv - 1.0

    scale = max(s for _, s in terms)
    lams = scale * np.logspace(-12, 12, 2401)
    signs = np.array([excess(x) > 0 for x in lams])
    idx = int(np.nonzero(signs[:-1] & ~signs[1:])[0][0])
    return brentq(excess, lams[idx], lams[idx + 1], xtol=1e-15 * scale, rtol=1e-13)


def nq_power_one(decomp) -> float:
    """Closed form for ℘ = t: Σ|λ_j| |B_j|^{1-1/q} ‖𝔞_j‖_{L^q(B_j)}."""
    total = 0.0
    for lam, atom in decomp:
        grid, q = atom.grid, atom.triple.q
        mask = atom.ball.mask(grid)
        vol = float(np.count_nonzero(mask)) * grid.cell_volume
        lq = (float(np.sum(atom.form.pointwise_norm()[mask] ** q)) * grid.cell_volume) ** (1.0 / q)
        total += abs(lam) * vol ** (1.0 - 1.0 / q) * lq
    return total


def _nq_item(grid: Grid, rng: np.random.Generator) -> dict:
    decomp = _random_decomposition(grid, rng, int(rng.integers(2, 5)))
    t1 = AdmissibleTriple(power(1.0), 2.0, 0)
    as_t = [(lam, replace(a, triple=t1)) for lam, a in decomp]
    return {
        "power_closed_form": abs(nq_functional(as_t) / nq_power_one(as_t) - 1.0),
        "theta_oracle": abs(nq_functional(decomp) / nq_theta_oracle(decomp) - 1.0),
    }


def _synth_item(grid: Grid, rng: np.random.Generator) -> float:
    decomp = _random_decomposition(grid, rng, int(rng.integers(1, 5)))
    return hardy_norm(theta(), synthesize(decomp)) / nq_functional(decomp)


def _converse_item(grid: Grid, rng: np.random.Generator) -> float:
    f = closed_field(grid, rng, grid.n)
    f = f / hardy_norm(theta(), f)
    return closed_atomic_decompose(f).nq_value


def criterion_nq(ctx: Context) -> CriterionResult:
    c = ctx.counts
    items = ctx.map(lambda r: _nq_item(ctx.grid, r), ctx.rngs(4, 0, c.nq_decompositions))
    ratios = ctx.map(lambda r: _synth_item(ctx.grid, r), ctx.rngs(4, 1, c.nq_trials))
    conv = ctx.map(lambda r: _converse_item(ctx.grid, r), ctx.rngs(4, 2, c.nq_inputs))
    checks = {
        "max_power_closed_form": Check(_max(i["power_closed_form"] for i in items), 1e-6),
        "max_theta_oracle": Check(_max(i["theta_oracle"] for i in items), 1e-6),
        "synth_ratio_min": Check(_min(ratios), K.SYNTH_RATIO_LOW, ">="),
        "synth_ratio_max": Check(_max(ratios), K.SYNTH_RATIO_HIGH),
        "converse_nq_min": Check(_min(conv), K.NQ_BRACKET_LOW, ">="),
        "converse_nq_max": Check(_max(conv), K.NQ_BRACKET_HIGH),
    }
    return CriterionResult(4, checks, {"trials": len(ratios), "decompositions": len(items), "inputs": len(conv)})


# ---------------------------------------------------------------------------
# 5. factorization identity on single atoms


def _closed_residual(w: DiscreteForm) -> float:
    wn = _norm(w.components)
    if wn == 0 or w.degree == w.grid.n:
        return 0.0
    return _norm(exterior_derivative(w).components) / wn


def _factor_item(grid: Grid, case: str, rng: np.random.Generator, ell: int = 1, m: int = 1) -> dict:
    ball = case1_ball(grid, rng) if case == "I" else case2_ball(grid, rng)
    # poly10 atoms; the known primitive is dropped so the primitive solver is exercised
    atom = replace(closed_atom(grid, rng, ell + m, ball=ball, shape="exact"), primitive=None)
    fac = factor_atom(atom, ell, m)
    closed = _max(max(_closed_residual(p.u), _closed_residual(p.v)) for p in fac.pairs)
    return {
        "residual": fac.residual,
        "pairs": len(fac.pairs),
        "expected": pair_count(grid.n, ell, m),
        "closed": closed,
        "norm_sum": float(sum(p.norm_product for p in fac.pairs)),
        "case": fac.case.tag,
    }


def criterion_factor(ctx: Context) -> CriterionResult:
    c = ctx.counts
    items = []
    for s, case in enumerate(("I", "II")):
        items += ctx.map(lambda r, cs=case: _factor_item(ctx.grid, cs, r), ctx.rngs(5, s, c.case_atoms))
    if c.smoke:
        g3 = Grid(3, 32, ctx.grid.L)
        for s, (ell, m) in enumerate(((1, 1), (1, 2), (2, 1))):
            items += [_factor_item(g3, "II", r, ell, m) for r in ctx.rngs(5, 10 + s, 1)]
    checks = {
        "max_atom_residual": Check(_max(i["residual"] for i in items), 1e-6),
        "pair_count_mismatches": Check(sum(i["pairs"] != i["expected"] for i in items), 0, "=="),
        "max_closed_residual": Check(_max(i["closed"] for i in items), 1e-10),
        "max_atom_norm_sum": Check(_max(i["norm_sum"] for i in items), K.ATOM_NORM_SUM_C),
        "case_tags_ok": Check(sum(i["case"] == ("I" if k < c.case_atoms else "II") for k, i in enumerate(items)),
                              len(items), "=="),
    }
    info = {"atoms": len(items), "pair_counts": sorted({i["pairs"] for i in items})}
    return CriterionResult(5, checks, info)


# ---------------------------------------------------------------------------
# 6. end to end


def _e2e_item(grid: Grid, rng: np.random.Generator) -> dict:
    f = closed_field(grid, rng, grid.n)
    sf = scalar_weak_factorize(f)
    fac = sf.factorization
    return {
        "weak_recon": fac.reconstruction_error,
        "scalar_recon": sf.reconstruction_error,
        "atom_residual": max(fac.atom_residuals, default=0.0),
        "ratio": fac.ratio,
        "div": sf.div_residual,
        "curl": sf.curl_residual,
        "pairs": len(fac.pairs),
        "products_per_atom": sf.max_products_per_atom,
    }


def _l1_item(grid: Grid, rng: np.random.Generator) -> dict:
    lf = l1_factorize(simple_function(grid, rng, 5), grid)
    return {"ratio": lf.ratio, "recon": lf.reconstruction_error}


def criterion_e2e(ctx: Context) -> CriterionResult:
    c = ctx.counts
    items = ctx.map(lambda r: _e2e_item(ctx.grid, r), ctx.rngs(6, 0, c.e2e_inputs))
    l1 = [_l1_item(ctx.grid, r) for r in ctx.rngs(6, 1, c.l1_trials)]
    checks = {
        "max_weak_reconstruction": Check(_max(i["weak_recon"] for i in items), 1e-3),
        "max_scalar_reconstruction": Check(_max(i["scalar_recon"] for i in items), 1e-3),
        "max_atom_residual": Check(_max(i["atom_residual"] for i in items), 1e-6),
        "max_norm_sum_ratio": Check(_max(i["ratio"] for i in items), K.FACTOR_RATIO_C),
        "max_div_residual": Check(_max(i["div"] for i in items), 1e-10),
        "max_curl_residual": Check(_max(i["curl"] for i in items), 1e-10),
        "max_l1_ratio": Check(_max(i["ratio"] for i in l1), K.L1_RATIO_C),
        "max_l1_reconstruction": Check(_max(i["recon"] for i in l1), 1e-12),
    }
    info = {"pairs": [i["pairs"] for i in items], "max_products_per_atom": _max(i["products_per_atom"] for i in items)}
    return CriterionResult(6, checks, info)


# ---------------------------------------------------------------------------
# 7. div-curl sweep


def divcurl_pair(grid: Grid, seed: int) -> tuple:
    """A closed pair (u, v) drawn from `seed`; the draw does not depend on the resolution."""
    rng = np.random.default_rng(seed)
    u = closed_atom(grid, rng, 1, shape="exact").form
    kind = int(rng.integers(3))
    if kind == 2:
        return u, smooth_closed_one_form(grid, rng)
    values, meta = bmo_field(grid, rng, "case1" if kind == 0 else "case2")
    comps = np.zeros((grid.n,) + grid.shape)
    comps[meta["axis"]] = values
    return u, DiscreteForm(grid, 1, comps)


def criterion_divcurl(ctx: Context) -> CriterionResult:
    c = ctx.counts
    seeds = [int(s.generate_state(1)[0]) for s in np.random.SeedSequence([ctx.seed, 7]).spawn(c.divcurl_pairs)]
    reports = ctx.map(lambda s: divcurl_check(*divcurl_pair(ctx.grid, s)), seeds)
    ratios = [r.ratio for r in reports]
    fine = Grid(ctx.grid.n, 2 * ctx.grid.N, ctx.grid.L)
    spot = seeds[: c.divcurl_spot]
    fine_ratios = ctx.map(lambda s: divcurl_check(*divcurl_pair(fine, s)).ratio, spot)
    coarse_max = _max(ratios[: len(spot)])
    fine_max = _max(fine_ratios)
    checks = {
        "all_finite": Check(sum(math.isfinite(x) for x in ratios), len(ratios), "=="),
        "max_ratio": Check(_max(ratios), K.DIVCURL_RATIO_C),
        "refinement_drift": Check(abs(fine_max / coarse_max - 1.0) if coarse_max > 0 else 0.0, 0.2),
        "max_product_d_residual": Check(_max(r.d_residual for r in reports), 1e-10),
    }
    info = {"pairs": len(ratios), "spot_max_coarse": coarse_max, "spot_max_fine": fine_max}
    return CriterionResult(7, checks, info)


# ---------------------------------------------------------------------------
# 8. BMO fixtures


def _lemma_item(grid: Grid, rng: np.random.Generator) -> list:
    ball = case1_ball(grid, rng)
    out = []
    for axis in range(grid.n):
        g1, gamma = bmo_factor_case1(ball, axis, grid)
        c = ball.center[axis]
        slab = np.abs(grid.axis - c) < ball.radius
        shape = [1] * grid.n
        shape[axis] = grid.N
        G = np.broadcast_to(g1.reshape(shape), grid.shape)
        comps = np.zeros((grid.n,) + grid.shape)
        comps[axis] = G
        v = DiscreteForm(grid, 1, comps)
        out.append({
            "constancy": float(np.max(np.abs(g1[slab] - gamma))),
            "closed": _closed_residual(v),
            "lower": (math.log(E + abs(c)) + abs(math.log(ball.radius))) / gamma,
            "bmo_plus": bmo_plus_norm(G, grid=grid),
            "branch": "5.1" if 1.0 / ball.radius <= abs(c) / 2.0 else "5.2",
        })
    return out


def _min_item(grid: Grid, rng: np.random.Generator) -> float:
    g1, _ = bmo_field(grid, rng)
    g2, _ = bmo_field(grid, rng)
    return bmo_plus_norm(np.minimum(g1, g2), grid=grid) / max(bmo_plus_norm(g1, grid=grid),
                                                              bmo_plus_norm(g2, grid=grid))


def _jn_item(grid: Grid, rng: np.random.Generator) -> float:
    g, _ = bmo_field(grid, rng)
    gf = theta()
    wp = bmo_wp_norm(g, gf, grid=grid)
    return john_nirenberg_certificate(g, gf, 2.0, grid=grid) / wp ** 2 if wp > 0 else 0.0


def criterion_bmo(ctx: Context) -> CriterionResult:
    c = ctx.counts
    wide = Grid(ctx.grid.n, 2 * ctx.grid.N, 2 * ctx.grid.L)
    items = [x for xs in ctx.map(lambda r: _lemma_item(ctx.grid, r), ctx.rngs(8, 0, c.lemma_balls)) for x in xs]
    items += [x for xs in ctx.map(lambda r: _lemma_item(wide, r), ctx.rngs(8, 1, c.wide_balls)) for x in xs]
    mins = ctx.map(lambda r: _min_item(ctx.grid, r), ctx.rngs(8, 2, c.min_pairs))
    jn = ctx.map(lambda r: _jn_item(ctx.grid, r), ctx.rngs(8, 3, c.jn_fixtures))
    checks = {
        "max_constancy_defect": Check(_max(i["constancy"] for i in items), 0.0, "<="),
        "max_closed_residual": Check(_max(i["closed"] for i in items), 1e-10),
        "max_lower_bound_ratio": Check(_max(i["lower"] for i in items), K.LEMMA51_LOWER_C),
        "max_bmo_plus": Check(_max(i["bmo_plus"] for i in items), K.LEMMA51_BMO_C),
        "max_min_ratio": Check(_max(mins), K.MIN_BMO_C),
        "max_jn_ratio": Check(_max(jn), K.JN_RATIO_C),
    }
    info = {
        "axes_checked": len(items),
        "branches": {b: sum(i["branch"] == b for i in items) for b in ("5.1", "5.2")},
        "wide_grid": wide.spec(),
    }
    return CriterionResult(8, checks, info)


# ---------------------------------------------------------------------------
# 9. determinism and the driver

CRITERIA = {
    1: criterion_calculus,
    2: criterion_norms,
    3: criterion_pipeline,
    4: criterion_nq,
    5: criterion_factor,
    6: criterion_e2e,
    7: criterion_divcurl,
    8: criterion_bmo,
}


def report_bytes(results, grid: Grid, seed: int, counts: SuiteCounts) -> bytes:
    doc = {
        "command": "suite",
        "grid": grid.spec(),
        "seed": seed,
        "counts": asdict(counts),
        "criteria": [r.as_dict() for r in results],
        "passed": all(r.passed for r in results),
    }
    return json.dumps(doc, indent=2, sort_keys=True).encode()


def criterion_determinism(ctx: Context) -> CriterionResult:
    small = ctx.counts.reduced()
    digests = []
    for jobs in (1, max(2, ctx.jobs), 1):
        results = run_suite(ctx.grid, ctx.seed, small, jobs=jobs, select=tuple(CRITERIA))
        digests.append(hashlib.sha256(report_bytes(results, ctx.grid, ctx.seed, small)).hexdigest())
    distinct = len(set(digests))
    checks = {"distinct_reports": Check(distinct, 1, "==")}
    return CriterionResult(9, checks, {"runs": 3, "jobs": [1, max(2, ctx.jobs), 1], "sha256": digests[0]})


def run_suite(grid: Grid, seed: int = 0, counts: SuiteCounts = SuiteCounts(), jobs: int = 1,
              select=tuple(range(1, 10)), progress=None) -> list:
    """Run the selected criteria in order; `progress` is called with each finished result."""
    results = []
    with ThreadPoolExecutor(max_workers=jobs) if jobs > 1 else _nullpool() as pool:
        ctx = Context(grid, seed, counts, jobs, pool)
        for number in select:
            if number == 9 and not counts.determinism:
                continue
            fn = criterion_determinism if number == 9 else CRITERIA[number]
            start = time.perf_counter()
            res = fn(ctx)
            res.seconds = time.perf_counter() - start
            results.append(res)
            if progress is not None:
                progress(res)
    return results


class _nullpool:
    def __enter__(self):
        return None

    def __exit__(self, *exc):
        return False
