import math
from dataclasses import replace

import numpy as np
import pytest

from mohardy.constants import ATOM_NORM_SUM_C, LEMMA51_BMO_C
from mohardy.bmo import bmo_plus_norm
from mohardy.errors import DomainError, NotClosedError
from mohardy.factorize import (
    BallCase,
    GridCube,
    bmo_factor_case1,
    bmo_factor_case2,
    divcurl_check,
    factor_atom,
    factor_atom_case1,
    factor_atom_case2,
    l1_factorize,
    pair_count,
    scalar_weak_factorize,
    weak_factorize,
)
from mohardy.fixtures import case1_ball, closed_atom, closed_field, smooth_closed_one_form
from mohardy.grid_forms import Ball, DiscreteForm, Grid, exterior_derivative, random_form, wedge

E = math.e


def test_case1_factor_far_ball():
    grid = Grid(2, 256, 16.0)
    ball = Ball((10.0, 10.0), 0.5)
    G, gamma = bmo_factor_case1(ball, 0, grid)
    assert gamma == pytest.approx(math.log(E + 10), rel=1e-15)
    assert gamma == pytest.approx(2.54304, abs=1e-5)
    np.testing.assert_allclose(G, np.minimum(np.log(E + 2 * np.abs(grid.axis)), gamma))


def test_case1_factor_near_ball(grid):
    ball = Ball((1.0, 1.0), 0.125)
    G, gamma = bmo_factor_case1(ball, 1, grid)
    assert gamma == pytest.approx(math.log(E + 8), rel=1e-15)
    assert gamma == pytest.approx(2.37195, abs=1e-5)
    slab = np.abs(grid.axis - 1.0) < 0.125
    assert np.ptp(G[slab]) == 0.0 and G[slab][0] == gamma
    assert bmo_plus_norm(np.broadcast_to(G[None, :], grid.shape).copy(), grid=grid) <= LEMMA51_BMO_C


def test_case1_factor_rejects_case2(grid):
    with pytest.raises(DomainError, match="case II"):
        bmo_factor_case1(Ball((0.0, 0.0), 2.0), 0, grid)


def test_case2_factor(grid):
    G = bmo_factor_case2(0, grid)
    assert np.min(G) == pytest.approx(math.log(E + (grid.h / 2) ** 2))
    assert math.log(E + 0.0) == 1.0


def test_ball_case():
    assert BallCase.of(Ball((0.0, 0.0), 2.0)).tag == "II"
    assert BallCase.of(Ball((3.0, 3.0), 0.5)) == BallCase("I", ("I", "I"))
    assert BallCase.of(Ball((3.0, 0.0), 0.5)) == BallCase("I", ("I", "II"))


def test_pair_count():
    assert pair_count(3, 1, 1) == 3
    assert pair_count(2, 1, 1) == 2
    assert pair_count(3, 1, 2) == pair_count(3, 2, 1) == 3


def _check_pairs(fac, atom):
    resum = sum(p.weight * wedge(p.u, p.v).components for p in fac.pairs)
    np.testing.assert_allclose(resum, atom.form.components, atol=1e-6 * np.abs(atom.form.components).max())
    for p in fac.pairs:
        np.testing.assert_allclose(p.u.means(), 0.0, atol=1e-12)
        if p.u.degree < p.u.grid.n:
            assert np.linalg.norm(exterior_derivative(p.u).components) <= 1e-10 * np.linalg.norm(p.u.components)
        assert np.linalg.norm(exterior_derivative(p.v).components) <= 1e-10 * np.linalg.norm(p.v.components)


def test_factor_case1(grid, rng):
    atom = replace(closed_atom(grid, rng, 2, ball=case1_ball(grid, rng), shape="exact"), primitive=None)
    fac = factor_atom_case1(atom.form, atom.ball, 1, 1)
    assert fac.residual <= 1e-6
    assert len(fac.pairs) == 2
    _check_pairs(fac, atom)
    assert sum(p.norm_product for p in fac.pairs) <= ATOM_NORM_SUM_C
    # weak_factorize of a single case-I atom reduces to the same factors
    assert factor_atom(atom, 1, 1).residual <= 1e-6


def test_factor_case2(grid, rng):
    atom = replace(closed_atom(grid, rng, 2, ball=Ball((0.0, 0.0), 2.0), shape="exact"), primitive=None)
    assert BallCase.of(atom.ball).tag == "II"
    fac = factor_atom_case2(atom.form, atom.ball, 1, 1)
    assert fac.residual <= 1e-6
    _check_pairs(fac, atom)
    assert set(fac.certificates) >= {"d_psi_ratio", "psi_ratio"}
    with pytest.raises(DomainError):
        factor_atom_case2(atom.form, atom.ball, 1, 1, r=2.5)
    with pytest.raises(DomainError):
        factor_atom_case1(atom.form, atom.ball, 1, 1)


def test_factor_3d_pair_count(grid3, rng):
    atom = replace(closed_atom(grid3, rng, 2, ball=Ball((0.0, 0.0, 0.0), 1.5), shape="exact"), primitive=None)
    fac = factor_atom(atom, 1, 1)
    assert len(fac.pairs) == 3
    assert fac.residual <= 1e-6


def test_weak_factorize(grid, rng):
    f = closed_field(grid, rng, 2)
    fac = weak_factorize(f, 1)
    assert fac.reconstruction_error <= 1e-3
    assert max(fac.atom_residuals) <= 1e-6
    assert fac.norm_sum > 0 and fac.hlog_value > 0
    empty = weak_factorize(DiscreteForm.zeros(grid, 2), 1)
    assert empty.pairs == [] and empty.norm_sum == 0.0
    with pytest.raises(DomainError):
        weak_factorize(f, 1, 2)


def test_scalar_weak_factorize(grid, rng):
    atom = closed_atom(grid, rng, 2)
    out = scalar_weak_factorize(atom.form)
    assert out.max_products_per_atom <= grid.n ** 2
    assert out.div_residual <= 1e-10 and out.curl_residual <= 1e-10
    assert out.reconstruction_error <= 1e-3
    total = sum(u * v for u, v in out.scalar_pairs)
    np.testing.assert_allclose(total, atom.form.components[0], atol=1e-3 * np.abs(atom.form.components).max())


def test_l1_single_cube(grid):
    cube = GridCube((32, 32), 8)
    out = l1_factorize([(1.0, cube)], grid)
    assert len(out.pairs) == 1
    u, v = out.pairs[0]
    assert abs(u.sum()) == 0.0
    np.testing.assert_array_equal(u * v, cube.mask(grid).astype(float))
    assert out.reconstruction_error == 0.0
    assert l1_factorize([], grid).pairs == []


def test_l1_errors(grid):
    with pytest.raises(DomainError):
        l1_factorize([(1.0, GridCube((0, 0), 8)), (2.0, GridCube((4, 4), 8))], grid)
    with pytest.raises(DomainError):
        l1_factorize([(1.0, GridCube((60, 0), 8))], grid)
    with pytest.raises(DomainError):
        l1_factorize([(1.0, GridCube((0, 0), 3))], grid)


def test_divcurl(grid, rng):
    u = closed_atom(grid, rng, 1).form
    const = DiscreteForm(grid, 1, np.stack([np.full(grid.shape, 1.0), np.zeros(grid.shape)]))
    rep = divcurl_check(u, const)
    assert rep.d_residual == 0.0 and rep.ratio > 0
    zero = divcurl_check(DiscreteForm.zeros(grid, 1), smooth_closed_one_form(grid, rng))
    assert zero.hlog == 0.0 and zero.ratio == 0.0
    with pytest.raises(DomainError):
        divcurl_check(DiscreteForm.zeros(grid3 := Grid(3, 16, 4.0), 2), DiscreteForm.zeros(grid3, 2))
    with pytest.raises(NotClosedError):
        divcurl_check(random_form(grid, 1, rng), const)
