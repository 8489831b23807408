import math

import numpy as np
import pytest

from mohardy.bmo import (
    bmo_plus_norm,
    bmo_report,
    bmo_seminorm,
    bmo_wp_norm,
    dyadic_balls,
    john_nirenberg_certificate,
    pairing,
)
from mohardy.constants import JN_RATIO_C, LEMMA51_BMO_C, MIN_BMO_C
from mohardy.errors import DomainError, SupportError
from mohardy.fixtures import bmo_field, closed_atom
from mohardy.grid_forms import Ball, DiscreteForm, exterior_derivative, random_form
from mohardy.growth import theta

E = math.e


def _radius(grid):
    return np.sqrt(sum(np.broadcast_to(grid.coord(k), grid.shape) ** 2 for k in range(grid.n)))


def test_dyadic_family(grid):
    fam = dyadic_balls(grid)
    radii = [g.radius for g in fam.groups]
    assert radii == [grid.L * 2.0 ** -m for m in range(len(radii))]
    assert radii[-1] == pytest.approx(2 * grid.h)
    for grp in fam.groups:
        assert np.all(np.abs(grp.centers) + grp.radius <= grid.L + 1e-12)
        # each ball's cell list matches its mask
        b = grp.ball(len(grp.centers) // 2)
        assert np.array_equal(np.sort(grp.cells[len(grp.centers) // 2]), np.flatnonzero(b.mask(grid)))


def test_constant_and_shift(grid, rng):
    c = np.full(grid.shape, 2.5)
    assert bmo_wp_norm(c, theta(), grid=grid) == pytest.approx(0.0, abs=1e-12)
    assert john_nirenberg_certificate(c, theta(), 2.0, grid=grid) == pytest.approx(0.0, abs=1e-20)
    assert bmo_plus_norm(-c, grid=grid) == pytest.approx(2.5)
    g = random_form(grid, 0, rng).components[0]
    assert bmo_wp_norm(g + 7.0, theta(), grid=grid) == pytest.approx(bmo_wp_norm(g, theta(), grid=grid), rel=1e-10)
    assert john_nirenberg_certificate(g + 7.0, theta(), 2.0, grid=grid) == pytest.approx(
        john_nirenberg_certificate(g, theta(), 2.0, grid=grid), rel=1e-10)


def test_seminorm_properties(grid, rng):
    f = random_form(grid, 0, rng).components[0]
    g = random_form(grid, 0, rng).components[0]
    a, b = bmo_wp_norm(f, theta(), grid=grid), bmo_wp_norm(g, theta(), grid=grid)
    assert bmo_wp_norm(-3 * f, theta(), grid=grid) == pytest.approx(3 * a, rel=1e-12)
    assert bmo_wp_norm(f + g, theta(), grid=grid) <= a + b + 1e-12
    assert bmo_plus_norm(-3 * f, grid=grid) == pytest.approx(3 * bmo_plus_norm(f, grid=grid), rel=1e-12)


def test_seminorm_step_oracle(grid):
    # g = sign(x₀): the largest ball centered on the interface sees mean oscillation 1
    x = np.broadcast_to(grid.coord(0), grid.shape)
    g = np.sign(x)
    value, ball = bmo_seminorm(g, grid=grid, return_ball=True)
    assert value == pytest.approx(1.0)
    assert ball.center[0] == 0.0


def test_log_min_fixture(grid):
    g = np.minimum(np.log(E + 2 * _radius(grid)), math.log(E + 10))
    val = bmo_plus_norm(g, grid=grid)
    assert np.isfinite(val)
    assert val <= LEMMA51_BMO_C
    # the cube term alone: ∫_{(0,1)²} log(e + 2|x|)
    assert val > 1.0


def test_min_of_fixtures(grid, rng):
    g1, g2 = np.abs(bmo_field(grid, rng, "log")[0]), np.abs(bmo_field(grid, rng, "log")[0])
    low = bmo_plus_norm(np.minimum(g1, g2), grid=grid)
    assert low <= MIN_BMO_C * max(bmo_plus_norm(g1, grid=grid), bmo_plus_norm(g2, grid=grid))


def test_john_nirenberg_ratio(grid, rng):
    g = bmo_field(grid, rng, "log")[0]
    ratio = john_nirenberg_certificate(g, theta(), 2.0, grid=grid) / bmo_wp_norm(g, theta(), grid=grid) ** 2
    assert 0 < ratio <= JN_RATIO_C
    with pytest.raises(DomainError):
        john_nirenberg_certificate(g, theta(), 1.0, grid=grid)


def test_report(grid, rng):
    g = bmo_field(grid, rng, "log")[0]
    rep = bmo_report(g, theta(), grid=grid)
    assert rep.bmo_wp == pytest.approx(bmo_wp_norm(g, theta(), grid=grid))
    assert rep.bmo_plus == pytest.approx(bmo_plus_norm(g, grid=grid))
    assert set(rep.as_dict()) >= {"bmo_wp", "bmo_plus", "worst_ball", "jn_value"}


def test_pairing_constant_and_bilinear(grid, rng):
    atom = closed_atom(grid, rng, 2)
    const = DiscreteForm.scalar(grid, np.full(grid.shape, 3.0), 0)
    assert abs(pairing(const, atom.form, atom.ball)) <= 1e-12
    f1, f2 = random_form(grid, 1, rng), random_form(grid, 1, rng)
    g1, g2 = random_form(grid, 1, rng), random_form(grid, 1, rng)
    lhs = pairing(g1 * 2.0 + g2, f1 - f2 * 0.5)
    rhs = (2 * pairing(g1, f1) - pairing(g1, f2) + pairing(g2, f1) - 0.5 * pairing(g2, f2))
    assert lhs == pytest.approx(rhs, rel=1e-12, abs=1e-12)


def test_pairing_annihilates_closed_atoms(grid, rng):
    atom = closed_atom(grid, rng, 1)
    g = exterior_derivative(random_form(grid, 0, rng))
    val = pairing(g, atom.form, atom.ball)
    assert abs(val) <= 1e-8 * np.linalg.norm(atom.form.components) * np.linalg.norm(g.components)


def test_pairing_errors(grid, rng):
    atom = closed_atom(grid, rng, 1)
    with pytest.raises(DomainError):
        pairing(random_form(grid, 2, rng), atom.form)
    with pytest.raises(SupportError):
        pairing(random_form(grid, 1, rng), atom.form, Ball((-3.0, -3.0), 0.5))
