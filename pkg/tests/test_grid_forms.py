import math

import numpy as np
import pytest

from mohardy.errors import DomainError, GridMismatchError, SupportError
from mohardy.grid_forms import (
    Ball,
    DiscreteForm,
    Grid,
    codifferential,
    dff_bytes,
    exterior_derivative,
    hodge_laplacian,
    hodge_split,
    inv_laplacian,
    kernel_part,
    local_primitive,
    parse_dff,
    random_form,
    read_dff,
    riesz_transform,
    scalar_laplacian,
    wedge,
    write_dff,
)


def rel(a, b):
    return np.linalg.norm(np.ravel(a - b)) / np.linalg.norm(np.ravel(b))


def test_wedge_of_coordinate_forms(grid, rng):
    f, g = rng.standard_normal(grid.shape), rng.standard_normal(grid.shape)
    a = DiscreteForm(grid, 1, np.stack([f, np.zeros(grid.shape)]))
    b = DiscreteForm(grid, 1, np.stack([np.zeros(grid.shape), g]))
    np.testing.assert_allclose(wedge(a, b).components[0], f * g)
    assert np.all(wedge(a, a).components == 0)


@pytest.mark.parametrize("l, m", [(1, 1), (0, 2), (1, 0)])
def test_wedge_graded_commutativity(grid, rng, l, m):
    u, v = random_form(grid, l, rng), random_form(grid, m, rng)
    np.testing.assert_allclose(wedge(u, v).components, (-1) ** (l * m) * wedge(v, u).components, atol=1e-13)


def test_wedge_degree_overflow(grid, rng):
    with pytest.raises(DomainError):
        wedge(random_form(grid, 2, rng), random_form(grid, 1, rng))


def test_grid_mismatch(rng):
    a = random_form(Grid(2, 32, 4.0), 1, rng)
    b = random_form(Grid(2, 64, 4.0), 1, rng)
    with pytest.raises(GridMismatchError):
        wedge(a, b)


def test_d_of_single_mode(grid):
    k = 2 * math.pi * 3 / (2 * grid.L)
    x = np.broadcast_to(grid.coord(0), grid.shape)
    f = DiscreteForm.scalar(grid, np.sin(k * x), 0)
    df = exterior_derivative(f)
    np.testing.assert_allclose(df.components[0], k * np.cos(k * x), atol=1e-12)
    np.testing.assert_allclose(df.components[1], 0.0, atol=1e-12)


def test_d_constant_is_zero(grid):
    f = DiscreteForm.scalar(grid, np.full(grid.shape, 3.0), 0)
    assert np.max(np.abs(exterior_derivative(f).components)) < 1e-12


@pytest.mark.parametrize("degree", [0, 1])
def test_dd_and_adjoint(grid3, rng, degree):
    f = random_form(grid3, degree, rng)
    df = exterior_derivative(f)
    assert np.linalg.norm(exterior_derivative(df).components) <= 1e-12 * np.linalg.norm(df.components)
    g = random_form(grid3, degree + 1, rng)
    lhs, rhs = df.inner(g), f.inner(codifferential(g))
    assert abs(lhs - rhs) <= 1e-12 * df.norm() * g.norm()


def test_codifferential_single_mode(grid):
    # δ(s dx₁) = -∂₁ s with the adjoint sign convention
    k = 2 * math.pi * 2 / (2 * grid.L)
    x = np.broadcast_to(grid.coord(0), grid.shape)
    s = np.sin(k * x)
    f = DiscreteForm(grid, 1, np.stack([s, np.zeros(grid.shape)]))
    np.testing.assert_allclose(codifferential(f).components[0], -k * np.cos(k * x), atol=1e-12)


def test_delta_delta(grid, rng):
    f = random_form(grid, 2, rng)
    df = codifferential(f)
    assert np.linalg.norm(codifferential(df).components) <= 1e-12 * max(np.linalg.norm(df.components), 1.0)


def test_hodge_laplacian_matches_scalar(grid, rng):
    f = random_form(grid, 1, rng)
    assert rel(hodge_laplacian(f).components, scalar_laplacian(f).components) <= 1e-12


def test_laplacian_on_zero_forms(grid):
    k = 2 * math.pi * 2 / (2 * grid.L)
    s = np.cos(k * np.broadcast_to(grid.coord(1), grid.shape))
    lap = hodge_laplacian(DiscreteForm.scalar(grid, s, 0)).components[0]
    np.testing.assert_allclose(lap, k ** 2 * s, atol=1e-10)


def test_riesz_single_mode(grid):
    k = 2 * math.pi * 4 / (2 * grid.L)
    x = np.broadcast_to(grid.coord(0), grid.shape)
    np.testing.assert_allclose(riesz_transform(0, np.sin(k * x), grid), -np.cos(k * x), atol=1e-12)


def test_riesz_squares_and_constants(grid, rng):
    f = random_form(grid, 0, rng).components[0]
    f = f - f.mean()
    total = riesz_transform(0, riesz_transform(0, f, grid), grid) + riesz_transform(1, riesz_transform(1, f, grid), grid)
    assert rel(-total, f) <= 1e-12
    assert np.max(np.abs(riesz_transform(1, np.ones(grid.shape), grid))) == 0


def test_inverse_laplacian(grid, rng):
    f = random_form(grid, 1, rng)
    f = f - kernel_part(f)
    assert rel(hodge_laplacian(inv_laplacian(f)).components, f.components) <= 1e-10
    half = inv_laplacian(inv_laplacian(f, 0.5), 0.5)
    assert rel(half.components, inv_laplacian(f).components) <= 1e-10
    with pytest.raises(DomainError):
        inv_laplacian(f + DiscreteForm(grid, 1, np.ones((2,) + grid.shape)))


def test_hodge_split(grid, rng):
    f = random_form(grid, 1, rng)
    closed, coclosed, harm = hodge_split(f)
    assert rel(closed.components + coclosed.components + harm.components, f.components) <= 1e-12
    scale = f.norm() ** 2
    assert abs(closed.inner(coclosed)) <= 1e-10 * scale
    g = exterior_derivative(random_form(grid, 0, rng))
    c, cc, _ = hodge_split(g)
    assert rel(c.components, (g - kernel_part(g)).components) <= 1e-12
    assert cc.norm() <= 1e-12 * g.norm()


def test_local_primitive_recovers_exact_form(grid, rng):
    ball = Ball((0.3, -0.2), 1.0)
    bump = np.clip(1 - (ball.distance(grid) / 0.5) ** 2, 0, None) ** 10
    a = exterior_derivative(DiscreteForm.scalar(grid, bump, 0))
    res = local_primitive(a, ball)
    assert rel(exterior_derivative(res.form).components, a.components) <= 1e-8
    zero = local_primitive(DiscreteForm.zeros(grid, 1), ball)
    assert zero.form.norm() == 0


def test_local_primitive_rejects_wide_field(grid, rng):
    a = exterior_derivative(random_form(grid, 0, rng))
    with pytest.raises(SupportError):
        local_primitive(a, Ball((0.0, 0.0), 0.5))


def test_dff_roundtrip(tmp_path, grid, rng):
    f = random_form(grid, 1, rng)
    write_dff(tmp_path / "f.dff", f)
    g = read_dff(tmp_path / "f.dff")
    assert g.grid == grid and g.degree == 1
    assert np.array_equal(g.components, f.components)
    assert parse_dff(dff_bytes(f)).degree == 1
    with pytest.raises(ValueError):
        parse_dff(b"XXXX" + dff_bytes(f)[4:])
