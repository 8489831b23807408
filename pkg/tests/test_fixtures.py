import json

import numpy as np
import pytest

from mohardy.atoms import validate_atom
from mohardy.errors import DomainError
from mohardy.fixtures import (
    FIXTURE_KINDS,
    bmo_field,
    case1_ball,
    case2_ball,
    closed_atom,
    closed_field,
    generate_fixture,
    random_ball,
    simple_function,
    smooth_closed_one_form,
)
from mohardy.factorize import BallCase
from mohardy.grid_forms import Grid, exterior_derivative, read_dff


@pytest.mark.parametrize("degree", [1, 2])
def test_closed_atom_validates(grid, rng, degree):
    for _ in range(3):
        assert validate_atom(closed_atom(grid, rng, degree)).passed


@pytest.mark.parametrize("degree", [1, 2])
def test_closed_field(grid, rng, degree):
    f = closed_field(grid, rng, degree)
    assert np.sqrt(np.sum(f.components ** 2) * grid.cell_volume) == pytest.approx(1.0)
    if degree < grid.n:
        assert np.linalg.norm(exterior_derivative(f).components) <= 1e-10 * np.linalg.norm(f.components)
    np.testing.assert_allclose(f.means(), 0.0, atol=1e-12)


def test_smooth_one_form_is_closed(grid, rng):
    v = smooth_closed_one_form(grid, rng)
    assert np.linalg.norm(exterior_derivative(v).components) <= 1e-10 * np.linalg.norm(v.components)


def test_ball_generators(grid, rng):
    for _ in range(20):
        b = random_ball(grid, rng)
        assert all(abs(c) + 2 * b.radius <= grid.L for c in b.center)
        assert BallCase.of(case1_ball(grid, rng)).axes == ("I", "I")
        assert BallCase.of(case2_ball(grid, rng)).tag == "II"
    with pytest.raises(DomainError):
        random_ball(Grid(2, 16, 4.0), rng)


def test_bmo_field_kinds(grid, rng):
    for kind in ("case1", "case2", "log"):
        values, meta = bmo_field(grid, rng, kind)
        assert values.shape == grid.shape and np.all(np.isfinite(values))
        assert meta["kind"] == kind
    with pytest.raises(DomainError):
        bmo_field(grid, rng, "sine")


def test_simple_function_disjoint(grid, rng):
    cover = np.zeros(grid.shape, dtype=int)
    for _, cube in simple_function(grid, rng, 6):
        cover += cube.mask(grid)
    assert cover.max() == 1


@pytest.mark.parametrize("kind", FIXTURE_KINDS)
def test_generate_fixture_deterministic(tmp_path, grid, kind):
    a = generate_fixture(kind, grid, 5, tmp_path / "a")
    b = generate_fixture(kind, grid, 5, tmp_path / "b")
    c = generate_fixture(kind, grid, 6, tmp_path / "c")
    assert a["sha256"] == b["sha256"] != c["sha256"]
    assert json.loads((tmp_path / "a" / "manifest.json").read_text()) == a
    assert (tmp_path / "a" / a["file"]).read_bytes() == (tmp_path / "b" / b["file"]).read_bytes()


def test_generated_atom_roundtrip(tmp_path, grid):
    man = generate_fixture("atom", grid, 1, tmp_path, {"degree": 1})
    assert man["validation"]["passed"]
    assert read_dff(tmp_path / "atom.dff").degree == 1
    with pytest.raises(DomainError):
        generate_fixture("blob", grid, 1, tmp_path)
