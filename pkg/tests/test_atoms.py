from dataclasses import replace

import numpy as np
import pytest

from mohardy.atoms import (
    AtomTolerances,
    closed_atomic_decompose,
    load_decomposition,
    make_atom,
    nq_functional,
    pi_phi,
    poly_bump,
    size_ratio,
    synthesize,
    tent_decompose,
    validate_atom,
    whitney_cubes,
)
from mohardy.constants import PI_PHI_SIZE_SLACK, PRIMITIVE_RATIO_C
from mohardy.errors import DomainError, GridMismatchError, NotClosedError
from mohardy.fixtures import closed_atom, closed_field, random_ball, tent_atom_field
from mohardy.grid_forms import Ball, DiscreteForm, Grid, exterior_derivative, local_primitive, random_form
from mohardy.growth import AdmissibleTriple, power, theta
from mohardy.maximal import LevelGrid, SpaceTimeField
from mohardy.suite import nq_power_one, nq_theta_oracle

TRIPLE = AdmissibleTriple(theta(), 2.0, 0)


@pytest.mark.parametrize("degree,shape", [(1, "exact"), (2, "exact"), (2, "difference")])
def test_make_atom_validates(grid, rng, degree, shape):
    atom = make_atom(grid, Ball((0.3, -0.2), 0.9), TRIPLE, degree, rng=rng, shape=shape)
    rep = validate_atom(atom)
    assert rep.passed, rep.as_dict()
    assert rep.size_ratio == pytest.approx(1.0, abs=1e-6)
    if atom.primitive is not None:
        np.testing.assert_allclose(exterior_derivative(atom.primitive).components, atom.form.components, atol=1e-12)


def test_validation_failures(grid, rng):
    atom = make_atom(grid, Ball((0.0, 0.0), 0.9), TRIPLE, 2, rng=rng)
    assert validate_atom(replace(atom, form=atom.form * 2.0)).failures == ["size"]
    bump = DiscreteForm.scalar(grid, poly_bump(atom.ball.distance(grid), 0.8), 2)
    bump = bump / size_ratio(bump, atom.ball, TRIPLE)
    assert "moment" in validate_atom(replace(atom, form=bump)).failures
    shifted = replace(atom, ball=Ball((1.5, 0.0), 0.9))
    assert "support" in validate_atom(shifted).failures
    open_form = random_form(grid, 1, rng)
    rep = validate_atom(replace(atom, form=open_form / size_ratio(open_form, atom.ball, TRIPLE, clip=True)))
    assert "closed" in rep.failures


def test_make_atom_errors(grid):
    with pytest.raises(DomainError):
        make_atom(grid, Ball((0.0, 0.0), 0.2), TRIPLE, 1)
    with pytest.raises(DomainError):
        make_atom(grid, Ball((0.0, 0.0), 0.9), TRIPLE, 3)
    with pytest.raises(DomainError):
        make_atom(grid, Ball((0.0, 0.0), 0.9), AdmissibleTriple(theta(), 2.0, 3), 1)


@pytest.mark.parametrize("degree", [1, 2])
@pytest.mark.parametrize("s", [1, 2])
def test_higher_moment_atoms(grid, rng, degree, s):
    # moment corrections need about 8 cells per radius to stay inside the ball
    triple = AdmissibleTriple(theta(), 2.0, s)
    atom = make_atom(grid, Ball((0.1, -0.2), 1.0), triple, degree, rng=rng, shape="exact")
    rep = validate_atom(atom)
    assert rep.passed, rep.as_dict()
    assert rep.moment_residual <= 1e-10


def _decomposition(grid, rng, count):
    return [(float(rng.uniform(-3, 3)), closed_atom(grid, rng, 2)) for _ in range(count)]


def test_nq_power_closed_form(grid, rng):
    t1 = AdmissibleTriple(power(1.0), 2.0, 0)
    decomp = [(lam, replace(a, triple=t1)) for lam, a in _decomposition(grid, rng, 3)]
    assert nq_functional(decomp) == pytest.approx(nq_power_one(decomp), rel=1e-6)


def test_nq_theta_oracle(grid, rng):
    decomp = _decomposition(grid, rng, 3)
    assert nq_functional(decomp) == pytest.approx(nq_theta_oracle(decomp), rel=1e-6)


def test_nq_degenerate_and_homogeneous(grid, rng):
    decomp = _decomposition(grid, rng, 2)
    assert nq_functional([(0.0, a) for _, a in decomp]) == 0.0
    assert nq_functional([]) == 0.0
    # one atom, ℘ = t: 𝔑 = |λ|·|B|^{1/2}‖𝔞‖₂
    t1 = AdmissibleTriple(power(1.0), 2.0, 0)
    single = [(2.0, replace(decomp[0][1], triple=t1))]
    assert nq_functional(single) == pytest.approx(2 * nq_functional([(1.0, single[0][1])]), rel=1e-7)


def test_synthesize(grid, rng):
    decomp = _decomposition(grid, rng, 3)
    total = sum(lam * a.form.components for lam, a in decomp)
    np.testing.assert_allclose(synthesize(decomp).components, total, atol=1e-14)
    with pytest.raises(DomainError):
        synthesize([])
    other = closed_atom(Grid(2, 32, 8.0), rng, 2, ball=Ball((0.0, 0.0), 2.0))
    with pytest.raises(GridMismatchError):
        synthesize(decomp + [(1.0, other)])


def test_whitney_cubes_partition():
    N = 64
    x = np.arange(N) - N / 2 + 0.5
    region = (x[:, None] ** 2 + x[None, :] ** 2) < 20.0 ** 2
    labels = whitney_cubes(region, 16)
    assert np.array_equal(labels >= 0, region)
    from scipy import ndimage

    dist = ndimage.distance_transform_edt(np.pad(region, 1))[1:-1, 1:-1]
    for lab in np.unique(labels[labels >= 0]):
        cells = np.argwhere(labels == lab)
        side = cells.max(axis=0) - cells.min(axis=0) + 1
        assert side[0] == side[1] and len(cells) == side[0] ** 2
        assert side[0] & (side[0] - 1) == 0
        assert np.all(cells.min(axis=0) % side[0] == 0)
        if side[0] > 1:
            assert side[0] * np.sqrt(2) <= 0.25 * (dist[tuple(cells.T)].min() - 0.5)
    assert labels.max() + 1 > 1


def test_tent_decompose_reconstructs(grid, rng):
    levels = LevelGrid.default(grid, per_octave=2, t_min=0.25, t_max=1.0)
    F = SpaceTimeField(grid, 0, levels, rng.standard_normal((len(levels), 1) + grid.shape)
                       * (random_ball(grid, rng).mask(grid) * 1.0))
    pieces = tent_decompose(F, theta(), allow_single=False)
    total = sum(lam * A.field.values for lam, A in pieces)
    np.testing.assert_allclose(total, F.values, atol=1e-12)
    for lam, A in pieces:
        assert A.tent_leak() == 0.0
        assert A.size_ratios(theta(), ps=(float("inf"),))["inf"] <= 1.0 + 1e-9
    assert tent_decompose(SpaceTimeField.zeros(grid, 0, levels), theta()) == []


def test_pi_phi_gives_sized_atoms(grid, rng):
    for _ in range(5):
        atom = pi_phi(tent_atom_field(grid, rng, theta()))
        rep = validate_atom(atom, AtomTolerances(size=np.inf), clip=True)
        assert rep.support_leak == 0.0 and rep.moment_residual <= 1e-8
        assert rep.size_ratio <= PI_PHI_SIZE_SLACK


@pytest.mark.parametrize("degree", [1, 2])
def test_closed_atomic_decompose_roundtrip(grid, rng, degree):
    f = closed_field(grid, rng, degree)
    dec = closed_atomic_decompose(f)
    recon = synthesize(dec.pairs())
    assert np.linalg.norm(recon.components - f.components) <= 1e-3 * np.linalg.norm(f.components)
    assert dec.reconstruction_error <= 1e-10
    strict = AtomTolerances()
    for a in dec.atoms:
        assert validate_atom(a, strict, clip=True).passed
    assert dec.nq_value > 0


def test_closed_atomic_decompose_rejects(grid, rng):
    assert closed_atomic_decompose(DiscreteForm.zeros(grid, 1)).atoms == []
    with pytest.raises(NotClosedError):
        closed_atomic_decompose(random_form(grid, 1, rng))
    with pytest.raises(DomainError):
        closed_atomic_decompose(DiscreteForm.scalar(grid, np.ones(grid.shape), 2))


def test_decomposition_save_load(tmp_path, grid, rng):
    dec = closed_atomic_decompose(closed_atom(grid, rng, 2).form)
    dec.save(tmp_path)
    back = load_decomposition(tmp_path)
    assert np.array_equal(back.weights, dec.weights)
    np.testing.assert_array_equal(synthesize(back.pairs()).components, synthesize(dec.pairs()).components)
    assert back.nq_value == dec.nq_value


def test_local_primitive_ratio(grid, rng):
    for k in range(6):
        atom = closed_atom(grid, rng, 1 + k % 2, shape="exact")
        res = local_primitive(atom.form, atom.ball)
        assert res.residual <= 1e-6
        assert res.support_leak <= 5e-3
        assert res.primitive_ratio <= PRIMITIVE_RATIO_C
