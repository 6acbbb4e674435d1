import numpy as np
import pytest

from cavitylab.core import Grid, MatterBasis, MatterModel, Species, harmonic_potential
from cavitylab.core.matter import kinetic_matrix, momentum_matrix, soft_coulomb
from cavitylab.core.operators import OperatorMatrix
from cavitylab.errors import InvalidModelError
from cavitylab.solver import dense_solve

from conftest import harmonic_matter


def test_fd_kinetic_stencil():
    grid = Grid(0.0, 1.0, 11)
    t = kinetic_matrix(grid, 2.0, "fd")
    h = grid.spacing
    assert t[3, 3] == pytest.approx(1.0 / (2.0 * h * h))
    assert t[3, 4] == pytest.approx(-0.5 / (2.0 * h * h))
    assert t[3, 5] == 0.0


@pytest.mark.parametrize("n", [40, 41])
def test_spectral_operators_hermitian(n):
    grid = Grid(-5.0, 5.0, n)
    t = kinetic_matrix(grid, 1.0, "spectral")
    p = momentum_matrix(grid, "spectral")
    assert np.allclose(t, t.T)
    assert np.allclose(p, p.conj().T)


def test_spectral_harmonic_levels():
    mb = MatterBasis(harmonic_matter())
    e = dense_solve(OperatorMatrix(mb.hamiltonian())).eigenvalues
    assert np.allclose(e[:6], np.arange(6) + 0.5, atol=1e-10)


def test_soft_coulomb_kernel():
    assert soft_coulomb(0.0, 1.0) == 1.0
    assert soft_coulomb(np.sqrt(3.0), 1.0) == pytest.approx(0.5)


def test_noninteracting_fermions_fill_levels():
    # charge 0 switches off the pair interaction: E0 = 0.5 + 1.5
    m = MatterModel((Species("f", 1.0, 0.0, count=2),), Grid(-8, 8, 41),
                    external_potential=harmonic_potential(1.0), kinetic="spectral")
    mb = MatterBasis(m)
    assert mb.dim == 41 * 40 // 2
    e = dense_solve(OperatorMatrix(mb.hamiltonian())).eigenvalues
    assert e[0] == pytest.approx(2.0, abs=1e-10)
    assert e[1] == pytest.approx(3.0, abs=1e-10)


def test_distinct_species_form_product_space():
    a = Species("a", 1.0, 0.0)
    b = Species("b", 1.0, 0.0)
    m = MatterModel((a, b), Grid(-8, 8, 31), external_potential=harmonic_potential(1.0), kinetic="spectral")
    mb = MatterBasis(m)
    assert mb.dim == 31 * 31
    e = dense_solve(OperatorMatrix(mb.hamiltonian())).eigenvalues
    assert e[0] == pytest.approx(1.0, abs=1e-8)


def test_interaction_raises_energy():
    free = MatterModel((Species("e", 1.0, 0.0, count=2),), Grid(-8, 8, 31),
                       external_potential=harmonic_potential(1.0), kinetic="spectral")
    charged = MatterModel((Species("e", 1.0, -1.0, count=2),), Grid(-8, 8, 31),
                          external_potential=harmonic_potential(1.0), kinetic="spectral")
    e_free = dense_solve(OperatorMatrix(MatterBasis(free).hamiltonian())).eigenvalues[0]
    e_int = dense_solve(OperatorMatrix(MatterBasis(charged).hamiltonian())).eigenvalues[0]
    assert e_int > e_free


def test_clamped_charge_attracts():
    e = Species("e", 1.0, -1.0)
    nuc = Species("p", 1836.0, 1.0, quantum=False, positions=(0.0,))
    m = MatterModel((e, nuc), Grid(-10, 10, 101))
    mb = MatterBasis(m)
    assert mb.dim == 101
    v = mb.site_potential(0)
    assert v[50] == pytest.approx(-1.0)
    assert mb.clamped_constant() == 0.0


def test_clamped_pair_constant():
    e = Species("e", 1.0, -1.0)
    nuc = Species("p", 1836.0, 1.0, quantum=False, count=2, positions=(-1.0, 1.0))
    mb = MatterBasis(MatterModel((e, nuc), Grid(-10, 10, 51), softening=1.0))
    assert mb.clamped_constant() == pytest.approx(1.0 / np.sqrt(5.0))


def test_dipole_sums_particles():
    m = MatterModel((Species("e", 1.0, -1.0, count=2),), Grid(-2, 2, 5))
    mb = MatterBasis(m)
    x = m.grid.points
    dets = mb.groups[0][1]
    assert np.allclose(mb.dipole(), -(x[dets[:, 0]] + x[dets[:, 1]]))


def test_parity_is_an_involution():
    m = MatterModel((Species("e", 1.0, -1.0, count=2),), Grid(-3, 3, 9))
    perm, sign = MatterBasis(m).parity()
    assert np.array_equal(perm[perm], np.arange(len(perm)))
    assert np.all(sign * sign[perm] == 1)


def test_invalid_models():
    grid = Grid(-1, 1, 5)
    with pytest.raises(InvalidModelError):
        MatterModel((Species("p", 1.0, 1.0, quantum=False, positions=(0.0,)),), grid)
    with pytest.raises(InvalidModelError):
        Species("e", mass=0.0)
    with pytest.raises(InvalidModelError):
        Grid(1.0, -1.0, 5)
    with pytest.raises(InvalidModelError):
        Grid(0.0, 1.0, 1)
    with pytest.raises(InvalidModelError):
        MatterModel((Species("e"),), grid, softening=0.0)
    with pytest.raises(InvalidModelError):
        MatterModel((Species("e", count=6),), grid)
    with pytest.raises(InvalidModelError):
        Species("p", quantum=False, count=2, positions=(0.0,))
