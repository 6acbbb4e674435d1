import numpy as np
import pytest

from cavitylab.core import (
    ExternalDrive,
    LengthGauge,
    Mode,
    ModeSet,
    TimeDependentHamiltonian,
    VelocityGauge,
    build_length_gauge,
    build_velocity_gauge,
    field_residuals,
    parity_operator,
    total_dipole_operator,
)
from cavitylab.core.operators import PolaritonBasis
from cavitylab.errors import DimensionError, InvalidArgumentError, InvalidModelError
from cavitylab.solver import dense_solve, solve
from cavitylab.units import wavenumber_to_au

from conftest import harmonic_matter, single_mode

# dense ground energy of the g=0.05 harmonic fixture (201-point Fourier grid, n_max=8)
COUPLED_GROUND = 1.000312451187128


def test_decoupled_ground_energy(decoupled):
    matter, modes = decoupled
    e = solve(build_length_gauge(matter, modes), 1).eigenvalues[0]
    assert e == pytest.approx(1.0, abs=1e-12)


@pytest.mark.slow
def test_coupled_ground_regression():
    h = build_length_gauge(harmonic_matter(n_points=201, half_width=10.0), single_mode(g=0.05, n_max=8))
    assert solve(h, 1, tol=1e-11).eigenvalues[0] == pytest.approx(COUPLED_GROUND, abs=1e-11)


def test_coupled_ground_small_grid(coupled):
    matter, modes = coupled
    assert solve(build_length_gauge(matter, modes), 1).eigenvalues[0] == pytest.approx(COUPLED_GROUND, abs=1e-11)


@pytest.mark.parametrize("builder", ["length", "velocity"])
def test_assembled_hamiltonians_hermitian(coupled, builder):
    matter, modes = coupled
    h = build_length_gauge(matter, modes) if builder == "length" else build_velocity_gauge(matter, modes)
    assert h.hermiticity_error() <= 1e-14


def test_vibrational_mode_frequency_assembles():
    omega = wavenumber_to_au(856.0)
    assert omega == pytest.approx(0.0039, abs=1e-5)
    matter = harmonic_matter(n_points=31, half_width=1.0, omega0=omega)
    h = build_length_gauge(matter, ModeSet((Mode(omega, 1e-4, (1.0,), 3),)))
    assert h.is_hermitian()


def test_velocity_gauge_decoupled_matches_length(decoupled):
    matter, modes = decoupled
    e_l = dense_solve(build_length_gauge(matter, modes)).eigenvalues
    e_v = dense_solve(build_velocity_gauge(matter, modes)).eigenvalues
    assert np.allclose(e_l, e_v, atol=1e-12)


def test_truncated_gauges_differ():
    matter = harmonic_matter(n_points=31)
    modes = single_mode(g=0.3, n_max=1)
    e_l = solve(build_length_gauge(matter, modes), 1).eigenvalues[0]
    e_v = solve(build_velocity_gauge(matter, modes), 1).eigenvalues[0]
    assert abs(e_l - e_v) > 1e-6


def test_self_polarization_switch_changes_label(coupled):
    matter, modes = coupled
    h = build_length_gauge(matter, modes, LengthGauge(False))
    assert "no-self-polarization" in h.label
    assert "no-A2" in build_velocity_gauge(matter, modes, VelocityGauge(False)).label
    with pytest.raises(InvalidArgumentError):
        build_length_gauge(matter, modes, VelocityGauge())


def test_parity_commutes_with_hamiltonian():
    matter = harmonic_matter(n_points=21, half_width=6.0, kinetic="fd")
    modes = ModeSet((Mode(1.0, 0.1, (1.0,), 3), Mode(1.4, 0.05, (-1.0,), 2)))
    for h in (build_length_gauge(matter, modes), build_velocity_gauge(matter, modes)):
        p = parity_operator(matter, h.basis).matrix
        comm = (h.matrix @ p - p @ h.matrix).toarray()
        assert np.max(np.abs(comm)) <= 1e-13


def test_dipole_of_symmetric_ground_state_vanishes(decoupled):
    matter, modes = decoupled
    h = build_length_gauge(matter, modes)
    psi = dense_solve(h).vector(0)
    assert abs(total_dipole_operator(matter, h.basis).expectation(psi)) < 1e-12


def test_displaced_trap_dipole():
    matter = harmonic_matter(n_points=41, half_width=9.0, center=1.0)
    modes = single_mode(g=0.0, n_max=2)
    h = build_length_gauge(matter, modes)
    psi = dense_solve(h).vector(0)
    assert total_dipole_operator(matter, h.basis).expectation(psi).real == pytest.approx(-1.0, abs=1e-8)


def test_dipole_basis_mismatch(coupled):
    matter, _ = coupled
    with pytest.raises(InvalidArgumentError):
        total_dipole_operator(matter, PolaritonBasis(7, (2,)))


def test_field_identity_on_eigenstates(coupled):
    matter, modes = coupled
    h = build_length_gauge(matter, modes)
    spectrum = dense_solve(h)
    for i in range(5):
        assert np.all(np.abs(field_residuals(spectrum.vector(i), matter, modes, h.basis)) < 1e-10)


def test_budget_and_model_errors(coupled):
    matter, modes = coupled
    with pytest.raises(DimensionError):
        build_length_gauge(matter, modes, max_dim=100)
    with pytest.raises(InvalidModelError):
        Mode(-1.0, 0.1)
    with pytest.raises(InvalidModelError):
        Mode(1.0, 0.1, (0.6, 0.6))


def test_drive_terms_enter_linearly(coupled):
    matter, modes = coupled
    x = matter.grid.points
    drive = ExternalDrive(phi_ext=lambda t: 0.01 * t * x, j_alpha=(lambda t: 0.02 * t,))
    td = TimeDependentHamiltonian(matter, modes, drive)
    assert td.delta(0.0).nnz == 0 or np.all(td.delta(0.0).data == 0)
    d1, d2 = td.delta(1.0).toarray(), td.delta(2.0).toarray()
    assert np.allclose(d2, 2 * d1)
    h = build_length_gauge(matter, modes, drive=drive, t=1.0)
    assert np.allclose(h.toarray(), td(1.0).toarray())
    assert "drive" in h.label


def test_drive_rejects_non_finite(coupled):
    matter, modes = coupled
    drive = ExternalDrive(j_alpha=(lambda t: np.inf,))
    with pytest.raises(InvalidArgumentError):
        build_length_gauge(matter, modes, drive=drive, t=0.0)
