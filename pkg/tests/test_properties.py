import numpy as np
import scipy.sparse as sp
from hypothesis import given, settings
from hypothesis import strategies as st

from cavitylab.core import (
    LengthGauge,
    MatterBasis,
    Mode,
    ModeSet,
    OperatorMatrix,
    PolaritonBasis,
    VelocityGauge,
    build_length_gauge,
    build_velocity_gauge,
    field_residuals,
    mode_operator,
    parity_operator,
)
from cavitylab.oracle import BilinearModel, bilinear_normal_modes, fock_hamiltonian, quadratic_form
from cavitylab.solver import dense_solve, propagate, solve_lowest
from cavitylab.thermo import (
    canonical_ensemble,
    entanglement_entropy,
    mode_fluctuations,
    reduce,
    thermal_expectation,
)

from conftest import harmonic_matter

SETTINGS = settings(max_examples=25, deadline=None)

freq = st.floats(0.3, 2.0)
coupling = st.floats(-0.4, 0.4)
n_max = st.integers(1, 4)
n_points = st.integers(9, 17)


def random_modes(draw_omegas, draw_gs, draw_nmax, signs):
    return ModeSet(tuple(Mode(w, g, (s,), n) for w, g, n, s in zip(draw_omegas, draw_gs, draw_nmax, signs)))


modes_strategy = st.integers(1, 2).flatmap(
    lambda m: st.tuples(
        st.lists(freq, min_size=m, max_size=m),
        st.lists(coupling, min_size=m, max_size=m),
        st.lists(st.integers(1, 3), min_size=m, max_size=m),
        st.lists(st.sampled_from([-1.0, 1.0]), min_size=m, max_size=m),
    ).map(lambda t: random_modes(*t))
)


@SETTINGS
@given(modes_strategy, n_points, freq, st.sampled_from(["fd", "spectral"]), st.booleans())
def test_assembly_is_hermitian(modes, n, omega0, kinetic, velocity):
    matter = harmonic_matter(n_points=n, half_width=5.0, omega0=omega0, kinetic=kinetic)
    h = build_velocity_gauge(matter, modes) if velocity else build_length_gauge(matter, modes)
    assert h.hermiticity_error() <= 1e-14


@SETTINGS
@given(modes_strategy, n_points, freq, st.booleans())
def test_decoupled_spectrum_is_sum_of_ladders(modes, n, omega0, velocity):
    modes = ModeSet(tuple(Mode(m.omega, 0.0, m.polarization, m.n_max) for m in modes.modes))
    matter = harmonic_matter(n_points=n, half_width=5.0, omega0=omega0, kinetic="fd")
    h = build_velocity_gauge(matter, modes) if velocity else build_length_gauge(matter, modes)
    e = dense_solve(h).eigenvalues
    e_matter = np.linalg.eigvalsh(MatterBasis(matter).hamiltonian().toarray())
    ladders = [m.omega * (np.arange(m.n_max + 1) + 0.5) for m in modes.modes]
    sums = e_matter
    for lad in ladders:
        sums = np.add.outer(sums, lad).ravel()
    assert np.max(np.abs(e - np.sort(sums))) <= 1e-12 * max(1.0, np.max(np.abs(e)))


@SETTINGS
@given(modes_strategy, n_points, st.booleans())
def test_parity_symmetry(modes, n, velocity):
    matter = harmonic_matter(n_points=n, half_width=5.0, kinetic="fd")
    h = build_velocity_gauge(matter, modes) if velocity else build_length_gauge(matter, modes)
    p = parity_operator(matter, h.basis).matrix
    comm = h.matrix @ p - p @ h.matrix
    assert (abs(comm).max() if comm.nnz else 0.0) <= 1e-13


@SETTINGS
@given(modes_strategy, st.booleans())
def test_eigenstates_have_no_transverse_field(modes, sp_on):
    matter = harmonic_matter(n_points=15, half_width=5.0, kinetic="fd")
    h = build_length_gauge(matter, modes, LengthGauge(sp_on))
    spectrum = dense_solve(h)
    for i in range(4):
        r = field_residuals(spectrum.vector(i), matter, modes, h.basis)
        assert np.all(np.abs(r) <= 1e-9)


@SETTINGS
@given(st.integers(0, 2**32 - 1), st.integers(40, 120), st.integers(1, 5))
def test_iterative_matches_dense(seed, n, k):
    rng = np.random.default_rng(seed)
    a = sp.random(n, n, density=0.1, random_state=rng)
    h = OperatorMatrix((a + a.T).tocsr() + sp.diags(rng.normal(size=n)))
    ref = dense_solve(h).eigenvalues[:k]
    assert np.allclose(solve_lowest(h, k, tol=1e-10, seed=seed).eigenvalues, ref, atol=1e-9)


@settings(max_examples=10, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_propagation_preserves_norm_and_energy(seed):
    rng = np.random.default_rng(seed)
    matter = harmonic_matter(n_points=11, half_width=4.0, kinetic="fd")
    h = build_length_gauge(matter, ModeSet((Mode(1.0, rng.uniform(0, 0.3), (1.0,), 2),)))
    psi = rng.normal(size=h.dim) + 1j * rng.normal(size=h.dim)
    psi /= np.linalg.norm(psi)
    traj = propagate(h, psi, 0.02, 20.0, record_every=100)
    assert len(traj.times) == 11
    assert np.max(np.abs(traj.state_norm - 1)) <= 1e-8
    assert np.ptp(traj.observables["energy"]) <= 1e-8


bilinear = st.integers(1, 3).flatmap(
    lambda j: st.integers(1, 2).flatmap(
        lambda m: st.tuples(
            st.lists(freq, min_size=j, max_size=j),
            st.lists(freq, min_size=m, max_size=m),
            st.lists(st.floats(-5.0, 5.0), min_size=j * m, max_size=j * m),
        )
    )
)


@SETTINGS
@given(bilinear)
def test_self_polarization_form_is_psd(args):
    w0, w, g = args
    model = BilinearModel(w0, w, np.reshape(g, (len(w0), len(w))), True)
    lam = np.linalg.eigvalsh(quadratic_form(model))
    assert lam.min() >= -1e-12 * max(1.0, lam.max())


@SETTINGS
@given(bilinear, st.randoms(use_true_random=False))
def test_normal_modes_are_permutation_invariant(args, rnd):
    w0, w, g = args
    model = BilinearModel(w0, w, np.reshape(g, (len(w0), len(w))) * 0.05, True)
    order = list(range(model.n_dipoles))
    rnd.shuffle(order)
    a = bilinear_normal_modes(model).frequencies
    b = bilinear_normal_modes(model.permuted(order)).frequencies
    assert np.allclose(a, b, atol=1e-12, equal_nan=True)


@settings(max_examples=15, deadline=None)
@given(st.floats(0.5, 1.5), st.floats(0.5, 1.5), st.floats(-0.3, 0.3))
def test_fock_ground_converges_from_above(omega0, omega, g):
    model = BilinearModel.single(omega0, omega, g)
    exact = bilinear_normal_modes(model).ground_energy
    e = [dense_solve(fock_hamiltonian(model, n), vectors=False).eigenvalues[0] for n in (1, 2, 4, 8)]
    assert np.all(np.diff(e) <= 1e-13)
    assert e[-1] >= exact - 1e-12


@SETTINGS
@given(st.lists(st.floats(0, 5), min_size=2, max_size=12), st.floats(0, 3))
def test_weights_normalize(levels, temperature):
    spectrum = dense_solve(np.diag(np.sort(levels)))
    ens = canonical_ensemble(spectrum, temperature, warn_tol=1.0)
    assert abs(ens.weights.sum() - 1) <= 1e-12
    assert np.all(ens.weights >= 0)
    assert thermal_expectation(ens, np.eye(len(levels))) == np_approx(1.0)
    assert thermal_expectation(ens, np.diag(np.sort(levels))) == np_approx(ens.mean_energy)


def np_approx(x, tol=1e-12):
    import pytest

    return pytest.approx(x, abs=tol)


def test_two_level_weights():
    ens = canonical_ensemble(dense_solve(np.diag([0.0, 1.0])), 1.0, warn_tol=1.0)
    z = 1 + np.exp(-1.0)
    assert np.allclose(ens.weights, [1 / z, np.exp(-1.0) / z], atol=1e-15)


def random_state(rng, basis, empty_top=False):
    psi = rng.normal(size=(basis.matter_dim, basis.photon_dim)) + 1j * rng.normal(size=(basis.matter_dim, basis.photon_dim))
    if empty_top:
        psi[:, -1] = 0.0
    return (psi / np.linalg.norm(psi)).ravel()


@SETTINGS
@given(st.integers(2, 5), st.integers(1, 4), st.integers(0, 2**32 - 1))
def test_entropy_bounds(dm, n, seed):
    basis = PolaritonBasis(dm, (n,))
    psi = random_state(np.random.default_rng(seed), basis)
    for keep in ("matter", "photon"):
        s = entanglement_entropy(reduce(psi, keep, basis))
        assert -1e-12 <= s <= np.log(min(dm, n + 1)) + 1e-12


@SETTINGS
@given(st.integers(1, 4), st.integers(1, 6), st.floats(0.5, 2.0), st.integers(0, 2**32 - 1))
def test_uncertainty_relation(dm, n, omega, seed):
    rng = np.random.default_rng(seed)
    basis = PolaritonBasis(dm, (n,))
    modes = ModeSet((Mode(omega, 0.1, (1.0,), n),))
    # Robertson bound with the truncated commutator holds for every state
    psi = random_state(rng, basis)
    q = mode_operator(basis, 0, "q", omega).matrix
    p = mode_operator(basis, 0, "p", omega).matrix
    comm = np.vdot(psi, (q @ p - p @ q) @ psi)
    f = mode_fluctuations(psi, basis, modes)
    assert f["var_q"] * f["var_p"] >= 0.25 * abs(comm) ** 2 - 1e-12
    # with the top Fock level empty the commutator is exactly i
    f = mode_fluctuations(random_state(rng, basis, empty_top=True), basis, modes)
    assert f["var_q"] * f["var_p"] >= 0.25 - 1e-10


@SETTINGS
@given(st.integers(2, 5), st.integers(1, 4), st.integers(0, 2**32 - 1))
def test_product_state_is_pure(dm, n, seed):
    rng = np.random.default_rng(seed)
    a = rng.normal(size=dm)
    b = rng.normal(size=n + 1)
    psi = np.kron(a / np.linalg.norm(a), b / np.linalg.norm(b))
    rdm = reduce(psi, "photon", PolaritonBasis(dm, (n,)))
    assert abs(rdm.purity - 1) <= 1e-12
    assert entanglement_entropy(rdm) <= 1e-12


def test_maximally_entangled_pair():
    psi = np.array([1.0, 0.0, 0.0, 1.0]) / np.sqrt(2)
    rdm = reduce(psi, "matter", PolaritonBasis(2, (1,)))
    assert np.allclose(rdm.eigenvalues, [0.5, 0.5])
    assert entanglement_entropy(rdm) == np_approx(np.log(2))


@SETTINGS
@given(st.floats(0.5, 1.5), coupling)
def test_zero_temperature_q_follows_dipole(omega, g):
    from cavitylab.core import total_dipole_operator

    # displaced trap: the identity is non-trivial; n_max large enough that the top Fock state is empty
    matter = harmonic_matter(n_points=21, half_width=6.0, center=0.7)
    modes = ModeSet((Mode(omega, g, (1.0,), 12),))
    h = build_length_gauge(matter, modes)
    spectrum = dense_solve(h)
    ens = canonical_ensemble(spectrum, 0.0)
    q = thermal_expectation(ens, mode_operator(h.basis, 0, "q", omega))
    r = thermal_expectation(ens, total_dipole_operator(matter, h.basis))
    assert q == np_approx(g / omega * r, 1e-9)


@settings(max_examples=10, deadline=None)
@given(st.floats(0.5, 1.5), st.floats(0.0, 0.2))
def test_velocity_gauge_hermitian_without_a2(omega, g):
    matter = harmonic_matter(n_points=11, half_width=4.0, kinetic="spectral")
    h = build_velocity_gauge(matter, ModeSet((Mode(omega, g, (1.0,), 3),)), VelocityGauge(False))
    assert h.hermiticity_error() <= 1e-14
