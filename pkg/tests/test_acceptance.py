"""Acceptance criteria, each at its stated tolerance.

Every test records a one-line PASS/FAIL verdict that is printed with the
test and again in the terminal summary.
"""

import time

import numpy as np

from cavitylab.core import (
    MatterBasis,
    Mode,
    ModeSet,
    build_length_gauge,
    build_rabi,
    build_tavis_cummings,
    build_velocity_gauge,
    emitter_operator,
    field_residuals,
    mode_operator,
    sector,
    total_dipole_operator,
)
from cavitylab.oracle import BilinearModel, ed_vs_oracle, instability_scan
from cavitylab.solver import check_gauge_invariance, dense_solve, propagate, solve, solve_lowest
from cavitylab.surfaces import (
    antisymmetry_error,
    cavity_bo_surface,
    finite_difference_scale,
    nonadiabatic_couplings,
)
from cavitylab.thermo import canonical_ensemble, mode_fluctuations, thermal_expectation

from conftest import harmonic_matter, record_criterion, single_mode, two_centre_matter


def test_criterion_01_decoupling_factorization():
    start = time.perf_counter()
    matter = harmonic_matter(n_points=41, omega0=1.0, kinetic="fd")
    modes = ModeSet((Mode(1.0, 0.0, (1.0,), 11), Mode(1.7, 0.0, (-1.0,), 3)))
    e_matter = np.linalg.eigvalsh(MatterBasis(matter).hamiltonian().toarray())
    sums = e_matter
    for m in modes.modes:
        sums = np.add.outer(sums, m.omega * (np.arange(m.n_max + 1) + 0.5)).ravel()
    sums = np.sort(sums)
    worst, dims = 0.0, []
    for h in (build_length_gauge(matter, modes), build_velocity_gauge(matter, modes)):
        dims.append(h.dim)
        worst = max(worst, float(np.max(np.abs(dense_solve(h).eigenvalues - sums))))
    elapsed = time.perf_counter() - start
    ok = worst <= 1e-12 and max(dims) <= 2048 and elapsed < 10.0
    detail = f"max |E - (E_matter + ladder)| = {worst:.2e} (tol 1e-12), dim {max(dims)}, {elapsed:.1f} s"
    assert record_criterion(1, "decoupling factorization", ok, detail)


def test_criterion_02_jaynes_cummings():
    g, n_max = 0.1, 6
    e = dense_solve(build_rabi(1.0, 1.0, g, rwa=True, n_max=n_max)).eigenvalues
    doublet = abs((e[2] - e[1]) - 2 * g)
    closed = [0.0]
    for n in range(n_max):
        closed += [(n + 1) - g * np.sqrt(n + 1), (n + 1) + g * np.sqrt(n + 1)]
    closed = np.sort(closed)
    block = float(np.max(np.abs(e[: len(closed)] - closed)))
    e_rabi = dense_solve(build_rabi(1.0, 1.0, g, rwa=False, n_max=20)).eigenvalues[0]
    e_jc = dense_solve(build_rabi(1.0, 1.0, g, rwa=True, n_max=20)).eigenvalues[0]
    ok = doublet <= 1e-12 and block <= 1e-12 and e_rabi < e_jc
    detail = (f"doublet error {doublet:.1e}, block error {block:.1e} (tol 1e-12), "
              f"E0 Rabi {e_rabi:.6f} < E0 RWA {e_jc:.6f}")
    assert record_criterion(2, "Jaynes-Cummings exactness", ok, detail)


def test_criterion_03_collective_sqrt_n():
    g, omega_a = 0.05, 1.0
    errors, dark_ok = [], True
    for n in (1, 2, 4, 8):
        block, _ = sector(build_tavis_cummings(n, 1.0, omega_a, g, rwa=True, n_max=1), 1)
        e = np.linalg.eigvalsh(block)
        errors.append(abs((e[-1] - e[0]) - 2 * g * np.sqrt(n)))
        dark = int(np.sum(np.abs(e - omega_a) < 1e-10))
        dark_ok &= dark == n - 1 and len(e) == n + 1
    ok = max(errors) <= 1e-10 and dark_ok
    detail = f"max |split - 2g sqrt(N)| = {max(errors):.1e} (tol 1e-10) over N=1,2,4,8; dark states N-1: {dark_ok}"
    assert record_criterion(3, "collective sqrt(N) law", ok, detail)


def test_criterion_04_self_polarization_dichotomy():
    start = time.perf_counter()
    # trap frequency below the coupling: the bare form is indefinite
    matter = harmonic_matter(n_points=101, half_width=10.0, omega0=0.1, charge=1.0)
    modes = single_mode(omega=1.0, g=0.2)
    ladder = [(10.0, 4), (14.0, 8), (20.0, 16), (28.0, 32)]
    on = instability_scan(matter, modes, ladder, include_self_polarization=True)
    off = instability_scan(matter, modes, ladder, include_self_polarization=False)
    elapsed = time.perf_counter() - start
    e_on = [r["E0"] for r in on.rows]
    e_off = np.array([r["E0"] for r in off.rows])
    last_step = abs(e_on[-1] - e_on[-2])
    dec = -np.diff(e_off)
    off_ok = bool(np.all(dec > 0) and np.all(np.diff(dec) >= 0))
    ok = last_step < 1e-8 and off_ok and elapsed < 120.0
    detail = (f"ON last |dE| = {last_step:.1e} (tol 1e-8); OFF decrements {np.round(dec, 3).tolist()} "
              f"({off.verdict}); {elapsed:.0f} s")
    assert record_criterion(4, "self-polarization dichotomy", ok, detail)


def test_criterion_05_gauge_consistency():
    matter = harmonic_matter(n_points=15, half_width=6.0)
    modes = single_mode(g=0.05)
    ladder = [(15, 1), (21, 2), (31, 4)]
    full = check_gauge_invariance(matter, modes, ladder, gap_tol=1e-6)
    ablated = check_gauge_invariance(matter, modes, ladder, gap_tol=1e-6, include_diamagnetic=False)
    ok = full.final_gap <= 1e-6 and full.shrinking and not ablated.shrinking
    gaps = ", ".join(f"{lv['gap']:.1e}" for lv in full.levels)
    detail = (f"gaps {gaps} (final tol 1e-6, shrinking {full.shrinking}); "
              f"A2-ablated final gap {ablated.final_gap:.1e}, shrinking {ablated.shrinking}")
    assert record_criterion(5, "gauge consistency", ok, detail)


def test_criterion_06_oracle_equivalence():
    fixtures = {
        "resonant single": BilinearModel.single(1.0, 1.0, 0.05),
        "detuned strong": BilinearModel.single(0.8, 1.2, 0.3),
        "no self-polarization": BilinearModel.single(1.0, 1.0, 0.2, include_self_polarization=False),
        "collective N=3": BilinearModel.collective(3, 1.0, 1.0, 0.1),
        "two modes": BilinearModel((1.0,), (0.9, 1.3), [[0.1, 0.15]]),
    }
    worst, converged = 0.0, True
    for model in fixtures.values():
        report = ed_vs_oracle(model, [4, 8, 16] if model.n_dipoles + model.n_modes <= 2 else [4, 6, 8])
        worst = max(worst, report.final_gap)
        converged &= report.converged
    ok = worst <= 1e-8 and converged
    detail = f"max gap error {worst:.1e} (tol 1e-8) over {len(fixtures)} positive-definite fixtures"
    assert record_criterion(6, "oracle equivalence", ok, detail)


def test_criterion_07_field_identity():
    worst_ratio, worst = 0.0, 0.0
    ok = True
    for center in (0.0, 0.5):
        matter, modes = harmonic_matter(center=center), single_mode(g=0.05, n_max=8)
        h = build_length_gauge(matter, modes)
        spectrum = solve_lowest(h, 5, tol=1e-10)
        for i in range(5):
            r = float(np.max(np.abs(field_residuals(spectrum.vector(i), matter, modes, h.basis))))
            bound = 10.0 * spectrum.residuals[i]
            ok &= r <= bound
            worst = max(worst, r)
            worst_ratio = max(worst_ratio, r / bound)
    detail = f"max |w<q> - g<e.R>| = {worst:.1e}, at most {worst_ratio:.2f} of 10x solver residual (5 states, 2 traps)"
    assert record_criterion(7, "eigenstate field identity", ok, detail)


def test_criterion_08_thermal_limits():
    matter, modes = harmonic_matter(), single_mode(g=0.05, n_max=24)
    h = build_length_gauge(matter, modes)
    spectrum = solve(h, 40)
    t_low = 1e-6 * (spectrum.eigenvalues[1] - spectrum.eigenvalues[0])
    ens = canonical_ensemble(spectrum, t_low)
    psi = spectrum.vector(0)
    ops = [h, mode_operator(h.basis, 0, "q"), mode_operator(h.basis, 0, "n"), total_dipole_operator(matter, h.basis)]
    low_err = max(abs(thermal_expectation(ens, op) - op.expectation(psi).real) for op in ops)

    dec_h = build_length_gauge(harmonic_matter(n_points=21, half_width=6.0), single_mode(g=0.0, n_max=30))
    dec = dense_solve(dec_h)
    coth_ok, coth_worst = True, 0.0
    for t in (0.2, 0.5, 1.0):
        e_ens = canonical_ensemble(dec, t)
        e_mode = thermal_expectation(e_ens, mode_operator(dec_h.basis, 0, "n")) + 0.5
        bound = e_ens.neglected_weight * (dec.eigenvalues[-1] - dec.eigenvalues[0])
        err = abs(e_mode - 0.5 / np.tanh(0.5 / t))
        coth_ok &= err <= bound
        coth_worst = max(coth_worst, err)
    products = [mode_fluctuations(spectrum.vector(i), h.basis, modes) for i in range(len(spectrum))]
    min_product = min(f["var_q"] * f["var_p"] for f in products)
    ok = low_err <= 1e-10 and coth_ok and min_product >= 0.25 - 1e-10
    detail = (f"T->0 error {low_err:.1e} (tol 1e-10); coth error {coth_worst:.1e} within bound {coth_ok}; "
              f"min var_q var_p = {min_product:.6f} over {len(spectrum)} eigenstates")
    assert record_criterion(8, "thermal limits", ok, detail)


def test_criterion_09_cavity_bo_separability():
    matter = two_centre_matter(n_points=61)
    modes = ModeSet((Mode(0.15, 0.0, (1.0,), 2),))
    r = np.linspace(2.0, 4.4, 5)
    q = np.linspace(-2.0, 2.0, 5)
    s = cavity_bo_surface(matter, modes, {"R1": r, "q0": q}, k=3)
    worst = 0.0
    for i, ri in enumerate(r):
        mb = MatterBasis(matter.with_clamped_positions([0.0, ri]))
        e = np.linalg.eigvalsh(mb.hamiltonian().toarray())[:3]
        expect = e[None, :] + 0.5 * 0.15**2 * q[:, None] ** 2
        worst = max(worst, float(np.max(np.abs(s.energies[i] - expect))))

    coupled = ModeSet((Mode(0.15, 0.05, (1.0,), 2),))
    anti, scale = [], []
    for n in (41, 81):
        bo = cavity_bo_surface(matter, coupled, {"R1": np.linspace(2.0, 4.4, n)}, k=3, fixed={"q0": 0.5})
        d = nonadiabatic_couplings(bo, "R1")
        anti.append(antisymmetry_error(d))
        scale.append(finite_difference_scale(bo, "R1"))
    ok = worst <= 1e-12 and all(a <= f for a, f in zip(anti, scale)) and anti[1] < anti[0]
    detail = (f"separability error {worst:.1e} (tol 1e-12); |d_ij + d_ji| = {anti[0]:.1e} / {anti[1]:.1e} "
              f"<= FD scale {scale[0]:.1e} / {scale[1]:.1e} at 41 / 81 nodes")
    assert record_criterion(9, "cavity-BO separability", ok, detail)


def test_criterion_10_propagation_order():
    g = 0.1
    h = build_rabi(1.0, 1.0, g, rwa=True, n_max=2)
    psi0 = np.zeros(h.dim)
    psi0[h.basis.photon_dim] = 1.0
    ee = emitter_operator(h.basis, "ee")

    def population_error(dt):
        traj = propagate(h, psi0, dt, np.pi / g, {"ee": ee})
        return float(np.max(np.abs(traj.observables["ee"] - np.cos(g * traj.times) ** 2))), traj

    e1, _ = population_error(2e-2 / g)
    e2, _ = population_error(1e-2 / g)
    ratio = e1 / e2
    traj = propagate(h, psi0, 0.05, 1000 * 0.05, {"ee": ee})
    norm_drift = float(np.max(np.abs(traj.state_norm - 1)))
    energy_drift = float(np.ptp(traj.observables["energy"]))
    ok = 3.5 <= ratio <= 4.5 and norm_drift <= 1e-8 and energy_drift <= 1e-8 and len(traj.times) == 1001
    detail = f"error ratio {ratio:.3f} (range 3.5-4.5); drift over 1e3 steps: norm {norm_drift:.1e}, energy {energy_drift:.1e}"
    assert record_criterion(10, "propagation order", ok, detail)
