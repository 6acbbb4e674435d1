"""Dipole-approximated Pauli-Fierz Hamiltonians in the polariton basis.

Length gauge, per mode::

    p^2/2 + (w^2/2) (q - (g/w) e.R)^2
      = w (n + 1/2) - g sqrt(w/2) (a + a^+) e.R + (g^2/2) (e.R)^2

Velocity gauge uses the uniform amplitude ``A = sum_a lambda_a e_a w_a q_a``
with ``lambda_a = g_a / w_a``, i.e. ``A = sum_a g_a e_a (a + a^+)/sqrt(2 w_a)``.
With this choice the two forms are related by the dipole unitary and a
swap of the photon quadratures, so converged spectra coincide.
"""

import numpy as np
import scipy.sparse as sp

from ..errors import DimensionError, InvalidArgumentError
from .matter import MatterBasis
from .operators import OperatorMatrix, PolaritonBasis, annihilation, lift_matter, lift_photon, mode_operator
from .types import LengthGauge, VelocityGauge

DEFAULT_MAX_DIM = 2_000_000


def check_budget(dim, max_dim=DEFAULT_MAX_DIM):
    if dim > max_dim:
        raise DimensionError(f"basis dimension {dim} exceeds memory budget {max_dim}", key="max_dim")


def polariton_basis(matter, modes, max_dim=DEFAULT_MAX_DIM):
    mb = MatterBasis(matter)
    basis = PolaritonBasis(mb.dim, modes.n_max)
    check_budget(basis.total_dim, max_dim)
    return mb, basis


def _photon_free(basis, modes):
    occ = basis.photon_occupations
    e = np.full(len(occ), 0.5 * sum(m.omega for m in modes))
    for a, m in enumerate(modes):
        e += m.omega * occ[:, a]
    return np.tile(e, basis.matter_dim)


def _photon_x(basis, a):
    """``a + a^+`` of mode ``a`` lifted to the photon space only."""
    x = annihilation(basis.n_max[a])
    x = (x + x.T).tocsr()
    out = sp.identity(1, format="csr")
    for b, d in enumerate(basis.photon_dims):
        out = sp.kron(out, x if b == a else sp.identity(d, format="csr"), format="csr")
    return out


def build_length_gauge(matter, modes, gauge=None, drive=None, t=0.0, max_dim=DEFAULT_MAX_DIM):
    """Length-gauge Hamiltonian, optionally including drive terms at time ``t``."""
    gauge = LengthGauge() if gauge is None else gauge
    if not isinstance(gauge, LengthGauge):
        raise InvalidArgumentError("build_length_gauge needs a LengthGauge")
    mb, basis = polariton_basis(matter, modes, max_dim)
    d = mb.dipole()
    h = lift_matter(basis, mb.hamiltonian()) + sp.diags(_photon_free(basis, modes), 0, format="csr")
    for a, m in enumerate(modes):
        if m.g == 0.0:
            continue
        er = m.epsilon * d
        couple = sp.kron(sp.diags(er, 0), _photon_x(basis, a), format="csr")
        h = h - m.g * np.sqrt(m.omega / 2.0) * couple
        if gauge.include_self_polarization:
            h = h + lift_matter(basis, 0.5 * m.g**2 * er**2)
    label = "length" if gauge.include_self_polarization else "length[no-self-polarization]"
    if drive is not None:
        h = h + drive_terms(mb, basis, modes, drive, t)
        label += f"+drive(t={t:g})"
    return OperatorMatrix(h, label, basis)


def drive_terms(mb, basis, modes, drive, t):
    """Sparse ``sum_l Z_l phi(x_l, t) + sum_a j_a(t) q_a`` at time ``t``."""
    out = sp.csr_matrix((basis.total_dim, basis.total_dim))
    phi = drive.potential(t, mb.grid.n_points)
    if phi is not None:
        diag = np.zeros(mb.dim)
        for g, (species, _, _) in enumerate(mb.groups):
            diag += species.charge * mb.site_sum(g, phi)
        out = out + lift_matter(basis, diag)
    for a, j in enumerate(drive.currents(t, len(modes))):
        if j != 0.0:
            out = out + (j / np.sqrt(2.0 * modes[a].omega)) * sp.kron(
                sp.identity(basis.matter_dim, format="csr"), _photon_x(basis, a), format="csr"
            )
    return out.tocsr()


def build_velocity_gauge(matter, modes, gauge=None, max_dim=DEFAULT_MAX_DIM):
    """Velocity-gauge Hamiltonian ``sum_l (p_l + Z_l A)^2/2m_l + ... + sum w(n+1/2)``."""
    gauge = VelocityGauge() if gauge is None else gauge
    if not isinstance(gauge, VelocityGauge):
        raise InvalidArgumentError("build_velocity_gauge needs a VelocityGauge")
    mb, basis = polariton_basis(matter, modes, max_dim)
    h = lift_matter(basis, mb.hamiltonian()) + sp.diags(_photon_free(basis, modes), 0, format="csr")
    amp = sp.csr_matrix((basis.photon_dim, basis.photon_dim))
    for a, m in enumerate(modes):
        if m.g != 0.0:
            amp = amp + (m.g * m.epsilon / np.sqrt(2.0 * m.omega)) * _photon_x(basis, a)
    if amp.nnz:
        h = h + sp.kron(mb.momentum_coupling(), amp, format="csr")
        if gauge.include_diamagnetic:
            h = h + mb.diamagnetic_prefactor() * sp.kron(
                sp.identity(mb.dim, format="csr"), (amp @ amp).tocsr(), format="csr"
            )
    label = "velocity" if gauge.include_diamagnetic else "velocity[no-A2]"
    return OperatorMatrix(h, label, basis)


def build_hamiltonian(matter, modes, gauge=None, max_dim=DEFAULT_MAX_DIM):
    if isinstance(gauge, VelocityGauge):
        return build_velocity_gauge(matter, modes, gauge, max_dim=max_dim)
    return build_length_gauge(matter, modes, gauge, max_dim=max_dim)


def _check_basis(matter, basis):
    mb = MatterBasis(matter)
    if basis.matter_dim != mb.dim:
        raise InvalidArgumentError(
            f"basis matter dimension {basis.matter_dim} does not match model dimension {mb.dim}"
        )
    return mb


def total_dipole_operator(matter, basis):
    """``R = sum_l Z_l x_l`` (clamped charges included) lifted to ``basis``."""
    mb = _check_basis(matter, basis)
    return OperatorMatrix(lift_matter(basis, mb.dipole()), "dipole", basis)


def displacement_operator(basis, modes, a):
    return mode_operator(basis, a, "q", modes[a].omega)


def parity_operator(matter, basis):
    """Joint parity ``x -> -x``, ``q_a -> -q_a`` as a signed permutation."""
    mb = _check_basis(matter, basis)
    perm, sign = mb.parity()
    ph_sign = (-1.0) ** basis.photon_occupations.sum(axis=1)
    ph = np.arange(basis.photon_dim)
    rows = (perm[:, None] * basis.photon_dim + ph[None, :]).reshape(-1)
    vals = (sign[:, None] * ph_sign[None, :]).reshape(-1)
    cols = np.arange(basis.total_dim)
    return OperatorMatrix(sp.csr_matrix((vals, (rows, cols)), shape=(basis.total_dim,) * 2), "parity", basis)


def field_residuals(psi, matter, modes, basis):
    """``w_a <q_a> - g_a <e_a . R>`` per mode (zero for length-gauge eigenstates)."""
    dip = total_dipole_operator(matter, basis)
    r = dip.expectation(psi).real
    out = []
    for a, m in enumerate(modes):
        q = displacement_operator(basis, modes, a).expectation(psi).real
        out.append(m.omega * q - m.g * m.epsilon * r)
    return np.array(out)


class TimeDependentHamiltonian:
    """``H(t) = H_static + drive(t)`` for the length gauge.

    Calling the object returns an :class:`OperatorMatrix`; ``delta(t)`` returns
    just the sparse drive part, which propagators use to reuse factorizations
    while the drive is off.
    """

    def __init__(self, matter, modes, drive, gauge=None, max_dim=DEFAULT_MAX_DIM):
        self.static = build_length_gauge(matter, modes, gauge, max_dim=max_dim)
        self.basis = self.static.basis
        self._mb = MatterBasis(matter)
        self.modes = modes
        self.drive = drive

    @property
    def dim(self):
        return self.static.dim

    def delta(self, t):
        return drive_terms(self._mb, self.basis, self.modes, self.drive, t)

    def __call__(self, t):
        return OperatorMatrix(self.static.matrix + self.delta(t), f"driven(t={t:g})", self.basis)


def lift_photon_operator(basis, a, op):
    return OperatorMatrix(lift_photon(basis, a, op), "photon", basis)
