"""Few-level reductions: Rabi, Jaynes-Cummings, Tavis-Cummings/Dicke.

Two-level convention: index 0 is the ground state, 1 the excited state, and
energies are measured from the bare ground state with no photon zero-point,
so at ``g = 0`` the spectrum is ``{0, omega_a} + n omega_c``.  Emitter 0 is
the most significant factor of the matter index.
"""

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from ..errors import InvalidArgumentError
from .hamiltonians import DEFAULT_MAX_DIM, check_budget
from .operators import OperatorMatrix, PolaritonBasis, annihilation, number
from ..units import FINE_STRUCTURE

_SIGMA_PLUS = sp.csr_matrix(np.array([[0.0, 0.0], [1.0, 0.0]]))


def _emitter_op(op, j, n):
    out = sp.identity(1, format="csr")
    for i in range(n):
        out = sp.kron(out, op if i == j else sp.identity(2, format="csr"), format="csr")
    return out


def build_tavis_cummings(n_emitters, omega_c, omega_a, g, rwa=True, n_max=1, max_dim=DEFAULT_MAX_DIM):
    """``N`` identical two-level emitters coupled to one mode, each with ``g``."""
    if n_emitters < 1:
        raise InvalidArgumentError("n_emitters must be >= 1")
    if n_max < 1:
        raise InvalidArgumentError("n_max must be >= 1")
    basis = PolaritonBasis(2**n_emitters, (n_max,))
    check_budget(basis.total_dim, max_dim)
    a = annihilation(n_max)
    eye_m = sp.identity(basis.matter_dim, format="csr")
    eye_p = sp.identity(n_max + 1, format="csr")
    h = omega_c * sp.kron(eye_m, number(n_max), format="csr")
    for j in range(n_emitters):
        sp_j = _emitter_op(_SIGMA_PLUS, j, n_emitters)
        sm_j = sp_j.T.tocsr()
        h = h + omega_a * sp.kron(sp_j @ sm_j, eye_p, format="csr")
        h = h + g * (sp.kron(sp_j, a, format="csr") + sp.kron(sm_j, a.T, format="csr"))
        if not rwa:
            h = h + g * (sp.kron(sp_j, a.T, format="csr") + sp.kron(sm_j, a, format="csr"))
    label = f"{'jaynes-cummings' if rwa else 'rabi'}" if n_emitters == 1 else f"tavis-cummings[N={n_emitters}]"
    return OperatorMatrix(h, label, basis)


def build_rabi(omega_c, omega_a, g, rwa=False, n_max=1, max_dim=DEFAULT_MAX_DIM):
    """Two-level emitter times Fock space; ``rwa=True`` gives Jaynes-Cummings."""
    return build_tavis_cummings(1, omega_c, omega_a, g, rwa=rwa, n_max=n_max, max_dim=max_dim)


def excitation_number(basis):
    """Diagonal of ``sum_j sigma+_j sigma-_j + a^+ a`` for an emitter basis."""
    atoms = np.array([bin(i).count("1") for i in range(basis.matter_dim)])
    return (atoms[:, None] + basis.photon_occupations[:, 0][None, :]).reshape(-1)


def sector(op, n_excitations):
    """Restrict an excitation-conserving operator to one excitation sector.

    Returns the dense block and the flat indices it lives on.
    """
    idx = np.nonzero(excitation_number(op.basis) == n_excitations)[0]
    return op.matrix[idx][:, idx].toarray(), idx


def emitter_operator(basis, which, j=None):
    """Lifted ``sigma_x`` / ``sigma+sigma-`` of emitter ``j`` (or summed over all)."""
    n = int(round(np.log2(basis.matter_dim)))
    targets = range(n) if j is None else [j]
    out = sp.csr_matrix((basis.matter_dim, basis.matter_dim))
    for k in targets:
        s = _emitter_op(_SIGMA_PLUS, k, n)
        if which == "sx":
            out = out + s + s.T
        elif which == "ee":
            out = out + s @ s.T
        else:
            raise InvalidArgumentError(f"unknown emitter operator {which!r}")
    return OperatorMatrix(sp.kron(out, sp.identity(basis.photon_dim), format="csr"), which, basis)


@dataclass(frozen=True)
class MassRenormalization:
    photon_mass: float
    bare_mass: float
    valid: bool


def photon_mass(cutoff_wavenumber, fine_structure=FINE_STRUCTURE, physical_mass=1.0):
    """Mode-continuum mass ``m_ph = (4 / 3 pi) alpha (hbar / c) Lambda`` in a.u.

    With ``hbar = 1`` and ``c = 1/alpha`` this is ``(4/3pi) alpha^2 Lambda``.
    ``bare_mass = physical_mass - m_ph``; ``valid`` is false once it is not
    positive (cutoff too large for a renormalizable theory).
    """
    if cutoff_wavenumber < 0:
        raise InvalidArgumentError("cutoff wavenumber must be non-negative")
    c = 1.0 / fine_structure
    m_ph = 4.0 / (3.0 * np.pi) * fine_structure * (1.0 / c) * cutoff_wavenumber
    bare = physical_mass - m_ph
    return MassRenormalization(m_ph, bare, bool(bare > 0))


def critical_cutoff(fine_structure=FINE_STRUCTURE, physical_mass=1.0):
    """Cutoff wavenumber at which the bare mass vanishes."""
    return physical_mass * 3.0 * np.pi / (4.0 * fine_structure**2)
