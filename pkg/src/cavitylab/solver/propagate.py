"""Norm-preserving Crank-Nicolson time stepping with observable recording."""

import csv
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from ..core.hamiltonians import TimeDependentHamiltonian
from ..core.operators import OperatorMatrix
from ..errors import InvalidArgumentError, PropagationError


@dataclass(eq=False)
class Trajectory:
    times: np.ndarray
    state_norm: np.ndarray
    observables: dict = field(default_factory=dict)
    final_state: np.ndarray = None

    @property
    def dt(self):
        return float(self.times[1] - self.times[0])

    @property
    def t_end(self):
        return float(self.times[-1] - self.times[0])

    def to_csv(self, path):
        names = list(self.observables)
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["t", "norm", *names])
            for i, t in enumerate(self.times):
                writer.writerow([repr(float(t)), repr(float(self.state_norm[i]))]
                                + [repr(float(self.observables[n][i])) for n in names])


class _Stepper:
    """Cayley-form solver ``(1 + i dt H/2) psi' = (1 - i dt H/2) psi``."""

    def __init__(self, dt, dim, shift):
        self.dt = dt
        self.eye = sp.identity(dim, dtype=complex, format="csc")
        self.shift = shift
        self._cached_lu = None

    def factor(self, h):
        a = (self.eye + 0.5j * self.dt * (h - self.shift * self.eye)).tocsc()
        b = (self.eye - 0.5j * self.dt * (h - self.shift * self.eye)).tocsr()
        return spla.splu(a), b

    def static(self, h):
        if self._cached_lu is None:
            self._cached_lu = self.factor(h)
        return self._cached_lu


def propagate(h, psi0, dt, t_end, observables=None, reference_energy=None, record_every=1, t0=0.0):
    """Integrate ``i d/dt psi = H(t) psi`` from ``t0`` to ``t0 + t_end``.

    ``h`` is an :class:`OperatorMatrix`, a :class:`TimeDependentHamiltonian`,
    or any callable ``t -> OperatorMatrix``.  Drive-dependent Hamiltonians
    are evaluated at step midpoints.  ``reference_energy`` is subtracted from
    ``H`` inside the stepper (a global phase; it only trims the phase error
    of the Cayley map); by default it is ``<psi0|H(t0)|psi0>``.  The
    recorded ``energy`` is always the unshifted ``<H(t)>``.
    """
    if dt <= 0:
        raise InvalidArgumentError("dt must be positive")
    psi = np.array(psi0, dtype=complex)
    norm0 = np.linalg.norm(psi)
    if abs(norm0 - 1.0) > 1e-10:
        raise InvalidArgumentError(f"initial state must be normalized, got norm {norm0}")
    n_steps = int(round(t_end / dt))
    if n_steps < 1:
        raise InvalidArgumentError("t_end must cover at least one step")
    observables = dict(observables or {})

    if isinstance(h, OperatorMatrix):
        h_static, h_of_t, delta = h.matrix, None, None
    elif isinstance(h, TimeDependentHamiltonian):
        h_static, h_of_t, delta = h.static.matrix, None, h.delta
    elif callable(h):
        h_static, h_of_t, delta = None, h, None
    else:
        raise InvalidArgumentError("h must be an OperatorMatrix or a callable of time")

    def hamiltonian_at(t):
        if h_of_t is not None:
            return h_of_t(t).matrix, True
        if delta is not None:
            d = delta(t)
            if d.nnz and np.any(d.data != 0):
                return h_static + d, True
        return h_static, False

    dim = psi.shape[0]
    h_init, _ = hamiltonian_at(t0)
    if h_init.shape[0] != dim:
        raise InvalidArgumentError("state and Hamiltonian dimensions differ")
    shift = np.vdot(psi, h_init @ psi).real if reference_energy is None else float(reference_energy)
    stepper = _Stepper(dt, dim, shift)

    n_rec = n_steps // record_every + 1
    times = np.empty(n_rec)
    norms = np.empty(n_rec)
    series = {name: np.empty(n_rec) for name in observables}
    energy = np.empty(n_rec)

    def record(j, t, hmat):
        times[j] = t
        norms[j] = np.linalg.norm(psi)
        energy[j] = np.vdot(psi, hmat @ psi).real
        for name, op in observables.items():
            series[name][j] = np.vdot(psi, op.matrix @ psi).real

    record(0, t0, h_init)
    j = 1
    for step in range(1, n_steps + 1):
        t_mid = t0 + (step - 0.5) * dt
        hmat, varying = hamiltonian_at(t_mid)
        try:
            lu, rhs = stepper.factor(hmat) if varying else stepper.static(hmat)
            psi = lu.solve(rhs @ psi)
        except RuntimeError as exc:
            raise PropagationError(f"linear solve failed: {exc}", step=step) from exc
        if not np.all(np.isfinite(psi)):
            raise PropagationError("non-finite state after linear solve", step=step)
        if step % record_every == 0:
            t = t0 + step * dt
            h_rec = hmat if h_of_t is None and delta is None else hamiltonian_at(t)[0]
            record(j, t, h_rec)
            j += 1
    series["energy"] = energy
    return Trajectory(times, norms, series, psi)


def kick(psi, op, strength):
    """Apply the impulse ``exp(-i strength * op)`` of a delta-function drive."""
    a = op.matrix if isinstance(op, OperatorMatrix) else op
    return spla.expm_multiply(-1j * strength * sp.csc_matrix(a), np.asarray(psi, dtype=complex))
