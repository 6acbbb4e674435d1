"""Canonical ensembles, reduced density matrices and photon fluctuations."""

import csv
import warnings
from dataclasses import dataclass

import numpy as np

from .core.hamiltonians import build_hamiltonian
from .core.operators import OperatorMatrix, mode_operator
from .errors import InvalidArgumentError
from .solver.eigen import SpectrumResult, solve

DEGENERACY_TOL = 1e-10
ENTROPY_CUTOFF = 1e-14


class TruncationWarning(UserWarning):
    """Boltzmann weight of the first dropped state is not negligible."""


@dataclass(frozen=True, eq=False)
class ThermalEnsemble:
    temperature: float
    energies: np.ndarray
    weights: np.ndarray
    vectors: np.ndarray
    truncation_bound: float
    basis: object = None
    neglected_weight: float = 0.0

    @property
    def n_states(self):
        return len(self.weights)

    @property
    def mean_energy(self):
        return float(self.weights @ self.energies)

    def density_matrix(self):
        return (self.vectors * self.weights) @ self.vectors.conj().T


def _weights(energies, temperature):
    e = np.asarray(energies, dtype=float)
    if temperature == 0:
        ground = np.abs(e - e[0]) <= DEGENERACY_TOL * max(1.0, abs(e[0]))
        w = ground.astype(float)
        return w / w.sum()
    with np.errstate(over="ignore"):
        w = np.exp(-(e - e[0]) / temperature)
    return w / w.sum()


def truncation_bound(energies, temperature, n_states):
    """Relative Boltzmann weight ``exp(-(E_n - E_0)/T)`` of the first dropped level.

    When the spectrum has no level ``n_states`` the next one is extrapolated
    geometrically from the last gap.
    """
    e = np.asarray(energies, dtype=float)
    if temperature == 0:
        return 0.0
    if n_states < len(e):
        nxt = e[n_states]
    elif len(e) >= 2:
        nxt = e[-1] + max(e[-1] - e[-2], 0.0)
    else:
        return 1.0
    with np.errstate(over="ignore"):
        return float(np.exp(-(nxt - e[0]) / temperature))


def neglected_weight(energies, temperature, n_states):
    """Normalized Boltzmann weight of all known levels beyond ``n_states``.

    Levels the spectrum does not contain are represented by the single
    extrapolated :func:`truncation_bound` weight when nothing known is dropped.
    """
    e = np.asarray(energies, dtype=float)
    if temperature == 0:
        return 0.0
    with np.errstate(over="ignore"):
        w = np.exp(-(e - e[0]) / temperature)
    if n_states >= len(e):
        tail = truncation_bound(e, temperature, n_states)
        return float(tail / (w.sum() + tail))
    return float(w[n_states:].sum() / w.sum())


def canonical_ensemble(spectrum, temperature, n_states=None, bound_tol=1e-8, warn_tol=1e-6):
    """Boltzmann ensemble over the lowest levels of ``spectrum``.

    Without ``n_states`` the smallest count whose dropped weight (summed over
    the known levels, see :func:`neglected_weight`) and truncation bound are
    both below ``bound_tol`` is used (all available levels at most).  A bound above
    ``warn_tol`` raises :class:`TruncationWarning`.  At ``T = 0`` the weight is
    shared equally over the degenerate ground manifold.
    """
    if temperature < 0 or not np.isfinite(temperature):
        raise InvalidArgumentError("temperature must be finite and >= 0")
    e = np.asarray(spectrum.eigenvalues, dtype=float)
    if spectrum.eigenvectors is None:
        raise InvalidArgumentError("thermal averages need eigenvectors")
    if n_states is None:
        n_states = len(e)
        for n in range(1, len(e) + 1):
            if max(truncation_bound(e, temperature, n), neglected_weight(e, temperature, n)) < bound_tol:
                n_states = n
                break
        if temperature == 0:
            n_states = int(np.sum(np.abs(e - e[0]) <= DEGENERACY_TOL * max(1.0, abs(e[0]))))
    n_states = int(min(n_states, len(e)))
    if n_states < 1:
        raise InvalidArgumentError("n_states must be >= 1")
    bound = truncation_bound(e, temperature, n_states)
    if bound > warn_tol:
        warnings.warn(
            f"truncation bound {bound:.2e} at T={temperature:g} with {n_states} states exceeds {warn_tol:g}",
            TruncationWarning,
            stacklevel=2,
        )
    w = _weights(e[:n_states], temperature)
    return ThermalEnsemble(float(temperature), e[:n_states].copy(), w, spectrum.eigenvectors[:, :n_states], bound,
                           spectrum.basis, neglected_weight(e, temperature, n_states))


def thermal_expectation(ensemble, op):
    """``Tr(rho A)`` for an operator or a dense/sparse matrix."""
    a = op.matrix if isinstance(op, OperatorMatrix) else op
    v = ensemble.vectors
    diag = np.einsum("ij,ij->j", v.conj(), a @ v).real
    return float(ensemble.weights @ diag)


@dataclass(frozen=True, eq=False)
class ReducedDensityMatrix:
    subsystem: str
    matrix: np.ndarray
    eigenvalues: np.ndarray

    @property
    def trace(self):
        return float(np.trace(self.matrix).real)

    @property
    def purity(self):
        return float(np.sum(self.eigenvalues**2))


def _states(state):
    if isinstance(state, ThermalEnsemble):
        return state.vectors, state.weights
    v = np.asarray(state)
    return v.reshape(-1, 1), np.ones(1)


def reduce(state, keep, basis):
    """Reduced density matrix of a pure state or ensemble on ``matter`` or ``photon``."""
    if keep not in ("matter", "photon"):
        raise InvalidArgumentError("keep must be 'matter' or 'photon'")
    dp, dm = basis.photon_dim, basis.matter_dim
    vecs, weights = _states(state)
    if vecs.shape[0] != dp * dm:
        raise InvalidArgumentError(f"state of length {vecs.shape[0]} does not match basis dimension {dp * dm}")
    size = dm if keep == "matter" else dp
    rho = np.zeros((size, size), dtype=complex)
    for w, v in zip(weights, vecs.T):
        if w == 0:
            continue
        m = v.reshape(dm, dp)
        rho += w * (m @ m.conj().T if keep == "matter" else m.T @ m.conj())
    rho = 0.5 * (rho + rho.conj().T)
    return ReducedDensityMatrix(keep, rho, np.linalg.eigvalsh(rho))


def entanglement_entropy(rdm, cutoff=ENTROPY_CUTOFF):
    """Von Neumann entropy ``-sum lam ln lam`` over eigenvalues above ``cutoff``."""
    lam = rdm.eigenvalues[rdm.eigenvalues >= cutoff]
    return float(-np.sum(lam * np.log(lam)))


def photon_entropy(ensemble, basis):
    """Weight-averaged eigenstate entanglement entropy of the photon subsystem.

    Averaging pure-state entropies keeps the quantity an entanglement measure;
    the entropy of the mixed photon state would also count the classical
    Boltzmann mixing.
    """
    return float(
        sum(w * entanglement_entropy(reduce(v, "photon", basis)) for w, v in zip(ensemble.weights, ensemble.vectors.T)
            if w > 0)
    )


def mode_fluctuations(state, basis, modes, mode=0):
    """First and second moments of ``q`` and ``p`` of one mode.

    ``state`` is a pure state vector or a :class:`ThermalEnsemble`.
    """
    ens = state if isinstance(state, ThermalEnsemble) else ThermalEnsemble(0.0, np.zeros(1), np.ones(1),
                                                                           np.asarray(state).reshape(-1, 1), 0.0)
    omega = modes.modes[mode].omega
    out = {}
    for name in ("q", "p"):
        op = mode_operator(basis, mode, name, omega).matrix
        m1 = thermal_expectation(ens, op)
        m2 = thermal_expectation(ens, op @ op)
        out[f"mean_{name}"] = m1
        out[f"var_{name}"] = m2 - m1**2
    return out


@dataclass
class ThermalSweep:
    temperatures: np.ndarray
    mean_energy: np.ndarray
    photon_entropy: np.ndarray
    q_variance: np.ndarray
    n_states: np.ndarray
    truncation_bound: np.ndarray

    def to_csv(self, path):
        n_modes = self.q_variance.shape[1]
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["T", "mean_energy", "S_photon", *[f"var_q{a}" for a in range(n_modes)],
                             "n_states", "truncation_bound"])
            for i, t in enumerate(self.temperatures):
                writer.writerow([repr(float(t)), repr(float(self.mean_energy[i])), repr(float(self.photon_entropy[i]))]
                                + [repr(float(v)) for v in self.q_variance[i]]
                                + [int(self.n_states[i]), repr(float(self.truncation_bound[i]))])


def thermal_sweep(h_or_spectrum, modes, temperatures, n_levels=None, matter=None, gauge=None):
    """Energy, photon entropy and quadrature variances over a temperature list.

    Accepts a precomputed :class:`SpectrumResult` (with eigenvectors and a
    polariton basis) or a Hamiltonian; in the latter case ``n_levels`` lowest
    levels are solved for (all of them for small dimensions).
    """
    if isinstance(h_or_spectrum, SpectrumResult):
        spectrum = h_or_spectrum
    else:
        h = h_or_spectrum if isinstance(h_or_spectrum, OperatorMatrix) else build_hamiltonian(matter, modes, gauge)
        spectrum = solve(h, n_levels)
    basis = spectrum.basis
    if basis is None:
        raise InvalidArgumentError("thermal sweep needs a spectrum carrying its polariton basis")
    temps = np.asarray(temperatures, dtype=float)
    rows = {"E": [], "S": [], "V": [], "n": [], "b": []}
    with warnings.catch_warnings():
        warnings.simplefilter("always", TruncationWarning)
        for t in temps:
            ens = canonical_ensemble(spectrum, t)
            rows["E"].append(ens.mean_energy)
            rows["S"].append(photon_entropy(ens, basis))
            rows["V"].append([mode_fluctuations(ens, basis, modes, a)["var_q"] for a in range(len(modes.modes))])
            rows["n"].append(ens.n_states)
            rows["b"].append(ens.truncation_bound)
    return ThermalSweep(temps, np.array(rows["E"]), np.array(rows["S"]), np.array(rows["V"]).reshape(len(temps), -1),
                        np.array(rows["n"]), np.array(rows["b"]))
