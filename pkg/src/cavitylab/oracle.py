"""Analytic and brute-force references.

The bilinear model is the all-harmonic specialization of the length-gauge
Hamiltonian: unit-mass dipole coordinates ``x_j`` with frequencies
``omega0_j`` and photon coordinates ``q_a``, potential::

    V = sum_j omega0_j^2 x_j^2 / 2
      + sum_a (omega_a^2 / 2) (q_a - (1/omega_a) sum_j g_ja x_j)^2

(``g_ja`` already includes charge and polarization).  Without
self-polarization the ``(sum_j g_ja x_j)^2 / 2`` part is dropped.
"""

from dataclasses import dataclass, field
from itertools import combinations_with_replacement

import numpy as np
import scipy.sparse as sp

from .core.hamiltonians import build_length_gauge
from .core.operators import annihilation
from .core.types import LengthGauge
from .errors import InvalidArgumentError, InvalidModelError
from .solver.eigen import solve


@dataclass(frozen=True)
class BilinearModel:
    matter_freqs: tuple
    mode_freqs: tuple
    couplings: np.ndarray
    include_self_polarization: bool = True

    def __post_init__(self):
        w0 = tuple(float(w) for w in np.atleast_1d(self.matter_freqs))
        w = tuple(float(x) for x in np.atleast_1d(self.mode_freqs))
        g = np.asarray(self.couplings, dtype=float).reshape(len(w0), len(w))
        object.__setattr__(self, "matter_freqs", w0)
        object.__setattr__(self, "mode_freqs", w)
        object.__setattr__(self, "couplings", g)
        if any(x <= 0 for x in w0 + w):
            raise InvalidModelError("bilinear frequencies must be positive")

    @classmethod
    def single(cls, omega0, omega, g, include_self_polarization=True):
        return cls((omega0,), (omega,), [[g]], include_self_polarization)

    @classmethod
    def collective(cls, n, omega0, omega, g, include_self_polarization=True):
        return cls((omega0,) * n, (omega,), np.full((n, 1), g), include_self_polarization)

    @classmethod
    def from_harmonic_particle(cls, mass, charge, omega0, modes, include_self_polarization=True):
        """Bilinear model of one trapped particle; mass-weighted couplings."""
        g = [[m.g * m.epsilon * charge / np.sqrt(mass) for m in modes]]
        return cls((omega0,), tuple(m.omega for m in modes), g, include_self_polarization)

    @property
    def n_dipoles(self):
        return len(self.matter_freqs)

    @property
    def n_modes(self):
        return len(self.mode_freqs)

    def permuted(self, order):
        order = list(order)
        return BilinearModel(
            tuple(np.array(self.matter_freqs)[order]),
            self.mode_freqs,
            self.couplings[order],
            self.include_self_polarization,
        )


def quadratic_form(model):
    """Force-constant matrix ``K`` over ``(x_1..x_J, q_1..q_M)``."""
    w0 = np.array(model.matter_freqs)
    w = np.array(model.mode_freqs)
    g = model.couplings
    j = len(w0)
    k = np.zeros((j + len(w), j + len(w)))
    k[:j, :j] = np.diag(w0**2)
    if model.include_self_polarization:
        k[:j, :j] += g @ g.T
    k[:j, j:] = -g * w[None, :]
    k[j:, :j] = k[:j, j:].T
    k[j:, j:] = np.diag(w**2)
    return k


@dataclass(frozen=True)
class NormalModes:
    frequencies: np.ndarray
    form_eigenvalues: np.ndarray
    stable: bool

    @property
    def ground_energy(self):
        if not self.stable:
            return -np.inf
        return 0.5 * float(np.sum(self.frequencies))


def bilinear_normal_modes(model):
    """Ascending normal-mode frequencies; negative curvatures give NaN and ``stable=False``."""
    lam = np.linalg.eigvalsh(quadratic_form(model))
    freqs = np.where(lam > 0, np.sqrt(np.abs(lam)), np.nan)
    return NormalModes(freqs, lam, bool(np.all(lam > 0)))


def excitation_ladder(frequencies, max_quanta=2):
    """Sorted excitation energies with up to ``max_quanta`` total quanta."""
    out = []
    for n in range(1, max_quanta + 1):
        for combo in combinations_with_replacement(range(len(frequencies)), n):
            out.append(sum(frequencies[i] for i in combo))
    return np.sort(np.array(out))


def clamped_ground_energy(model, q, offsets=None):
    """Ground energy of the quantum dipoles with photon coordinates clamped at ``q``.

    ``offsets[a]`` adds a constant dipole term inside mode ``a``'s square
    (e.g. clamped charges).  Closed form: zero-point energy of ``K_xx`` plus the
    minimum of the quadratic potential over ``x``.
    """
    q = np.atleast_1d(np.asarray(q, dtype=float))
    c = np.zeros(model.n_modes) if offsets is None else np.atleast_1d(offsets).astype(float)
    w0 = np.array(model.matter_freqs)
    w = np.array(model.mode_freqs)
    g = model.couplings
    kxx = np.diag(w0**2) + (g @ g.T if model.include_self_polarization else 0.0)
    lam = np.linalg.eigvalsh(kxx)
    if np.any(lam <= 0):
        return -np.inf
    # V(x) = x.Kxx.x/2 + b.x + const
    b = -(g * w[None, :]) @ q
    const = 0.5 * np.sum(w**2 * q**2) - np.sum(w * q * c)
    if model.include_self_polarization:
        b = b + g @ c
        const += 0.5 * np.sum(c**2)
    x_star = -np.linalg.solve(kxx, b)
    v_min = 0.5 * x_star @ kxx @ x_star + b @ x_star + const
    return 0.5 * float(np.sum(np.sqrt(lam))) + float(v_min)


def fock_hamiltonian(model, n_max):
    """Bilinear model in a product Fock basis (dipoles first, then modes).

    Squares of a coordinate use the exact matrix of ``x^2`` in the truncated
    basis rather than the product of truncated ``x`` matrices, so a smaller
    ``n_max`` gives a compression of the larger Hamiltonian and ED ground
    energies decrease monotonically with ``n_max``.
    """
    freqs = list(model.matter_freqs) + list(model.mode_freqs)
    cut = list(np.broadcast_to(np.atleast_1d(n_max), (len(freqs),)))
    dims = [n + 1 for n in cut]

    def lift(i, op):
        out = sp.identity(1, format="csr")
        for k, d in enumerate(dims):
            out = sp.kron(out, op if k == i else sp.identity(d, format="csr"), format="csr")
        return out

    coords, square_fix = [], []
    h = sp.csr_matrix((int(np.prod(dims)),) * 2)
    for i, (w, n) in enumerate(zip(freqs, cut)):
        a = annihilation(n)
        x = (a + a.T) / np.sqrt(2.0 * w)
        x2 = (a @ a + (a @ a).T + sp.diags(2.0 * np.arange(n + 1) + 1.0, 0)) / (2.0 * w)
        h = h + lift(i, sp.diags(w * (np.arange(n + 1) + 0.5), 0, format="csr"))
        coords.append(lift(i, x))
        square_fix.append(lift(i, (x2 - x @ x).tocsr()))
    j = model.n_dipoles
    for a in range(model.n_modes):
        w = model.mode_freqs[a]
        dip = sp.csr_matrix(h.shape)
        for d in range(j):
            dip = dip + model.couplings[d, a] * coords[d]
        h = h - w * (coords[j + a] @ dip)
        if model.include_self_polarization:
            h = h + 0.5 * (dip @ dip)
            for d in range(j):
                h = h + 0.5 * model.couplings[d, a] ** 2 * square_fix[d]
    return h.tocsr()


@dataclass
class OracleReport:
    frequencies: list
    stable: bool
    levels: list
    final_gap: float
    converged: bool
    ground_converging: bool
    notes: list = field(default_factory=list)

    def to_dict(self):
        return {
            "frequencies": self.frequencies,
            "stable": self.stable,
            "levels": self.levels,
            "final_gap": self.final_gap,
            "converged": self.converged,
            "ground_converging": self.ground_converging,
            "notes": self.notes,
        }


def ed_vs_oracle(model, n_max_ladder, gap_tol=1e-8, n_gaps=None, dense_limit=4096):
    """Compare Fock-space ED excitation gaps with the normal-mode ladder."""
    modes = bilinear_normal_modes(model)
    n_gaps = n_gaps or (model.n_dipoles + model.n_modes)
    predicted = excitation_ladder(np.nan_to_num(modes.frequencies), max_quanta=2)[:n_gaps] if modes.stable else None
    levels = []
    for n_max in n_max_ladder:
        h = fock_hamiltonian(model, n_max)
        k = min(n_gaps + 1, h.shape[0] - 1)
        spectrum = solve(h, k, dense_limit=dense_limit)
        e = spectrum.eigenvalues
        gaps = (e[1:] - e[0])[:n_gaps]
        entry = {"n_max": int(np.max(n_max)), "ground": float(e[0]), "gaps": gaps.tolist()}
        if predicted is not None:
            entry["max_gap_error"] = float(np.max(np.abs(gaps - predicted[: len(gaps)])))
            entry["ground_error"] = float(e[0] - modes.ground_energy)
        levels.append(entry)
    grounds = [lv["ground"] for lv in levels]
    steps = np.abs(np.diff(grounds))
    ground_converging = bool(len(steps) == 0 or (np.all(np.diff(steps) <= gap_tol) and steps[-1] < gap_tol))
    final = levels[-1].get("max_gap_error", np.inf)
    notes = []
    if not modes.stable:
        notes.append("quadratic form is indefinite: no bounded ground state")
    return OracleReport(
        [float(f) for f in modes.frequencies],
        modes.stable,
        levels,
        float(final),
        bool(modes.stable and final < gap_tol),
        ground_converging,
        notes,
    )


@dataclass(frozen=True)
class CollectiveShift:
    n_dipoles: int
    frequencies: tuple
    lower: float
    upper: float
    splitting: float
    dressed_frequency: float
    shift: float
    exceeds_double: bool

    def to_dict(self):
        return dict(self.__dict__, frequencies=list(self.frequencies))


def collective_mode_shift(n_dipoles, omega0, omega, g, include_self_polarization=True):
    """Polariton pair and self-polarization-dressed cavity frequency for ``N`` dipoles.

    ``dressed_frequency`` is ``sqrt(nu_+^2 + nu_-^2 - omega0^2)``, which for the
    shifted-square form equals ``sqrt(omega^2 + N g^2)``: the cavity frequency
    renormalized by the collective self-polarization term.  The
    dark manifold stays at ``omega0``.
    """
    if n_dipoles < 0:
        raise InvalidArgumentError("n_dipoles must be >= 0")
    if n_dipoles == 0:
        return CollectiveShift(0, (omega,), omega, omega, 0.0, omega, 0.0, False)
    nm = bilinear_normal_modes(BilinearModel.collective(n_dipoles, omega0, omega, g, include_self_polarization))
    f = nm.frequencies
    # bright pair: the two frequencies that are not the (N-1)-fold dark value
    dark = np.isclose(f, omega0, rtol=0, atol=1e-12 * max(1.0, omega0))
    bright = f[~dark] if (~dark).sum() == 2 else np.array([f[0], f[-1]])
    if len(bright) < 2:
        bright = np.array([f[0], f[-1]])
    lower, upper = float(np.nanmin(bright)), float(np.nanmax(bright))
    dressed = float(np.sqrt(max(lower**2 + upper**2 - omega0**2, 0.0)))
    return CollectiveShift(
        n_dipoles, tuple(float(x) for x in f), lower, upper, upper - lower, dressed, dressed - omega, dressed > 2 * omega
    )


@dataclass
class InstabilityTable:
    rows: list
    include_self_polarization: bool
    verdict: str
    threshold: float
    cauchy_tol: float

    def to_dict(self):
        return {
            "include_self_polarization": self.include_self_polarization,
            "verdict": self.verdict,
            "threshold": self.threshold,
            "cauchy_tol": self.cauchy_tol,
            "rows": self.rows,
        }


def classify_ladder(energies, cauchy_tol=1e-8):
    """``converged`` / ``unbounded`` / ``undetermined`` for a ground-energy ladder.

    Unbounded means every step lowers the energy by more than a threshold of
    10 % of the first decrement, and decrements never shrink.
    """
    e = np.asarray(energies, dtype=float)
    d = np.diff(e)
    if len(d) == 0:
        return "undetermined", 0.0
    threshold = 0.1 * abs(d[0])
    steps = np.abs(d)
    if steps[-1] < cauchy_tol and np.all(np.diff(steps) <= cauchy_tol):
        return "converged", threshold
    decrements = -d
    if np.all(decrements > threshold) and np.all(np.diff(decrements) >= 0):
        return "unbounded", threshold
    return "undetermined", threshold


def instability_scan(matter, modes, ladder, include_self_polarization=True, tol=1e-10, cauchy_tol=1e-8):
    """Ground energy along a ``(half_width, n_max)`` basis ladder at fixed spacing.

    Each level places the grid on ``[-half_width, half_width]`` with the
    spacing of ``matter.grid``.
    """
    if len(ladder) < 4:
        raise InvalidArgumentError("instability scan needs at least 4 ladder levels")
    h = matter.grid.spacing
    rows, energies = [], []
    for level, (half_width, n_max) in enumerate(ladder):
        n_points = int(round(2 * half_width / h)) + 1
        m = matter.with_grid(-half_width, half_width, n_points)
        ham = build_length_gauge(m, modes.with_n_max(n_max), LengthGauge(include_self_polarization))
        e0 = float(solve(ham, 1, tol=tol).eigenvalues[0])
        energies.append(e0)
        rows.append(
            {
                "level": level,
                "half_width": float(half_width),
                "n_points": n_points,
                "n_max": int(np.max(n_max)),
                "dim": ham.dim,
                "E0": e0,
                "dE": float(e0 - energies[-2]) if level else float("nan"),
            }
        )
    verdict, threshold = classify_ladder(energies, cauchy_tol)
    return InstabilityTable(rows, include_self_polarization, verdict, threshold, cauchy_tol)
