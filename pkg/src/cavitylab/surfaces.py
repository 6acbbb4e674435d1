"""Clamped-coordinate energy surfaces and finite-difference non-adiabatic couplings.

Axes are named ``R<i>`` (the i-th clamped particle coordinate, in
``MatterModel.clamped_coordinates`` order) or ``q<a>`` (photon displacement
of mode ``a``).  Coordinates not on an axis take their value from
``fixed`` (default: the model's clamped positions, ``q = 0``).
"""

import csv
import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .core.hamiltonians import build_length_gauge
from .core.matter import MatterBasis
from .core.operators import OperatorMatrix
from .core.types import LengthGauge
from .errors import CavityLabError, InvalidArgumentError
from .solver.eigen import solve

DEGENERACY_TOL = 1e-10
CONTINUITY_SAFETY = 10.0
_AXIS = re.compile(r"^(R|q)(\d+)$")


@dataclass(eq=False)
class SurfaceGrid:
    kind: str
    axes: dict
    energies: np.ndarray
    vectors: np.ndarray = None
    fixed: dict = field(default_factory=dict)
    failed: list = field(default_factory=list)
    degenerate: list = field(default_factory=list)
    couplings: dict = field(default_factory=dict)

    @property
    def axis_names(self):
        return list(self.axes)

    @property
    def shape(self):
        return tuple(len(v) for v in self.axes.values())

    @property
    def k(self):
        return self.energies.shape[-1]

    def nodes(self):
        """``(index tuple, coordinate dict)`` in C order."""
        names = self.axis_names
        for idx in np.ndindex(*self.shape):
            yield idx, {n: float(self.axes[n][i]) for n, i in zip(names, idx)}

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow([*self.axis_names, *[f"E{i}" for i in range(self.k)]])
            for idx, coords in self.nodes():
                writer.writerow([repr(coords[n]) for n in self.axis_names]
                                + [repr(float(e)) for e in self.energies[idx]])

    def couplings_to_csv(self, path):
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["axis", *self.axis_names, "i", "j", "d_ij"])
            for axis, d in self.couplings.items():
                for idx, coords in self.nodes():
                    for i in range(self.k):
                        for j in range(self.k):
                            if i != j:
                                writer.writerow([axis, *[repr(coords[n]) for n in self.axis_names], i, j,
                                                 repr(float(d[idx + (i, j)]))])


def _parse_axes(axes, matter, modes):
    n_r = len(matter.clamped_coordinates)
    out = {}
    for name, values in axes.items():
        m = _AXIS.match(name)
        if not m:
            raise InvalidArgumentError(f"axis name {name!r} must be R<i> or q<a>")
        idx = int(m.group(2))
        limit = n_r if m.group(1) == "R" else len(modes.modes)
        if idx >= limit:
            raise InvalidArgumentError(f"axis {name!r} out of range ({limit} available)")
        v = np.asarray(values, dtype=float).reshape(-1)
        if len(v) < 1:
            raise InvalidArgumentError(f"axis {name!r} is empty")
        out[name] = v
    return out


def _node_coordinates(matter, modes, coords, fixed):
    positions = [x for _, x in matter.clamped_coordinates]
    qs = [0.0] * len(modes.modes)
    for name, value in {**fixed, **coords}.items():
        kind, i = _AXIS.match(name).groups()
        if kind == "R":
            positions[int(i)] = value
        else:
            qs[int(i)] = value
    return positions, np.array(qs)


def clamped_hamiltonian(matter, modes, q, include_self_polarization=True):
    """Electronic Hamiltonian with clamped photon displacements ``q``.

    Adds ``sum_a (w_a^2/2)(q_a - (g_a/w_a) e_a . R)^2`` to the matter
    Hamiltonian (the photon kinetic term is dropped, like the nuclear one).
    """
    mb = MatterBasis(matter)
    d = mb.dipole()
    diag = np.zeros(mb.dim)
    for mode, qa in zip(modes.modes, np.atleast_1d(q)):
        ge = mode.g * mode.epsilon
        diag += 0.5 * mode.omega**2 * qa**2 - mode.omega * ge * qa * d
        if include_self_polarization:
            diag += 0.5 * ge**2 * d**2
    return OperatorMatrix(mb.hamiltonian() + sp.diags(diag, 0, format="csr"), "cavity-BO")


def _solve_nodes(axes, fixed, k, build, workers):
    names = list(axes)
    shape = tuple(len(v) for v in axes.values())
    idxs = list(np.ndindex(*shape))

    def run(idx):
        coords = {n: float(axes[n][i]) for n, i in zip(names, idx)}
        try:
            spectrum = solve(build(coords), k)
            return idx, spectrum.eigenvalues, spectrum.eigenvectors
        except (CavityLabError, np.linalg.LinAlgError):
            return idx, None, None

    if workers and workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            results = list(pool.map(run, idxs))
    else:
        results = [run(i) for i in idxs]
    dim = next((v.shape[0] for _, _, v in results if v is not None), 0)
    energies = np.full(shape + (k,), np.nan)
    vectors = np.full(shape + (dim, k), np.nan, dtype=complex) if dim else None
    failed = []
    for idx, e, v in results:
        if e is None:
            failed.append(idx)
            continue
        energies[idx] = e
        vectors[idx] = v
    if vectors is not None and np.all(np.isreal(vectors[~np.isnan(vectors)])):
        vectors = vectors.real
    return energies, vectors, failed


def _degenerate_nodes(energies, tol=DEGENERACY_TOL):
    out = []
    for idx in np.ndindex(*energies.shape[:-1]):
        e = energies[idx]
        if np.any(np.abs(np.diff(e)) < tol):
            out.append(idx)
    return out


def cavity_bo_surface(matter, modes, axes, k=1, fixed=None, include_self_polarization=True, keep_vectors=True,
                      workers=1):
    """``E_i(R, q)`` with clamped particle and photon coordinates."""
    fixed = dict(fixed or {})
    axes = _parse_axes(axes, matter, modes)
    _parse_axes({n: [v] for n, v in fixed.items()}, matter, modes)
    if not matter.clamped_coordinates and not any(n.startswith("q") for n in axes):
        raise InvalidArgumentError("cavity-BO scan needs clamped coordinates or a q axis")

    def build(coords):
        positions, q = _node_coordinates(matter, modes, coords, fixed)
        m = matter.with_clamped_positions(positions) if positions else matter
        return clamped_hamiltonian(m, modes, q, include_self_polarization)

    energies, vectors, failed = _solve_nodes(axes, fixed, k, build, workers)
    return SurfaceGrid("cavity-BO", axes, energies, vectors if keep_vectors else None, fixed, failed,
                       _degenerate_nodes(energies))


def polaritonic_surface(matter, modes, axes, k=1, fixed=None, gauge=None, keep_vectors=True, workers=1):
    """``E_i^pol(R)``: clamped particles, photons fully quantum."""
    fixed = dict(fixed or {})
    axes = _parse_axes(axes, matter, modes)
    if any(n.startswith("q") for n in list(axes) + list(fixed)):
        raise InvalidArgumentError("polaritonic surfaces take only R axes")
    if not matter.clamped_coordinates:
        raise InvalidArgumentError("polaritonic scan needs clamped coordinates")
    gauge = gauge or LengthGauge()

    def build(coords):
        positions, _ = _node_coordinates(matter, modes, coords, fixed)
        return build_length_gauge(matter.with_clamped_positions(positions), modes, gauge)

    energies, vectors, failed = _solve_nodes(axes, fixed, k, build, workers)
    return SurfaceGrid("polaritonic", axes, energies, vectors if keep_vectors else None, fixed, failed,
                       _degenerate_nodes(energies))


def align_phases(vectors, axis):
    """Fix eigenvector phases along ``axis`` by maximizing overlap with the previous node."""
    v = np.moveaxis(np.array(vectors), axis, 0)
    for n in range(1, v.shape[0]):
        ov = np.einsum("...di,...di->...i", v[n - 1].conj(), v[n])
        mag = np.abs(ov)
        phase = np.where(mag > 0, ov.conj() / np.where(mag > 0, mag, 1.0), 1.0)
        if not np.iscomplexobj(v):
            phase = np.sign(phase.real) + (phase.real == 0)
        v[n] = v[n] * phase[..., None, :]
    return np.moveaxis(v, 0, axis)


def nonadiabatic_couplings(surface, axis):
    """``d_ij = <psi_i | d psi_j / d axis>`` by central differences.

    Vectors are phase-aligned along the axis first.  One-sided differences
    are used at the ends; entries at degenerate or failed nodes are NaN.
    The result has shape ``surface.shape + (k, k)`` and is stored in
    ``surface.couplings[axis]``.
    """
    if surface.vectors is None:
        raise InvalidArgumentError("surface has no eigenvector cache")
    if axis not in surface.axes:
        raise InvalidArgumentError(f"surface has no axis {axis!r}")
    ax = surface.axis_names.index(axis)
    x = surface.axes[axis]
    if len(x) < 2:
        raise InvalidArgumentError("couplings need at least two nodes along the axis")
    v = align_phases(surface.vectors, ax)
    d = _central_couplings(np.moveaxis(v, ax, 0), x, surface.k)
    d = np.moveaxis(d, 0, ax)
    if not np.iscomplexobj(surface.vectors):
        d = d.real
    for idx in set(surface.degenerate) | set(surface.failed):
        d[idx] = np.nan
    surface.couplings[axis] = d
    return d


def _derivative(vm, x, i):
    n = len(x)
    if n == 2:
        return (vm[1] - vm[0]) / (x[1] - x[0])
    if 0 < i < n - 1:
        # three-point stencil on a possibly non-uniform grid
        h0, h1 = x[i] - x[i - 1], x[i + 1] - x[i]
        return (-h1 / (h0 * (h0 + h1)) * vm[i - 1] + (h1 - h0) / (h0 * h1) * vm[i]
                + h0 / (h1 * (h0 + h1)) * vm[i + 1])
    j = (0, 1, 2) if i == 0 else (n - 1, n - 2, n - 3)
    t = x[list(j)] - x[i]
    # Lagrange weights of the derivative at t = 0
    w0 = -(t[1] + t[2]) / ((t[0] - t[1]) * (t[0] - t[2]))
    w1 = -(t[0] + t[2]) / ((t[1] - t[0]) * (t[1] - t[2]))
    w2 = -(t[0] + t[1]) / ((t[2] - t[0]) * (t[2] - t[1]))
    return w0 * vm[j[0]] + w1 * vm[j[1]] + w2 * vm[j[2]]


def _central_couplings(vm, x, k):
    d = np.empty(vm.shape[:1] + vm.shape[1:-2] + (k, k), dtype=vm.dtype)
    for i in range(len(x)):
        d[i] = np.einsum("...di,...dj->...ij", vm[i].conj(), _derivative(vm, x, i))
    return d


def finite_difference_scale(surface, axis):
    """Truncation-error scale of :func:`nonadiabatic_couplings` along ``axis``.

    Largest change of ``d`` at the even nodes when the spacing is doubled
    (every other node dropped); needs at least 5 nodes.
    """
    ax = surface.axis_names.index(axis)
    x = surface.axes[axis]
    if len(x) < 5:
        raise InvalidArgumentError("finite-difference scale needs at least 5 nodes")
    vm = np.moveaxis(align_phases(surface.vectors, ax), ax, 0)
    fine = _central_couplings(vm, x, surface.k)[::2]
    coarse = _central_couplings(vm[::2], x[::2], surface.k)
    return float(np.nanmax(np.abs(fine - coarse)))


def antisymmetry_error(d):
    """Largest ``|d_ij + conj(d_ji)|`` over defined nodes."""
    s = d + np.conj(np.swapaxes(d, -1, -2))
    return float(np.nanmax(np.abs(s)))


def continuity_flags(surface, safety=CONTINUITY_SAFETY, atol=1e-12):
    """Intervals whose energy jump exceeds ``safety`` times the neighbouring slopes.

    Returns ``(axis, index of the left node, state)`` triples.  The local
    derivative estimate at an interval is the larger neighbouring
    one-sided slope; end intervals use their single neighbour.
    """
    flags = []
    for ax, name in enumerate(surface.axis_names):
        x = surface.axes[name]
        if len(x) < 3:
            continue
        e = np.moveaxis(surface.energies, ax, 0)
        h = np.diff(x)
        slope = np.diff(e, axis=0) / h.reshape((-1,) + (1,) * (e.ndim - 1))
        jump = np.abs(np.diff(e, axis=0))
        for i in range(len(h)):
            neigh = [slope[j] for j in (i - 1, i + 1) if 0 <= j < len(h)]
            local = np.max(np.abs(np.stack(neigh)), axis=0)
            bad = jump[i] > safety * local * h[i] + atol
            for pos in zip(*np.nonzero(bad)):
                flags.append((name, i, int(pos[-1])))
    return sorted(set(flags))


def refine_scan(scan, matter, modes, axis_values, k=1, max_rounds=4, **kwargs):
    """1D scan with bisection refinement of intervals failing the continuity check.

    ``scan`` is :func:`cavity_bo_surface` or :func:`polaritonic_surface`;
    ``axis_values`` a single ``{name: values}`` item.
    """
    if len(axis_values) != 1:
        raise InvalidArgumentError("refinement works on one axis at a time")
    (name, values), = axis_values.items()
    x = np.unique(np.asarray(values, dtype=float))
    surface = scan(matter, modes, {name: x}, k=k, **kwargs)
    for _ in range(max_rounds):
        flags = continuity_flags(surface)
        if not flags:
            break
        cuts = sorted({i for _, i, _ in flags})
        mids = [(x[i] + x[i + 1]) / 2 for i in cuts]
        x = np.unique(np.concatenate([x, mids]))
        surface = scan(matter, modes, {name: x}, k=k, **kwargs)
    return surface


def variational_violation(surfaces):
    """Largest rise of any ``E_i`` at any node along a basis-refinement ladder.

    ``surfaces`` are ordered from smallest to largest basis; a value
    ``<= 0`` (up to rounding) confirms monotone variational convergence.
    """
    worst = -np.inf
    for a, b in zip(surfaces, surfaces[1:]):
        if a.energies.shape != b.energies.shape:
            raise InvalidArgumentError("ladder surfaces must share nodes and k")
        worst = max(worst, float(np.nanmax(b.energies - a.energies)))
    return worst


def transition_dipole(matter, i=0, j=1):
    """``|<i|R|j>|`` between matter-only eigenstates."""
    mb = MatterBasis(matter)
    spectrum = solve(OperatorMatrix(mb.hamiltonian()), max(i, j) + 1)
    return float(abs(spectrum.vector(i).conj() @ (mb.dipole() * spectrum.vector(j))))


def effective_coupling(matter, mode, i=0, j=1):
    """Vacuum matrix element ``g sqrt(w/2) |e . <i|R|j>|`` between ``|j,0>`` and ``|i,1>``.

    Two degenerate levels coupled this way split by ``2 * effective_coupling``.
    """
    return mode.g * np.sqrt(mode.omega / 2.0) * abs(mode.epsilon) * transition_dipole(matter, i, j)

