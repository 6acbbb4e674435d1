"""Grid discretization of the matter sector.

The matter basis is a tensor product over quantum species.  A species with
``count > 1`` is represented by antisymmetrized configurations (sorted site
tuples) of spinless fermions; ``count == 1`` reduces to the plain grid.
Group 0 is the most significant factor of the flat matter index.
"""

import numpy as np
import scipy.sparse as sp

from .. import _kernels
from ..errors import InvalidModelError


def soft_coulomb(dx, softening):
    return 1.0 / np.sqrt(dx * dx + softening * softening)


def kinetic_matrix(grid, mass, kind="fd"):
    """Single-particle kinetic energy ``p^2 / 2m`` on the grid (dense)."""
    n = grid.n_points
    h = grid.spacing
    if kind == "fd":
        t = np.zeros((n, n))
        idx = np.arange(n)
        t[idx, idx] = 1.0 / (mass * h * h)
        t[idx[:-1], idx[1:]] = -0.5 / (mass * h * h)
        t[idx[1:], idx[:-1]] = -0.5 / (mass * h * h)
        return t
    k = 2.0 * np.pi * np.fft.fftfreq(n, d=h)
    t = np.fft.ifft((k * k / (2.0 * mass))[:, None] * np.fft.fft(np.eye(n), axis=0), axis=0).real
    return 0.5 * (t + t.T)


def momentum_matrix(grid, kind="fd"):
    """Single-particle ``p = -i d/dx`` (dense, Hermitian)."""
    n = grid.n_points
    h = grid.spacing
    if kind == "fd":
        p = np.zeros((n, n), dtype=complex)
        idx = np.arange(n - 1)
        p[idx, idx + 1] = -0.5j / h
        p[idx + 1, idx] = 0.5j / h
        return p
    k = 2.0 * np.pi * np.fft.fftfreq(n, d=h)
    if n % 2 == 0:
        k[n // 2] = 0.0
    p = np.fft.ifft(k[:, None] * np.fft.fft(np.eye(n), axis=0), axis=0)
    return 0.5 * (p + p.conj().T)


class MatterBasis:
    """Configuration basis and operators for a :class:`MatterModel`."""

    def __init__(self, matter):
        self.matter = matter
        self.grid = matter.grid
        self.x = matter.grid.points
        n = matter.grid.n_points
        self.groups = []
        for s in matter.quantum_species:
            dets = _kernels.enumerate_determinants(n, s.count)
            self.groups.append((s, dets, _kernels.binomial_table(n, s.count)))
        self.group_dims = tuple(len(d) for _, d, _ in self.groups)
        self.dim = int(np.prod(self.group_dims, dtype=np.int64))

    # -- structure ---------------------------------------------------------

    def _occupation(self, g):
        _, dets, _ = self.groups[g]
        occ = np.zeros((len(dets), self.grid.n_points))
        np.add.at(occ, (np.arange(len(dets))[:, None], dets), 1.0)
        return occ

    def _broadcast(self, g, values):
        """Lift a per-configuration vector of group ``g`` to the full basis."""
        shape = [1] * len(self.groups)
        shape[g] = self.group_dims[g]
        return np.broadcast_to(np.reshape(values, shape), self.group_dims).reshape(-1)

    def lift(self, g, op):
        factors = [sp.identity(d, format="csr") for d in self.group_dims]
        factors[g] = sp.csr_matrix(op)
        out = factors[0]
        for f in factors[1:]:
            out = sp.kron(out, f, format="csr")
        return out.tocsr()

    def one_body(self, g, op):
        """Second-quantized one-body operator of group ``g`` (sparse, group space)."""
        species, dets, binom = self.groups[g]
        d = len(dets)
        if species.count == 1:
            return sp.csr_matrix(op)
        rows, cols, vals = _kernels.one_body_coo(dets, np.asarray(op), binom)
        return sp.csr_matrix((vals, (rows, cols)), shape=(d, d))

    def site_sum(self, g, site_values):
        """``sum_i f(x_i)`` over the particles of group ``g``, full-basis diagonal."""
        return self._broadcast(g, self._occupation(g) @ site_values)

    # -- physics -----------------------------------------------------------

    def clamped_constant(self):
        a = self.matter.softening
        coords = self.matter.clamped_coordinates
        e = 0.0
        for i in range(len(coords)):
            for j in range(i + 1, len(coords)):
                (zi, xi), (zj, xj) = coords[i], coords[j]
                e += zi * zj * soft_coulomb(xi - xj, a)
        return e

    def site_potential(self, g):
        species = self.groups[g][0]
        v = self.matter.potential_values()
        a = self.matter.softening
        for zc, xc in self.matter.clamped_coordinates:
            v = v + species.charge * zc * soft_coulomb(self.x - xc, a)
        return v

    def diagonal(self):
        """Potential energy (external, interactions, clamped) per basis state."""
        a = self.matter.softening
        w = soft_coulomb(self.x[:, None] - self.x[None, :], a)
        diag = np.full(self.dim, self.clamped_constant())
        occs = [self._occupation(g) for g in range(len(self.groups))]
        for g, (species, dets, _) in enumerate(self.groups):
            pair = species.charge**2 * w
            diag += self._broadcast(g, _kernels.diagonal_energy(dets, self.site_potential(g), pair))
        for ga in range(len(self.groups)):
            for gb in range(ga + 1, len(self.groups)):
                za, zb = self.groups[ga][0].charge, self.groups[gb][0].charge
                block = occs[ga] @ (za * zb * w) @ occs[gb].T
                shape = [1] * len(self.groups)
                shape[ga], shape[gb] = self.group_dims[ga], self.group_dims[gb]
                diag += np.broadcast_to(block.reshape(shape), self.group_dims).reshape(-1)
        return diag

    def kinetic(self):
        out = sp.csr_matrix((self.dim, self.dim))
        for g, (species, _, _) in enumerate(self.groups):
            t = kinetic_matrix(self.grid, species.mass, self.matter.kinetic)
            out = out + self.lift(g, self.one_body(g, t))
        return out.tocsr()

    def momentum_coupling(self):
        """``sum_l (Z_l / m_l) p_l`` on the matter basis."""
        out = sp.csr_matrix((self.dim, self.dim), dtype=complex)
        p = momentum_matrix(self.grid, self.matter.kinetic)
        for g, (species, _, _) in enumerate(self.groups):
            out = out + (species.charge / species.mass) * self.lift(g, self.one_body(g, p))
        return out.tocsr()

    def diamagnetic_prefactor(self):
        """``sum_l Z_l^2 / (2 m_l)`` over quantum particles."""
        return sum(s.count * s.charge**2 / (2.0 * s.mass) for s, _, _ in self.groups)

    def hamiltonian(self):
        return (self.kinetic() + sp.diags(self.diagonal(), 0, format="csr")).tocsr()

    def dipole(self):
        """Diagonal of ``R = sum_l Z_l x_l`` including clamped charges."""
        d = np.full(self.dim, sum(z * x for z, x in self.matter.clamped_coordinates), dtype=float)
        for g, (species, _, _) in enumerate(self.groups):
            d += species.charge * self.site_sum(g, self.x)
        return d

    def parity(self):
        """Permutation and signs of ``x -> -x`` on the matter basis."""
        if not self.grid.is_symmetric():
            raise InvalidModelError("parity needs a grid symmetric about the origin")
        n = self.grid.n_points
        perm = np.zeros(1, dtype=np.int64)
        sign = np.ones(1)
        for species, dets, binom in self.groups:
            k = species.count
            mirrored = np.sort(n - 1 - dets, axis=1)
            gperm = _kernels.rank_determinants(mirrored, binom)
            gsign = np.full(len(dets), (-1.0) ** (k * (k - 1) // 2))
            perm = (perm[:, None] * len(dets) + gperm[None, :]).reshape(-1)
            sign = (sign[:, None] * gsign[None, :]).reshape(-1)
        return perm, sign
