"""Sparse Hermitian operator container, tensor-product basis and Fock ladders."""

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import scipy.sparse as sp

from .. import _kernels
from ..errors import InvalidArgumentError


@dataclass(frozen=True, eq=False)
class OperatorMatrix:
    """Immutable sparse matrix with a provenance label.

    ``matrix`` is stored as CSR with read-only buffers.  ``basis`` is the
    :class:`PolaritonBasis` the rows refer to, when there is one.
    """

    matrix: sp.csr_matrix
    label: str = ""
    basis: "PolaritonBasis | None" = None

    def __post_init__(self):
        m = sp.csr_matrix(self.matrix)
        m.sum_duplicates()
        m.sort_indices()
        if np.iscomplexobj(m.data) and m.nnz and np.max(np.abs(m.data.imag)) == 0.0:
            m = m.real.tocsr()
        for buf in (m.data, m.indices, m.indptr):
            buf.flags.writeable = False
        object.__setattr__(self, "matrix", m)
        if m.shape[0] != m.shape[1]:
            raise InvalidArgumentError(f"operator must be square, got shape {m.shape}")
        if self.basis is not None and self.basis.total_dim != m.shape[0]:
            raise InvalidArgumentError(
                f"basis dimension {self.basis.total_dim} does not match matrix dimension {m.shape[0]}"
            )

    @property
    def dim(self):
        return self.matrix.shape[0]

    @property
    def dtype(self):
        return self.matrix.dtype

    @property
    def nnz(self):
        return self.matrix.nnz

    def toarray(self):
        return self.matrix.toarray()

    def hermiticity_error(self):
        """``max |H_ij - conj(H_ji)|`` relative to ``max |H_ij|``."""
        m = self.matrix
        if m.nnz == 0:
            return 0.0
        diff = m - m.conj().T
        scale = np.max(np.abs(m.data))
        return float(np.max(np.abs(diff.data))) / scale if diff.nnz else 0.0

    def is_hermitian(self, rtol=1e-14):
        return self.hermiticity_error() <= rtol

    def apply(self, x):
        """Matrix-vector (or matrix-block) product through the kernel layer."""
        x = np.asarray(x)
        vec = x.ndim == 1
        block = x[:, None] if vec else x
        m = self.matrix
        out = _kernels.csr_matmat(m.indptr, m.indices, m.data, block)
        return out[:, 0] if vec else out

    def expectation(self, psi):
        psi = np.asarray(psi)
        return complex(np.vdot(psi, self.matrix @ psi))

    def __add__(self, other):
        if isinstance(other, OperatorMatrix):
            return OperatorMatrix(self.matrix + other.matrix, self.label, self.basis or other.basis)
        return NotImplemented

    def scaled(self, factor, label=None):
        return OperatorMatrix(self.matrix * factor, label or self.label, self.basis)

    def shifted(self, energy, label=None):
        eye = sp.identity(self.dim, dtype=self.dtype, format="csr")
        return OperatorMatrix(self.matrix + energy * eye, label or self.label, self.basis)

    def to_coo_text(self, path):
        """Write one ``row col re im`` line per stored entry, zero-based."""
        coo = self.matrix.tocoo()
        data = coo.data.astype(complex)
        with open(path, "w") as fh:
            fh.write(f"# dim {self.dim} nnz {coo.nnz} label {self.label}\n")
            for r, c, v in zip(coo.row, coo.col, data):
                fh.write(f"{r} {c} {v.real:.17g} {v.imag:.17g}\n")

    @classmethod
    def from_coo_text(cls, path, label=None):
        dim = None
        header_label = ""
        rows, cols, vals = [], [], []
        with open(path) as fh:
            for line in fh:
                if line.startswith("#"):
                    parts = line[1:].split()
                    if "dim" in parts:
                        dim = int(parts[parts.index("dim") + 1])
                    if "label" in parts:
                        header_label = " ".join(parts[parts.index("label") + 1:])
                    continue
                if not line.strip():
                    continue
                r, c, re, im = line.split()
                rows.append(int(r))
                cols.append(int(c))
                vals.append(complex(float(re), float(im)))
        if dim is None:
            dim = max(max(rows), max(cols)) + 1 if rows else 0
        m = sp.csr_matrix((np.array(vals, dtype=complex), (rows, cols)), shape=(dim, dim))
        return cls(m, label if label is not None else header_label)


def _mixed_radix(dims):
    dims = tuple(int(d) for d in dims)
    strides = np.ones(len(dims), dtype=np.int64)
    for i in range(len(dims) - 2, -1, -1):
        strides[i] = strides[i + 1] * dims[i + 1]
    return dims, strides


@dataclass(frozen=True, eq=False)
class PolaritonBasis:
    """Matter basis times truncated photon Fock spaces.

    Flat index = ``matter_index * photon_dim + photon_index`` where the photon
    index is mixed-radix over modes with mode 0 most significant.
    """

    matter_dim: int
    n_max: tuple
    _strides: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "n_max", tuple(int(n) for n in self.n_max))
        if self.matter_dim < 1:
            raise InvalidArgumentError("matter_dim must be >= 1")
        if any(n < 0 for n in self.n_max):
            raise InvalidArgumentError("Fock cutoffs must be non-negative")
        _, strides = _mixed_radix(self.photon_dims)
        object.__setattr__(self, "_strides", strides)

    @property
    def photon_dims(self):
        return tuple(n + 1 for n in self.n_max)

    @property
    def n_modes(self):
        return len(self.n_max)

    @property
    def photon_dim(self):
        return int(np.prod(self.photon_dims, dtype=np.int64))

    @property
    def total_dim(self):
        return self.matter_dim * self.photon_dim

    @cached_property
    def photon_occupations(self):
        """``(photon_dim, n_modes)`` array of occupation tuples in index order."""
        if not self.n_max:
            return np.zeros((1, 0), dtype=np.int64)
        grids = np.indices(self.photon_dims).reshape(self.n_modes, -1).T
        return grids.astype(np.int64)

    def index(self, matter_index, occupations):
        occ = np.asarray(occupations, dtype=np.int64)
        m = np.asarray(matter_index, dtype=np.int64)
        if np.any(m < 0) or np.any(m >= self.matter_dim):
            raise InvalidArgumentError("matter index out of range")
        if occ.shape[-1] != self.n_modes:
            raise InvalidArgumentError("occupation tuple length must equal the number of modes")
        if np.any(occ < 0) or np.any(occ > np.array(self.n_max)):
            raise InvalidArgumentError("occupation exceeds Fock cutoff")
        return m * self.photon_dim + occ @ self._strides

    def unpack(self, flat):
        flat = np.asarray(flat, dtype=np.int64)
        if np.any(flat < 0) or np.any(flat >= self.total_dim):
            raise InvalidArgumentError("flat index out of range")
        m, ph = np.divmod(flat, self.photon_dim)
        return m, self.photon_occupations[ph]

    def photon_number(self, mode=None):
        """Diagonal of the photon-number operator (total, or of one mode)."""
        occ = self.photon_occupations
        n = occ.sum(axis=1) if mode is None else occ[:, mode]
        return np.tile(n, self.matter_dim)


def annihilation(n_max):
    """Truncated bosonic lowering operator on ``{|0>, ..., |n_max>}``."""
    off = np.sqrt(np.arange(1, n_max + 1, dtype=float))
    return sp.diags(off, 1, shape=(n_max + 1, n_max + 1), format="csr")


def creation(n_max):
    return annihilation(n_max).T.tocsr()


def number(n_max):
    return sp.diags(np.arange(n_max + 1, dtype=float), 0, format="csr")


def quadrature_q(n_max, omega):
    """Displacement coordinate ``(a + a^+) / sqrt(2 omega)``."""
    a = annihilation(n_max)
    return ((a + a.T) / np.sqrt(2.0 * omega)).tocsr()


def quadrature_p(n_max, omega):
    """Conjugate momentum ``i sqrt(omega/2) (a^+ - a)``."""
    a = annihilation(n_max)
    return (1j * np.sqrt(omega / 2.0) * (a.T - a)).tocsr()


def lift_photon(basis, mode, op):
    """Embed a single-mode operator into the full polariton basis."""
    factors = [sp.identity(basis.matter_dim, format="csr")]
    for a, d in enumerate(basis.photon_dims):
        factors.append(op if a == mode else sp.identity(d, format="csr"))
    out = factors[0]
    for f in factors[1:]:
        out = sp.kron(out, f, format="csr")
    return out.tocsr()


def lift_matter(basis, op):
    """Embed a matter operator (dense or sparse, or a diagonal vector)."""
    if isinstance(op, np.ndarray) and op.ndim == 1:
        return sp.diags(np.repeat(op, basis.photon_dim), 0, format="csr")
    return sp.kron(sp.csr_matrix(op), sp.identity(basis.photon_dim, format="csr"), format="csr")


def mode_operator(basis, mode, which, omega=1.0):
    """Lifted single-mode operator; ``which`` in {a, adag, n, q, p}."""
    n_max = basis.n_max[mode]
    table = {
        "a": lambda: annihilation(n_max),
        "adag": lambda: creation(n_max),
        "n": lambda: number(n_max),
        "q": lambda: quadrature_q(n_max, omega),
        "p": lambda: quadrature_p(n_max, omega),
    }
    if which not in table:
        raise InvalidArgumentError(f"unknown mode operator {which!r}")
    return OperatorMatrix(lift_photon(basis, mode, table[which]()), f"{which}_{mode}", basis)
