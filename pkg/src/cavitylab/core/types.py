"""Physical model types: photon modes, 1D matter models, gauges, drives."""

from dataclasses import dataclass, field, replace
from typing import Callable, Optional, Sequence, Union

import numpy as np

from ..errors import InvalidArgumentError, InvalidModelError


@dataclass(frozen=True)
class Mode:
    """One cavity mode: frequency, coupling, polarization and Fock cutoff."""

    omega: float
    g: float = 0.0
    polarization: tuple = (1.0,)
    n_max: int = 1

    def __post_init__(self):
        pol = tuple(float(p) for p in np.atleast_1d(self.polarization))
        object.__setattr__(self, "polarization", pol)
        if not (np.isfinite(self.omega) and self.omega > 0):
            raise InvalidModelError(f"mode frequency must be positive, got {self.omega}")
        if not np.isfinite(self.g):
            raise InvalidModelError("mode coupling must be finite")
        if abs(np.linalg.norm(pol) - 1.0) > 1e-12:
            raise InvalidModelError(f"polarization {pol} is not a unit vector")
        if int(self.n_max) != self.n_max or self.n_max < 1:
            raise InvalidModelError(f"Fock cutoff n_max must be an integer >= 1, got {self.n_max}")
        object.__setattr__(self, "n_max", int(self.n_max))

    @property
    def epsilon(self):
        """Polarization projected on the model axis (the 1D component)."""
        return self.polarization[0]


@dataclass(frozen=True)
class ModeSet:
    modes: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "modes", tuple(self.modes))
        dims = {len(m.polarization) for m in self.modes}
        if len(dims) > 1:
            raise InvalidModelError("all polarizations must share one dimension")

    @classmethod
    def single(cls, omega, g=0.0, n_max=1, polarization=(1.0,)):
        return cls((Mode(omega, g, polarization, n_max),))

    def __len__(self):
        return len(self.modes)

    def __iter__(self):
        return iter(self.modes)

    def __getitem__(self, i):
        return self.modes[i]

    @property
    def n_max(self):
        return tuple(m.n_max for m in self.modes)

    @property
    def photon_dim(self):
        return int(np.prod([m.n_max + 1 for m in self.modes], dtype=np.int64))

    def with_n_max(self, n_max):
        if np.isscalar(n_max):
            n_max = [n_max] * len(self.modes)
        return ModeSet(tuple(replace(m, n_max=int(n)) for m, n in zip(self.modes, n_max)))

    def with_coupling(self, g):
        if np.isscalar(g):
            g = [g] * len(self.modes)
        return ModeSet(tuple(replace(m, g=float(c)) for m, c in zip(self.modes, g)))


@dataclass(frozen=True)
class Species:
    """A particle species.

    Quantum species live on the grid (``count`` identical spinless fermions
    when ``count > 1``); clamped species sit at fixed ``positions``.
    """

    name: str = "electron"
    mass: float = 1.0
    charge: float = -1.0
    quantum: bool = True
    count: int = 1
    positions: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "positions", tuple(float(x) for x in self.positions))
        if not self.mass > 0:
            raise InvalidModelError(f"species {self.name!r}: mass must be positive")
        if int(self.count) != self.count or self.count < 1:
            raise InvalidModelError(f"species {self.name!r}: count must be an integer >= 1")
        if not self.quantum and len(self.positions) != self.count:
            raise InvalidModelError(
                f"clamped species {self.name!r} needs {self.count} positions, got {len(self.positions)}"
            )


@dataclass(frozen=True)
class Grid:
    x_min: float
    x_max: float
    n_points: int

    def __post_init__(self):
        if self.n_points < 2:
            raise InvalidModelError("grid needs n_points >= 2")
        if not self.x_min < self.x_max:
            raise InvalidModelError("grid needs x_min < x_max")

    @property
    def points(self):
        return np.linspace(self.x_min, self.x_max, self.n_points)

    @property
    def spacing(self):
        return (self.x_max - self.x_min) / (self.n_points - 1)

    def is_symmetric(self, atol=1e-12):
        return abs(self.x_min + self.x_max) <= atol


PotentialLike = Union[None, Callable[[np.ndarray], np.ndarray], Sequence[float], np.ndarray]


def harmonic_potential(omega=1.0, center=0.0, mass=1.0):
    """``v(x) = m omega^2 (x - center)^2 / 2`` as a vectorized callable."""

    def v(x):
        return 0.5 * mass * omega**2 * (np.asarray(x) - center) ** 2

    v.__name__ = f"harmonic(omega={omega}, center={center})"
    return v


@dataclass(frozen=True, eq=False)
class MatterModel:
    """Few-particle 1D grid model.

    ``external_potential`` is potential *energy* seen by every quantum
    particle: ``None``, a vectorized callable, or a table of grid values.
    ``kinetic`` selects the 3-point finite-difference ("fd") or Fourier
    ("spectral") discretization.
    """

    species: tuple
    grid: Grid
    softening: float = 1.0
    external_potential: PotentialLike = None
    kinetic: str = "fd"

    def __post_init__(self):
        object.__setattr__(self, "species", tuple(self.species))
        if not self.softening > 0:
            raise InvalidModelError("softening length must be positive")
        if self.kinetic not in ("fd", "spectral"):
            raise InvalidModelError(f"unknown kinetic discretization {self.kinetic!r}")
        if not any(s.quantum for s in self.species):
            raise InvalidModelError("model has no quantum species")
        for s in self.quantum_species:
            if s.count > self.grid.n_points:
                raise InvalidModelError(f"{s.count} fermions do not fit on {self.grid.n_points} sites")
        if self.external_potential is not None and not callable(self.external_potential):
            table = np.asarray(self.external_potential, dtype=float)
            if table.shape != (self.grid.n_points,):
                raise InvalidModelError("tabulated potential must have one value per grid point")

    @property
    def quantum_species(self):
        return tuple(s for s in self.species if s.quantum)

    @property
    def clamped_species(self):
        return tuple(s for s in self.species if not s.quantum)

    @property
    def clamped_coordinates(self):
        """Flat list of ``(charge, position)`` for every clamped particle."""
        return [(s.charge, x) for s in self.clamped_species for x in s.positions]

    def potential_values(self):
        x = self.grid.points
        if self.external_potential is None:
            return np.zeros_like(x)
        if callable(self.external_potential):
            return np.broadcast_to(np.asarray(self.external_potential(x), dtype=float), x.shape).copy()
        return np.asarray(self.external_potential, dtype=float).copy()

    def with_grid(self, x_min=None, x_max=None, n_points=None):
        g = self.grid
        grid = Grid(
            g.x_min if x_min is None else x_min,
            g.x_max if x_max is None else x_max,
            g.n_points if n_points is None else int(n_points),
        )
        if self.external_potential is not None and not callable(self.external_potential):
            raise InvalidArgumentError("cannot regrid a tabulated potential")
        return replace(self, grid=grid)

    def with_clamped_positions(self, positions):
        """Replace clamped positions (flat, in ``clamped_coordinates`` order)."""
        positions = list(positions)
        if len(positions) != len(self.clamped_coordinates):
            raise InvalidArgumentError("wrong number of clamped positions")
        new, i = [], 0
        for s in self.species:
            if s.quantum:
                new.append(s)
            else:
                new.append(replace(s, positions=tuple(positions[i:i + s.count])))
                i += s.count
        return replace(self, species=tuple(new))


@dataclass(frozen=True)
class LengthGauge:
    include_self_polarization: bool = True


@dataclass(frozen=True)
class VelocityGauge:
    """``include_diamagnetic=False`` drops the ``A^2`` term (negative control only)."""

    include_diamagnetic: bool = True


GaugeForm = Union[LengthGauge, VelocityGauge]


@dataclass(frozen=True, eq=False)
class ExternalDrive:
    """Classical drives: scalar potential on the grid and per-mode currents.

    ``phi_ext(t)`` returns grid values of the scalar potential; particles
    couple with their charge.  ``j_alpha[a](t)`` multiplies ``q_a``.
    """

    phi_ext: Optional[Callable[[float], np.ndarray]] = None
    j_alpha: tuple = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "j_alpha", tuple(self.j_alpha))

    def potential(self, t, n_points):
        if self.phi_ext is None:
            return None
        vals = np.broadcast_to(np.asarray(self.phi_ext(t), dtype=float), (n_points,))
        if not np.all(np.isfinite(vals)):
            raise InvalidArgumentError(f"scalar drive is not finite at t={t}")
        return vals

    def currents(self, t, n_modes):
        out = np.zeros(n_modes)
        for a, j in enumerate(self.j_alpha):
            if j is not None:
                out[a] = float(j(t))
        if not np.all(np.isfinite(out)):
            raise InvalidArgumentError(f"mode current is not finite at t={t}")
        return out


def sin2_pulse(amplitude, duration, t0=0.0):
    """Compactly supported ``amplitude * sin^2(pi (t-t0)/duration)`` envelope."""

    def f(t):
        s = (t - t0) / duration
        if s <= 0.0 or s >= 1.0:
            return 0.0
        return amplitude * np.sin(np.pi * s) ** 2

    return f
