"""Model types and Hamiltonian assembly."""

from .hamiltonians import (
    DEFAULT_MAX_DIM,
    TimeDependentHamiltonian,
    build_hamiltonian,
    build_length_gauge,
    build_velocity_gauge,
    displacement_operator,
    field_residuals,
    parity_operator,
    polariton_basis,
    total_dipole_operator,
)
from .matter import MatterBasis
from .models import (
    build_rabi,
    build_tavis_cummings,
    critical_cutoff,
    emitter_operator,
    excitation_number,
    photon_mass,
    sector,
)
from .operators import OperatorMatrix, PolaritonBasis, mode_operator
from .types import (
    ExternalDrive,
    GaugeForm,
    Grid,
    LengthGauge,
    MatterModel,
    Mode,
    ModeSet,
    Species,
    VelocityGauge,
    harmonic_potential,
    sin2_pulse,
)
