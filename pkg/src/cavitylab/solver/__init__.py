"""Eigensolvers, time propagation and spectral analysis."""

from .eigen import DENSE_LIMIT, SpectrumResult, dense_solve, solve, solve_lowest
from .gauge import GaugeReport, check_gauge_invariance
from .propagate import Trajectory, kick, propagate
from .spectra import Peak, SpectrumPeaks, absorption_spectrum
