import numpy as np
import pytest

from cavitylab.core import Grid, MatterModel, Mode, ModeSet, Species, harmonic_potential


def harmonic_matter(n_points=41, half_width=8.0, omega0=1.0, kinetic="spectral", charge=-1.0, center=0.0):
    """One particle (mass 1) in ``omega0^2 (x - center)^2 / 2``."""
    return MatterModel(
        (Species("electron", 1.0, charge),),
        Grid(-half_width, half_width, n_points),
        external_potential=harmonic_potential(omega0, center, 1.0),
        kinetic=kinetic,
    )


def single_mode(omega=1.0, g=0.05, n_max=8):
    return ModeSet((Mode(omega, g, (1.0,), n_max),))


@pytest.fixture
def decoupled():
    return harmonic_matter(), single_mode(g=0.0, n_max=4)


@pytest.fixture
def coupled():
    return harmonic_matter(), single_mode(g=0.05, n_max=8)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def two_centre_matter(n_points=131, separation=3.6):
    """Charge-neutral one-electron model with two clamped +1/2 centres at 0 and ``separation``."""
    return MatterModel(
        (Species("electron", 1.0, -1.0), Species("centre", 1836.0, 0.5, quantum=False, count=2,
                                                  positions=(0.0, separation))),
        Grid(-12.0, 14.0, n_points),
        softening=1.0,
    )


ACCEPTANCE = {}


def record_criterion(number, title, passed, detail):
    """Store and print one acceptance verdict; the summary hook repeats it at the end."""
    line = f"[{'PASS' if passed else 'FAIL'}] criterion {number:2d} {title}: {detail}"
    ACCEPTANCE[number] = line
    print(line)
    return passed


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for number in sorted(ACCEPTANCE):
            terminalreporter.write_line(ACCEPTANCE[number])
