"""Unit conversions at the input/output boundary.

Everything inside the package is in Hartree atomic units with k_B = 1.
"""

from scipy import constants

HARTREE_TO_CM1 = constants.physical_constants["hartree-inverse meter relationship"][0] / 100.0
HARTREE_TO_EV = constants.physical_constants["Hartree energy in eV"][0]
HARTREE_TO_KELVIN = constants.physical_constants["hartree-kelvin relationship"][0]
BOHR_TO_ANGSTROM = constants.physical_constants["Bohr radius"][0] * 1e10
FINE_STRUCTURE = constants.fine_structure
SPEED_OF_LIGHT_AU = 1.0 / FINE_STRUCTURE

_ENERGY = {
    "hartree": 1.0,
    "au": 1.0,
    "cm-1": 1.0 / HARTREE_TO_CM1,
    "ev": 1.0 / HARTREE_TO_EV,
}
_TEMPERATURE = {"hartree": 1.0, "au": 1.0, "k": 1.0 / HARTREE_TO_KELVIN}


def energy_to_au(value, unit):
    try:
        return float(value) * _ENERGY[unit.lower()]
    except KeyError:
        raise ValueError(f"unknown energy unit {unit!r}; expected one of {sorted(_ENERGY)}") from None


def temperature_to_au(value, unit):
    try:
        return float(value) * _TEMPERATURE[unit.lower()]
    except KeyError:
        raise ValueError(f"unknown temperature unit {unit!r}; expected one of {sorted(_TEMPERATURE)}") from None


def wavenumber_to_au(cm1):
    return cm1 / HARTREE_TO_CM1


def kelvin_to_au(kelvin):
    return kelvin / HARTREE_TO_KELVIN


ENERGY_UNITS = tuple(_ENERGY)
TEMPERATURE_UNITS = tuple(_TEMPERATURE)
