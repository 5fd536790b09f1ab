"""Physical constants and unit conversions used throughout the package.

Energies for vibrational work are in cm^-1, temperatures in Kelvin, times in
femtoseconds.
"""

import math

#: Boltzmann constant in cm^-1 / K.
KB_CM_PER_K = 0.695034800

#: Speed of light in cm / fs.
C_CM_PER_FS = 2.99792458e-5

#: Angular conversion: an energy of 1 cm^-1 rotates a phase by this many rad/fs.
TWO_PI_C = 2.0 * math.pi * C_CM_PER_FS


def beta_from_temperature(T):
    """Inverse temperature in cm for a temperature in Kelvin."""
    return 1.0 / (KB_CM_PER_K * T)


def temperature_from_beta(beta):
    return 1.0 / (KB_CM_PER_K * beta)


def as_dict():
    return {
        "KB_CM_PER_K": KB_CM_PER_K,
        "C_CM_PER_FS": C_CM_PER_FS,
        "TWO_PI_C": TWO_PI_C,
    }
