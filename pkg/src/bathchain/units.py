"""Unit conventions.

All energies cross module boundaries in wavenumbers (cm^-1).  Time evolution
works in angular frequency with hbar = 1, so 1 cm^-1 = 2*pi*c*100 rad/s
~= 0.188365 rad/ps and times are in picoseconds.
"""

import math

C_CM_PER_PS = 0.0299792458
CM1_TO_RAD_PER_PS = 2.0 * math.pi * C_CM_PER_PS


def cm1_to_angular(value_cm1: float) -> float:
    """Energy in cm^-1 -> angular frequency in rad/ps."""
    return value_cm1 * CM1_TO_RAD_PER_PS


def angular_to_cm1(value_rad_per_ps: float) -> float:
    return value_rad_per_ps / CM1_TO_RAD_PER_PS
