"""Unit conventions.

All frequencies and energies are angular frequencies in rad/us (a quantity
quoted as "2pi x 5 MHz" is stored as ``2*pi*5``), times are in us, lengths in
um, and hbar = 1, so ``exp(-1j*H*t)`` is dimensionally consistent as-is.
Fourier axes are reported as ordinary frequencies in MHz (cycles/us).
"""

import math

TWO_PI = 2.0 * math.pi


def from_mhz(f):
    """Ordinary frequency in MHz -> angular frequency in rad/us."""
    return TWO_PI * f


def to_mhz(omega):
    """Angular frequency in rad/us -> ordinary frequency in MHz."""
    return omega / TWO_PI
