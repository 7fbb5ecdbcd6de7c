"""Unit conventions.

Internally every Hamiltonian or rate quantity is an angular frequency in
rad/us (numerically equal to 2pi times the frequency in MHz); times are in
us. Config keys and reports quote nu = omega/2pi in the unit their suffix
names (_khz, _mhz, _ghz).
"""
from __future__ import annotations

import math

TWO_PI = 2.0 * math.pi


def khz(nu: float) -> float:
    """Angular frequency (rad/us) of a rate quoted as nu/2pi in kHz."""
    return TWO_PI * nu * 1e-3


def mhz(nu: float) -> float:
    return TWO_PI * nu


def ghz(nu: float) -> float:
    return TWO_PI * nu * 1e3


def as_khz(omega: float) -> float:
    """Quoted nu/2pi in kHz of an internal angular frequency."""
    return omega / (TWO_PI * 1e-3)


def as_mhz(omega: float) -> float:
    return omega / TWO_PI
