"""Shared test fixtures: device parameters, comb tables, and independent
numerical oracles (hand-rolled RK4, closed-form Wigner) that deliberately
do not reuse the package's own integration or displacement code."""
from __future__ import annotations

import math

import numpy as np
from scipy.special import eval_laguerre

from fockstab.model import DriveComb, SystemParams, ToneSpec

DEVICE = dict(
    omega_c_ghz=6.366, omega_q_ghz=5.682, omega_r_ghz=8.602,
    chi_qc_mhz=7.72, chi_qr_mhz=2.4, zeta_c_khz=150.0,
    kappa_c_khz=3.1, kappa_r_mhz=2.4,
    qubit_t1_us=18.6, qubit_t2_us=25.6)

STAB_TONES = {
    1: (ToneSpec(0, 86.0, 400.0),),
    2: (ToneSpec(0, 86.0, 400.0), ToneSpec(1, 86.0, 380.0)),
    3: (ToneSpec(0, 86.0, 330.0), ToneSpec(1, 86.0, 341.0),
        ToneSpec(2, 87.0, 356.0)),
}


def device_params() -> SystemParams:
    return SystemParams.from_quoted(**DEVICE)


def stab_comb(n: int, spurious: bool = False) -> DriveComb:
    return DriveComb(STAB_TONES[n], spurious=spurious)


def rk4_trajectory(rhs, y0: np.ndarray, times: np.ndarray, dt: float) -> np.ndarray:
    """Plain fixed-step classical RK4, sampling y at the requested times.

    Steps between consecutive sample times with an integer substep count
    close to dt, so samples land exactly on the requested grid.
    """
    y = np.array(y0, dtype=float)
    out = np.empty((len(times), y.size))
    prev = times[0]
    if prev != 0.0:
        raise ValueError("oracle assumes times start at 0")
    out[0] = y
    for k in range(1, len(times)):
        span = times[k] - prev
        n_sub = max(1, int(math.ceil(span / dt)))
        h = span / n_sub
        for _ in range(n_sub):
            k1 = rhs(y)
            k2 = rhs(y + 0.5 * h * k1)
            k3 = rhs(y + 0.5 * h * k2)
            k4 = rhs(y + h * k3)
            y = y + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        out[k] = y
        prev = times[k]
    return out


def birth_death_rhs(lambdas_angular: np.ndarray, kappa_angular: float):
    """dP_i/dt written out term by term, independent of the package's
    generator-matrix assembly."""
    dim = len(lambdas_angular)

    def rhs(p: np.ndarray) -> np.ndarray:
        out = np.zeros_like(p)
        for i in range(dim):
            gain_pump = lambdas_angular[i - 1] * p[i - 1] if i >= 1 else 0.0
            loss_pump = lambdas_angular[i] * p[i]
            loss_decay = i * kappa_angular * p[i]
            gain_decay = (i + 1) * kappa_angular * p[i + 1] if i + 1 < dim else 0.0
            out[i] = gain_pump - loss_pump - loss_decay + gain_decay
        return out

    return rhs


def wigner_fock_exact(n: int, alphas: np.ndarray) -> np.ndarray:
    """Closed form W(alpha) = (2/pi)(-1)^n e^{-2|a|^2} L_n(4|a|^2)."""
    r2 = np.abs(alphas) ** 2
    return (2.0 / math.pi) * (-1.0) ** n * np.exp(-2.0 * r2) \
        * eval_laguerre(n, 4.0 * r2)
