"""Readout calibration and measurement error mitigation.

Mirrors the experimental pipeline: a two-state readout confusion matrix is
inverted (never clipped), Fock-selective excited-state probabilities map to
photon populations through an affine shift-and-scale, Wigner values are
rescaled by the measured zero-displacement vacuum contrast, and the parity
sequence itself can be simulated with decoherence to predict that contrast.
"""
from __future__ import annotations

import math
from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np

from .hilbert import (DensityMatrix, Operator, expm, identity, ketbra,
                      number_op, partial_trace, tensor)
from .lindblad import WignerGrid, evolve
from .numerics import DomainError


@dataclass(frozen=True)
class ReadoutCalibration:
    """Measured readout and detection parameters.

    f_g/f_e are the assignment fidelities of the two qubit states; a0/a1
    and p_b are the scale and baseline of the Fock-selective pulse response
    and have no published defaults, so they must be supplied when used; w0
    is the measured parity contrast of the vacuum.
    """

    f_g: float = 0.985
    f_e: float = 0.952
    a0: float | None = None
    a1: float | None = None
    p_b: float | None = None
    w0: float = 0.924

    def __post_init__(self) -> None:
        for name in ("f_g", "f_e"):
            value = getattr(self, name)
            if not 0.0 < value <= 1.0:
                raise DomainError(f"{name} must lie in (0, 1], got {value}")
        if self.f_g + self.f_e <= 1.0:
            raise DomainError(
                f"confusion matrix singular: f_g + f_e = {self.f_g + self.f_e} <= 1")
        if (self.a0 is None) != (self.a1 is None):
            raise DomainError("a0 and a1 must be supplied together")
        if self.a0 is not None and self.a0 + self.a1 <= 0.0:
            raise DomainError("a0 + a1 must be positive")
        if self.p_b is not None and not 0.0 <= self.p_b < 1.0:
            raise DomainError(f"p_b must lie in [0, 1), got {self.p_b}")
        if not 0.0 < self.w0 <= 1.0:
            raise DomainError(f"w0 must lie in (0, 1], got {self.w0}")


def confusion_matrix(cal: ReadoutCalibration) -> np.ndarray:
    """Column-stochastic map from true (g, e) to measured (g, e)."""
    return np.array([[cal.f_g, 1.0 - cal.f_e],
                     [1.0 - cal.f_g, cal.f_e]])


@dataclass(frozen=True)
class CorrectedReadout:
    """Inverted readout pair; out_of_range flags entries escaping [0, 1]."""

    values: np.ndarray
    out_of_range: bool


def qubit_readout_correct(measured, cal: ReadoutCalibration) -> CorrectedReadout:
    """Invert the confusion matrix on a measured (P_g, P_e) pair.

    The result is never clipped; inconsistent calibration shows up as
    entries outside [0, 1] and is flagged instead of hidden.
    """
    p = np.asarray(measured, dtype=float)
    if p.shape != (2,):
        raise DomainError("measured readout must be a (P_g, P_e) pair")
    if np.any(p < -1e-12) or abs(p.sum() - 1.0) > 1e-6:
        raise DomainError(f"measured pair must be a probability vector, got {p}")
    corrected = np.linalg.solve(confusion_matrix(cal), p)
    out = bool(np.any(corrected < -1e-12) or np.any(corrected > 1.0 + 1e-12))
    return CorrectedReadout(values=corrected, out_of_range=out)


@dataclass(frozen=True)
class PhotonCorrection:
    """Affine-corrected photon populations; total is diagnostic only."""

    values: np.ndarray
    total: float


def photon_population_correct(p_excited, cal: ReadoutCalibration) -> PhotonCorrection:
    """Affine map P = (P_e - p_b)/(a0 + a1) per Fock-selective pulse.

    No renormalization: the summed result is reported so calibration drift
    stays visible.
    """
    if cal.a0 is None or cal.p_b is None:
        raise DomainError("photon-population correction needs a0, a1 and p_b")
    p = np.atleast_1d(np.asarray(p_excited, dtype=float))
    values = (p - cal.p_b) / (cal.a0 + cal.a1)
    return PhotonCorrection(values=values, total=float(values.sum()))


def wigner_normalize(w, cal: ReadoutCalibration):
    """Rescale Wigner data by the measured vacuum contrast w0."""
    if isinstance(w, WignerGrid):
        return WignerGrid(alphas=w.alphas, values=w.values / cal.w0,
                          truncation_dim=w.truncation_dim, warnings=w.warnings)
    return np.asarray(w, dtype=float) / cal.w0


def _qubit_halfpi(d_q: int, sign: float) -> np.ndarray:
    """exp(-i sign (pi/4) sigma_x) on the g/e subspace, identity elsewhere."""
    u = np.eye(d_q, dtype=complex)
    c = math.cos(math.pi / 4.0)
    s = -1j * math.copysign(1.0, sign) * math.sin(math.pi / 4.0)
    u[0, 0] = u[1, 1] = c
    u[0, 1] = u[1, 0] = s
    return u


def simulate_parity_contrast(state: DensityMatrix, chi_qc: float,
                             collapse: Sequence[Operator] = ()) -> float:
    """Contrast of the two-point parity sequence X/2 -> C_pi -> +-X/2.

    The half-pi rotations are instantaneous; the conditional-phase step is
    generated by the dispersive interaction -chi_qc n_c |e><e| over
    pi/chi_qc. Without collapse operators that step is applied as the exact
    unitary; with them it is integrated as a master equation, so qubit
    decoherence during the gate shrinks the contrast below one. Returns
    P_g(-X/2 arm) - P_g(+X/2 arm), i.e. +1 for an ideal even-parity cavity.
    """
    dims = state.layout.dims
    if len(dims) != 3 or dims[1] < 2:
        raise DomainError(f"need a (cavity, qubit, resonator) layout, got {dims}")
    if chi_qc <= 0.0:
        raise DomainError("chi_qc must be positive")
    d_c, d_q, d_r = dims
    i_c, i_r = identity(d_c), identity(d_r)

    def sandwich(r: np.ndarray, u: np.ndarray) -> np.ndarray:
        return u @ r @ u.conj().T

    u_plus = tensor(i_c, Operator(identity(d_q).layout, _qubit_halfpi(d_q, +1.0)), i_r).data
    u_minus = tensor(i_c, Operator(identity(d_q).layout, _qubit_halfpi(d_q, -1.0)), i_r).data
    rho = sandwich(state.data, u_plus)

    h_gate = (-chi_qc) * tensor(number_op(d_c), ketbra(d_q, 1, 1), i_r)
    t_gate = math.pi / chi_qc
    if collapse:
        run = evolve(h_gate, list(collapse), DensityMatrix(state.layout, rho), t_gate)
        rho = run.final_state.data
    else:
        u_gate = expm((-1j * t_gate) * h_gate).data
        rho = sandwich(rho, u_gate)

    def ground_prob(r: np.ndarray) -> float:
        reduced = partial_trace(DensityMatrix(state.layout, r), 1)
        return float(np.real(reduced.data[0, 0]))

    p_plus = ground_prob(sandwich(rho, u_plus))
    p_minus = ground_prob(sandwich(rho, u_minus))
    return p_minus - p_plus
