"""Reduced birth-death model of the pumped cavity ladder.

Cavity-level populations P_i obey dP/dt = Gamma P, with upward pump rate
lambda_i from level i to i+1 (harmonic sum of the two drive legs and the
dump rate) and downward single-photon decay at i*kappa_c. Rates cross the
API boundary quoted as nu/2pi in kHz, exactly as calibration tables list
them, and are converted to angular rad/us internally; times are in us.
"""
from __future__ import annotations

from collections.abc import Mapping, Sequence
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from . import units
from .hilbert import general_eig
from .numerics import TOL, DomainError, NumericalError


def stabilization_rate(omega_khz: float, j_khz: float, kappa_r_khz: float) -> float:
    """Effective pump rate of one cascade step, 1/(1/Omega + 1/J + 1/kappa_r).

    All three inputs and the result are quoted rates (nu/2pi, kHz); the
    harmonic sum is unit-covariant so no angular conversion is needed.
    """
    for name, value in (("omega", omega_khz), ("j", j_khz), ("kappa_r", kappa_r_khz)):
        if value <= 0.0:
            raise DomainError(f"stabilization_rate: {name} must be positive, got {value}")
    return 1.0 / (1.0 / omega_khz + 1.0 / j_khz + 1.0 / kappa_r_khz)


@dataclass(frozen=True)
class RateModel:
    """Birth-death generator over cavity levels 0..dim-1.

    lambdas_khz[i] pumps i -> i+1; the entry at the top level must be zero
    (a pump there would push probability out of the truncated ladder).
    gamma is the angular-rate generator; its columns sum to zero.
    """

    lambdas_khz: tuple[float, ...]
    kappa_c_khz: float
    dim: int
    gamma: np.ndarray = field(repr=False)


def build_rate_matrix(lambdas, kappa_c_khz: float, dim: int) -> RateModel:
    """Assemble the generator from pump rates and the cavity decay rate.

    lambdas is either a full-length sequence (one entry per level) or a
    mapping {source level: rate}; levels not mentioned do not pump.
    """
    if dim < 2:
        raise DomainError(f"rate model needs dim >= 2, got {dim}")
    if kappa_c_khz <= 0.0:
        raise DomainError(f"kappa_c must be positive, got {kappa_c_khz}")
    lam = np.zeros(dim)
    if isinstance(lambdas, Mapping):
        for level, value in lambdas.items():
            if not 0 <= int(level) < dim:
                raise DomainError(f"pump level {level} outside 0..{dim - 1}")
            lam[int(level)] = float(value)
    elif isinstance(lambdas, Sequence) or isinstance(lambdas, np.ndarray):
        if len(lambdas) > dim:
            raise DomainError(f"{len(lambdas)} pump entries exceed dim {dim}")
        lam[: len(lambdas)] = [float(x) for x in lambdas]
    else:
        raise DomainError(f"unsupported lambdas container {type(lambdas).__name__}")
    if np.any(lam < 0.0):
        raise DomainError("pump rates must be non-negative")
    if lam[dim - 1] != 0.0:
        raise DomainError(
            f"pump at top truncation level {dim - 1} would leak probability; "
            "enlarge dim")

    lam_ang = units.khz(1.0) * lam
    kap_ang = units.khz(kappa_c_khz)
    gamma = np.zeros((dim, dim))
    levels = np.arange(dim)
    gamma[levels, levels] = -(lam_ang + levels * kap_ang)
    gamma[levels[1:], levels[:-1]] = lam_ang[:-1]
    gamma[levels[:-1], levels[1:]] = levels[1:] * kap_ang
    return RateModel(tuple(float(x) for x in lam), float(kappa_c_khz), dim, gamma)


@dataclass(frozen=True)
class RateTrajectory:
    times: np.ndarray
    populations: np.ndarray   # shape (len(times), dim)
    method: str               # "eigen" or "expm"


def _check_times(times) -> np.ndarray:
    t = np.asarray(times, dtype=float)
    if t.ndim != 1 or t.size == 0:
        raise DomainError("times must be a non-empty 1-D array")
    if np.any(t < 0.0) or np.any(np.diff(t) <= 0.0) and t.size > 1:
        raise DomainError("times must be non-negative and strictly increasing")
    return t


def evolve_populations(model: RateModel, p0, times) -> RateTrajectory:
    """Populations at the requested times from the eigen-expansion of Gamma.

    Expansion coefficients come from a dense solve in the right eigenbasis.
    If that basis is ill-conditioned (near-defective Gamma) the solver falls
    back to matrix-exponential stepping, flagged through `method`.
    """
    t = _check_times(times)
    p = np.asarray(p0, dtype=float)
    if p.shape != (model.dim,):
        raise DomainError(f"initial populations must have length {model.dim}")
    if np.any(p < -1e-12) or abs(p.sum() - 1.0) > 1e-9:
        raise DomainError("initial populations must be non-negative and sum to 1")

    w, v = general_eig(model.gamma)
    if np.linalg.cond(v) <= TOL.eigenbasis_cond_max:
        c = np.linalg.solve(v, p.astype(complex))
        out = np.real(np.exp(np.outer(t, w)) * c[None, :] @ v.T)
        return RateTrajectory(t, out, "eigen")

    # near-defective generator: step with the exponential map instead
    out = np.empty((t.size, model.dim))
    expm_cache: dict[float, np.ndarray] = {}
    cur = p.copy()
    prev = 0.0
    for k, tk in enumerate(t):
        dt = float(tk - prev)
        if dt > 0.0:
            if dt not in expm_cache:
                expm_cache[dt] = scipy.linalg.expm(model.gamma * dt)
            cur = expm_cache[dt] @ cur
        out[k] = cur
        prev = tk
    return RateTrajectory(t, out, "expm")


def _top_pumped_level(model: RateModel) -> int:
    """Highest level receiving pump flux, i.e. max{i : lambda_i > 0} + 1; 0 if unpumped."""
    pumped = [i for i, lam in enumerate(model.lambdas_khz) if lam > 0.0]
    return (max(pumped) + 1) if pumped else 0


def steady_populations(model: RateModel) -> np.ndarray:
    """Stationary distribution by the detailed-balance recursion.

    In a birth-death chain the stationary state satisfies
    lambda_i P_i = (i+1) kappa_c P_{i+1} link by link, so the distribution
    follows from an upward product and one normalization. Pumping must be
    gap-free below the top pumped level, otherwise the chain splits.
    """
    n_top = _top_pumped_level(model)
    lam = model.lambdas_khz
    for i in range(n_top):
        if lam[i] <= 0.0:
            raise DomainError(
                f"pump gap at level {i}: levels up to {n_top} are pumped above it")
    p = np.zeros(model.dim)
    p[0] = 1.0
    for i in range(model.dim - 1):
        p[i + 1] = lam[i] * p[i] / ((i + 1) * model.kappa_c_khz)
    return p / p.sum()


def steady_fidelity(model: RateModel, n: int) -> float:
    """Stationary population of the target level |n> under a full pump ladder."""
    if not 0 < n < model.dim:
        raise DomainError(f"target level {n} outside 1..{model.dim - 1}")
    if _top_pumped_level(model) < n:
        raise DomainError(f"pumping does not reach level {n}")
    return float(steady_populations(model)[n])


def decay_time(model: RateModel, n: int) -> float:
    """Late-time lifetime of level n released from P(0) = e_n: -1/Re(eta_N).

    Expanding e_n in the right eigenbasis gives
    P_n(t) = sum_k c_k v_k[n] exp(eta_k t); eta_N is the slowest nonzero
    mode that actually contributes, i.e. whose weight |c_k v_k[n]| clears a
    relative floor. Measuring the |n>-component in this expansion (instead
    of on unit-normalized eigenvectors) is what makes the protected slow
    mode win over the fast pump-cycle mode.
    """
    if not 0 < n < model.dim:
        raise DomainError(f"level {n} outside 1..{model.dim - 1}")
    w, v = general_eig(model.gamma)
    if np.linalg.cond(v) > TOL.eigenbasis_cond_max:
        raise NumericalError("rate eigenbasis is ill-conditioned; "
                             "no clean decay mode")
    e_n = np.zeros(model.dim, dtype=complex)
    e_n[n] = 1.0
    c = np.linalg.solve(v, e_n)
    weight = np.abs(c * v[n, :])
    scale = max(1.0, float(np.abs(w).max()))
    idx = np.flatnonzero(np.abs(w) > TOL.rate_zero_eig * scale)
    if idx.size == 0:
        raise NumericalError("no decaying eigenmode found")
    top = float(weight[idx].max())
    if top < 1e-12:
        raise NumericalError(f"no decaying mode overlaps level {n}")
    contributing = idx[weight[idx] > 1e-9 * top]
    pick = contributing[np.argmax(np.real(w[contributing]))]
    eta = float(np.real(w[pick]))
    if eta >= 0.0:
        raise NumericalError(f"selected mode does not decay (eta = {eta:.3e})")
    return -1.0 / eta
