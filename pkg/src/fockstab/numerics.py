"""Shared numerical tolerances and error types.

Every threshold used across the package lives in one frozen record so all
modules draw from the same numbers and tests can reference them by name.
"""
from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class Tolerances:
    # operator / state validity
    hermiticity: float = 1e-10          # max |A - A^dag| element
    state_trace: float = 1e-9           # |Tr(rho) - 1| on constructed states
    state_eig_floor: float = -1e-8      # min eigenvalue of a constructed state
    # linear-algebra kernels
    hermitian_eig_residual: float = 1e-9
    general_eig_residual: float = 1e-8
    expm_rel: float = 1e-9
    unitarity: float = 1e-8
    # fixed-step integration
    trace_drift_warn: float = 1e-6      # drift bound on healthy runs
    trace_drift_abort: float = 1e-4     # integrator aborts beyond this
    positivity_floor: float = -1e-6     # transient eigenvalue dip allowed
    truncation_occupancy: float = 1e-3  # top-cavity-level occupancy warning
    stationarity: float = 1e-7          # max |dP/dt| (1/us) for early stop
    # steady states
    steady_rhs_max: float = 1e-8        # max |d(rho_ss)/dt| element
    null_space_rel: float = 1e-9        # zero-eigenvalue cut vs spectral scale
    rate_zero_eig: float = 1e-10        # zero-mode cut in the rate model
    # rate model
    column_sum: float = 1e-12
    eigenbasis_cond_max: float = 1e8    # beyond this, fall back to expm steps
    fit_residual: float = 1e-2          # normalized residual for decay fits


TOL = Tolerances()


class DomainError(ValueError):
    """Input violates a documented precondition."""


class NumericalError(RuntimeError):
    """A numerical guarantee was not met (residual, drift, degeneracy)."""


class SchemaError(ValueError):
    """Configuration rejected; the message carries the offending key path."""


class TruncationWarning(UserWarning):
    """Hilbert-space truncation is too tight for the requested operation."""


class RegimeWarning(UserWarning):
    """Parameters leave the rate hierarchy the pumping scheme relies on."""
