"""Master-equation integration and cavity-state diagnostics.

The integrator is a fixed-step RK4 on the full density matrix with the step
bounded by the fastest scale in the problem (largest oscillating-term
frequency plus the largest Hamiltonian/collapse scale). Steady states come
from the null vector of the vectorized generator. Dense linear algebra
throughout; the spaces involved stay well under a hundred dimensions.
"""
from __future__ import annotations

import math
import warnings
from collections.abc import Sequence
from dataclasses import dataclass, field

import numpy as np

from .hilbert import (DensityMatrix, Operator, check_density, general_eig,
                      displacement, partial_trace)
from .model import TimeDependentHamiltonian
from .numerics import TOL, DomainError, NumericalError, TruncationWarning


def _as_tdh(h) -> TimeDependentHamiltonian:
    if isinstance(h, TimeDependentHamiltonian):
        return h
    if isinstance(h, Operator):
        return TimeDependentHamiltonian(h, ())
    raise DomainError(f"expected Operator or TimeDependentHamiltonian, got {type(h).__name__}")


def lindblad_rhs(rho, h, collapse: Sequence) -> np.ndarray:
    """Reference right-hand side -i[H,rho] + sum(L rho L^dag - {L^dag L, rho}/2).

    For Hermitian input the output is Hermitian and traceless to machine
    precision; the integrator's fast path is tested against this form.
    """
    r = np.asarray(rho.data if hasattr(rho, "data") else rho, dtype=complex)
    hd = np.asarray(h.data if hasattr(h, "data") else h, dtype=complex)
    out = -1j * (hd @ r - r @ hd)
    for op in collapse:
        ld = np.asarray(op.data if hasattr(op, "data") else op, dtype=complex)
        ldag = ld.conj().T
        ldl = ldag @ ld
        out += ld @ r @ ldag - 0.5 * (ldl @ r + r @ ldl)
    return out


def max_stable_dt(h, collapse: Sequence[Operator]) -> float:
    """Step bound dt <= 1/(20 f_max).

    f_max is the largest oscillating-term frequency plus the larger of the
    Hamiltonian amplitude bound and the strongest collapse scale ||L||^2
    (all in rad/us, so the bound lands in us).
    """
    tdh = _as_tdh(h)
    l_scale = max((float(np.linalg.norm(op.data, 2)) ** 2 for op in collapse), default=0.0)
    f_max = tdh.max_frequency() + max(tdh.amplitude_scale(), l_scale)
    if f_max <= 0.0:
        return math.inf
    return 1.0 / (20.0 * f_max)


@dataclass(frozen=True)
class RunDiagnostics:
    dt: float
    steps: int
    trace_drift_max: float
    min_eigenvalue: float
    top_level_occupancy_max: float
    warnings: tuple[str, ...] = ()
    stationary_stop: bool = False


@dataclass(frozen=True)
class EvolutionResult:
    """Sampled trajectory of a master-equation run.

    cavity_populations holds the subsystem-0 level populations per sample
    (each row sums to the state trace); qubit_excited_prob is the |e>
    population when the layout has a second subsystem.
    """

    times: np.ndarray
    cavity_populations: np.ndarray
    qubit_excited_prob: np.ndarray | None
    final_state: DensityMatrix
    states: list[DensityMatrix] | None
    diagnostics: RunDiagnostics = field(repr=False)


def _subsystem_populations(rho: np.ndarray, dims: tuple[int, ...]) -> tuple[np.ndarray, float | None]:
    diag = np.real(np.diagonal(rho)).reshape(dims)
    axes_rest = tuple(range(1, len(dims)))
    cavity = diag.sum(axis=axes_rest) if axes_rest else diag.copy()
    excited = None
    if len(dims) >= 2 and dims[1] >= 2:
        axes = tuple(i for i in range(len(dims)) if i != 1)
        excited = float(diag.sum(axis=axes)[1])
    return cavity, excited


def evolve(h, collapse: Sequence[Operator], rho0: DensityMatrix,
           duration: float, *, dt: float | None = None, sample_every: int = 1,
           store_states: bool = False,
           stop_when_stationary: bool = False) -> EvolutionResult:
    """Fixed-step RK4 integration of the master equation over [0, duration].

    dt=None picks the stability-rule bound; a caller-supplied dt above that
    bound is rejected. The step count is rounded up so the horizon is hit
    exactly. The run aborts if the trace drifts beyond the hard bound;
    excessive occupancy of the top cavity level is recorded as a warning.
    """
    tdh = _as_tdh(h)
    layout = tdh.layout
    if rho0.layout != layout:
        raise DomainError(f"state layout {rho0.layout.dims} does not match "
                          f"Hamiltonian layout {layout.dims}")
    for op in collapse:
        if op.layout != layout:
            raise DomainError("collapse operator layout mismatch")
    check_density(rho0)
    if duration < 0.0:
        raise DomainError(f"duration must be >= 0, got {duration}")
    if sample_every < 1:
        raise DomainError("sample_every must be >= 1")

    bound = max_stable_dt(tdh, collapse)
    if dt is None:
        dt = bound if math.isfinite(bound) else max(duration, 1.0)
    if dt <= 0.0:
        raise DomainError(f"dt must be positive, got {dt}")
    if dt > bound * (1.0 + 1e-12):
        raise DomainError(
            f"dt = {dt:.3e} us exceeds the stability rule bound {bound:.3e} us")

    n_steps = max(int(math.ceil(duration / dt - 1e-12)), 0) if duration > 0 else 0
    dt_eff = duration / n_steps if n_steps else 0.0

    static = tdh.static_part.data
    osc = [(op.data, op.data.conj().T, w) for op, w in tdh.oscillating_terms]
    ls = np.stack([op.data for op in collapse]) if collapse else None
    lsd = np.stack([op.data.conj().T for op in collapse]) if collapse else None
    g0 = -1j * static
    if ls is not None:
        g0 = g0 - 0.5 * np.einsum("kij,kjl->il", lsd, ls)

    def rhs(t: float, r: np.ndarray) -> np.ndarray:
        g = g0
        if osc:
            hosc = np.zeros_like(static)
            for a, adag, w in osc:
                ph = np.exp(1j * w * t)
                hosc = hosc + ph * a + np.conj(ph) * adag
            g = g0 - 1j * hosc
        out = g @ r + r @ g.conj().T
        if ls is not None:
            out = out + np.matmul(np.matmul(ls, r), lsd).sum(axis=0)
        return out

    dims = layout.dims
    rho = rho0.data.astype(complex).copy()
    times = [0.0]
    pops, excited = _subsystem_populations(rho, dims)
    cavity_rows = [pops]
    excited_rows = [excited]
    states = [DensityMatrix(layout, rho.copy())] if store_states else None
    trace_drift_max = 0.0
    min_eig = float(np.linalg.eigvalsh(rho).min())
    top_max = float(pops[-1])
    stationary = False
    prev_sample = (0.0, pops)

    def record(t: float, r: np.ndarray) -> tuple[np.ndarray, float]:
        nonlocal trace_drift_max, min_eig, top_max
        tr = float(np.real(np.trace(r)))
        drift = abs(tr - 1.0)
        trace_drift_max = max(trace_drift_max, drift)
        if drift > TOL.trace_drift_abort:
            raise NumericalError(
                f"trace drifted by {drift:.2e} at t = {t:.4f} us; "
                "the step is too coarse for this model")
        p, exc = _subsystem_populations(r, dims)
        min_eig = min(min_eig, float(np.linalg.eigvalsh(r).min()))
        top_max = max(top_max, float(p[-1]))
        times.append(t)
        cavity_rows.append(p)
        excited_rows.append(exc)
        if store_states:
            states.append(DensityMatrix(layout, r.copy()))
        return p, drift

    step = 0
    while step < n_steps:
        t = step * dt_eff
        k1 = rhs(t, rho)
        half = rho + (0.5 * dt_eff) * k1
        k2 = rhs(t + 0.5 * dt_eff, half)
        half = rho + (0.5 * dt_eff) * k2
        k3 = rhs(t + 0.5 * dt_eff, half)
        k4 = rhs(t + dt_eff, rho + dt_eff * k3)
        rho = rho + (dt_eff / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        step += 1
        if step % sample_every == 0 or step == n_steps:
            t_now = step * dt_eff
            p, _ = record(t_now, rho)
            if stop_when_stationary:
                t_prev, p_prev = prev_sample
                span = t_now - t_prev
                if span > 0 and float(np.abs(p - p_prev).max()) / span < TOL.stationarity:
                    stationary = True
                    break
                prev_sample = (t_now, p)

    warns = []
    if top_max > TOL.truncation_occupancy:
        warns.append(
            f"top cavity level reached occupancy {top_max:.2e}; truncation is tight")
    if trace_drift_max > TOL.trace_drift_warn:
        warns.append(f"trace drift reached {trace_drift_max:.2e}")

    diag = RunDiagnostics(
        dt=dt_eff, steps=step, trace_drift_max=trace_drift_max,
        min_eigenvalue=min_eig, top_level_occupancy_max=top_max,
        warnings=tuple(warns), stationary_stop=stationary)
    return EvolutionResult(
        times=np.asarray(times),
        cavity_populations=np.asarray(cavity_rows),
        qubit_excited_prob=(None if excited_rows[0] is None
                            else np.asarray([e for e in excited_rows])),
        final_state=DensityMatrix(layout, rho),
        states=states,
        diagnostics=diag)


def steady_state(h, collapse: Sequence[Operator]) -> DensityMatrix:
    """Stationary state from the null vector of the vectorized generator.

    Requires a static Hamiltonian and at least one collapse operator (with
    none, every Hamiltonian eigenprojector is stationary). A null space of
    dimension above one is reported as degeneracy rather than resolved.
    """
    tdh = _as_tdh(h)
    if not tdh.is_static:
        raise DomainError("steady_state needs a static Hamiltonian "
                          "(oscillating terms present)")
    if not collapse:
        raise DomainError("no dissipation: every Hamiltonian eigenprojector "
                          "is stationary, the steady state is not unique")
    hd = tdh.static_part.data
    n = hd.shape[0]
    eye = np.eye(n)
    sup = -1j * (np.kron(hd, eye) - np.kron(eye, hd.T))
    for op in collapse:
        ld = op.data
        ldl = ld.conj().T @ ld
        sup += np.kron(ld, ld.conj()) - 0.5 * (np.kron(ldl, eye) + np.kron(eye, ldl.T))
    w, v = general_eig(sup)
    scale = max(1.0, float(np.abs(w).max()))
    null = np.flatnonzero(np.abs(w) <= TOL.null_space_rel * scale)
    if null.size == 0:
        raise NumericalError("no stationary direction resolved")
    if null.size > 1:
        raise NumericalError(
            f"steady state degenerate: {null.size} independent stationary "
            "directions (disconnected or dissipation-free sectors)")
    rho = v[:, null[0]].reshape(n, n)
    rho = 0.5 * (rho + rho.conj().T)
    tr = float(np.real(np.trace(rho)))
    if abs(tr) < 1e-12:
        raise NumericalError("stationary direction is traceless; cannot normalize")
    rho /= tr
    resid = float(np.abs(lindblad_rhs(rho, hd, collapse)).max())
    if resid > TOL.steady_rhs_max:
        raise NumericalError(f"steady-state residual {resid:.2e} above tolerance")
    wmin = float(np.linalg.eigvalsh(rho).min())
    if wmin < TOL.state_eig_floor:
        raise NumericalError(f"steady state has eigenvalue {wmin:.2e}")
    return DensityMatrix(tdh.layout, rho)


def photon_populations(state: DensityMatrix) -> np.ndarray:
    """Diagonal of the cavity-reduced state (subsystem 0)."""
    reduced = state if len(state.layout.dims) == 1 else partial_trace(state, 0)
    return np.real(np.diagonal(reduced.data)).copy()


@dataclass(frozen=True)
class WignerGrid:
    """Wigner map sampled on a square grid of displacement amplitudes."""

    alphas: np.ndarray            # complex, shape (points, points)
    values: np.ndarray            # real, same shape
    truncation_dim: int
    warnings: tuple[str, ...] = ()


def wigner(state: DensityMatrix, alpha_max: float, points: int) -> WignerGrid:
    """Wigner function W(alpha) = (2/pi) Tr[D(alpha) P D(-alpha) rho].

    The state is reduced to the cavity first when composite. Values are
    bounded by 2/pi; exceeding that bound (beyond rounding) indicates a
    truncation problem and is raised, not returned.
    """
    if alpha_max <= 0.0 or points < 2:
        raise DomainError("need alpha_max > 0 and at least a 2x2 grid")
    reduced = state if len(state.layout.dims) == 1 else partial_trace(state, 0)
    rho = reduced.data
    dim = rho.shape[0]
    signs = np.where(np.arange(dim) % 2 == 0, 1.0, -1.0)
    axis = np.linspace(-alpha_max, alpha_max, points)
    alphas = axis[None, :] + 1j * axis[:, None]
    values = np.empty((points, points))
    rho_t = rho.T.copy()
    caught: list[str] = []
    with warnings.catch_warnings(record=True) as wlist:
        warnings.simplefilter("always", TruncationWarning)
        for iy in range(points):
            for ix in range(points):
                d = displacement(complex(alphas[iy, ix]), dim).data
                m = (d * signs[None, :]) @ d.conj().T    # D P D^dag
                values[iy, ix] = (2.0 / math.pi) * float(np.real(np.sum(m * rho_t)))
        for w in wlist:
            if issubclass(w.category, TruncationWarning):
                caught.append(str(w.message))
    bound = 2.0 / math.pi + 1e-6
    worst = float(np.abs(values).max())
    if worst > bound:
        raise NumericalError(
            f"|W| reached {worst:.6f}, above the 2/pi bound; truncation too tight")
    # identical guard messages collapse to one entry per radius
    uniq = tuple(dict.fromkeys(caught))
    return WignerGrid(alphas=alphas, values=values, truncation_dim=dim, warnings=uniq)


def state_fidelity(state: DensityMatrix, target: DensityMatrix) -> float:
    """Overlap Tr(rho sigma) with a pure target sigma."""
    if state.layout != target.layout:
        raise DomainError(f"layout mismatch: {state.layout.dims} vs {target.layout.dims}")
    purity = float(np.real(np.trace(target.data @ target.data)))
    if purity < 1.0 - 1e-9:
        raise DomainError(f"target purity {purity:.12f} is below pure-state grade")
    return float(np.real(np.trace(state.data @ target.data)))
