"""End-to-end experiment scenarios.

Each scenario is a pure function of its spec: no randomness, no wall-clock
input, so identical specs serialize to identical artifacts. The scenarios
mirror the lab protocols: stabilize from vacuum, protect a Fock level and
watch it decay, reset a logical qubit onto the stabilized level, tabulate
the rate-model analytics, or take a Wigner snapshot.
"""
from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field

import numpy as np

from . import lindblad, rate
from .hilbert import DensityMatrix, Operator, SpaceLayout, fock_ket, pure_state
from .mitigation import ReadoutCalibration
from .model import (Channels, DriveComb, SystemParams, TimeDependentHamiltonian,
                    ToneSpec, build_csps_drive, build_drive, collapse_ops)
from .numerics import TOL, DomainError

SCENARIO_NAMES = ("stabilize", "protect", "reset", "rate-analytics", "wigner-snapshot")
MODEL_LEVELS = ("lindblad-ideal", "lindblad-spurious", "rate")

LOGICAL_STATES = ("logical-zero", "logical-one", "logical-plus-i")


@dataclass(frozen=True)
class WignerRequest:
    alpha_max: float = 2.5
    points: int = 61


@dataclass(frozen=True)
class OutputRequest:
    populations: bool = True
    final_state: bool = True
    wigner: WignerRequest | None = None


@dataclass(frozen=True)
class NamedComb:
    """Labeled comb pointed at a target level, for the analytics table."""

    label: str
    target_n: int
    comb: DriveComb


@dataclass(frozen=True)
class ScenarioSpec:
    name: str
    label: str
    params: SystemParams
    model_level: str = "lindblad-ideal"
    comb: DriveComb | None = None
    initial_state: str | int = "vacuum"
    duration_us: float = 0.0
    sample_dt_us: float | None = None
    dt_us: float | None = None
    cavity_dim: int | None = None
    resonator_dim: int = 2
    channels: Channels = Channels()
    calibration: ReadoutCalibration | None = None
    outputs: OutputRequest = OutputRequest()
    stop_when_stationary: bool = False
    subtraction_comb: DriveComb | None = None
    comb_set: tuple[NamedComb, ...] | None = None

    def __post_init__(self) -> None:
        if self.name not in SCENARIO_NAMES:
            raise DomainError(f"unknown scenario name {self.name!r}")
        if self.model_level not in MODEL_LEVELS:
            raise DomainError(f"unknown model level {self.model_level!r}")
        if self.duration_us < 0.0:
            raise DomainError("duration_us must be >= 0")


@dataclass
class ScenarioResult:
    label: str
    summary: dict
    population_header: list[str] = field(default_factory=list)
    populations: np.ndarray | None = None
    wigner_grids: dict[str, lindblad.WignerGrid] = field(default_factory=dict)
    final_state: DensityMatrix | None = None
    tables: dict[str, tuple[list[str], list[list]]] = field(default_factory=dict)


# The comb calibration the presets encode, reused as the default analytics
# grid: per-level (omega, j) in quoted kHz for the three stabilize cascades
# plus the protected-decay subsets and the bare-decay baselines.
STABILIZE_TONES = {
    1: (ToneSpec(0, 86.0, 400.0),),
    2: (ToneSpec(0, 86.0, 400.0), ToneSpec(1, 86.0, 380.0)),
    3: (ToneSpec(0, 86.0, 330.0), ToneSpec(1, 86.0, 341.0), ToneSpec(2, 87.0, 356.0)),
}

CALIBRATION_GRID: tuple[NamedComb, ...] = (
    NamedComb("decay_n1", 1, DriveComb(())),
    NamedComb("decay_n2", 2, DriveComb(())),
    NamedComb("decay_n3", 3, DriveComb(())),
    NamedComb("stabilize_n1", 1, DriveComb(STABILIZE_TONES[1])),
    NamedComb("stabilize_n2", 2, DriveComb(STABILIZE_TONES[2])),
    NamedComb("stabilize_n3", 3, DriveComb(STABILIZE_TONES[3])),
    NamedComb("protect_n2_top", 2, DriveComb(STABILIZE_TONES[2][1:])),
    NamedComb("protect_n3_top", 3, DriveComb(STABILIZE_TONES[3][2:])),
    NamedComb("protect_n3_two", 3, DriveComb(STABILIZE_TONES[3][1:])),
)


# ---------------------------------------------------------------- helpers

def comb_rates_khz(comb: DriveComb, params: SystemParams) -> dict[int, float]:
    """Per-level effective pump rate of each tone (quoted kHz)."""
    return {t.i: rate.stabilization_rate(t.omega_khz, t.j_khz, params.kappa_r_khz)
            for t in comb.tones}


def rate_model_for(comb: DriveComb, params: SystemParams, dim: int) -> rate.RateModel:
    return rate.build_rate_matrix(comb_rates_khz(comb, params),
                                  params.kappa_c_khz, dim)


def _effective_comb(spec: ScenarioSpec) -> DriveComb:
    if spec.comb is None or not spec.comb.tones:
        raise DomainError(f"scenario {spec.label!r} needs a non-empty comb")
    want_spurious = spec.model_level == "lindblad-spurious"
    if spec.comb.spurious != want_spurious:
        return dataclasses.replace(spec.comb, spurious=want_spurious)
    return spec.comb


def _layout(spec: ScenarioSpec, target_n: int, min_cavity: int = 0) -> SpaceLayout:
    spurious = spec.model_level == "lindblad-spurious"
    d_c = spec.cavity_dim if spec.cavity_dim else max(target_n + 3, min_cavity)
    floor = target_n + 2 if spurious else target_n + 1
    if d_c < floor:
        raise DomainError(f"cavity_dim {d_c} too small for target level {target_n}")
    d_q = 3 if spec.subtraction_comb is not None else 2
    return SpaceLayout((d_c, d_q, spec.resonator_dim))


def _cavity_ket(state, d_c: int) -> np.ndarray:
    if isinstance(state, int) and not isinstance(state, bool):
        return fock_ket(d_c, state)
    if state == "vacuum":
        return fock_ket(d_c, 0)
    if state in LOGICAL_STATES:
        if d_c < 5:
            raise DomainError(f"logical codewords need cavity_dim >= 5, got {d_c}")
        zero_l = (fock_ket(d_c, 0) + fock_ket(d_c, 4)) / math.sqrt(2.0)
        one_l = fock_ket(d_c, 2)
        if state == "logical-zero":
            return zero_l
        if state == "logical-one":
            return one_l
        return (zero_l + 1j * one_l) / math.sqrt(2.0)
    raise DomainError(f"unknown initial state {state!r}")


def _initial_density(spec: ScenarioSpec, layout: SpaceLayout) -> DensityMatrix:
    d_c, d_q, d_r = layout.dims
    ket = np.kron(np.kron(_cavity_ket(spec.initial_state, d_c), fock_ket(d_q, 0)),
                  fock_ket(d_r, 0))
    return pure_state(layout, ket)


def _sample_dt(spec: ScenarioSpec) -> float:
    if spec.sample_dt_us is not None:
        if spec.sample_dt_us <= 0.0:
            raise DomainError("sample_dt_us must be positive")
        return spec.sample_dt_us
    return max(spec.duration_us / 500.0, 1e-6)


def _build_hamiltonian(spec: ScenarioSpec, layout: SpaceLayout) -> TimeDependentHamiltonian:
    comb = _effective_comb(spec)
    h = build_drive(spec.params, comb, layout)
    if spec.subtraction_comb is not None:
        extra = build_csps_drive(spec.params, spec.subtraction_comb, layout)
        h = TimeDependentHamiltonian(h.static_part + extra.static_part,
                                     h.oscillating_terms + extra.oscillating_terms)
    return h


def _evolve(spec: ScenarioSpec, layout: SpaceLayout,
            rho0: DensityMatrix) -> lindblad.EvolutionResult:
    h = _build_hamiltonian(spec, layout)
    ops = collapse_ops(spec.params, layout, spec.channels)
    dt_bound = lindblad.max_stable_dt(h, ops)
    dt = spec.dt_us if spec.dt_us is not None else dt_bound
    sample_every = max(1, round(_sample_dt(spec) / dt))
    return lindblad.evolve(h, ops, rho0, spec.duration_us, dt=dt,
                           sample_every=sample_every,
                           stop_when_stationary=spec.stop_when_stationary)


def _population_table(times: np.ndarray, pops: np.ndarray,
                      excited: np.ndarray | None,
                      extra: dict[str, np.ndarray] | None = None
                      ) -> tuple[list[str], np.ndarray]:
    cols = [times] + [pops[:, i] for i in range(pops.shape[1])]
    header = ["t_us"] + [f"p{i}" for i in range(pops.shape[1])]
    if excited is not None:
        cols.append(excited)
        header.append("pe_qubit")
    for name, col in (extra or {}).items():
        cols.append(col)
        header.append(name)
    return header, np.column_stack(cols)


def _rate_times(spec: ScenarioSpec) -> np.ndarray:
    step = _sample_dt(spec)
    n = max(1, int(round(spec.duration_us / step)))
    return np.linspace(0.0, spec.duration_us, n + 1)


def _run_diag_dict(run: lindblad.EvolutionResult) -> dict:
    d = run.diagnostics
    return {
        "dt_us": d.dt, "steps": d.steps,
        "trace_drift_max": d.trace_drift_max,
        "min_eigenvalue": d.min_eigenvalue,
        "top_level_occupancy_max": d.top_level_occupancy_max,
        "warnings": list(d.warnings),
        "stationary_stop": d.stationary_stop,
    }


def _fit_decay(times: np.ndarray, values: np.ndarray) -> dict:
    """Exponential fit of a decaying trace, dropping the first fifth.

    Fits ln(values) linearly in time; the normalized residual is the rms
    misfit relative to the rms signal variation in log space. The
    eigenvalue route stays authoritative; this is the cross-check the
    experiment would run on measured traces.
    """
    t0 = times[0] + 0.2 * (times[-1] - times[0])
    mask = (times >= t0) & (values > 0.0)
    if mask.sum() < 3:
        return {"tau_us": None, "normalized_residual": None, "fit_ok": False}
    t = times[mask]
    y = np.log(values[mask])
    slope, intercept = np.polyfit(t, y, 1)
    fitted = slope * t + intercept
    rms = float(np.sqrt(np.mean((y - fitted) ** 2)))
    spread = float(np.sqrt(np.mean((y - y.mean()) ** 2)))
    norm_resid = rms / max(spread, 1e-30)
    if slope >= 0.0:
        return {"tau_us": None, "normalized_residual": norm_resid, "fit_ok": False}
    return {
        "tau_us": float(-1.0 / slope),
        "normalized_residual": norm_resid,
        "fit_ok": bool(norm_resid < TOL.fit_residual),
    }


def _steady_window(times: np.ndarray, trace: np.ndarray) -> float:
    """Mean of the last tenth of a trace, the scenario's steady estimate."""
    t0 = times[0] + 0.9 * (times[-1] - times[0])
    mask = times >= t0
    return float(trace[mask].mean())


# --------------------------------------------------------------- scenarios

def run_stabilize(spec: ScenarioSpec) -> ScenarioResult:
    """Pump the cascade from vacuum and report the steady target population."""
    if spec.initial_state not in ("vacuum", 0):
        raise DomainError("stabilize starts from vacuum")
    comb = spec.comb
    if comb is None or comb.kind != "addition" or comb.source != 0:
        raise DomainError("stabilize needs an addition comb starting at level 0")
    n = comb.target
    lam = comb_rates_khz(comb, spec.params)
    rmodel = rate_model_for(comb, spec.params, (spec.cavity_dim or n + 2))
    f_rate = rate.steady_fidelity(rmodel, n)

    summary: dict = {
        "scenario": "stabilize", "target_n": n,
        "model_level": spec.model_level,
        "lambda_khz": {str(i): lam[i] for i in sorted(lam)},
        "rate_steady_fidelity": f_rate,
    }
    result = ScenarioResult(label=spec.label, summary=summary)

    if spec.model_level == "rate":
        times = _rate_times(spec)
        traj = rate.evolve_populations(rmodel, np.eye(rmodel.dim)[0], times)
        summary["solver"] = traj.method
        summary["steady_p_target"] = _steady_window(times, traj.populations[:, n])
        summary["final_p_target"] = float(traj.populations[-1, n])
        header, table = _population_table(times, traj.populations, None)
    else:
        layout = _layout(spec, n)
        run = _evolve(spec, layout, _initial_density(spec, layout))
        summary["layout_dims"] = list(layout.dims)
        summary["diagnostics"] = _run_diag_dict(run)
        summary["steady_p_target"] = _steady_window(run.times,
                                                    run.cavity_populations[:, n])
        summary["final_p_target"] = float(run.cavity_populations[-1, n])
        header, table = _population_table(run.times, run.cavity_populations,
                                          run.qubit_excited_prob)
        result.final_state = run.final_state
        if spec.outputs.wigner is not None:
            req = spec.outputs.wigner
            result.wigner_grids["wigner_final"] = lindblad.wigner(
                run.final_state, req.alpha_max, req.points)
    summary["gap_to_rate_model"] = summary["steady_p_target"] - f_rate
    if spec.outputs.populations:
        result.population_header = header
        result.populations = table
    return result


def run_protect(spec: ScenarioSpec) -> ScenarioResult:
    """Hold a Fock level with (or without) top-up pumping and time its decay."""
    if not isinstance(spec.initial_state, int) or isinstance(spec.initial_state, bool):
        raise DomainError("protect needs an integer initial Fock level")
    n = spec.initial_state
    if n < 1:
        raise DomainError("protect needs an initial Fock level >= 1")
    comb = spec.comb if spec.comb is not None else DriveComb(())
    if comb.tones and comb.target != n:
        raise DomainError(
            f"comb target {comb.target} differs from the protected level {n}")
    lam = comb_rates_khz(comb, spec.params)
    rmodel = rate_model_for(comb, spec.params, (spec.cavity_dim or n + 1))
    tau_eigen = rate.decay_time(rmodel, n)

    summary: dict = {
        "scenario": "protect", "target_n": n,
        "model_level": spec.model_level,
        "lambda_khz": {str(i): lam[i] for i in sorted(lam)},
        "tau_eigen_us": tau_eigen,
    }
    result = ScenarioResult(label=spec.label, summary=summary)

    if spec.model_level == "rate":
        times = _rate_times(spec)
        traj = rate.evolve_populations(rmodel, np.eye(rmodel.dim)[n], times)
        summary["solver"] = traj.method
        fit = _fit_decay(times, traj.populations[:, n])
        header, table = _population_table(times, traj.populations, None)
    else:
        layout = _layout(spec, n)
        run = _evolve(spec, layout, _initial_density(spec, layout)) if comb.tones \
            else _evolve_bare(spec, layout)
        summary["layout_dims"] = list(layout.dims)
        summary["diagnostics"] = _run_diag_dict(run)
        fit = _fit_decay(run.times, run.cavity_populations[:, n])
        header, table = _population_table(run.times, run.cavity_populations,
                                          run.qubit_excited_prob)
        result.final_state = run.final_state
    summary["fit"] = fit
    if spec.outputs.populations:
        result.population_header = header
        result.populations = table
    return result


def _evolve_bare(spec: ScenarioSpec, layout: SpaceLayout) -> lindblad.EvolutionResult:
    """Decay-only run: empty comb means a zero Hamiltonian."""
    h = TimeDependentHamiltonian(
        Operator(layout, np.zeros((layout.total_dim, layout.total_dim))))
    ops = collapse_ops(spec.params, layout, spec.channels)
    dt = spec.dt_us if spec.dt_us is not None else lindblad.max_stable_dt(h, ops)
    sample_every = max(1, round(_sample_dt(spec) / dt))
    return lindblad.evolve(h, ops, _initial_density(spec, layout),
                           spec.duration_us, dt=dt, sample_every=sample_every,
                           stop_when_stationary=spec.stop_when_stationary)


def run_reset(spec: ScenarioSpec) -> ScenarioResult:
    """Drive a logical-code state onto the stabilized level |2>."""
    if spec.model_level == "rate":
        raise DomainError("reset tracks coherences; use a lindblad model level")
    if spec.comb is None or spec.comb.kind != "addition" or spec.comb.source != 0:
        raise DomainError("reset needs the ground-up addition comb")
    n = spec.comb.target
    layout = _layout(spec, n, min_cavity=6)
    if layout.dims[0] < 6:
        raise DomainError("reset needs cavity_dim >= 6 for the code words")
    rho0 = _initial_density(spec, layout)
    rmodel = rate_model_for(spec.comb, spec.params, layout.dims[0])
    f_rate = rate.steady_fidelity(rmodel, n)

    run = _evolve(spec, layout, rho0)
    p_target = run.cavity_populations[:, n]
    summary = {
        "scenario": "reset", "target_n": n,
        "model_level": spec.model_level,
        "initial_state": str(spec.initial_state),
        "layout_dims": list(layout.dims),
        "rate_steady_fidelity": f_rate,
        "steady_p_target": _steady_window(run.times, p_target),
        "final_p_target": float(p_target[-1]),
        "final_fidelity_to_target": float(p_target[-1]),
        "subtraction_arm": spec.subtraction_comb is not None,
        "diagnostics": _run_diag_dict(run),
    }
    summary["gap_to_rate_model"] = summary["steady_p_target"] - f_rate
    result = ScenarioResult(label=spec.label, summary=summary)
    header, table = _population_table(
        run.times, run.cavity_populations, run.qubit_excited_prob,
        extra={"fidelity_to_target": p_target})
    if spec.outputs.populations:
        result.population_header = header
        result.populations = table
    result.final_state = run.final_state
    if spec.outputs.wigner is not None:
        req = spec.outputs.wigner
        result.wigner_grids["wigner_initial"] = lindblad.wigner(
            rho0, req.alpha_max, req.points)
        result.wigner_grids["wigner_final"] = lindblad.wigner(
            run.final_state, req.alpha_max, req.points)
    return result


def run_rate_analytics(spec: ScenarioSpec) -> ScenarioResult:
    """Tabulate lambda, steady fidelity and decay time across a comb grid."""
    grid = spec.comb_set if spec.comb_set is not None else CALIBRATION_GRID
    if not grid:
        raise DomainError("rate-analytics needs a non-empty comb set")
    header = ["config", "target_n", "lambda_khz", "steady_fidelity", "tau_us"]
    rows: list[list] = []
    for entry in grid:
        n = entry.target_n
        lam = comb_rates_khz(entry.comb, spec.params)
        lam_text = ";".join(repr(lam[i]) for i in sorted(lam))
        covers_ground = entry.comb.tones and entry.comb.source == 0
        if covers_ground:
            model = rate_model_for(entry.comb, spec.params, n + 2)
            f_val = rate.steady_fidelity(model, n)
            tau = None   # the pumped level persists; no decay cell
        else:
            model = rate_model_for(entry.comb, spec.params, n + 1)
            f_val = None
            tau = rate.decay_time(model, n)
        rows.append([entry.label, n, lam_text,
                     "" if f_val is None else repr(float(f_val)),
                     "" if tau is None else repr(float(tau))])
    result = ScenarioResult(label=spec.label, summary={
        "scenario": "rate-analytics",
        "configs": [r[0] for r in rows],
        "kappa_c_khz": spec.params.kappa_c_khz,
    })
    result.tables["rate_analytics"] = (header, rows)
    return result


def run_wigner_snapshot(spec: ScenarioSpec) -> ScenarioResult:
    """Wigner map of a prepared (and optionally evolved) state."""
    if spec.model_level == "rate":
        raise DomainError("wigner snapshots need a lindblad model level")
    if spec.outputs.wigner is None:
        raise DomainError("wigner-snapshot needs an outputs.wigner grid request")
    target = spec.comb.target if (spec.comb and spec.comb.tones) else 0
    if isinstance(spec.initial_state, int) and not isinstance(spec.initial_state, bool):
        target = max(target, spec.initial_state)
    elif spec.initial_state in LOGICAL_STATES:
        target = max(target, 4)
    layout = _layout(spec, max(target, 1))
    rho0 = _initial_density(spec, layout)
    summary: dict = {
        "scenario": "wigner-snapshot",
        "model_level": spec.model_level,
        "initial_state": str(spec.initial_state),
        "layout_dims": list(layout.dims),
    }
    result = ScenarioResult(label=spec.label, summary=summary)
    if spec.duration_us > 0.0 and spec.comb is not None and spec.comb.tones:
        run = _evolve(spec, layout, rho0)
        summary["diagnostics"] = _run_diag_dict(run)
        final = run.final_state
    else:
        final = rho0
    req = spec.outputs.wigner
    grid = lindblad.wigner(final, req.alpha_max, req.points)
    summary["w_origin"] = float(
        grid.values[grid.alphas.shape[0] // 2, grid.alphas.shape[1] // 2])
    result.wigner_grids["wigner_final"] = grid
    result.final_state = final
    return result


_RUNNERS = {
    "stabilize": run_stabilize,
    "protect": run_protect,
    "reset": run_reset,
    "rate-analytics": run_rate_analytics,
    "wigner-snapshot": run_wigner_snapshot,
}


def run_scenario(spec: ScenarioSpec) -> ScenarioResult:
    return _RUNNERS[spec.name](spec)
