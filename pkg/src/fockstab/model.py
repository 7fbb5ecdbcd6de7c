"""Physical model assembly: device parameters, pump combs, Hamiltonians and
collapse operators.

All dynamics live in the frame co-rotating with every matched drive tone.
Each tone's carrier is taken to be calibrated onto its true transition
frequency, so the dispersive/Kerr diagonal is absorbed by the frame and the
matched comb terms are exactly static; cross terms (one tone driving a
neighboring level's transition) oscillate at multiples of the qubit-cavity
dispersive shift. Imperfect carrier calibration enters through a per-tone
residual detuning, realized as a static shift of the tone's intermediate
level. The dispersive-frame static Hamiltonian itself (build_h0) is kept for
the conditional-parity gate and diagnostics.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import units
from .hilbert import Operator, SpaceLayout, identity, ketbra, number_op, tensor, annihilation
from .numerics import DomainError, RegimeWarning


@dataclass(frozen=True)
class SystemParams:
    """Device rates as angular frequencies (rad/us); times in us."""

    omega_c: float       # bare cavity frequency
    omega_q: float       # bare qubit frequency
    omega_r: float       # bare dump-resonator frequency
    chi_qc: float        # qubit-cavity dispersive shift
    chi_qr: float        # qubit-resonator dispersive shift
    zeta_c: float        # cavity self-Kerr
    kappa_c: float       # cavity single-photon decay
    kappa_r: float       # dump-resonator decay
    qubit_t1: float      # us
    qubit_t2: float      # us
    qubit_heat_rate: float = units.khz(0.06)
    cavity_thermal_pop: float = 0.005

    def __post_init__(self) -> None:
        for name in ("omega_c", "omega_q", "omega_r", "chi_qc", "chi_qr",
                     "zeta_c", "kappa_c", "kappa_r", "qubit_t1", "qubit_t2"):
            if getattr(self, name) <= 0.0:
                raise DomainError(f"{name} must be strictly positive")
        if self.qubit_heat_rate < 0.0 or self.cavity_thermal_pop < 0.0:
            raise DomainError("qubit_heat_rate and cavity_thermal_pop must be >= 0")
        if self.qubit_t2 > 2.0 * self.qubit_t1:
            raise DomainError(
                f"qubit_t2 = {self.qubit_t2} us exceeds 2*t1 = {2 * self.qubit_t1} us")
        if not (self.kappa_c < self.kappa_r < self.chi_qc):
            raise DomainError(
                "rate hierarchy kappa_c < kappa_r < chi_qc violated: "
                f"{units.as_khz(self.kappa_c):.3g} kHz, "
                f"{units.as_khz(self.kappa_r):.3g} kHz, "
                f"{units.as_khz(self.chi_qc):.3g} kHz")

    @classmethod
    def from_quoted(cls, *, omega_c_ghz: float, omega_q_ghz: float,
                    omega_r_ghz: float, chi_qc_mhz: float, chi_qr_mhz: float,
                    zeta_c_khz: float, kappa_c_khz: float, kappa_r_mhz: float,
                    qubit_t1_us: float, qubit_t2_us: float,
                    qubit_heat_rate_khz: float = 0.06,
                    cavity_thermal_pop: float = 0.005) -> "SystemParams":
        """Construct from nu/2pi values in the units the key names carry."""
        return cls(
            omega_c=units.ghz(omega_c_ghz),
            omega_q=units.ghz(omega_q_ghz),
            omega_r=units.ghz(omega_r_ghz),
            chi_qc=units.mhz(chi_qc_mhz),
            chi_qr=units.mhz(chi_qr_mhz),
            zeta_c=units.khz(zeta_c_khz),
            kappa_c=units.khz(kappa_c_khz),
            kappa_r=units.mhz(kappa_r_mhz),
            qubit_t1=qubit_t1_us,
            qubit_t2=qubit_t2_us,
            qubit_heat_rate=units.khz(qubit_heat_rate_khz),
            cavity_thermal_pop=cavity_thermal_pop,
        )

    @property
    def kappa_c_khz(self) -> float:
        return units.as_khz(self.kappa_c)

    @property
    def kappa_r_khz(self) -> float:
        return units.as_khz(self.kappa_r)


@dataclass(frozen=True)
class ToneSpec:
    """One comb tone: its level index and quoted drive rates (nu/2pi, kHz)."""

    i: int
    omega_khz: float
    j_khz: float
    detuning_khz: float = 0.0


@dataclass(frozen=True)
class DriveComb:
    """A set of simultaneously applied pump tones.

    kind "addition": tone i pumps |i,g,0> -> |i,e,0> -> |i+1,g,1>, and a
    contiguous tone set {m..n-1} cascades m -> n. kind "subtraction": tone i
    drains |i,g,0> -> |i-1,f,0> -> |i-1,g,1| through the second excited
    qubit level. spurious=True additionally models every tone's off-resonant
    action on the neighboring levels (addition only).
    """

    tones: tuple[ToneSpec, ...]
    kind: str = "addition"
    spurious: bool = False

    def __post_init__(self) -> None:
        if self.kind not in ("addition", "subtraction"):
            raise DomainError(f"unknown comb kind {self.kind!r}")
        tones = tuple(sorted(self.tones, key=lambda t: t.i))
        object.__setattr__(self, "tones", tones)
        idx = [t.i for t in tones]
        if len(set(idx)) != len(idx):
            raise DomainError(f"tone level indices must be distinct, got {idx}")
        if idx and idx != list(range(idx[0], idx[0] + len(idx))):
            raise DomainError(f"tone level indices must be contiguous, got {idx}")
        if self.kind == "subtraction":
            if self.spurious:
                raise DomainError("spurious cross terms are only modeled for addition combs")
            if idx and idx[0] < 1:
                raise DomainError("subtraction tones must sit at levels >= 1")
        elif idx and idx[0] < 0:
            raise DomainError("addition tones must sit at levels >= 0")
        for t in tones:
            if t.omega_khz <= 0.0 or t.j_khz <= 0.0:
                raise DomainError(f"tone {t.i} drive rates must be positive")
        weak = [t.i for t in tones if t.omega_khz >= t.j_khz]
        if weak:
            warnings.warn(
                f"tones {weak} have omega >= j; the cascade works best with "
                "omega below j", RegimeWarning, stacklevel=2)

    @property
    def levels(self) -> tuple[int, ...]:
        return tuple(t.i for t in self.tones)

    @property
    def target(self) -> int | None:
        """Fock level the cascade accumulates into (None for an empty comb)."""
        if not self.tones:
            return None
        if self.kind == "addition":
            return self.tones[-1].i + 1
        return self.tones[0].i - 1

    @property
    def source(self) -> int | None:
        """Level the cascade starts from."""
        if not self.tones:
            return None
        if self.kind == "addition":
            return self.tones[0].i
        return self.tones[-1].i


@dataclass(frozen=True)
class TimeDependentHamiltonian:
    """H(t) = static + sum_k (A_k e^{i w_k t} + A_k^dag e^{-i w_k t}).

    The two-sided form keeps H(t) Hermitian for every t by construction;
    the static part is required Hermitian on entry.
    """

    static_part: Operator
    oscillating_terms: tuple[tuple[Operator, float], ...] = ()

    def __post_init__(self) -> None:
        if not self.static_part.is_hermitian():
            raise DomainError("static part of a Hamiltonian must be Hermitian")
        for op, _ in self.oscillating_terms:
            if op.layout != self.static_part.layout:
                raise DomainError("oscillating term layout differs from static part")

    @property
    def layout(self) -> SpaceLayout:
        return self.static_part.layout

    @property
    def is_static(self) -> bool:
        return not self.oscillating_terms

    def at(self, t: float) -> np.ndarray:
        """Dense H(t)."""
        h = self.static_part.data.copy()
        for op, w in self.oscillating_terms:
            ph = np.exp(1j * w * t)
            h += ph * op.data
            h += np.conj(ph) * op.data.conj().T
        return h

    def max_frequency(self) -> float:
        return max((abs(w) for _, w in self.oscillating_terms), default=0.0)

    def amplitude_scale(self) -> float:
        """Upper bound on ||H(t)||_2 over t."""
        scale = float(np.linalg.norm(self.static_part.data, 2))
        for op, _ in self.oscillating_terms:
            scale += 2.0 * float(np.linalg.norm(op.data, 2))
        return scale


@dataclass(frozen=True)
class DriveTerm:
    """One raising-type comb term (its Hermitian conjugate is implicit).

    upper/lower are (cavity level, qubit level, resonator occupation)
    triples; amplitude and frequency are angular (rad/us), frequency 0 for
    matched terms.
    """

    set: str             # "qubit" or "mixing"
    tone: int            # j, the level the tone is calibrated for
    level: int           # i, the level it acts on
    amplitude: float
    frequency: float
    upper: tuple[int, int, int]
    lower: tuple[int, int, int]


def drive_terms(comb: DriveComb, chi_qc: float) -> tuple[DriveTerm, ...]:
    """Enumerate every comb term, matched and (if requested) cross.

    For an addition comb over tones {m..n-1}, the cross terms span levels
    m..n-1 for the qubit set and m..n for the mixing set; tone j acting on
    level i is detuned by (j-i)*chi_qc and the mixing amplitude carries the
    photon-ladder ratio sqrt((i+1)/(j+1)).
    """
    terms: list[DriveTerm] = []
    if comb.kind == "subtraction":
        for t in comb.tones:
            omega = units.khz(t.omega_khz)
            j_amp = units.khz(t.j_khz)
            terms.append(DriveTerm("qubit", t.i, t.i, omega, 0.0,
                                   upper=(t.i - 1, 2, 0), lower=(t.i, 0, 0)))
            terms.append(DriveTerm("mixing", t.i, t.i, j_amp, 0.0,
                                   upper=(t.i - 1, 0, 1), lower=(t.i - 1, 2, 0)))
        return tuple(terms)

    if not comb.tones:
        return ()
    m = comb.source
    n = comb.target
    for t in comb.tones:
        j = t.i
        omega = units.khz(t.omega_khz)
        j_amp = units.khz(t.j_khz)
        qubit_levels = range(m, n) if comb.spurious else (j,)
        mixing_levels = range(m, n + 1) if comb.spurious else (j,)
        for i in qubit_levels:
            terms.append(DriveTerm("qubit", j, i, omega, (j - i) * chi_qc,
                                   upper=(i, 1, 0), lower=(i, 0, 0)))
        for i in mixing_levels:
            amp = j_amp * math.sqrt((i + 1) / (j + 1))
            terms.append(DriveTerm("mixing", j, i, amp, (j - i) * chi_qc,
                                   upper=(i + 1, 0, 1), lower=(i, 1, 0)))
    return tuple(terms)


def _state_op(layout: SpaceLayout, upper: tuple[int, int, int],
              lower: tuple[int, int, int]) -> Operator:
    """|upper><lower| over the (cavity, qubit, resonator) layout."""
    d_c, d_q, d_r = layout.dims
    for label, (c, q, r) in (("upper", upper), ("lower", lower)):
        if c >= d_c or q >= d_q or r >= d_r:
            raise DomainError(
                f"drive term {label} state {(c, q, r)} exceeds layout {layout.dims}; "
                "enlarge the truncation")
    return tensor(ketbra(d_c, upper[0], lower[0]),
                  ketbra(d_q, upper[1], lower[1]),
                  ketbra(d_r, upper[2], lower[2]))


def _check_layout(layout: SpaceLayout, min_qubit: int = 2) -> None:
    if len(layout.dims) != 3:
        raise DomainError(f"expected (cavity, qubit, resonator) layout, got {layout.dims}")
    d_c, d_q, d_r = layout.dims
    if d_c < 2 or d_q < min_qubit or d_r < 2:
        raise DomainError(f"layout {layout.dims} too small (need >= (2,{min_qubit},2))")


def _assemble(comb: DriveComb, params: SystemParams,
              layout: SpaceLayout) -> TimeDependentHamiltonian:
    terms = drive_terms(comb, params.chi_qc)
    n = layout.total_dim
    static = np.zeros((n, n), dtype=complex)
    groups: dict[int, np.ndarray] = {}
    for term in terms:
        op = term.amplitude * _state_op(layout, term.upper, term.lower).data
        detune = round(term.frequency / params.chi_qc) if params.chi_qc else 0
        if detune == 0:
            static += op + op.conj().T
        else:
            groups.setdefault(detune, np.zeros((n, n), dtype=complex))
            groups[detune] += op
    # residual carrier miscalibration: static shift of the intermediate level
    for t in comb.tones:
        if t.detuning_khz != 0.0:
            mid = (t.i, 1, 0) if comb.kind == "addition" else (t.i - 1, 2, 0)
            proj = _state_op(layout, mid, mid).data
            static += units.khz(t.detuning_khz) * proj
    osc = tuple(
        (Operator(layout, groups[k]), k * params.chi_qc)
        for k in sorted(groups))
    return TimeDependentHamiltonian(Operator(layout, static), osc)


def build_drive(params: SystemParams, comb: DriveComb,
                layout: SpaceLayout) -> TimeDependentHamiltonian:
    """Comb Hamiltonian for an addition cascade on the given layout."""
    _check_layout(layout)
    if comb.kind != "addition":
        raise DomainError("build_drive expects an addition comb; "
                          "use build_csps_drive for subtraction")
    return _assemble(comb, params, layout)


def build_csps_drive(params: SystemParams, comb: DriveComb,
                     layout: SpaceLayout) -> TimeDependentHamiltonian:
    """Comb Hamiltonian for a subtraction cascade; needs the |f> level."""
    _check_layout(layout, min_qubit=3)
    if layout.dims[1] != 3:
        raise DomainError(f"subtraction drives need a 3-level qubit, got d_q = {layout.dims[1]}")
    if comb.kind != "subtraction":
        raise DomainError("build_csps_drive expects a subtraction comb")
    return _assemble(comb, params, layout)


def build_h0(params: SystemParams, layout: SpaceLayout) -> Operator:
    """Dispersive-frame static Hamiltonian (mode self-frequencies removed).

    Retains the qubit-state-dependent cavity and resonator shifts and the
    cavity self-Kerr. With a 3-level qubit the |f> shifts use the transmon
    ladder approximation chi_f ~= 2 chi. Scenario dynamics do not add this
    term (the co-rotating frame absorbs the diagonal); it drives the
    conditional-parity gate and diagnostics.
    """
    _check_layout(layout)
    d_c, d_q, d_r = layout.dims
    n_c = number_op(d_c)
    n_r = number_op(d_r)
    i_c, i_q, i_r = identity(d_c), identity(d_q), identity(d_r)
    pe = ketbra(d_q, 1, 1)
    kerr = Operator(n_c.layout, n_c.data @ (n_c.data - np.eye(d_c)))
    h = (-params.chi_qc) * tensor(n_c, pe, i_r) \
        + (-params.chi_qr) * tensor(i_c, pe, n_r) \
        + (-params.zeta_c / 2.0) * tensor(kerr, i_q, i_r)
    if d_q >= 3:
        pf = ketbra(d_q, 2, 2)
        h = h + (-2.0 * params.chi_qc) * tensor(n_c, pf, i_r) \
              + (-2.0 * params.chi_qr) * tensor(i_c, pf, n_r)
    return h


@dataclass(frozen=True)
class Channels:
    """Per-channel dissipation toggles."""

    cavity_decay: bool = True
    resonator_decay: bool = True
    qubit_decay: bool = True
    qubit_dephasing: bool = True
    qubit_heating: bool = True
    cavity_heating: bool = False

    @classmethod
    def none(cls) -> "Channels":
        return cls(False, False, False, False, False, False)


def collapse_ops(params: SystemParams, layout: SpaceLayout,
                 channels: Channels = Channels()) -> list[Operator]:
    """Collapse operators with the rates folded in as sqrt-rate amplitudes.

    Pure dephasing enters as sqrt(2/T_phi)|e><e| with
    1/T_phi = 1/T2 - 1/(2 T1); at T2 = 2 T1 the amplitude is exactly zero
    and the channel is omitted.
    """
    _check_layout(layout)
    d_c, d_q, d_r = layout.dims
    i_c, i_q, i_r = identity(d_c), identity(d_q), identity(d_r)
    a_c = annihilation(d_c)
    a_r = annihilation(d_r)
    ops: list[Operator] = []
    if channels.cavity_decay:
        ops.append(math.sqrt(params.kappa_c) * tensor(a_c, i_q, i_r))
    if channels.resonator_decay:
        ops.append(math.sqrt(params.kappa_r) * tensor(i_c, i_q, a_r))
    if channels.qubit_decay:
        ops.append(math.sqrt(1.0 / params.qubit_t1) * tensor(i_c, ketbra(d_q, 0, 1), i_r))
    if channels.qubit_dephasing:
        dephase = 1.0 / params.qubit_t2 - 1.0 / (2.0 * params.qubit_t1)
        if dephase > 0.0:
            ops.append(math.sqrt(2.0 * dephase) * tensor(i_c, ketbra(d_q, 1, 1), i_r))
    if channels.qubit_heating and params.qubit_heat_rate > 0.0:
        ops.append(math.sqrt(params.qubit_heat_rate) * tensor(i_c, ketbra(d_q, 1, 0), i_r))
    if channels.cavity_heating and params.cavity_thermal_pop > 0.0:
        ops.append(math.sqrt(params.kappa_c * params.cavity_thermal_pop)
                   * tensor(a_c.dag(), i_q, i_r))
    return ops
