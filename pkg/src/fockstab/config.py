"""TOML experiment configs.

Parsing is strict: unknown keys fail with their full dotted path, values
are type-checked, and physical invariants raised by the model layer are
re-reported with the offending path. Overrides edit the raw mapping before
validation, so a typo'd override fails exactly like a typo'd file.
"""
from __future__ import annotations

import copy
from dataclasses import dataclass
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:          # python < 3.11
    import tomli as tomllib

from .mitigation import ReadoutCalibration
from .model import Channels, DriveComb, SystemParams, ToneSpec
from .numerics import DomainError, SchemaError
from .scenarios import (LOGICAL_STATES, MODEL_LEVELS, SCENARIO_NAMES, NamedComb,
                        OutputRequest, ScenarioSpec, WignerRequest)

PRESETS = ("paper_tables", "fig2", "fig3")

_MISSING = object()

_DEFAULT_LEVEL = {
    "stabilize": "lindblad-ideal",
    "protect": "rate",
    "reset": "lindblad-ideal",
    "rate-analytics": "rate",
    "wigner-snapshot": "lindblad-ideal",
}


@dataclass(frozen=True)
class Config:
    params: SystemParams
    calibration: ReadoutCalibration | None
    scenarios: tuple[ScenarioSpec, ...]


def _fmt(path: str, key) -> str:
    return f"{path}.{key}" if path else str(key)


def _take(tab: dict, key: str, path: str, kind: str, default=_MISSING,
          choices=None):
    if key not in tab:
        if default is _MISSING:
            raise SchemaError(f"{_fmt(path, key)}: required key is missing")
        return default
    v = tab.pop(key)
    where = _fmt(path, key)
    if kind == "float":
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            raise SchemaError(f"{where}: expected a number, got {type(v).__name__}")
        return float(v)
    if kind == "int":
        if isinstance(v, bool) or not isinstance(v, int):
            raise SchemaError(f"{where}: expected an integer, got {type(v).__name__}")
        return v
    if kind == "bool":
        if not isinstance(v, bool):
            raise SchemaError(f"{where}: expected a boolean, got {type(v).__name__}")
        return v
    if kind == "str":
        if not isinstance(v, str):
            raise SchemaError(f"{where}: expected a string, got {type(v).__name__}")
        if choices is not None and v not in choices:
            raise SchemaError(f"{where}: {v!r} is not one of {', '.join(choices)}")
        return v
    if kind == "table":
        if not isinstance(v, dict):
            raise SchemaError(f"{where}: expected a table, got {type(v).__name__}")
        return v
    if kind == "list":
        if not isinstance(v, list):
            raise SchemaError(f"{where}: expected an array, got {type(v).__name__}")
        return v
    if kind == "state":
        if isinstance(v, bool) or not isinstance(v, (int, str)):
            raise SchemaError(f"{where}: expected a Fock index or a state name")
        return v
    raise AssertionError(kind)


def _check_consumed(tab: dict, path: str) -> None:
    if tab:
        keys = ", ".join(_fmt(path, k) for k in sorted(tab))
        raise SchemaError(f"unknown key(s): {keys}")


def _parse_tone(tab_in: dict, path: str) -> ToneSpec:
    tab = dict(tab_in)
    i = _take(tab, "i", path, "int")
    omega = _take(tab, "omega_khz", path, "float")
    j = _take(tab, "j_khz", path, "float")
    detuning = _take(tab, "detuning_khz", path, "float", default=0.0)
    _check_consumed(tab, path)
    return ToneSpec(i=i, omega_khz=omega, j_khz=j, detuning_khz=detuning)


def _parse_comb(tab_in: dict, path: str, default_kind: str = "addition") -> DriveComb:
    tab = dict(tab_in)
    kind = _take(tab, "kind", path, "str", default=default_kind,
                 choices=("addition", "subtraction"))
    spurious = _take(tab, "spurious", path, "bool", default=False)
    tones_list = _take(tab, "tones", path, "list", default=[])
    tones = []
    for k, item in enumerate(tones_list):
        tpath = f"{path}.tones.{k}"
        if not isinstance(item, dict):
            raise SchemaError(f"{tpath}: expected a table")
        tones.append(_parse_tone(item, tpath))
    _check_consumed(tab, path)
    try:
        return DriveComb(tuple(tones), kind=kind, spurious=spurious)
    except DomainError as exc:
        raise SchemaError(f"{path}: {exc}") from exc


def _parse_channels(tab_in: dict, path: str) -> Channels:
    tab = dict(tab_in)
    kwargs = {}
    for name in ("cavity_decay", "resonator_decay", "qubit_decay",
                 "qubit_dephasing", "qubit_heating", "cavity_heating"):
        kwargs[name] = _take(tab, name, path, "bool",
                             default=getattr(Channels(), name))
    _check_consumed(tab, path)
    return Channels(**kwargs)


def _parse_outputs(tab_in: dict, path: str) -> OutputRequest:
    tab = dict(tab_in)
    populations = _take(tab, "populations", path, "bool", default=True)
    final_state = _take(tab, "final_state", path, "bool", default=True)
    wigner_tab = _take(tab, "wigner", path, "table", default=None)
    wigner = None
    if wigner_tab is not None:
        wtab = dict(wigner_tab)
        wpath = _fmt(path, "wigner")
        alpha_max = _take(wtab, "alpha_max", wpath, "float", default=2.5)
        points = _take(wtab, "points", wpath, "int", default=61)
        _check_consumed(wtab, wpath)
        if alpha_max <= 0.0:
            raise SchemaError(f"{_fmt(wpath, 'alpha_max')}: must be positive")
        if points < 2:
            raise SchemaError(f"{_fmt(wpath, 'points')}: need at least 2")
        wigner = WignerRequest(alpha_max=alpha_max, points=points)
    _check_consumed(tab, path)
    return OutputRequest(populations=populations, final_state=final_state,
                         wigner=wigner)


def _parse_system(tab_in: dict, path: str) -> SystemParams:
    tab = dict(tab_in)
    kwargs = {}
    for key in ("omega_c_ghz", "omega_q_ghz", "omega_r_ghz", "chi_qc_mhz",
                "chi_qr_mhz", "zeta_c_khz", "kappa_c_khz", "kappa_r_mhz",
                "qubit_t1_us", "qubit_t2_us"):
        kwargs[key] = _take(tab, key, path, "float")
    for key, dflt in (("qubit_heat_rate_khz", 0.06), ("cavity_thermal_pop", 0.005)):
        kwargs[key] = _take(tab, key, path, "float", default=dflt)
    _check_consumed(tab, path)
    try:
        return SystemParams.from_quoted(**kwargs)
    except DomainError as exc:
        raise SchemaError(f"{path}: {exc}") from exc


def _parse_calibration(tab_in: dict, path: str) -> ReadoutCalibration:
    tab = dict(tab_in)
    kwargs = {
        "f_g": _take(tab, "f_g", path, "float", default=0.985),
        "f_e": _take(tab, "f_e", path, "float", default=0.952),
        "a0": _take(tab, "a0", path, "float", default=None),
        "a1": _take(tab, "a1", path, "float", default=None),
        "p_b": _take(tab, "p_b", path, "float", default=None),
        "w0": _take(tab, "w0", path, "float", default=0.924),
    }
    _check_consumed(tab, path)
    try:
        return ReadoutCalibration(**kwargs)
    except DomainError as exc:
        raise SchemaError(f"{path}: {exc}") from exc


def _parse_comb_set(lst: list, path: str) -> tuple[NamedComb, ...]:
    entries = []
    for k, item in enumerate(lst):
        epath = f"{path}.{k}"
        if not isinstance(item, dict):
            raise SchemaError(f"{epath}: expected a table")
        tab = dict(item)
        label = _take(tab, "label", epath, "str")
        target = _take(tab, "target_n", epath, "int")
        comb_tab = _take(tab, "comb", epath, "table", default={})
        _check_consumed(tab, epath)
        if target < 1:
            raise SchemaError(f"{_fmt(epath, 'target_n')}: must be >= 1")
        comb = _parse_comb(comb_tab, _fmt(epath, "comb"))
        entries.append(NamedComb(label=label, target_n=target, comb=comb))
    return tuple(entries)


def _default_initial(name: str, comb: DriveComb | None, path: str):
    if name == "stabilize" or name == "wigner-snapshot":
        return "vacuum"
    if name == "reset":
        return "logical-zero"
    if name == "protect":
        if comb is not None and comb.tones:
            return comb.target
        raise SchemaError(f"{_fmt(path, 'initial_state')}: required when the "
                          "comb is empty")
    return "vacuum"


def _parse_scenario(tab_in: dict, path: str, idx: int, params: SystemParams,
                    calibration: ReadoutCalibration | None,
                    root_comb: DriveComb | None) -> ScenarioSpec:
    tab = dict(tab_in)
    name = _take(tab, "name", path, "str", choices=SCENARIO_NAMES)
    label = _take(tab, "label", path, "str", default=f"{name}_{idx}")
    model_level = _take(tab, "model_level", path, "str",
                        default=_DEFAULT_LEVEL[name], choices=MODEL_LEVELS)
    if name == "rate-analytics" and model_level != "rate":
        raise SchemaError(f"{_fmt(path, 'model_level')}: rate-analytics runs "
                          "on the rate model only")
    duration = _take(tab, "duration_us", path, "float", default=0.0)
    if duration < 0.0:
        raise SchemaError(f"{_fmt(path, 'duration_us')}: must be >= 0")
    if name in ("stabilize", "protect", "reset") and duration <= 0.0:
        raise SchemaError(f"{_fmt(path, 'duration_us')}: {name} needs a "
                          "positive duration")
    sample_dt = _take(tab, "sample_dt_us", path, "float", default=None)
    if sample_dt is not None and sample_dt <= 0.0:
        raise SchemaError(f"{_fmt(path, 'sample_dt_us')}: must be positive")
    dt = _take(tab, "dt_us", path, "float", default=None)
    if dt is not None and dt <= 0.0:
        raise SchemaError(f"{_fmt(path, 'dt_us')}: must be positive")
    cavity_dim = _take(tab, "cavity_dim", path, "int", default=None)
    if cavity_dim is not None and cavity_dim < 2:
        raise SchemaError(f"{_fmt(path, 'cavity_dim')}: need at least 2 levels")
    resonator_dim = _take(tab, "resonator_dim", path, "int", default=2)
    if resonator_dim < 2:
        raise SchemaError(f"{_fmt(path, 'resonator_dim')}: need at least 2 levels")
    stop = _take(tab, "stop_when_stationary", path, "bool", default=False)

    comb_tab = _take(tab, "comb", path, "table", default=None)
    comb = _parse_comb(comb_tab, _fmt(path, "comb")) if comb_tab is not None \
        else root_comb
    sub_tab = _take(tab, "subtraction_comb", path, "table", default=None)
    sub = _parse_comb(sub_tab, _fmt(path, "subtraction_comb"),
                      default_kind="subtraction") if sub_tab is not None else None
    if sub is not None and sub.kind != "subtraction":
        raise SchemaError(f"{_fmt(path, 'subtraction_comb.kind')}: must be "
                          "subtraction")
    channels_tab = _take(tab, "channels", path, "table", default=None)
    channels = _parse_channels(channels_tab, _fmt(path, "channels")) \
        if channels_tab is not None else Channels()
    outputs_tab = _take(tab, "outputs", path, "table", default=None)
    outputs = _parse_outputs(outputs_tab, _fmt(path, "outputs")) \
        if outputs_tab is not None else OutputRequest()
    comb_set_list = _take(tab, "comb_set", path, "list", default=None)
    comb_set = _parse_comb_set(comb_set_list, _fmt(path, "comb_set")) \
        if comb_set_list is not None else None
    if comb_set is not None and name != "rate-analytics":
        raise SchemaError(f"{_fmt(path, 'comb_set')}: only rate-analytics "
                          "takes a comb set")

    initial = _take(tab, "initial_state", path, "state", default=None)
    if initial is None:
        initial = _default_initial(name, comb, path)
    if isinstance(initial, str) and initial != "vacuum" \
            and initial not in LOGICAL_STATES:
        raise SchemaError(f"{_fmt(path, 'initial_state')}: {initial!r} is not "
                          f"vacuum, a Fock index, or one of {', '.join(LOGICAL_STATES)}")
    if isinstance(initial, int) and initial < 0:
        raise SchemaError(f"{_fmt(path, 'initial_state')}: must be >= 0")
    _check_consumed(tab, path)

    try:
        return ScenarioSpec(
            name=name, label=label, params=params, model_level=model_level,
            comb=comb, initial_state=initial, duration_us=duration,
            sample_dt_us=sample_dt, dt_us=dt, cavity_dim=cavity_dim,
            resonator_dim=resonator_dim, channels=channels,
            calibration=calibration, outputs=outputs,
            stop_when_stationary=stop, subtraction_comb=sub,
            comb_set=comb_set)
    except DomainError as exc:
        raise SchemaError(f"{path}: {exc}") from exc


def parse_config(raw: dict) -> Config:
    if not isinstance(raw, dict):
        raise SchemaError("config root must be a table")
    tab = dict(raw)
    params = _parse_system(_take(tab, "system", "", "table"), "system")
    cal_tab = _take(tab, "calibration", "", "table", default=None)
    calibration = _parse_calibration(cal_tab, "calibration") \
        if cal_tab is not None else None
    root_comb_tab = _take(tab, "comb", "", "table", default=None)
    root_comb = _parse_comb(root_comb_tab, "comb") \
        if root_comb_tab is not None else None
    scen_list = _take(tab, "scenario", "", "list")
    _check_consumed(tab, "")
    if not scen_list:
        raise SchemaError("scenario: at least one scenario is required")
    specs = []
    for idx, item in enumerate(scen_list):
        spath = f"scenario.{idx}"
        if not isinstance(item, dict):
            raise SchemaError(f"{spath}: expected a table")
        specs.append(_parse_scenario(item, spath, idx, params, calibration,
                                     root_comb))
    labels = [s.label for s in specs]
    dupes = sorted({l for l in labels if labels.count(l) > 1})
    if dupes:
        raise SchemaError(f"scenario labels must be unique, repeated: "
                          f"{', '.join(dupes)}")
    return Config(params=params, calibration=calibration,
                  scenarios=tuple(specs))


# ------------------------------------------------------------- overrides

def parse_override_value(text: str):
    """Value half of a path=value override, read with TOML scalar rules.

    Bare words that TOML rejects (strings without quotes) fall back to the
    literal text, so --override scenario.0.label=run7 works unquoted.
    """
    try:
        return tomllib.loads(f"v = {text}")["v"]
    except tomllib.TOMLDecodeError:
        return text


def apply_overrides(raw: dict, assignments) -> dict:
    out = copy.deepcopy(raw)
    for entry in assignments:
        if "=" not in entry:
            raise SchemaError(f"override {entry!r} must look like path=value")
        dotted, _, text = entry.partition("=")
        keys = dotted.strip().split(".")
        if not all(keys):
            raise SchemaError(f"override path {dotted!r} has an empty segment")
        node = out
        for seg in keys[:-1]:
            node = _descend(node, seg, dotted)
        last = keys[-1]
        value = parse_override_value(text.strip())
        if isinstance(node, list):
            idx = _as_index(last, node, dotted)
            node[idx] = value
        else:
            node[last] = value
    return out


def _as_index(seg: str, node: list, dotted: str) -> int:
    try:
        idx = int(seg)
    except ValueError:
        raise SchemaError(f"override {dotted!r}: {seg!r} must be an integer "
                          "index into an array") from None
    if not -len(node) <= idx < len(node):
        raise SchemaError(f"override {dotted!r}: index {idx} is out of range "
                          f"(array has {len(node)} entries)")
    return idx


def _descend(node, seg: str, dotted: str):
    if isinstance(node, list):
        return node[_as_index(seg, node, dotted)]
    if isinstance(node, dict):
        if seg not in node:
            node[seg] = {}
        child = node[seg]
        if not isinstance(child, (dict, list)):
            raise SchemaError(f"override {dotted!r}: {seg!r} holds a scalar, "
                              "cannot descend into it")
        return child
    raise SchemaError(f"override {dotted!r}: cannot descend into "
                      f"{type(node).__name__}")


# --------------------------------------------------------------- loading

def read_config_bytes(source: str) -> tuple[str, bytes]:
    """Resolve a path or bundled preset name to (display name, raw bytes)."""
    p = Path(source)
    if p.is_file():
        return str(p), p.read_bytes()
    base = source[:-5] if source.endswith(".toml") else source
    if base in PRESETS:
        from importlib import resources
        ref = resources.files("fockstab.presets").joinpath(f"{base}.toml")
        return f"preset:{base}", ref.read_bytes()
    raise SchemaError(f"config {source!r}: not a file and not a bundled "
                      f"preset (available: {', '.join(PRESETS)})")


def load_config(source: str, overrides=()) -> tuple[Config, str, bytes]:
    name, data = read_config_bytes(source)
    try:
        raw = tomllib.loads(data.decode("utf-8"))
    except tomllib.TOMLDecodeError as exc:
        raise SchemaError(f"config {name}: {exc}") from exc
    raw = apply_overrides(raw, overrides)
    return parse_config(raw), name, data
