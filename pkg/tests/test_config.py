import pytest

from fockstab.config import (PRESETS, apply_overrides, load_config,
                             parse_config, parse_override_value,
                             read_config_bytes)
from fockstab.numerics import SchemaError
from helpers import DEVICE

SYSTEM = dict(DEVICE)


def base_raw(**scenario_keys):
    scenario = {
        "name": "stabilize", "label": "s1", "duration_us": 5.0,
        "comb": {"tones": [{"i": 0, "omega_khz": 86.0, "j_khz": 400.0}]},
    }
    scenario.update(scenario_keys)
    return {"system": dict(SYSTEM), "scenario": [scenario]}


def expect_schema_error(raw, fragment):
    with pytest.raises(SchemaError, match=fragment):
        parse_config(raw)


# ------------------------------------------------------------------ presets

def test_presets_parse():
    cfg, name, _ = load_config("paper_tables")
    assert name == "preset:paper_tables"
    assert len(cfg.scenarios) == 1
    assert cfg.scenarios[0].name == "rate-analytics"
    assert cfg.scenarios[0].model_level == "rate"

    cfg, _, _ = load_config("fig2")
    assert [s.label for s in cfg.scenarios] \
        == ["stabilize_n1", "stabilize_n2", "stabilize_n3"]
    assert all(s.name == "stabilize" for s in cfg.scenarios)
    assert all(s.model_level == "lindblad-ideal" for s in cfg.scenarios)
    assert all(s.outputs.wigner is not None for s in cfg.scenarios)
    assert cfg.calibration is not None and cfg.calibration.w0 == 0.924

    cfg, _, _ = load_config("fig3")
    assert len(cfg.scenarios) == 6
    assert all(s.name == "protect" for s in cfg.scenarios)
    assert all(s.model_level == "rate" for s in cfg.scenarios)
    targets = [s.initial_state for s in cfg.scenarios]
    assert targets == [1, 2, 3, 2, 3, 3]


def test_preset_name_accepts_toml_suffix():
    name, data = read_config_bytes("fig2.toml")
    assert name == "preset:fig2" and data.startswith(b"#") or len(data) > 0


def test_unknown_source_lists_presets():
    with pytest.raises(SchemaError) as err:
        read_config_bytes("no_such_thing")
    for preset in PRESETS:
        assert preset in str(err.value)


def test_config_file_round_trip(tmp_path):
    p = tmp_path / "run.toml"
    lines = ["[system]"]
    lines += [f"{k} = {v}" for k, v in SYSTEM.items()]
    lines += ["[[scenario]]", 'name = "rate-analytics"', 'label = "t"']
    p.write_text("\n".join(lines) + "\n")
    cfg, name, data = load_config(str(p))
    assert name == str(p)
    assert data == p.read_bytes()
    assert cfg.scenarios[0].name == "rate-analytics"


def test_broken_toml_reports_schema_error(tmp_path):
    p = tmp_path / "bad.toml"
    p.write_text("[system\n")
    with pytest.raises(SchemaError, match="bad.toml"):
        load_config(str(p))


# ------------------------------------------------------------- strict keys

def test_unknown_keys_carry_dotted_paths():
    raw = base_raw()
    raw["extra"] = 1
    expect_schema_error(raw, "unknown key\\(s\\): extra")

    raw = base_raw()
    raw["system"]["kappa_x_khz"] = 1.0
    expect_schema_error(raw, "system.kappa_x_khz")

    raw = base_raw(frobnicate=True)
    expect_schema_error(raw, "scenario.0.frobnicate")

    raw = base_raw()
    raw["scenario"][0]["comb"]["tones"][0]["omega"] = 3.0
    expect_schema_error(raw, "scenario.0.comb.tones.0.omega")

    raw = base_raw(outputs={"wigner": {"alpha": 2.0}})
    expect_schema_error(raw, "scenario.0.outputs.wigner.alpha")


def test_type_and_choice_errors():
    raw = base_raw()
    raw["system"]["kappa_c_khz"] = "3.1"
    expect_schema_error(raw, "system.kappa_c_khz: expected a number")

    raw = base_raw()
    raw["system"]["kappa_c_khz"] = True        # bools are not numbers here
    expect_schema_error(raw, "system.kappa_c_khz: expected a number")

    expect_schema_error(base_raw(cavity_dim=2.5),
                        "scenario.0.cavity_dim: expected an integer")
    expect_schema_error(base_raw(name="anneal"), "not one of")
    expect_schema_error(base_raw(model_level="exact"), "not one of")


def test_missing_required_keys():
    expect_schema_error({"scenario": []}, "system: required key is missing")
    raw = base_raw()
    del raw["system"]["kappa_c_khz"]
    expect_schema_error(raw, "system.kappa_c_khz: required")
    raw = base_raw()
    del raw["scenario"][0]["name"]
    expect_schema_error(raw, "scenario.0.name: required")
    raw = base_raw()
    raw["scenario"] = []
    expect_schema_error(raw, "at least one scenario")


def test_domain_violations_report_the_path():
    # duplicate tone levels break a comb invariant during construction
    raw = base_raw()
    raw["scenario"][0]["comb"]["tones"].append(
        {"i": 0, "omega_khz": 87.0, "j_khz": 300.0})
    expect_schema_error(raw, "scenario.0.comb")

    raw = base_raw()
    raw["system"]["qubit_t2_us"] = 60.0        # beyond the 2 T1 ceiling
    expect_schema_error(raw, "system")


def test_scenario_field_validation():
    expect_schema_error(base_raw(duration_us=0.0), "positive duration")
    expect_schema_error(base_raw(sample_dt_us=0.0), "sample_dt_us")
    expect_schema_error(base_raw(dt_us=-1.0), "dt_us")
    expect_schema_error(base_raw(resonator_dim=1), "resonator_dim")
    expect_schema_error(base_raw(initial_state="weird"), "initial_state")
    expect_schema_error(base_raw(initial_state=-1), "initial_state")
    raw = base_raw()
    raw["scenario"].append(dict(raw["scenario"][0]))
    expect_schema_error(raw, "labels must be unique")


def test_rate_analytics_is_rate_only():
    raw = base_raw(name="rate-analytics", model_level="lindblad-ideal")
    del raw["scenario"][0]["comb"]
    del raw["scenario"][0]["duration_us"]
    expect_schema_error(raw, "rate model only")


def test_comb_set_parsing_and_restriction():
    comb_set = [{"label": "a", "target_n": 1,
                 "comb": {"tones": [{"i": 0, "omega_khz": 86.0,
                                     "j_khz": 400.0}]}},
                {"label": "b", "target_n": 2, "comb": {}}]
    raw = base_raw(name="rate-analytics", comb_set=comb_set)
    del raw["scenario"][0]["comb"]
    del raw["scenario"][0]["duration_us"]
    cfg = parse_config(raw)
    got = cfg.scenarios[0].comb_set
    assert [e.label for e in got] == ["a", "b"]
    assert got[1].comb.tones == ()

    raw = base_raw(comb_set=comb_set)
    expect_schema_error(raw, "only rate-analytics")


def test_root_comb_fallback():
    raw = base_raw()
    root_comb = raw["scenario"][0].pop("comb")
    raw["comb"] = root_comb
    cfg = parse_config(raw)
    assert cfg.scenarios[0].comb.tones[0].omega_khz == 86.0


def test_protect_defaults_initial_to_comb_target():
    raw = base_raw(name="protect")
    cfg = parse_config(raw)
    assert cfg.scenarios[0].initial_state == 1
    assert cfg.scenarios[0].model_level == "rate"

    raw = base_raw(name="protect")
    del raw["scenario"][0]["comb"]
    expect_schema_error(raw, "initial_state: required")


def test_reset_defaults():
    raw = base_raw(name="reset", duration_us=10.0)
    cfg = parse_config(raw)
    assert cfg.scenarios[0].initial_state == "logical-zero"
    assert cfg.scenarios[0].model_level == "lindblad-ideal"


# ---------------------------------------------------------------- overrides

def test_override_value_parsing():
    assert parse_override_value("3") == 3
    assert parse_override_value("3.5") == 3.5
    assert parse_override_value("true") is True
    assert parse_override_value('"quoted"') == "quoted"
    assert parse_override_value("run7") == "run7"      # bare-word fallback
    assert parse_override_value("[1, 2]") == [1, 2]


def test_overrides_edit_without_mutating_source():
    raw = base_raw()
    out = apply_overrides(raw, ["scenario.0.duration_us=9.0",
                                "system.kappa_c_khz=4.0",
                                "calibration.w0=0.9"])
    assert out["scenario"][0]["duration_us"] == 9.0
    assert out["system"]["kappa_c_khz"] == 4.0
    assert out["calibration"] == {"w0": 0.9}           # table auto-created
    assert raw["scenario"][0]["duration_us"] == 5.0    # source untouched
    assert "calibration" not in raw


def test_override_list_indexing():
    raw = base_raw()
    out = apply_overrides(
        raw, ["scenario.0.comb.tones.0.omega_khz=90.0"])
    assert out["scenario"][0]["comb"]["tones"][0]["omega_khz"] == 90.0
    out = apply_overrides(raw, ["scenario.-1.label=last"])
    assert out["scenario"][-1]["label"] == "last"


def test_override_error_paths():
    raw = base_raw()
    with pytest.raises(SchemaError, match="path=value"):
        apply_overrides(raw, ["scenario.0.duration_us"])
    with pytest.raises(SchemaError, match="empty segment"):
        apply_overrides(raw, ["scenario..label=x"])
    with pytest.raises(SchemaError, match="out of range"):
        apply_overrides(raw, ["scenario.3.label=x"])
    with pytest.raises(SchemaError, match="integer index"):
        apply_overrides(raw, ["scenario.first.label=x"])
    with pytest.raises(SchemaError, match="scalar"):
        apply_overrides(raw, ["scenario.0.label.deep=x"])


def test_override_induced_unknown_key_fails_validation():
    out = apply_overrides(base_raw(), ["scenario.0.typo=1"])
    expect_schema_error(out, "scenario.0.typo")
