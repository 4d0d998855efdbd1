import json
from pathlib import Path

import jsonschema
import pytest

from escalate.config import (
    ConfigError,
    load_preset_design,
    parse_config,
    parse_config_dict,
    parse_design,
    preset_path,
    resolved_design_dict,
)
from escalate.criteria import Cibp, calibrate_asymmetry
from escalate.models import TwoParamLogisticModel

SCHEMA = json.loads((Path(__file__).parent.parent / "docs" / "config.schema.json").read_text())

MINIMAL = {
    "designs": [{"name": "d", "gamma": 0.25, "skeleton": [0.16, 0.25, 0.35]}],
    "scenarios": [{"name": "s", "true_tox": [0.1, 0.25, 0.4], "mtd_index": 2}],
    "reps": 5,
    "seed": 1,
}


def test_minimal_config_fills_defaults():
    cfg = parse_config_dict(json.loads(json.dumps(MINIMAL)))
    name, design = cfg.designs[0]
    assert name == "d"
    assert design.cohort_size == 3
    assert design.max_patients == 30
    assert design.no_skip is True
    assert design.start_dose == 1
    assert design.model_.prior_var == 1.34
    assert design.criterion_.kind == "sq-distance"
    echoed = cfg.resolved_dict()["designs"][0]
    assert echoed["model"]["prior_var"] == 1.34
    assert echoed["cohort_size"] == 3
    assert echoed["no_skip"] is True
    assert echoed["start_dose"] == 1


def test_mismatched_dose_counts_names_both_fields():
    doc = json.loads(json.dumps(MINIMAL))
    doc["scenarios"][0]["true_tox"] = [0.1, 0.2, 0.3, 0.4]
    with pytest.raises(ConfigError, match=r"designs\[0\].skeleton.*scenarios\[0\].true_tox"):
        parse_config_dict(doc)


def test_unknown_keys_rejected_at_every_level():
    doc = json.loads(json.dumps(MINIMAL))
    doc["unexpected"] = 1
    with pytest.raises(ConfigError, match="unexpected"):
        parse_config_dict(doc)
    doc = json.loads(json.dumps(MINIMAL))
    doc["designs"][0]["typo_key"] = 1
    with pytest.raises(ConfigError, match=r"designs\[0\].*typo_key"):
        parse_config_dict(doc)


def test_bad_criterion_kind_rejected():
    doc = json.loads(json.dumps(MINIMAL))
    doc["designs"][0]["criterion"] = {"kind": "nonsense"}
    with pytest.raises(ConfigError, match="criterion.kind"):
        parse_config_dict(doc)


def test_scenario_errors_carry_paths():
    doc = json.loads(json.dumps(MINIMAL))
    doc["scenarios"][0]["mtd_index"] = 9
    with pytest.raises(ConfigError, match=r"scenarios\[0\]"):
        parse_config_dict(doc)


def test_roundtrip_parse_serialize_parse():
    cfg = parse_config_dict(json.loads(json.dumps(MINIMAL)))
    resolved = cfg.resolved_dict()
    # the resolved echo omits file indirections and sets every default, so
    # parsing it again must reproduce itself exactly
    doc = {k: resolved[k] for k in ("designs", "scenarios", "reps", "seed", "parallelism", "output_prefix")}
    cfg2 = parse_config_dict(doc)
    assert cfg2.resolved_dict() == resolved


def test_calibrated_skeleton_block():
    doc = json.loads(json.dumps(MINIMAL))
    doc["designs"][0]["skeleton"] = {"n_doses": 3, "prior_mtd": 2, "halfwidth": 0.05}
    cfg = parse_config_dict(doc)
    _, design = cfg.designs[0]
    assert design.skeleton_.values[1] == 0.25


def test_cibp_theta_derives_asymmetry():
    doc = json.loads(json.dumps(MINIMAL))
    doc["designs"][0]["criterion"] = {"kind": "cibp", "theta": 0.2}
    cfg = parse_config_dict(doc)
    _, design = cfg.designs[0]
    assert isinstance(design.criterion_, Cibp)
    assert design.criterion_.a == pytest.approx(calibrate_asymmetry(0.25, 0.2))


def test_cibp_inconsistent_theta_and_a_rejected():
    doc = json.loads(json.dumps(MINIMAL))
    doc["designs"][0]["criterion"] = {"kind": "cibp", "a": 0.45, "theta": 0.2}
    with pytest.raises(ConfigError):
        parse_config_dict(doc)


def test_logistic_model_block():
    doc = json.loads(json.dumps(MINIMAL))
    doc["designs"][0]["model"] = {"kind": "logistic2"}
    doc["designs"][0]["grid_nodes"] = 41
    cfg = parse_config_dict(doc)
    _, design = cfg.designs[0]
    assert isinstance(design.model_, TwoParamLogisticModel)


def test_shipped_benchmark_config_parses():
    cfg = parse_config(preset_path("crm_cibp_benchmark"))
    assert [name for name, _ in cfg.designs] == ["CRM", "CIBP(0.3)", "CIBP(0.4)", "CIBP(0.5)"]
    assert len(cfg.scenarios) == 6
    assert cfg.reps == 4000
    for _, design in cfg.designs:
        assert design.n_doses_ == 6
        assert design.gamma == 0.25
        assert design.cohort_size == 1
        assert design.no_skip is True


def test_shipped_presets_parse():
    for preset in ("everolimus-cibp", "everolimus-crm"):
        name, design = load_preset_design(preset)
        assert design.n_doses_ == 3
        assert design.gamma == 0.3
        assert design.no_skip is True


def test_unknown_preset_rejected():
    with pytest.raises(ConfigError, match="preset"):
        load_preset_design("never-heard-of-it")


def test_missing_config_file():
    with pytest.raises(ConfigError, match="no such config"):
        parse_config("does/not/exist.json")


def test_resolved_design_dict_is_reparsable():
    name, design = load_preset_design("everolimus-cibp")
    resolved = resolved_design_dict(name, design)
    name2, design2 = parse_design(resolved)
    assert resolved_design_dict(name2, design2) == resolved


def test_shipped_documents_validate_against_published_schema():
    jsonschema.validate(json.loads(preset_path("crm_cibp_benchmark").read_text()), SCHEMA)
    minimal = json.loads(json.dumps(MINIMAL))
    jsonschema.validate(minimal, SCHEMA)
    design_schema = {"$defs": SCHEMA["$defs"], **SCHEMA["$defs"]["design"]}
    for preset in ("everolimus-cibp", "everolimus-crm"):
        jsonschema.validate(json.loads(preset_path(preset).read_text()), design_schema)
