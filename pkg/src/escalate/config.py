"""Study/design configuration: JSON parsing, validation and echoing.

A design payload fully describes one `DoseEscalationDesign`; a study config
adds scenarios, replication count, seed and output locations.  Validation
errors name the offending field path (``designs[2].criterion.a``) and
unknown keys are rejected so typos cannot silently change a study.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from .criteria import CRITERION_KINDS, TargetConfig
from .designs import DoseEscalationDesign
from .models import PowerModel, Skeleton, TwoParamLogisticModel, calibrate_skeleton
from .simulate import ScenarioSpec

DATA_DIR = resources.files("escalate") / "data"

DESIGN_DEFAULTS = {
    "cohort_size": 3,
    "max_patients": 30,
    "no_skip": True,
    "start_dose": 1,
    "grid_nodes": None,
}
MODEL_DEFAULTS = {
    "power": {"prior_mean": 0.0, "prior_var": 1.34, "slope_scale": 1.0},
    "logistic2": {"prior_mean": [0.0, 0.0], "prior_cov": [[1.34, 0.0], [0.0, 1.0]], "log_slope": True},
}


class ConfigError(ValueError):
    """A configuration document failed validation."""


def _require_mapping(obj, where):
    if not isinstance(obj, dict):
        raise ConfigError(f"{where} must be a JSON object; got {type(obj).__name__}")
    return obj


def _check_keys(obj, where, required, optional=()):
    _require_mapping(obj, where)
    unknown = set(obj) - set(required) - set(optional)
    if unknown:
        raise ConfigError(f"{where} has unknown key(s): {', '.join(sorted(unknown))}")
    missing = set(required) - set(obj)
    if missing:
        raise ConfigError(f"{where} is missing required key(s): {', '.join(sorted(missing))}")


def _parse_model(payload, where):
    if payload is None:
        payload = {"kind": "power"}
    _require_mapping(payload, where)
    kind = payload.get("kind")
    if kind == "power":
        _check_keys(payload, where, required=("kind",), optional=tuple(MODEL_DEFAULTS["power"]))
        merged = {**MODEL_DEFAULTS["power"], **{k: v for k, v in payload.items() if k != "kind"}}
        return PowerModel(**merged)
    if kind == "logistic2":
        _check_keys(payload, where, required=("kind",), optional=tuple(MODEL_DEFAULTS["logistic2"]))
        merged = {**MODEL_DEFAULTS["logistic2"], **{k: v for k, v in payload.items() if k != "kind"}}
        return TwoParamLogisticModel(
            prior_mean=tuple(merged["prior_mean"]),
            prior_cov=tuple(tuple(row) for row in merged["prior_cov"]),
            log_slope=merged["log_slope"],
        )
    raise ConfigError(f"{where}.kind must be 'power' or 'logistic2'; got {kind!r}")


def _parse_criterion(payload, where, gamma):
    if payload is None:
        payload = {"kind": "sq-distance"}
    _require_mapping(payload, where)
    kind = payload.get("kind")
    if kind not in CRITERION_KINDS:
        raise ConfigError(f"{where}.kind must be one of {sorted(CRITERION_KINDS)}; got {kind!r}")
    params = {k: v for k, v in payload.items() if k != "kind"}
    if kind == "cibp":
        theta = params.pop("theta", None)
        if theta is not None and "a" not in params:
            params["a"] = TargetConfig.from_halfwidth(gamma, theta).a
        elif theta is not None:
            TargetConfig(gamma=gamma, a=params["a"], theta=theta)  # consistency check
    if kind == "blrm-loss" and "table" in params:
        params["table"] = tuple(tuple(row) for row in params["table"])
    cls = CRITERION_KINDS[kind]
    try:
        criterion = cls(**params)
    except TypeError as exc:
        raise ConfigError(f"{where}: invalid parameter(s) for criterion {kind!r}: {exc}") from exc
    return criterion


def _parse_skeleton(payload, where, gamma):
    if isinstance(payload, (list, tuple)):
        values = tuple(float(v) for v in payload)
        prior_mtd = min(range(len(values)), key=lambda i: (abs(values[i] - gamma), i)) + 1
        return Skeleton(values=values, prior_mtd_index=prior_mtd)
    _check_keys(payload, where, required=("n_doses", "prior_mtd", "halfwidth"), optional=("gamma",))
    return calibrate_skeleton(
        payload["n_doses"], payload["prior_mtd"], payload.get("gamma", gamma), payload["halfwidth"]
    )


def parse_design(payload, where="design"):
    """Build a named ``DoseEscalationDesign`` from a JSON payload."""
    _check_keys(
        payload,
        where,
        required=("gamma", "skeleton"),
        optional=("name", "model", "criterion") + tuple(DESIGN_DEFAULTS),
    )
    gamma = payload["gamma"]
    if not isinstance(gamma, (int, float)) or not 0.0 < gamma < 0.5:
        raise ConfigError(f"{where}.gamma must be a number in (0, 0.5); got {gamma!r}")
    try:
        skeleton = _parse_skeleton(payload["skeleton"], f"{where}.skeleton", gamma)
        model = _parse_model(payload.get("model"), f"{where}.model")
        criterion = _parse_criterion(payload.get("criterion"), f"{where}.criterion", gamma)
        design = DoseEscalationDesign(
            skeleton=skeleton,
            gamma=float(gamma),
            model=model,
            criterion=criterion,
            **{k: payload.get(k, v) for k, v in DESIGN_DEFAULTS.items()},
        )
        design.fit()  # validates everything eagerly
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(f"{where}: {exc}") from exc
    name = payload.get("name") or f"{criterion.kind}"
    return name, design


def resolved_design_dict(name, design):
    """Fully resolved design payload with every default made explicit."""
    model = design.model_
    if isinstance(model, PowerModel):
        model_dict = {
            "kind": "power",
            "prior_mean": model.prior_mean,
            "prior_var": model.prior_var,
            "slope_scale": model.slope_scale,
        }
    else:
        model_dict = {
            "kind": "logistic2",
            "prior_mean": list(model.prior_mean),
            "prior_cov": [list(row) for row in model.prior_cov],
            "log_slope": model.log_slope,
        }
    criterion = design.criterion_
    crit_dict = {"kind": criterion.kind}
    for key, value in criterion.get_params().items():
        crit_dict[key] = list(map(list, value)) if key == "table" else value
    return {
        "name": name,
        "gamma": design.gamma,
        "skeleton": list(design.skeleton_.values),
        "model": model_dict,
        "criterion": crit_dict,
        "cohort_size": design.cohort_size,
        "max_patients": design.max_patients,
        "no_skip": design.no_skip,
        "start_dose": design.start_dose,
        "grid_nodes": design.grid_nodes,
    }


def parse_scenarios(payload, where, base_dir):
    if isinstance(payload, dict):
        _check_keys(payload, where, required=("file",))
        path = Path(base_dir) / payload["file"]
        if not path.exists():
            raise ConfigError(f"{where}.file: no such file {str(path)!r}")
        doc = json.loads(path.read_text())
        _check_keys(doc, f"{where}.file contents", required=("scenarios",))
        payload = doc["scenarios"]
    if not isinstance(payload, list) or not payload:
        raise ConfigError(f"{where} must be a non-empty list of scenarios or a file reference")
    out = []
    for i, entry in enumerate(payload):
        sub = f"{where}[{i}]"
        _check_keys(entry, sub, required=("name", "true_tox", "mtd_index"))
        try:
            out.append(
                ScenarioSpec(name=entry["name"], true_tox=tuple(entry["true_tox"]), mtd_index=entry["mtd_index"])
            )
        except ValueError as exc:
            raise ConfigError(f"{sub}: {exc}") from exc
    return out


@dataclass
class StudyConfig:
    designs: list  # (name, DoseEscalationDesign)
    scenarios: list
    reps: int
    seed: int
    parallelism: int | None
    output_prefix: str
    source: dict

    def resolved_dict(self):
        return {
            "designs": [resolved_design_dict(name, d) for name, d in self.designs],
            "scenarios": [
                {"name": s.name, "true_tox": list(s.true_tox), "mtd_index": s.mtd_index} for s in self.scenarios
            ],
            "reps": self.reps,
            "seed": self.seed,
            "parallelism": self.parallelism,
            "output_prefix": self.output_prefix,
        }


def parse_config_dict(doc, base_dir="."):
    _check_keys(
        doc, "config", required=("designs", "scenarios", "reps", "seed"), optional=("parallelism", "output_prefix")
    )
    if not isinstance(doc["designs"], list) or not doc["designs"]:
        raise ConfigError("config.designs must be a non-empty list")
    designs = [parse_design(d, f"designs[{i}]") for i, d in enumerate(doc["designs"])]
    scenarios = parse_scenarios(doc["scenarios"], "scenarios", base_dir)
    for i, (name, design) in enumerate(designs):
        for j, scenario in enumerate(scenarios):
            if design.n_doses_ != len(scenario.true_tox):
                raise ConfigError(
                    f"designs[{i}].skeleton has {design.n_doses_} doses but "
                    f"scenarios[{j}].true_tox has {len(scenario.true_tox)}"
                )
    reps = doc["reps"]
    if not isinstance(reps, int) or reps < 1:
        raise ConfigError(f"config.reps must be a positive integer; got {reps!r}")
    seed = doc["seed"]
    if not isinstance(seed, int) or seed < 0:
        raise ConfigError(f"config.seed must be a non-negative integer; got {seed!r}")
    parallelism = doc.get("parallelism")
    if parallelism is not None and (not isinstance(parallelism, int) or parallelism < 1):
        raise ConfigError(f"config.parallelism must be a positive integer or null; got {parallelism!r}")
    return StudyConfig(
        designs=designs,
        scenarios=scenarios,
        reps=reps,
        seed=seed,
        parallelism=parallelism,
        output_prefix=doc.get("output_prefix", "study"),
        source=doc,
    )


def parse_config(path):
    """Parse and fully validate a study configuration file."""
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"no such config file: {str(path)!r}")
    try:
        doc = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from exc
    return parse_config_dict(doc, base_dir=path.parent)


def load_preset_design(name):
    """Load a design payload shipped with the package (e.g. 'everolimus-cibp')."""
    path = DATA_DIR / f"{name}.json"
    try:
        doc = json.loads(path.read_text())
    except FileNotFoundError:
        raise ConfigError(f"no shipped preset named {name!r}") from None
    return parse_design(doc, where=f"preset {name!r}")


def preset_path(name):
    return Path(str(DATA_DIR / f"{name}.json"))
