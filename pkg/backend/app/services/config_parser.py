"""
Experiment config parsing: flat `key = value` text (with `#` comments) or a
JSON object, plus CLI overrides on top. Every failure is a ConfigError naming
the key and, for text input, the line.
"""
import json
import logging
import math
from typing import Any, Dict, Mapping, Optional, Tuple

from pydantic import ValidationError

from app.core.errors import ConfigError
from app.schemas.driven_mode import DrivenModeConfig
from app.schemas.experiment import ExperimentConfig, ExperimentName, SweepSpec
from app.schemas.fermi import FermiConfig
from app.services.propagators import default_steps

logger = logging.getLogger(__name__)

# config key -> FermiConfig field
FERMI_KEYS = {
    "omega_l": "omega_l",
    "omega_r": "omega_r",
    "z_l": "z_l",
    "z_r": "z_r",
    "dipole_l": "dipole_l",
    "dipole_r": "dipole_r",
    "epsilon0": "epsilon0",
    "c": "c",
    "box_length": "box_length",
    "modes": "modes_per_branch",
    "photon_cutoff": "photon_cutoff",
    "taper": "taper",
}
DRIVEN_KEYS = {"g": "g", "omega": "omega", "n_max": "n_max"}
SHARED_KEYS = {"hbar": "hbar"}
RUN_KEYS = ("experiment", "model", "separation", "t_max", "steps", "propagator", "rwa",
            "method", "points", "sweep", "format", "output")
KNOWN_KEYS = set(FERMI_KEYS) | set(DRIVEN_KEYS) | set(SHARED_KEYS) | set(RUN_KEYS)

FERMI_EXPERIMENTS = {
    ExperimentName.FERMI_ANALYTIC,
    ExperimentName.FERMI_NUMERIC,
    ExperimentName.RWA_COMPARE,
    ExperimentName.KERNEL_SMEAR,
}

# Default outer sweeps when none is given
DEFAULT_SWEEPS = {
    ExperimentName.RWA_COMPARE: SweepSpec(parameter="modes", values=(64, 128, 256)),
    ExperimentName.KERNEL_SMEAR: SweepSpec(parameter="modes", values=(64, 128, 256, 512)),
}
CONVERGENCE_SWEEPS = {
    "fermi": SweepSpec(parameter="modes", values=(64, 128, 256)),
    "driven": SweepSpec(parameter="steps", values=(100, 200, 400, 800)),
}

# t_max in units of R/c (fermi) or of the drive period (driven)
DEFAULT_T_MAX = {
    ExperimentName.FERMI_ANALYTIC: 3.0,
    ExperimentName.FERMI_NUMERIC: 2.0,
    ExperimentName.RWA_COMPARE: 1.0,
    ExperimentName.KERNEL_SMEAR: 1.0,
    ExperimentName.DRIVEN_MODE: 2.0,
}
TRUE_WORDS = {"1", "true", "yes", "on"}
FALSE_WORDS = {"0", "false", "no", "off"}


# -------------------------
# Raw key/value extraction
# -------------------------

def _read_text(text: str) -> Tuple[Dict[str, Any], Dict[str, int]]:
    values: Dict[str, Any] = {}
    lines: Dict[str, int] = {}
    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"expected 'key = value', got '{line}'", line=number)
        key, value = (part.strip() for part in line.split("=", 1))
        key = key.lower().replace("-", "_")
        if not key:
            raise ConfigError("missing key before '='", line=number)
        if key in values:
            raise ConfigError(f"duplicate key (first set on line {lines[key]})", key=key, line=number)
        values[key] = value
        lines[key] = number
    return values, lines


def _read_json(text: str) -> Dict[str, Any]:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigError(f"invalid JSON: {e.msg}", line=e.lineno) from None
    if not isinstance(data, dict):
        raise ConfigError("a JSON config must be an object")
    return {str(k).lower().replace("-", "_"): v for k, v in data.items()}


def _parse_bool(key: str, value: Any, line: Optional[int]) -> bool:
    if isinstance(value, bool):
        return value
    word = str(value).strip().lower()
    if word in TRUE_WORDS:
        return True
    if word in FALSE_WORDS:
        return False
    raise ConfigError(f"expected a boolean, got '{value}'", key=key, line=line)


def _parse_sweep(value: Any, line: Optional[int]) -> SweepSpec:
    """'modes: 64, 128, 256' (or 'modes=...'), or {"parameter": ..., "values": [...]} in JSON."""
    if isinstance(value, Mapping):
        data = dict(value)
    else:
        text = str(value)
        for sep in (":", "="):
            if sep in text:
                name, _, rest = text.partition(sep)
                break
        else:
            raise ConfigError("expected 'parameter: v1, v2, ...'", key="sweep", line=line)
        data = {"parameter": name.strip(), "values": [v for v in rest.replace(";", ",").split(",") if v.strip()]}
    try:
        return SweepSpec.model_validate(data)
    except ValidationError as e:
        raise ConfigError(f"invalid sweep: {e.errors()[0]['msg']}", key="sweep", line=line) from None


# -------------------------
# Assembly
# -------------------------

def _infer_model(experiment: ExperimentName, values: Mapping[str, Any], line_of) -> str:
    explicit = values.get("model")
    if explicit is not None:
        model = str(explicit).strip().lower()
        if model not in ("fermi", "driven"):
            raise ConfigError(f"model must be 'fermi' or 'driven', got '{explicit}'", key="model",
                              line=line_of("model"))
    elif experiment in FERMI_EXPERIMENTS:
        model = "fermi"
    elif experiment is ExperimentName.DRIVEN_MODE:
        model = "driven"
    else:
        fermi_like = set(values) & (set(FERMI_KEYS) | {"separation"})
        model = "fermi" if fermi_like else "driven"
    stray = set(values) & (set(DRIVEN_KEYS) if model == "fermi" else set(FERMI_KEYS) | {"separation"})
    if stray:
        key = sorted(stray)[0]
        raise ConfigError(f"key does not apply to the {model} model", key=key, line=line_of(key))
    return model


def _validation_error(e: ValidationError, reverse: Mapping[str, str], line_of) -> ConfigError:
    first = e.errors()[0]
    field = str(first["loc"][0]) if first["loc"] else None
    key = reverse.get(field, field)
    message = first["msg"].removeprefix("Value error, ")
    return ConfigError(message, key=key, line=line_of(key) if key else None)


def parse_config(text: str, overrides: Optional[Mapping[str, Any]] = None) -> ExperimentConfig:
    """
    Validated ExperimentConfig with every default filled, including t_max,
    steps and the default outer sweep of the experiment.
    """
    stripped = text.lstrip()
    if stripped.startswith("{"):
        values, lines = _read_json(stripped), {}
    else:
        values, lines = _read_text(text)
    for key, value in (overrides or {}).items():
        if value is None:
            continue
        key = key.lower().replace("-", "_")
        values[key] = value
        lines.pop(key, None)

    def line_of(key: Optional[str]) -> Optional[int]:
        return lines.get(key) if key else None

    for key in values:
        if key not in KNOWN_KEYS:
            raise ConfigError("unknown key", key=key, line=line_of(key))

    if "experiment" not in values:
        raise ConfigError("missing experiment name", key="experiment")
    try:
        experiment = ExperimentName(str(values["experiment"]).strip())
    except ValueError:
        names = ", ".join(e.value for e in ExperimentName)
        raise ConfigError(f"unknown experiment '{values['experiment']}'; choose from {names}",
                          key="experiment", line=line_of("experiment")) from None

    model = _infer_model(experiment, values, line_of)
    sweep = _parse_sweep(values["sweep"], line_of("sweep")) if "sweep" in values else None
    if sweep is None:
        if experiment is ExperimentName.CONVERGENCE:
            sweep = CONVERGENCE_SWEEPS[model]
        else:
            sweep = DEFAULT_SWEEPS.get(experiment)

    payload = _build_model(model, values, line_of)
    run = {k: values[k] for k in ("propagator", "method", "points", "format", "output") if k in values}
    if "rwa" in values:
        run["rwa"] = _parse_bool("rwa", values["rwa"], line_of("rwa"))

    defaults = []
    if model == "fermi" and "box_length" not in values:
        defaults.append("box_length")
    t_max = values.get("t_max")
    if t_max is None:
        t_max = _default_t_max(experiment, model, payload)
        defaults.append("t_max")
    steps = values.get("steps")
    if steps is None:
        defaults.append("steps")
        try:
            t_end = float(t_max)
        except (TypeError, ValueError):
            raise ConfigError(f"expected a number, got '{t_max}'", key="t_max", line=line_of("t_max")) from None
        if not t_end > 0:
            raise ConfigError("t_max must be positive", key="t_max", line=line_of("t_max"))
        steps = run_default_steps(experiment, payload, t_end, sweep)

    try:
        config = ExperimentConfig.model_validate({
            "experiment": experiment,
            model: payload,
            "t_max": t_max,
            "steps": steps,
            "sweep": sweep,
            "defaults": tuple(defaults),
            **run,
        })
    except ValidationError as e:
        raise _validation_error(e, {}, line_of) from None
    logger.debug("Parsed config: %s", config.model_dump(mode="json"))
    return config


def _build_model(model: str, values: Mapping[str, Any], line_of):
    keys = {**(FERMI_KEYS if model == "fermi" else DRIVEN_KEYS), **SHARED_KEYS}
    data = {field: values[key] for key, field in keys.items() if key in values}
    schema = FermiConfig if model == "fermi" else DrivenModeConfig
    if model == "fermi" and "separation" in values:
        if "z_r" in values:
            raise ConfigError("give either separation or z_r, not both", key="separation",
                              line=line_of("separation"))
        try:
            z_l = float(data.get("z_l", FermiConfig.model_fields["z_l"].default))
            data["z_r"] = z_l + float(values["separation"])
        except (TypeError, ValueError):
            raise ConfigError(f"expected a number, got '{values['separation']}'", key="separation",
                              line=line_of("separation")) from None
    try:
        return schema.model_validate(data)
    except ValidationError as e:
        reverse = {field: key for key, field in keys.items()}
        raise _validation_error(e, reverse, line_of) from None


def _default_t_max(experiment: ExperimentName, model: str, payload) -> float:
    factor = DEFAULT_T_MAX.get(experiment, 2.0)
    return factor * (payload.light_time if model == "fermi" else payload.period)


def run_default_steps(experiment: ExperimentName, payload, t_max: float, sweep: Optional[SweepSpec] = None) -> int:
    """Grid for the fastest angular frequency any sweep point reaches."""
    if isinstance(payload, DrivenModeConfig):
        omega = payload.omega
        if sweep is not None and sweep.parameter == "omega":
            omega = max(sweep.values)
        return default_steps(t_max, omega)
    if experiment is ExperimentName.FERMI_ANALYTIC:
        return default_steps(t_max, max(payload.omega_l, payload.omega_r))
    fastest = payload.fastest_frequency
    if sweep is not None and sweep.parameter in ("modes", "box_length", "omega_l", "omega_r"):
        for value in sweep.values:
            fastest = max(fastest, _swept_fastest(payload, sweep.parameter, value))
    return default_steps(t_max, fastest)


def _swept_fastest(payload: FermiConfig, parameter: str, value: float) -> float:
    if parameter == "modes":
        ladder_top = payload.mode_spacing * int(value)
        return max(payload.omega_l, payload.omega_r) + ladder_top
    if parameter == "box_length":
        ladder_top = 2 * math.pi * payload.c / value * payload.modes_per_branch
        return max(payload.omega_l, payload.omega_r) + ladder_top
    return max(payload.omega_l, payload.omega_r, value) + payload.mode_ladder[-1]


def config_echo(config: ExperimentConfig) -> Dict[str, Any]:
    """Fully defaulted config as plain JSON-compatible values."""
    return config.model_dump(mode="json", exclude_none=True)
