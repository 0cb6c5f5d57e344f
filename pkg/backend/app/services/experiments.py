"""
Experiment runners. Each takes a parsed ExperimentConfig and returns a
RunResult whose rows are ordered by outer sweep value, then time.
"""
import logging
from typing import Callable, Dict, List, NamedTuple, Tuple, Union

import numpy as np
from pydantic import ValidationError

from app.core.config import M2_CONVENTION, VERSION
from app.core.errors import ConfigError
from app.schemas.driven_mode import DrivenModeConfig
from app.schemas.experiment import ExperimentConfig, ExperimentName, RunResult
from app.schemas.fermi import FermiConfig
from app.schemas.propagation import thin_indices
from app.services.config_parser import FERMI_KEYS, config_echo, run_default_steps
from app.services.driven_mode import (
    CLOSED_FORMS,
    driven_potential,
    guarded_indices,
    magnus_closed_pieces,
    magnus_exponential_closed,
    tdpt2_closed,
    vacuum_defect,
    vacuum_overlap,
)
from app.services.fermi import (
    amplitude_analytic,
    amplitude_analytic_series,
    amplitude_numeric,
    causality_leakage,
    light_cone_safe_grid,
    smeared_kernel,
)
from app.services.operators import restrict
from app.services.propagators import dyson2_propagator, magnus2_pieces, stepping_propagator, time_grid

logger = logging.getLogger(__name__)

Model = Union[FermiConfig, DrivenModeConfig]
INTEGER_SWEEPS = {"modes", "photon_cutoff", "n_max", "steps"}


# -------------------------
# Helpers
# -------------------------

class SweepPoint(NamedTuple):
    value: Union[int, float, None]
    payload: Model
    steps: int
    t_max: float


def sweep_points(config: ExperimentConfig) -> List[SweepPoint]:
    """
    One point per outer sweep value; a single point without a sweep. A
    separation sweep re-derives whatever the parser defaulted from R:
    box_length (8R), t_max (same multiple of R/c) and steps.
    """
    payload = config.fermi if config.fermi is not None else config.driven
    if config.sweep is None:
        return [SweepPoint(None, payload, config.steps, config.t_max)]
    points = []
    name = config.sweep.parameter
    for raw in config.sweep.values:
        value = int(raw) if name in INTEGER_SWEEPS else float(raw)
        if name == "steps":
            points.append(SweepPoint(value, payload, value, config.t_max))
            continue
        data = payload.model_dump()
        if name == "separation":
            data["z_r"] = data["z_l"] + value
            if "box_length" in config.defaults:
                data["box_length"] = None
        else:
            data[FERMI_KEYS.get(name, name) if config.fermi is not None else name] = value
        try:
            point = type(payload).model_validate(data)
        except ValidationError as e:
            raise ConfigError(f"sweep value {value}: {e.errors()[0]['msg']}", key="sweep") from None
        t_max, steps = config.t_max, config.steps
        if name == "separation":
            if "t_max" in config.defaults:
                t_max = config.t_max * point.light_time / payload.light_time
            if "steps" in config.defaults:
                steps = run_default_steps(config.experiment, point, t_max)
        points.append(SweepPoint(value, point, steps, t_max))
    return points


def _sweep_column(config: ExperimentConfig) -> str:
    return config.sweep.parameter if config.sweep is not None else "modes"


def _sweep_label(value, payload: Model):
    """Outer column value; the payload's mode count when nothing is swept."""
    return value if value is not None else payload.modes_per_branch


def _metadata(config: ExperimentConfig) -> Dict[str, object]:
    return {
        "experiment": config.experiment.value,
        "model": config.model,
        "config": config_echo(config),
        "convention": M2_CONVENTION,
        "version": VERSION,
    }


def _complex_cells(z: complex) -> Tuple[float, float, float]:
    return float(z.real), float(z.imag), float(abs(z))


def _thinned(series, points):
    thin = series.thinned(points)
    return thin.times, thin.amplitudes


def _guarded_error(a, b, indices) -> float:
    return float(np.linalg.norm(restrict(a, indices) - restrict(b, indices), 2))


def _vacuum_column_error(a, b) -> float:
    """||(a - b)|0>||; the truncated top row feeds back into larger Fock states first."""
    return float(np.linalg.norm(a.entries[:, 0] - b.entries[:, 0]))


# -------------------------
# Fermi experiments
# -------------------------

def run_fermi_analytic(config: ExperimentConfig) -> RunResult:
    grid = light_cone_safe_grid(config.fermi, config.t_max, config.steps)
    series = amplitude_analytic_series(config.fermi, grid).thinned(config.points)
    rows = [(float(t), *_complex_cells(a)) for t, a in zip(series.times, series.amplitudes)]
    return RunResult(columns=("t", "re", "im", "abs"), rows=rows, metadata=_metadata(config))


def run_fermi_numeric(config: ExperimentConfig) -> RunResult:
    column = _sweep_column(config)
    rows = []
    for value, fermi, steps, t_max in sweep_points(config):
        grid = light_cone_safe_grid(fermi, t_max, steps)
        logger.info("fermi-numeric: %s=%s, %d steps", column, _sweep_label(value, fermi), steps)
        series = amplitude_numeric(fermi, grid, config.propagator, config.rwa, config.method)
        leakage = causality_leakage(series, fermi)
        label = _sweep_label(value, fermi)
        for t, a in zip(*_thinned(series, config.points)):
            rows.append((label, float(t), *_complex_cells(a), leakage))
    return RunResult(columns=(column, "t", "re", "im", "abs", "leakage"), rows=rows, metadata=_metadata(config))


def run_rwa_compare(config: ExperimentConfig) -> RunResult:
    column = _sweep_column(config)
    rows = []
    for value, fermi, steps, t_max in sweep_points(config):
        grid = light_cone_safe_grid(fermi, t_max, steps)
        logger.info("rwa-compare: %s=%s, %d steps", column, _sweep_label(value, fermi), steps)
        full = causality_leakage(amplitude_numeric(fermi, grid, config.propagator, False, config.method), fermi)
        rwa = causality_leakage(amplitude_numeric(fermi, grid, config.propagator, True, config.method), fermi)
        ratio = rwa / full if full > 0 else float("nan")
        rows.append((_sweep_label(value, fermi), full, rwa, ratio))
    return RunResult(columns=(column, "leakage_full", "leakage_rwa", "ratio"), rows=rows,
                     metadata=_metadata(config))


def run_kernel_smear(config: ExperimentConfig) -> RunResult:
    column = _sweep_column(config)
    rows = []
    for value, fermi, _, _ in sweep_points(config):
        logger.info("kernel-smear: %s=%s", column, _sweep_label(value, fermi))
        parts = smeared_kernel(fermi)
        rows.append((_sweep_label(value, fermi), abs(parts["full"]), abs(parts["co"]),
                     abs(parts["counter"]), abs(parts["co"])))
    return RunResult(columns=(column, "full", "co", "counter", "rwa"), rows=rows, metadata=_metadata(config))


# -------------------------
# Driven mode
# -------------------------

def run_driven_mode(config: ExperimentConfig) -> RunResult:
    driven = config.driven
    grid = time_grid(config.t_max, config.steps)
    times = grid.nodes[thin_indices(grid.steps + 1, config.points)]
    columns = ["t", "omega_t"]
    for kind in CLOSED_FORMS:
        columns += [f"{kind}_vacuum_abs", f"{kind}_defect"]
    rows = []
    for t in times:
        row = [float(t), float(driven.omega * t)]
        for propagator in CLOSED_FORMS.values():
            U = propagator(driven, t)
            row += [abs(vacuum_overlap(U)), vacuum_defect(U)]
        rows.append(tuple(row))
    return RunResult(columns=tuple(columns), rows=rows, metadata=_metadata(config))


# -------------------------
# Convergence
# -------------------------

def _driven_convergence(config: ExperimentConfig) -> List[tuple]:
    """Quadrature propagators against their closed forms at t_max, per grid or model setting."""
    rows = []
    parameter = _sweep_column(config)
    for value, driven, steps, t in sweep_points(config):
        label = value if value is not None else steps
        grid = time_grid(t, steps)
        V = driven_potential(driven)
        guard = guarded_indices(driven)
        closed = magnus_closed_pieces(driven, t)
        pieces = magnus2_pieces(V, grid, driven.hbar)
        rows += [
            ("magnus-m1", parameter, label, _guarded_error(pieces.M1, closed.M1, guard)),
            ("magnus-m2", parameter, label, _guarded_error(pieces.M2, closed.M2, guard)),
            ("dyson2", parameter, label, (dyson2_propagator(V, grid, driven.hbar) - tdpt2_closed(driven, t)).norm()),
            ("step-oracle", parameter, label, _vacuum_column_error(
                stepping_propagator(V, grid, driven.hbar), magnus_exponential_closed(driven, t))),
        ]
        logger.info("convergence: %s=%s done", parameter, label)
    return rows


def _fermi_convergence(config: ExperimentConfig) -> List[tuple]:
    """Pre-cone leakage and the relative error against the closed form at t_max, per mode count."""
    rows = []
    parameter = _sweep_column(config)
    for value, fermi, steps, t_max in sweep_points(config):
        label = _sweep_label(value, fermi)
        grid = light_cone_safe_grid(fermi, t_max, steps)
        series = amplitude_numeric(fermi, grid, config.propagator, config.rwa, config.method)
        rows.append(("leakage", parameter, label, causality_leakage(series, fermi)))
        t_end = float(series.times[-1])
        if t_end > fermi.light_time:
            reference = amplitude_analytic(fermi, t_end)
            error = abs(series.amplitudes[-1] - reference) / abs(reference)
            rows.append(("analytic", parameter, label, float(error)))
        logger.info("convergence: %s=%s done", parameter, label)
    return rows


def run_convergence(config: ExperimentConfig) -> RunResult:
    rows = _fermi_convergence(config) if config.fermi is not None else _driven_convergence(config)
    return RunResult(columns=("study", "parameter", "value", "error"), rows=rows, metadata=_metadata(config))


DRIVEN_ONLY = "driven"
FERMI_ONLY = {
    ExperimentName.FERMI_ANALYTIC: "fermi",
    ExperimentName.FERMI_NUMERIC: "fermi",
    ExperimentName.RWA_COMPARE: "fermi",
    ExperimentName.KERNEL_SMEAR: "fermi",
}

EXPERIMENTS: Dict[ExperimentName, Callable[[ExperimentConfig], RunResult]] = {
    ExperimentName.FERMI_ANALYTIC: run_fermi_analytic,
    ExperimentName.FERMI_NUMERIC: run_fermi_numeric,
    ExperimentName.RWA_COMPARE: run_rwa_compare,
    ExperimentName.DRIVEN_MODE: run_driven_mode,
    ExperimentName.CONVERGENCE: run_convergence,
    ExperimentName.KERNEL_SMEAR: run_kernel_smear,
}


def run_experiment(config: ExperimentConfig) -> RunResult:
    runner = EXPERIMENTS[config.experiment]
    needed = DRIVEN_ONLY if config.experiment is ExperimentName.DRIVEN_MODE else FERMI_ONLY.get(config.experiment)
    if needed is not None and needed != config.model:
        raise ConfigError(f"{config.experiment.value} needs the {needed} model payload", key="model")
    logger.info("Running %s (%s model)", config.experiment.value, config.model)
    result = runner(config)
    logger.info("%s: %d rows", config.experiment.value, len(result.rows))
    return result
