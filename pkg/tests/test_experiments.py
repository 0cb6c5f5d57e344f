import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from app.core.errors import ConfigError
from app.schemas.driven_mode import DrivenModeConfig
from app.schemas.experiment import ExperimentConfig, ExperimentName
from app.schemas.fermi import FermiConfig
from app.services.config_parser import parse_config
from app.services.emitter import emit_csv
from app.services.experiments import EXPERIMENTS, run_experiment, sweep_points


def run(text, **overrides):
    return run_experiment(parse_config(text, overrides))


def column(result, name):
    i = result.columns.index(name)
    return np.array([row[i] for row in result.rows], dtype=float)


def test_every_experiment_has_a_runner():
    assert set(EXPERIMENTS) == set(ExperimentName)


def test_fermi_analytic_is_zero_before_the_cone():
    result = run("experiment = fermi-analytic")
    assert result.columns == ("t", "re", "im", "abs")
    assert len(result.rows) == 201
    t, re, im = column(result, "t"), column(result, "re"), column(result, "im")
    before = t < 1.0
    assert before.any() and (~before).any()
    assert np.all(re[before] == 0) and np.all(im[before] == 0)
    assert np.abs(re[~before] + 1j * im[~before]).max() > 0
    assert result.metadata["experiment"] == "fermi-analytic"
    assert result.metadata["config"]["fermi"]["box_length"] == pytest.approx(8.0)


def test_fermi_numeric_small():
    result = run("experiment = fermi-numeric\nmodes = 8\nsteps = 400")
    assert result.columns == ("modes", "t", "re", "im", "abs", "leakage")
    assert len(result.rows) == 201
    assert set(column(result, "modes")) == {8}
    assert column(result, "abs")[0] == 0
    leakage = column(result, "leakage")
    assert np.all(leakage == leakage[0]) and leakage[0] > 0


def test_fermi_numeric_sweep_orders_rows_by_sweep_value():
    result = run("experiment = fermi-numeric\nsteps = 200\npoints = 11\nsweep = modes: 16, 8")
    modes = column(result, "modes")
    assert list(modes[:11]) == [16] * 11
    assert list(modes[11:]) == [8] * 11
    t = column(result, "t")
    assert np.all(np.diff(t[:11]) > 0)


def test_rwa_compare_rows():
    result = run("experiment = rwa-compare\nsteps = 400\nsweep = modes: 8, 16")
    assert result.columns == ("modes", "leakage_full", "leakage_rwa", "ratio")
    assert [row[0] for row in result.rows] == [8, 16]
    for _, full, rwa, ratio in result.rows:
        assert full > 0 and rwa > 0
        assert ratio == pytest.approx(rwa / full)


def test_kernel_smear_rows():
    result = run("experiment = kernel-smear\nsweep = modes: 8, 16")
    assert result.columns == ("modes", "full", "co", "counter", "rwa")
    for _, full, co, counter, rwa in result.rows:
        assert rwa == co
        assert full <= co + counter + 1e-12


def test_driven_mode_full_period_row(driven):
    result = run("experiment = driven-mode")
    assert len(result.rows) == 201
    omega_t = column(result, "omega_t")
    k = int(np.argmin(np.abs(omega_t - 2 * math.pi)))
    assert omega_t[k] == pytest.approx(2 * math.pi)
    row = dict(zip(result.columns, result.rows[k]))
    assert abs(row["exact_defect"]) <= 1e-10
    assert abs(row["magnus_exponential_defect"]) <= 1e-10
    assert abs(row["magnus_series_defect"]) <= 1e-10
    assert row["exact_vacuum_abs"] == pytest.approx(1.0, abs=1e-10)
    lam = driven.strength
    assert row["tdpt_defect"] == pytest.approx(lam ** 4 * 4 * math.pi ** 2, rel=1e-8)


def test_driven_mode_first_row_is_identity():
    result = run("experiment = driven-mode", points=5)
    first = dict(zip(result.columns, result.rows[0]))
    assert first["t"] == 0
    for kind in ("exact", "magnus_exponential", "magnus_series", "tdpt"):
        assert first[f"{kind}_vacuum_abs"] == pytest.approx(1.0)
        assert abs(first[f"{kind}_defect"]) <= 1e-14


def test_driven_convergence():
    result = run("experiment = convergence\nt_max = 3.0")
    assert result.columns == ("study", "parameter", "value", "error")
    studies = {row[0] for row in result.rows}
    assert studies == {"magnus-m1", "magnus-m2", "dyson2", "step-oracle"}
    assert {row[1] for row in result.rows} == {"steps"}
    for study in ("magnus-m2", "dyson2"):
        errors = [row[3] for row in result.rows if row[0] == study]
        assert len(errors) == 4
        assert all(a > b for a, b in zip(errors, errors[1:])), study


def test_fermi_convergence():
    result = run("experiment = convergence\nmodes = 8\nsteps = 400\nsweep = modes: 8, 16")
    assert {row[0] for row in result.rows} == {"leakage", "analytic"}
    assert [row[2] for row in result.rows if row[0] == "leakage"] == [8, 16]


def test_steps_sweep_keeps_model():
    result = run("experiment = convergence\nt_max = 1.0\nsweep = steps: 50, 100")
    assert [row[2] for row in result.rows if row[0] == "dyson2"] == [50, 100]


def test_bad_sweep_value_is_config_error():
    with pytest.raises(ConfigError) as e:
        run("experiment = driven-mode\nsweep = n_max: 1")
    assert e.value.key in ("sweep", "n_max")


def test_payload_mismatch():
    config = ExperimentConfig(experiment="driven-mode", fermi=FermiConfig(), t_max=1.0, steps=2)
    with pytest.raises(ConfigError) as e:
        run_experiment(config)
    assert e.value.key == "model"
    config = ExperimentConfig(experiment="kernel-smear", driven=DrivenModeConfig(), t_max=1.0, steps=2)
    with pytest.raises(ConfigError):
        run_experiment(config)


def test_degenerate_frequencies_end_to_end():
    result = run("experiment = fermi-analytic\nomega_l = 10\nomega_r = 10", points=21)
    nearby = run("experiment = fermi-analytic\nomega_l = 10.0000001\nomega_r = 10", points=21)
    t, values = column(result, "t"), column(result, "abs")
    assert np.all(np.isfinite(values))
    assert np.all(values[t < 1.0] == 0) and np.all(values[t > 1.0] > 0)
    assert_allclose(values, column(nearby, "abs"), rtol=1e-5)
    assert_allclose(column(result, "re"), column(nearby, "re"), rtol=1e-5, atol=1e-5)


def test_separation_sweep_rederives_defaults():
    config = parse_config("experiment = fermi-numeric\nmodes = 8\npoints = 5\nsweep = separation: 1.5, 3")
    points = sweep_points(config)
    assert [p.payload.separation for p in points] == [1.5, 3.0]
    assert [p.payload.box_length for p in points] == [12.0, 24.0]
    assert [p.t_max for p in points] == pytest.approx([3.0, 6.0])
    assert points[1].steps > points[0].steps
    result = run_experiment(config)
    for i, separation in enumerate((1.5, 3.0)):
        t = column(result, "t")[5 * i:5 * i + 5]
        assert t[-1] == pytest.approx(2 * separation, rel=0.01)


def test_separation_sweep_keeps_explicit_settings():
    config = parse_config("experiment = fermi-numeric\nmodes = 8\nbox_length = 16\nt_max = 1.5\n"
                          "sweep = separation: 1.5, 2")
    points = sweep_points(config)
    assert [p.payload.box_length for p in points] == [16.0, 16.0]
    assert [p.t_max for p in points] == [1.5, 1.5]
    assert {p.steps for p in points} == {config.steps}
    with pytest.raises(ConfigError) as e:
        sweep_points(parse_config("experiment = fermi-numeric\nbox_length = 8\nsweep = separation: 1.5, 3"))
    assert e.value.key == "sweep"


SMALL_RUNS = {
    "fermi-analytic": "experiment = fermi-analytic\npoints = 21",
    "fermi-numeric": "experiment = fermi-numeric\nmodes = 8\nsteps = 200\npoints = 21",
    "rwa-compare": "experiment = rwa-compare\nsteps = 200\nsweep = modes: 8, 16",
    "driven-mode": "experiment = driven-mode\npoints = 21",
    "convergence": "experiment = convergence\nt_max = 1.0\nsweep = steps: 50, 100",
    "kernel-smear": "experiment = kernel-smear\nsweep = modes: 8, 16",
}


def test_small_runs_cover_every_experiment():
    assert set(SMALL_RUNS) == {e.value for e in ExperimentName}


@pytest.mark.parametrize("name", sorted(SMALL_RUNS))
def test_runs_are_deterministic(name):
    first = emit_csv(run(SMALL_RUNS[name]))
    second = emit_csv(run(SMALL_RUNS[name]))
    assert first == second
    assert first.count("\n") > 1
