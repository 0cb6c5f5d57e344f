import logging
from pathlib import Path
from typing import Union

import pandas as pd
import plotly.express as px

from app.schemas.experiment import RunResult

logger = logging.getLogger(__name__)

# (x column, y columns, log axes) per experiment
LAYOUTS = {
    "fermi-analytic": ("t", ["abs", "re", "im"], False),
    "fermi-numeric": ("t", ["abs"], False),
    "rwa-compare": (None, ["leakage_full", "leakage_rwa"], True),
    "driven-mode": ("omega_t", None, False),
    "convergence": ("value", ["error"], True),
    "kernel-smear": (None, ["full", "co", "counter"], True),
}


def build_figure(result: RunResult):
    """Line chart of a RunResult; the first column is the x axis when the layout leaves it open."""
    df = result.to_frame()
    experiment = result.metadata.get("experiment", "")
    x, ys, log_axes = LAYOUTS.get(experiment, (None, None, False))
    x = x or result.columns[0]
    if ys is None:
        ys = [c for c in result.columns if c.endswith("_defect")]
    title = f"{experiment} ({result.metadata.get('convention', '')})"

    if experiment == "fermi-numeric":
        fig = px.line(df, x=x, y="abs", color=df[result.columns[0]].astype(str), title=title)
    elif experiment == "convergence":
        fig = px.line(df, x=x, y="error", color="study", markers=True, log_x=True, log_y=True, title=title)
    else:
        long = pd.melt(df, id_vars=[x], value_vars=ys, var_name="series", value_name="value")
        fig = px.line(long, x=x, y="value", color="series", markers=log_axes,
                      log_x=log_axes, log_y=log_axes, title=title)

    fig.update_layout(
        margin=dict(t=40, b=10, l=0, r=0),
        legend_title_text="",
    )
    return fig


def write_figure(result: RunResult, path: Union[str, Path]) -> Path:
    """Static, self-contained HTML."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    build_figure(result).write_html(str(path), include_plotlyjs=True, full_html=True)
    logger.info("Wrote figure to %s", path)
    return path
