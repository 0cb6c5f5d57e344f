import logging
from pathlib import Path
from typing import Optional, Union

from app.schemas.experiment import OutputFormat, RunResult

logger = logging.getLogger(__name__)

FLOAT_FORMAT = "%.12e"


def emit_csv(result: RunResult) -> str:
    """
    Header row then one line per row, '\\n' line endings. Every numeric cell,
    integer sweep values included, is written as %.12e; label columns stay text.
    """
    frame = result.to_frame()
    integers = frame.select_dtypes(include="integer").columns
    if len(integers):
        frame[integers] = frame[integers].astype(float)
    return frame.to_csv(index=False, float_format=FLOAT_FORMAT, lineterminator="\n", na_rep="nan")


def emit_json(result: RunResult) -> str:
    """{"columns", "rows", "metadata"}; NaN and infinities become null."""
    return result.model_dump_json(indent=2) + "\n"


def emit(result: RunResult, format: Union[OutputFormat, str] = OutputFormat.CSV) -> str:
    format = OutputFormat(format)
    if format is OutputFormat.JSON:
        return emit_json(result)
    return emit_csv(result)


def write_result(result: RunResult, path: Union[str, Path], format: Union[OutputFormat, str] = OutputFormat.CSV,
                 metadata_path: Optional[Union[str, Path]] = None) -> Path:
    """
    Write the emitted table. CSV carries no metadata of its own, so it is
    written next to it as <name>.meta.json unless metadata_path says otherwise.
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    text = emit(result, format)
    path.write_text(text, encoding="utf-8", newline="")
    logger.info("Wrote %d rows to %s", len(result.rows), path)
    if OutputFormat(format) is OutputFormat.CSV:
        meta = Path(metadata_path) if metadata_path else path.with_name(path.name + ".meta.json")
        meta.write_text(
            result.model_dump_json(include={"metadata"}, indent=2) + "\n",
            encoding="utf-8",
            newline="",
        )
    return path
