"""Report serialization: distribution JSON, full-precision CSV and JSON reports.

Reports carry no timestamps, so identical inputs give identical bytes.
"""

from __future__ import annotations

import csv
import io
import json
import math
from pathlib import Path
from typing import Any, Iterable, Mapping, Sequence

import numpy as np

from .divergence import DiscreteDist
from .errors import FdivError, ValidationError

__all__ = [
    "IoError",
    "format_value",
    "read_dist",
    "write_dist",
    "dist_to_json",
    "csv_report",
    "json_report",
]

from . import __version__ as VERSION


class IoError(FdivError):
    code = "io"

    def __init__(self, msg: str, code: str = "io"):
        super().__init__(msg)
        self.code = code


def format_value(v: Any) -> str:
    """Cell text: reals with 17 significant digits, ``inf``/``nan`` spelled out."""
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return "%.17g" % v
    return str(v)


def _jsonable(v: Any) -> Any:
    if isinstance(v, Mapping):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, np.ndarray):
        return [_jsonable(x) for x in v.tolist()]
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, (int, np.integer)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if math.isfinite(v):
            return v
        return "nan" if math.isnan(v) else ("inf" if v > 0 else "-inf")
    return v


def read_dist(path: str | Path) -> DiscreteDist:
    """Parse ``[{"label": ..., "mass": ...}, ...]`` into a :class:`DiscreteDist`."""
    p = Path(path)
    if not p.is_file():
        raise IoError(f"no such file: {p}", "io_missing")
    try:
        records = json.loads(p.read_text())
    except json.JSONDecodeError as exc:
        raise IoError(f"malformed JSON in {p}: {exc.msg}", "io_malformed") from exc
    if not isinstance(records, list) or not all(
        isinstance(r, dict) and set(r) == {"label", "mass"} for r in records
    ):
        raise IoError(f"{p} must be a list of {{label, mass}} objects", "io_schema")
    try:
        return DiscreteDist.from_records(
            [{"label": str(r["label"]), "mass": r["mass"]} for r in records]
        )
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ValidationError):
            raise
        raise ValidationError(str(exc)) from exc


def dist_to_json(dist: DiscreteDist) -> str:
    return json.dumps(
        [{"label": str(r["label"]), "mass": float(r["mass"])} for r in dist.to_records()],
        indent=2,
    ) + "\n"


def write_dist(dist: DiscreteDist, path: str | Path) -> None:
    Path(path).write_text(dist_to_json(dist))


def _echo_lines(config: Mapping[str, Any]) -> list[str]:
    blob = json.dumps(_jsonable(config), sort_keys=True)
    return [f"# version={VERSION}", f"# config={blob}"]


def csv_report(
    config: Mapping[str, Any], columns: Sequence[str], rows: Iterable[Mapping[str, Any]]
) -> str:
    """CSV text: two ``#`` echo lines, a header row, then one line per row."""
    buf = io.StringIO()
    for line in _echo_lines(config):
        buf.write(line + "\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([format_value(row.get(c)) for c in columns])
    return buf.getvalue()


def json_report(config: Mapping[str, Any], payload: Mapping[str, Any]) -> str:
    body = {"version": VERSION, "config": config, **payload}
    return json.dumps(_jsonable(body), indent=2, sort_keys=True) + "\n"


def read_csv_report(text: str) -> tuple[dict, list[dict]]:
    """Inverse of :func:`csv_report`: the config echo and the rows as strings."""
    lines = text.splitlines()
    config = {}
    body = []
    for line in lines:
        if line.startswith("# config="):
            config = json.loads(line[len("# config="):])
        elif not line.startswith("#"):
            body.append(line)
    return config, list(csv.DictReader(body))
