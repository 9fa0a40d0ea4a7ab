"""Rendering reports as text tables, CSV and JSON."""

from __future__ import annotations

import csv
import io
import json
from pathlib import Path
from typing import Optional, Sequence, Union

from .stats import COUNT_ROWS, TABLE_ROWS, StatsReport

Labeled = tuple[str, StatsReport]


def format_value(name: str, value) -> str:
    """Report cell text: counts as integers, everything else to 4 decimals."""
    if name in COUNT_ROWS and float(value).is_integer():
        return str(int(value))
    return f"{float(value):.4f}"


def render_table(reports: Sequence[Labeled], title: str = "MESSAGE STATS REPORT") -> str:
    labels = [label for label, _ in reports]
    width = max([len(r) + 1 for r in TABLE_ROWS] + [15])
    cols = [max(12, len(label)) for label in labels]
    lines = [title]
    lines.append(" " * width + "  ".join(label.rjust(c) for label, c in zip(labels, cols)))
    for row in TABLE_ROWS:
        cells = [format_value(row, getattr(rep, row)).rjust(c)
                 for (_, rep), c in zip(reports, cols)]
        lines.append(f"{row + ':':<{width}}" + "  ".join(cells))
    return "\n".join(lines) + "\n"


def render_csv(reports: Sequence[Labeled]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(("run",) + TABLE_ROWS)
    for label, rep in reports:
        writer.writerow([label] + [format_value(row, getattr(rep, row)) for row in TABLE_ROWS])
    return buf.getvalue()


def render_json(reports: Sequence[Labeled]) -> str:
    data = [{"run": label, **rep.to_dict()} for label, rep in reports]
    return json.dumps(data, indent=2) + "\n"


def parse_json(text: str) -> list[Labeled]:
    out = []
    for item in json.loads(text):
        item = dict(item)
        label = item.pop("run")
        out.append((label, StatsReport.from_dict(item)))
    return out


RENDERERS = {"table": render_table, "csv": render_csv, "json": render_json}


def emit_report(reports: Union[StatsReport, Sequence[Labeled]], fmt: str = "table",
                path: Optional[Union[str, Path]] = None) -> str:
    """Render ``reports`` and write them to ``path`` (or just return the text)."""
    if isinstance(reports, StatsReport):
        reports = [("run", reports)]
    if fmt not in RENDERERS:
        raise ValueError(f"unknown format {fmt!r}; expected one of {', '.join(RENDERERS)}")
    text = RENDERERS[fmt](list(reports))
    if path is not None:
        Path(path).write_text(text)
    return text


def write_timeseries(rows: Sequence[dict], path: Union[str, Path]) -> None:
    fields = ("time", "created", "delivered", "delivery_prob", "delay_prob", "latency_avg")
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=fields, lineterminator="\n")
        writer.writeheader()
        for row in rows:
            writer.writerow({k: (f"{row[k]:.4f}" if isinstance(row[k], float) else row[k])
                             for k in fields})
