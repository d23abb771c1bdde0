"""Check records, reports and their canonical serializations.

JSON output is canonical: keys sorted, two-space indentation, floats written
with 17 significant digits (``format(x, '.17g')``), so that equal reports
give byte-identical files and every float survives a reparse exactly.
Non-finite floats are written as the bare tokens ``NaN``, ``Infinity`` and
``-Infinity`` that Python's ``json`` module reads back.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

__all__ = ["Record", "PlotData", "Report", "canonical_json", "emit_report", "report_from_json", "FORMATS"]

FORMATS = ("json", "csv", "text")
CSV_COLUMNS = ("name", "defect", "tolerance", "passed", "value", "instance")


def _fmt_float(x: float) -> str:
    if math.isnan(x):
        return "NaN"
    if math.isinf(x):
        return "Infinity" if x > 0 else "-Infinity"
    return format(x, ".17g")


def canonical_json(obj, indent: int = 0) -> str:
    """Deterministic JSON text for nested dicts, lists, strings, numbers, booleans and ``None``."""
    pad = "  " * (indent + 1)
    end = "  " * indent
    if obj is None or isinstance(obj, bool):
        return json.dumps(obj)
    if isinstance(obj, int):
        return str(obj)
    if isinstance(obj, float):
        return _fmt_float(obj)
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {canonical_json(obj[k], indent + 1)}" for k in sorted(obj)]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        return "[\n" + ",\n".join(pad + canonical_json(v, indent + 1) for v in obj) + "\n" + end + "]"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


@dataclass(frozen=True)
class Record:
    """One check.  ``passed`` is derived: ``defect <= tolerance``."""

    name: str
    defect: float
    tolerance: float
    value: float | None = None
    instance: str | None = None

    def __post_init__(self):
        object.__setattr__(self, "defect", float(self.defect))
        object.__setattr__(self, "tolerance", float(self.tolerance))
        if self.value is not None:
            object.__setattr__(self, "value", float(self.value))

    @property
    def passed(self) -> bool:
        return self.defect <= self.tolerance

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "defect": self.defect,
            "tolerance": self.tolerance,
            "passed": self.passed,
            "value": self.value,
            "instance": self.instance,
        }


@dataclass(frozen=True)
class PlotData:
    """Columns for an external plotting tool; ``units`` has one entry per column."""

    columns: tuple
    units: tuple
    rows: tuple

    def to_dict(self) -> dict:
        return {"columns": list(self.columns), "units": list(self.units), "rows": [list(r) for r in self.rows]}

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow([f"{c} [{u}]" for c, u in zip(self.columns, self.units)])
        for row in self.rows:
            w.writerow([_fmt_float(float(v)) for v in row])
        return buf.getvalue()


@dataclass(frozen=True)
class Report:
    scenario: dict
    records: tuple = ()
    plot: PlotData | None = None
    timings: dict = field(default_factory=dict)

    @property
    def summary(self) -> dict:
        passed = sum(r.passed for r in self.records)
        return {"total": len(self.records), "passed": passed, "failed": len(self.records) - passed}

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.records)

    def to_dict(self, timings: bool = False) -> dict:
        out = {
            "scenario": self.scenario,
            "records": [r.to_dict() for r in self.records],
            "summary": self.summary,
            "plot": None if self.plot is None else self.plot.to_dict(),
        }
        if timings:
            out["timings"] = dict(self.timings)
        return out


def report_from_json(text: str) -> Report:
    doc = json.loads(text)
    records = tuple(
        Record(r["name"], r["defect"], r["tolerance"], r.get("value"), r.get("instance")) for r in doc["records"]
    )
    plot = doc.get("plot")
    if plot is not None:
        plot = PlotData(tuple(plot["columns"]), tuple(plot["units"]), tuple(tuple(r) for r in plot["rows"]))
    return Report(doc["scenario"], records, plot, doc.get("timings", {}))


def _csv(r: Report) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for rec in r.records:
        w.writerow(
            [
                rec.name,
                _fmt_float(rec.defect),
                _fmt_float(rec.tolerance),
                "true" if rec.passed else "false",
                "" if rec.value is None else _fmt_float(rec.value),
                rec.instance or "",
            ]
        )
    return buf.getvalue()


def _text(r: Report) -> str:
    s = r.summary
    lines = [f"scenario: {r.scenario.get('kind', '?')} (seed {r.scenario.get('seed', '?')})"]
    for rec in r.records:
        flag = "PASS" if rec.passed else "FAIL"
        lines.append(f"  [{flag}] {rec.name}: defect {rec.defect:.3e} (tol {rec.tolerance:.1e})")
    lines.append(f"summary: {s['passed']}/{s['total']} passed, {s['failed']} failed")
    return "\n".join(lines) + "\n"


def render(r: Report, fmt: str, timings: bool = False) -> str:
    if fmt == "json":
        return canonical_json(r.to_dict(timings)) + "\n"
    if fmt == "csv":
        return _csv(r)
    if fmt == "text":
        return _text(r)
    raise ValueError(f"unknown format {fmt!r}; expected one of {FORMATS}")


def emit_report(r: Report, fmt: str, path, timings: bool = False) -> list:
    """Write the report (and ``<stem>_plot.csv`` when plot data exist); return the paths written."""
    path = Path(path)
    path.write_text(render(r, fmt, timings))
    written = [path]
    if r.plot is not None:
        plot_path = path.with_name(path.stem + "_plot.csv")
        plot_path.write_text(r.plot.to_csv())
        written.append(plot_path)
    return written
