"""Rendering helpers for human-friendly and tabular output.

Pulls dotted paths out of report dicts and renders labeled sections (stderr summaries and
MCP tool text) and the one-row-per-check CSV summaries `verify` writes.
"""

from __future__ import annotations

import csv
import io
from collections.abc import Callable, Sequence
from dataclasses import dataclass
from typing import Any

Transform = Callable[[Any, dict], str | None]


@dataclass
class FieldSpec:
    label: str
    path: str  # dotted path into data
    icon: str = ""
    transform: Transform | None = None


def get_path(data: dict, path: str) -> Any:
    cur: Any = data
    for part in path.split("."):
        if not isinstance(cur, dict) or part not in cur:
            return None
        cur = cur[part]
    return cur


def _value(spec: FieldSpec, data: dict) -> Any:
    raw = get_path(data, spec.path)
    return spec.transform(raw, data) if spec.transform else raw


def render_fields(specs: Sequence[FieldSpec], data: dict) -> list[str]:
    lines: list[str] = []
    for spec in specs:
        val = _value(spec, data)
        if val in (None, "", []):
            continue
        icon = f"{spec.icon} " if spec.icon else ""
        lines.append(f"{icon}{spec.label}: {val}")
    return lines


def render_section(title: str | None, specs: Sequence[FieldSpec], data: dict) -> str:
    body = "\n".join(render_fields(specs, data)).rstrip()
    if not body:
        return ""
    return f"{title}\n{body}\n" if title else f"{body}\n"


# ---------------------
# Values
# ---------------------


def sets_text(value: Any, _data: dict | None = None) -> str | None:
    """[[1, 2], [3, 4]] -> "{1,2} {3,4}"."""
    if not value:
        return None
    return " ".join("{" + ",".join(map(str, s)) + "}" for s in value)


def yes_no(value: Any, _data: dict | None = None) -> str | None:
    if value is None:
        return None
    return "yes" if value else "no"


def agreement(value: Any, _data: dict | None = None) -> str | None:
    if value is None:
        return None
    return "yes" if value else "NO"


def params_text(value: Any, _data: dict | None = None) -> str | None:
    if not isinstance(value, dict) or not value:
        return None
    return " ".join(f"{k}={value[k]}" for k in sorted(value))


# ---------------------
# Check report summaries
# ---------------------

REPORT_FIELDS = [
    FieldSpec("Check", "check", "🔎"),
    FieldSpec("Params", "params", "⚙️", params_text),
    FieldSpec("Tested", "tested", "#"),
    FieldSpec("Violations", "violations", "❌", lambda v, _d: str(len(v or []))),
    FieldSpec("Certified", "certified", "✅", yes_no),
    FieldSpec("Seconds", "seconds", "⏱️"),
]

CSV_COLUMNS = ["check", "params", "tested", "violations", "certified", "seconds"]


def render_reports(reports: Sequence[dict]) -> str:
    """Labeled sections, one per CheckReport dump, separated by a divider."""
    blocks = [render_section(None, REPORT_FIELDS, r).rstrip() for r in reports]
    return ("\n" + "—" * 50 + "\n").join(b for b in blocks if b) + "\n"


def reports_csv(reports: Sequence[dict]) -> str:
    """One CSV row per (check, params); params serialised as sorted key=value pairs."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for r in reports:
        writer.writerow(
            [
                r.get("check", ""),
                params_text(r.get("params")) or "",
                r.get("tested", 0),
                len(r.get("violations") or []),
                "true" if r.get("certified") else "false",
                "" if r.get("seconds") is None else r["seconds"],
            ]
        )
    return buf.getvalue()
