"""JSON verification reports and their Markdown rendering.

The JSON document is the interchange format (see ``docs/report-schema.md``).
Everything outside the ``timing`` block is a deterministic function of the
configuration and seed; keys are sorted on output and complex numbers are
stored as ``[re, im]`` pairs.
"""

from __future__ import annotations

import json
from typing import Any

import numpy as np

from rcpos import __version__
from rcpos.positivity import PositivityCertificate

SCHEMA_VERSION = 1
TOOL_NAME = "rcpos"


def cnum(x) -> list[float]:
    x = complex(x)
    return [float(x.real), float(x.imag)]


def cvec(v) -> list[list[float]]:
    return [cnum(x) for x in np.asarray(v).ravel()]


def from_cvec(data) -> np.ndarray:
    return np.array([complex(re, im) for re, im in data], dtype=complex)


def jsonable(obj: Any) -> Any:
    """Recursively convert numpy scalars/arrays (complex to ``[re, im]``)."""
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        if np.iscomplexobj(obj):
            return cvec(obj) if obj.ndim <= 1 else [jsonable(row) for row in obj]
        return obj.tolist()
    if isinstance(obj, (complex, np.complexfloating)):
        return cnum(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    return obj


def certificate_item(item_id: str, cert: PositivityCertificate, *, metric: str, bundle: str, point_id: str, z) -> dict:
    """Self-contained certificate record: enough to recompute the witness value
    from the metric selector, bundle expression and point."""
    return {
        "id": item_id,
        "kind": "certificate",
        "metric": metric,
        "bundle": bundle,
        "point": point_id,
        "z": cvec(z),
        "notion": cert.notion,
        "verdict": cert.verdict,
        "margin": float(cert.margin),
        "objective": float(cert.objective),
        "scale": float(cert.scale),
        "witness": {
            "a": cvec(cert.witness_section),
            "v": cvec(cert.witness_direction),
            "value": float(cert.witness_value),
        },
        "diagnostics": {
            "restarts": int(cert.restarts),
            "iterations": int(cert.iterations),
            "grid_size": int(cert.grid_size),
            "grid_margin": None if cert.grid_margin is None else float(cert.grid_margin),
        },
    }


def make_report(command: str, config: dict, points: list, items: list, lemmas: list, verdict: str, exit_code: int, timing: dict) -> dict:
    return jsonable(
        {
            "schema_version": SCHEMA_VERSION,
            "tool": {"name": TOOL_NAME, "version": __version__},
            "command": command,
            "config": config,
            "points": points,
            "items": items,
            "lemmas": lemmas,
            "verdict": verdict,
            "exit_code": exit_code,
            "timing": timing,
        }
    )


def dumps(report: dict) -> str:
    return json.dumps(report, sort_keys=True, indent=2) + "\n"


def strip_timing(report: dict) -> dict:
    return {k: v for k, v in report.items() if k != "timing"}


def find_item(report: dict, item_id: str) -> dict | None:
    for it in report.get("items", []):
        if it["id"] == item_id:
            return it
    for row in report.get("lemmas", []):
        if row["id"] == item_id:
            return row
    return None


# ---------------------------------------------------------------------------
# markdown
# ---------------------------------------------------------------------------


def _fmt(x) -> str:
    if x is None:
        return "-"
    if isinstance(x, float):
        return f"{x:.6g}"
    return str(x)


def _fmt_vec(v) -> str:
    parts = []
    for re, im in v:
        parts.append(f"{re:+.6f}{im:+.6f}i")
    return "(" + ", ".join(parts) + ")"


def to_markdown(report: dict) -> str:
    lines = [f"# {report['tool']['name']} {report['command']} report", ""]
    lines.append(f"- schema version: {report['schema_version']}")
    lines.append(f"- tool version: {report['tool']['version']}")
    lines.append(f"- overall verdict: **{report['verdict']}** (exit {report['exit_code']})")
    lines.append("")
    lines.append("## Configuration")
    lines.append("")
    lines.append("| key | value |")
    lines.append("| --- | --- |")
    for k in sorted(report["config"]):
        lines.append(f"| {k} | {_fmt(report['config'][k])} |")
    if report["items"]:
        lines += ["", "## Certificates", "", "| id | bundle | notion | verdict | margin |", "| --- | --- | --- | --- | --- |"]
        for it in report["items"]:
            lines.append(f"| {it['id']} | {it['bundle']} | {it['notion']} | {it['verdict']} | {_fmt(it['margin'])} |")
        refuted = [it for it in report["items"] if it["verdict"] == "refuted"]
        if refuted:
            lines += ["", "### Refutation witnesses", ""]
            for it in refuted:
                w = it["witness"]
                lines.append(f"- `{it['id']}`: a = {_fmt_vec(w['a'])}, v = {_fmt_vec(w['v'])}, value = {_fmt(w['value'])}")
    if report["lemmas"]:
        lines += [
            "",
            "## Checks",
            "",
            "| id | mode | hypothesis met | conclusion verified | worst residual | passed |",
            "| --- | --- | --- | --- | --- | --- |",
        ]
        for row in report["lemmas"]:
            lines.append(
                f"| {row['id']} | {row['mode']} | {row['hypothesis_met']} | {row['conclusion_verified']} "
                f"| {_fmt(row['worst_residual'])} | {'yes' if row['passed'] else 'no'} |"
            )
        for row in report["lemmas"]:
            if row["failures"]:
                lines += ["", f"### Failures in `{row['id']}`", ""]
                for f in row["failures"][:10]:
                    lines.append(f"- {json.dumps(f, sort_keys=True)}")
    t = report.get("timing", {})
    if t:
        lines += ["", "## Timing", ""]
        for k in sorted(t):
            lines.append(f"- {k}: {_fmt(t[k])}")
    return "\n".join(lines) + "\n"
