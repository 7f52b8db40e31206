"""Writing experiment results as CSV, JSON or SVG.

Output is deterministic: floats are written with ``repr`` (shortest
round-trip form), JSON keys are sorted, and SVGs carry no timestamp and
a fixed id salt, so identical inputs give byte-identical files.
"""

from __future__ import annotations

import csv
import enum
import io
import json
import math
from dataclasses import asdict, is_dataclass
from pathlib import Path
from typing import Any, Iterable

import matplotlib
import numpy as np
from matplotlib.figure import Figure

from .checks import CheckReport
from .errors import OutputError
from .experiments import ROW_FIELDS, ExperimentReport, ExperimentResult

FORMATS = ("csv", "json", "svg")
SVG_SALT = "cptpricing"
SVG_METADATA = {"Date": None, "Creator": None}


def _fmt(x: float) -> str:
    return repr(float(x))


def _jsonable(obj: Any) -> Any:
    if isinstance(obj, enum.Enum):
        return obj.value
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, float) and not math.isfinite(obj):
        return None if math.isnan(obj) else ("inf" if obj > 0 else "-inf")
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if is_dataclass(obj) and not isinstance(obj, type):
        return _jsonable(asdict(obj))
    return obj


def _write_text(path: Path, text: str) -> Path:
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text, encoding="utf-8", newline="")
    except OSError as exc:
        raise OutputError(f"cannot write {path}: {exc.strerror or exc}") from None
    return path


def report_csv(report: ExperimentReport) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(ROW_FIELDS)
    for row in report.rows:
        w.writerow([_fmt(v) for v in row.as_tuple()])
    return buf.getvalue()


def check_csv(report: CheckReport) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(("check", "status", "detail"))
    for o in report.outcomes:
        w.writerow((o.name, o.status, o.detail))
    return buf.getvalue()


def result_dict(result: ExperimentResult | CheckReport) -> dict[str, Any]:
    if isinstance(result, CheckReport):
        return {
            "experiment": "check",
            "passed": result.passed,
            "metadata": result.metadata,
            "counts": result.counts(),
            "checks": [asdict(o) for o in result.outcomes],
        }
    return {
        "experiment": result.experiment,
        "passed": result.passed,
        "metadata": result.metadata,
        "summary": result.summary,
        "reports": [
            {
                "name": r.name,
                "metadata": r.metadata,
                "columns": list(ROW_FIELDS),
                "rows": [list(row.as_tuple()) for row in r.rows],
            }
            for r in result.reports
        ],
    }


def result_json(result: ExperimentResult | CheckReport) -> str:
    return json.dumps(_jsonable(result_dict(result)), indent=2, sort_keys=True, allow_nan=False) + "\n"


# --- plots ------------------------------------------------------------------


def _curve(ax, report: ExperimentReport, column: str, gid: str, label: str, **kw: Any) -> None:
    (line,) = ax.plot(report.column("gamma"), report.column(column), label=label, **kw)
    line.set_gid(gid)


def _vline(ax, x: float, gid: str, label: str) -> None:
    ax.axvline(x, color="0.3", linestyle="--", linewidth=0.9, label=label).set_gid(gid)


def _plot_fourfold(fig: Figure, result: ExperimentResult) -> None:
    axes = fig.subplots(2, 2, sharey=False).ravel()
    for ax, q in zip(axes, "abcd"):
        for variant, style in (("full", "-"), ("weighting_only", "--")):
            rep = result.report(f"fourfold_{q}_{variant}")
            _curve(ax, rep, "RA", f"ra-{q}-{variant}", variant.replace("_", " "), linestyle=style)
        rep = result.report(f"fourfold_{q}_full")
        ax.axhline(0.0, color="0.6", linewidth=0.6)
        ax.set_title(f"({q}) {rep.metadata['regime']} regime, {rep.metadata['likelihood']} probability")
        ax.set_xlabel("tariff")
        ax.set_ylabel("RA")
        ax.legend(fontsize="small")


def _plot_mixed(fig: Figure, result: ExperimentResult) -> None:
    axes = np.atleast_1d(fig.subplots(1, len(result.reports)))
    for ax, rep in zip(axes, result.reports):
        n = rep.name
        _curve(ax, rep, "p_objective", f"curve-p-objective-{n}", "objective")
        _curve(ax, rep, "p_subjective", f"curve-p-subjective-{n}", "subjective, mean reference")
        _vline(ax, rep.metadata["gamma_lower"], f"band-lower-{n}", "band lower")
        if rep.metadata["gamma_upper"] is not None:
            _vline(ax, rep.metadata["gamma_upper"], f"band-upper-{n}", "band upper")
        else:
            ax.annotate("upper end unbounded", xy=(0.98, 0.95), xycoords="axes fraction", ha="right")
        cpt = rep.metadata["cpt"]
        ax.set_title(f"beta+ = {cpt['beta_plus']:g}, lambda = {cpt['lambda']:g}")
        ax.set_xlabel("tariff")
        ax.set_ylabel("acceptance probability")
        ax.legend(fontsize="small")


def _plot_self_reference(fig: Figure, result: ExperimentResult) -> None:
    names = list(result.summary)
    axes = fig.subplots(2, 2).ravel()
    for ax, name in zip(axes, names):
        for ref in ("mean_ref", "alternative_ref"):
            rep = result.report(f"self_ref_{name}_{ref}")
            _curve(ax, rep, "p_subjective", f"curve-{name}-{ref}", ref.replace("_", " "))
        _vline(ax, result.summary[name]["parity_tariff"], f"parity-{name}", "parity tariff")
        ax.set_title(name.replace("_", " "))
        ax.set_xlabel("tariff")
        ax.set_ylabel("subjective acceptance")
        ax.legend(fontsize="small")


def _plot_price(fig: Figure, result: ExperimentResult) -> None:
    ax = fig.subplots()
    rep = result.reports[0]
    _curve(ax, rep, "p_objective", "curve-p-objective", "objective")
    _curve(ax, rep, "p_subjective", "curve-p-subjective", "subjective")
    s = result.summary
    ax.plot([s["tariff"]], [s["acceptance"]], "o", color="k", label="solution")[0].set_gid("solution")
    ax.axhline(s["target"], color="0.6", linewidth=0.6)
    ax.set_xlabel("tariff")
    ax.set_ylabel("acceptance probability")
    ax.legend(fontsize="small")


def _plot_check(fig: Figure, report: CheckReport) -> None:
    ax = fig.subplots()
    ax.axis("off")
    cells = [[o.name, o.status, o.detail[:70]] for o in report.outcomes]
    table = ax.table(cellText=cells, colLabels=["check", "status", "detail"], loc="center", cellLoc="left")
    table.auto_set_font_size(False)
    table.set_fontsize(7)
    table.auto_set_column_width([0, 1, 2])


_PLOTTERS = {
    "fourfold": (_plot_fourfold, (11, 8)),
    "mixed": (_plot_mixed, (11, 4.5)),
    "self_reference": (_plot_self_reference, (11, 8)),
    "price": (_plot_price, (6.5, 4.5)),
}


def result_svg(result: ExperimentResult | CheckReport) -> str:
    if isinstance(result, CheckReport):
        plot, size = _plot_check, (11, 0.3 * len(result.outcomes) + 1)
    else:
        plot, size = _PLOTTERS[result.experiment]
    with matplotlib.rc_context({"svg.hashsalt": SVG_SALT, "svg.fonttype": "path"}):
        fig = Figure(figsize=size, layout="constrained")
        plot(fig, result)
        buf = io.StringIO()
        fig.savefig(buf, format="svg", metadata=SVG_METADATA)
    return buf.getvalue()


# --- entry point ------------------------------------------------------------


def _stem(result: ExperimentResult | CheckReport) -> str:
    return "check" if isinstance(result, CheckReport) else result.experiment


def emit(result: ExperimentResult | CheckReport, out_dir: str | Path, fmt: str) -> list[Path]:
    """Write ``result`` under ``out_dir``; returns the paths written.

    CSV gives one file per report (``<report name>.csv``), JSON and SVG one
    file per result (``<experiment>.json`` / ``.svg``).

    Raises:
        ValueError: unknown format.
        OutputError: a file could not be written; the message names the path.
    """
    if fmt not in FORMATS:
        raise ValueError(f"unknown format {fmt!r}; expected one of {FORMATS}")
    out = Path(out_dir)
    if fmt == "json":
        return [_write_text(out / f"{_stem(result)}.json", result_json(result))]
    if fmt == "svg":
        return [_write_text(out / f"{_stem(result)}.svg", result_svg(result))]
    if isinstance(result, CheckReport):
        return [_write_text(out / "check.csv", check_csv(result))]
    return [_write_text(out / f"{r.name}.csv", report_csv(r)) for r in result.reports]


def emit_all(result: ExperimentResult | CheckReport, out_dir: str | Path, formats: Iterable[str]) -> list[Path]:
    paths: list[Path] = []
    for fmt in formats:
        paths.extend(emit(result, out_dir, fmt))
    return paths
