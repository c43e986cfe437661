"""Render sweep and certificate CSVs into deterministic figures.

Consumes exactly the two CSV schemas the scheduler CLI emits:

  sweep.csv         sweep_var,sweep_value,policy,seed,discounted_cost,gap,theorem1_rhs
  certificates.csv  r,mgf_cost,dual_bound,gap,theorem1_rhs,horizon_ok[,oracle_optimal]

Deterministic policies plot as one line per policy; the random baseline
plots its per-seed mean with a +/-1 standard deviation band. Certificate
files plot the requested columns against the scale factor r.

Output bytes are reproducible: fixed style, fixed SVG hash salt, no
timestamps, and the input CSV's SHA-256 embedded as provenance metadata.
"""

from __future__ import annotations

import csv
import hashlib
import json
import os
from dataclasses import dataclass, field

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

__all__ = ["FigureSpec", "RenderResult", "SpecError", "SchemaError", "load_figure_spec", "render"]

SWEEP_HEADER = ["sweep_var", "sweep_value", "policy", "seed", "discounted_cost", "gap", "theorem1_rhs"]
CERT_HEADER = ["r", "mgf_cost", "dual_bound", "gap", "theorem1_rhs", "horizon_ok"]

_STYLES = [
    {"marker": "o", "linestyle": "-"},
    {"marker": "s", "linestyle": "--"},
    {"marker": "^", "linestyle": ":"},
    {"marker": "d", "linestyle": "-."},
    {"marker": "v", "linestyle": "-"},
]

_RC = {
    "svg.hashsalt": "plotviz",
    "figure.dpi": 100,
    "savefig.dpi": 100,
    "font.size": 10,
}


class SpecError(ValueError):
    """Figure spec is malformed (bad fields, empty series, unknown axis)."""


class SchemaError(ValueError):
    """Input CSV does not match a known schema or lacks a requested series."""


@dataclass(frozen=True)
class FigureSpec:
    input_csv: str
    series: tuple[str, ...]
    output_path: str
    x_axis: str = "sweep_value"
    log_y: bool = False

    def validate(self) -> None:
        if not self.series:
            raise SpecError("series must be nonempty")
        if self.x_axis not in ("sweep_value", "r"):
            raise SpecError(f"x_axis must be 'sweep_value' or 'r', got {self.x_axis!r}")
        ext = os.path.splitext(self.output_path)[1].lower()
        if ext not in (".svg", ".png"):
            raise SpecError(f"output_path must end in .svg or .png, got {ext!r}")
        if not os.path.exists(self.input_csv):
            raise SpecError(f"input CSV not found: {self.input_csv}")


@dataclass
class RenderResult:
    """Output location plus the exact numbers that were drawn, so callers
    can audit the figure against the CSV."""

    output_path: str
    x_values: list[float]
    lines: dict = field(default_factory=dict)  # series -> y values
    bands: dict = field(default_factory=dict)  # series -> (mean, std) arrays
    csv_sha256: str = ""


def load_figure_spec(path: str) -> FigureSpec:
    with open(path) as fh:
        data = json.load(fh)
    base = os.path.dirname(os.path.abspath(path))

    def resolve(p: str) -> str:
        return p if os.path.isabs(p) else os.path.join(base, p)

    try:
        return FigureSpec(
            input_csv=resolve(data["input_csv"]),
            series=tuple(str(s) for s in data["series"]),
            output_path=resolve(data["output_path"]),
            x_axis=str(data.get("x_axis", "sweep_value")),
            log_y=bool(data.get("log_y", False)),
        )
    except (KeyError, TypeError) as exc:
        raise SpecError(f"malformed figure spec: {exc}") from exc


def _read_csv(path: str) -> tuple[list[str], list[dict]]:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        return list(header), list(reader)


def _sweep_series(rows: list[dict], series: tuple[str, ...]):
    xs = sorted({float(r["sweep_value"]) for r in rows})
    lines: dict = {}
    bands: dict = {}
    for name in series:
        matching = [r for r in rows if r["policy"] == name]
        if not matching:
            raise SchemaError(f"no rows for policy {name!r}")
        by_x: dict[float, list[float]] = {}
        for r in matching:
            by_x.setdefault(float(r["sweep_value"]), []).append(float(r["discounted_cost"]))
        if any(x not in by_x for x in xs):
            raise SchemaError(f"policy {name!r} is missing sweep points")
        if all(len(v) == 1 for v in by_x.values()):
            lines[name] = [by_x[x][0] for x in xs]
        else:
            mean = np.array([float(np.mean(by_x[x])) for x in xs])
            std = np.array([float(np.std(by_x[x])) for x in xs])
            bands[name] = (mean, std)
    return xs, lines, bands


def _certificate_series(header: list[str], rows: list[dict], series: tuple[str, ...]):
    xs = sorted({float(r["r"]) for r in rows})
    by_x = {float(r["r"]): r for r in rows}
    lines = {}
    for name in series:
        if name not in header:
            raise SchemaError(f"certificate file has no column {name!r}")
        lines[name] = [float(by_x[x][name]) for x in xs]
    return xs, lines


def render(spec: FigureSpec) -> RenderResult:
    """Draw the figure described by ``spec``; identical inputs produce
    byte-identical files."""
    spec.validate()
    header, rows = _read_csv(spec.input_csv)
    if not rows:
        raise SchemaError(f"{spec.input_csv} has no data rows")
    digest = hashlib.sha256(open(spec.input_csv, "rb").read()).hexdigest()

    if header == SWEEP_HEADER:
        xs, lines, bands = _sweep_series(rows, spec.series)
        x_label = rows[0]["sweep_var"]
        y_label = "discounted cost"
    elif header[: len(CERT_HEADER)] == CERT_HEADER:
        xs, lines = _certificate_series(header, rows, spec.series)
        bands = {}
        x_label = "r"
        y_label = "value"
    else:
        raise SchemaError(f"unrecognized CSV schema: {header}")

    result = RenderResult(
        output_path=spec.output_path, x_values=xs, lines=lines, bands=bands, csv_sha256=digest
    )

    with plt.rc_context(_RC):
        fig, ax = plt.subplots(figsize=(6.0, 4.0))
        for i, name in enumerate(spec.series):
            style = _STYLES[i % len(_STYLES)]
            if name in lines:
                ax.plot(xs, lines[name], label=name, markersize=4, **style)
            else:
                mean, std = bands[name]
                ax.plot(xs, mean, label=f"{name} (mean)", markersize=4, **style)
                ax.fill_between(xs, mean - std, mean + std, alpha=0.25, linewidth=0)
        if spec.log_y:
            ax.set_yscale("log")
        ax.set_xlabel(x_label)
        ax.set_ylabel(y_label)
        ax.grid(True, alpha=0.3)
        ax.legend()
        fig.tight_layout()
        os.makedirs(os.path.dirname(os.path.abspath(spec.output_path)), exist_ok=True)
        provenance = f"source-csv-sha256={digest}"
        if spec.output_path.lower().endswith(".svg"):
            fig.savefig(spec.output_path, metadata={"Date": None, "Description": provenance})
        else:
            fig.savefig(spec.output_path, metadata={"Description": provenance})
        plt.close(fig)
    return result
