"""Render publication-style figures from drce experiment outputs.

Consumes only the public file contracts (runs.csv, summary.json, timing-sweep
JSON), never schedule files. Rendering is read-only and deterministic: fixed
style, fixed SVG hash salt, no timestamps in metadata, so identical inputs
produce identical image bytes.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from dataclasses import dataclass, field
from pathlib import Path

import matplotlib
import numpy as np
import yaml

matplotlib.use("Agg")
matplotlib.rcParams["svg.hashsalt"] = "drce-plots"

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)

KINDS = ("cost_surface", "time_scaling", "cost_vs_theta_v")
RUNS_COLUMNS = ("method", "theta_w", "theta_v", "theta_x0", "lambda",
                "run_id", "seed", "total_cost", "wall_time_ms")

METHOD_STYLE = {
    "lqg": {"color": "#888888", "marker": "s"},
    "wdrc": {"color": "#1f77b4", "marker": "^"},
    "wdrce": {"color": "#d62728", "marker": "o"},
}


class FigureSpecError(ValueError):
    pass


class SchemaError(ValueError):
    """Input file does not match the expected column/field contract."""


class EmptyDataError(ValueError):
    pass


@dataclass
class FigureSpec:
    kind: str
    out: Path
    csv: Path | None = None
    timing: Path | None = None
    labels: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise FigureSpecError(f"unknown figure kind {self.kind!r}; expected one of {KINDS}")
        self.out = Path(self.out)
        for name in ("csv", "timing"):
            p = getattr(self, name)
            if p is not None:
                p = Path(p)
                setattr(self, name, p)
                if not p.exists():
                    raise FigureSpecError(f"{name} input {p} does not exist")
        needs = "timing" if self.kind == "time_scaling" else "csv"
        if getattr(self, needs) is None:
            raise FigureSpecError(f"kind {self.kind!r} needs the {needs!r} input path")

    @classmethod
    def load(cls, path) -> "FigureSpec":
        doc = yaml.safe_load(Path(path).read_text())
        if not isinstance(doc, dict):
            raise FigureSpecError(f"spec file {path} is not a mapping")
        try:
            return cls(kind=doc["kind"], out=doc["out"], csv=doc.get("csv"),
                       timing=doc.get("timing"), labels=doc.get("labels", {}))
        except KeyError as e:
            raise FigureSpecError(f"spec missing required key {e}") from e


def read_runs(path: Path) -> list[dict]:
    with open(path, newline="") as f:
        reader = csv.DictReader(f)
        header = reader.fieldnames or []
        missing = [c for c in RUNS_COLUMNS if c not in header]
        if missing:
            raise SchemaError(f"runs csv {path} missing columns: {', '.join(missing)}")
        rows = list(reader)
    if not rows:
        raise EmptyDataError(f"runs csv {path} has no data rows")
    return rows


def cell_means(rows: list[dict]):
    """mean total cost per (method, theta_w, theta_v) cell."""
    cells: dict[tuple, list[float]] = {}
    for row in rows:
        key = (row["method"], float(row["theta_w"]), float(row["theta_v"]))
        cells.setdefault(key, []).append(float(row["total_cost"]))
    return {k: float(np.mean(v)) for k, v in cells.items()}


def read_timing(path: Path) -> list[dict]:
    doc = json.loads(Path(path).read_text())
    if doc.get("format") != "drce-timing-sweep":
        raise SchemaError(f"{path}: expected format 'drce-timing-sweep', got {doc.get('format')!r}")
    entries = doc.get("entries", [])
    if not entries:
        raise EmptyDataError(f"{path} has no timing entries")
    for e in entries:
        if "T" not in e or "times_s" not in e:
            raise SchemaError(f"{path}: timing entries need keys 'T' and 'times_s'")
    return entries


def _new_figure():
    return plt.figure(figsize=(6.0, 4.2), dpi=150)


def _finalize(fig, spec: FigureSpec) -> list[Path]:
    ax = fig.gca()
    if spec.labels.get("title"):
        ax.set_title(spec.labels["title"])
    fig.tight_layout()
    spec.out.parent.mkdir(parents=True, exist_ok=True)
    png = spec.out.with_suffix(".png")
    svg = spec.out.with_suffix(".svg")
    fig.savefig(png, metadata={"Software": "drce-plots"})
    fig.savefig(svg, metadata={"Date": None})
    plt.close(fig)
    return [png, svg]


def _plot_cost_surface(spec: FigureSpec):
    means = cell_means(read_runs(spec.csv))
    methods = sorted({m for m, _, _ in means})
    tw_all = sorted({tw for _, tw, _ in means})
    tv_all = sorted({tv for _, _, tv in means})

    if len(tw_all) >= 2 and len(tv_all) >= 2:
        fig = plt.figure(figsize=(6.5, 4.8), dpi=150)
        ax = fig.add_subplot(projection="3d")
        TW, TV = np.meshgrid(tw_all, tv_all, indexing="ij")
        for method in methods:
            Z = np.full_like(TW, np.nan, dtype=float)
            for i, tw in enumerate(tw_all):
                for j, tv in enumerate(tv_all):
                    Z[i, j] = means.get((method, tw, tv),
                                        means.get((method, 0.0, 0.0), np.nan))
            style = METHOD_STYLE.get(method, {})
            ax.plot_surface(TW, TV, Z, alpha=0.55,
                            color=style.get("color", None), label=method)
        ax.set_xlabel(spec.labels.get("x", "disturbance radius"))
        ax.set_ylabel(spec.labels.get("y", "noise radius"))
        ax.set_zlabel(spec.labels.get("z", "mean total cost"))
    else:
        fig = _new_figure()
        ax = fig.gca()
        xs_are_tv = len(tv_all) >= len(tw_all)
        for method in methods:
            pts = sorted(
                (tv if xs_are_tv else tw, val)
                for (m, tw, tv), val in means.items() if m == method)
            xs = [p[0] for p in pts]
            ys = [p[1] for p in pts]
            ax.plot(xs, ys, label=method, **METHOD_STYLE.get(method, {}))
        ax.set_xlabel(spec.labels.get(
            "x", "noise radius" if xs_are_tv else "disturbance radius"))
        ax.set_ylabel(spec.labels.get("y", "mean total cost"))
        ax.legend()
    return fig


def _plot_cost_vs_theta_v(spec: FigureSpec):
    means = cell_means(read_runs(spec.csv))
    methods = sorted({m for m, _, _ in means})
    fig = _new_figure()
    ax = fig.gca()
    tv_all = sorted({tv for m, _, tv in means if m != "lqg"})
    for method in methods:
        if method == "lqg":
            val = np.mean([v for (m, _, _), v in means.items() if m == "lqg"])
            ax.axhline(val, linestyle="--", color=METHOD_STYLE["lqg"]["color"],
                       label="lqg")
            continue
        pts = sorted((tv, val) for (m, _, tv), val in means.items() if m == method)
        # control-only baseline has a single noise radius: draw it flat
        if len(pts) == 1 and tv_all:
            ax.axhline(pts[0][1], linestyle=":",
                       color=METHOD_STYLE.get(method, {}).get("color"),
                       label=method)
            continue
        ax.plot([p[0] for p in pts], [p[1] for p in pts], label=method,
                **METHOD_STYLE.get(method, {}))
    ax.set_xscale("log")
    ax.set_xlabel(spec.labels.get("x", "noise ambiguity radius"))
    ax.set_ylabel(spec.labels.get("y", "mean total cost"))
    ax.legend()
    return fig


def _plot_time_scaling(spec: FigureSpec):
    entries = sorted(read_timing(spec.timing), key=lambda e: e["T"])
    Ts = np.array([e["T"] for e in entries], dtype=float)
    means = np.array([np.mean(e["times_s"]) for e in entries])
    stds = np.array([np.std(e["times_s"]) for e in entries])
    fig = _new_figure()
    ax = fig.gca()
    ax.plot(Ts, means, marker="o", color="#d62728", label="offline synthesis")
    # shaded band: quarter of the standard deviation around the mean
    ax.fill_between(Ts, means - 0.25 * stds, means + 0.25 * stds,
                    color="#d62728", alpha=0.25, linewidth=0)
    ax.set_xlabel(spec.labels.get("x", "horizon"))
    ax.set_ylabel(spec.labels.get("y", "wall time (s)"))
    ax.legend()
    return fig


_RENDERERS = {
    "cost_surface": _plot_cost_surface,
    "cost_vs_theta_v": _plot_cost_vs_theta_v,
    "time_scaling": _plot_time_scaling,
}


def render(spec: FigureSpec) -> list[Path]:
    """Produce the figure described by spec; returns the written paths."""
    fig = _RENDERERS[spec.kind](spec)
    return _finalize(fig, spec)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="render",
                                     description="Render figures from drce outputs")
    parser.add_argument("--spec", required=True, help="YAML/JSON figure spec")
    args = parser.parse_args(argv)
    try:
        spec = FigureSpec.load(args.spec)
        paths = render(spec)
    except (FigureSpecError, SchemaError, EmptyDataError, OSError,
            yaml.YAMLError, json.JSONDecodeError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    for p in paths:
        print(f"wrote {p}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
