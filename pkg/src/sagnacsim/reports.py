"""Result serialization: delimited tables, JSON summaries, figures, manifest.

The data contract is byte-stable: identical scenario results serialize to
byte-identical CSV and JSON (comma separator, "." decimal point, LF line
endings, UTF-8, shortest round-trip float formatting, sorted JSON keys).
Figures are rendered through the Agg backend with fixed geometry and
scrubbed metadata; the run manifest carries wall-clock timestamps and is
therefore the one file excluded from the byte-identical guarantee — its
checksum list covers every other output.
"""

from __future__ import annotations

import csv
import hashlib
import json
import math
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path
from typing import Dict, List, Optional, Union

from .config import ExperimentPlan, save_config
from .scenarios import FigureSpec, ScenarioResult, Table

__all__ = [
    "figure_filenames",
    "render_figure",
    "sha256_of_file",
    "summary_json_text",
    "table_csv_text",
    "write_outputs",
]

_FIGURE_DPI = 120


def _cell_text(value: object) -> str:
    """Stable decimal-point text for one CSV cell."""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        if math.isnan(value):
            return "nan"
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        return repr(value)  # shortest text that round-trips exactly
    return str(value)


def table_csv_text(table: Table) -> str:
    """Render one table to CSV text (comma, LF, header row with units)."""
    lines: List[List[str]] = [list(table.headers)]
    lines.extend([_cell_text(cell) for cell in row] for row in table.rows)

    class _Dialect(csv.excel):
        lineterminator = "\n"

    import io

    buffer = io.StringIO()
    writer = csv.writer(buffer, dialect=_Dialect)
    writer.writerows(lines)
    return buffer.getvalue()


def _json_ready(value: object) -> object:
    """Recursively convert a summary into strictly valid JSON values."""
    if isinstance(value, dict):
        return {str(k): _json_ready(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_json_ready(v) for v in value]
    if isinstance(value, float):
        if math.isnan(value):
            return "nan"
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        return value
    if isinstance(value, (str, int, bool)) or value is None:
        return value
    if hasattr(value, "item"):  # numpy scalars
        return _json_ready(value.item())
    return str(value)


def summary_json_text(summary: Dict[str, object]) -> str:
    """Render the scenario summary to canonical JSON text."""
    return json.dumps(_json_ready(summary), sort_keys=True, indent=2,
                      allow_nan=False) + "\n"


def sha256_of_file(path: Union[str, Path]) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as handle:
        for chunk in iter(lambda: handle.read(1 << 16), b""):
            digest.update(chunk)
    return digest.hexdigest()


# --------------------------------------------------------------------------
# Figures

def figure_filenames(result: ScenarioResult) -> List[str]:
    return [f"{spec.name}.png" for spec in result.figures]


def _render_xy(ax, payload: Dict[str, object]) -> None:
    base_x = payload.get("x", [])
    for series in payload.get("series", []):
        x = series.get("x", base_x)
        y = series["y"]
        style = series.get("style", "")
        marker = series.get("marker")
        label = series.get("label")
        if "yerr" in series:
            ax.errorbar(x, y, yerr=series["yerr"], fmt=marker or "o",
                        capsize=3, label=label)
        elif marker:
            ax.plot(x, y, style or "-", marker=marker, markersize=4,
                    label=label)
        else:
            ax.plot(x, y, style or "-", label=label)
    for line in payload.get("hlines", []):
        ax.axhline(line["y"], color="gray", linestyle=":",
                   label=line.get("label"))
    if payload.get("xscale"):
        ax.set_xscale(payload["xscale"])
    if payload.get("yscale"):
        ax.set_yscale(payload["yscale"])
    if payload.get("xticks"):
        ax.set_xticks(payload.get("x", []))
        ax.set_xticklabels(payload["xticks"])
    ax.set_xlabel(payload.get("xlabel", ""))
    ax.set_ylabel(payload.get("ylabel", ""))
    if any(s.get("label") for s in payload.get("series", [])) \
            or payload.get("hlines"):
        ax.legend(fontsize=8)
    ax.grid(alpha=0.3)


def _render_heatmap(ax, fig, payload: Dict[str, object]) -> None:
    x = payload["x"]
    y = payload["y"]
    image = ax.imshow(payload["z"], origin="lower", aspect="auto",
                      extent=(x[0], x[-1], y[0], y[-1]), cmap="viridis")
    ax.set_xlabel(payload.get("xlabel", ""))
    ax.set_ylabel(payload.get("ylabel", ""))
    fig.colorbar(image, ax=ax)


def _render_matrix_pair(fig, payload: Dict[str, object]) -> None:
    labels = payload["labels"]
    for index, (part, data) in enumerate(
            (("Re", payload["real"]), ("Im", payload["imag"]))):
        ax = fig.add_subplot(1, 2, index + 1)
        image = ax.imshow(data, vmin=-0.55, vmax=0.55, cmap="RdBu_r")
        ax.set_title(part)
        ax.set_xticks(range(len(labels)))
        ax.set_xticklabels(labels)
        ax.set_yticks(range(len(labels)))
        ax.set_yticklabels(labels)
        for row in range(len(labels)):
            for col in range(len(labels)):
                ax.text(col, row, f"{data[row][col]:+.3f}",
                        ha="center", va="center", fontsize=7)
        fig.colorbar(image, ax=ax, shrink=0.8)


def render_figure(spec: FigureSpec, path: Union[str, Path]) -> None:
    """Render one figure spec to a PNG file (Agg backend, fixed geometry)."""
    import matplotlib

    matplotlib.use("Agg", force=False)
    import matplotlib.pyplot as plt

    if spec.kind == "panels":
        panels = spec.payload["panels"]
        columns = 2
        rows = (len(panels) + columns - 1) // columns
        fig, axes = plt.subplots(rows, columns,
                                 figsize=(6.0 * columns, 4.0 * rows))
        flat = axes.ravel() if hasattr(axes, "ravel") else [axes]
        for ax, panel in zip(flat, panels):
            _render_xy(ax, panel)
            ax.set_title(panel.get("title", ""))
        for ax in flat[len(panels):]:
            ax.set_visible(False)
    elif spec.kind == "heatmap":
        fig, ax = plt.subplots(figsize=(6.4, 5.4))
        _render_heatmap(ax, fig, spec.payload)
        ax.set_title(spec.title)
    elif spec.kind == "matrix_pair":
        fig = plt.figure(figsize=(10.0, 4.6))
        _render_matrix_pair(fig, spec.payload)
        fig.suptitle(spec.title)
    elif spec.kind == "xy":
        fig, ax = plt.subplots(figsize=(7.2, 4.6))
        _render_xy(ax, spec.payload)
        ax.set_title(spec.title)
    else:
        raise ValueError(f"unknown figure kind {spec.kind!r}")
    fig.tight_layout()
    fig.savefig(path, dpi=_FIGURE_DPI, metadata={"Software": None})
    plt.close(fig)


# --------------------------------------------------------------------------
# Orchestrated output writing

@dataclass(frozen=True)
class WrittenOutputs:
    """Paths produced by :func:`write_outputs` (manifest last)."""

    directory: Path
    files: tuple
    manifest: Path


def write_outputs(out_dir: Union[str, Path], result: ScenarioResult,
                  plan: ExperimentPlan, *,
                  config_path: Optional[str] = None,
                  version: str = "0",
                  figures: bool = True) -> WrittenOutputs:
    """Write every scenario output plus the run manifest into ``out_dir``.

    CSV tables, ``summary.json``, the resolved configuration snapshot, and
    PNG figures are byte-stable; ``manifest.json`` carries timestamps and
    checksums of all the other files.
    """
    started = datetime.now(timezone.utc)
    directory = Path(out_dir)
    directory.mkdir(parents=True, exist_ok=True)

    written: List[Path] = []
    for table in result.tables:
        path = directory / f"{table.name}.csv"
        path.write_text(table_csv_text(table), encoding="utf-8", newline="")
        written.append(path)

    summary_path = directory / "summary.json"
    summary_path.write_text(summary_json_text(result.summary),
                            encoding="utf-8")
    written.append(summary_path)

    resolved_path = directory / "resolved_config.yaml"
    save_config(plan, resolved_path)
    written.append(resolved_path)

    if figures:
        for spec in result.figures:
            figure_path = directory / f"{spec.name}.png"
            render_figure(spec, figure_path)
            written.append(figure_path)

    finished = datetime.now(timezone.utc)
    manifest = {
        "scenario": result.name,
        "config_path": config_path,
        "seed": plan.run.seed,
        "output_directory": str(directory),
        "tool_version": version,
        "started_utc": started.isoformat(),
        "finished_utc": finished.isoformat(),
        "files": {path.name: sha256_of_file(path) for path in written},
    }
    manifest_path = directory / "manifest.json"
    manifest_path.write_text(
        json.dumps(manifest, sort_keys=True, indent=2) + "\n",
        encoding="utf-8")
    return WrittenOutputs(directory=directory,
                          files=tuple(written), manifest=manifest_path)
