"""Machine-readable outputs: delimited tables, JSON summaries, figures.

CSV uses '.' decimals and repr-precision floats so reruns with the same
resolved configuration are byte-identical.  Every JSON document names its
schema and validates against it before being written.
"""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from . import __version__
from .schemas import SCHEMAS

__all__ = [
    "format_float",
    "write_csv",
    "write_json",
    "validate_schema",
    "render_figure",
]


def format_float(x) -> str:
    if x is None:
        return ""
    if isinstance(x, float):
        if math.isnan(x):
            return "nan"
        return repr(x)
    return str(x)


def write_csv(path, header: list[str], rows: list[list]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([format_float(x) for x in row])
    return path


def validate_schema(obj: dict, schema_name: str) -> None:
    """Minimal structural validation against the published schema."""
    schema = SCHEMAS[schema_name]
    _check(obj, schema, schema_name)


def _check(obj, schema, where):
    t = schema.get("type")
    if t == "object":
        if not isinstance(obj, dict):
            raise ValueError(f"{where}: expected object, got {type(obj).__name__}")
        for key in schema.get("required", []):
            if key not in obj:
                raise ValueError(f"{where}: missing required key {key!r}")
        for key, sub in schema.get("properties", {}).items():
            if key in obj and obj[key] is not None:
                _check(obj[key], sub, f"{where}.{key}")
    elif t == "array":
        if not isinstance(obj, list):
            raise ValueError(f"{where}: expected array")
        items = schema.get("items")
        if items:
            for i, el in enumerate(obj):
                _check(el, items, f"{where}[{i}]")
    elif t == "number":
        if not isinstance(obj, (int, float)) or isinstance(obj, bool):
            raise ValueError(f"{where}: expected number, got {obj!r}")
    elif t == "integer":
        if not isinstance(obj, int) or isinstance(obj, bool):
            raise ValueError(f"{where}: expected integer, got {obj!r}")
    elif t == "string":
        if not isinstance(obj, str):
            raise ValueError(f"{where}: expected string, got {obj!r}")
    elif t == "boolean":
        if not isinstance(obj, bool):
            raise ValueError(f"{where}: expected boolean, got {obj!r}")


def write_json(path, obj: dict, schema_name: str) -> Path:
    obj = dict(obj)
    obj.setdefault("version", __version__)
    obj.setdefault("schema", schema_name)
    validate_schema(obj, schema_name)
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True, allow_nan=False)
        fh.write("\n")
    return path


# ---------------------------------------------------------------------------
# figures: one renderer per report kind, written next to the CSV


def render_figure(kind: str, path, data: dict) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig, ax = plt.subplots(figsize=(6.0, 4.2))
    if kind == "sweep":
        g = data["gamma"]
        ax.set_xscale("log")
        ax.plot(g, data["gammaD_spectral"], "o-", label="spectral")
        mc = data.get("gammaD_mc")
        if mc and any(m is not None for m in mc):
            ax.errorbar(
                g, [m if m is not None else math.nan for m in mc],
                yerr=[c if c is not None else 0 for c in data.get("gammaD_ci", [0] * len(g))],
                fmt="s", label="Monte Carlo", alpha=0.8,
            )
        ax.axhline(data["dstar"], color="C3", ls="--", label="small-friction limit")
        ax.axhline(data["dbar"], color="C2", ls=":", label="overdamped limit")
        ax.plot(g, [gi * e for gi, e in zip(g, data["expansion"])], "-.",
                color="C4", label="large-friction expansion")
        ax.set_xlabel("friction")
        ax.set_ylabel("gamma * D")
        ax.legend(fontsize=8)
    elif kind == "mc":
        t = data["t"]
        ax.plot(t, data["msd_over_2t"], label="MSD / 2t")
        ax.axhline(data["D"], color="C3", ls="--", label="fitted D")
        ax.set_xlabel("time")
        ax.set_ylabel("MSD / 2t")
        ax.legend(fontsize=8)
    elif kind == "fw":
        for eid in sorted(set(data["edge_id"])):
            sel = [i for i, e in enumerate(data["edge_id"]) if e == eid]
            ax.plot([data["z"][i] for i in sel], [data["T"][i] for i in sel],
                    label=f"T, edge {eid}")
            ax.plot([data["z"][i] for i in sel], [data["S"][i] for i in sel],
                    "--", label=f"S, edge {eid}")
        ax.set_xlabel("energy")
        ax.set_ylabel("period T, action S")
        ax.legend(fontsize=7)
    elif kind == "graph-sim":
        ax.plot(data["t"], data["var_qstar"], label="var q*")
        ax.plot(data["t"], [2.0 * data["D"] * ti for ti in data["t"]], "--",
                label="2 D t")
        ax.set_xlabel("time")
        ax.set_ylabel("variance")
        ax.legend(fontsize=8)
    elif kind == "gap":
        ax.semilogx(data["gamma"], data["gap"], "o-")
        ax.set_xlabel("friction")
        ax.set_ylabel("spectral gap")
    else:
        raise ValueError(f"unknown figure kind {kind!r}")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path
