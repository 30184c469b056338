"""Report envelopes, delimited tables and figure rendering.

Every command writes a JSON report with a deterministic body (same config,
same bytes, wall time aside); profile-style results additionally get a CSV
table ready for plotting, and the `report` command renders the figures
next to the CSV.
"""

from __future__ import annotations

import csv
import hashlib
import json
import os
import tempfile
import time

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .errors import InputError


def atomic_write_text(path: str, text: str):
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def config_hash(config: dict) -> str:
    blob = json.dumps(config, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


def jsonable(obj):
    """Recursively convert numpy scalars/arrays so json.dumps accepts them."""
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if hasattr(obj, "item") and not isinstance(obj, (str, bytes)):
        try:
            return obj.item()
        except (AttributeError, ValueError):
            pass
    if hasattr(obj, "tolist"):
        return obj.tolist()
    return obj


def make_report(command: str, config: dict, results: dict, started: float, seed=None) -> dict:
    from . import __version__

    return {
        "command": command,
        "provenance": {
            "seed": seed,
            "version": __version__,
            "config_hash": config_hash(jsonable(config)),
        },
        "config": jsonable(config),
        "results": jsonable(results),
        "wall_time_s": round(time.time() - started, 6),
    }


def write_report(report: dict, path: str):
    atomic_write_text(path, json.dumps(report, indent=2, sort_keys=True) + "\n")


def load_report(path: str) -> dict:
    try:
        with open(path) as fh:
            return json.load(fh)
    except FileNotFoundError:
        raise InputError(f"report not found: {path}")
    except json.JSONDecodeError as exc:
        raise InputError(f"malformed JSON in {path}: line {exc.lineno} col {exc.colno}")


# -- delimited tables ---------------------------------------------------------


PROFILE_FIELDS = ("member", "R", "S", "f", "witness_size", "exact")


def profile_rows_to_csv(rows, path: str):
    """Rows from a refutation report, one line per (member, R, S) cell."""
    out = []
    for row in rows:
        out.append(
            {
                "member": row["member"] if isinstance(row, dict) else row.member,
                "R": row["R"] if isinstance(row, dict) else row.radius,
                "S": row["S"] if isinstance(row, dict) else row.scale,
                "f": row["f"] if isinstance(row, dict) else row.value,
                "witness_size": row["witness_size"] if isinstance(row, dict) else len(row.witness),
                "exact": row["exact"] if isinstance(row, dict) else row.exact,
            }
        )
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=PROFILE_FIELDS)
        writer.writeheader()
        writer.writerows(out)


def read_profile_csv(path: str):
    try:
        with open(path, newline="") as fh:
            return [
                {
                    "member": r["member"],
                    "R": int(r["R"]),
                    "S": int(r["S"]),
                    "f": float(r["f"]),
                    "witness_size": int(r["witness_size"]),
                    "exact": r["exact"] in ("True", "true", "1"),
                }
                for r in csv.DictReader(fh)
            ]
    except FileNotFoundError:
        raise InputError(f"table not found: {path}")
    except (KeyError, ValueError) as exc:
        raise InputError(f"malformed profile table {path}: {exc}")


# -- figures --------------------------------------------------------------------


def render_profile_figure(rows, path: str, fitted_base=None):
    """f(R) per scale S, one line per (member, S) series, log-scaled values."""
    series = {}
    for r in rows:
        key = (r["member"], r["S"])
        series.setdefault(key, []).append((r["R"], r["f"]))
    if not series:
        raise InputError("nothing to plot")
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    for (member, s), pts in sorted(series.items()):
        pts.sort()
        ax.plot(
            [p[0] for p in pts],
            [p[1] for p in pts],
            marker="o",
            label=f"{member}, S={s}",
        )
    ax.set_xlabel("R")
    ax.set_ylabel("minimal boundary ratio f(R, S)")
    if any(p[1] > 0 for pts in series.values() for p in pts):
        ax.set_yscale("symlog", linthresh=1e-3)
    title = "boundary-ratio profile"
    if fitted_base is not None:
        title += f" (fitted base {fitted_base:.3g})"
    ax.set_title(title)
    ax.legend(fontsize=8)
    fig.tight_layout()
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def render_decay_figure(rows, path: str):
    """f against member size at fixed (R, S): the decay view of a profile.
    Needs rows carrying a member_size field; returns None otherwise."""
    if not rows or "member_size" not in rows[0]:
        return None
    series = {}
    for r in rows:
        series.setdefault((r["R"], r["S"]), []).append((r["member_size"], r["f"]))
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    for (radius, s), pts in sorted(series.items()):
        pts.sort()
        ax.plot([p[0] for p in pts], [p[1] for p in pts], marker="s", label=f"R={radius}, S={s}")
    ax.set_xlabel("member size")
    ax.set_ylabel("f")
    ax.set_title("profile across members")
    ax.legend(fontsize=8)
    fig.tight_layout()
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def render_cube_figure(rows, path: str):
    """Minimal witness diameter against the power: the growth table view."""
    pts = [(r["power"], r["min_diameter"]) for r in rows if r["min_diameter"] is not None]
    if not pts:
        raise InputError("nothing to plot")
    fig, ax = plt.subplots(figsize=(5.0, 3.5))
    pts.sort()
    ax.plot([p[0] for p in pts], [p[1] for p in pts], marker="o")
    ax.set_xlabel("power n")
    ax.set_ylabel("minimal witness diameter")
    ax.set_title("cube-power witness diameters")
    fig.tight_layout()
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path
