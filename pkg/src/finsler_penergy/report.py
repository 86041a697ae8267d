"""Machine-readable run reports: atomic JSON/CSV writers.

Reports are deterministic for a fixed config and seed: keys are sorted,
floats carry their full repr, and wall-clock data stays inside the single
``timings`` object so consumers can strip it before comparing runs.
Files are written to a temporary sibling and renamed into place, so a
failing run never leaves a partial report behind.
"""

from __future__ import annotations

import csv
import json
import os
import tempfile

SCHEMA_VERSION = 1


def _atomic_write(path: str, writer) -> None:
    directory = os.path.dirname(os.path.abspath(path)) or "."
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            writer(fh)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_json_report(path: str, payload: dict) -> None:
    def writer(fh):
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")

    _atomic_write(path, writer)


def write_csv_rows(path: str, rows: list, fieldnames: list) -> None:
    def writer(fh):
        out = csv.DictWriter(fh, fieldnames=fieldnames, extrasaction="ignore")
        out.writeheader()
        for row in rows:
            out.writerow({k: _csv_cell(row.get(k)) for k in fieldnames})

    _atomic_write(path, writer)


def _csv_cell(value):
    if isinstance(value, float):
        return "%.15g" % value
    if isinstance(value, (list, tuple)):
        return ";".join(str(v) for v in value)
    return value


def run_report(command: str, config_values: dict, results, timings: dict) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "command": command,
        "config": dict(sorted(config_values.items())),
        "results": results,
        "timings": timings,
    }


def report_paths(out_path: str, fmt: str) -> dict:
    """Derived artifact paths for a report base path."""
    base, ext = os.path.splitext(out_path)
    if ext.lower() not in (".json", ".csv"):
        base = out_path
    report = base + (".json" if fmt == "json" else ".csv")
    return {
        "base": base,
        "report": report,
        "curve_csv": base + ".curve.csv",
        "table_csv": base + ".table.csv",
        "figure": base + ".png",
    }
