"""Tabular experiment records with a deterministic CSV and a JSON twin."""

from __future__ import annotations

import csv
import io
import json
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

import numpy as np


def default_threads():
    try:
        return max(1, int(os.environ.get("CURVLAB_THREADS", "1")))
    except ValueError:
        return 1


def parallel_map(fn, items, threads=None):
    """``list(map(fn, items))`` on a thread pool; order is preserved."""
    items = list(items)
    threads = default_threads() if threads is None else max(1, int(threads))
    if threads == 1 or len(items) <= 1:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return "PASS" if v else "FAIL"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if np.isnan(v):
            return ""
        return format(v, ".12g")
    return str(v)


def _jsonable(v):
    if isinstance(v, (np.bool_,)):
        return bool(v)
    if isinstance(v, np.integer):
        return int(v)
    if isinstance(v, np.floating):
        v = float(v)
    if isinstance(v, float) and not np.isfinite(v):
        return None if np.isnan(v) else ("inf" if v > 0 else "-inf")
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, np.ndarray):
        return _jsonable(v.tolist())
    return v


@dataclass
class ExperimentReport:
    """Rows of a convergence / decay / comparison experiment.

    ``checks`` maps assertion names to booleans; the report passes when all
    of them hold. ``summary`` carries derived scalars (limits, exponents).
    """

    name: str
    columns: list
    rows: list = field(default_factory=list)
    checks: dict = field(default_factory=dict)
    summary: dict = field(default_factory=dict)
    config: dict = field(default_factory=dict)

    def add_row(self, *values, **named):
        if named:
            values = tuple(named.get(c, float("nan")) for c in self.columns)
        if len(values) != len(self.columns):
            raise ValueError("row length does not match the columns")
        self.rows.append(tuple(values))

    def column(self, name):
        k = self.columns.index(name)
        return [r[k] for r in self.rows]

    @property
    def passed(self):
        return all(bool(v) for v in self.checks.values())

    def csv_text(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.columns)
        for r in self.rows:
            w.writerow([_fmt(v) for v in r])
        return buf.getvalue()

    def to_dict(self, timestamp=True):
        d = {
            "name": self.name,
            "columns": list(self.columns),
            "rows": [_jsonable(list(r)) for r in self.rows],
            "checks": _jsonable(self.checks),
            "summary": _jsonable(self.summary),
            "config": _jsonable(self.config),
            "passed": self.passed,
        }
        if timestamp:
            d["created"] = datetime.now(timezone.utc).isoformat(timespec="seconds")
        return d

    def write(self, outdir, stem=None):
        """Write ``<stem>.csv`` and ``<stem>.json``; returns both paths."""
        outdir = Path(outdir)
        outdir.mkdir(parents=True, exist_ok=True)
        stem = stem or self.name
        p_csv = outdir / f"{stem}.csv"
        p_json = outdir / f"{stem}.json"
        p_csv.write_text(self.csv_text())
        p_json.write_text(json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n")
        return p_csv, p_json

    def __str__(self):
        lines = [f"# {self.name}", ",".join(self.columns)]
        lines += [",".join(_fmt(v) for v in r) for r in self.rows]
        for k, v in self.checks.items():
            lines.append(f"{k}: {'PASS' if v else 'FAIL'}")
        return "\n".join(lines)
