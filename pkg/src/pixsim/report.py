"""CSV and aligned-text writers for traces, sweeps and comparison tables."""

from __future__ import annotations

import csv
import io
from pathlib import Path

import numpy as np


def fmt(v) -> str:
    """Scientific notation, 9 significant digits; empty for missing values."""
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, str):
        return v
    v = float(v)
    if np.isnan(v):
        return "nan"
    return f"{v:.8e}"


def write_csv(path, header, rows) -> Path:
    buf = io.StringIO(newline="")
    w = csv.writer(buf, lineterminator="\r\n")
    w.writerow(header)
    for row in rows:
        w.writerow([fmt(v) for v in row])
    path = Path(path)
    path.write_bytes(buf.getvalue().encode("utf-8"))
    return path


def _col_name(label: str) -> str:
    return label if label.startswith("i(") else f"v({label})"


def transient_table(tr):
    header = ["time_s"] + [_col_name(l) for l in tr.labels] + [f"x({m.lower()})" for m in tr.states]
    cols = [tr.time] + [tr.values[:, k] for k in range(tr.values.shape[1])] + list(tr.states.values())
    return header, zip(*cols)


def sweep_table(sw, nodes=None):
    labels = nodes or [l for l in sw.labels if not l.startswith("i(")]
    header = ["iph_A", "converged"] + [f"v_{l}" for l in labels]
    cols = [sw.values, sw.converged] + [sw.node(l) for l in labels]
    return header, zip(*cols)


def aligned(rows, header) -> str:
    table = [list(map(str, header))] + [[str(c) for c in r] for r in rows]
    widths = [max(len(r[k]) for r in table) for k in range(len(header))]
    lines = ["  ".join(c.rjust(w) if k else c.ljust(w) for k, (c, w) in enumerate(zip(r, widths)))
             for r in table]
    lines.insert(1, "  ".join("-" * w for w in widths))
    return "\n".join(lines)
