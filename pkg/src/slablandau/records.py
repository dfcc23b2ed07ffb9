"""Run records: diagnostic time series plus persistence formats.

A RunRecord holds a header (config echo, code version, grid hashes), the
diagnostic time series, a reports block, and optionally the final state. The
on-disk formats are deliberately minimal and deterministic:

  JSON   — canonical (sorted keys, fixed separators), so re-emitting a loaded
           record is byte-identical;
  CSV    — fixed column order, shortest round-trip float formatting (repr);
  binary — raw little-endian float64 snapshot with a small self-describing
           header (magic, version, shape);
  SVG    — line plots written directly, no plotting dependency.
"""

from __future__ import annotations

import hashlib
import json
import struct
from dataclasses import dataclass, field

import numpy as np

CODE_VERSION = "0.1.0"

SERIES_COLUMNS = ("t", "mass", "momentum1", "momentum2", "momentum3",
                  "energy", "H", "Linf_w", "L2_w", "Hstar",
                  "flux_wall0", "flux_wall1")

_MAGIC = b"SLBSNAP1"


@dataclass
class RunRecord:
    header: dict
    series: dict = field(default_factory=lambda: {c: [] for c in SERIES_COLUMNS})
    reports: dict = field(default_factory=dict)
    final_state: np.ndarray | None = None

    def append_row(self, row: dict):
        t = row["t"]
        ts = self.series["t"]
        if ts and t <= ts[-1]:
            raise ValueError("timestamps must be strictly increasing")
        for c in SERIES_COLUMNS:
            self.series[c].append(float(row[c]))

    def column(self, name: str) -> np.ndarray:
        return np.asarray(self.series[name], dtype=float)


def array_hash(a: np.ndarray) -> str:
    return hashlib.sha256(np.ascontiguousarray(a).tobytes()).hexdigest()[:16]


# ---------------------------------------------------------------------------
# JSON record file


def record_to_json(record: RunRecord) -> str:
    doc = {
        "header": record.header,
        "series": {c: record.series[c] for c in SERIES_COLUMNS},
        "reports": record.reports,
        "version": CODE_VERSION,
    }
    return json.dumps(doc, sort_keys=True, separators=(",", ":")) + "\n"


def emit_record(record: RunRecord, path: str):
    with open(path, "w") as fh:
        fh.write(record_to_json(record))
    if record.final_state is not None:
        write_snapshot(record.final_state, path + ".state.bin")


def load_record(path: str) -> RunRecord:
    with open(path) as fh:
        doc = json.load(fh)
    rec = RunRecord(header=doc["header"],
                    series={c: list(map(float, doc["series"][c]))
                            for c in SERIES_COLUMNS},
                    reports=doc["reports"])
    try:
        rec.final_state = read_snapshot(path + ".state.bin")
    except FileNotFoundError:
        pass
    return rec


# ---------------------------------------------------------------------------
# CSV time series


def emit_timeseries(record: RunRecord, path: str):
    lines = [",".join(SERIES_COLUMNS)]
    n = len(record.series["t"])
    for i in range(n):
        lines.append(",".join(repr(record.series[c][i]) for c in SERIES_COLUMNS))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def load_timeseries(path: str) -> dict:
    with open(path) as fh:
        lines = fh.read().strip().split("\n")
    cols = lines[0].split(",")
    out = {c: [] for c in cols}
    for line in lines[1:]:
        for c, tok in zip(cols, line.split(",")):
            out[c].append(float(tok))
    return out


# ---------------------------------------------------------------------------
# binary snapshot


def write_snapshot(a: np.ndarray, path: str):
    a = np.ascontiguousarray(a, dtype="<f8")
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(struct.pack("<I", a.ndim))
        fh.write(struct.pack(f"<{a.ndim}I", *a.shape))
        fh.write(a.tobytes())


def read_snapshot(path: str) -> np.ndarray:
    with open(path, "rb") as fh:
        magic = fh.read(len(_MAGIC))
        if magic != _MAGIC:
            raise ValueError(f"{path}: not a snapshot file")
        (ndim,) = struct.unpack("<I", fh.read(4))
        shape = struct.unpack(f"<{ndim}I", fh.read(4 * ndim))
        data = np.frombuffer(fh.read(), dtype="<f8")
    return data.reshape(shape)


# ---------------------------------------------------------------------------
# SVG plots


def _svg_path(xs, ys) -> str:
    toks = []
    for i, (x, y) in enumerate(zip(xs, ys)):
        toks.append(f"{'M' if i == 0 else 'L'}{x:.2f},{y:.2f}")
    return " ".join(toks)


def emit_plot(record: RunRecord, quantity: str, path: str,
              logy: bool = True, overlay=None, overlay_label: str = "envelope"):
    """Line plot of one series column vs t; optional overlay curve callable
    (e.g. a fitted decay law) drawn dashed."""
    t = record.column("t")
    y = record.column(quantity)
    keep = np.isfinite(y) & (y > 0 if logy else np.isfinite(y))
    t, y = t[keep], y[keep]
    if t.size == 0:
        raise ValueError(f"no plottable data in column {quantity!r}")
    W, H, pad = 640.0, 420.0, 50.0
    ty = np.log10(y) if logy else y
    curves = [(t, ty, "#1f6fb2", quantity, None)]
    if overlay is not None:
        ov = np.asarray(overlay(t), dtype=float)
        okeep = np.isfinite(ov) & (ov > 0 if logy else np.isfinite(ov))
        tov = np.log10(ov[okeep]) if logy else ov[okeep]
        curves.append((t[okeep], tov, "#b23a1f", overlay_label, "6,4"))
    ymin = min(float(np.min(c[1])) for c in curves)
    ymax = max(float(np.max(c[1])) for c in curves)
    if ymax == ymin:
        ymax = ymin + 1.0
    tmin, tmax = float(t[0]), float(t[-1])
    if tmax == tmin:
        tmax = tmin + 1.0

    def sx(v):
        return pad + (v - tmin) / (tmax - tmin) * (W - 2 * pad)

    def sy(v):
        return H - pad - (v - ymin) / (ymax - ymin) * (H - 2 * pad)

    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{W:.0f}" '
             f'height="{H:.0f}" viewBox="0 0 {W:.0f} {H:.0f}">',
             f'<rect width="{W:.0f}" height="{H:.0f}" fill="white"/>',
             f'<line x1="{pad}" y1="{H-pad}" x2="{W-pad}" y2="{H-pad}" '
             'stroke="black"/>',
             f'<line x1="{pad}" y1="{pad}" x2="{pad}" y2="{H-pad}" '
             'stroke="black"/>']
    for tc, yc, color, label, dash in curves:
        d = _svg_path([sx(v) for v in tc], [sy(v) for v in yc])
        dash_attr = f' stroke-dasharray="{dash}"' if dash else ""
        parts.append(f'<path d="{d}" fill="none" stroke="{color}" '
                     f'stroke-width="1.5"{dash_attr}/>')
    ylab = f"log10({quantity})" if logy else quantity
    parts.append(f'<text x="{W/2:.0f}" y="{H-12:.0f}" font-size="12" '
                 f'text-anchor="middle">t</text>')
    parts.append(f'<text x="14" y="{H/2:.0f}" font-size="12" '
                 f'text-anchor="middle" transform="rotate(-90 14 {H/2:.0f})">'
                 f'{ylab}</text>')
    for i, (_, _, color, label, _) in enumerate(curves):
        yleg = pad + 14 + 16 * i
        parts.append(f'<line x1="{W-pad-120:.0f}" y1="{yleg}" '
                     f'x2="{W-pad-96:.0f}" y2="{yleg}" stroke="{color}"/>')
        parts.append(f'<text x="{W-pad-90:.0f}" y="{yleg+4}" font-size="11">'
                     f'{label}</text>')
    parts.append("</svg>")
    with open(path, "w") as fh:
        fh.write("\n".join(parts) + "\n")
