"""On-disk formats for traces and heatmaps, plus the policy hash."""

from __future__ import annotations

import csv
import math
from pathlib import Path

import numpy as np

from .mfpt import ReachabilityLandscape, clip_landscape
from .solvers import ConvergenceTrace, IterationRecord

TRACE_COLUMNS = ["iteration", "delta", "cumulative_ms", "bellman_ms", "pe_ms", "pi_ms", "mfpt_ms", "sort_ms"]
TIMING_COLUMNS = TRACE_COLUMNS[2:]

_FIELD_FOR = {
    "cumulative_ms": "cumulative_ms",
    "bellman_ms": "bellman_ms",
    "pe_ms": "policy_evaluation_ms",
    "pi_ms": "policy_improvement_ms",
    "mfpt_ms": "mfpt_ms",
    "sort_ms": "sort_ms",
}

FNV_OFFSET = 0xCBF29CE484222325
FNV_PRIME = 0x100000001B3


def policy_hash(policy) -> int:
    """64-bit FNV-1a over the actions, each fed as 4 little-endian bytes."""
    h = FNV_OFFSET
    for byte in np.asarray(policy, dtype="<u4").tobytes():
        h ^= byte
        h = (h * FNV_PRIME) & 0xFFFFFFFFFFFFFFFF
    return h


def _num(x: float) -> str:
    return repr(float(x)) if not float(x).is_integer() else str(int(x))


def write_trace_csv(trace: ConvergenceTrace, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(TRACE_COLUMNS)
        for r in trace.records:
            w.writerow([r.iteration, _num(r.delta)] + [f"{getattr(r, _FIELD_FOR[c]):.3f}" for c in TIMING_COLUMNS])


def read_trace_csv(path) -> list[IterationRecord]:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    return [
        IterationRecord(int(row["iteration"]), float(row["delta"]),
                        *(float(row[c]) for c in TIMING_COLUMNS))
        for row in rows
    ]


def landscape_pixels(landscape: ReachabilityLandscape, clip: float = 100.0) -> np.ndarray:
    """Gray levels ``round(255 * clipped_mu / clip)``, halves rounded up."""
    clipped = clip_landscape(landscape, clip)
    return np.floor(255.0 * clipped / clip + 0.5).astype(np.int64)


def write_pgm(pixels, path, maxval: int = 255) -> None:
    """Plain (P2) PGM; ``pixels`` is a ``(height, width)`` integer array."""
    img = np.asarray(pixels, dtype=np.int64)
    h, w = img.shape
    lines = ["P2", f"{w} {h}", str(maxval)]
    lines += [" ".join(str(int(v)) for v in row) for row in img]
    Path(path).write_text("\n".join(lines) + "\n")


def read_pgm(path) -> np.ndarray:
    tokens = []
    for line in Path(path).read_text().splitlines():
        tokens += line.split("#", 1)[0].split()
    if not tokens or tokens[0] != "P2":
        raise ValueError("not a plain PGM file")
    w, h, maxval = (int(t) for t in tokens[1:4])
    data = np.array([int(t) for t in tokens[4:]], dtype=np.int64)
    if data.size != w * h or data.min(initial=0) < 0 or data.max(initial=0) > maxval:
        raise ValueError("malformed PGM pixel data")
    return data.reshape(h, w)


def write_policy(policy, path, action_names=None) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["state", "action", "action_name"])
        for s, a in enumerate(np.asarray(policy)):
            name = action_names[a] if action_names else ""
            w.writerow([s, int(a), name])


def ms(x: float) -> str:
    return f"{x:.3f}" if math.isfinite(x) else "nan"
