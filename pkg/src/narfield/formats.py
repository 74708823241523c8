"""File formats: panel and profile CSVs, raw statistic dumps and JSON reports.

Floats are written with 17 significant digits, which round-trips every IEEE
double exactly.
"""

from pathlib import Path
from typing import Iterable, Optional, Tuple
import csv
import io
import json
import math

import numpy as np

from .dependence import DecayProfile
from .errors import DomainError, ParseError
from .nar_model import Panel
from .seeding import SCHEME_ID

TOOL_NAME = "narfield"
TOOL_VERSION = "0.1.0"
VERDICTS = ("PASS", "FAIL", "FLAGGED")


def fmt(x: float) -> str:
    return "%.17g" % x


def eps_path_for(path) -> Path:
    """Sibling path holding the innovations of a panel CSV."""
    p = Path(path)
    return p.with_name(p.stem + "_eps" + p.suffix)


def panel_to_csv(panel: Panel) -> Tuple[str, Optional[str]]:
    """Render ``(panel_csv, eps_csv)``; the second is ``None`` without stored innovations."""
    m = panel.m
    out = io.StringIO()
    out.write(",".join(["i", "t", "y"] + [f"z{k + 1}" for k in range(m)]) + "\n")
    for i in range(panel.N):
        z = [fmt(v) for v in panel.Z[i]]
        for t in range(panel.T + 1):
            out.write(",".join([str(i + 1), str(t), fmt(panel.y[i, t])] + z) + "\n")
    eps = None
    if panel.eps is not None:
        e = io.StringIO()
        e.write("i,t,eps\n")
        for i in range(panel.N):
            for t in range(1, panel.T + 1):
                e.write(f"{i + 1},{t},{fmt(panel.eps[i, t - 1])}\n")
        eps = e.getvalue()
    return out.getvalue(), eps


def write_panel_csv(panel: Panel, path, eps_path=None) -> Optional[Path]:
    """Write a panel and, if stored, its innovations; returns the innovation path."""
    text, eps = panel_to_csv(panel)
    Path(path).write_text(text)
    if eps is None:
        return None
    target = Path(eps_path) if eps_path is not None else eps_path_for(path)
    target.write_text(eps)
    return target


def _read_rows(text: str, required):
    reader = csv.reader(io.StringIO(text))
    try:
        header = [h.strip() for h in next(reader)]
    except StopIteration:
        raise ParseError("empty file", 1) from None
    if header[:len(required)] != list(required):
        raise ParseError(f"expected header starting {','.join(required)}, got {','.join(header)}", 1)
    rows = []
    for lineno, row in enumerate(reader, start=2):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != len(header):
            raise ParseError(f"expected {len(header)} fields, got {len(row)}", lineno)
        try:
            rows.append((lineno, int(row[0]), int(row[1]), [float(c) for c in row[2:]]))
        except ValueError as exc:
            raise ParseError(f"bad number ({exc})", lineno) from None
    return header, rows


def read_panel_csv(path, eps_path=None) -> Panel:
    """Read a panel CSV; innovations are loaded from ``eps_path`` or the sibling file if present."""
    header, rows = _read_rows(Path(path).read_text(), ("i", "t", "y"))
    bad = [h for h in header[3:] if not (h.startswith("z") and h[1:].isdigit())]
    if bad:
        raise ParseError(f"unexpected column {bad[0]!r}", 1)
    if not rows:
        raise ParseError("panel has no data rows", 2)
    N = max(r[1] for r in rows)
    T = max(r[2] for r in rows)
    m = len(header) - 3
    y = np.full((N, T + 1), np.nan)
    Z = np.full((N, m), np.nan)
    for lineno, i, t, vals in rows:
        if not (1 <= i <= N and 0 <= t <= T):
            raise ParseError(f"site ({i}, {t}) outside 1..N x 0..T", lineno)
        if not math.isnan(y[i - 1, t]):
            raise ParseError(f"duplicate site ({i}, {t})", lineno)
        y[i - 1, t] = vals[0]
        if m:
            if np.all(np.isnan(Z[i - 1])):
                Z[i - 1] = vals[1:]
            elif not np.array_equal(Z[i - 1], vals[1:]):
                raise ParseError(f"covariates of node {i} vary over time", lineno)
    if np.isnan(y).any():
        i, t = np.argwhere(np.isnan(y))[0]
        raise DomainError(f"panel is missing site ({i + 1}, {t})")
    eps = None
    epath = Path(eps_path) if eps_path is not None else eps_path_for(path)
    if eps_path is not None or epath.exists():
        _, erows = _read_rows(epath.read_text(), ("i", "t", "eps"))
        eps = np.full((N, T), np.nan)
        for lineno, i, t, vals in erows:
            if not (1 <= i <= N and 1 <= t <= T):
                raise ParseError(f"innovation site ({i}, {t}) outside 1..N x 1..T", lineno)
            eps[i - 1, t - 1] = vals[0]
        if np.isnan(eps).any():
            raise DomainError("innovation file does not cover every site")
    return Panel(y, Z, eps)


def profile_to_csv(profile: DecayProfile) -> str:
    out = ["s,value,stderr"]
    for k, (s, v) in enumerate(zip(profile.grid, profile.values)):
        se = "" if profile.stderr is None else fmt(profile.stderr[k])
        s_txt = str(int(s)) if float(s).is_integer() else fmt(s)
        out.append(f"{s_txt},{fmt(v)},{se}")
    return "\n".join(out) + "\n"


def write_profile_csv(profile: DecayProfile, path) -> None:
    Path(path).write_text(profile_to_csv(profile))


def read_profile_csv(path, kind: str) -> DecayProfile:
    lines = Path(path).read_text().splitlines()
    if not lines or lines[0].strip() != "s,value,stderr":
        raise ParseError("expected header s,value,stderr", 1)
    grid, values, errs = [], [], []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        parts = line.split(",")
        if len(parts) != 3:
            raise ParseError("expected 3 fields", lineno)
        try:
            grid.append(float(parts[0]))
            values.append(float(parts[1]))
            errs.append(float(parts[2]) if parts[2].strip() else None)
        except ValueError as exc:
            raise ParseError(f"bad number ({exc})", lineno) from None
    stderr = None if all(e is None for e in errs) else np.array([np.nan if e is None else e for e in errs])
    return DecayProfile(np.array(grid), np.array(values), kind, stderr)


def write_raw_csv(rows: Iterable[Tuple[int, int, int, float]], path) -> None:
    with open(path, "w") as fh:
        fh.write("size_index,rep,component,value\n")
        for si, rep, comp, val in rows:
            fh.write(f"{si},{rep},{comp},{fmt(val)}\n")


# ---------------------------------------------------------------------------
# JSON with fixed 17-digit floats


def _encode(obj, indent: int, level: int) -> str:
    pad = " " * (indent * (level + 1))
    end = " " * (indent * level)
    if obj is None or obj is True or obj is False:
        return json.dumps(obj)
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        # JSON has no encoding for non-finite numbers
        return fmt(x) if math.isfinite(x) else "null"
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, np.ndarray):
        return _encode(obj.tolist(), indent, level)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {_encode(v, indent, level + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        if all(not isinstance(v, (dict, list, tuple, np.ndarray)) for v in obj):
            return "[" + ", ".join(_encode(v, indent, level + 1) for v in obj) + "]"
        items = [pad + _encode(v, indent, level + 1) for v in obj]
        return "[\n" + ",\n".join(items) + "\n" + end + "]"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def dumps(obj, indent: int = 2) -> str:
    return _encode(obj, indent, 0) + "\n"


def build_report(command: str, config: dict, metrics: dict, verdict: str,
                 master_seed: Optional[int] = None) -> dict:
    if verdict not in VERDICTS:
        raise DomainError(f"verdict must be one of {VERDICTS}")
    return {
        "tool": TOOL_NAME,
        "tool_version": TOOL_VERSION,
        "command": command,
        "config": config,
        "metrics": metrics,
        "verdict": verdict,
        "provenance": {"master_seed": master_seed, "seed_scheme": SCHEME_ID},
    }


def emit_report(report: dict, path) -> None:
    """Write a report as JSON; the parent directory must exist."""
    p = Path(path)
    if not p.parent.exists():
        raise OSError(f"directory {p.parent} does not exist")
    p.write_text(dumps(report))


def load_report(path) -> dict:
    return json.loads(Path(path).read_text())
