"""CSV ingestion and serialisation.

Panels travel as CSV in two layouts:

* wide — one row per site, one column per time.  With a header, the first
  row holds time labels (its first cell is ignored) and the first column
  holds site labels.
* long — (site, time, value) triples that must assemble into a complete
  rectangle; row order fixes the site and time ordering by first
  appearance.

Numbers are written with 17 significant digits so write/load round-trips
are bit-exact.  All writes go through a temp-file-then-rename so partial
files never appear.  JSON documents are rendered by a small local
serialiser to keep float formatting and key order under our control.
"""

from __future__ import annotations

import csv
import hashlib
import math
import os
import tempfile
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import ValidationError
from .moments import Panel

LAYOUTS = ("wide", "long")


@dataclass(frozen=True)
class DatasetFile:
    """A panel on disk and how to parse it."""

    path: str
    layout: str = "wide"
    delimiter: str = ","
    header: bool = True

    def __post_init__(self):
        if self.layout not in LAYOUTS:
            raise ValidationError(f"layout must be one of {LAYOUTS}, got {self.layout!r}")


def fmt(x: float) -> str:
    """17-significant-digit text form; lossless for doubles."""
    return format(float(x), ".17g")


def _parse_value(text: str, where: str) -> float:
    try:
        v = float(text)
    except ValueError:
        raise ValidationError(f"unparseable value {text!r} at {where}") from None
    if not math.isfinite(v):
        raise ValidationError(f"non-finite value {text!r} at {where}")
    if v < 0:
        raise ValidationError(f"negative value {text!r} at {where}")
    return v


def _read_rows(file: DatasetFile) -> list[list[str]]:
    with open(file.path, newline="") as fh:
        rows = [row for row in csv.reader(fh, delimiter=file.delimiter) if row]
    if not rows:
        raise ValidationError(f"{file.path}: empty file")
    return rows


def _load_wide(rows: list[list[str]], file: DatasetFile) -> Panel:
    time_labels = None
    site_labels = None
    if file.header:
        time_labels = [c.strip() for c in rows[0][1:]]
        rows = rows[1:]
        site_labels = []
    width = len(rows[0])
    values = []
    for i, row in enumerate(rows):
        if len(row) != width:
            raise ValidationError(
                f"{file.path}: ragged wide row {i + 1} has {len(row)} cells, expected {width}")
        cells = row
        if file.header:
            site_labels.append(cells[0].strip())
            cells = cells[1:]
        values.append([
            _parse_value(c, f"row {i + 1}, column {k + 1}") for k, c in enumerate(cells)
        ])
    return Panel(np.asarray(values, dtype=np.float64), site_labels, time_labels)


def _load_long(rows: list[list[str]], file: DatasetFile) -> Panel:
    if file.header:
        head = [c.strip().lower() for c in rows[0]]
        try:
            cols = (head.index("site"), head.index("time"), head.index("value"))
        except ValueError:
            raise ValidationError(
                f"{file.path}: long layout needs site, time, value columns, got {head}"
            ) from None
        rows = rows[1:]
    else:
        cols = (0, 1, 2)
    sites: list[str] = []
    times: list[str] = []
    site_pos: dict[str, int] = {}
    time_pos: dict[str, int] = {}
    triples: dict[tuple[int, int], float] = {}
    for i, row in enumerate(rows):
        if len(row) <= max(cols):
            raise ValidationError(f"{file.path}: short row {i + 1}: {row}")
        s, t = row[cols[0]].strip(), row[cols[1]].strip()
        v = _parse_value(row[cols[2]], f"row {i + 1} (site {s}, time {t})")
        if s not in site_pos:
            site_pos[s] = len(sites)
            sites.append(s)
        if t not in time_pos:
            time_pos[t] = len(times)
            times.append(t)
        key = (site_pos[s], time_pos[t])
        if key in triples:
            raise ValidationError(f"{file.path}: duplicate cell (site {s}, time {t})")
        triples[key] = v
    missing = [(sites[j], times[t])
               for j in range(len(sites)) for t in range(len(times))
               if (j, t) not in triples]
    if missing:
        shown = ", ".join(f"(site {s}, time {t})" for s, t in missing[:5])
        raise ValidationError(
            f"{file.path}: incomplete rectangle, {len(missing)} missing cells: {shown}")
    values = np.empty((len(sites), len(times)))
    for (j, t), v in triples.items():
        values[j, t] = v
    return Panel(values, sites, times)


def load_csv(file: DatasetFile) -> Panel:
    """Read a panel, rejecting negatives, gaps, and ragged rows."""
    rows = _read_rows(file)
    if file.layout == "wide":
        return _load_wide(rows, file)
    return _load_long(rows, file)


def atomic_write_text(path: str, text: str):
    """Write via a temporary file in the same directory, then rename."""
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=".part")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_panel_csv(panel: Panel, path: str, layout: str = "wide", delimiter: str = ","):
    """Serialise a panel; labelled panels get a header, unlabelled do not."""
    if layout not in LAYOUTS:
        raise ValidationError(f"layout must be one of {LAYOUTS}, got {layout!r}")
    n, T = panel.values.shape
    sites = panel.site_labels or [f"site{j}" for j in range(n)]
    times = panel.time_labels or [f"time{t}" for t in range(T)]
    labelled = panel.site_labels is not None or panel.time_labels is not None
    lines = []
    if layout == "wide":
        if labelled:
            lines.append(delimiter.join(["site"] + list(times)))
        for j in range(n):
            cells = [fmt(v) for v in panel.values[j]]
            if labelled:
                cells = [sites[j]] + cells
            lines.append(delimiter.join(cells))
    else:
        lines.append(delimiter.join(["site", "time", "value"]))
        for j in range(n):
            for t in range(T):
                lines.append(delimiter.join([sites[j], times[t], fmt(panel.values[j, t])]))
    atomic_write_text(path, "\n".join(lines) + "\n")


def write_csv_table(
    path: str,
    header: Sequence[str],
    rows: Iterable[Sequence],
    provenance: Mapping | None = None,
):
    """Write a CSV table, optionally preceded by one '# provenance' comment line."""
    lines = []
    if provenance is not None:
        lines.append("# provenance " + json_dumps(provenance))
    lines.append(",".join(header))
    for row in rows:
        lines.append(",".join(
            fmt(c) if isinstance(c, (float, np.floating)) else str(c) for c in row))
    atomic_write_text(path, "\n".join(lines) + "\n")


def sha256_of_file(path: str) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            digest.update(chunk)
    return digest.hexdigest()


def _json_escape(s: str) -> str:
    out = []
    for ch in s:
        if ch == '"':
            out.append('\\"')
        elif ch == "\\":
            out.append("\\\\")
        elif ord(ch) < 0x20:
            out.append(f"\\u{ord(ch):04x}")
        else:
            out.append(ch)
    return "".join(out)


def json_dumps(obj, indent: int = 0, _level: int = 0) -> str:
    """Minimal JSON writer: insertion-ordered keys, 17-digit floats.

    Non-finite floats are rendered as null; callers flag degeneracy
    explicitly in their documents.
    """
    pad = " " * (indent * (_level + 1)) if indent else ""
    end_pad = " " * (indent * _level) if indent else ""
    sep = ",\n" if indent else ", "
    if obj is None:
        return "null"
    if isinstance(obj, bool):
        return "true" if obj else "false"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return fmt(v) if math.isfinite(v) else "null"
    if isinstance(obj, str):
        return f'"{_json_escape(obj)}"'
    if isinstance(obj, Mapping):
        if not obj:
            return "{}"
        items = [
            f'{pad}"{_json_escape(str(k))}": {json_dumps(v, indent, _level + 1)}'
            for k, v in obj.items()
        ]
        open_brace = "{\n" if indent else "{"
        close = ("\n" + end_pad + "}") if indent else "}"
        return open_brace + sep.join(items) + close
    if isinstance(obj, (list, tuple, np.ndarray)):
        seq = list(obj)
        if not seq:
            return "[]"
        items = [pad + json_dumps(v, indent, _level + 1) for v in seq]
        open_brk = "[\n" if indent else "["
        close = ("\n" + end_pad + "]") if indent else "]"
        return open_brk + sep.join(items) + close
    raise TypeError(f"cannot serialise {type(obj)!r}")
