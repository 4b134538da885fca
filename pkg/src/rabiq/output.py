"""Plot-ready data files and the plain-text job configuration grammar.

CSV files start with a comment header::

    # rabiq-csv v1
    # generated: 2026-01-01T00:00:00Z
    # config: key=value          (one line per resolved setting)
    # tolerance: key=value       (fixed numerical tolerances)
    # meta: key=value            (derived quantities, e.g. histogram peaks)

followed by one column-name row and the data rows.  Numbers are written with
17 significant digits.  Only the ``generated`` line varies between runs of the
same configuration.  The JSON form carries the same content in one document.

Configuration files use the ``config:`` grammar without the ``# config:``
prefix: ``key = value`` per line, ``#`` starts a comment, keys are the long
flag names (``-`` and ``_`` are interchangeable), and list values are
whitespace separated.
"""

from __future__ import annotations

import csv
import datetime as _dt
import io
import json
import math
import os
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Sequence, TextIO

import numpy as np

from .model import DomainError

__all__ = [
    "CSV_SCHEMA",
    "JSON_SCHEMA",
    "JobConfig",
    "format_value",
    "parse_config_text",
    "write_table",
    "data_section",
]

CSV_SCHEMA = "rabiq-csv v1"
JSON_SCHEMA = "rabiq-json v1"


def format_value(v) -> str:
    """Text form of a cell: floats with 17 significant digits, ``nan``/``inf`` spelled out."""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, complex):
        return _complex_label(v)
    if isinstance(v, int):
        return str(v)
    if isinstance(v, float) or hasattr(v, "dtype"):
        x = float(v)
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return f"{x:.17g}"
    if v is None:
        return ""
    if isinstance(v, (list, tuple)):
        return " ".join(format_value(x) for x in v)
    return str(v)


def _complex_label(c: complex) -> str:
    if c.imag == 0:
        return str(int(c.real)) if float(c.real).is_integer() else f"{c.real:.17g}"
    if c.real == 0:
        im = int(c.imag) if float(c.imag).is_integer() else c.imag
        return {1: "i", -1: "-i"}.get(im, f"{im}i")
    return f"{c.real:.17g}{c.imag:+.17g}i"


def _json_value(v):
    if isinstance(v, np.bool_):
        return bool(v)
    if isinstance(v, bool) or v is None or isinstance(v, (str, int)) and not hasattr(v, "dtype"):
        return v
    if isinstance(v, complex):
        return _complex_label(v)
    if isinstance(v, (list, tuple)):
        return [_json_value(x) for x in v]
    if hasattr(v, "dtype") and getattr(v, "ndim", 0) == 0:
        v = v.item()
        return _json_value(v)
    x = float(v)
    return None if not math.isfinite(x) else x


def parse_config_text(text: str) -> Dict[str, str]:
    """Parse ``key = value`` lines; returns raw string values keyed by ``snake_case`` names."""
    out: Dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise DomainError(f"config line {lineno}: expected 'key = value', got {raw!r}")
        k, v = line.split("=", 1)
        k = k.strip().replace("-", "_")
        if not k:
            raise DomainError(f"config line {lineno}: empty key")
        out[k] = v.strip()
    return out


@dataclass
class JobConfig:
    """Resolved job settings: subcommand, model parameters, ranges, tolerances, output."""

    subcommand: str
    settings: Dict[str, object] = field(default_factory=dict)

    def items(self):
        yield "subcommand", self.subcommand
        for k in sorted(self.settings):
            yield k, self.settings[k]

    def to_text(self) -> str:
        """Serialize in the config-file grammar (round-trips through :meth:`from_text`)."""
        return "".join(f"{k} = {format_value(v)}\n" for k, v in self.items())

    @classmethod
    def from_text(cls, text: str) -> "JobConfig":
        raw = parse_config_text(text)
        sub = raw.pop("subcommand", None)
        if sub is None:
            raise DomainError("config has no subcommand")
        return cls(sub, {k: _parse_scalar(v) for k, v in raw.items()})


def _parse_scalar(s: str):
    parts = s.split()
    if len(parts) > 1:
        return [_parse_scalar(p) for p in parts]
    if s in ("true", "false"):
        return s == "true"
    if s == "":
        return None
    try:
        return int(s)
    except ValueError:
        pass
    try:
        return float(s)
    except ValueError:
        return s


def _timestamp() -> str:
    epoch = os.environ.get("SOURCE_DATE_EPOCH")
    now = (_dt.datetime.fromtimestamp(int(epoch), _dt.timezone.utc) if epoch
           else _dt.datetime.now(_dt.timezone.utc))
    return now.strftime("%Y-%m-%dT%H:%M:%SZ")


def write_table(stream: TextIO, config: JobConfig, columns: Sequence[str], rows: Iterable[Sequence],
                fmt: str = "csv", meta: Optional[Dict[str, object]] = None,
                tolerances: Optional[Dict[str, object]] = None) -> None:
    """Write ``rows`` under ``columns`` with the versioned header in ``fmt`` (csv or json)."""
    meta = meta or {}
    tolerances = tolerances or {}
    if fmt == "csv":
        stream.write(f"# {CSV_SCHEMA}\n")
        stream.write(f"# generated: {_timestamp()}\n")
        for k, v in config.items():
            stream.write(f"# config: {k}={format_value(v)}\n")
        for k in sorted(tolerances):
            stream.write(f"# tolerance: {k}={format_value(tolerances[k])}\n")
        for k in sorted(meta):
            stream.write(f"# meta: {k}={format_value(meta[k])}\n")
        w = csv.writer(stream, lineterminator="\n", quoting=csv.QUOTE_MINIMAL)
        w.writerow(columns)
        for r in rows:
            w.writerow([format_value(v) for v in r])
    elif fmt == "json":
        doc = {
            "schema": JSON_SCHEMA,
            "generated": _timestamp(),
            "config": {k: _json_value(v) for k, v in config.items()},
            "tolerance": {k: _json_value(tolerances[k]) for k in sorted(tolerances)},
            "meta": {k: _json_value(meta[k]) for k in sorted(meta)},
            "columns": list(columns),
            "rows": [[_json_value(v) for v in r] for r in rows],
        }
        json.dump(doc, stream, indent=1, sort_keys=False)
        stream.write("\n")
    else:
        raise DomainError(f"unknown output format {fmt!r}")


def data_section(text: str) -> str:
    """The output with its run-dependent ``generated`` line removed."""
    keep: List[str] = []
    for line in io.StringIO(text):
        s = line.strip()
        if s.startswith("# generated:") or s.startswith('"generated":'):
            continue
        keep.append(line)
    return "".join(keep)
