"""Deterministic JSON reports and CSV aggregation."""
from __future__ import annotations

import csv
import io
import json
import math
import sys
from pathlib import Path

import mpmath
import numpy as np
import scipy
import yaml

from . import __version__
from .errors import ConfigError
from .rng import RNG_IDENTITY

ROW_FIELDS = ("scenario", "lhs", "rhs", "ratio", "pass")


def versions() -> dict:
    return {
        "relanticonc": __version__,
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "mpmath": mpmath.__version__,
        "pyyaml": yaml.__version__,
        "python": ".".join(map(str, sys.version_info[:3])),
    }


def _float(x: float) -> str:
    if math.isnan(x):
        return '"nan"'
    if math.isinf(x):
        return '"inf"' if x > 0 else '"-inf"'
    s = f"{x:.17g}"
    if "e" not in s and "." not in s:
        s += ".0"  # keep floats distinguishable from ints
    return s


def _plain(obj):
    """numpy scalars/arrays, tuples and dataclass-like objects to JSON-able Python."""
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if hasattr(obj, "to_dict"):
        return obj.to_dict()
    if hasattr(obj, "tolist"):
        return obj.tolist()
    return obj


def _encode(obj, indent: int, level: int, out: list) -> None:
    obj = _plain(obj)
    pad = "\n" + " " * (indent * (level + 1)) if indent else ""
    end = "\n" + " " * (indent * level) if indent else ""
    if obj is None or isinstance(obj, bool):
        out.append(json.dumps(obj))
    elif isinstance(obj, int):
        out.append(str(obj))
    elif isinstance(obj, float):
        out.append(_float(obj))
    elif isinstance(obj, str):
        out.append(json.dumps(obj))
    elif isinstance(obj, dict):
        if not obj:
            out.append("{}")
            return
        out.append("{")
        for i, k in enumerate(sorted(obj, key=str)):
            out.append(("," if i else "") + pad + json.dumps(str(k)) + ": ")
            _encode(obj[k], indent, level + 1, out)
        out.append(end + "}")
    elif isinstance(obj, (list, tuple)):
        if not obj:
            out.append("[]")
            return
        out.append("[")
        for i, v in enumerate(obj):
            out.append(("," if i else "") + pad)
            _encode(v, indent, level + 1, out)
        out.append(end + "]")
    else:
        raise TypeError(f"cannot serialize {type(obj).__name__}")


def dumps(obj, indent: int = 2) -> str:
    """JSON with sorted keys, floats at 17 significant digits and inf/nan as strings."""
    out: list = []
    _encode(obj, indent, 0, out)
    return "".join(out) + "\n"


def envelope(kind: str, config: dict, result, statement: str | None = None, constants: dict | None = None, rows=None, passed: bool | None = None) -> dict:
    """Wrap a result with the metadata every report carries."""
    return {
        "report": kind,
        "statement": statement,
        "constants": constants or {},
        "seed": config.get("seed"),
        "rng": RNG_IDENTITY,
        "versions": versions(),
        "config": config,
        "result": result,
        "rows": rows or [],
        "pass": passed,
    }


def row(scenario: str, lhs, rhs, passed: bool | None = None) -> dict:
    lhs = None if lhs is None else float(lhs)
    rhs = None if rhs is None else float(rhs)
    if lhs is not None and rhs is not None:
        r = lhs / rhs if rhs > 0 else (math.inf if lhs > 0 else 0.0)
    else:
        r = None
    if passed is None and r is not None:
        passed = lhs <= rhs
    return {"scenario": scenario, "lhs": lhs, "rhs": rhs, "ratio": r, "pass": passed}


def write(text: str, path: str | None) -> None:
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        Path(path).write_text(text)


def rows_to_csv(rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(ROW_FIELDS)
    for r in rows:
        w.writerow(["" if r.get(k) is None else (_float(r[k]).strip('"') if isinstance(r.get(k), float) else r[k]) for k in ROW_FIELDS])
    return buf.getvalue()


def load_report(path) -> dict:
    try:
        return json.loads(Path(path).read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc.strerror}", key="inputs") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path} is not JSON ({exc.msg})", key="inputs") from None


def _coerce(v):
    # inf was written as a string; bring it back to a float for the CSV
    if isinstance(v, str) and v in ("inf", "-inf", "nan"):
        return float(v)
    return v


def aggregate(paths) -> str:
    """One CSV of (scenario, lhs, rhs, ratio, pass) over the rows of several reports."""
    rows = []
    for p in paths:
        rep = load_report(p)
        if not isinstance(rep, dict) or "rows" not in rep:
            raise ConfigError(f"{p} is not a relanticonc report", key="inputs")
        for r in rep["rows"]:
            rows.append({k: _coerce(r.get(k)) for k in ROW_FIELDS})
    return rows_to_csv(rows)
