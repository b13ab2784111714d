"""Configuration loading, operator files and deterministic CSV output."""

from __future__ import annotations

import csv
import hashlib
import json
from pathlib import Path
from typing import Any, Iterable, Sequence

import numpy as np
import yaml

from .errors import ConfigError, ShapeError


def load_config(path: str | Path) -> dict[str, Any]:
    """Read a JSON or YAML mapping, chosen by file suffix."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        if path.suffix.lower() in (".yaml", ".yml"):
            data = yaml.safe_load(text)
        else:
            data = json.loads(text)
    except (json.JSONDecodeError, yaml.YAMLError) as exc:
        raise ConfigError(f"cannot parse config {path}: {exc}") from exc
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ConfigError(f"config {path} must hold a mapping at top level")
    return data


def canonical_json(obj: Any) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), default=_jsonable)


def config_hash(config: dict[str, Any]) -> str:
    return hashlib.sha256(canonical_json(config).encode("utf-8")).hexdigest()


def _jsonable(x):
    if isinstance(x, np.generic):
        return x.item()
    if isinstance(x, np.ndarray):
        return x.tolist()
    raise TypeError(f"cannot serialise {type(x).__name__}")


def fmt(x) -> str:
    """Render a cell: floats as ``%.12g``, booleans as ``true``/``false``."""
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (float, np.floating)):
        return "%.12g" % float(x)
    if x is None:
        return ""
    return str(x)


def write_csv(path: str | Path, header: Sequence[str], rows: Iterable[Sequence], cfg_hash: str) -> Path:
    """Header row, formatted rows and a trailing ``# config_hash=...`` line."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([fmt(c) for c in r])
        fh.write(f"# config_hash={cfg_hash}\n")
    return path


def read_csv(path: str | Path) -> tuple[list[str], list[list[str]], str | None]:
    """Inverse of :func:`write_csv`: header, rows of strings and the hash."""
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    h = None
    if lines and lines[-1].startswith("# config_hash="):
        h = lines.pop().split("=", 1)[1]
    rows = list(csv.reader(lines))
    return rows[0], rows[1:], h


def write_json(path: str | Path, obj: Any) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(obj, indent=2, sort_keys=True, default=_jsonable) + "\n", encoding="utf-8")
    return path


def operator_from_json(obj: dict[str, Any]) -> np.ndarray:
    """Matrix from ``{"rows", "cols", "re", "im"}`` with row-major flat lists."""
    try:
        r, c = int(obj["rows"]), int(obj["cols"])
        re = np.asarray(obj["re"], dtype=float).ravel()
        im = np.asarray(obj.get("im", np.zeros(r * c)), dtype=float).ravel()
    except (KeyError, TypeError, ValueError) as exc:
        raise ShapeError(f"malformed operator record: {exc}") from exc
    if re.size != r * c or im.size != r * c:
        raise ShapeError(f"operator record needs {r * c} entries, got {re.size} and {im.size}")
    M = (re + 1j * im).reshape(r, c)
    if not np.all(np.isfinite(M)):
        raise ShapeError("operator record has non-finite entries")
    return M


def operator_to_json(M) -> dict[str, Any]:
    M = np.asarray(M, dtype=complex)
    return {"rows": M.shape[0], "cols": M.shape[1],
            "re": M.real.ravel().tolist(), "im": M.imag.ravel().tolist()}


def load_operator(path: str | Path) -> np.ndarray:
    try:
        return operator_from_json(json.loads(Path(path).read_text(encoding="utf-8")))
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read operator file {path}: {exc}") from exc


def write_values(path: str | Path, values, cfg_hash: str) -> Path:
    """``index,value`` table of a real sequence."""
    return write_csv(path, ["index", "value"], ((i, float(v)) for i, v in enumerate(values)), cfg_hash)
