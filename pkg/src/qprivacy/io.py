"""File formats: matrices, input distributions, protocol trees and per-round CSV."""

from __future__ import annotations

import csv
import io
import json
import math
from pathlib import Path

import numpy as np

from .core.classical import DeterministicProtocol, ProtocolError, protocol_from_json, protocol_to_json
from .core.matrix import CommMatrix
from .infotheory import ProbDist
from .privacy import PrivacyReport

CSV_COLUMNS = ("round", "player", "privacy_loss_bits", "leakage_trace_norm", "expected_leakage")
NORMALIZE_TOL = 1e-6


class InputFormatError(ValueError):
    pass


def _load_json(path: str | Path):
    text = Path(path).read_text()
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputFormatError(f"{path}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from None


def _hashable(v):
    return tuple(_hashable(u) for u in v) if isinstance(v, list) else v


def matrix_from_json(obj, source: str = "<matrix>") -> CommMatrix:
    if not isinstance(obj, dict):
        raise InputFormatError(f"{source}: expected a JSON object")
    for key in ("rows", "cols", "entries"):
        if key not in obj:
            raise InputFormatError(f"{source}: missing field {key!r}")
    rows, cols, entries = obj["rows"], obj["cols"], obj["entries"]
    if not (isinstance(rows, int) and isinstance(cols, int) and rows > 0 and cols > 0):
        raise InputFormatError(f"{source}: rows and cols must be positive integers")
    if not isinstance(entries, list) or len(entries) != rows:
        raise InputFormatError(f"{source}: entries must list {rows} rows")
    table = []
    for i, row in enumerate(entries):
        if not isinstance(row, list) or len(row) != cols:
            raise InputFormatError(f"{source}: entries row {i} must have {cols} values")
        table.append([_hashable(v) for v in row])
    alphabet = obj.get("alphabet")
    if alphabet is not None:
        alphabet = [_hashable(a) for a in alphabet]
        if len(set(alphabet)) != len(alphabet):
            raise InputFormatError(f"{source}: alphabet has repeated symbols")
        for i, row in enumerate(table):
            for j, v in enumerate(row):
                if v not in alphabet:
                    raise InputFormatError(f"{source}: entries[{i}][{j}] = {v!r} is not in the alphabet")
    n_bits = rows.bit_length() - 1 if rows == cols and rows & (rows - 1) == 0 else None
    return CommMatrix.from_table(table, alphabet, n_bits, obj.get("name", Path(source).stem))


def matrix_to_json(m: CommMatrix) -> dict:
    out = lambda v: list(v) if isinstance(v, tuple) else v
    return {
        "rows": m.rows,
        "cols": m.cols,
        "alphabet": [out(a) for a in m.alphabet],
        "entries": [[out(m.alphabet[c]) for c in row] for row in m.codes.tolist()],
    }


def load_matrix(path: str | Path) -> CommMatrix:
    return matrix_from_json(_load_json(path), str(path))


def distribution_from_json(obj, m: CommMatrix, source: str = "<distribution>") -> ProbDist:
    """``{"type": "uniform"}`` or ``{"weights": [[...]]}`` normalized to sum 1 (within 1e-6)."""
    if not isinstance(obj, dict):
        raise InputFormatError(f"{source}: expected a JSON object")
    if obj.get("type") == "uniform":
        return ProbDist.uniform(m.pairs())
    if "weights" not in obj:
        raise InputFormatError(f"{source}: need \"type\": \"uniform\" or a \"weights\" table")
    try:
        w = np.array(obj["weights"], dtype=float)
    except (TypeError, ValueError):
        raise InputFormatError(f"{source}: weights must be a numeric table") from None
    if w.shape != m.shape:
        raise InputFormatError(f"{source}: weights are {w.shape}, matrix is {m.shape}")
    if not np.all(np.isfinite(w)) or w.min() < 0:
        raise InputFormatError(f"{source}: weights must be finite and nonnegative")
    if abs(w.sum() - 1.0) > NORMALIZE_TOL:
        raise InputFormatError(f"{source}: weights sum to {w.sum():.9g}, not 1 within {NORMALIZE_TOL:g}")
    w = w / w.sum()
    return ProbDist({(int(x), int(y)): float(w[x, y]) for x, y in zip(*np.nonzero(w))})


def load_distribution(path: str | Path | None, m: CommMatrix) -> ProbDist:
    if path is None:
        return ProbDist.uniform(m.pairs())
    return distribution_from_json(_load_json(path), m, str(path))


def load_protocol(path: str | Path) -> DeterministicProtocol:
    try:
        return protocol_from_json(_load_json(path))
    except ProtocolError as exc:
        raise InputFormatError(f"{path}: {exc}") from None


def save_protocol(p: DeterministicProtocol, path: str | Path) -> None:
    Path(path).write_text(dumps(protocol_to_json(p)))


def _finite(obj):
    if isinstance(obj, float) and not math.isfinite(obj):
        raise ValueError(f"non-finite number {obj} in output")
    if isinstance(obj, dict):
        for v in obj.values():
            _finite(v)
    elif isinstance(obj, (list, tuple)):
        for v in obj:
            _finite(v)


def dumps(obj) -> str:
    """Deterministic JSON; refuses NaN and infinities."""
    _finite(obj)
    return json.dumps(obj, indent=2, sort_keys=True, allow_nan=False) + "\n"


def fmt(v: float) -> str:
    return repr(float(v))


def report_csv(reports: list[PrivacyReport]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for rep in reports:
        for r in rep.per_round:
            vals = (r.privacy_loss_bits, r.leakage_trace_norm, r.expected_leakage)
            _finite(list(vals))
            w.writerow([r.round, r.player, *map(fmt, vals)])
    return buf.getvalue()


def rows_csv(columns: list[str], rows: list[dict]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        vals = [row[c] for c in columns]
        _finite(vals)
        w.writerow([fmt(v) if isinstance(v, float) else v for v in vals])
    return buf.getvalue()
