"""JSON/CSV readers and writers for vectors, matrices, systems and trajectories."""
from __future__ import annotations

import csv
import io
import json
from pathlib import Path

import numpy as np

from .compound import label


class InputError(ValueError):
    """Unparseable input; ``line`` and ``col`` are 1-based when known."""

    def __init__(self, message: str, path=None, line: int | None = None, col: int | None = None):
        where = ""
        if path is not None:
            where = f"{path}"
            if line is not None:
                where += f":{line}"
                if col is not None:
                    where += f":{col}"
            where += ": "
        super().__init__(where + message)
        self.path, self.line, self.col = path, line, col


def fmt(v: float) -> str:
    # shortest string that round-trips (at most 17 significant digits)
    return repr(float(v))


def _read_text(path) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise InputError(f"cannot read file ({exc.strerror})", path) from exc


def _is_json(path, text: str) -> bool:
    suffix = Path(path).suffix.lower()
    if suffix == ".json":
        return True
    if suffix == ".csv":
        return False
    return text.lstrip()[:1] in ("[", "{")


def _parse_json(path, text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(exc.msg, path, exc.lineno, exc.colno) from exc


def _parse_csv(path, text: str) -> list[list[float]]:
    rows = []
    for lineno, row in enumerate(csv.reader(io.StringIO(text)), start=1):
        if not row or all(not c.strip() for c in row):
            continue
        parsed = []
        col = 1
        for cell in row:
            try:
                parsed.append(float(cell))
            except ValueError:
                raise InputError(f"not a number: {cell.strip()!r}", path, lineno, col) from None
            col += len(cell) + 1
        rows.append(parsed)
    return rows


def _finite_array(path, data, ndim: int) -> np.ndarray:
    try:
        arr = np.array(data, dtype=float)
    except (TypeError, ValueError) as exc:
        raise InputError(f"malformed numeric array ({exc})", path) from exc
    if arr.ndim != ndim:
        raise InputError(f"expected a {ndim}-D array, got shape {arr.shape}", path)
    if arr.size == 0:
        raise InputError("empty array", path)
    if not np.all(np.isfinite(arr)):
        raise InputError("non-finite entries", path)
    return arr


def load_matrix(path, square: bool = True) -> np.ndarray:
    text = _read_text(path)
    data = _parse_json(path, text) if _is_json(path, text) else _parse_csv(path, text)
    if isinstance(data, dict) and "matrix" in data:
        data = data["matrix"]
    M = _finite_array(path, data, 2)
    if square and M.shape[0] != M.shape[1]:
        raise InputError(f"expected a square matrix, got shape {M.shape}", path)
    return M


def load_vector(path) -> np.ndarray:
    """JSON array, or CSV with one column (or one row)."""
    text = _read_text(path)
    if _is_json(path, text):
        return _finite_array(path, _parse_json(path, text), 1)
    rows = _parse_csv(path, text)
    if rows and all(len(r) == 1 for r in rows):
        return _finite_array(path, [r[0] for r in rows], 1)
    if len(rows) == 1:
        return _finite_array(path, rows[0], 1)
    raise InputError("vector CSV must have a single column", path)


def load_samples(path) -> np.ndarray:
    """Matrix samples of ``A(t)``: a JSON list of matrices or ``{"matrices": [...]}``."""
    data = _parse_json(path, _read_text(path))
    if isinstance(data, dict):
        data = data.get("matrices")
    S = _finite_array(path, data, 3)
    if S.shape[1] != S.shape[2]:
        raise InputError("samples must be square", path)
    return S


def dumps_vector(x) -> str:
    return "[" + ", ".join(fmt(v) for v in x) + "]"


def labeled_matrix_csv(M: np.ndarray, row_sets, col_sets) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow([""] + [label(c) for c in col_sets])
    for r, row in zip(row_sets, M):
        w.writerow([label(r)] + [fmt(v) for v in row])
    return buf.getvalue()


def trajectory_csv(traj, trace=None) -> str:
    """CSV with columns ``t, x1..xn`` and, given a sign trace, ``s_minus, s_plus, cone``."""
    n = traj.states.shape[1]
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    header = ["t"] + [f"x{i}" for i in range(1, n + 1)]
    if trace is not None:
        header += ["s_minus", "s_plus", "cone"]
    w.writerow(header)
    for i, (t, x) in enumerate(zip(traj.times, traj.states)):
        row = [fmt(t)] + [fmt(v) for v in x]
        if trace is not None:
            lab = trace.labels[i]
            row += [int(trace.s_minus[i]), int(trace.s_plus[i]), lab.compact() if lab else "zero"]
        w.writerow(row)
    return buf.getvalue()


def load_trajectory(path):
    """Read the ``t, x1..xn`` columns of a trajectory CSV; other columns are ignored."""
    from .dynamics import Trajectory

    text = _read_text(path)
    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise InputError("empty trajectory file", path) from None
    if not header or header[0].strip() != "t":
        raise InputError("first column must be 't'", path, 1, 1)
    xcols = [i for i, h in enumerate(header) if h.strip().startswith("x") and h.strip()[1:].isdigit()]
    if not xcols:
        raise InputError("no state columns x1..xn", path, 1)
    times, states = [], []
    for lineno, row in enumerate(reader, start=2):
        if not row:
            continue
        try:
            times.append(float(row[0]))
            states.append([float(row[i]) for i in xcols])
        except (ValueError, IndexError):
            raise InputError("malformed trajectory row", path, lineno) from None
    if not times:
        raise InputError("trajectory has no samples", path)
    try:
        return Trajectory(np.array(times), np.array(states))
    except ValueError as exc:
        raise InputError(str(exc), path) from exc


def load_system(path):
    """System spec file.

    Accepted forms::

        {"type": "linear", "matrix": [[...], ...]}
        {"type": "table", "times": [...], "matrices": [[[...]], ...]}
        {"type": "builtin", "name": "cyclic_feedback", "params": {...}}

    A bare matrix (JSON or CSV) is read as a constant linear system.
    """
    from .dynamics import LinearSystem
    from .systems import builtin

    text = _read_text(path)
    if not _is_json(path, text):
        return LinearSystem.constant(load_matrix(path))
    data = _parse_json(path, text)
    if isinstance(data, list):
        return LinearSystem.constant(_finite_array(path, data, 2))
    kind = data.get("type")
    if kind == "linear":
        return LinearSystem.constant(load_matrix(path))
    if kind == "table":
        mats = _finite_array(path, data.get("matrices"), 3)
        times = _finite_array(path, data.get("times"), 1)
        try:
            return LinearSystem.piecewise(times, mats)
        except ValueError as exc:
            raise InputError(str(exc), path) from exc
    if kind == "builtin":
        try:
            return builtin(data.get("name", ""), **data.get("params", {}))
        except KeyError as exc:
            raise InputError(exc.args[0], path) from exc
        except TypeError as exc:
            raise InputError(f"bad builtin parameters ({exc})", path) from exc
    raise InputError(f"unknown system type {kind!r}", path)
