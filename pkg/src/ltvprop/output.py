"""CSV tables for solutions and propagators."""

from __future__ import annotations

import contextlib
import io
import os
import tempfile
from dataclasses import dataclass

import numpy as np

from .series import PropagatorTable
from .solvers import Solution


def _header(rows: int, cols: int) -> str:
    names = ["x"] + [f"v_{i + 1}_{j + 1}" for i in range(rows) for j in range(cols)]
    return ",".join(names)


def _fmt(v: float) -> str:
    return format(float(v), ".17g")


def render_table(nodes: np.ndarray, values: np.ndarray, blow_up_x: float | None = None) -> str:
    """One row per node, entries in row-major order, 17 significant digits."""
    _, rows, cols = values.shape
    buf = io.StringIO()
    buf.write(_header(rows, cols) + "\n")
    for x, v in zip(nodes, values):
        buf.write(",".join([_fmt(x)] + [_fmt(e) for e in v.ravel()]) + "\n")
    if blow_up_x is not None:
        buf.write(f"# blow_up_x = {_fmt(blow_up_x)}\n")
    return buf.getvalue()


def render_solution(s: Solution) -> str:
    return render_table(s.nodes[: len(s.values)], s.values, s.blow_up_x)


def render_propagator(t: PropagatorTable) -> str:
    return render_table(t.grid.nodes, t.values)


def write_text(text: str, path: str | os.PathLike) -> None:
    """Write ``text`` atomically: temp file in the target directory, then rename.

    Raises:
        OSError: with the target path in the message.
    """
    target = os.fspath(path)
    directory = os.path.dirname(os.path.abspath(target))
    try:
        fd, tmp = tempfile.mkstemp(prefix=".ltvprop-", suffix=".tmp", dir=directory)
    except OSError as exc:
        raise OSError(exc.errno, f"cannot write {target}: {exc.strerror}") from None
    try:
        with os.fdopen(fd, "w", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, target)
    except OSError as exc:
        with contextlib.suppress(FileNotFoundError):
            os.unlink(tmp)
        raise OSError(exc.errno, f"cannot write {target}: {exc.strerror}") from None


def write_solution(s: Solution, path: str | os.PathLike) -> None:
    write_text(render_solution(s), path)


@dataclass(frozen=True)
class Table:
    nodes: np.ndarray
    values: np.ndarray
    blow_up_x: float | None


def read_table(text: str) -> Table:
    """Inverse of :func:`render_table`."""
    lines = text.splitlines()
    names = lines[0].split(",")
    last = names[-1].split("_")
    rows, cols = int(last[1]), int(last[2])
    blow_up = None
    data = []
    for line in lines[1:]:
        if line.startswith("# blow_up_x = "):
            blow_up = float(line.split("=", 1)[1])
        elif line:
            data.append([float(v) for v in line.split(",")])
    arr = np.array(data, dtype=np.float64).reshape(len(data), 1 + rows * cols)
    return Table(arr[:, 0], arr[:, 1:].reshape(len(data), rows, cols), blow_up)
