"""Plain-text instance files.

Layout::

    # ossipm instance
    form: canonical
    m: 4
    n: 12
    [A]
    <m rows of n numbers>
    [b]
    <m numbers, one per line>
    [c]
    <n numbers, one per line>
    [x]            (optional planted / starting point blocks)
    ...
    [y]
    ...
    [s]            (standard form only)
    ...

Numbers are written with 17 significant digits, which round-trips IEEE
doubles exactly.
"""

from __future__ import annotations

import os

import numpy as np

from .lo_core import FormTag, LoProblem

_HEADER = "# ossipm instance"
_POINT_BLOCKS = ("x", "y", "s")


def _fmt(v: float) -> str:
    return format(float(v), ".17g")


def dumps(p: LoProblem, point: dict[str, np.ndarray] | None = None) -> str:
    lines = [_HEADER, f"form: {p.form.value}", f"m: {p.m}", f"n: {p.n}"]
    if p.n_original is not None:
        lines.append(f"n_original: {p.n_original}")
    lines.append("[A]")
    lines.extend(" ".join(_fmt(v) for v in row) for row in p.A)
    for name, vec in (("b", p.b), ("c", p.c)):
        lines.append(f"[{name}]")
        lines.extend(_fmt(v) for v in vec)
    for name in _POINT_BLOCKS:
        if point and point.get(name) is not None:
            lines.append(f"[{name}]")
            lines.extend(_fmt(v) for v in np.asarray(point[name]).reshape(-1))
    return "\n".join(lines) + "\n"


def loads(text: str) -> tuple[LoProblem, dict[str, np.ndarray]]:
    header: dict[str, str] = {}
    blocks: dict[str, list[list[float]]] = {}
    current = None
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if line.startswith("[") and line.endswith("]"):
            current = line[1:-1].strip()
            if current in blocks:
                raise ValueError(f"line {lineno}: duplicate block [{current}]")
            blocks[current] = []
        elif current is None:
            key, sep, value = line.partition(":")
            if not sep:
                raise ValueError(f"line {lineno}: expected 'key: value', got {line!r}")
            header[key.strip()] = value.strip()
        else:
            blocks[current].append([float(tok) for tok in line.split()])

    try:
        form = FormTag(header["form"])
        m, n = int(header["m"]), int(header["n"])
    except KeyError as exc:
        raise ValueError(f"missing header field {exc}") from None
    for name in ("A", "b", "c"):
        if name not in blocks:
            raise ValueError(f"missing block [{name}]")
    A = np.array(blocks["A"], dtype=np.float64).reshape(m, n)
    b = np.array(blocks["b"], dtype=np.float64).reshape(m)
    c = np.array(blocks["c"], dtype=np.float64).reshape(n)
    n_orig = int(header["n_original"]) if "n_original" in header else None
    p = LoProblem(A, b, c, form, n_original=n_orig)
    point = {
        name: np.array(blocks[name], dtype=np.float64).reshape(-1)
        for name in _POINT_BLOCKS
        if name in blocks
    }
    return p, point


def write(path: str | os.PathLike, p: LoProblem, point: dict[str, np.ndarray] | None = None):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dumps(p, point))


def read(path: str | os.PathLike) -> tuple[LoProblem, dict[str, np.ndarray]]:
    with open(path, encoding="utf-8") as fh:
        return loads(fh.read())
