"""CSV formats for datasets, queries and predictions."""
from __future__ import annotations

import csv
import os
import tempfile
from fractions import Fraction
from pathlib import Path

import numpy as np

from .geometry import to_rational
from .metric import Dataset


class InputError(ValueError):
    """Malformed user input (files or flags)."""


def _coord_columns(header: list[str], path) -> list[int]:
    cols = {name.strip(): i for i, name in enumerate(header)}
    d = 0
    while f"x{d + 1}" in cols:
        d += 1
    if d == 0:
        raise InputError(f"{path}: header needs coordinate columns x1..xd")
    extra = [c for c in cols if c.startswith("x") and c[1:].isdigit() and int(c[1:]) > d]
    if extra:
        raise InputError(f"{path}: coordinate columns must be contiguous x1..x{d}, found {extra}")
    return [cols[f"x{j + 1}"] for j in range(d)]


def _read_rows(path) -> tuple[list[str], list[list[str]]]:
    try:
        with open(path, newline="") as fh:
            rows = [r for r in csv.reader(fh) if r and any(c.strip() for c in r)]
    except OSError as exc:
        raise InputError(f"{path}: {exc.strerror or exc}") from exc
    if not rows:
        raise InputError(f"{path}: empty file")
    header, body = rows[0], rows[1:]
    for lineno, row in enumerate(body, start=2):
        if len(row) != len(header):
            raise InputError(f"{path}:{lineno}: expected {len(header)} fields, got {len(row)}")
    return header, body


def _parse(value: str, path, lineno: int) -> Fraction:
    try:
        return to_rational(value)
    except (ValueError, TypeError) as exc:
        raise InputError(f"{path}:{lineno}: {exc}") from exc


def read_points(path) -> list[tuple[Fraction, ...]]:
    """Read ``x1..xd`` columns exactly; other columns are ignored."""
    header, body = _read_rows(path)
    idx = _coord_columns(header, path)
    if not body:
        raise InputError(f"{path}: no data rows")
    return [tuple(_parse(row[i], path, ln) for i in idx) for ln, row in enumerate(body, start=2)]


def read_dataset(path) -> Dataset:
    """Read a dataset CSV with columns ``x1..xd`` and ``y``."""
    header, body = _read_rows(path)
    idx = _coord_columns(header, path)
    names = [h.strip() for h in header]
    if "y" not in names:
        raise InputError(f"{path}: header needs a response column y")
    yi = names.index("y")
    points, ys = [], []
    for ln, row in enumerate(body, start=2):
        points.append(tuple(_parse(row[i], path, ln) for i in idx))
        try:
            ys.append(float(row[yi]))
        except ValueError:
            raise InputError(f"{path}:{ln}: cannot parse response {row[yi]!r}") from None
    if len(points) < len(idx):
        raise InputError(f"{path}: need n >= d rows, got n={len(points)}, d={len(idx)}")
    if not np.all(np.isfinite(ys)):
        raise InputError(f"{path}: responses must be finite")
    return Dataset(tuple(points), np.array(ys))


def format_rational(value) -> str:
    value = Fraction(value)
    if value.denominator == 1:
        return str(value.numerator)
    return f"{value.numerator}/{value.denominator}"


def write_dataset(path, data: Dataset) -> None:
    lines = [",".join([f"x{j + 1}" for j in range(data.dim)] + ["y"])]
    for p, y in zip(data.points, data.responses):
        lines.append(",".join([format_rational(c) for c in p] + [repr(float(y))]))
    write_atomic(path, "\n".join(lines) + "\n")


def predictions_csv(predictions, tag: str) -> str:
    lines = ["query,prediction,neighbors,metric"]
    for i, pred in enumerate(predictions):
        nbrs = ";".join(str(j) for j in pred.neighbor_indices)
        lines.append(f'{i},{pred.value!r},{nbrs},"{tag}"')
    return "\n".join(lines) + "\n"


def write_atomic(path, text: str) -> None:
    """Write ``text`` to ``path`` via a temp file and rename."""
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent or ".", prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
