"""Response-matrix and parameter CSV formats.

Two response layouts are supported. The long form has the header
``item,examinee,y`` with one response per line. The dense form's first row
lists the examinee ids and each following row holds one item's responses.
Labels are {-1, +1} by default; ``labels="01"`` maps 0 <-> -1 on both read
and write. Floats are written with ``repr`` so files re-parse bit-identically.
"""

from __future__ import annotations

import numpy as np

from .errors import ConfigError
from .model import AbilityParameters, ItemParameters, ResponseMatrix

__all__ = [
    "write_responses",
    "read_responses",
    "write_item_parameters",
    "read_item_parameters",
    "write_abilities",
    "read_abilities",
]

_LONG_HEADER = "item,examinee,y"


def _encode(entries, labels):
    if labels == "pm1":
        return entries
    if labels == "01":
        return np.where(entries == -1, 0, 1)
    raise ConfigError(f"unknown label convention: {labels!r}")


def _decode(values, labels):
    values = np.asarray(values, dtype=np.int64)
    if labels == "01":
        values = np.where(values == 0, -1, values)
    return values


def write_responses(Y, path, fmt="dense", labels="pm1"):
    """Write a ResponseMatrix in dense (default) or long form."""
    enc = _encode(Y.entries.astype(np.int64), labels)
    with open(path, "w", encoding="utf-8") as fh:
        if fmt == "dense":
            fh.write(",".join(str(j) for j in range(Y.n)) + "\n")
            for i in range(Y.m):
                fh.write(",".join(str(int(v)) for v in enc[i]) + "\n")
        elif fmt == "long":
            fh.write(_LONG_HEADER + "\n")
            for i in range(Y.m):
                for j in range(Y.n):
                    fh.write(f"{i},{j},{int(enc[i, j])}\n")
        else:
            raise ConfigError(f"unknown response format: {fmt!r}")


def read_responses(path, labels="pm1"):
    """Read either response layout, auto-detected from the first line."""
    with open(path, "r", encoding="utf-8") as fh:
        first = fh.readline().strip()
        if first == _LONG_HEADER:
            items, exams, ys = [], [], []
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                i, j, y = line.split(",")
                items.append(int(i))
                exams.append(int(j))
                ys.append(int(y))
            if not items:
                raise ConfigError(f"{path}: no responses")
            m, n = max(items) + 1, max(exams) + 1
            seen = np.zeros((m, n), dtype=bool)
            enc = np.zeros((m, n), dtype=np.int64)
            enc[items, exams] = ys
            seen[items, exams] = True
            if not seen.all():
                raise ConfigError(f"{path}: long form is missing responses")
        else:
            ids = [int(v) for v in first.split(",")]
            if ids != list(range(len(ids))):
                raise ConfigError(f"{path}: dense header must list examinee ids 0..n-1")
            rows = []
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                rows.append([int(v) for v in line.split(",")])
            if not rows:
                raise ConfigError(f"{path}: no item rows")
            enc = np.asarray(rows, dtype=np.int64)
            if enc.shape[1] != len(ids):
                raise ConfigError(f"{path}: ragged dense matrix")
    try:
        return ResponseMatrix(_decode(enc, labels))
    except ValueError as exc:
        raise ConfigError(f"{path}: {exc}") from exc


def write_item_parameters(items, path):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("item,a,b,c\n")
        for i in range(items.m):
            fh.write(
                f"{i},{float(items.a[i])!r},{float(items.b[i])!r},"
                f"{float(items.c[i])!r}\n"
            )


def read_item_parameters(path):
    a, b, c = [], [], []
    with open(path, "r", encoding="utf-8") as fh:
        if fh.readline().strip() != "item,a,b,c":
            raise ConfigError(f"{path}: expected item parameter header")
        for line in fh:
            parts = line.strip().split(",")
            a.append(float(parts[1]))
            b.append(float(parts[2]))
            c.append(float(parts[3]))
    return ItemParameters(a=a, b=b, c=c)


def write_abilities(abilities, path):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("examinee,theta\n")
        for j in range(abilities.n):
            fh.write(f"{j},{float(abilities.theta[j])!r}\n")


def read_abilities(path):
    theta = []
    with open(path, "r", encoding="utf-8") as fh:
        if fh.readline().strip() != "examinee,theta":
            raise ConfigError(f"{path}: expected ability header")
        for line in fh:
            theta.append(float(line.strip().split(",")[1]))
    return AbilityParameters(theta=theta)
