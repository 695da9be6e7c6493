"""Reading and writing ``DBCD-SPARSE v1`` instance files.

Layout (ASCII, one item per line, row/column indices 0-based)::

    DBCD-SPARSE v1 <m> <N> <nnz> <kind>
    <row> <col> <value>          # nnz lines, row-major order
    <y_j>                        # m lines (labels +-1 for kind=svm)
    lambda=<value>
    labels=pm1                   # svm only

Reals are written with 17 significant digits so a read/write cycle is
byte-identical.
"""

from __future__ import annotations

import numpy as np

from .errors import InstanceParseError
from .problems import LassoProblem, SparseMatrix, SvmDualProblem

MAGIC = "DBCD-SPARSE"
VERSION = "v1"
KINDS = ("lasso", "svm")


def _num(v) -> str:
    return format(float(v), ".17g")


def dumps(problem) -> str:
    A = problem.A
    lines = [f"{MAGIC} {VERSION} {A.m} {A.N} {A.nnz} {problem.kind}"]
    lines.extend(f"{r} {c} {_num(v)}" for r, c, v in A.triples())
    lines.extend(_num(v) for v in problem.y)
    lines.append(f"lambda={_num(problem.lam)}")
    if problem.kind == "svm":
        lines.append("labels=pm1")
    return "\n".join(lines) + "\n"


def write_instance(problem, path) -> None:
    with open(path, "w", newline="\n") as fh:
        fh.write(dumps(problem))


def loads(text: str):
    lines = text.splitlines()
    if not lines:
        raise InstanceParseError("empty file", 1)
    head = lines[0].split()
    if len(head) != 6 or head[0] != MAGIC:
        raise InstanceParseError(f"expected '{MAGIC} {VERSION} m N nnz kind' header", 1)
    if head[1] != VERSION:
        raise InstanceParseError(f"unsupported version {head[1]!r}", 1)
    try:
        m, N, nnz = (int(t) for t in head[2:5])
    except ValueError:
        raise InstanceParseError("m, N and nnz must be integers", 1) from None
    kind = head[5]
    if kind not in KINDS:
        raise InstanceParseError(f"unknown problem kind {kind!r}", 1)
    if min(m, N, nnz) < 0:
        raise InstanceParseError("negative size in header", 1)

    pos = 1
    rows = np.empty(nnz, dtype=np.int64)
    cols = np.empty(nnz, dtype=np.int64)
    vals = np.empty(nnz)
    for t in range(nnz):
        lineno = pos + 1
        if pos >= len(lines):
            raise InstanceParseError(f"expected {nnz} nonzeros, file ended", lineno)
        parts = lines[pos].split()
        if len(parts) != 3:
            raise InstanceParseError("expected 'row col value'", lineno)
        try:
            r, c, v = int(parts[0]), int(parts[1]), float(parts[2])
        except ValueError:
            raise InstanceParseError("malformed triple", lineno) from None
        if not (0 <= r < m and 0 <= c < N):
            raise InstanceParseError(f"index ({r}, {c}) outside {m}x{N}", lineno)
        if v == 0:
            raise InstanceParseError("explicit zero entry", lineno)
        rows[t], cols[t], vals[t] = r, c, v
        pos += 1

    y = np.empty(m)
    for j in range(m):
        lineno = pos + 1
        if pos >= len(lines):
            raise InstanceParseError(f"expected {m} right-hand-side entries, file ended", lineno)
        try:
            y[j] = float(lines[pos])
        except ValueError:
            raise InstanceParseError("malformed right-hand-side entry", lineno) from None
        pos += 1

    meta = {}
    for lineno, line in enumerate(lines[pos:], start=pos + 1):
        if not line.strip():
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise InstanceParseError("expected key=value metadata", lineno)
        meta[key.strip()] = (value.strip(), lineno)
    if "lambda" not in meta:
        raise InstanceParseError("missing lambda= metadata", len(lines))
    try:
        lam = float(meta["lambda"][0])
    except ValueError:
        raise InstanceParseError("malformed lambda", meta["lambda"][1]) from None

    A = SparseMatrix.from_triples(rows, cols, vals, (m, N))
    if A.nnz != nnz:
        raise InstanceParseError("duplicate nonzero entries", 1)
    try:
        if kind == "lasso":
            return LassoProblem(A, y, lam)
        if meta.get("labels", ("pm1",))[0] != "pm1":
            raise InstanceParseError("labels must be 'pm1'", meta["labels"][1])
        return SvmDualProblem(A, y, lam)
    except ValueError as exc:
        raise InstanceParseError(str(exc)) from exc


def read_instance(path):
    with open(path) as fh:
        return loads(fh.read())
