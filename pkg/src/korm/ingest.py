"""Dataset loading, attribute encoding and stream chunking."""

from __future__ import annotations

import csv
import enum
import hashlib
import os
from dataclasses import dataclass
from typing import Iterable, Iterator, Sequence

import numpy as np

from korm.errors import EncodingError, ParseError, RangeError, ShapeError


class ColumnKind(str, enum.Enum):
    NUMERIC = "numeric"
    CHAR = "single_char_categorical"
    SKIP = "skip"


_KIND_ALIASES = {"num": ColumnKind.NUMERIC, "char": ColumnKind.CHAR, "cat": ColumnKind.CHAR}


@dataclass(frozen=True)
class DatasetSchema:
    kinds: tuple
    has_header: bool = False

    def __post_init__(self):
        kinds = tuple(_KIND_ALIASES.get(k, None) or ColumnKind(k) for k in self.kinds)
        object.__setattr__(self, "kinds", kinds)
        if not any(k is not ColumnKind.SKIP for k in kinds):
            raise ShapeError("schema must keep at least one column")

    @property
    def dimension(self) -> int:
        return sum(k is not ColumnKind.SKIP for k in self.kinds)

    @classmethod
    def parse(cls, spec: str, has_header: bool = False) -> "DatasetSchema":
        """Build a schema from a file path or an inline comma list of kinds.

        Schema files hold one kind keyword per line; blank lines and
        ``#`` comments are ignored.
        """
        if os.path.exists(spec):
            with open(spec, encoding="utf-8") as fh:
                words = [ln.split("#", 1)[0].strip() for ln in fh]
            words = [w for w in words if w]
        else:
            words = [w.strip() for w in spec.split(",") if w.strip()]
        try:
            return cls(tuple(words), has_header)
        except ValueError as exc:
            if isinstance(exc, ShapeError):
                raise
            raise ParseError(f"unknown column kind in schema: {exc}", schema=spec) from None


@dataclass(frozen=True)
class Chunk:
    index: int
    points: np.ndarray
    weights: np.ndarray
    start: int  # stream position of the first point

    def __len__(self):
        return len(self.points)


def encode_char(cell: str) -> float:
    if len(cell) != 1:
        raise EncodingError("categorical cell must be a single character", cell=cell)
    return float(ord(cell))


def load_dataset(path, schema: DatasetSchema) -> np.ndarray:
    """Read a comma-delimited file into an ``(N, d)`` float array.

    Every point starts with unit weight; callers get weights from
    :func:`chunk_stream`.
    """
    rows = []
    width = len(schema.kinds)
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        if schema.has_header:
            next(reader, None)
        for lineno, raw in enumerate(reader, start=2 if schema.has_header else 1):
            if not raw or all(not c.strip() for c in raw):
                continue
            if len(raw) != width:
                raise ShapeError("row width does not match schema", row=lineno,
                                 expected=width, found=len(raw))
            out = []
            for col, (kind, cell) in enumerate(zip(schema.kinds, raw), start=1):
                cell = cell.strip()
                if kind is ColumnKind.SKIP:
                    continue
                if cell == "":
                    raise ParseError("missing value", row=lineno, column=col)
                if kind is ColumnKind.CHAR:
                    try:
                        out.append(encode_char(cell))
                    except EncodingError as exc:
                        exc.details.update(row=lineno, column=col)
                        raise
                    continue
                try:
                    value = float(cell)
                except ValueError:
                    raise ParseError("unparseable numeric cell", row=lineno, column=col,
                                     cell=cell) from None
                if not np.isfinite(value):
                    raise ParseError("non-finite numeric cell", row=lineno, column=col, cell=cell)
                out.append(value)
            rows.append(out)
    if not rows:
        raise ShapeError("dataset has no data rows", path=str(path))
    return np.asarray(rows, dtype=np.float64)


def file_digest(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 16), b""):
            h.update(block)
    return h.hexdigest()


def minmax_scale(points: np.ndarray) -> np.ndarray:
    lo = points.min(axis=0)
    span = points.max(axis=0) - lo
    span[span == 0] = 1.0
    return (points - lo) / span


def chunk_stream(points: Sequence, num: int, weights: Sequence | None = None) -> list[Chunk]:
    return list(iter_chunks(points, num, weights))


def iter_chunks(points: Iterable, num: int, weights: Iterable | None = None) -> Iterator[Chunk]:
    """Lazily cut a point sequence into consecutive chunks of ``num`` points."""
    if num < 2:
        raise RangeError("chunk size must be at least 2", chunk_size_Num=num)
    if isinstance(points, np.ndarray):
        n = len(points)
        w = np.ones(n) if weights is None else np.asarray(weights, dtype=np.float64)
        for i, start in enumerate(range(0, n, num), start=1):
            yield Chunk(i, points[start:start + num], w[start:start + num], start)
        return
    buf, wbuf = [], []
    wit = iter(weights) if weights is not None else None
    index, start = 1, 0
    for p in points:
        buf.append(np.asarray(p, dtype=np.float64))
        wbuf.append(1.0 if wit is None else float(next(wit)))
        if len(buf) == num:
            yield Chunk(index, np.vstack(buf), np.asarray(wbuf), start)
            index, start = index + 1, start + num
            buf, wbuf = [], []
    if buf:
        yield Chunk(index, np.vstack(buf), np.asarray(wbuf), start)
