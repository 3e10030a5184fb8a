"""Labeled feature datasets: corpus ingestion, ARFF/CSV I/O and column filters."""

from __future__ import annotations

import csv
import io
import logging
import os
import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence, TextIO

import numpy as np

from .errors import (
    BadAttribute,
    BadCorpusLayout,
    EmptyClass,
    EmptyDataset,
    ParseError,
    SideChannelError,
)
from .stats import ATTRIBUTE_NAMES, fingerprint_file

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class AttributeSpec:
    name: str
    values: tuple[str, ...] | None = None  # None for numeric

    @property
    def is_numeric(self) -> bool:
        return self.values is None


@dataclass(frozen=True)
class Instance:
    values: tuple[float, ...]
    label: int


@dataclass(frozen=True, eq=False)
class Dataset:
    """Numeric attributes plus one trailing nominal class attribute.

    ``X`` is (n, m) float64 and ``y`` holds class indices into
    ``class_values``. Both arrays are read-only; filters build new datasets.
    """

    relation: str
    attribute_names: tuple[str, ...]
    class_values: tuple[str, ...]
    X: np.ndarray
    y: np.ndarray
    class_name: str = "class"
    sources: tuple[str, ...] | None = field(default=None, compare=False)

    def __post_init__(self):
        y = np.array(self.y, dtype=np.int64).reshape(-1)
        X = np.array(self.X, dtype=np.float64)
        if X.size != y.size * len(self.attribute_names):
            raise ValueError("X and y disagree on instance count")
        X = X.reshape(y.size, len(self.attribute_names))
        if len(set(self.attribute_names) | {self.class_name}) != len(self.attribute_names) + 1:
            raise BadAttribute("attribute names must be unique")
        if y.size and (y.min() < 0 or y.max() >= len(self.class_values)):
            raise ValueError("label out of range")
        X.setflags(write=False)
        y.setflags(write=False)
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "attribute_names", tuple(self.attribute_names))
        object.__setattr__(self, "class_values", tuple(self.class_values))

    def __len__(self) -> int:
        return int(self.y.size)

    def __eq__(self, other) -> bool:
        if not isinstance(other, Dataset):
            return NotImplemented
        return (
            self.relation == other.relation
            and self.attribute_names == other.attribute_names
            and self.class_values == other.class_values
            and self.class_name == other.class_name
            and np.array_equal(self.X, other.X)
            and np.array_equal(self.y, other.y)
        )

    @property
    def n_attributes(self) -> int:
        return len(self.attribute_names)

    @property
    def n_classes(self) -> int:
        return len(self.class_values)

    @property
    def attributes(self) -> list[AttributeSpec]:
        specs = [AttributeSpec(n) for n in self.attribute_names]
        return specs + [AttributeSpec(self.class_name, self.class_values)]

    @property
    def instances(self) -> list[Instance]:
        return [Instance(tuple(map(float, row)), int(c)) for row, c in zip(self.X, self.y)]

    def class_counts(self) -> np.ndarray:
        return np.bincount(self.y, minlength=self.n_classes)

    def subset(self, idx) -> "Dataset":
        idx = np.asarray(idx, dtype=np.int64)
        src = None if self.sources is None else tuple(self.sources[i] for i in idx)
        return Dataset(
            self.relation, self.attribute_names, self.class_values,
            self.X[idx], self.y[idx], self.class_name, src,
        )

    def with_columns(self, X: np.ndarray, names: Sequence[str], relation: str | None = None) -> "Dataset":
        return Dataset(
            relation or self.relation, tuple(names), self.class_values,
            X, self.y, self.class_name, self.sources,
        )

    def attribute_index(self, name: str) -> int:
        try:
            return self.attribute_names.index(name)
        except ValueError:
            raise BadAttribute(f"unknown attribute {name!r}") from None


@dataclass
class IngestResult:
    dataset: Dataset
    skipped: list[tuple[str, str]]  # (path, reason)


def _worker_count() -> int:
    env = os.environ.get("SIDECHANNEL_THREADS")
    if env:
        return max(1, int(env))
    return min(8, os.cpu_count() or 1)


def _fingerprint_or_reason(path: Path):
    try:
        return fingerprint_file(path).as_row(), None
    except (OSError, SideChannelError) as exc:
        return None, f"{type(exc).__name__}: {exc}"


def ingest_corpus(root: str | os.PathLike, relation: str | None = None) -> IngestResult:
    """Fingerprint every file under ``root/<class>/``.

    Files that cannot be read or are too short are skipped, logged and
    counted. The instance order is sorted by (class, relative path) so the
    result does not depend on thread scheduling.
    """
    root = Path(root)
    if not root.is_dir():
        raise BadCorpusLayout(f"{root} is not a directory")
    classes = sorted(p.name for p in root.iterdir() if p.is_dir())
    if len(classes) < 2:
        raise BadCorpusLayout(f"{root} needs at least 2 class subdirectories, found {len(classes)}")

    jobs: list[tuple[int, Path]] = []
    for ci, cls in enumerate(classes):
        files = sorted(p for p in (root / cls).rglob("*") if p.is_file())
        if not files:
            raise EmptyClass(f"class directory {cls!r} is empty")
        jobs.extend((ci, f) for f in files)

    with ThreadPoolExecutor(_worker_count()) as pool:
        results = list(pool.map(lambda job: _fingerprint_or_reason(job[1]), jobs))

    rows, labels, sources, skipped = [], [], [], []
    for (ci, path), (row, reason) in zip(jobs, results):
        rel = path.relative_to(root).as_posix()
        if row is None:
            skipped.append((rel, reason))
            log.warning("skipped %s (%s)", rel, reason)
            continue
        rows.append(row)
        labels.append(ci)
        sources.append(rel)

    present = set(labels)
    for ci, cls in enumerate(classes):
        if ci not in present:
            raise EmptyClass(f"every file in class {cls!r} was skipped")

    ds = Dataset(
        relation or root.resolve().name,
        ATTRIBUTE_NAMES,
        tuple(classes),
        np.array(rows, dtype=np.float64).reshape(-1, len(ATTRIBUTE_NAMES)),
        np.array(labels, dtype=np.int64),
        sources=tuple(sources),
    )
    return IngestResult(ds, skipped)


# ---------------------------------------------------------------- ARFF / CSV


def format_number(v: float) -> str:
    """Shortest text that parses back to the identical float."""
    v = float(v)
    if v.is_integer() and abs(v) < 1e15:
        return str(int(v))
    return repr(v)


_ARFF_TOKEN = re.compile(r"""\s*('(?:[^'\\]|\\.)*'|"(?:[^"\\]|\\.)*"|[^\s{]+)\s*(.*)$""", re.S)


def _quote(name: str) -> str:
    if re.fullmatch(r"[A-Za-z_][\w.\-]*", name):
        return name
    return "'" + name.replace("\\", "\\\\").replace("'", "\\'") + "'"


def _unquote(tok: str) -> str:
    if len(tok) >= 2 and tok[0] == tok[-1] and tok[0] in "'\"":
        return re.sub(r"\\(.)", r"\1", tok[1:-1])
    return tok


def write_arff(ds: Dataset, sink: TextIO) -> None:
    sink.write(f"@relation {_quote(ds.relation)}\n\n")
    for name in ds.attribute_names:
        sink.write(f"@attribute {_quote(name)} numeric\n")
    values = ",".join(_quote(v) for v in ds.class_values)
    sink.write(f"@attribute {_quote(ds.class_name)} {{{values}}}\n\n@data\n")
    for row, label in zip(ds.X, ds.y):
        cells = [format_number(v) for v in row]
        cells.append(_quote(ds.class_values[label]))
        sink.write(",".join(cells) + "\n")


def read_arff(source: TextIO | str | os.PathLike) -> Dataset:
    if isinstance(source, (str, os.PathLike)):
        with open(source, encoding="utf-8") as fh:
            return read_arff(fh)

    relation = None
    attrs: list[tuple[str, tuple[str, ...] | None]] = []
    rows: list[list[float]] = []
    labels: list[int] = []
    in_data = False
    class_lookup: dict[str, int] = {}

    for lineno, raw in enumerate(source, start=1):
        line = raw.strip()
        if not line or line.startswith("%"):
            continue
        if not in_data:
            low = line.lower()
            if low.startswith("@relation"):
                m = _ARFF_TOKEN.match(line[len("@relation"):])
                if not m:
                    raise ParseError(f"line {lineno}: missing relation name", lineno)
                relation = _unquote(m.group(1))
            elif low.startswith("@attribute"):
                m = _ARFF_TOKEN.match(line[len("@attribute"):])
                if not m:
                    raise ParseError(f"line {lineno}: malformed attribute", lineno)
                name, kind = _unquote(m.group(1)), m.group(2).strip()
                if kind.lower() in ("numeric", "real", "integer"):
                    attrs.append((name, None))
                elif kind.startswith("{") and kind.endswith("}"):
                    vals = tuple(_unquote(v.strip()) for v in _split_csv(kind[1:-1]))
                    attrs.append((name, vals))
                else:
                    raise ParseError(f"line {lineno}: unsupported attribute kind {kind!r}", lineno)
            elif low.startswith("@data"):
                in_data = True
                if not attrs or attrs[-1][1] is None:
                    raise ParseError(f"line {lineno}: last attribute must be the nominal class", lineno)
                if any(vals is not None for _, vals in attrs[:-1]):
                    raise ParseError(f"line {lineno}: only the class attribute may be nominal", lineno)
                class_lookup = {v: i for i, v in enumerate(attrs[-1][1])}
            else:
                raise ParseError(f"line {lineno}: unexpected header line", lineno)
            continue

        cells = [c.strip() for c in _split_csv(line)]
        if len(cells) != len(attrs):
            raise ParseError(
                f"line {lineno}: expected {len(attrs)} values, got {len(cells)}", lineno
            )
        try:
            rows.append([float(c) for c in cells[:-1]])
        except ValueError:
            raise ParseError(f"line {lineno}: non-numeric value", lineno) from None
        label = _unquote(cells[-1])
        if label not in class_lookup:
            raise ParseError(f"line {lineno}: unknown class value {label!r}", lineno)
        labels.append(class_lookup[label])

    if relation is None or not in_data:
        raise ParseError("missing @relation or @data section", None)
    names = tuple(n for n, _ in attrs[:-1])
    return Dataset(
        relation, names, attrs[-1][1],
        np.array(rows, dtype=np.float64).reshape(-1, len(names)),
        np.array(labels, dtype=np.int64),
        class_name=attrs[-1][0],
    )


def _split_csv(text: str) -> list[str]:
    return next(csv.reader([text], quotechar="'", skipinitialspace=True, escapechar="\\"))


def write_csv(ds: Dataset, sink: TextIO) -> None:
    w = csv.writer(sink, lineterminator="\n")
    w.writerow([*ds.attribute_names, ds.class_name])
    for row, label in zip(ds.X, ds.y):
        w.writerow([*(format_number(v) for v in row), ds.class_values[label]])


def read_csv(source: TextIO, relation: str = "csv") -> Dataset:
    reader = csv.reader(source)
    header = next(reader, None)
    if not header or len(header) < 2:
        raise ParseError("line 1: CSV header needs attributes plus class", 1)
    rows, raw_labels = [], []
    for lineno, cells in enumerate(reader, start=2):
        if not cells:
            continue
        if len(cells) != len(header):
            raise ParseError(f"line {lineno}: expected {len(header)} values, got {len(cells)}", lineno)
        try:
            rows.append([float(c) for c in cells[:-1]])
        except ValueError:
            raise ParseError(f"line {lineno}: non-numeric value", lineno) from None
        raw_labels.append(cells[-1])
    classes = tuple(sorted(set(raw_labels)))
    lookup = {c: i for i, c in enumerate(classes)}
    return Dataset(
        relation, tuple(header[:-1]), classes,
        np.array(rows, dtype=np.float64).reshape(-1, len(header) - 1),
        np.array([lookup[c] for c in raw_labels], dtype=np.int64),
        class_name=header[-1],
    )


def arff_text(ds: Dataset) -> str:
    buf = io.StringIO()
    write_arff(ds, buf)
    return buf.getvalue()


# ---------------------------------------------------------------- filters


def remove_attributes(ds: Dataset, names: Iterable[str]) -> Dataset:
    names = list(names)
    if not names:
        return ds.with_columns(ds.X, ds.attribute_names)
    drop = []
    for n in names:
        if n == ds.class_name:
            raise BadAttribute("cannot remove the class attribute")
        drop.append(ds.attribute_index(n))
    keep = [i for i in range(ds.n_attributes) if i not in set(drop)]
    tag = ",".join(str(i + 1) for i in sorted(set(drop)))
    return ds.with_columns(
        ds.X[:, keep],
        [ds.attribute_names[i] for i in keep],
        relation=f"{ds.relation}-remove-{tag}",
    )


@dataclass(frozen=True)
class MinMaxTable:
    lows: np.ndarray
    highs: np.ndarray

    def apply(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        span = self.highs - self.lows
        safe = np.where(span > 0, span, 1.0)
        out = np.where(span > 0, (X - self.lows) / safe, 0.0)
        return np.clip(out, 0.0, 1.0)


def min_max_normalize(ds: Dataset) -> tuple[Dataset, MinMaxTable]:
    if len(ds) == 0:
        raise EmptyDataset("cannot normalize an empty dataset")
    table = MinMaxTable(ds.X.min(axis=0), ds.X.max(axis=0))
    return ds.with_columns(table.apply(ds.X), ds.attribute_names), table
