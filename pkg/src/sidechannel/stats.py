"""Byte-stream randomness statistics (entropy, chi-square, mean, Monte-Carlo pi,
serial correlation) and the eight-feature fingerprint built from them.

Everything histogram-based is computed from exact integer sums, so chunked and
one-shot processing agree bit for bit.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field
from typing import BinaryIO, Iterable

import numpy as np
from scipy.stats import chi2

from .errors import EmptyStream, InsufficientData

ATTRIBUTE_NAMES = (
    "entropy",
    "size",
    "compressionrate",
    "chisqstatistic",
    "arithmean",
    "montepi",
    "errmontepi",
    "corr",
)

MC_GROUP = 6
# 24-bit coordinates; inside test is X^2 + Y^2 <= MC_RADIUS^2 in exact integers
MC_RADIUS = (1 << 24) - 1
_EDGE = MC_GROUP - 1


def _as_array(stream) -> np.ndarray:
    if isinstance(stream, np.ndarray):
        return stream.astype(np.uint8, copy=False).ravel()
    return np.frombuffer(bytes(stream), dtype=np.uint8)


@dataclass(frozen=True)
class ByteHistogram:
    counts: np.ndarray
    total: int

    def __post_init__(self):
        if self.counts.shape != (256,):
            raise ValueError("histogram needs exactly 256 bins")


@dataclass(frozen=True)
class ChiSquareResult:
    statistic: float
    p_value: float
    degrees_of_freedom: int = 255


def byte_histogram(stream) -> ByteHistogram:
    arr = _as_array(stream)
    counts = np.bincount(arr, minlength=256).astype(np.int64)
    return ByteHistogram(counts, int(arr.size))


def entropy(hist: ByteHistogram) -> float:
    """Shannon entropy in bits per byte."""
    if hist.total == 0:
        raise EmptyStream("entropy of an empty stream")
    c = hist.counts[hist.counts > 0].astype(np.float64)
    p = c / hist.total
    h = float(-np.sum(p * (np.log(p) / math.log(2.0))))
    if h <= 0.0:  # single symbol gives -0.0
        return 0.0
    return min(h, 8.0)


def compression_estimate(entropy_bits: float) -> float:
    return (8.0 - entropy_bits) / 8.0 * 100.0


def _chi_square_statistic(counts: np.ndarray, total: int) -> float:
    # sum (c - E)^2 / E with E = N/256 equals (256 * sum c^2 - N^2) / N
    sum_sq = int(np.dot(counts, counts))
    return (256 * sum_sq - total * total) / total


def chi_square(hist: ByteHistogram) -> ChiSquareResult:
    if hist.total == 0:
        raise EmptyStream("chi-square of an empty stream")
    stat = _chi_square_statistic(hist.counts, hist.total)
    return ChiSquareResult(stat, float(chi2.sf(stat, 255)), 255)


def arithmetic_mean(hist: ByteHistogram) -> float:
    if hist.total == 0:
        raise EmptyStream("mean of an empty stream")
    return int(np.dot(np.arange(256, dtype=np.int64), hist.counts)) / hist.total


def _mc_counts(arr: np.ndarray, phase: int) -> tuple[int, int]:
    """(inside, groups) for 6-byte groups starting at offsets phase, phase+6, ..."""
    body = arr[phase:]
    n = body.size // MC_GROUP
    if n == 0:
        return 0, 0
    g = body[: n * MC_GROUP].reshape(n, MC_GROUP).astype(np.int64)
    x = (g[:, 0] << 16) | (g[:, 1] << 8) | g[:, 2]
    y = (g[:, 3] << 16) | (g[:, 4] << 8) | g[:, 5]
    inside = int(np.count_nonzero(x * x + y * y <= MC_RADIUS * MC_RADIUS))
    return inside, n


def monte_carlo_pi(stream) -> tuple[float, float]:
    """Returns (pi estimate, error percent)."""
    arr = _as_array(stream)
    if arr.size < MC_GROUP:
        raise InsufficientData("Monte-Carlo pi needs at least 6 bytes")
    inside, n = _mc_counts(arr, 0)
    est = 4.0 * inside / n
    return est, abs(est - math.pi) / math.pi * 100.0


def _serial_from_sums(n: int, s1: int, s2: int, cross: int) -> float | None:
    num = n * cross - s1 * s1
    den = n * s2 - s1 * s1
    if den == 0:
        return None
    return num / den


def serial_correlation(stream) -> float | None:
    """Lag-1 correlation with wrap-around; None when the stream is constant."""
    arr = _as_array(stream)
    if arr.size < 2:
        raise InsufficientData("serial correlation needs at least 2 bytes")
    v = arr.astype(np.int64)
    cross = int(np.dot(v, np.roll(v, -1)))
    return _serial_from_sums(int(v.size), int(v.sum()), int(np.dot(v, v)), cross)


@dataclass(frozen=True)
class Fingerprint:
    entropy: float
    size: int
    compression_rate: float
    chisq_statistic: float
    arith_mean: float
    monte_pi: float
    err_monte_pi: float
    serial_corr: float
    corr_undefined: bool = False

    def as_row(self) -> list[float]:
        return [
            self.entropy,
            float(self.size),
            self.compression_rate,
            self.chisq_statistic,
            self.arith_mean,
            self.monte_pi,
            self.err_monte_pi,
            self.serial_corr,
        ]

    def tsv(self, name: str = "") -> str:
        cells = [
            f"{self.entropy:.6f}",
            str(self.size),
            f"{self.compression_rate:.6f}",
            f"{self.chisq_statistic:.6f}",
            f"{self.arith_mean:.6f}",
            f"{self.monte_pi:.6f}",
            f"{self.err_monte_pi:.6f}",
            "undefined" if self.corr_undefined else f"{self.serial_corr:.6f}",
        ]
        if name:
            cells.append(name)
        return "\t".join(cells)

    def report(self, p_value: float | None = None) -> str:
        """Prose layout of the classic ent utility."""
        if p_value is None:
            p_value = float(chi2.sf(self.chisq_statistic, 255))
        pct = p_value * 100.0
        if pct < 0.01:
            exceed = "less than 0.01"
        elif pct > 99.99:
            exceed = "more than 99.99"
        else:
            exceed = f"{pct:.2f}"
        corr = "undefined (all values equal!)" if self.corr_undefined else f"{self.serial_corr:.6f}"
        return (
            f"Entropy = {self.entropy:.6f} bits per byte.\n"
            "\n"
            "Optimum compression would reduce the size\n"
            f"of this {self.size} byte file by {self.compression_rate:.0f} percent.\n"
            "\n"
            f"Chi square distribution for {self.size} samples is {self.chisq_statistic:.2f}, and randomly\n"
            f"would exceed this value {exceed} percent of the times.\n"
            "\n"
            f"Arithmetic mean value of data bytes is {self.arith_mean:.4f} (127.5 = random).\n"
            f"Monte Carlo value for Pi is {self.monte_pi:.9f} (error {self.err_monte_pi:.2f} percent).\n"
            f"Serial correlation coefficient is {corr} (totally uncorrelated = 0.0).\n"
        )


def _zeros6() -> list[int]:
    return [0] * MC_GROUP


@dataclass
class ByteStatsAccumulator:
    """Streaming state for one contiguous byte segment.

    Monte-Carlo groups are tracked for all six alignments so that two
    segments can be merged without knowing their absolute offsets; the
    first and last five bytes resolve the groups that straddle a boundary.
    ``merge`` is associative.
    """

    total: int = 0
    counts: np.ndarray = field(default_factory=lambda: np.zeros(256, dtype=np.int64))
    sum1: int = 0
    sum2: int = 0
    cross: int = 0  # sum of b[i] * b[i+1] inside the segment, no wrap
    head: bytes = b""
    tail: bytes = b""
    mc_inside: list[int] = field(default_factory=_zeros6)
    mc_groups: list[int] = field(default_factory=_zeros6)

    @classmethod
    def from_bytes(cls, chunk) -> "ByteStatsAccumulator":
        arr = _as_array(chunk)
        acc = cls()
        if arr.size == 0:
            return acc
        v = arr.astype(np.int64)
        acc.total = int(arr.size)
        acc.counts = np.bincount(arr, minlength=256).astype(np.int64)
        acc.sum1 = int(v.sum())
        acc.sum2 = int(np.dot(v, v))
        acc.cross = int(np.dot(v[:-1], v[1:]))
        raw = arr.tobytes()
        acc.head = raw[:_EDGE]
        acc.tail = raw[-_EDGE:]
        for p in range(MC_GROUP):
            acc.mc_inside[p], acc.mc_groups[p] = _mc_counts(arr, p)
        return acc

    def merge(self, other: "ByteStatsAccumulator") -> "ByteStatsAccumulator":
        """State of ``self`` followed immediately by ``other``."""
        if self.total == 0:
            return other.copy()
        if other.total == 0:
            return self.copy()
        a, b = self, other
        out = ByteStatsAccumulator()
        out.total = a.total + b.total
        out.counts = a.counts + b.counts
        out.sum1 = a.sum1 + b.sum1
        out.sum2 = a.sum2 + b.sum2
        out.cross = a.cross + b.cross + a.tail[-1] * b.head[0]
        out.head = (a.head + b.head)[:_EDGE]
        out.tail = (a.tail + b.tail)[-_EDGE:]

        window = a.tail + b.head
        w0 = a.total - len(a.tail)  # absolute offset of window[0] in the merged segment
        for p in range(MC_GROUP):
            inside = a.mc_inside[p] + b.mc_inside[(p - a.total) % MC_GROUP]
            groups = a.mc_groups[p] + b.mc_groups[(p - a.total) % MC_GROUP]
            for s in range(max(w0, a.total - _EDGE), a.total):
                if s % MC_GROUP != p or s + MC_GROUP > out.total:
                    continue
                g = window[s - w0 : s - w0 + MC_GROUP]
                x = (g[0] << 16) | (g[1] << 8) | g[2]
                y = (g[3] << 16) | (g[4] << 8) | g[5]
                inside += x * x + y * y <= MC_RADIUS * MC_RADIUS
                groups += 1
            out.mc_inside[p] = int(inside)
            out.mc_groups[p] = groups
        return out

    def update(self, chunk) -> None:
        merged = self.merge(ByteStatsAccumulator.from_bytes(chunk))
        self.__dict__.update(merged.__dict__)

    def copy(self) -> "ByteStatsAccumulator":
        return ByteStatsAccumulator(
            self.total,
            self.counts.copy(),
            self.sum1,
            self.sum2,
            self.cross,
            self.head,
            self.tail,
            list(self.mc_inside),
            list(self.mc_groups),
        )

    def histogram(self) -> ByteHistogram:
        return ByteHistogram(self.counts.copy(), self.total)

    def serial_correlation(self) -> float | None:
        if self.total < 2:
            raise InsufficientData("serial correlation needs at least 2 bytes")
        cross = self.cross + self.tail[-1] * self.head[0]
        return _serial_from_sums(self.total, self.sum1, self.sum2, cross)

    def monte_carlo_pi(self) -> tuple[float, float]:
        if self.total < MC_GROUP:
            raise InsufficientData("Monte-Carlo pi needs at least 6 bytes")
        est = 4.0 * self.mc_inside[0] / self.mc_groups[0]
        return est, abs(est - math.pi) / math.pi * 100.0

    def fingerprint(self) -> Fingerprint:
        if self.total == 0:
            raise EmptyStream("fingerprint of an empty stream")
        hist = self.histogram()
        pi, err = self.monte_carlo_pi()
        h = entropy(hist)
        corr = self.serial_correlation()
        return Fingerprint(
            entropy=h,
            size=self.total,
            compression_rate=compression_estimate(h),
            chisq_statistic=_chi_square_statistic(hist.counts, hist.total),
            arith_mean=arithmetic_mean(hist),
            monte_pi=pi,
            err_monte_pi=err,
            serial_corr=0.0 if corr is None else corr,
            corr_undefined=corr is None,
        )


def fingerprint_bytes(stream) -> Fingerprint:
    arr = _as_array(stream)
    if arr.size == 0:
        raise EmptyStream("fingerprint of an empty stream")
    if arr.size < MC_GROUP:
        raise InsufficientData(f"need at least {MC_GROUP} bytes, got {arr.size}")
    hist = byte_histogram(arr)
    h = entropy(hist)
    pi, err = monte_carlo_pi(arr)
    corr = serial_correlation(arr)
    return Fingerprint(
        entropy=h,
        size=hist.total,
        compression_rate=compression_estimate(h),
        chisq_statistic=_chi_square_statistic(hist.counts, hist.total),
        arith_mean=arithmetic_mean(hist),
        monte_pi=pi,
        err_monte_pi=err,
        serial_corr=0.0 if corr is None else corr,
        corr_undefined=corr is None,
    )


def fingerprint_chunks(chunks: Iterable[bytes]) -> Fingerprint:
    acc = ByteStatsAccumulator()
    for chunk in chunks:
        acc.update(chunk)
    return acc.fingerprint()


def fingerprint_file(path: str | os.PathLike, chunk_size: int = 1 << 20) -> Fingerprint:
    with open(path, "rb") as fh:
        return fingerprint_chunks(_read_chunks(fh, chunk_size))


def _read_chunks(fh: BinaryIO, size: int):
    while True:
        buf = fh.read(size)
        if not buf:
            return
        yield buf
