"""Rasters, PPM and run-length serialization, watermark compositing, and
synthetic two-class corpora for desk-scale experiments."""

from __future__ import annotations

import os
import shlex
import struct
import subprocess
import tempfile
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import BinaryIO, Callable, Mapping, Sequence

import numpy as np

from .errors import BadParameter, EmptyClass, ParseError, ShapeError

RLE_MAGIC = b"SCRL1"


@dataclass(frozen=True, eq=False)
class Raster:
    """Row-major (height, width, 3) uint8 pixels, optional (height, width) alpha."""

    pixels: np.ndarray
    alpha: np.ndarray | None = None

    def __post_init__(self):
        px = np.asarray(self.pixels)
        if px.ndim != 3 or px.shape[2] != 3 or px.shape[0] < 1 or px.shape[1] < 1:
            raise ShapeError(f"pixels must be (height, width, 3), got {px.shape}")
        object.__setattr__(self, "pixels", px.astype(np.uint8, copy=False))
        if self.alpha is not None:
            a = np.asarray(self.alpha).astype(np.uint8, copy=False)
            if a.shape != px.shape[:2]:
                raise ShapeError("alpha plane must match the pixel grid")
            object.__setattr__(self, "alpha", a)

    @property
    def width(self) -> int:
        return int(self.pixels.shape[1])

    @property
    def height(self) -> int:
        return int(self.pixels.shape[0])

    def __eq__(self, other) -> bool:
        if not isinstance(other, Raster):
            return NotImplemented
        if (self.alpha is None) != (other.alpha is None):
            return False
        same_alpha = self.alpha is None or np.array_equal(self.alpha, other.alpha)
        return np.array_equal(self.pixels, other.pixels) and same_alpha


# ---------------------------------------------------------------- PPM


def write_ppm(raster: Raster, sink: BinaryIO) -> None:
    sink.write(f"P6\n{raster.width} {raster.height}\n255\n".encode("ascii"))
    sink.write(raster.pixels.tobytes())


def ppm_bytes(raster: Raster) -> bytes:
    return f"P6\n{raster.width} {raster.height}\n255\n".encode("ascii") + raster.pixels.tobytes()


def _ppm_tokens(data: bytes, count: int) -> tuple[list[int], int]:
    """Read ``count`` whitespace-separated header integers, skipping comments."""
    pos, out = 2, []
    while len(out) < count:
        while pos < len(data) and (data[pos : pos + 1].isspace() or data[pos : pos + 1] == b"#"):
            if data[pos : pos + 1] == b"#":
                end = data.find(b"\n", pos)
                pos = len(data) if end < 0 else end + 1
            else:
                pos += 1
        start = pos
        while pos < len(data) and data[pos : pos + 1].isdigit():
            pos += 1
        if start == pos:
            raise ParseError(f"byte {start}: expected a header integer", start)
        out.append(int(data[start:pos]))
    if pos >= len(data) or not data[pos : pos + 1].isspace():
        raise ParseError(f"byte {pos}: expected whitespace after header", pos)
    return out, pos + 1


def parse_ppm(data: bytes) -> Raster:
    if data[:2] != b"P6":
        raise ParseError("byte 0: not a binary PPM (P6) file", 0)
    (w, h, maxval), start = _ppm_tokens(data, 3)
    if maxval != 255:
        raise ParseError(f"byte {start - 1}: maxval {maxval} unsupported, need 255", start - 1)
    if w < 1 or h < 1:
        raise ParseError(f"byte {start - 1}: empty image", start - 1)
    need = w * h * 3
    body = data[start : start + need]
    if len(body) < need:
        raise ParseError(
            f"byte {start + len(body)}: pixel data truncated ({len(body)} of {need} bytes)",
            start + len(body),
        )
    return Raster(np.frombuffer(body, dtype=np.uint8).reshape(h, w, 3).copy())


def read_ppm(source: BinaryIO | str | os.PathLike) -> Raster:
    if isinstance(source, (str, os.PathLike)):
        return parse_ppm(Path(source).read_bytes())
    return parse_ppm(source.read())


# ---------------------------------------------------------------- RLE container


def rle_serialize(raster: Raster) -> bytes:
    """``SCRL1`` + u32 BE width + u32 BE height, then for each channel in
    R, G, B order the row-major samples as (count, value) byte pairs with
    1 <= count <= 255."""
    out = bytearray(RLE_MAGIC)
    out += struct.pack(">II", raster.width, raster.height)
    for ch in range(3):
        out += _rle_channel(raster.pixels[:, :, ch].ravel())
    return bytes(out)


def _rle_channel(v: np.ndarray) -> bytes:
    change = np.flatnonzero(v[1:] != v[:-1]) + 1
    starts = np.concatenate(([0], change))
    lengths = np.diff(np.concatenate((starts, [v.size])))
    values = v[starts]
    # split runs longer than 255
    reps = (lengths + 254) // 255
    vals = np.repeat(values, reps)
    counts = np.full(vals.size, 255, dtype=np.int64)
    last = np.cumsum(reps) - 1
    counts[last] = lengths - (reps - 1) * 255
    pairs = np.empty(vals.size * 2, dtype=np.uint8)
    pairs[0::2] = counts
    pairs[1::2] = vals
    return pairs.tobytes()


def rle_parse(data: bytes) -> Raster:
    if data[:5] != RLE_MAGIC:
        raise ParseError("byte 0: bad RLE magic", 0)
    if len(data) < 13:
        raise ParseError(f"byte {len(data)}: truncated RLE header", len(data))
    w, h = struct.unpack(">II", data[5:13])
    n = w * h
    pos = 13
    planes = []
    for _ in range(3):
        plane = np.empty(n, dtype=np.uint8)
        filled = 0
        while filled < n:
            if pos + 2 > len(data):
                raise ParseError(f"byte {pos}: truncated run data", pos)
            count, value = data[pos], data[pos + 1]
            if count == 0 or filled + count > n:
                raise ParseError(f"byte {pos}: bad run length {count}", pos)
            plane[filled : filled + count] = value
            filled += count
            pos += 2
        planes.append(plane.reshape(h, w))
    if pos != len(data):
        raise ParseError(f"byte {pos}: trailing data", pos)
    return Raster(np.stack(planes, axis=2))


# ---------------------------------------------------------------- compositing


def placement(base: Raster, mark: Raster, rng: np.random.Generator) -> tuple[int, int]:
    if mark.width > base.width or mark.height > base.height:
        raise ShapeError(
            f"mark {mark.width}x{mark.height} does not fit in {base.width}x{base.height}"
        )
    x = int(rng.integers(0, base.width - mark.width + 1))
    y = int(rng.integers(0, base.height - mark.height + 1))
    return x, y


def blend(base: Raster, mark: Raster, alpha: float, x: int, y: int) -> Raster:
    if not 0.0 <= alpha <= 1.0:
        raise BadParameter("alpha must be in [0, 1]")
    out = base.pixels.copy()
    h, w = mark.height, mark.width
    a = alpha if mark.alpha is None else alpha * (mark.alpha.astype(np.float64) / 255.0)[:, :, None]
    region = out[y : y + h, x : x + w].astype(np.float64)
    mixed = (1.0 - a) * region + a * mark.pixels.astype(np.float64)
    out[y : y + h, x : x + w] = np.floor(mixed + 0.5).clip(0, 255).astype(np.uint8)
    return Raster(out)


def composite_watermark(base: Raster, mark: Raster, alpha: float, rng: np.random.Generator) -> Raster:
    """Blend ``mark`` into ``base`` at a uniformly random fully-inside position."""
    x, y = placement(base, mark, rng)
    return blend(base, mark, alpha, x, y)


def default_watermark(width: int = 24, height: int = 12) -> Raster:
    """A small two-tone badge with a soft alpha edge, standing in for a logo."""
    yy, xx = np.mgrid[0:height, 0:width]
    px = np.zeros((height, width, 3), dtype=np.uint8)
    stripe = ((xx // 3 + yy // 3) % 2).astype(bool)
    px[stripe] = (250, 250, 250)
    px[~stripe] = (20, 60, 160)
    edge = np.minimum.reduce([xx + 1, yy + 1, width - xx, height - yy])
    alpha = np.clip(edge * 85, 0, 255).astype(np.uint8)
    return Raster(px, alpha)


# ---------------------------------------------------------------- synthetic bases


@dataclass(frozen=True)
class ClassTexture:
    sigma: float  # Gaussian noise stddev
    gradient: float = 80.0  # peak-to-peak amplitude of the smooth background
    sigma_jitter: float = 0.0  # per-raster sigma drawn from sigma +/- jitter


@dataclass(frozen=True)
class BaseSpec:
    classes: Mapping[str, ClassTexture]
    per_class: int | Mapping[str, int] = 100
    width: int = 64
    height: int = 64

    def count(self, name: str) -> int:
        if isinstance(self.per_class, int):
            return self.per_class
        return int(self.per_class[name])


def _synthetic_raster(tex: ClassTexture, width: int, height: int, rng: np.random.Generator) -> Raster:
    sigma = tex.sigma
    if tex.sigma_jitter:
        sigma = max(0.0, sigma + rng.uniform(-tex.sigma_jitter, tex.sigma_jitter))
    yy, xx = np.mgrid[0:height, 0:width].astype(np.float64)
    angle = rng.uniform(0, 2 * np.pi)
    ramp = np.cos(angle) * xx / max(width - 1, 1) + np.sin(angle) * yy / max(height - 1, 1)
    ramp = (ramp - ramp.min()) / max(np.ptp(ramp), 1e-12)
    center = rng.uniform(90, 165, size=3)
    tint = rng.uniform(0.6, 1.0, size=3)
    img = center + (ramp[:, :, None] - 0.5) * tex.gradient * tint
    img = img + rng.normal(0.0, 1.0, size=img.shape) * sigma
    return Raster(np.floor(img + 0.5).clip(0, 255).astype(np.uint8))


def generate_synthetic_bases(spec: BaseSpec, seed: int) -> dict[str, list[Raster]]:
    """Smooth gradients plus per-class Gaussian noise; class order is sorted."""
    for name, tex in spec.classes.items():
        if tex.sigma < 0 or tex.sigma_jitter < 0:
            raise BadParameter(f"class {name!r}: noise stddev must be non-negative")
    out = {}
    for ci, name in enumerate(sorted(spec.classes)):
        tex = spec.classes[name]
        rasters = []
        for i in range(spec.count(name)):
            rng = np.random.default_rng([seed, ci, i])
            rasters.append(_synthetic_raster(tex, spec.width, spec.height, rng))
        out[name] = rasters
    return out


# ---------------------------------------------------------------- encoders and corpora


Encoder = Callable[[Raster], bytes]


def exec_encoder(template: str) -> Encoder:
    """Run an external command per image; ``{input}`` receives a PPM path and
    ``{output}`` the path the command must write."""

    def encode(raster: Raster) -> bytes:
        with tempfile.TemporaryDirectory() as tmp:
            src, dst = Path(tmp, "in.ppm"), Path(tmp, "out.bin")
            src.write_bytes(ppm_bytes(raster))
            cmd = template.format(input=shlex.quote(str(src)), output=shlex.quote(str(dst)))
            subprocess.run(cmd, shell=True, check=True, capture_output=True)
            return dst.read_bytes()

    return encode


def get_encoder(spec: str) -> tuple[Encoder, str]:
    """Encoder and file extension for ``ppm``, ``rle`` or ``exec:<template>``."""
    if spec == "ppm":
        return ppm_bytes, "ppm"
    if spec == "rle":
        return rle_serialize, "rle"
    if spec.startswith("exec:"):
        return exec_encoder(spec[len("exec:") :]), "bin"
    raise BadParameter(f"unknown encoder {spec!r}")


def load_bases(root: str | os.PathLike) -> dict[str, list[Raster]]:
    """Read ``root/<class>/*.ppm`` into labeled raster sets."""
    root = Path(root)
    out = {}
    for d in sorted(p for p in root.iterdir() if p.is_dir()):
        out[d.name] = [read_ppm(f) for f in sorted(d.glob("*.ppm"))]
    return out


def synth_corpus(
    bases: Mapping[str, Sequence[Raster]],
    mark: Raster,
    alpha: float,
    count_per_class: int,
    seed: int,
    out_dir: str | os.PathLike,
    encoder: str = "rle",
    workers: int | None = None,
) -> list[Path]:
    """Write ``count_per_class`` watermarked images per class under
    ``out_dir/<class>/``. Each file draws its base and placement from its own
    seed (master seed, class index, file index), so output does not depend
    on the worker count."""
    if count_per_class < 1:
        raise BadParameter("count_per_class must be positive")
    for name, rasters in bases.items():
        if not rasters:
            raise EmptyClass(f"class {name!r} has no base rasters")
    encode, ext = get_encoder(encoder)
    out_dir = Path(out_dir)
    jobs = []
    for ci, name in enumerate(sorted(bases)):
        (out_dir / name).mkdir(parents=True, exist_ok=True)
        jobs += [(ci, name, i) for i in range(count_per_class)]

    def make(job) -> Path:
        ci, name, i = job
        rng = np.random.default_rng([seed, ci, i])
        pool_ = bases[name]
        base = pool_[int(rng.integers(0, len(pool_)))]
        img = composite_watermark(base, mark, alpha, rng)
        path = out_dir / name / f"{name}_{i:06d}.{ext}"
        path.write_bytes(encode(img))
        return path

    if workers is None:
        workers = int(os.environ.get("SIDECHANNEL_THREADS", "1"))
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            return list(pool.map(make, jobs))
    return [make(j) for j in jobs]


def write_bases(bases: Mapping[str, Sequence[Raster]], out_dir: str | os.PathLike) -> None:
    out_dir = Path(out_dir)
    for name, rasters in bases.items():
        (out_dir / name).mkdir(parents=True, exist_ok=True)
        for i, r in enumerate(rasters):
            (out_dir / name / f"{name}_{i:04d}.ppm").write_bytes(ppm_bytes(r))


def write_raw_corpus(bases: Mapping[str, Sequence[Raster]], out_dir, encoder: str = "rle") -> None:
    """Serialize base rasters as-is (no watermark) into a class-directory corpus."""
    encode, ext = get_encoder(encoder)
    out_dir = Path(out_dir)
    for name, rasters in bases.items():
        (out_dir / name).mkdir(parents=True, exist_ok=True)
        for i, r in enumerate(rasters):
            (out_dir / name / f"{name}_{i:04d}.{ext}").write_bytes(encode(r))
