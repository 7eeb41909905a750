"""Indexed-map data model and bit-exact file I/O.

Maps are stored internally as normalized floats in [0, 1]; quantization
happens only when writing PGM/PPM files.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

import numpy as np


class MapKind(Enum):
    BAND_CONTRAST = "BandContrast"
    IPF = "Ipf"
    OTHER = "Other"


class MapFormatError(ValueError):
    """Malformed PGM/PPM header or payload."""


CSV_HEADER = [
    "sampling_ratio",
    "map_kind",
    "seed",
    "ssim",
    "psnr_db",
    "wall_time_s",
    "estimated_acquisition_s",
]


@dataclass(frozen=True)
class MapImage:
    """A post-indexing map over the probe-position grid.

    ``data`` has shape (height, width, channels), values in [0, 1].
    Band contrast is single-channel; IPF maps are RGB.
    """

    width: int
    height: int
    channels: int
    data: np.ndarray
    kind: MapKind = MapKind.OTHER

    def __post_init__(self):
        if self.width < 1 or self.height < 1:
            raise ValueError("map dimensions must be positive")
        if self.channels not in (1, 3):
            raise ValueError("channels must be 1 or 3")
        if self.kind is MapKind.BAND_CONTRAST and self.channels != 1:
            raise ValueError("band contrast maps are single-channel")
        if self.kind is MapKind.IPF and self.channels != 3:
            raise ValueError("IPF maps have 3 channels")
        arr = np.asarray(self.data, dtype=np.float64).reshape(
            self.height, self.width, self.channels
        )
        if not np.all(np.isfinite(arr)):
            raise ValueError("map data must be finite")
        if arr.min() < 0.0 or arr.max() > 1.0:
            raise ValueError("map values must lie in [0, 1]")
        arr.setflags(write=False)
        object.__setattr__(self, "data", arr)

    @property
    def n_positions(self) -> int:
        return self.width * self.height

    def with_data(self, data: np.ndarray) -> "MapImage":
        return MapImage(self.width, self.height, self.channels, data, self.kind)


@dataclass(frozen=True)
class MetricsRecord:
    """One evaluation leg: quality metrics plus acquisition-time accounting."""

    sampling_ratio: float
    ssim: float
    psnr_db: float
    map_kind: MapKind
    seed: int
    wall_time_s: float
    estimated_acquisition_s: float

    def __post_init__(self):
        if not 0.0 < self.sampling_ratio <= 1.0:
            raise ValueError("sampling_ratio must be in (0, 1]")
        if not -1.0 <= self.ssim <= 1.0:
            raise ValueError("ssim must be in [-1, 1]")
        if not (self.psnr_db > 0 or math.isinf(self.psnr_db)):
            raise ValueError("psnr_db must be positive or +inf")
        if self.wall_time_s < 0 or self.estimated_acquisition_s < 0:
            raise ValueError("times must be non-negative")


def _kind_for_channels(channels: int) -> MapKind:
    return MapKind.BAND_CONTRAST if channels == 1 else MapKind.IPF


def _read_header_tokens(raw: bytes, n_tokens: int) -> tuple[list[bytes], int]:
    """Tokenize a PNM header: whitespace-separated, '#' comments to EOL.

    Returns the tokens and the offset of the first payload byte (one
    whitespace byte after the last token).
    """
    tokens = []
    i = 0
    while len(tokens) < n_tokens:
        if i >= len(raw):
            raise MapFormatError("truncated header")
        c = raw[i : i + 1]
        if c == b"#":
            while i < len(raw) and raw[i : i + 1] not in (b"\n", b"\r"):
                i += 1
        elif c.isspace():
            i += 1
        else:
            j = i
            while j < len(raw) and not raw[j : j + 1].isspace():
                j += 1
            tokens.append(raw[i:j])
            i = j
    if i >= len(raw) or not raw[i : i + 1].isspace():
        raise MapFormatError("missing whitespace after maxval")
    return tokens, i + 1


def load_map(path, kind: MapKind | None = None) -> MapImage:
    """Read a binary PGM (P5) or PPM (P6) file into a normalized MapImage.

    Accepts 8-bit or 16-bit maxval; values are scaled by 1/maxval. Kind
    defaults to BandContrast for 1 channel and Ipf for 3 unless overridden.
    """
    raw = Path(path).read_bytes()
    tokens, offset = _read_header_tokens(raw, 4)
    magic = tokens[0]
    if magic == b"P5":
        channels = 1
    elif magic == b"P6":
        channels = 3
    else:
        raise MapFormatError(f"unsupported magic {magic!r}")
    try:
        width, height, maxval = (int(t) for t in tokens[1:4])
    except ValueError as exc:
        raise MapFormatError(f"non-integer header field: {exc}") from exc
    if width < 1 or height < 1:
        raise MapFormatError("non-positive dimensions")
    if not 0 < maxval < 65536:
        raise MapFormatError(f"maxval {maxval} out of range")
    dtype = np.dtype(">u2") if maxval > 255 else np.dtype("u1")
    count = width * height * channels
    payload = raw[offset:]
    if len(payload) < count * dtype.itemsize:
        raise IOError("truncated pixel payload")
    pixels = np.frombuffer(payload, dtype=dtype, count=count).astype(np.float64)
    data = (pixels / maxval).reshape(height, width, channels)
    return MapImage(width, height, channels, data, kind or _kind_for_channels(channels))


def save_map(image: MapImage, path) -> None:
    """Write a MapImage as binary P5 (1ch) / P6 (3ch), maxval 255.

    Quantization is round-half-up: byte = floor(v*255 + 0.5).
    """
    magic = b"P5" if image.channels == 1 else b"P6"
    header = b"%s\n%d %d\n255\n" % (magic, image.width, image.height)
    quantized = np.floor(image.data * 255.0 + 0.5).astype(np.uint8)
    Path(path).write_bytes(header + quantized.tobytes())


def _fmt(value: float) -> str:
    if math.isinf(value):
        return "inf"
    return f"{value:.6f}"


def write_metrics_csv(records: list[MetricsRecord], path) -> None:
    """Write evaluation records in the fixed column order, 6 decimal digits."""
    if not records:
        raise ValueError("no records to write")
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_HEADER)
        for r in records:
            writer.writerow(
                [
                    _fmt(r.sampling_ratio),
                    r.map_kind.value,
                    str(r.seed),
                    _fmt(r.ssim),
                    _fmt(r.psnr_db),
                    _fmt(r.wall_time_s),
                    _fmt(r.estimated_acquisition_s),
                ]
            )


def read_metrics_csv(path) -> list[MetricsRecord]:
    """Parse a file written by write_metrics_csv."""
    records = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != CSV_HEADER:
            raise MapFormatError(f"unexpected CSV header {reader.fieldnames}")
        for row in reader:
            records.append(
                MetricsRecord(
                    sampling_ratio=float(row["sampling_ratio"]),
                    map_kind=MapKind(row["map_kind"]),
                    seed=int(row["seed"]),
                    ssim=float(row["ssim"]),
                    psnr_db=float(row["psnr_db"]),
                    wall_time_s=float(row["wall_time_s"]),
                    estimated_acquisition_s=float(row["estimated_acquisition_s"]),
                )
            )
    return records
