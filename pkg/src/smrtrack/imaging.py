"""Grayscale frames, bounding boxes, and the pixel plumbing around them.

Frames are 8-bit single-channel and immutable once built.  Decoding covers
binary PGM (P5) and 8-bit PNG; the only writer is the symmetric PGM encoder,
so written frames round-trip bit-exactly.  Coordinates are top-left anchored:
x grows rightward, y downward.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DecodeError, DimensionError, OutOfBoundsError

# BT.601 luma weights, applied with round-half-up so conversion is
# bit-reproducible across platforms.
GRAY_WEIGHTS = (0.299, 0.587, 0.114)

FRAME_SUFFIXES = (".pgm", ".png")


class GrayFrame:
    """An immutable 8-bit grayscale image.

    Wraps a read-only ``(height, width)`` uint8 array.  Construction
    validates that all intensities are integers in [0, 255] and that both
    dimensions are at least 1.
    """

    __slots__ = ("_pixels",)

    def __init__(self, pixels):
        arr = np.asarray(pixels)
        if arr.ndim != 2:
            raise ValueError(f"frame data must be 2-D, got {arr.ndim}-D")
        if arr.shape[0] < 1 or arr.shape[1] < 1:
            raise ValueError(f"frame dimensions must be positive, got {arr.shape[1]}x{arr.shape[0]}")
        if arr.dtype.kind not in "iu":
            raise ValueError(f"intensities must be integers, got dtype {arr.dtype}")
        if arr.dtype != np.uint8:
            lo, hi = int(arr.min()), int(arr.max())
            if lo < 0 or hi > 255:
                raise ValueError(f"intensity {lo if lo < 0 else hi} outside [0, 255]")
        arr = arr.astype(np.uint8)  # always copies, so the frame owns its data
        arr.setflags(write=False)
        self._pixels = arr

    @property
    def pixels(self) -> np.ndarray:
        """Read-only (height, width) uint8 array."""
        return self._pixels

    @property
    def width(self) -> int:
        return self._pixels.shape[1]

    @property
    def height(self) -> int:
        return self._pixels.shape[0]

    def __eq__(self, other) -> bool:
        if not isinstance(other, GrayFrame):
            return NotImplemented
        return self._pixels.shape == other._pixels.shape and bool(
            np.array_equal(self._pixels, other._pixels)
        )

    def __repr__(self) -> str:
        return f"GrayFrame({self.width}x{self.height})"


@dataclass(frozen=True)
class BBox:
    """Integer rectangle anchored at its top-left corner.

    Coordinates may be negative or exceed frame bounds when the box lives in
    padded coordinates or overhangs the frame edge; width and height are
    always at least 1.
    """

    x: int
    y: int
    w: int
    h: int

    def __post_init__(self):
        if self.w < 1 or self.h < 1:
            raise ValueError(f"box size must be positive, got {self.w}x{self.h}")

    @property
    def right(self) -> int:
        return self.x + self.w

    @property
    def bottom(self) -> int:
        return self.y + self.h

    @property
    def area(self) -> int:
        return self.w * self.h

    def shifted(self, dx: int, dy: int) -> "BBox":
        return BBox(self.x + dx, self.y + dy, self.w, self.h)

    def fits_within(self, width: int, height: int) -> bool:
        """True when the box lies entirely inside a width x height frame."""
        return self.x >= 0 and self.y >= 0 and self.right <= width and self.bottom <= height


def to_grayscale(r: int, g: int, b: int) -> int:
    """BT.601 luma of an RGB triple, rounded half-up and clamped to [0, 255]."""
    for name, v in (("r", r), ("g", g), ("b", b)):
        if not 0 <= v <= 255:
            raise ValueError(f"channel {name}={v} outside [0, 255]")
    luma = GRAY_WEIGHTS[0] * r + GRAY_WEIGHTS[1] * g + GRAY_WEIGHTS[2] * b
    return min(255, max(0, math.floor(luma + 0.5)))


def decode_pgm(data: bytes) -> GrayFrame:
    """Decode a binary PGM (magic P5, maxval at most 255).

    Header whitespace is flexible and ``#`` comments are skipped, per the
    PNM convention.  Raises DecodeError naming the offending field.
    """
    if not data.startswith(b"P5"):
        raise DecodeError("magic", "not a binary PGM: expected magic 'P5'")
    pos = 2
    fields = []
    names = ("width", "height", "maxval")
    while len(fields) < 3:
        name = names[len(fields)]
        while pos < len(data):
            c = data[pos : pos + 1]
            if c == b"#":
                nl = data.find(b"\n", pos)
                pos = len(data) if nl < 0 else nl + 1
            elif c.isspace():
                pos += 1
            else:
                break
        start = pos
        while pos < len(data) and data[pos : pos + 1].isdigit():
            pos += 1
        if start == pos:
            raise DecodeError(name, f"malformed header: missing {name}")
        fields.append(int(data[start:pos]))
    width, height, maxval = fields
    if width < 1:
        raise DecodeError("width", f"width must be positive, got {width}")
    if height < 1:
        raise DecodeError("height", f"height must be positive, got {height}")
    if not 1 <= maxval <= 255:
        raise DecodeError("maxval", f"maxval {maxval} outside supported range 1..255")
    if pos >= len(data) or not data[pos : pos + 1].isspace():
        raise DecodeError("payload", "missing whitespace separator before payload")
    pos += 1
    expected = width * height
    payload = data[pos : pos + expected]
    if len(payload) < expected:
        raise DecodeError(
            "payload", f"truncated payload: expected {expected} bytes, got {len(payload)}"
        )
    arr = np.frombuffer(payload, dtype=np.uint8).reshape(height, width)
    return GrayFrame(arr)


def encode_pgm(frame: GrayFrame) -> bytes:
    """Binary PGM writer symmetric to decode_pgm: ``P5\\n<w> <h>\\n255\\n`` + payload."""
    header = f"P5\n{frame.width} {frame.height}\n255\n".encode("ascii")
    return header + frame.pixels.tobytes()


def decode_png(data: bytes) -> GrayFrame:
    """Decode an 8-bit grayscale or RGB PNG.

    RGB inputs go through the BT.601 conversion; every other mode (palette,
    alpha, 16-bit) is rejected rather than silently rescaled.
    """
    from PIL import Image

    try:
        img = Image.open(io.BytesIO(data))
        img.load()
    except Exception as exc:
        raise DecodeError("stream", f"corrupt or unreadable PNG stream: {exc}") from exc
    if img.mode == "L":
        return GrayFrame(np.asarray(img))
    if img.mode == "RGB":
        rgb = np.asarray(img).astype(np.float64)
        luma = (
            GRAY_WEIGHTS[0] * rgb[..., 0]
            + GRAY_WEIGHTS[1] * rgb[..., 1]
            + GRAY_WEIGHTS[2] * rgb[..., 2]
        )
        vals = np.clip(np.floor(luma + 0.5), 0, 255).astype(np.uint8)
        return GrayFrame(vals)
    raise DecodeError("mode", f"unsupported PNG mode {img.mode!r}: expected 8-bit grayscale or RGB")


def pad_frame(frame: GrayFrame, margin: int) -> GrayFrame:
    """Zero-pad a frame by ``margin`` pixels on every side.

    Input pixel (x, y) lives at (x + margin, y + margin) in the result.
    """
    if margin < 0:
        raise ValueError(f"margin must be non-negative, got {margin}")
    if margin == 0:
        return frame
    return GrayFrame(np.pad(frame.pixels, margin))


def extract_patch(frame: GrayFrame, box: BBox) -> GrayFrame:
    """Copy the pixels under ``box``; the box must lie fully inside the frame."""
    if box.x < 0:
        raise OutOfBoundsError("left", f"box left edge {box.x} < 0")
    if box.y < 0:
        raise OutOfBoundsError("top", f"box top edge {box.y} < 0")
    if box.right > frame.width:
        raise OutOfBoundsError("right", f"box right edge {box.right} > frame width {frame.width}")
    if box.bottom > frame.height:
        raise OutOfBoundsError(
            "bottom", f"box bottom edge {box.bottom} > frame height {frame.height}"
        )
    return GrayFrame(frame.pixels[box.y : box.bottom, box.x : box.right])


def decode_file(path) -> GrayFrame:
    """Decode one frame file, dispatching on the .pgm / .png suffix."""
    path = Path(path)
    suffix = path.suffix.lower()
    if suffix == ".pgm":
        return decode_pgm(path.read_bytes())
    if suffix == ".png":
        return decode_png(path.read_bytes())
    raise ValueError(f"unsupported frame suffix {path.suffix!r} (expected .pgm or .png)")


def load_sequence(directory) -> list[GrayFrame]:
    """Load every numbered frame in a directory, lexicographic name order.

    All frames must share dimensions; mixed sizes are rejected.  Decode
    failures are re-raised with the frame position and file name attached.
    """
    root = Path(directory)
    if not root.is_dir():
        raise FileNotFoundError(f"no such input directory: {root}")
    paths = sorted(p for p in root.iterdir() if p.suffix.lower() in FRAME_SUFFIXES)
    if not paths:
        raise FileNotFoundError(f"no .pgm or .png frames in {root}")
    frames: list[GrayFrame] = []
    for position, path in enumerate(paths):
        try:
            frame = decode_file(path)
        except DecodeError as exc:
            raise DecodeError(exc.field, f"frame {position} ({path.name}): {exc}") from exc
        if frames and (frame.width, frame.height) != (frames[0].width, frames[0].height):
            raise DimensionError(
                f"frame {position} ({path.name}) is {frame.width}x{frame.height}, "
                f"sequence started at {frames[0].width}x{frames[0].height}"
            )
        frames.append(frame)
    return frames
