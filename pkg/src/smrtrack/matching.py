"""Patch similarity scoring and the sliding-window search.

Two metrics share one candidate set and one tie-break rule, so tracker
comparisons differ only in the score:

* SMR: sum of exp(-beta * d) over pixels whose absolute difference d is at
  most the threshold alpha; pixels beyond alpha contribute exactly zero.
  Higher is better and the score is bounded by the pixel count.
* SAD: plain sum of absolute differences; lower is better.

Both are computed as lookup-table sums over the integer difference 0..255,
which is what the kernel backends evaluate per offset.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import DimensionError, OutOfBoundsError
from .imaging import BBox, GrayFrame

METRIC_SMR = "smr"
METRIC_SAD = "sad"
METRICS = (METRIC_SMR, METRIC_SAD)


@dataclass(frozen=True)
class Template:
    """The current appearance model: a patch plus where it came from."""

    patch: GrayFrame
    source_frame_index: int = 0


@dataclass(frozen=True, eq=False)
class ScoreMap:
    """Similarity scores over the offset neighborhood of one search.

    ``scores`` is (2*radius+1, 2*radius+1), rows indexed by vertical offset
    h2 + radius, columns by horizontal offset h1 + radius; flattened
    row-major it enumerates offsets (h1, h2) in [-radius, radius]^2.
    """

    center: BBox
    radius: int
    scores: np.ndarray
    best_offset: tuple[int, int]
    best_score: float

    def score_at(self, h1: int, h2: int) -> float:
        if abs(h1) > self.radius or abs(h2) > self.radius:
            raise IndexError(f"offset ({h1}, {h2}) outside radius {self.radius}")
        return float(self.scores[h2 + self.radius, h1 + self.radius])


def _require_same_shape(patch: GrayFrame, template: Template) -> None:
    tp = template.patch
    if (patch.width, patch.height) != (tp.width, tp.height):
        raise DimensionError(
            f"patch is {patch.width}x{patch.height}, template is {tp.width}x{tp.height}"
        )


def smr_lut(alpha: float, beta: float = 1.0) -> np.ndarray:
    """Score contribution per absolute difference d: exp(-beta*d) for d <= alpha, else 0."""
    if alpha < 0:
        raise ValueError(f"alpha must be non-negative, got {alpha}")
    if beta <= 0:
        raise ValueError(f"beta must be positive, got {beta}")
    d = np.arange(256, dtype=np.float64)
    lut = np.exp(-beta * d)
    lut[d > alpha] = 0.0
    return lut


def sad_lut() -> np.ndarray:
    """Contribution per absolute difference is the difference itself."""
    return np.arange(256, dtype=np.float64)


def smr_score(patch: GrayFrame, template: Template, alpha: float, beta: float = 1.0) -> float:
    """Similarity matching ratio of a patch against the template."""
    _require_same_shape(patch, template)
    d = np.abs(patch.pixels.astype(np.int16) - template.patch.pixels.astype(np.int16))
    return float(smr_lut(alpha, beta)[d].sum())


def sad_score(patch: GrayFrame, template: Template) -> int:
    """Sum of absolute differences between patch and template."""
    _require_same_shape(patch, template)
    d = np.abs(patch.pixels.astype(np.int16) - template.patch.pixels.astype(np.int16))
    return int(d.sum())


def dynamic_alpha(
    old_template: Template,
    new_template: Template,
    k: float,
    alpha_min: float = 1.0,
) -> float:
    """Next-frame threshold: k times the largest pixel change between
    consecutive templates, floored at alpha_min.

    The floor keeps an exact-repeat frame from collapsing the threshold to
    zero, which would reject every pixel under any later noise.
    """
    if k <= 0:
        raise ValueError(f"k must be positive, got {k}")
    _require_same_shape(new_template.patch, old_template)
    a = old_template.patch.pixels.astype(np.int16)
    b = new_template.patch.pixels.astype(np.int16)
    max_diff = int(np.abs(a - b).max())
    return max(k * max_diff, alpha_min)


def diff_map(patch: GrayFrame, template: Template) -> GrayFrame:
    """Per-pixel absolute difference as an image; dark means a close match."""
    _require_same_shape(patch, template)
    d = np.abs(patch.pixels.astype(np.int16) - template.patch.pixels.astype(np.int16))
    return GrayFrame(d.astype(np.uint8))


def diff_histogram(map_: GrayFrame, bin_width: int) -> list[tuple[int, int]]:
    """Counts of map pixels per bin [b, b + bin_width), bins covering [0, 255].

    Returns (bin lower bound, count) pairs; counts sum to the pixel count.
    """
    if bin_width < 1:
        raise ValueError(f"bin_width must be at least 1, got {bin_width}")
    n_bins = -(-256 // bin_width)
    idx = map_.pixels.astype(np.int64) // bin_width
    counts = np.bincount(idx.ravel(), minlength=n_bins)
    return [(i * bin_width, int(counts[i])) for i in range(n_bins)]


def _select_best(scores: np.ndarray, radius: int, maximize: bool) -> tuple[tuple[int, int], float]:
    """Deterministic argbest: ties go to the smallest displacement
    h1^2 + h2^2, then to row-major offset order."""
    flat = scores.ravel()
    best = flat.max() if maximize else flat.min()
    ties = np.flatnonzero(flat == best)
    side = 2 * radius + 1
    h2 = ties // side - radius
    h1 = ties % side - radius
    winner = ties[np.argmin(h1 * h1 + h2 * h2)]  # argmin keeps the first, i.e. row-major, tie
    return (int(winner % side) - radius, int(winner // side) - radius), float(best)


def search(
    frame: GrayFrame,
    template: Template,
    prev_pos: BBox,
    radius: int,
    alpha: float,
    metric: str = METRIC_SMR,
    beta: float = 1.0,
    threads: int | None = None,
) -> ScoreMap:
    """Score every candidate box within ``radius`` of the previous position.

    The best offset maximizes the SMR score or minimizes the SAD distance.
    Every candidate must lie inside the frame; callers pad first when the
    target may overhang, so a bounds failure here signals misconfiguration.
    """
    if radius < 0:
        raise ValueError(f"radius must be non-negative, got {radius}")
    if metric not in METRICS:
        raise ValueError(f"unknown metric {metric!r}, expected one of {METRICS}")
    tp = template.patch
    if prev_pos.w != tp.width or prev_pos.h != tp.height:
        raise DimensionError(
            f"search box is {prev_pos.w}x{prev_pos.h}, template is {tp.width}x{tp.height}"
        )
    if prev_pos.x - radius < 0:
        raise OutOfBoundsError("left", f"candidate window reaches x={prev_pos.x - radius} < 0; pad the frame first")
    if prev_pos.y - radius < 0:
        raise OutOfBoundsError("top", f"candidate window reaches y={prev_pos.y - radius} < 0; pad the frame first")
    if prev_pos.right + radius > frame.width:
        raise OutOfBoundsError(
            "right",
            f"candidate window reaches x={prev_pos.right + radius} > width {frame.width}; pad the frame first",
        )
    if prev_pos.bottom + radius > frame.height:
        raise OutOfBoundsError(
            "bottom",
            f"candidate window reaches y={prev_pos.bottom + radius} > height {frame.height}; pad the frame first",
        )
    lut = smr_lut(alpha, beta) if metric == METRIC_SMR else sad_lut()
    scores = kernels.compute_score_map(
        frame.pixels, tp.pixels, prev_pos.x, prev_pos.y, radius, lut, threads=threads
    )
    scores.setflags(write=False)
    best_offset, best_score = _select_best(scores, radius, maximize=metric == METRIC_SMR)
    return ScoreMap(
        center=prev_pos,
        radius=radius,
        scores=scores,
        best_offset=best_offset,
        best_score=best_score,
    )
