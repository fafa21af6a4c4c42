"""The per-sequence tracking loop.

Each step pads the incoming frame with zeros, searches the offset
neighborhood of the previous position, moves the box to the best offset,
and, when the detection lies fully inside the original frame, refreshes
the template from it and recomputes the dynamic threshold.  Detections
that overhang the frame freeze both template and threshold, which lets
the box legally leave the frame without dragging the appearance model
into the padding.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable

from .errors import ConfigError, DimensionError, FormatError
from .imaging import BBox, GrayFrame, extract_patch, pad_frame
from .matching import METRIC_SMR, METRICS, Template, dynamic_alpha, search

RESULTS_HEADER = ("frame_index", "x", "y", "w", "h", "score", "updated", "alpha")


@dataclass(frozen=True)
class TrackerConfig:
    """Knobs of the tracking loop; defaults follow the reference setup."""

    k: float = 0.25
    search_radius: int = 20
    alpha0: float = 63.75  # 0.25 * 255: the threshold formula at the widest possible difference
    alpha_min: float = 1.0
    beta: float = 1.0
    metric: str = METRIC_SMR

    def __post_init__(self):
        if self.k <= 0:
            raise ConfigError(f"k must be positive, got {self.k}")
        if self.search_radius < 0:
            raise ConfigError(f"search_radius must be non-negative, got {self.search_radius}")
        if self.alpha_min < 0:
            raise ConfigError(f"alpha_min must be non-negative, got {self.alpha_min}")
        if self.alpha0 < self.alpha_min:
            raise ConfigError(
                f"alpha0 ({self.alpha0}) must be at least alpha_min ({self.alpha_min})"
            )
        if self.beta <= 0:
            raise ConfigError(f"beta must be positive, got {self.beta}")
        if self.metric not in METRICS:
            raise ConfigError(f"metric must be one of {METRICS}, got {self.metric!r}")


@dataclass(frozen=True)
class TrackerState:
    """Everything carried from one frame to the next.

    ``position`` lives in padded coordinates; ``frame_size`` pins the
    sequence dimensions so a stray frame of another size is rejected
    instead of silently shifting the coordinate mapping.
    """

    template: Template
    alpha: float
    position: BBox
    update_frozen: bool
    frame_index: int
    frame_size: tuple[int, int]


@dataclass(frozen=True)
class TrackResult:
    """One detection, reported in original (unpadded) frame coordinates."""

    frame_index: int
    box: BBox
    score: float
    updated: bool
    alpha_used: float


def padding_margin(template: Template, config: TrackerConfig) -> int:
    """Margin that keeps every candidate box inside the padded frame even
    when the target leaves the original frame entirely."""
    return config.search_radius + max(template.patch.width, template.patch.height)


def init(first_frame: GrayFrame, init_box: BBox, config: TrackerConfig) -> TrackerState:
    """Start a run: the init box becomes both template and position.

    Raises OutOfBoundsError when the box does not fit inside the frame.
    """
    template = Template(extract_patch(first_frame, init_box), source_frame_index=0)
    margin = padding_margin(template, config)
    return TrackerState(
        template=template,
        alpha=config.alpha0,
        position=init_box.shifted(margin, margin),
        update_frozen=False,
        frame_index=0,
        frame_size=(first_frame.width, first_frame.height),
    )


def step(
    state: TrackerState, frame: GrayFrame, config: TrackerConfig
) -> tuple[TrackerState, TrackResult]:
    """Advance the tracker by one frame."""
    if (frame.width, frame.height) != state.frame_size:
        raise DimensionError(
            f"frame is {frame.width}x{frame.height}, sequence is "
            f"{state.frame_size[0]}x{state.frame_size[1]}"
        )
    margin = padding_margin(state.template, config)
    padded = pad_frame(frame, margin)
    score_map = search(
        padded,
        state.template,
        state.position,
        config.search_radius,
        state.alpha,
        metric=config.metric,
        beta=config.beta,
    )
    h1, h2 = score_map.best_offset
    new_position = state.position.shifted(h1, h2)
    reported = new_position.shifted(-margin, -margin)
    frame_index = state.frame_index + 1

    updated = reported.fits_within(frame.width, frame.height)
    if updated:
        new_patch = extract_patch(padded, new_position)
        new_template = Template(new_patch, source_frame_index=frame_index)
        new_alpha = dynamic_alpha(state.template, new_template, config.k, config.alpha_min)
    else:
        new_template = state.template
        new_alpha = state.alpha

    new_state = TrackerState(
        template=new_template,
        alpha=new_alpha,
        position=new_position,
        update_frozen=not updated,
        frame_index=frame_index,
        frame_size=state.frame_size,
    )
    result = TrackResult(
        frame_index=frame_index,
        box=reported,
        score=score_map.best_score,
        updated=updated,
        alpha_used=state.alpha,
    )
    return new_state, result


def track_sequence(
    frames: Iterable[GrayFrame], init_box: BBox, config: TrackerConfig
) -> list[TrackResult]:
    """Track through an ordered frame sequence; one result per frame after
    the first.  A single-frame sequence yields no results."""
    iterator = iter(frames)
    try:
        first = next(iterator)
    except StopIteration:
        raise ValueError("sequence must contain at least one frame") from None
    state = init(first, init_box, config)
    results: list[TrackResult] = []
    for frame in iterator:
        try:
            state, result = step(state, frame, config)
        except DimensionError as exc:
            raise DimensionError(f"frame {state.frame_index + 1}: {exc}") from exc
        results.append(result)
    return results


def write_results(path, results: Iterable[TrackResult]) -> None:
    """Results CSV: one line per tracked frame, floats at fixed 6 decimals."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(RESULTS_HEADER)
        for r in results:
            writer.writerow(
                (
                    r.frame_index,
                    r.box.x,
                    r.box.y,
                    r.box.w,
                    r.box.h,
                    f"{r.score:.6f}",
                    int(r.updated),
                    f"{r.alpha_used:.6f}",
                )
            )


def read_results(path) -> list[TrackResult]:
    """Parse a results CSV back into TrackResult records."""
    results: list[TrackResult] = []
    with open(path, newline="") as fh:
        for number, row in enumerate(csv.reader(fh), start=1):
            if not row:
                continue
            if number == 1 and row[0] == RESULTS_HEADER[0]:
                continue
            if len(row) != len(RESULTS_HEADER):
                raise FormatError(
                    number, f"{Path(path).name}:{number}: expected {len(RESULTS_HEADER)} fields, got {len(row)}"
                )
            try:
                results.append(
                    TrackResult(
                        frame_index=int(row[0]),
                        box=BBox(int(row[1]), int(row[2]), int(row[3]), int(row[4])),
                        score=float(row[5]),
                        updated=bool(int(row[6])),
                        alpha_used=float(row[7]),
                    )
                )
            except ValueError as exc:
                raise FormatError(number, f"{Path(path).name}:{number}: {exc}") from exc
    return results
