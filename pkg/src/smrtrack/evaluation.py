"""Ground-truth comparison: IoU, correctly-tracked counts, comparison tables.

A frame counts as correctly tracked when ground truth has a box there and
the detection overlaps it with IoU at or above the threshold (0.5 by
default; the criterion in use is always recorded in the report).  Frames
whose truth is absent, meaning the target was fully occluded or out of
view, are excluded from the evaluation entirely.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Optional, Sequence

from .errors import FormatError
from .imaging import BBox
from .tracker import TrackResult

TRUTH_HEADER = ("frame_index", "x", "y", "w", "h")


@dataclass(frozen=True)
class GroundTruth:
    """Per-frame annotations: a box, or None while the target is not visible."""

    entries: tuple[tuple[int, Optional[BBox]], ...]

    def __post_init__(self):
        indices = [i for i, _ in self.entries]
        if any(b >= a for a, b in zip(indices[1:], indices)):
            raise ValueError("ground-truth frame indices must be strictly increasing")

    @classmethod
    def from_pairs(cls, pairs: Iterable[tuple[int, Optional[BBox]]]) -> "GroundTruth":
        return cls(entries=tuple(pairs))

    def as_dict(self) -> dict[int, Optional[BBox]]:
        return dict(self.entries)


@dataclass(frozen=True)
class EvalReport:
    correctly_tracked: int
    total_evaluated: int
    per_frame_iou: tuple[tuple[int, Optional[float]], ...]
    criterion: str


def iou(a: BBox, b: BBox) -> float:
    """Intersection over union of two boxes; 0 when disjoint, 1 when identical."""
    ix = min(a.right, b.right) - max(a.x, b.x)
    iy = min(a.bottom, b.bottom) - max(a.y, b.y)
    if ix <= 0 or iy <= 0:
        return 0.0
    inter = ix * iy
    return inter / (a.area + b.area - inter)


def evaluate(
    results: Sequence[TrackResult], truth: GroundTruth, iou_threshold: float = 0.5
) -> EvalReport:
    """Count correctly tracked frames over the result sequence.

    Truth must carry an entry (box or absent) for every result frame;
    missing indices are an error listing the offending frames.
    """
    truth_map = truth.as_dict()
    missing = [r.frame_index for r in results if r.frame_index not in truth_map]
    if missing:
        raise ValueError(f"ground truth missing entries for frames {missing}")
    per_frame: list[tuple[int, Optional[float]]] = []
    correct = 0
    evaluated = 0
    for r in results:
        true_box = truth_map[r.frame_index]
        if true_box is None:
            per_frame.append((r.frame_index, None))
            continue
        overlap = iou(r.box, true_box)
        per_frame.append((r.frame_index, overlap))
        evaluated += 1
        if overlap >= iou_threshold:
            correct += 1
    return EvalReport(
        correctly_tracked=correct,
        total_evaluated=evaluated,
        per_frame_iou=tuple(per_frame),
        criterion=f"iou>={iou_threshold:.6f}",
    )


@dataclass(frozen=True)
class ComparisonTable:
    """Correctly-tracked counts, trackers as rows and sequences as columns."""

    trackers: tuple[str, ...]
    sequences: tuple[str, ...]
    cells: dict[tuple[str, str], int]

    def to_csv(self) -> str:
        lines = ["tracker," + ",".join(self.sequences)]
        for tracker in self.trackers:
            row = [tracker] + [
                str(self.cells.get((tracker, seq), "")) for seq in self.sequences
            ]
            lines.append(",".join(row))
        return "\n".join(lines) + "\n"

    def to_text(self) -> str:
        header = ["tracker"] + list(self.sequences)
        rows = [header]
        for tracker in self.trackers:
            rows.append(
                [tracker] + [str(self.cells.get((tracker, seq), "-")) for seq in self.sequences]
            )
        widths = [max(len(r[c]) for r in rows) for c in range(len(header))]
        return "\n".join(
            "  ".join(cell.ljust(w) for cell, w in zip(row, widths)).rstrip() for row in rows
        )


def compare(entries: Sequence[tuple[str, str, EvalReport]]) -> ComparisonTable:
    """Assemble (tracker, sequence, report) triples into one table.

    Row and column order follow first appearance; each cell is the report's
    correctly_tracked count.
    """
    if not entries:
        raise ValueError("compare needs at least one report")
    trackers: list[str] = []
    sequences: list[str] = []
    cells: dict[tuple[str, str], int] = {}
    for tracker, sequence, report in entries:
        if tracker not in trackers:
            trackers.append(tracker)
        if sequence not in sequences:
            sequences.append(sequence)
        cells[(tracker, sequence)] = report.correctly_tracked
    return ComparisonTable(tuple(trackers), tuple(sequences), cells)


def write_truth(path, truth: GroundTruth) -> None:
    """Truth CSV: "frame_index,x,y,w,h", or "frame_index,NaN" while absent."""
    with open(path, "w", newline="") as fh:
        fh.write(",".join(TRUTH_HEADER) + "\n")
        for index, box in truth.entries:
            if box is None:
                fh.write(f"{index},NaN\n")
            else:
                fh.write(f"{index},{box.x},{box.y},{box.w},{box.h}\n")


def read_truth(path) -> GroundTruth:
    """Parse a ground-truth CSV; malformed lines report their line number."""
    entries: list[tuple[int, Optional[BBox]]] = []
    name = Path(path).name
    with open(path, newline="") as fh:
        for number, row in enumerate(csv.reader(fh), start=1):
            if not row:
                continue
            if number == 1 and row[0] == TRUTH_HEADER[0]:
                continue
            try:
                index = int(row[0])
            except ValueError as exc:
                raise FormatError(number, f"{name}:{number}: bad frame index {row[0]!r}") from exc
            if len(row) == 2 and row[1].strip().lower() == "nan":
                entries.append((index, None))
                continue
            if len(row) != 5:
                raise FormatError(
                    number, f"{name}:{number}: expected 'frame,x,y,w,h' or 'frame,NaN', got {len(row)} fields"
                )
            try:
                entries.append((index, BBox(int(row[1]), int(row[2]), int(row[3]), int(row[4]))))
            except ValueError as exc:
                raise FormatError(number, f"{name}:{number}: {exc}") from exc
    try:
        return GroundTruth.from_pairs(entries)
    except ValueError as exc:
        raise FormatError(0, f"{name}: {exc}") from exc


def write_report(path, report: EvalReport) -> None:
    """Per-frame IoU CSV plus a trailing summary comment line."""
    with open(path, "w", newline="") as fh:
        fh.write("frame_index,iou\n")
        for index, overlap in report.per_frame_iou:
            fh.write(f"{index},NaN\n" if overlap is None else f"{index},{overlap:.6f}\n")
        fh.write(
            f"# criterion={report.criterion} correct={report.correctly_tracked}"
            f" evaluated={report.total_evaluated}\n"
        )
